//! Attributed heterogeneous multigraph: typed nodes carrying dense attribute
//! vectors, and directed relation-typed edges.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type NodeTypeId = usize;
pub type RelationTypeId = usize;

/// A directed, relation-typed edge `(head, rel, tail)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: NodeId,
    pub rel: RelationTypeId,
    pub tail: NodeId,
}

impl Triple {
    pub const fn new(head: NodeId, rel: RelationTypeId, tail: NodeId) -> Self {
        Triple { head, rel, tail }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    node_types: Vec<NodeTypeId>,
    attributes: Vec<Vec<f64>>,
    type_dims: Vec<usize>,
    num_relations: usize,
    edges: Vec<Triple>,
    edge_set: HashSet<Triple>,
    /// `in_index[v * num_relations + r]` lists the sources of `(·, r, v)`, ascending.
    in_index: Vec<Vec<NodeId>>,
    nodes_by_type: Vec<Vec<NodeId>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Add `(dst, r + |R|, src)` for every edge `(src, r, dst)`.
    pub add_reverse: bool,
    /// Relation count; inferred as `max id + 1` when absent.
    pub num_relations: Option<usize>,
}

impl HeteroGraph {
    /// Builds and validates a graph. `type_dims[k]` is the attribute length
    /// of node type `k`.
    pub fn new(
        type_dims: Vec<usize>,
        node_types: Vec<NodeTypeId>,
        attributes: Vec<Vec<f64>>,
        num_relations: usize,
        edges: Vec<Triple>,
    ) -> Result<Self> {
        if node_types.len() != attributes.len() {
            return Err(Error::Config(format!(
                "{} node types but {} attribute rows",
                node_types.len(),
                attributes.len()
            )));
        }
        let mut nodes_by_type = vec![Vec::new(); type_dims.len()];
        for (v, (&k, attr)) in node_types.iter().zip(&attributes).enumerate() {
            let expected = *type_dims
                .get(k)
                .ok_or_else(|| Error::OutOfRange(format!("node {v} has type {k} of {}", type_dims.len())))?;
            if attr.len() != expected {
                return Err(Error::DimensionMismatch {
                    node: v,
                    node_type: k,
                    expected,
                    got: attr.len(),
                });
            }
            nodes_by_type[k].push(v);
        }
        let n = node_types.len();
        let mut edge_set = HashSet::with_capacity(edges.len());
        let mut in_index = vec![Vec::new(); n * num_relations];
        for (i, e) in edges.iter().enumerate() {
            for node in [e.head, e.tail] {
                if node >= n {
                    return Err(Error::DanglingEndpoint {
                        index: i,
                        node,
                        count: n,
                    });
                }
            }
            if e.rel >= num_relations {
                return Err(Error::OutOfRange(format!(
                    "edge {i} relation {} of {num_relations}",
                    e.rel
                )));
            }
            if !edge_set.insert(*e) {
                return Err(Error::DuplicateTriple(e.head, e.rel, e.tail));
            }
            in_index[e.tail * num_relations + e.rel].push(e.head);
        }
        for list in &mut in_index {
            list.sort_unstable();
        }
        Ok(HeteroGraph {
            node_types,
            attributes,
            type_dims,
            num_relations,
            edges,
            edge_set,
            in_index,
            nodes_by_type,
        })
    }

    /// Same nodes and schema, different edge set.
    pub fn with_edges(&self, edges: Vec<Triple>) -> Result<Self> {
        HeteroGraph::new(
            self.type_dims.clone(),
            self.node_types.clone(),
            self.attributes.clone(),
            self.num_relations,
            edges,
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.node_types.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn num_node_types(&self) -> usize {
        self.type_dims.len()
    }

    pub fn type_dims(&self) -> &[usize] {
        &self.type_dims
    }

    pub fn node_type(&self, v: NodeId) -> NodeTypeId {
        self.node_types[v]
    }

    pub fn node_types(&self) -> &[NodeTypeId] {
        &self.node_types
    }

    pub fn attributes(&self, v: NodeId) -> &[f64] {
        &self.attributes[v]
    }

    pub fn edges(&self) -> &[Triple] {
        &self.edges
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.edge_set.contains(t)
    }

    pub fn edge_set(&self) -> &HashSet<Triple> {
        &self.edge_set
    }

    pub fn nodes_of_type(&self, k: NodeTypeId) -> &[NodeId] {
        &self.nodes_by_type[k]
    }

    /// Sources `u` with `(u, r, v)` in the graph, ascending.
    pub fn in_neighbors(&self, v: NodeId, r: RelationTypeId) -> Result<&[NodeId]> {
        if v >= self.num_nodes() || r >= self.num_relations {
            return Err(Error::OutOfRange(format!(
                "in_neighbors({v}, {r}) with {} nodes, {} relations",
                self.num_nodes(),
                self.num_relations
            )));
        }
        Ok(&self.in_index[v * self.num_relations + r])
    }

    /// Total in-degree of `v` across all relations.
    pub fn in_degree(&self, v: NodeId) -> usize {
        let r = self.num_relations;
        self.in_index[v * r..(v + 1) * r].iter().map(Vec::len).sum()
    }

    /// Rebuilds the incoming index from the edge list and compares.
    pub fn check_index(&self) -> bool {
        let mut rebuilt = vec![Vec::new(); self.in_index.len()];
        for e in &self.edges {
            rebuilt[e.tail * self.num_relations + e.rel].push(e.head);
        }
        for list in &mut rebuilt {
            list.sort_unstable();
        }
        rebuilt == self.in_index
    }

    /// Adds `(tail, r + |R|, head)` for every edge; relation count doubles.
    pub fn with_reverse_relations(&self) -> Result<Self> {
        let r = self.num_relations;
        let mut edges = self.edges.clone();
        edges.extend(self.edges.iter().map(|e| Triple::new(e.tail, e.rel + r, e.head)));
        HeteroGraph::new(
            self.type_dims.clone(),
            self.node_types.clone(),
            self.attributes.clone(),
            2 * r,
            edges,
        )
    }

    pub fn save(&self, nodes_path: &Path, edges_path: &Path) -> Result<()> {
        fs::write(nodes_path, self.nodes_tsv()).map_err(|e| Error::io(nodes_path, e))?;
        fs::write(edges_path, edges_tsv(&self.edges)).map_err(|e| Error::io(edges_path, e))?;
        Ok(())
    }

    pub fn nodes_tsv(&self) -> String {
        let mut out = String::from("node_id\tnode_type_id\tattributes\n");
        for (v, (k, attr)) in self.node_types.iter().zip(&self.attributes).enumerate() {
            let _ = write!(out, "{v}\t{k}\t");
            for (i, a) in attr.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{a}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn edges_tsv(edges: &[Triple]) -> String {
    let mut out = String::from("src_id\trelation_id\tdst_id\n");
    for e in edges {
        let _ = writeln!(out, "{}\t{}\t{}", e.head, e.rel, e.tail);
    }
    out
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parses an edges file (`src <TAB> relation <TAB> dst`, header required).
pub fn read_edges(path: &Path) -> Result<Vec<Triple>> {
    let text = read(path)?;
    let mut lines = text.lines().enumerate();
    if lines.next().is_none() {
        return Err(parse_err(path, 1, "missing header line"));
    }
    let mut edges = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(path, i + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, i + 1, format!("invalid id {s:?}")))
        };
        edges.push(Triple::new(num(fields[0])?, num(fields[1])?, num(fields[2])?));
    }
    Ok(edges)
}

/// Loads a graph from the node and edge TSV files.
pub fn load_graph(nodes_path: &Path, edges_path: &Path, opts: LoadOptions) -> Result<HeteroGraph> {
    let text = read(nodes_path)?;
    let mut lines = text.lines().enumerate();
    if lines.next().is_none() {
        return Err(parse_err(nodes_path, 1, "missing header line"));
    }
    let mut rows: Vec<(usize, usize, Vec<f64>, usize)> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(nodes_path, i + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let id = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| parse_err(nodes_path, i + 1, format!("invalid node id {:?}", fields[0])))?;
        let ty = fields[1]
            .trim()
            .parse::<usize>()
            .map_err(|_| parse_err(nodes_path, i + 1, format!("invalid node type {:?}", fields[1])))?;
        let attrs = if fields[2].trim().is_empty() {
            Vec::new()
        } else {
            fields[2]
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(nodes_path, i + 1, format!("invalid attribute {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?
        };
        rows.push((id, ty, attrs, i + 1));
    }
    rows.sort_by_key(|r| r.0);
    for (expect, row) in rows.iter().enumerate() {
        if row.0 != expect {
            return Err(parse_err(
                nodes_path,
                row.3,
                format!("node ids must be exactly 0..{}, found {}", rows.len(), row.0),
            ));
        }
    }
    let num_types = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let mut type_dims: Vec<Option<usize>> = vec![None; num_types];
    for row in &rows {
        let slot = &mut type_dims[row.1];
        match slot {
            None => *slot = Some(row.2.len()),
            Some(d) if *d != row.2.len() => {
                return Err(Error::DimensionMismatch {
                    node: row.0,
                    node_type: row.1,
                    expected: *d,
                    got: row.2.len(),
                })
            }
            _ => {}
        }
    }
    let type_dims = type_dims.into_iter().map(|d| d.unwrap_or(0)).collect();

    let edges = read_edges(edges_path)?;
    let inferred = edges.iter().map(|e| e.rel + 1).max().unwrap_or(0);
    let num_relations = opts.num_relations.unwrap_or(inferred);
    let (node_types, attributes) = rows.into_iter().map(|r| (r.1, r.2)).unzip();
    let graph = HeteroGraph::new(type_dims, node_types, attributes, num_relations, edges)?;
    if opts.add_reverse {
        graph.with_reverse_relations()
    } else {
        Ok(graph)
    }
}

/// Train / validation / test partition of an edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplits {
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

impl EdgeSplits {
    /// Seeded shuffle, then `train_frac` / `valid_frac` / remainder.
    pub fn split(edges: &[Triple], train_frac: f64, valid_frac: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_frac)
            || !(0.0..=1.0).contains(&valid_frac)
            || train_frac + valid_frac > 1.0 + 1e-12
        {
            return Err(Error::Config(format!(
                "invalid split fractions {train_frac}/{valid_frac}"
            )));
        }
        let mut shuffled = edges.to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = shuffled.len();
        let n_train = (n as f64 * train_frac).round() as usize;
        let n_valid = ((n as f64 * valid_frac).round() as usize).min(n - n_train);
        let test = shuffled.split_off(n_train + n_valid);
        let valid = shuffled.split_off(n_train);
        Ok(EdgeSplits {
            train: shuffled,
            valid,
            test,
        })
    }

    pub fn all(&self) -> HashSet<Triple> {
        self.train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .copied()
            .collect()
    }
}
