//! Straight-line reference implementations, written from the definitions
//! without sharing code with the library.

use relgnn::graph::Triple;
use relgnn::model::ModelParameters;

pub fn leaky(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `x · M` for a row vector and a row-major `rows × cols` matrix.
pub fn vec_mat(x: &[f64], m: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (i, xi) in x.iter().enumerate() {
        for j in 0..cols {
            out[j] += xi * m[i * cols + j];
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `W_r = Σ_b c[r, b] V_b`, rebuilt from the raw arrays.
pub fn relation_matrix(p: &ModelParameters, t: usize, r: usize) -> Vec<f64> {
    let d = p.config.hidden;
    let slots = &p.layout.layers[t];
    let bases = &p.arrays[slots.bases];
    let coeffs = &p.arrays[slots.coeffs];
    let mut w = vec![0.0; d * d];
    for b in 0..p.config.bases {
        for (k, wk) in w.iter_mut().enumerate() {
            *wk += coeffs.data()[r * p.config.bases + b] * bases.data()[b * d * d + k];
        }
    }
    w
}

pub struct LayerOracle {
    pub states: Vec<Vec<f64>>,
    /// Per head, per edge of `edges`.
    pub logits: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

/// One propagation layer by explicit loops over nodes, heads and incoming
/// edges. `edges` fixes the output order of logits and weights.
pub fn layer(p: &ModelParameters, t: usize, states: &[Vec<f64>], edges: &[Triple]) -> LayerOracle {
    let d = p.config.hidden;
    let slope = p.config.slope;
    let slots = &p.layout.layers[t];
    let w_self = p.arrays[slots.w_self].data();
    let relation = &p.arrays[p.layout.relation];
    let n = states.len();
    let selfs: Vec<Vec<f64>> = states.iter().map(|h| vec_mat(h, w_self, d)).collect();
    let messages: Vec<Vec<f64>> = edges
        .iter()
        .map(|e| vec_mat(&states[e.head], &relation_matrix(p, t, e.rel), d))
        .collect();

    let heads = if p.config.attention { p.config.heads } else { 0 };
    let mut logits = vec![vec![0.0; edges.len()]; heads];
    let mut weights = vec![vec![0.0; edges.len()]; heads];
    for l in 0..heads {
        let a = p.arrays[slots.attention[l]].data();
        for (i, e) in edges.iter().enumerate() {
            let z = dot(&a[..d], &selfs[e.tail]) + dot(&a[d..2 * d], relation.row_slice(e.rel)) + dot(&a[2 * d..], &messages[i]);
            logits[l][i] = leaky(z, slope);
        }
        for v in 0..n {
            let idx: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].tail == v).collect();
            if idx.is_empty() {
                continue;
            }
            let max = idx.iter().map(|&i| logits[l][i]).fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = idx.iter().map(|&i| (logits[l][i] - max).exp()).sum();
            for &i in &idx {
                weights[l][i] = (logits[l][i] - max).exp() / total;
            }
        }
    }

    let mut out = Vec::with_capacity(n);
    for (v, self_term) in selfs.iter().enumerate() {
        let idx: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].tail == v).collect();
        let mut acc = self_term.clone();
        for &i in &idx {
            let alpha = if heads == 0 {
                1.0 / idx.len() as f64
            } else {
                (0..heads).map(|l| weights[l][i]).sum::<f64>() / heads as f64
            };
            for k in 0..d {
                acc[k] += alpha * messages[i][k];
            }
        }
        out.push(acc.into_iter().map(|x| leaky(x, slope)).collect());
    }
    LayerOracle {
        states: out,
        logits,
        weights,
    }
}

/// Attribute embedding of node `v`: `leaky(attr · U_k + b_k)`.
pub fn embed(p: &ModelParameters, k: usize, attr: &[f64]) -> Vec<f64> {
    let d = p.config.hidden;
    let (w, b) = p.layout.encoders[k];
    vec_mat(attr, p.arrays[w].data(), d)
        .into_iter()
        .zip(p.arrays[b].data())
        .map(|(x, bias)| leaky(x + bias, p.config.slope))
        .collect()
}

/// Fusion of one node: per head a two-way softmax between the attribute and
/// last-layer states, weights averaged over heads.
pub fn fuse(p: &ModelParameters, h0: &[f64], last: &[f64]) -> Vec<f64> {
    let slope = p.config.slope;
    let heads = p.layout.fusion.len();
    let mut attr_weight = 0.0;
    for &f in &p.layout.fusion {
        let a = p.arrays[f].data();
        let e0 = leaky(dot(a, h0), slope).exp();
        let el = leaky(dot(a, last), slope).exp();
        attr_weight += e0 / (e0 + el);
    }
    attr_weight /= heads as f64;
    h0.iter()
        .zip(last)
        .map(|(x, y)| attr_weight * x + (1.0 - attr_weight) * y)
        .collect()
}

/// `σ(Σ_k h_i[k] · h_r[k] · h_j[k])`.
pub fn distmult(hi: &[f64], hr: &[f64], hj: &[f64]) -> f64 {
    sigmoid(hi.iter().zip(hr).zip(hj).map(|((a, b), c)| a * b * c).sum())
}

/// AUC by enumerating every positive/negative pair.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Step-wise AP: walk a stable descending sort and average precision at
/// each positive.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let (mut hits, mut total) = (0.0, 0.0);
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1.0;
            total += hits / (rank + 1) as f64;
        }
    }
    total / positives
}

/// F1 from an explicit confusion matrix.
pub fn f1(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

pub fn mrr(ranks: &[usize]) -> f64 {
    ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64
}

pub fn hit_at(ranks: &[usize], k: usize) -> f64 {
    ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}
