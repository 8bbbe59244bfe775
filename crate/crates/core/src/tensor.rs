//! Dense row-major 64-bit matrices.
//!
//! A [`Tensor`] is at most two-dimensional; vectors are stored as `n × 1`
//! columns unless an operation says otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "from_vec",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(Tensor { rows, cols, data })
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        Tensor {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// Row vector from a slice.
    pub fn row(values: &[f64]) -> Self {
        Tensor {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Glorot-uniform initialisation: `U(-a, a)` with `a = sqrt(6 / (rows + cols))`.
    pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Tensor { rows, cols, data }
    }

    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
        Tensor { rows, cols, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row_slice(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_slice_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// The single value of a `1 × 1` tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn reshape(mut self, rows: usize, cols: usize) -> Result<Self> {
        if rows * cols != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                left: self.shape(),
                right: (rows, cols),
            });
        }
        self.rows = rows;
        self.cols = cols;
        Ok(self)
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Tensor::zeros(self.rows, other.cols);
        matmul_into(self, other, &mut out);
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// `out += a · b`, shapes already checked.
pub(crate) fn matmul_into(a: &Tensor, b: &Tensor, out: &mut Tensor) {
    let (n, k) = a.shape();
    let m = b.cols;
    for i in 0..n {
        let arow = &a.data[i * k..(i + 1) * k];
        let orow = &mut out.data[i * m..(i + 1) * m];
        for (p, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[p * m..(p + 1) * m];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out += aᵀ · b` without materialising the transpose.
pub(crate) fn matmul_tn_into(a: &Tensor, b: &Tensor, out: &mut Tensor) {
    let (n, k) = a.shape();
    let m = b.cols;
    for i in 0..n {
        let arow = &a.data[i * k..(i + 1) * k];
        let brow = &b.data[i * m..(i + 1) * m];
        for (p, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out.data[p * m..(p + 1) * m];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out += a · bᵀ`.
pub(crate) fn matmul_nt_into(a: &Tensor, b: &Tensor, out: &mut Tensor) {
    let (n, k) = a.shape();
    let m = b.rows;
    for i in 0..n {
        let arow = &a.data[i * k..(i + 1) * k];
        for j in 0..m {
            let brow = &b.data[j * k..(j + 1) * k];
            let dot: f64 = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
            out.data[i * m + j] += dot;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let x = Tensor::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(Tensor::identity(3).matmul(&x).unwrap(), x);
    }

    #[test]
    fn matmul_shape_error_reports_both_shapes() {
        let a = Tensor::zeros(2, 3);
        let b = Tensor::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("(2, 3)"), "{err}");
    }

    #[test]
    fn transposed_products_agree() {
        let a = Tensor::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 1.0, 2.0]).unwrap();
        let b = Tensor::from_vec(2, 2, vec![0.3, 1.0, -1.0, 2.0]).unwrap();
        let mut tn = Tensor::zeros(3, 2);
        matmul_tn_into(&a, &b, &mut tn);
        assert!(tn.max_abs_diff(&a.transpose().matmul(&b).unwrap()) < 1e-15);
        let c = Tensor::from_vec(4, 3, (0..12).map(|v| v as f64 * 0.1).collect()).unwrap();
        let mut nt = Tensor::zeros(2, 4);
        matmul_nt_into(&a, &c, &mut nt);
        assert!(nt.max_abs_diff(&a.matmul(&c.transpose()).unwrap()) < 1e-15);
    }
}
