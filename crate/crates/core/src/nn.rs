//! Minimal dense linear algebra and optimizer plumbing for the small
//! networks in this crate (surrogates and the classical head).
//!
//! Everything is `f64` and row-major. Sizes stay tiny (hidden width 128,
//! node counts in the low hundreds), so naive triple loops are fine.

use rand::RngExt;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Glorot-uniform initialization.
    pub fn glorot(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Self {
        let s = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.random_range(-s..s)).collect();
        Mat { rows, cols, data }
    }

    /// Uniform(-s, s) initialization.
    pub fn uniform(rows: usize, cols: usize, s: f64, rng: &mut ChaCha12Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.random_range(-s..s)).collect();
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// C = A * B
    pub fn matmul(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows, "matmul shape");
        let mut out = Mat::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                let brow = b.row(k);
                let orow = out.row_mut(i);
                for j in 0..b.cols {
                    orow[j] += a * brow[j];
                }
            }
        }
        out
    }

    /// C = A^T * B
    pub fn t_matmul(&self, b: &Mat) -> Mat {
        assert_eq!(self.rows, b.rows, "t_matmul shape");
        let mut out = Mat::zeros(self.cols, b.cols);
        for r in 0..self.rows {
            let arow = self.row(r);
            let brow = b.row(r);
            for i in 0..self.cols {
                let a = arow[i];
                if a == 0.0 {
                    continue;
                }
                let orow = out.row_mut(i);
                for j in 0..b.cols {
                    orow[j] += a * brow[j];
                }
            }
        }
        out
    }

    /// C = A * B^T
    pub fn matmul_bt(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.cols, "matmul_bt shape");
        let mut out = Mat::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let arow = self.row(i);
            for j in 0..b.rows {
                let brow = b.row(j);
                let mut s = 0.0;
                for k in 0..self.cols {
                    s += arow[k] * brow[k];
                }
                *out.at_mut(i, j) = s;
            }
        }
        out
    }

    /// Add a bias row vector to every row.
    pub fn add_bias(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols, "bias length");
        for r in 0..self.rows {
            let row = self.row_mut(r);
            for (x, b) in row.iter_mut().zip(bias) {
                *x += b;
            }
        }
    }

    pub fn relu(&self) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x.max(0.0)).collect(),
        }
    }

    /// Zero entries of `self` where `pre` was non-positive (ReLU backward).
    pub fn mask_relu(&mut self, pre: &Mat) {
        for (g, &z) in self.data.iter_mut().zip(&pre.data) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
    }

    /// Column sums (bias gradient).
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, &x) in out.iter_mut().zip(self.row(r)) {
                *o += x;
            }
        }
        out
    }

    pub fn hadamard(&mut self, other: &Mat) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a *= b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn add(&mut self, other: &Mat) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Inverted dropout mask: entries are 0 with probability `p`, else 1/(1-p).
pub fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut ChaCha12Rng) -> Mat {
    assert!((0.0..1.0).contains(&p), "dropout rate in [0,1)");
    if p == 0.0 {
        return Mat { rows, cols, data: vec![1.0; rows * cols] };
    }
    let keep = 1.0 - p;
    let scale = 1.0 / keep;
    let data = (0..rows * cols)
        .map(|_| if rng.random_bool(keep) { scale } else { 0.0 })
        .collect();
    Mat { rows, cols, data }
}

/// Adam state over a flat parameter view. Fresh state per training phase.
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One update step: `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Numerically stable softmax over a two-logit row.
pub fn softmax2(l0: f64, l1: f64) -> (f64, f64) {
    let m = l0.max(l1);
    let e0 = (l0 - m).exp();
    let e1 = (l1 - m).exp();
    let z = e0 + e1;
    (e0 / z, e1 / z)
}
