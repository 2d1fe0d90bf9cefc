//! Flat-feature MLP surrogate (13 -> 128 -> 128 -> 1) for the no-graph
//! baseline. Mirrors the GIN head: dropout 0.3 after each hidden block,
//! MC-dropout inference, Adam on mean squared error. Inputs are
//! standardized internally with statistics refitted at every training call.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{stats_from_samples, PredictionStats, GIN_DROPOUT, GIN_HIDDEN};
use crate::error::{Error, Result};
use crate::nn::{dropout_mask, Adam, Mat};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpSurrogate {
    pub d_in: usize,
    pub hidden: usize,
    pub dropout_rate: f64,
    w1: Mat,
    b1: Vec<f64>,
    w2: Mat,
    b2: Vec<f64>,
    head_w: Vec<f64>,
    head_b: f64,
    /// Per-feature (mean, std) fitted on the last training set.
    norm: Option<Vec<(f64, f64)>>,
}

impl MlpSurrogate {
    pub fn new(d_in: usize, rng: &mut ChaCha12Rng) -> Self {
        Self::with_dims(d_in, GIN_HIDDEN, GIN_DROPOUT, rng)
    }

    pub fn with_dims(d_in: usize, hidden: usize, dropout_rate: f64, rng: &mut ChaCha12Rng) -> Self {
        use rand::RngExt;
        let s = (6.0 / (hidden + 1) as f64).sqrt();
        MlpSurrogate {
            d_in,
            hidden,
            dropout_rate,
            w1: Mat::glorot(d_in, hidden, rng),
            b1: vec![0.0; hidden],
            w2: Mat::glorot(hidden, hidden, rng),
            b2: vec![0.0; hidden],
            head_w: (0..hidden).map(|_| rng.random_range(-s..s)).collect(),
            head_b: 0.0,
            norm: None,
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.data.len()
            + self.b1.len()
            + self.w2.data.len()
            + self.b2.len()
            + self.head_w.len()
            + 1
    }

    fn normalize(&self, x: &[f64]) -> Vec<f64> {
        match &self.norm {
            Some(stats) => x
                .iter()
                .zip(stats)
                .map(|(v, (mean, std))| (v - mean) / std)
                .collect(),
            None => x.to_vec(),
        }
    }

    fn forward_with(
        &self,
        x_norm: &[f64],
        dropout: bool,
        rng: &mut ChaCha12Rng,
    ) -> (f64, Caches) {
        let p = if dropout { self.dropout_rate } else { 0.0 };
        let mut z1 = vec![0.0; self.hidden];
        for (j, z) in z1.iter_mut().enumerate() {
            let mut s = self.b1[j];
            for (i, &xi) in x_norm.iter().enumerate() {
                s += xi * self.w1.at(i, j);
            }
            *z = s;
        }
        let r1: Vec<f64> = z1.iter().map(|&v| v.max(0.0)).collect();
        let m1 = dropout_mask(1, self.hidden, p, rng);
        let d1: Vec<f64> = r1.iter().zip(&m1.data).map(|(a, b)| a * b).collect();

        let mut z2 = vec![0.0; self.hidden];
        for (j, z) in z2.iter_mut().enumerate() {
            let mut s = self.b2[j];
            for (i, &di) in d1.iter().enumerate() {
                s += di * self.w2.at(i, j);
            }
            *z = s;
        }
        let r2: Vec<f64> = z2.iter().map(|&v| v.max(0.0)).collect();
        let m2 = dropout_mask(1, self.hidden, p, rng);
        let d2: Vec<f64> = r2.iter().zip(&m2.data).map(|(a, b)| a * b).collect();

        let out = d2.iter().zip(&self.head_w).map(|(a, b)| a * b).sum::<f64>() + self.head_b;
        (out, Caches { z1, d1, z2, d2, m1: m1.data, m2: m2.data })
    }

    /// Refit input statistics and train by Adam on MSE with dropout active.
    pub fn fit(
        &mut self,
        features: &[Vec<f64>],
        targets: &[f64],
        epochs: usize,
        lr: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<Vec<f64>> {
        if features.is_empty() || features.len() != targets.len() {
            return Err(Error::Data("empty or mismatched MLP training set".into()));
        }
        let n = features.len() as f64;
        let mut stats = vec![(0.0, 0.0); self.d_in];
        for (k, stat) in stats.iter_mut().enumerate() {
            let mean = features.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = features.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
            *stat = (mean, var.sqrt().max(1e-8));
        }
        self.norm = Some(stats);
        let xs: Vec<Vec<f64>> = features.iter().map(|r| self.normalize(r)).collect();

        let n_params = self.param_count();
        let mut adam = Adam::new(n_params, lr);
        let mut trace = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            let mut gw1 = Mat::zeros(self.d_in, self.hidden);
            let mut gb1 = vec![0.0; self.hidden];
            let mut gw2 = Mat::zeros(self.hidden, self.hidden);
            let mut gb2 = vec![0.0; self.hidden];
            let mut ghw = vec![0.0; self.hidden];
            let mut ghb = 0.0;
            let mut loss = 0.0;
            for (x, &t) in xs.iter().zip(targets) {
                let (out, c) = self.forward_with(x, true, rng);
                let err = out - t;
                loss += err * err / n;
                let dout = 2.0 * err / n;
                ghb += dout;
                for (g, &d2) in ghw.iter_mut().zip(&c.d2) {
                    *g += dout * d2;
                }
                // dd2 = dout * head_w; dr2 = dd2 * mask2
                let mut dz2 = vec![0.0; self.hidden];
                for j in 0..self.hidden {
                    let dr2 = dout * self.head_w[j] * c.m2[j];
                    dz2[j] = if c.z2[j] > 0.0 { dr2 } else { 0.0 };
                }
                for i in 0..self.hidden {
                    let di = c.d1[i];
                    if di != 0.0 {
                        for j in 0..self.hidden {
                            *gw2.at_mut(i, j) += di * dz2[j];
                        }
                    }
                }
                for (g, &d) in gb2.iter_mut().zip(&dz2) {
                    *g += d;
                }
                let mut dz1 = vec![0.0; self.hidden];
                for i in 0..self.hidden {
                    let mut s = 0.0;
                    for j in 0..self.hidden {
                        s += dz2[j] * self.w2.at(i, j);
                    }
                    let dd1 = s * c.m1[i];
                    dz1[i] = if c.z1[i] > 0.0 { dd1 } else { 0.0 };
                }
                for (i, &xi) in x.iter().enumerate() {
                    if xi != 0.0 {
                        for j in 0..self.hidden {
                            *gw1.at_mut(i, j) += xi * dz1[j];
                        }
                    }
                }
                for (g, &d) in gb1.iter_mut().zip(&dz1) {
                    *g += d;
                }
            }
            // flatten, step, unflatten
            let mut params = Vec::with_capacity(n_params);
            params.extend_from_slice(&self.w1.data);
            params.extend_from_slice(&self.b1);
            params.extend_from_slice(&self.w2.data);
            params.extend_from_slice(&self.b2);
            params.extend_from_slice(&self.head_w);
            params.push(self.head_b);
            let mut grads = Vec::with_capacity(n_params);
            grads.extend_from_slice(&gw1.data);
            grads.extend_from_slice(&gb1);
            grads.extend_from_slice(&gw2.data);
            grads.extend_from_slice(&gb2);
            grads.extend_from_slice(&ghw);
            grads.push(ghb);
            adam.step(&mut params, &grads);
            let mut pos = 0;
            let mut take = |dst: &mut [f64]| {
                dst.copy_from_slice(&params[pos..pos + dst.len()]);
                pos += dst.len();
            };
            take(&mut self.w1.data);
            take(&mut self.b1);
            take(&mut self.w2.data);
            take(&mut self.b2);
            take(&mut self.head_w);
            self.head_b = params[pos];
            trace.push(loss);
        }
        Ok(trace)
    }

    /// MC-dropout prediction mirroring the GIN's sampling scheme.
    pub fn mc_predict(
        &self,
        features: &[f64],
        t_samples: usize,
        rng: &mut ChaCha12Rng,
    ) -> Result<PredictionStats> {
        if t_samples < 2 {
            return Err(Error::Parameter(format!("mc_predict needs T >= 2, got {t_samples}")));
        }
        if features.len() != self.d_in {
            return Err(Error::Dimension(format!(
                "{} features for MLP input width {}",
                features.len(),
                self.d_in
            )));
        }
        let x = self.normalize(features);
        let samples: Vec<f64> =
            (0..t_samples).map(|_| self.forward_with(&x, true, rng).0).collect();
        Ok(stats_from_samples(samples))
    }

    pub fn predict_deterministic(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.d_in {
            return Err(Error::Dimension("MLP input width mismatch".into()));
        }
        let x = self.normalize(features);
        let mut rng = crate::rng::derive_rng(0, "mlp-det", &[]);
        Ok(self.forward_with(&x, false, &mut rng).0)
    }
}

struct Caches {
    z1: Vec<f64>,
    d1: Vec<f64>,
    z2: Vec<f64>,
    d2: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
}
