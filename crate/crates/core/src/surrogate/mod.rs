//! GIN regression surrogate with MC-dropout uncertainty.
//!
//! Two GIN blocks (sum aggregation with fixed epsilon = 0, block MLP
//! Linear -> ReLU -> Linear, hidden width 128), dropout 0.3 after each
//! block, global mean pooling, and a linear head. Trained on mean squared
//! error against observed candidate performance; epistemic uncertainty
//! comes from stochastic forward passes with dropout left on.

pub mod metrics;
pub mod mlp;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CircuitGraph;
use crate::nn::{dropout_mask, Adam, Mat};

pub use metrics::{
    calibrate, diagnostics, kendall_tau, spearman_rho, Diagnostics, UncertaintyCalibration,
};
pub use mlp::MlpSurrogate;

pub const GIN_HIDDEN: usize = 128;
pub const GIN_DROPOUT: f64 = 0.3;

/// Dropout behavior of a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active (training).
    Train,
    /// Dropout active at inference (MC-dropout sampling).
    McInference,
    /// Dropout disabled; repeated calls agree exactly.
    Deterministic,
}

impl Mode {
    fn dropout_active(self) -> bool {
        !matches!(self, Mode::Deterministic)
    }
}

/// Trainable tensors of the two-block GIN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GinParams {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub w3: Mat,
    pub b3: Vec<f64>,
    pub w4: Mat,
    pub b4: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

impl GinParams {
    fn init(d_in: usize, hidden: usize, rng: &mut ChaCha12Rng) -> Self {
        GinParams {
            w1: Mat::glorot(d_in, hidden, rng),
            b1: vec![0.0; hidden],
            w2: Mat::glorot(hidden, hidden, rng),
            b2: vec![0.0; hidden],
            w3: Mat::glorot(hidden, hidden, rng),
            b3: vec![0.0; hidden],
            w4: Mat::glorot(hidden, hidden, rng),
            b4: vec![0.0; hidden],
            head_w: {
                use rand::RngExt;
                let s = (6.0 / (hidden + 1) as f64).sqrt();
                (0..hidden).map(|_| rng.random_range(-s..s)).collect()
            },
            head_b: 0.0,
        }
    }

    fn zeros_like(&self) -> Self {
        GinParams {
            w1: Mat::zeros(self.w1.rows, self.w1.cols),
            b1: vec![0.0; self.b1.len()],
            w2: Mat::zeros(self.w2.rows, self.w2.cols),
            b2: vec![0.0; self.b2.len()],
            w3: Mat::zeros(self.w3.rows, self.w3.cols),
            b3: vec![0.0; self.b3.len()],
            w4: Mat::zeros(self.w4.rows, self.w4.cols),
            b4: vec![0.0; self.b4.len()],
            head_w: vec![0.0; self.head_w.len()],
            head_b: 0.0,
        }
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count());
        out.extend_from_slice(&self.w1.data);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2.data);
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.w3.data);
        out.extend_from_slice(&self.b3);
        out.extend_from_slice(&self.w4.data);
        out.extend_from_slice(&self.b4);
        out.extend_from_slice(&self.head_w);
        out.push(self.head_b);
        out
    }

    fn unflatten(&mut self, flat: &[f64]) {
        let mut pos = 0usize;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[pos..pos + dst.len()]);
            pos += dst.len();
        };
        take(&mut self.w1.data);
        take(&mut self.b1);
        take(&mut self.w2.data);
        take(&mut self.b2);
        take(&mut self.w3.data);
        take(&mut self.b3);
        take(&mut self.w4.data);
        take(&mut self.b4);
        take(&mut self.head_w);
        self.head_b = flat[pos];
    }

    fn count(&self) -> usize {
        self.w1.data.len()
            + self.b1.len()
            + self.w2.data.len()
            + self.b2.len()
            + self.w3.data.len()
            + self.b3.len()
            + self.w4.data.len()
            + self.b4.len()
            + self.head_w.len()
            + 1
    }
}

/// The surrogate model for `d_in = Q + 10` node features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GinModel {
    pub d_in: usize,
    pub hidden: usize,
    pub dropout_rate: f64,
    pub params: GinParams,
}

/// MC-dropout summary: sample mean and unbiased standard deviation of the
/// raw stochastic predictions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionStats {
    pub mu: f64,
    pub sigma: f64,
    pub samples: Vec<f64>,
}

struct ForwardCache {
    agg1: Mat,
    z1: Mat,
    r1: Mat,
    mask1: Mat,
    agg2: Mat,
    z2: Mat,
    r2: Mat,
    mask2: Mat,
    pooled: Vec<f64>,
    out: f64,
}

impl GinModel {
    /// Fresh model for `q` qubits (input width q + 10).
    pub fn new(q: usize, rng: &mut ChaCha12Rng) -> Self {
        Self::with_dims(q + 10, GIN_HIDDEN, GIN_DROPOUT, rng)
    }

    pub fn with_dims(d_in: usize, hidden: usize, dropout_rate: f64, rng: &mut ChaCha12Rng) -> Self {
        GinModel { d_in, hidden, dropout_rate, params: GinParams::init(d_in, hidden, rng) }
    }

    /// Exact count of trainable scalars (biases included; the aggregation
    /// epsilon is fixed at zero and not counted).
    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    /// `(1 + eps) h_v + sum of in-neighbors` with eps = 0.
    fn aggregate(&self, x: &Mat, graph: &CircuitGraph) -> Mat {
        let mut out = x.clone();
        for &(src, dst) in &graph.edges {
            let (s, d) = (src as usize, dst as usize);
            for k in 0..x.cols {
                let v = x.at(s, k);
                *out.at_mut(d, k) += v;
            }
        }
        out
    }

    /// Transpose of [`Self::aggregate`], for backprop.
    fn aggregate_back(&self, grad: &Mat, graph: &CircuitGraph) -> Mat {
        let mut out = grad.clone();
        for &(src, dst) in &graph.edges {
            let (s, d) = (src as usize, dst as usize);
            for k in 0..grad.cols {
                let v = grad.at(d, k);
                *out.at_mut(s, k) += v;
            }
        }
        out
    }

    fn forward_cached(
        &self,
        graph: &CircuitGraph,
        mode: Mode,
        rng: &mut ChaCha12Rng,
    ) -> Result<ForwardCache> {
        if graph.node_features.cols != self.d_in {
            return Err(Error::Dimension(format!(
                "graph feature width {} does not match model input {}",
                graph.node_features.cols, self.d_in
            )));
        }
        let n = graph.num_nodes;
        let p = if mode.dropout_active() { self.dropout_rate } else { 0.0 };

        let agg1 = self.aggregate(&graph.node_features, graph);
        let mut z1 = agg1.matmul(&self.params.w1);
        z1.add_bias(&self.params.b1);
        let r1 = z1.relu();
        let mut h1 = r1.matmul(&self.params.w2);
        h1.add_bias(&self.params.b2);
        let mask1 = dropout_mask(n, self.hidden, p, rng);
        let mut d1 = h1;
        d1.hadamard(&mask1);

        let agg2 = self.aggregate(&d1, graph);
        let mut z2 = agg2.matmul(&self.params.w3);
        z2.add_bias(&self.params.b3);
        let r2 = z2.relu();
        let mut h2 = r2.matmul(&self.params.w4);
        h2.add_bias(&self.params.b4);
        let mask2 = dropout_mask(n, self.hidden, p, rng);
        let mut d2 = h2;
        d2.hadamard(&mask2);

        let mut pooled = vec![0.0; self.hidden];
        for r in 0..n {
            for (g, &x) in pooled.iter_mut().zip(d2.row(r)) {
                *g += x;
            }
        }
        pooled.iter_mut().for_each(|g| *g /= n as f64);
        let out = pooled
            .iter()
            .zip(&self.params.head_w)
            .map(|(g, w)| g * w)
            .sum::<f64>()
            + self.params.head_b;
        Ok(ForwardCache { agg1, z1, r1, mask1, agg2, z2, r2, mask2, pooled, out })
    }

    /// One forward pass; dropout behavior per `mode`.
    pub fn forward(&self, graph: &CircuitGraph, mode: Mode, rng: &mut ChaCha12Rng) -> Result<f64> {
        Ok(self.forward_cached(graph, mode, rng)?.out)
    }

    /// Deterministic prediction (dropout off); rng is not consumed.
    pub fn predict_deterministic(&self, graph: &CircuitGraph) -> Result<f64> {
        let mut rng = crate::rng::derive_rng(0, "det", &[]);
        self.forward(graph, Mode::Deterministic, &mut rng)
    }

    fn backward(&self, graph: &CircuitGraph, cache: &ForwardCache, dout: f64) -> GinParams {
        let n = graph.num_nodes;
        let mut grads = self.params.zeros_like();

        grads.head_b = dout;
        for (g, &p) in grads.head_w.iter_mut().zip(&cache.pooled) {
            *g = dout * p;
        }
        // mean pool backward
        let mut dd2 = Mat::zeros(n, self.hidden);
        for r in 0..n {
            for (k, d) in dd2.row_mut(r).iter_mut().enumerate() {
                *d = dout * self.params.head_w[k] / n as f64;
            }
        }
        let mut dh2 = dd2;
        dh2.hadamard(&cache.mask2);

        let mut dr2 = dh2.matmul_bt(&self.params.w4);
        grads.w4 = cache.r2.t_matmul(&dh2);
        grads.b4 = dh2.col_sums();
        dr2.mask_relu(&cache.z2);
        grads.w3 = cache.agg2.t_matmul(&dr2);
        grads.b3 = dr2.col_sums();
        let dagg2 = dr2.matmul_bt(&self.params.w3);
        let mut dh1 = self.aggregate_back(&dagg2, graph);
        dh1.hadamard(&cache.mask1);

        let mut dr1 = dh1.matmul_bt(&self.params.w2);
        grads.w2 = cache.r1.t_matmul(&dh1);
        grads.b2 = dh1.col_sums();
        dr1.mask_relu(&cache.z1);
        grads.w1 = cache.agg1.t_matmul(&dr1);
        grads.b1 = dr1.col_sums();
        grads
    }

    /// Loss and parameter gradient of (1/B) sum (f(G_i) - t_i)^2 for one
    /// pass over `batch` with fresh dropout masks.
    fn loss_and_grads(
        &self,
        graphs: &[&CircuitGraph],
        targets: &[f64],
        mode: Mode,
        rng: &mut ChaCha12Rng,
    ) -> Result<(f64, GinParams)> {
        let b = graphs.len() as f64;
        let mut total = self.params.zeros_like();
        let mut loss = 0.0;
        let mut total_flat = total.flatten();
        for (graph, &t) in graphs.iter().zip(targets) {
            let cache = self.forward_cached(graph, mode, rng)?;
            let err = cache.out - t;
            loss += err * err / b;
            let g = self.backward(graph, &cache, 2.0 * err / b);
            for (acc, gi) in total_flat.iter_mut().zip(g.flatten()) {
                *acc += gi;
            }
        }
        total.unflatten(&total_flat);
        Ok((loss, total))
    }
}

/// Training options for [`train_mse`]. With `batch_size = None` every epoch
/// is one full-batch step.
#[derive(Debug, Clone, Copy)]
pub struct TrainOpts {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: Option<usize>,
}

/// Minimize (1/B) sum (f(G_i) - t_i)^2 with Adam and dropout active.
/// Returns the per-epoch loss trace. Deterministic for a fixed rng stream.
pub fn train_mse(
    model: &mut GinModel,
    graphs: &[&CircuitGraph],
    targets: &[f64],
    opts: &TrainOpts,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>> {
    if graphs.is_empty() || graphs.len() != targets.len() {
        return Err(Error::Data("empty or mismatched surrogate training set".into()));
    }
    let mut adam = Adam::new(model.params.count(), opts.lr);
    let mut trace = Vec::with_capacity(opts.epochs);
    use rand::RngExt;
    for _ in 0..opts.epochs {
        let batch = opts.batch_size.unwrap_or(graphs.len()).max(1);
        let mut order: Vec<usize> = (0..graphs.len()).collect();
        if batch < graphs.len() {
            for i in (1..order.len()).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
        }
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(batch) {
            let gs: Vec<&CircuitGraph> = chunk.iter().map(|&i| graphs[i]).collect();
            let ts: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
            let (loss, grads) = model.loss_and_grads(&gs, &ts, Mode::Train, rng)?;
            epoch_loss += loss * gs.len() as f64;
            seen += gs.len();
            let mut flat = model.params.flatten();
            adam.step(&mut flat, &grads.flatten());
            model.params.unflatten(&flat);
        }
        trace.push(epoch_loss / seen as f64);
    }
    Ok(trace)
}

/// T stochastic forward passes with independent dropout masks; mean and
/// unbiased variance per sample statistics. Requires T >= 2.
pub fn mc_predict(
    model: &GinModel,
    graph: &CircuitGraph,
    t_samples: usize,
    rng: &mut ChaCha12Rng,
) -> Result<PredictionStats> {
    if t_samples < 2 {
        return Err(Error::Parameter(format!("mc_predict needs T >= 2, got {t_samples}")));
    }
    let mut samples = Vec::with_capacity(t_samples);
    for _ in 0..t_samples {
        samples.push(model.forward(graph, Mode::McInference, rng)?);
    }
    Ok(stats_from_samples(samples))
}

pub(crate) fn stats_from_samples(samples: Vec<f64>) -> PredictionStats {
    let t = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / t;
    let var = samples.iter().map(|s| (s - mu) * (s - mu)).sum::<f64>() / (t - 1.0);
    PredictionStats { mu, sigma: var.max(0.0).sqrt(), samples }
}
