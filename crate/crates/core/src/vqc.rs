//! Hybrid quantum-classical classifier: circuit expectations feed a small
//! classical head (Q -> 64 -> 64 -> 2), trained jointly by cross-entropy.
//! Quantum parameters get exact parameter-shift gradients, the head gets
//! ordinary backprop, and the chain rule joins them through the expectation
//! vector z.
//!
//! Training is plain minibatch SGD with a fixed learning rate; traces are
//! bitwise reproducible for a fixed seed because parallel per-sample work
//! lands in indexed slots before any reduction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::circuit::{canonical_hash, complexity_summary, CircuitBlueprint, ComplexitySummary};
use crate::error::{Error, Result};
use crate::nn::{softmax2, Mat};
use crate::rng::derive_rng;
use crate::sim::noise::NoiseConfig;
use crate::sim::{run_circuit_with_thetas, run_statevector};

pub const HEAD_HIDDEN: usize = 64;

/// Scaled feature rows plus binary labels.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LabeledSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Union of two sets (used for the final train+val fit).
    pub fn union(&self, other: &LabeledSet) -> LabeledSet {
        let mut x = self.x.clone();
        x.extend(other.x.iter().cloned());
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        LabeledSet { x, y }
    }

    /// Seed-deterministic stratified subset of at most `n` rows.
    pub fn stratified_subset(&self, n: usize, seed: u64) -> LabeledSet {
        if n >= self.len() {
            return self.clone();
        }
        let mut rng = derive_rng(seed, "subset", &[]);
        let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, &y) in self.y.iter().enumerate() {
            by_class[y as usize].push(i);
        }
        use rand::RngExt;
        for class in &mut by_class {
            for i in (1..class.len()).rev() {
                class.swap(i, rng.random_range(0..=i));
            }
        }
        let n1 = ((n * by_class[1].len()) as f64 / self.len() as f64).round() as usize;
        let n1 = n1.min(by_class[1].len()).max(usize::from(!by_class[1].is_empty()));
        let n0 = (n - n1).min(by_class[0].len());
        let mut idx: Vec<usize> = by_class[0][..n0]
            .iter()
            .chain(&by_class[1][..n1])
            .copied()
            .collect();
        idx.sort_unstable();
        LabeledSet {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// Classical head weights: affine -> ReLU -> affine -> ReLU -> affine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeadParams {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub w3: Mat,
    pub b3: Vec<f64>,
}

impl HeadParams {
    /// Seeded uniform(-0.1, 0.1) initialization.
    pub fn init(q: usize, seed: u64) -> Self {
        let mut rng = derive_rng(seed, "head-init", &[]);
        use rand::RngExt;
        let mut vec_init = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-0.1..0.1)).collect()
        };
        let b1 = vec_init(HEAD_HIDDEN);
        let b2 = vec_init(HEAD_HIDDEN);
        let b3 = vec_init(2);
        let mut rng2 = derive_rng(seed, "head-init-w", &[]);
        HeadParams {
            w1: Mat::uniform(q, HEAD_HIDDEN, 0.1, &mut rng2),
            b1,
            w2: Mat::uniform(HEAD_HIDDEN, HEAD_HIDDEN, 0.1, &mut rng2),
            b2,
            w3: Mat::uniform(HEAD_HIDDEN, 2, 0.1, &mut rng2),
            b3,
        }
    }

    pub fn zeros(q: usize) -> Self {
        HeadParams {
            w1: Mat::zeros(q, HEAD_HIDDEN),
            b1: vec![0.0; HEAD_HIDDEN],
            w2: Mat::zeros(HEAD_HIDDEN, HEAD_HIDDEN),
            b2: vec![0.0; HEAD_HIDDEN],
            w3: Mat::zeros(HEAD_HIDDEN, 2),
            b3: vec![0.0; 2],
        }
    }

    /// Trainable scalar count: Q*64+64 + 64*64+64 + 64*2+2.
    pub fn param_count(&self) -> usize {
        self.w1.data.len()
            + self.b1.len()
            + self.w2.data.len()
            + self.b2.len()
            + self.w3.data.len()
            + self.b3.len()
    }
}

/// The hybrid model: a blueprint, its trainable angles, and the head.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridModel {
    pub blueprint: CircuitBlueprint,
    pub theta: Vec<f64>,
    pub head: HeadParams,
}

impl HybridModel {
    /// Fresh model: angles from the blueprint, head seeded.
    pub fn new(blueprint: CircuitBlueprint, seed: u64) -> Self {
        let theta = blueprint.thetas();
        let head = HeadParams::init(blueprint.num_qubits as usize, seed);
        HybridModel { blueprint, theta, head }
    }

    /// Blueprint carrying the trained angles.
    pub fn trained_blueprint(&self) -> CircuitBlueprint {
        self.blueprint.with_thetas(&self.theta)
    }
}

/// Training budget. `subset_size` caps the per-candidate training sample;
/// the learning rate drives plain SGD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub subset_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        // candidate-evaluation budget: 3000 samples, 10 epochs, batch 128
        TrainConfig { epochs: 10, batch_size: 128, subset_size: 3000, learning_rate: 0.05, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.subset_size == 0 {
            return Err(Error::Config("train budget entries must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Caps for the batch-free structural penalty of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyCaps {
    pub depth_cap: f64,
    pub total_cap: f64,
}

impl Default for PenaltyCaps {
    fn default() -> Self {
        PenaltyCaps { depth_cap: 128.0, total_cap: 128.0 }
    }
}

/// Normalized structural proxy: mean of capped depth, capped total count,
/// and the two-qubit fraction. Strictly monotone in the raw counts below
/// the caps, and zero only for the empty limit.
pub fn structural_penalty(summary: &ComplexitySummary, caps: &PenaltyCaps) -> f64 {
    let depth_term = (summary.depth as f64 / caps.depth_cap).min(1.0);
    let total_term = (summary.total_gates as f64 / caps.total_cap).min(1.0);
    let two_q_term = if summary.total_gates > 0 {
        summary.two_qubit_gates as f64 / summary.total_gates as f64
    } else {
        0.0
    };
    (depth_term + total_term + two_q_term) / 3.0
}

/// Surrogate prediction attached to an evaluation after selection.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PredictedScore {
    pub mu: f64,
    pub sigma_raw: f64,
    pub sigma_cal: f64,
}

/// Everything recorded for one true evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub circuit_hash: String,
    pub val_accuracy: f64,
    pub perf: f64,
    pub complexity: ComplexitySummary,
    pub train_seconds: f64,
    pub eval_seconds: f64,
    pub eval_seed: u64,
    /// BO iteration that produced the record; 0 marks the initial design.
    pub iteration: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub predicted: Option<PredictedScore>,
}

/// Class probabilities for one scaled input.
pub fn forward(model: &HybridModel, x_scaled: &[f64], noise: &NoiseConfig) -> Result<(f64, f64)> {
    let z = run_circuit_with_thetas(&model.blueprint, x_scaled, noise, Some(&model.theta))?;
    Ok(head_forward_single(&model.head, &z))
}

fn head_forward_single(head: &HeadParams, z: &[f64]) -> (f64, f64) {
    let mut h1 = head.b1.clone();
    for (q, &zq) in z.iter().enumerate() {
        if zq == 0.0 {
            continue;
        }
        for (j, h) in h1.iter_mut().enumerate() {
            *h += zq * head.w1.at(q, j);
        }
    }
    h1.iter_mut().for_each(|v| *v = v.max(0.0));
    let mut h2 = head.b2.clone();
    for (i, &r) in h1.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        for (j, h) in h2.iter_mut().enumerate() {
            *h += r * head.w2.at(i, j);
        }
    }
    h2.iter_mut().for_each(|v| *v = v.max(0.0));
    let mut logits = [head.b3[0], head.b3[1]];
    for (i, &r) in h2.iter().enumerate() {
        logits[0] += r * head.w3.at(i, 0);
        logits[1] += r * head.w3.at(i, 1);
    }
    softmax2(logits[0], logits[1])
}

/// Mean negative log-likelihood of the true classes; probabilities are
/// clamped at 1e-12 before the log.
pub fn cross_entropy(batch_probs: &[(f64, f64)], batch_labels: &[u8]) -> Result<f64> {
    if batch_probs.len() != batch_labels.len() || batch_probs.is_empty() {
        return Err(Error::Dimension("probability/label batch mismatch".into()));
    }
    let mut loss = 0.0;
    for (&(p0, p1), &y) in batch_probs.iter().zip(batch_labels) {
        let p = if y == 0 { p0 } else { p1 };
        loss -= p.clamp(1e-12, 1.0).ln();
    }
    Ok(loss / batch_labels.len() as f64)
}

/// Parameter-shift Jacobian dz/dtheta on the noiseless statevector backend:
/// column l is (z(theta_l + pi/2) - z(theta_l - pi/2)) / 2. Returns a
/// Q x P matrix; an unparameterized circuit yields zero columns.
pub fn quantum_gradients(
    blueprint: &CircuitBlueprint,
    theta: &[f64],
    x_scaled: &[f64],
) -> Result<Mat> {
    jacobian_with_noise(blueprint, theta, x_scaled, &NoiseConfig::none())
}

/// Parameter-shift Jacobian under an arbitrary noise configuration. The
/// shift identity is exact for exp(-i theta P / 2) gates even with CPTP
/// channels interleaved, since channels are linear in rho and independent
/// of theta.
pub fn jacobian_with_noise(
    blueprint: &CircuitBlueprint,
    theta: &[f64],
    x_scaled: &[f64],
    noise: &NoiseConfig,
) -> Result<Mat> {
    let q = blueprint.num_qubits as usize;
    let p = blueprint.parameter_count();
    if theta.len() != p {
        return Err(Error::Dimension(format!("{} thetas for {p} parameterized gates", theta.len())));
    }
    let mut jac = Mat::zeros(q, p);
    let mut shifted = theta.to_vec();
    for l in 0..p {
        let base = theta[l];
        shifted[l] = base + std::f64::consts::FRAC_PI_2;
        let z_plus = run_circuit_with_thetas(blueprint, x_scaled, noise, Some(&shifted))?;
        shifted[l] = base - std::f64::consts::FRAC_PI_2;
        let z_minus = run_circuit_with_thetas(blueprint, x_scaled, noise, Some(&shifted))?;
        shifted[l] = base;
        for i in 0..q {
            *jac.at_mut(i, l) = (z_plus[i] - z_minus[i]) / 2.0;
        }
    }
    Ok(jac)
}

struct BatchForward {
    z: Mat,
    a1: Mat,
    r1: Mat,
    a2: Mat,
    r2: Mat,
    probs: Vec<(f64, f64)>,
}

fn head_forward_batch(head: &HeadParams, z: Mat) -> BatchForward {
    let mut a1 = z.matmul(&head.w1);
    a1.add_bias(&head.b1);
    let r1 = a1.relu();
    let mut a2 = r1.matmul(&head.w2);
    a2.add_bias(&head.b2);
    let r2 = a2.relu();
    let mut logits = r2.matmul(&head.w3);
    logits.add_bias(&head.b3);
    let probs = (0..logits.rows).map(|i| softmax2(logits.at(i, 0), logits.at(i, 1))).collect();
    BatchForward { z, a1, r1, a2, r2, probs }
}

/// Joint SGD training over (theta, head). Returns the per-epoch mean loss.
pub fn train(
    model: &mut HybridModel,
    set: &LabeledSet,
    cfg: &TrainConfig,
    noise: &NoiseConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if set.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    let q = model.blueprint.num_qubits as usize;
    let p = model.theta.len();
    let lr = cfg.learning_rate;
    let mut trace = Vec::with_capacity(cfg.epochs);
    use rand::RngExt;

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..set.len()).collect();
        let mut rng = derive_rng(cfg.seed, "epoch-shuffle", &[epoch as u64]);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut epoch_loss = 0.0;
        for batch_idx in order.chunks(cfg.batch_size) {
            let bsz = batch_idx.len();
            // circuit forwards, slot-indexed for determinism
            let zs: Vec<Result<Vec<f64>>> = batch_idx
                .par_iter()
                .map(|&i| {
                    run_circuit_with_thetas(&model.blueprint, &set.x[i], noise, Some(&model.theta))
                })
                .collect();
            let mut z = Mat::zeros(bsz, q);
            for (r, zi) in zs.into_iter().enumerate() {
                z.row_mut(r).copy_from_slice(&zi?);
            }
            let fwd = head_forward_batch(&model.head, z);
            let labels: Vec<u8> = batch_idx.iter().map(|&i| set.y[i]).collect();
            epoch_loss += cross_entropy(&fwd.probs, &labels)? * bsz as f64;

            // softmax cross-entropy gradient, scaled by 1/batch
            let mut dlogits = Mat::zeros(bsz, 2);
            for i in 0..bsz {
                let (p0, p1) = fwd.probs[i];
                *dlogits.at_mut(i, 0) = (p0 - f64::from(labels[i] == 0)) / bsz as f64;
                *dlogits.at_mut(i, 1) = (p1 - f64::from(labels[i] == 1)) / bsz as f64;
            }
            let gw3 = fwd.r2.t_matmul(&dlogits);
            let gb3 = dlogits.col_sums();
            let mut dr2 = dlogits.matmul_bt(&model.head.w3);
            dr2.mask_relu(&fwd.a2);
            let gw2 = fwd.r1.t_matmul(&dr2);
            let gb2 = dr2.col_sums();
            let mut dr1 = dr2.matmul_bt(&model.head.w2);
            dr1.mask_relu(&fwd.a1);
            let gw1 = fwd.z.t_matmul(&dr1);
            let gb1 = dr1.col_sums();
            let dz = dr1.matmul_bt(&model.head.w1);

            // quantum gradients via parameter shift, per sample
            let mut gtheta = vec![0.0; p];
            if p > 0 {
                let jacs: Vec<Result<Mat>> = batch_idx
                    .par_iter()
                    .map(|&i| jacobian_with_noise(&model.blueprint, &model.theta, &set.x[i], noise))
                    .collect();
                for (r, jac) in jacs.into_iter().enumerate() {
                    let jac = jac?;
                    for l in 0..p {
                        let mut s = 0.0;
                        for i in 0..q {
                            s += dz.at(r, i) * jac.at(i, l);
                        }
                        gtheta[l] += s;
                    }
                }
            }

            // SGD step
            for (w, g) in model.head.w1.data.iter_mut().zip(&gw1.data) {
                *w -= lr * g;
            }
            for (w, g) in model.head.b1.iter_mut().zip(&gb1) {
                *w -= lr * g;
            }
            for (w, g) in model.head.w2.data.iter_mut().zip(&gw2.data) {
                *w -= lr * g;
            }
            for (w, g) in model.head.b2.iter_mut().zip(&gb2) {
                *w -= lr * g;
            }
            for (w, g) in model.head.w3.data.iter_mut().zip(&gw3.data) {
                *w -= lr * g;
            }
            for (w, g) in model.head.b3.iter_mut().zip(&gb3) {
                *w -= lr * g;
            }
            for (t, g) in model.theta.iter_mut().zip(&gtheta) {
                *t -= lr * g;
            }
        }
        trace.push(epoch_loss / set.len() as f64);
    }
    Ok(trace)
}

/// Fraction of correct argmax predictions.
pub fn accuracy(model: &HybridModel, set: &LabeledSet, noise: &NoiseConfig) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Data("empty evaluation set".into()));
    }
    let probs: Vec<Result<(f64, f64)>> =
        set.x.par_iter().map(|x| forward(model, x, noise)).collect();
    let mut correct = 0usize;
    for (pr, &y) in probs.into_iter().zip(&set.y) {
        let (p0, p1) = pr?;
        let pred = u8::from(p1 > p0);
        correct += usize::from(pred == y);
    }
    Ok(correct as f64 / set.len() as f64)
}

/// Train-pool and validation splits visible to the search; the test split
/// deliberately has no field here, so nothing on the search path can
/// touch it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchTask {
    pub train: LabeledSet,
    pub val: LabeledSet,
}

/// The black-box objective F(c): train a fresh model on a stratified
/// candidate subset, measure validation accuracy, subtract the structural
/// penalty. Returns the record and the trained model.
pub fn evaluate_objective(
    blueprint: &CircuitBlueprint,
    task: &SearchTask,
    cfg: &TrainConfig,
    lambda: f64,
    caps: &PenaltyCaps,
    noise: &NoiseConfig,
) -> Result<(EvalRecord, HybridModel)> {
    crate::circuit::ensure_valid(blueprint)?;
    let mut model = HybridModel::new(blueprint.clone(), cfg.seed);
    let subset = task.train.stratified_subset(cfg.subset_size, cfg.seed);

    let t0 = Instant::now();
    train(&mut model, &subset, cfg, noise)?;
    let train_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let val_accuracy = accuracy(&model, &task.val, noise)?;
    let eval_seconds = t1.elapsed().as_secs_f64();

    let complexity = complexity_summary(blueprint);
    let perf = val_accuracy - lambda * structural_penalty(&complexity, caps);
    let record = EvalRecord {
        circuit_hash: canonical_hash(blueprint),
        val_accuracy,
        perf,
        complexity,
        train_seconds,
        eval_seconds,
        eval_seed: cfg.seed,
        iteration: 0,
        predicted: None,
    };
    Ok((record, model))
}

/// Noiseless expectation vector for a bare blueprint (test hook).
pub fn expectations(blueprint: &CircuitBlueprint, x_scaled: &[f64]) -> Result<Vec<f64>> {
    run_statevector(blueprint, x_scaled, None)
}
