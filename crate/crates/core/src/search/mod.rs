//! The Bayesian-optimization loop and its baselines.
//!
//! Per iteration: sample parents uniformly from the top-K archive entries,
//! propose N children by mutation (deduplicated by canonical hash, with a
//! bounded resample budget), encode and score them with the surrogate
//! under MC dropout, temper expected improvement by the normalized batch
//! cost, truly evaluate the top-M, append the records, and briefly retrain
//! the surrogate on the grown archive. Every random draw comes from a
//! stream derived from (run seed, stage tag, iteration, slot), which makes
//! runs bit-reproducible and checkpoints exactly resumable.
//!
//! Strategies: `Gnn` (the full pipeline), `Mlp` (same loop, flat-feature
//! surrogate), `Greedy` (rank by surrogate mean only), and `Random`
//! (uniform parents, uniform selection, no surrogate).

pub mod acq;
pub mod mutate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::time::Instant;

use crate::circuit::{canonical_hash, complexity_summary, CircuitBlueprint};
use crate::error::{Error, Result};
use crate::graph::{encode, flat_features, CircuitGraph};
use crate::rng::{derive_rng, derive_seed};
use crate::sim::noise::NoiseConfig;
use crate::surrogate::{
    calibrate, diagnostics, kendall_tau, mc_predict, train_mse, Diagnostics, GinModel,
    MlpSurrogate, PredictionStats, TrainOpts, UncertaintyCalibration,
};
use crate::vqc::{
    evaluate_objective, EvalRecord, HybridModel, LabeledSet, PenaltyCaps, PredictedScore,
    SearchTask, TrainConfig,
};

pub use acq::{acquisition, base_cost, decoherence_proxy, expected_improvement, AcqInput, CostTerms, CostWeights, EI_EPSILON};
pub use mutate::{mutate, random_blueprint, random_gate, MutationConfig};

/// Candidate-selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Gnn,
    Mlp,
    Greedy,
    Random,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::Gnn => "gnn",
            Strategy::Mlp => "mlp",
            Strategy::Greedy => "greedy",
            Strategy::Random => "random",
        };
        f.write_str(s)
    }
}

/// Full search budget and knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub num_qubits: u32,
    /// Size of the initial random design.
    pub initial: usize,
    /// BO iterations T.
    pub iterations: usize,
    /// Parent pool size K.
    pub top_k: usize,
    /// Children proposed per iteration N.
    pub n_cands: usize,
    /// True evaluations per iteration M.
    pub m_evals: usize,
    /// MC-dropout passes per candidate.
    pub mc_samples: usize,
    pub mutation: MutationConfig,
    pub weights: CostWeights,
    /// Objective penalty strength (perf = acc - lambda * penalty).
    pub lambda: f64,
    pub penalty_caps: PenaltyCaps,
    /// Per-candidate training budget (its seed field is ignored; seeds are
    /// derived per evaluation).
    pub candidate_train: TrainConfig,
    /// Final train+val refit budget.
    pub final_train: TrainConfig,
    /// Noise configuration of the true objective (none during search by
    /// default; used for gate times and the decoherence proxy's T2).
    pub objective_noise: NoiseConfig,
    pub surrogate_warmup_epochs: usize,
    pub surrogate_update_epochs: usize,
    pub surrogate_lr: f64,
    /// Resample attempts before accepting a duplicate candidate.
    pub dedup_max_attempts: usize,
    /// Checkpoint cadence in iterations (0 disables checkpoints).
    pub checkpoint_every: usize,
    /// Fraction of the archive whose newest prediction/outcome pairs feed
    /// the affine uncertainty calibration.
    pub calibration_fraction: f64,
    /// Window (in evaluations) for the per-iteration rank-fidelity tau.
    pub tau_window: usize,
    /// Initial circuits draw their gate count from {Q, ..., factor * Q}.
    pub init_gate_factor: u32,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            num_qubits: 5,
            initial: 50,
            iterations: 100,
            top_k: 5,
            n_cands: 5,
            m_evals: 2,
            mc_samples: 30,
            mutation: MutationConfig::default(),
            weights: CostWeights::default(),
            lambda: 0.0,
            penalty_caps: PenaltyCaps::default(),
            candidate_train: TrainConfig::default(),
            final_train: TrainConfig {
                epochs: 20,
                batch_size: 256,
                // effectively "all of train+val" at any realistic scale
                subset_size: 1_000_000,
                learning_rate: 0.05,
                seed: 0,
            },
            objective_noise: NoiseConfig::none(),
            surrogate_warmup_epochs: 50,
            surrogate_update_epochs: 5,
            surrogate_lr: 1e-3,
            dedup_max_attempts: 20,
            checkpoint_every: 10,
            calibration_fraction: 0.2,
            tau_window: 20,
            init_gate_factor: 4,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_qubits < 1 {
            return Err(Error::Config("need at least one qubit".into()));
        }
        if self.initial == 0 {
            return Err(Error::Config("initial design must be non-empty".into()));
        }
        if self.top_k == 0 || self.n_cands == 0 || self.m_evals == 0 {
            return Err(Error::Config("top_k, n_cands and m_evals must be positive".into()));
        }
        if self.m_evals > self.n_cands {
            return Err(Error::Config(format!(
                "m_evals = {} cannot exceed n_cands = {}",
                self.m_evals, self.n_cands
            )));
        }
        if self.mc_samples < 2 {
            return Err(Error::Config("mc_samples must be at least 2".into()));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction <= 1.0) {
            return Err(Error::Config("calibration_fraction must lie in (0, 1]".into()));
        }
        if self.tau_window < 2 {
            return Err(Error::Config("tau_window must be at least 2".into()));
        }
        self.mutation.validate()?;
        self.weights.validate()?;
        self.candidate_train.validate()?;
        self.final_train.validate()?;
        self.objective_noise.validate()?;
        Ok(())
    }
}

/// One archive row: the evaluated blueprint and its record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub blueprint: CircuitBlueprint,
    pub record: EvalRecord,
}

/// Wall-clock accumulators per pipeline stage, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTotals {
    pub surrogate_infer_s: f64,
    pub surrogate_update_s: f64,
    pub vqc_eval_s: f64,
    pub bookkeeping_s: f64,
    pub total_s: f64,
}

/// Archive, incumbent, traces, and accounting for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchState {
    pub archive: Vec<ArchiveEntry>,
    pub f_star: f64,
    pub iteration: usize,
    /// Best-so-far perf per iteration; index 0 is the initial design.
    pub best_trace: Vec<f64>,
    pub timing: StageTotals,
    /// Selected evaluations that met or beat the incumbent.
    pub hits: usize,
    /// Total selected evaluations (M per iteration).
    pub selections: usize,
    pub dedup_overflows: usize,
    pub run_seed: u64,
}

impl SearchState {
    /// Index of the best entry by perf (first on ties).
    pub fn best_by_perf(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, e) in self.archive.iter().enumerate() {
            if best.is_none_or(|b| e.record.perf > self.archive[b].record.perf) {
                best = Some(i);
            }
        }
        best
    }

    /// Index of the best entry by validation accuracy (first on ties).
    pub fn best_by_validation(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, e) in self.archive.iter().enumerate() {
            if best.is_none_or(|b| e.record.val_accuracy > self.archive[b].record.val_accuracy) {
                best = Some(i);
            }
        }
        best
    }
}

/// Acquisition hit rate h = hits / (M T); absent before any selection.
pub fn hit_rate(state: &SearchState) -> Option<f64> {
    (state.selections > 0).then(|| state.hits as f64 / state.selections as f64)
}

/// Per-iteration log row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRow {
    pub t: usize,
    pub f_t: f64,
    pub kendall: Option<f64>,
    pub hits: usize,
    pub evals_total: usize,
    pub surrogate_infer_s: f64,
    pub surrogate_update_s: f64,
    pub vqc_eval_s: f64,
    pub bookkeeping_s: f64,
    pub iter_s: f64,
    pub best_hash: String,
    pub diagnostics: Option<Diagnostics>,
}

/// Surrogate weights carried by checkpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurrogateState {
    Gin(GinModel),
    Mlp(MlpSurrogate),
    None,
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchCheckpoint {
    pub config: SearchConfig,
    pub strategy: Strategy,
    pub state: SearchState,
    pub surrogate: SurrogateState,
    pub rows: Vec<IterationRow>,
}

/// Callbacks for logging and checkpoint persistence.
pub trait SearchObserver {
    fn on_iteration(&mut self, _row: &IterationRow) {}
    fn on_checkpoint(&mut self, _checkpoint: &SearchCheckpoint) {}
}

/// No-op observer.
impl SearchObserver for () {}

/// Final result of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub state: SearchState,
    pub rows: Vec<IterationRow>,
    /// Best archive entry by validation accuracy (pre-final-retrain).
    pub best: ArchiveEntry,
    /// The finalized blueprint with trained angles.
    pub final_blueprint: CircuitBlueprint,
    pub final_val_accuracy: f64,
    pub test_accuracy: f64,
    pub final_train_seconds: f64,
}

struct LoopCtx {
    config: SearchConfig,
    strategy: Strategy,
    state: SearchState,
    surrogate: SurrogateState,
    rows: Vec<IterationRow>,
    graphs: Vec<CircuitGraph>,
    flats: Vec<Vec<f64>>,
    hashes: HashSet<String>,
}

impl LoopCtx {
    fn push_entry(&mut self, entry: ArchiveEntry) -> Result<()> {
        self.graphs.push(encode(&entry.blueprint)?);
        self.flats.push(flat_features(&entry.blueprint)?);
        self.hashes.insert(entry.record.circuit_hash.clone());
        if entry.record.perf > self.state.f_star {
            self.state.f_star = entry.record.perf;
        }
        self.state.archive.push(entry);
        Ok(())
    }

    fn fresh(config: SearchConfig, strategy: Strategy, task: &SearchTask) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let mut ctx = LoopCtx {
            state: SearchState {
                archive: Vec::new(),
                f_star: f64::NEG_INFINITY,
                iteration: 0,
                best_trace: Vec::new(),
                timing: StageTotals::default(),
                hits: 0,
                selections: 0,
                dedup_overflows: 0,
                run_seed: seed,
            },
            surrogate: match strategy {
                Strategy::Gnn | Strategy::Greedy => SurrogateState::Gin(GinModel::new(
                    config.num_qubits as usize,
                    &mut derive_rng(seed, "surrogate-init", &[]),
                )),
                Strategy::Mlp => SurrogateState::Mlp(MlpSurrogate::new(
                    crate::graph::FLAT_FEATURE_WIDTH,
                    &mut derive_rng(seed, "surrogate-init", &[]),
                )),
                Strategy::Random => SurrogateState::None,
            },
            rows: Vec::new(),
            graphs: Vec::new(),
            flats: Vec::new(),
            hashes: HashSet::new(),
            config,
            strategy,
        };

        // initial random design, deduplicated like mutation proposals
        let t0 = Instant::now();
        let cfg = &ctx.config;
        let mut blueprints = Vec::with_capacity(cfg.initial);
        let mut seen: HashSet<String> = HashSet::new();
        for i in 0..cfg.initial {
            let mut rng = derive_rng(seed, "init-bp", &[i as u64]);
            let mut bp = random_blueprint(cfg.num_qubits, cfg.init_gate_factor, &mut rng);
            let mut attempts = 0;
            while seen.contains(&canonical_hash(&bp)) && attempts < cfg.dedup_max_attempts {
                bp = random_blueprint(cfg.num_qubits, cfg.init_gate_factor, &mut rng);
                attempts += 1;
            }
            if seen.contains(&canonical_hash(&bp)) {
                ctx.state.dedup_overflows += 1;
            }
            seen.insert(canonical_hash(&bp));
            blueprints.push(bp);
        }
        ctx.state.bump_bookkeeping(t0);

        let t1 = Instant::now();
        let records = evaluate_batch(&blueprints, task, &ctx.config, 0)?;
        ctx.state.timing.vqc_eval_s += t1.elapsed().as_secs_f64();
        for (bp, record) in blueprints.into_iter().zip(records) {
            ctx.push_entry(ArchiveEntry { blueprint: bp, record })?;
        }
        ctx.state.best_trace.push(ctx.state.f_star);

        // warm-start the surrogate on the initial design
        let t2 = Instant::now();
        ctx.retrain_surrogate(ctx.config.surrogate_warmup_epochs, "surrogate-warmup", 0)?;
        ctx.state.timing.surrogate_update_s += t2.elapsed().as_secs_f64();
        ctx.state.timing.total_s += t0.elapsed().as_secs_f64();
        Ok(ctx)
    }

    fn from_checkpoint(ckpt: SearchCheckpoint) -> Result<Self> {
        ckpt.config.validate()?;
        let mut ctx = LoopCtx {
            config: ckpt.config,
            strategy: ckpt.strategy,
            state: ckpt.state,
            surrogate: ckpt.surrogate,
            rows: ckpt.rows,
            graphs: Vec::new(),
            flats: Vec::new(),
            hashes: HashSet::new(),
        };
        for entry in &ctx.state.archive {
            ctx.graphs.push(encode(&entry.blueprint)?);
            ctx.flats.push(flat_features(&entry.blueprint)?);
            ctx.hashes.insert(entry.record.circuit_hash.clone());
        }
        Ok(ctx)
    }

    fn checkpoint(&self) -> SearchCheckpoint {
        SearchCheckpoint {
            config: self.config.clone(),
            strategy: self.strategy,
            state: self.state.clone(),
            surrogate: self.surrogate.clone(),
            rows: self.rows.clone(),
        }
    }

    fn retrain_surrogate(&mut self, epochs: usize, tag: &str, t: usize) -> Result<()> {
        if epochs == 0 || self.state.archive.is_empty() {
            return Ok(());
        }
        let targets: Vec<f64> = self.state.archive.iter().map(|e| e.record.perf).collect();
        let mut rng = derive_rng(self.state.run_seed, tag, &[t as u64]);
        match &mut self.surrogate {
            SurrogateState::Gin(model) => {
                let graphs: Vec<&CircuitGraph> = self.graphs.iter().collect();
                let opts = TrainOpts { epochs, lr: self.config.surrogate_lr, batch_size: None };
                train_mse(model, &graphs, &targets, &opts, &mut rng)?;
            }
            SurrogateState::Mlp(model) => {
                model.fit(&self.flats, &targets, epochs, self.config.surrogate_lr, &mut rng)?;
            }
            SurrogateState::None => {}
        }
        Ok(())
    }

    /// Newest prediction/outcome pairs (up to `calibration_fraction` of the
    /// archive) fitted into the affine sigma calibration.
    fn fit_calibration(&self) -> UncertaintyCalibration {
        let want = ((self.config.calibration_fraction * self.state.archive.len() as f64).ceil()
            as usize)
            .max(3);
        let mut sigmas = Vec::new();
        let mut residuals = Vec::new();
        for entry in self.state.archive.iter().rev() {
            if let Some(p) = &entry.record.predicted {
                sigmas.push(p.sigma_raw);
                residuals.push(entry.record.perf - p.mu);
                if sigmas.len() >= want {
                    break;
                }
            }
        }
        if sigmas.len() < 3 {
            return UncertaintyCalibration::default();
        }
        calibrate(&sigmas, &residuals).unwrap_or_default()
    }

    /// Rank fidelity over the newest `tau_window` predicted evaluations.
    fn window_tau(&self) -> Option<f64> {
        let mut mus = Vec::new();
        let mut ys = Vec::new();
        for entry in self.state.archive.iter().rev() {
            if let Some(p) = &entry.record.predicted {
                mus.push(p.mu);
                ys.push(entry.record.perf);
                if mus.len() >= self.config.tau_window {
                    break;
                }
            }
        }
        (mus.len() >= 2).then(|| kendall_tau(&mus, &ys).ok()).flatten()
    }

    fn window_diagnostics(&self) -> Option<Diagnostics> {
        let mut mus = Vec::new();
        let mut sigmas = Vec::new();
        let mut ys = Vec::new();
        for entry in self.state.archive.iter().rev() {
            if let Some(p) = &entry.record.predicted {
                mus.push(p.mu);
                sigmas.push(p.sigma_cal.max(1e-6));
                ys.push(entry.record.perf);
                if mus.len() >= self.config.tau_window {
                    break;
                }
            }
        }
        if mus.len() < 2 {
            return None;
        }
        diagnostics(&mus, &sigmas, &ys).ok()
    }

    fn run_iteration(&mut self, t: usize, task: &SearchTask) -> Result<IterationRow> {
        let seed = self.state.run_seed;
        let cfg = self.config.clone();
        let iter_start = Instant::now();
        let f_star_before = self.state.f_star;
        let mut book_s = 0.0;

        // parent pool
        let t_book = Instant::now();
        let pool: Vec<usize> = match self.strategy {
            Strategy::Random => (0..self.state.archive.len()).collect(),
            _ => {
                let mut order: Vec<usize> = (0..self.state.archive.len()).collect();
                order.sort_by(|&a, &b| {
                    self.state.archive[b]
                        .record
                        .perf
                        .partial_cmp(&self.state.archive[a].record.perf)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                order.truncate(cfg.top_k);
                order
            }
        };

        // children with hash dedup
        use rand::RngExt;
        let mut children: Vec<CircuitBlueprint> = Vec::with_capacity(cfg.n_cands);
        let mut batch_hashes: Vec<String> = Vec::with_capacity(cfg.n_cands);
        for c in 0..cfg.n_cands {
            let mut rng = derive_rng(seed, "mutate", &[t as u64, c as u64]);
            let mut child;
            let mut attempts = 0;
            loop {
                let parent = &self.state.archive[pool[rng.random_range(0..pool.len())]].blueprint;
                child = mutate(parent, &cfg.mutation, &mut rng);
                let h = canonical_hash(&child);
                let dup = self.hashes.contains(&h) || batch_hashes.contains(&h);
                if !dup || attempts >= cfg.dedup_max_attempts {
                    if dup {
                        self.state.dedup_overflows += 1;
                    }
                    batch_hashes.push(h);
                    break;
                }
                attempts += 1;
            }
            children.push(child);
        }

        // encodings and raw cost terms
        let graphs: Vec<CircuitGraph> =
            children.iter().map(encode).collect::<Result<_>>()?;
        let flats: Vec<Vec<f64>> =
            children.iter().map(flat_features).collect::<Result<_>>()?;
        let noise = &cfg.objective_noise;
        let terms: Vec<CostTerms> = children
            .iter()
            .map(|bp| {
                let s = complexity_summary(bp);
                let d = decoherence_proxy(&s, noise.t_1q_ns, noise.t_2q_ns, noise.t2_us);
                CostTerms::from_summary(&s, d)
            })
            .collect();
        let costs = base_cost(&terms, &cfg.weights);
        book_s += t_book.elapsed().as_secs_f64();

        // surrogate scoring
        let t_infer = Instant::now();
        let predictions: Option<Vec<PredictionStats>> = match &self.surrogate {
            SurrogateState::Gin(model) => Some(
                (0..children.len())
                    .into_par_iter()
                    .map(|c| {
                        let mut rng = derive_rng(seed, "mc", &[t as u64, c as u64]);
                        mc_predict(model, &graphs[c], cfg.mc_samples, &mut rng)
                    })
                    .collect::<Result<_>>()?,
            ),
            SurrogateState::Mlp(model) => Some(
                (0..children.len())
                    .into_par_iter()
                    .map(|c| {
                        let mut rng = derive_rng(seed, "mc", &[t as u64, c as u64]);
                        model.mc_predict(&flats[c], cfg.mc_samples, &mut rng)
                    })
                    .collect::<Result<_>>()?,
            ),
            SurrogateState::None => None,
        };
        let infer_s = t_infer.elapsed().as_secs_f64();
        self.state.timing.surrogate_infer_s += infer_s;

        // selection
        let t_sel = Instant::now();
        let calibration = self.fit_calibration();
        let (selected, predicted_scores): (Vec<usize>, Vec<Option<PredictedScore>>) =
            match (self.strategy, &predictions) {
                (Strategy::Random, _) => {
                    let mut rng = derive_rng(seed, "select", &[t as u64]);
                    let mut idx: Vec<usize> = (0..children.len()).collect();
                    for i in (1..idx.len()).rev() {
                        idx.swap(i, rng.random_range(0..=i));
                    }
                    idx.truncate(cfg.m_evals);
                    let scores = idx.iter().map(|_| None).collect();
                    (idx, scores)
                }
                (Strategy::Greedy, Some(preds)) => {
                    let mut order: Vec<usize> = (0..children.len()).collect();
                    order.sort_by(|&a, &b| {
                        preds[b]
                            .mu
                            .partial_cmp(&preds[a].mu)
                            .unwrap_or(std::cmp::Ordering::Equal)
                            .then(a.cmp(&b))
                    });
                    order.truncate(cfg.m_evals);
                    let scores = order
                        .iter()
                        .map(|&i| {
                            Some(PredictedScore {
                                mu: preds[i].mu,
                                sigma_raw: preds[i].sigma,
                                sigma_cal: calibration.apply(preds[i].sigma),
                            })
                        })
                        .collect();
                    (order, scores)
                }
                (_, Some(preds)) => {
                    let inputs: Vec<AcqInput> = (0..children.len())
                        .map(|i| {
                            let sigma_cal = calibration.apply(preds[i].sigma);
                            AcqInput {
                                ei: expected_improvement(
                                    preds[i].mu,
                                    sigma_cal,
                                    f_star_before,
                                    EI_EPSILON,
                                ),
                                c_total: costs[i],
                            }
                        })
                        .collect();
                    let ranked = acquisition(&inputs, cfg.weights.alpha);
                    let order: Vec<usize> =
                        ranked.iter().take(cfg.m_evals).map(|&(i, _)| i).collect();
                    let scores = order
                        .iter()
                        .map(|&i| {
                            Some(PredictedScore {
                                mu: preds[i].mu,
                                sigma_raw: preds[i].sigma,
                                sigma_cal: calibration.apply(preds[i].sigma),
                            })
                        })
                        .collect();
                    (order, scores)
                }
                (s, None) => {
                    return Err(Error::Config(format!("strategy {s} requires a surrogate")))
                }
            };
        book_s += t_sel.elapsed().as_secs_f64();

        // true evaluations
        let t_eval = Instant::now();
        let chosen: Vec<CircuitBlueprint> =
            selected.iter().map(|&i| children[i].clone()).collect();
        let mut records = evaluate_batch(&chosen, task, &cfg, t)?;
        let eval_s = t_eval.elapsed().as_secs_f64();
        self.state.timing.vqc_eval_s += eval_s;

        let t_post = Instant::now();
        let mut hits_this_iter = 0usize;
        for (slot, record) in records.iter_mut().enumerate() {
            record.iteration = t;
            record.predicted = predicted_scores[slot];
            if record.perf >= f_star_before {
                hits_this_iter += 1;
            }
        }
        self.state.hits += hits_this_iter;
        self.state.selections += records.len();
        for (bp, record) in chosen.into_iter().zip(records) {
            self.push_entry(ArchiveEntry { blueprint: bp, record })?;
        }
        self.state.iteration = t;
        self.state.best_trace.push(self.state.f_star);
        book_s += t_post.elapsed().as_secs_f64();

        // brief surrogate refresh on the grown archive
        let t_up = Instant::now();
        self.retrain_surrogate(cfg.surrogate_update_epochs, "surrogate-update", t)?;
        let update_s = t_up.elapsed().as_secs_f64();
        self.state.timing.surrogate_update_s += update_s;
        self.state.timing.bookkeeping_s += book_s;

        let best_idx = self.state.best_by_perf().expect("non-empty archive");
        let iter_s = iter_start.elapsed().as_secs_f64();
        self.state.timing.total_s += iter_s;
        Ok(IterationRow {
            t,
            f_t: self.state.f_star,
            kendall: self.window_tau(),
            hits: hits_this_iter,
            evals_total: self.state.archive.len(),
            surrogate_infer_s: infer_s,
            surrogate_update_s: update_s,
            vqc_eval_s: eval_s,
            bookkeeping_s: book_s,
            iter_s,
            best_hash: self.state.archive[best_idx].record.circuit_hash.clone(),
            diagnostics: self.window_diagnostics(),
        })
    }

    fn run_remaining(
        &mut self,
        task: &SearchTask,
        observer: &mut dyn SearchObserver,
    ) -> Result<()> {
        let start = self.state.iteration + 1;
        for t in start..=self.config.iterations {
            let row = self.run_iteration(t, task)?;
            self.rows.push(row.clone());
            observer.on_iteration(&row);
            if self.config.checkpoint_every > 0 && t % self.config.checkpoint_every == 0 {
                observer.on_checkpoint(&self.checkpoint());
            }
        }
        Ok(())
    }

    fn finalize(&self, task: &SearchTask, test: &LabeledSet) -> Result<SearchOutcome> {
        let best_idx = self
            .state
            .best_by_validation()
            .ok_or_else(|| Error::Config("empty archive after search".into()))?;
        let best = self.state.archive[best_idx].clone();

        let seed = derive_seed(self.state.run_seed, "final-train", &[]);
        let mut final_cfg = self.config.final_train;
        final_cfg.seed = seed;
        let trainval = task.train.union(&task.val);
        let mut model = HybridModel::new(best.blueprint.clone(), seed);
        let t0 = Instant::now();
        let subset = trainval.stratified_subset(final_cfg.subset_size, seed);
        crate::vqc::train(&mut model, &subset, &final_cfg, &self.config.objective_noise)?;
        let final_train_seconds = t0.elapsed().as_secs_f64();
        let final_val_accuracy =
            crate::vqc::accuracy(&model, &task.val, &self.config.objective_noise)?;
        let test_accuracy = crate::vqc::accuracy(&model, test, &self.config.objective_noise)?;

        Ok(SearchOutcome {
            state: self.state.clone(),
            rows: self.rows.clone(),
            best,
            final_blueprint: model.trained_blueprint(),
            final_val_accuracy,
            test_accuracy,
            final_train_seconds,
        })
    }
}

impl SearchState {
    fn bump_bookkeeping(&mut self, since: Instant) {
        self.timing.bookkeeping_s += since.elapsed().as_secs_f64();
    }
}

/// Evaluate a batch of blueprints with per-slot derived seeds.
fn evaluate_batch(
    blueprints: &[CircuitBlueprint],
    task: &SearchTask,
    cfg: &SearchConfig,
    iteration: usize,
) -> Result<Vec<EvalRecord>> {
    blueprints
        .iter()
        .enumerate()
        .map(|(slot, bp)| {
            let mut train_cfg = cfg.candidate_train;
            train_cfg.seed =
                derive_seed(cfg.seed, "evaluate", &[iteration as u64, slot as u64]);
            let (record, _) = evaluate_objective(
                bp,
                task,
                &train_cfg,
                cfg.lambda,
                &cfg.penalty_caps,
                &cfg.objective_noise,
            )?;
            Ok(record)
        })
        .collect()
}

/// Run a full search (initial design, T iterations, final retrain + one
/// test-set evaluation) under the given strategy.
pub fn run_search(
    config: &SearchConfig,
    strategy: Strategy,
    task: &SearchTask,
    test: &LabeledSet,
    observer: &mut dyn SearchObserver,
) -> Result<SearchOutcome> {
    let mut ctx = LoopCtx::fresh(config.clone(), strategy, task)?;
    ctx.run_remaining(task, observer)?;
    ctx.finalize(task, test)
}

/// Continue a checkpointed run to completion; the remaining trajectory is
/// identical to the uninterrupted run with the same seed.
pub fn resume_search(
    checkpoint: SearchCheckpoint,
    task: &SearchTask,
    test: &LabeledSet,
    observer: &mut dyn SearchObserver,
) -> Result<SearchOutcome> {
    let mut ctx = LoopCtx::from_checkpoint(checkpoint)?;
    ctx.run_remaining(task, observer)?;
    ctx.finalize(task, test)
}
