//! Post-hoc reporting: Pareto fronts in the (cost, performance) plane,
//! convergence and sample-efficiency metrics, per-stage timing breakdown,
//! and noise-robustness sweeps over (T1, T2) grids with their summary
//! metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitBlueprint;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::search::{hit_rate, SearchState, StageTotals};
use crate::sim::noise::{noise_probs, NoiseConfig, NoiseMode};
use crate::vqc::{accuracy, train, HybridModel, SearchTask, TrainConfig};

/// One candidate in the cost/performance plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub cost: f64,
    pub perf: f64,
    /// Canonical hash of the circuit behind the point.
    pub circuit_hash: String,
}

/// Which structural metric supplies the Pareto cost axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParetoCostAxis {
    TotalGates,
    Depth,
    TwoQubitGates,
}

impl Default for ParetoCostAxis {
    fn default() -> Self {
        ParetoCostAxis::TotalGates
    }
}

/// `a` dominates `b` iff cost_a <= cost_b and perf_a >= perf_b with at
/// least one strict inequality. Returns the non-dominated subset sorted by
/// (cost, -perf); exact duplicates survive (neither strictly dominates).
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let dominates = |a: &ParetoPoint, b: &ParetoPoint| {
        a.cost <= b.cost && a.perf >= b.perf && (a.cost < b.cost || a.perf > b.perf)
    };
    let mut front: Vec<ParetoPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect();
    front.sort_by(|a, b| {
        a.cost
            .partial_cmp(&b.cost)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.perf.partial_cmp(&a.perf).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.circuit_hash.cmp(&b.circuit_hash))
    });
    front
}

/// Extract Pareto points from a search archive.
pub fn archive_pareto_points(state: &SearchState, axis: ParetoCostAxis) -> Vec<ParetoPoint> {
    state
        .archive
        .iter()
        .map(|e| {
            let cost = match axis {
                ParetoCostAxis::TotalGates => e.record.complexity.total_gates as f64,
                ParetoCostAxis::Depth => e.record.complexity.depth as f64,
                ParetoCostAxis::TwoQubitGates => e.record.complexity.two_qubit_gates as f64,
            };
            ParetoPoint { cost, perf: e.record.perf, circuit_hash: e.record.circuit_hash.clone() }
        })
        .collect()
}

/// Convergence summary of a best-so-far trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceMetrics {
    /// First 1-based iteration with f_t >= target; absent if never reached.
    pub tau_target: Option<usize>,
    /// Mean of the iteration trace: (1/T) sum f_t.
    pub auc: f64,
    /// Baseline time-to-target divided by ours; absent unless both reach it.
    pub speedup: Option<f64>,
}

/// Evaluate tau(target) and AUC on `trace` (f_1..f_T, the per-iteration
/// best-so-far values). `wall` optionally maps each iteration to cumulative
/// wall-clock seconds; paired with `baseline`, it yields the speedup.
pub fn convergence_metrics(
    trace: &[f64],
    target: f64,
    wall: Option<&[f64]>,
    baseline: Option<(&[f64], &[f64])>,
) -> Result<ConvergenceMetrics> {
    if trace.is_empty() {
        return Err(Error::Data("empty best-so-far trace".into()));
    }
    let tau_target = trace.iter().position(|&f| f >= target).map(|i| i + 1);
    let auc = trace.iter().sum::<f64>() / trace.len() as f64;
    let time_to = |tr: &[f64], w: &[f64]| -> Option<f64> {
        tr.iter().position(|&f| f >= target).and_then(|i| w.get(i).copied())
    };
    let speedup = match (wall, baseline) {
        (Some(w), Some((btr, bw))) => {
            let ours = tau_target.and_then(|i| w.get(i - 1).copied());
            match (time_to(btr, bw), ours) {
                (Some(bt), Some(ot)) if ot > 0.0 => Some(bt / ot),
                _ => None,
            }
        }
        _ => None,
    };
    Ok(ConvergenceMetrics { tau_target, auc, speedup })
}

/// Per-stage means and totals plus candidate throughput.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub iterations: usize,
    pub totals: StageTotals,
    pub mean_iteration_s: f64,
    pub mean_surrogate_infer_s: f64,
    pub mean_surrogate_update_s: f64,
    pub mean_vqc_eval_s: f64,
    pub mean_bookkeeping_s: f64,
    /// Wall time not attributed to any stage.
    pub unattributed_s: f64,
    /// Candidates scored per second: b / t_iter.
    pub throughput_cands_per_s: Option<f64>,
    pub hit_rate: Option<f64>,
}

/// Aggregate stage accumulators into the per-iteration decomposition.
pub fn timing_report(state: &SearchState, n_cands: usize) -> TimingReport {
    let t = state.iteration;
    let totals = state.timing;
    let attributed = totals.surrogate_infer_s
        + totals.surrogate_update_s
        + totals.vqc_eval_s
        + totals.bookkeeping_s;
    let mean = |x: f64| if t > 0 { x / t as f64 } else { 0.0 };
    let mean_iteration_s = mean(totals.total_s);
    TimingReport {
        iterations: t,
        totals,
        mean_iteration_s,
        mean_surrogate_infer_s: mean(totals.surrogate_infer_s),
        mean_surrogate_update_s: mean(totals.surrogate_update_s),
        mean_vqc_eval_s: mean(totals.vqc_eval_s),
        mean_bookkeeping_s: mean(totals.bookkeeping_s),
        unattributed_s: (totals.total_s - attributed).max(0.0),
        throughput_cands_per_s: (t > 0 && mean_iteration_s > 0.0)
            .then(|| n_cands as f64 / mean_iteration_s),
        hit_rate: hit_rate(state),
    }
}

/// The (T1, T2) grid of a robustness sweep, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub t1_us: Vec<f64>,
    pub t2_us: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            t1_us: vec![20.0, 50.0, 100.0, 200.0, 300.0, 400.0],
            t2_us: vec![30.0, 60.0, 120.0, 240.0, 360.0, 480.0],
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t1_us: f64,
    pub t2_us: f64,
    /// AD/PD probabilities at the one- and two-qubit gate durations.
    pub p_ad_1q: f64,
    pub p_pd_1q: f64,
    pub p_ad_2q: f64,
    pub p_pd_2q: f64,
    pub accuracy: f64,
}

/// Full sweep output: evaluated points, skipped invalid combinations, the
/// noiseless reference accuracy, and the configuration snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub channel: NoiseMode,
    pub grid: Vec<SweepPoint>,
    /// (T1, T2) pairs skipped because T2 > 2 T1.
    pub skipped: Vec<(f64, f64)>,
    pub ideal_accuracy: f64,
    pub base_noise: NoiseConfig,
    pub retrain: TrainConfig,
}

/// Reduced retraining budget for sweeps: m = 1000 samples, 5 epochs,
/// batch 128.
pub fn sweep_retrain_default() -> TrainConfig {
    TrainConfig { epochs: 5, batch_size: 128, subset_size: 1000, learning_rate: 0.05, seed: 0 }
}

/// For each valid (T1, T2) point: configure the channel, retrain the hybrid
/// model on a stratified subset with the reduced budget, and record the
/// validation accuracy. Invalid points (T2 > 2 T1) are skipped and flagged.
/// Grid points run in parallel with per-point derived seeds; the noiseless
/// reference uses the same budget.
pub fn robustness_sweep(
    blueprint: &CircuitBlueprint,
    grid: &SweepGrid,
    channel: NoiseMode,
    base_noise: &NoiseConfig,
    retrain: &TrainConfig,
    task: &SearchTask,
    seed: u64,
) -> Result<SweepResult> {
    crate::circuit::ensure_valid(blueprint)?;
    retrain.validate()?;
    let mut valid = Vec::new();
    let mut skipped = Vec::new();
    for &t1 in &grid.t1_us {
        for &t2 in &grid.t2_us {
            if t2 > 2.0 * t1 {
                skipped.push((t1, t2));
            } else {
                valid.push((t1, t2));
            }
        }
    }

    let eval_at = |noise: &NoiseConfig, point_seed: u64| -> Result<f64> {
        let mut cfg = *retrain;
        cfg.seed = point_seed;
        let mut model = HybridModel::new(blueprint.clone(), point_seed);
        let subset = task.train.stratified_subset(cfg.subset_size, point_seed);
        train(&mut model, &subset, &cfg, noise)?;
        accuracy(&model, &task.val, noise)
    };

    // the sweep reuses one seed so grid points differ only in noise
    let point_seed = derive_seed(seed, "sweep-point", &[]);
    let mut ideal = *base_noise;
    ideal.mode = NoiseMode::None;
    ideal.p_ro = 0.0;
    let ideal_accuracy = eval_at(&ideal, point_seed)?;

    let points: Vec<Result<SweepPoint>> = valid
        .par_iter()
        .map(|&(t1, t2)| {
            let mut noise = *base_noise;
            noise.mode = channel;
            noise.t1_us = t1;
            noise.t2_us = t2;
            noise.validate()?;
            let (p_ad_1q, p_pd_1q) = noise_probs(noise.t_1q_ns * 1e-3, t1, t2)?;
            let (p_ad_2q, p_pd_2q) = noise_probs(noise.t_2q_ns * 1e-3, t1, t2)?;
            let accuracy = eval_at(&noise, point_seed)?;
            Ok(SweepPoint { t1_us: t1, t2_us: t2, p_ad_1q, p_pd_1q, p_ad_2q, p_pd_2q, accuracy })
        })
        .collect();
    let grid_points: Vec<SweepPoint> = points.into_iter().collect::<Result<_>>()?;

    Ok(SweepResult {
        channel,
        grid: grid_points,
        skipped,
        ideal_accuracy,
        base_noise: *base_noise,
        retrain: *retrain,
    })
}

/// Grid-level robustness summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessMetrics {
    /// Mean accuracy over the grid.
    pub average: f64,
    /// Worst grid accuracy.
    pub worst: f64,
    /// Fraction of grid points with accuracy >= gamma, per threshold.
    pub contour_area: Vec<(f64, f64)>,
    /// Accuracy drop at the representative point, when it is on the grid.
    pub degradation: Option<f64>,
    pub representative: (f64, f64),
}

pub const DEFAULT_GAMMAS: [f64; 2] = [0.8, 0.9];
pub const DEFAULT_REPRESENTATIVE_US: (f64, f64) = (100.0, 120.0);

/// Average/worst accuracy, gamma-contour areas, and the relative
/// degradation at the representative (T1, T2) point.
pub fn robustness_metrics(
    sweep: &SweepResult,
    gammas: &[f64],
    representative: (f64, f64),
) -> Result<RobustnessMetrics> {
    if sweep.grid.is_empty() {
        return Err(Error::Data("empty sweep grid".into()));
    }
    let n = sweep.grid.len() as f64;
    let average = sweep.grid.iter().map(|p| p.accuracy).sum::<f64>() / n;
    let worst = sweep.grid.iter().map(|p| p.accuracy).fold(f64::INFINITY, f64::min);
    let contour_area = gammas
        .iter()
        .map(|&g| {
            let frac = sweep.grid.iter().filter(|p| p.accuracy >= g).count() as f64 / n;
            (g, frac)
        })
        .collect();
    let degradation = sweep
        .grid
        .iter()
        .find(|p| p.t1_us == representative.0 && p.t2_us == representative.1)
        .map(|p| sweep.ideal_accuracy - p.accuracy);
    Ok(RobustnessMetrics { average, worst, contour_area, degradation, representative })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(cost: f64, perf: f64) -> ParetoPoint {
        ParetoPoint { cost, perf, circuit_hash: format!("{cost}:{perf}") }
    }

    #[test]
    fn pareto_single_and_duplicates() {
        let single = vec![pt(3.0, 0.5)];
        assert_eq!(pareto_front(&single), single);

        // exact duplicates: neither strictly dominates, both retained
        let dups = vec![pt(2.0, 0.9), pt(2.0, 0.9)];
        assert_eq!(pareto_front(&dups).len(), 2);
    }

    #[test]
    fn pareto_three_point_example() {
        let pts = vec![pt(1.0, 0.9), pt(2.0, 0.95), pt(3.0, 0.93)];
        let front = pareto_front(&pts);
        assert_eq!(front.len(), 2);
        assert_eq!((front[0].cost, front[0].perf), (1.0, 0.9));
        assert_eq!((front[1].cost, front[1].perf), (2.0, 0.95));
    }

    #[test]
    fn pareto_matches_quadratic_oracle() {
        use crate::rng::derive_rng;
        use rand::RngExt;
        let mut rng = derive_rng(0, "pareto", &[]);
        for _ in 0..30 {
            let n = rng.random_range(1..200usize);
            let pts: Vec<ParetoPoint> = (0..n)
                .map(|i| ParetoPoint {
                    cost: rng.random_range(0.0..10.0f64).round(),
                    perf: rng.random_range(0.0..1.0f64),
                    circuit_hash: format!("c{i}"),
                })
                .collect();
            let front = pareto_front(&pts);
            // oracle: explicit dominance scan
            let dominated = |p: &ParetoPoint| {
                pts.iter().any(|q| {
                    q.cost <= p.cost && q.perf >= p.perf && (q.cost < p.cost || q.perf > p.perf)
                })
            };
            for p in &pts {
                let in_front = front.iter().any(|f| f.circuit_hash == p.circuit_hash);
                assert_eq!(in_front, !dominated(p));
            }
            // mutual non-dominance inside the front
            for a in &front {
                for b in &front {
                    if a.circuit_hash != b.circuit_hash {
                        assert!(
                            !(a.cost <= b.cost
                                && a.perf >= b.perf
                                && (a.cost < b.cost || a.perf > b.perf))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn convergence_basic() {
        let m = convergence_metrics(&[0.5, 0.7, 0.9], 0.8, None, None).unwrap();
        assert_eq!(m.tau_target, Some(3));
        assert!((m.auc - 0.7).abs() < 1e-12);

        let m = convergence_metrics(&[0.9, 0.9], 0.9, None, None).unwrap();
        assert_eq!(m.tau_target, Some(1));
        assert!((m.auc - 0.9).abs() < 1e-12);

        let m = convergence_metrics(&[0.5, 0.6], 0.99, None, None).unwrap();
        assert_eq!(m.tau_target, None);
        assert!(convergence_metrics(&[], 0.5, None, None).is_err());
    }

    #[test]
    fn convergence_speedup() {
        let ours = [0.5, 0.85, 0.9];
        let wall = [1.0, 2.0, 3.0];
        let baseline_trace = [0.4, 0.5, 0.86];
        let baseline_wall = [1.0, 2.0, 8.0];
        let m = convergence_metrics(&ours, 0.8, Some(&wall), Some((&baseline_trace, &baseline_wall)))
            .unwrap();
        assert_eq!(m.tau_target, Some(2));
        assert!((m.speedup.unwrap() - 4.0).abs() < 1e-12);

        // baseline never reaches the target: speedup absent
        let never = [0.1, 0.2, 0.3];
        let m = convergence_metrics(&ours, 0.8, Some(&wall), Some((&never, &baseline_wall))).unwrap();
        assert_eq!(m.speedup, None);
    }

    #[test]
    fn auc_of_constant_extension_converges_to_constant() {
        let mut trace = vec![0.2, 0.9];
        for _ in 0..500 {
            trace.push(0.9);
        }
        let m = convergence_metrics(&trace, 2.0, None, None).unwrap();
        assert!((m.auc - 0.9).abs() < 0.002);
    }

    #[test]
    fn contour_area_monotone_in_gamma() {
        let sweep = SweepResult {
            channel: NoiseMode::Thermal,
            grid: vec![
                SweepPoint { t1_us: 20.0, t2_us: 30.0, p_ad_1q: 0.0, p_pd_1q: 0.0, p_ad_2q: 0.0, p_pd_2q: 0.0, accuracy: 0.7 },
                SweepPoint { t1_us: 50.0, t2_us: 30.0, p_ad_1q: 0.0, p_pd_1q: 0.0, p_ad_2q: 0.0, p_pd_2q: 0.0, accuracy: 0.9 },
            ],
            skipped: vec![],
            ideal_accuracy: 0.9,
            base_noise: NoiseConfig::none(),
            retrain: sweep_retrain_default(),
        };
        let m = robustness_metrics(&sweep, &[0.5, 0.8, 0.95], (50.0, 30.0)).unwrap();
        assert!((m.average - 0.8).abs() < 1e-12);
        assert_eq!(m.worst, 0.7);
        let areas: Vec<f64> = m.contour_area.iter().map(|&(_, a)| a).collect();
        assert_eq!(areas, vec![1.0, 0.5, 0.0]);
        assert!(areas.windows(2).all(|w| w[1] <= w[0]));
        assert!((m.degradation.unwrap() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn all_boundary_accuracies_count() {
        let sweep = SweepResult {
            channel: NoiseMode::Thermal,
            grid: vec![SweepPoint {
                t1_us: 100.0,
                t2_us: 120.0,
                p_ad_1q: 0.0,
                p_pd_1q: 0.0,
                p_ad_2q: 0.0,
                p_pd_2q: 0.0,
                accuracy: 0.9,
            }],
            skipped: vec![],
            ideal_accuracy: 0.9,
            base_noise: NoiseConfig::none(),
            retrain: sweep_retrain_default(),
        };
        let m = robustness_metrics(&sweep, &[0.8, 0.9], (100.0, 120.0)).unwrap();
        assert_eq!(m.contour_area, vec![(0.8, 1.0), (0.9, 1.0)]);
    }

    #[test]
    fn table_grid_invalid_point_count() {
        // T1 x T2 default grid: 36 combinations, 13 violate T2 <= 2 T1
        let grid = SweepGrid::default();
        let mut invalid = 0;
        for &t1 in &grid.t1_us {
            for &t2 in &grid.t2_us {
                if t2 > 2.0 * t1 {
                    invalid += 1;
                }
            }
        }
        assert_eq!(invalid, 13);
        assert_eq!(grid.t1_us.len() * grid.t2_us.len() - invalid, 23);
    }

    #[test]
    fn timing_report_accounts_stages() {
        let state = SearchState {
            archive: vec![],
            f_star: 0.0,
            iteration: 4,
            best_trace: vec![],
            timing: StageTotals {
                surrogate_infer_s: 1.0,
                surrogate_update_s: 2.0,
                vqc_eval_s: 4.0,
                bookkeeping_s: 0.5,
                total_s: 8.0,
            },
            hits: 2,
            selections: 8,
            dedup_overflows: 0,
            run_seed: 0,
        };
        let r = timing_report(&state, 5);
        assert_eq!(r.iterations, 4);
        assert!((r.mean_iteration_s - 2.0).abs() < 1e-12);
        assert!((r.unattributed_s - 0.5).abs() < 1e-12);
        assert!((r.throughput_cands_per_s.unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(r.hit_rate, Some(0.25));
    }
}
