//! Cost modeling and the tempered expected-improvement acquisition.
//!
//! Structural terms (total gates, two-qubit gates, CZ count, depth) and the
//! decoherence proxy D = 1 - exp(-T_total / T2) are min-max normalized
//! within the candidate batch, combined into a weighted base cost, and the
//! acquisition is EI * exp(-alpha * C_total). Mapped-cost routing is
//! disabled, so C_total = C_base.

use serde::{Deserialize, Serialize};

use crate::circuit::ComplexitySummary;

pub const MINMAX_EPSILON: f64 = 1e-8;
pub const EI_EPSILON: f64 = 1e-9;

/// Weights of the base-cost terms plus the tempering strength alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub w_total: f64,
    pub w_2q: f64,
    pub w_cz: f64,
    pub w_depth: f64,
    pub w_decoh: f64,
    pub alpha: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { w_total: 0.15, w_2q: 0.35, w_cz: 0.15, w_depth: 0.35, w_decoh: 0.0, alpha: 0.5 }
    }
}

impl CostWeights {
    pub fn validate(&self) -> crate::error::Result<()> {
        for (name, w) in [
            ("w_total", self.w_total),
            ("w_2q", self.w_2q),
            ("w_cz", self.w_cz),
            ("w_depth", self.w_depth),
            ("w_decoh", self.w_decoh),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(crate::error::Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(crate::error::Error::Config("alpha must be positive".into()));
        }
        Ok(())
    }
}

/// Per-candidate raw cost terms before batch normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    pub total: f64,
    pub two_q: f64,
    pub cz: f64,
    pub depth: f64,
    pub decoh: f64,
}

impl CostTerms {
    pub fn from_summary(summary: &ComplexitySummary, decoh: f64) -> Self {
        CostTerms {
            total: summary.total_gates as f64,
            two_q: summary.two_qubit_gates as f64,
            cz: summary.cz_count as f64,
            depth: summary.depth as f64,
            decoh,
        }
    }
}

/// Decoherence proxy: total gate time against T2.
/// `T_total = n_1q t_1q + n_2q t_2q` (ns), `D = 1 - exp(-T_total / T2)`.
pub fn decoherence_proxy(
    summary: &ComplexitySummary,
    t_1q_ns: f64,
    t_2q_ns: f64,
    t2_us: f64,
) -> f64 {
    let t_total_us = (summary.n_1q as f64 * t_1q_ns + summary.n_2q as f64 * t_2q_ns) * 1e-3;
    1.0 - (-t_total_us / t2_us).exp()
}

fn minmax(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().map(|v| (v - lo) / (hi - lo + MINMAX_EPSILON)).collect()
}

/// Batch-normalized weighted base cost, one value per candidate. A
/// degenerate batch (all candidates identical on a term) contributes zero
/// for that term.
pub fn base_cost(batch: &[CostTerms], weights: &CostWeights) -> Vec<f64> {
    if batch.is_empty() {
        return Vec::new();
    }
    let totals = minmax(&batch.iter().map(|c| c.total).collect::<Vec<_>>());
    let two_qs = minmax(&batch.iter().map(|c| c.two_q).collect::<Vec<_>>());
    let czs = minmax(&batch.iter().map(|c| c.cz).collect::<Vec<_>>());
    let depths = minmax(&batch.iter().map(|c| c.depth).collect::<Vec<_>>());
    let decohs = minmax(&batch.iter().map(|c| c.decoh).collect::<Vec<_>>());
    (0..batch.len())
        .map(|i| {
            weights.w_total * totals[i]
                + weights.w_2q * two_qs[i]
                + weights.w_cz * czs[i]
                + weights.w_depth * depths[i]
                + weights.w_decoh * decohs[i]
        })
        .collect()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal PDF.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement over the incumbent best `f_star`:
/// `(mu - f*) Phi(z) + sigma phi(z)` with `z = (mu - f*) / (sigma + eps)`,
/// clamped at zero.
pub fn expected_improvement(mu: f64, sigma: f64, f_star: f64, eps: f64) -> f64 {
    let diff = mu - f_star;
    let z = diff / (sigma + eps);
    (diff * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

/// One candidate's scores entering acquisition ranking.
#[derive(Debug, Clone, Copy)]
pub struct AcqInput {
    pub ei: f64,
    pub c_total: f64,
}

/// Tempered acquisition `ACQ = EI * exp(-alpha C_total)`, ranked
/// descending; ties break toward lower cost, then lower candidate index.
/// Returns `(candidate index, acq value)` in rank order.
pub fn acquisition(candidates: &[AcqInput], alpha: f64) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.ei * (-alpha * c.c_total).exp()))
        .collect();
    scored.sort_by(|&(i, a), &(j, b)| {
        b.partial_cmp(&a)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                candidates[i]
                    .c_total
                    .partial_cmp(&candidates[j].c_total)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(i.cmp(&j))
    });
    scored
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoherence_proxy_scalar_example() {
        // 10 one-qubit + 5 two-qubit gates at 300 ns, T2 = 120 us:
        // T_total = 4.5 us, D = 1 - exp(-0.0375)
        let s = ComplexitySummary {
            total_gates: 15,
            two_qubit_gates: 5,
            cz_count: 0,
            depth: 15,
            n_1q: 10,
            n_2q: 5,
        };
        let d = decoherence_proxy(&s, 300.0, 300.0, 120.0);
        assert!((d - (1.0 - (-0.0375f64).exp())).abs() < 1e-15);
        assert!((d - 0.0368).abs() < 1e-4);

        let empty = ComplexitySummary {
            total_gates: 0,
            two_qubit_gates: 0,
            cz_count: 0,
            depth: 0,
            n_1q: 0,
            n_2q: 0,
        };
        assert_eq!(decoherence_proxy(&empty, 300.0, 300.0, 120.0), 0.0);
    }

    #[test]
    fn decoherence_proxy_monotone() {
        let mut prev = 0.0;
        for n in 1..20usize {
            let s = ComplexitySummary {
                total_gates: n,
                two_qubit_gates: 0,
                cz_count: 0,
                depth: n,
                n_1q: n,
                n_2q: 0,
            };
            let d = decoherence_proxy(&s, 300.0, 300.0, 100.0);
            assert!(d > prev && d < 1.0);
            prev = d;
        }
    }

    #[test]
    fn base_cost_degenerate_batch() {
        let c = CostTerms { total: 12.0, two_q: 4.0, cz: 2.0, depth: 6.0, decoh: 0.01 };
        let costs = base_cost(&[c, c, c], &CostWeights::default());
        assert_eq!(costs, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn base_cost_endpoints() {
        let light = CostTerms { total: 5.0, two_q: 1.0, cz: 0.0, depth: 3.0, decoh: 0.005 };
        let heavy = CostTerms { total: 20.0, two_q: 9.0, cz: 4.0, depth: 15.0, decoh: 0.02 };
        let w = CostWeights { w_decoh: 0.1, ..CostWeights::default() };
        let costs = base_cost(&[light, heavy], &w);
        assert!(costs[0].abs() < 1e-9, "lighter candidate costs ~0");
        let sum_w = w.w_total + w.w_2q + w.w_cz + w.w_depth + w.w_decoh;
        assert!((costs[1] - sum_w).abs() < 1e-6, "heavier candidate ~ sum of weights");
    }

    #[test]
    fn base_cost_terms_stay_in_unit_interval() {
        use crate::rng::derive_rng;
        use rand::RngExt;
        let mut rng = derive_rng(0, "cost", &[]);
        for _ in 0..200 {
            let n = rng.random_range(1..12usize);
            let batch: Vec<CostTerms> = (0..n)
                .map(|_| CostTerms {
                    total: rng.random_range(0.0..100.0),
                    two_q: rng.random_range(0.0..40.0),
                    cz: rng.random_range(0.0..20.0),
                    depth: rng.random_range(0.0..60.0),
                    decoh: rng.random_range(0.0..1.0),
                })
                .collect();
            let unit = CostWeights {
                w_total: 1.0,
                w_2q: 0.0,
                w_cz: 0.0,
                w_depth: 0.0,
                w_decoh: 0.0,
                alpha: 0.5,
            };
            for c in base_cost(&batch, &unit) {
                assert!((0.0..=1.0).contains(&c), "normalized term {c} outside [0,1]");
            }
        }
    }

    #[test]
    fn ei_at_incumbent_mean() {
        // mu = f*, sigma = 0.1: EI = sigma * phi(0) = 0.1 * 0.39894...
        let ei = expected_improvement(0.8, 0.1, 0.8, EI_EPSILON);
        assert!((ei - 0.1 * normal_pdf(0.0)).abs() < 1e-12);
        assert!((ei - 0.039894).abs() < 1e-6);
    }

    #[test]
    fn ei_vanishes_without_upside_or_spread() {
        let ei = expected_improvement(0.5, 0.0, 0.9, EI_EPSILON);
        assert!(ei >= 0.0 && ei < 1e-6);
    }

    #[test]
    fn ei_monotone_grid() {
        // nondecreasing in sigma for mu <= f*, increasing in mu
        let f_star = 0.7;
        for &mu in &[0.3, 0.5, 0.7] {
            let mut prev = -1.0;
            for i in 0..20 {
                let sigma = i as f64 * 0.05;
                let ei = expected_improvement(mu, sigma, f_star, EI_EPSILON);
                assert!(ei >= prev - 1e-15, "sigma monotonicity at mu={mu}");
                prev = ei;
            }
        }
        let mut prev = -1.0;
        for i in 0..30 {
            let mu = 0.3 + i as f64 * 0.02;
            let ei = expected_improvement(mu, 0.05, f_star, EI_EPSILON);
            assert!(ei > prev, "mu monotonicity");
            prev = ei;
        }
    }

    #[test]
    fn acquisition_ranking_rules() {
        // alpha = 0 reduces to pure EI order
        let inputs = vec![
            AcqInput { ei: 0.2, c_total: 0.9 },
            AcqInput { ei: 0.5, c_total: 0.1 },
            AcqInput { ei: 0.3, c_total: 0.5 },
        ];
        let ranked = acquisition(&inputs, 1e-12);
        let order: Vec<usize> = ranked.iter().map(|&(i, _)| i).collect();
        assert_eq!(order, vec![1, 2, 0]);

        // ACQ <= EI for alpha > 0
        for &(i, acq) in &acquisition(&inputs, 0.7) {
            assert!(acq <= inputs[i].ei + 1e-15);
        }

        // equal EI: lower cost wins
        let tied = vec![
            AcqInput { ei: 0.4, c_total: 0.8 },
            AcqInput { ei: 0.4, c_total: 0.2 },
        ];
        let ranked = acquisition(&tied, 0.0f64.max(1e-18));
        assert_eq!(ranked[0].0, 1);
    }

    #[test]
    fn acquisition_order_invariant_under_ei_rescaling() {
        use crate::rng::derive_rng;
        use rand::RngExt;
        let mut rng = derive_rng(1, "acq", &[]);
        for _ in 0..50 {
            let inputs: Vec<AcqInput> = (0..8)
                .map(|_| AcqInput {
                    ei: rng.random_range(0.0..1.0),
                    c_total: rng.random_range(0.0..1.0),
                })
                .collect();
            let scale = rng.random_range(0.1..10.0);
            let scaled: Vec<AcqInput> =
                inputs.iter().map(|c| AcqInput { ei: c.ei * scale, ..*c }).collect();
            let a: Vec<usize> = acquisition(&inputs, 0.5).iter().map(|&(i, _)| i).collect();
            let b: Vec<usize> = acquisition(&scaled, 0.5).iter().map(|&(i, _)| i).collect();
            assert_eq!(a, b);
        }
    }
}
