//! Surrogate quality metrics: affine uncertainty calibration, Gaussian
//! point/interval diagnostics (MSE/MAE/R2, NLL, coverage, UCE), and the
//! rank correlations used for ranking-fidelity tracking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal probability mass inside one standard deviation of a Gaussian.
pub const ONE_SIGMA_MASS: f64 = 0.6827;

const SIGMA_FLOOR: f64 = 1e-6;
const SCALE_FLOOR: f64 = 1e-3;

/// Affine recalibration sigma' = a * sigma + b, floored at 1e-6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyCalibration {
    pub a: f64,
    pub b: f64,
}

impl Default for UncertaintyCalibration {
    fn default() -> Self {
        UncertaintyCalibration { a: 1.0, b: 0.0 }
    }
}

impl UncertaintyCalibration {
    pub fn apply(&self, sigma: f64) -> f64 {
        (self.a * sigma + self.b).max(SIGMA_FLOOR)
    }
}

/// Least-squares fit of |residual| against predicted sigma. Needs at least
/// 3 points; a degenerate design (all sigmas equal) falls back to a = 1,
/// b = mean|r| - mean(sigma). The slope is clamped to >= 1e-3.
pub fn calibrate(sigmas: &[f64], residuals: &[f64]) -> Result<UncertaintyCalibration> {
    if sigmas.len() != residuals.len() {
        return Err(Error::Dimension("sigma/residual length mismatch".into()));
    }
    if sigmas.len() < 3 {
        return Err(Error::Data(format!("calibration needs >= 3 points, got {}", sigmas.len())));
    }
    let n = sigmas.len() as f64;
    let abs_res: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    let mean_s = sigmas.iter().sum::<f64>() / n;
    let mean_r = abs_res.iter().sum::<f64>() / n;
    let var_s = sigmas.iter().map(|s| (s - mean_s).powi(2)).sum::<f64>() / n;
    if var_s < 1e-18 {
        return Ok(UncertaintyCalibration { a: 1.0, b: mean_r - mean_s });
    }
    let cov = sigmas
        .iter()
        .zip(&abs_res)
        .map(|(s, r)| (s - mean_s) * (r - mean_r))
        .sum::<f64>()
        / n;
    let a = (cov / var_s).max(SCALE_FLOOR);
    let b = mean_r - a * mean_s;
    Ok(UncertaintyCalibration { a, b })
}

/// Point and interval diagnostics of a Gaussian predictive model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mse: f64,
    pub mae: f64,
    /// Absent when the targets have zero variance.
    pub r2: Option<f64>,
    pub nll: f64,
    pub cov1: f64,
    pub cov2: f64,
    pub uce: f64,
}

/// Evaluate MSE/MAE/R2, mean Gaussian NLL, CovAtK for k in {1, 2}, and the
/// uncertainty calibration error over `bins` equal-count bins ordered by
/// predicted sigma. Boundary hits |z| = k count as covered.
pub fn diagnostics_binned(
    mu: &[f64],
    sigma: &[f64],
    y: &[f64],
    bins: usize,
) -> Result<Diagnostics> {
    let n = mu.len();
    if n != sigma.len() || n != y.len() {
        return Err(Error::Dimension("diagnostics input length mismatch".into()));
    }
    if n < 2 {
        return Err(Error::Data("diagnostics need at least 2 points".into()));
    }
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Parameter("sigmas must be strictly positive".into()));
    }
    let nf = n as f64;
    let mse = mu.iter().zip(y).map(|(m, t)| (m - t).powi(2)).sum::<f64>() / nf;
    let mae = mu.iter().zip(y).map(|(m, t)| (m - t).abs()).sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;
    let sst = y.iter().map(|t| (t - y_mean).powi(2)).sum::<f64>();
    let r2 = if sst > 0.0 { Some(1.0 - mse * nf / sst) } else { None };

    let nll = mu
        .iter()
        .zip(sigma)
        .zip(y)
        .map(|((m, s), t)| {
            0.5 * (2.0 * std::f64::consts::PI * s * s).ln() + (t - m).powi(2) / (2.0 * s * s)
        })
        .sum::<f64>()
        / nf;

    let covered = |k: f64| {
        mu.iter()
            .zip(sigma)
            .zip(y)
            .filter(|((m, s), t)| (*t - *m).abs() <= k * **s)
            .count() as f64
            / nf
    };
    let cov1 = covered(1.0);
    let cov2 = covered(2.0);

    // equal-count bins by predicted sigma; each bin contributes its share
    // of |empirical 1-sigma coverage - nominal mass|
    let bins = bins.max(1).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[i].partial_cmp(&sigma[j]).unwrap().then(i.cmp(&j)));
    let base = n / bins;
    let extra = n % bins;
    let mut uce = 0.0;
    let mut pos = 0usize;
    for b in 0..bins {
        let size = base + usize::from(b < extra);
        if size == 0 {
            continue;
        }
        let members = &order[pos..pos + size];
        pos += size;
        let inside = members
            .iter()
            .filter(|&&i| ((y[i] - mu[i]) / sigma[i]).abs() <= 1.0)
            .count() as f64;
        uce += (size as f64 / nf) * (inside / size as f64 - ONE_SIGMA_MASS).abs();
    }
    Ok(Diagnostics { mse, mae, r2, nll, cov1, cov2, uce })
}

/// [`diagnostics_binned`] with the default 10 bins.
pub fn diagnostics(mu: &[f64], sigma: &[f64], y: &[f64]) -> Result<Diagnostics> {
    diagnostics_binned(mu, sigma, y, 10)
}

/// Kendall tau-a: (concordant - discordant) / C(n, 2); tied pairs add 0 to
/// the numerator. Direct O(n^2) evaluation.
pub fn kendall_tau(pred: &[f64], y: &[f64]) -> Result<f64> {
    let n = pred.len();
    if n != y.len() {
        return Err(Error::Dimension("rank input length mismatch".into()));
    }
    if n < 2 {
        return Err(Error::Data("kendall tau needs at least 2 points".into()));
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (pred[i] - pred[j]) * (y[i] - y[j]);
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((concordant - discordant) as f64 / pairs)
}

/// Average ranks (1-based); ties share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap().then(i.cmp(&j)));
    let mut ranks = vec![0.0; n];
    let mut pos = 0usize;
    while pos < n {
        let mut end = pos + 1;
        while end < n && values[order[end]] == values[order[pos]] {
            end += 1;
        }
        let mean_rank = (pos + 1 + end) as f64 / 2.0;
        for &idx in &order[pos..end] {
            ranks[idx] = mean_rank;
        }
        pos = end;
    }
    ranks
}

/// Spearman rho on average ranks: 1 - 6 sum d^2 / (n (n^2 - 1)).
pub fn spearman_rho(pred: &[f64], y: &[f64]) -> Result<f64> {
    let n = pred.len();
    if n != y.len() {
        return Err(Error::Dimension("rank input length mismatch".into()));
    }
    if n < 2 {
        return Err(Error::Data("spearman rho needs at least 2 points".into()));
    }
    let rp = average_ranks(pred);
    let ry = average_ranks(y);
    let d2: f64 = rp.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    let nf = n as f64;
    Ok(1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kendall_boundary_cases() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[5.0, 4.0, 3.0]).unwrap(), -1.0);
        // pred (1,2,3,4), y (1,3,2,4): 5 concordant, 1 discordant
        let tau = kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((tau - 4.0 / 6.0).abs() < 1e-15);
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap(), 1.0);
        assert_eq!(spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        // 4-point example: d^2 = (0,1,1,0) -> rho = 1 - 12/60 = 0.8
        let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rank_metrics_invariant_under_monotone_transforms() {
        let pred = [0.3, 1.9, -0.5, 0.8, 2.2, 0.1];
        let y = [4.0, 1.0, 3.0, 2.0, 5.0, 0.5];
        let tau = kendall_tau(&pred, &y).unwrap();
        let rho = spearman_rho(&pred, &y).unwrap();
        let pred_t: Vec<f64> = pred.iter().map(|x| (3.0 * x).exp()).collect();
        let y_t: Vec<f64> = y.iter().map(|x| x.powi(3) + 7.0).collect();
        assert!((kendall_tau(&pred_t, &y_t).unwrap() - tau).abs() < 1e-15);
        assert!((spearman_rho(&pred_t, &y_t).unwrap() - rho).abs() < 1e-12);
    }

    #[test]
    fn average_ranks_with_ties() {
        let r = average_ranks(&[10.0, 20.0, 20.0, 30.0]);
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn calibration_exact_linear_relation() {
        let sig = [0.1, 0.2, 0.3, 0.4];
        let res: Vec<f64> = sig.iter().map(|s| 2.0 * s).collect();
        let cal = calibrate(&sig, &res).unwrap();
        assert!((cal.a - 2.0).abs() < 1e-12);
        assert!(cal.b.abs() < 1e-12);
        assert!((cal.apply(0.25) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn calibration_degenerate_fallback() {
        let sig = [0.2, 0.2, 0.2, 0.2];
        let res = [0.5, -0.3, 0.4, 0.2];
        let cal = calibrate(&sig, &res).unwrap();
        assert_eq!(cal.a, 1.0);
        let mean_abs = (0.5 + 0.3 + 0.4 + 0.2) / 4.0;
        assert!((cal.b - (mean_abs - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn calibration_matches_normal_equations() {
        use crate::rng::derive_rng;
        use rand::RngExt;
        let mut rng = derive_rng(0, "cal", &[]);
        let sig: Vec<f64> = (0..10).map(|_| rng.random_range(0.05..0.5)).collect();
        let res: Vec<f64> = sig.iter().map(|s| 1.7 * s + 0.05 + rng.random_range(-0.01..0.01)).collect();
        let cal = calibrate(&sig, &res).unwrap();

        // reference solve of the 2x2 normal equations
        let n = sig.len() as f64;
        let sx: f64 = sig.iter().sum();
        let sy: f64 = res.iter().map(|r| r.abs()).sum();
        let sxx: f64 = sig.iter().map(|s| s * s).sum();
        let sxy: f64 = sig.iter().zip(&res).map(|(s, r)| s * r.abs()).sum();
        let a = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let b = (sy - a * sx) / n;
        assert!((cal.a - a).abs() < 1e-10);
        assert!((cal.b - b).abs() < 1e-10);
    }

    #[test]
    fn calibration_floors() {
        let cal = UncertaintyCalibration { a: 1.0, b: -5.0 };
        assert_eq!(cal.apply(0.1), 1e-6);
        assert!(calibrate(&[0.1, 0.2], &[0.1, 0.2]).is_err(), "needs 3 points");
    }

    #[test]
    fn diagnostics_perfect_predictions() {
        let mu = [1.0, 2.0, 3.0];
        let sig = [1.0, 1.0, 1.0];
        let d = diagnostics(&mu, &sig, &mu).unwrap();
        assert_eq!(d.mse, 0.0);
        assert_eq!(d.cov1, 1.0);
        // NLL = 0.5 ln(2 pi) for sigma = 1 and zero residual
        let want = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((d.nll - want).abs() < 1e-12);
        assert!((d.nll - 0.9189).abs() < 1e-4);
    }

    #[test]
    fn diagnostics_boundary_counts_inside() {
        // mu = y + sigma exactly (dyadic values, so the sums are exact):
        // |z| = 1 everywhere, counted by <=
        let y = [0.0, 1.0, 2.0, 3.0];
        let sig = [0.5, 0.25, 0.125, 0.5];
        let mu: Vec<f64> = y.iter().zip(&sig).map(|(t, s)| t + s).collect();
        let d = diagnostics(&mu, &sig, &y).unwrap();
        assert_eq!(d.cov1, 1.0);
        assert_eq!(d.cov2, 1.0);
    }

    #[test]
    fn diagnostics_zero_variance_targets() {
        let d = diagnostics(&[1.0, 2.0], &[1.0, 1.0], &[5.0, 5.0]).unwrap();
        assert!(d.r2.is_none());
        assert!(diagnostics(&[1.0], &[1.0], &[1.0]).is_err());
        assert!(diagnostics(&[1.0, 2.0], &[0.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn diagnostics_match_independent_recomputation() {
        use crate::rng::derive_rng;
        use rand::RngExt;
        let mut rng = derive_rng(1, "diag", &[]);
        for trial in 0..100u64 {
            let n = rng.random_range(5..40usize);
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sig: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.8)).collect();
            let y: Vec<f64> = mu.iter().map(|m| m + rng.random_range(-0.5..0.5)).collect();
            let d = diagnostics(&mu, &sig, &y).unwrap();

            // scalar re-derivation
            let nf = n as f64;
            let mse: f64 = mu.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / nf;
            let mae: f64 = mu.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / nf;
            let mean_y = y.iter().sum::<f64>() / nf;
            let sst: f64 = y.iter().map(|t| (t - mean_y) * (t - mean_y)).sum();
            let r2 = 1.0 - nf * mse / sst;
            let mut nll = 0.0;
            let mut c1 = 0.0;
            let mut c2 = 0.0;
            for i in 0..n {
                let z = (y[i] - mu[i]) / sig[i];
                nll += 0.5 * (2.0 * std::f64::consts::PI * sig[i] * sig[i]).ln() + 0.5 * z * z;
                if z.abs() <= 1.0 {
                    c1 += 1.0;
                }
                if z.abs() <= 2.0 {
                    c2 += 1.0;
                }
            }
            assert!((d.mse - mse).abs() < 1e-12, "trial {trial}");
            assert!((d.mae - mae).abs() < 1e-12);
            assert!((d.r2.unwrap() - r2).abs() < 1e-10);
            assert!((d.nll - nll / nf).abs() < 1e-12);
            assert!((d.cov1 - c1 / nf).abs() < 1e-15);
            assert!((d.cov2 - c2 / nf).abs() < 1e-15);
        }
    }
}
