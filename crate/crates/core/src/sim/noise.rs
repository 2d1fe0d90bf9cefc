//! Kraus channels and relaxation-derived probabilities.
//!
//! Five modes: amplitude damping (AD), phase damping (PD), a thermal mode
//! composing generalized amplitude damping (GAD) with PD, single-qubit
//! depolarizing, and none. Per-gate probabilities for AD/PD/thermal come
//! from gate durations and (T1, T2) via 1/T_phi = 1/T2 - 1/(2 T1).

use serde::{Deserialize, Serialize};

use super::gates::{identity2, pauli_x, pauli_y, pauli_z, Mat2, C};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    None,
    AmplitudeDamping,
    PhaseDamping,
    Thermal,
    Depolarizing,
}

impl NoiseMode {
    /// Whether per-gate channel strengths are derived from (T1, T2).
    pub fn uses_relaxation_times(self) -> bool {
        matches!(self, NoiseMode::AmplitudeDamping | NoiseMode::PhaseDamping | NoiseMode::Thermal)
    }
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NoiseMode::None => "none",
            NoiseMode::AmplitudeDamping => "amplitude_damping",
            NoiseMode::PhaseDamping => "phase_damping",
            NoiseMode::Thermal => "thermal",
            NoiseMode::Depolarizing => "depolarizing",
        };
        f.write_str(s)
    }
}

/// Device-like noise parameters. Times T1/T2 are microseconds, gate and
/// readout durations nanoseconds. `t_meas_ns` is carried for completeness
/// but the readout flip probability `p_ro` is an independent constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    pub t1_us: f64,
    pub t2_us: f64,
    pub t_1q_ns: f64,
    pub t_2q_ns: f64,
    pub t_meas_ns: f64,
    /// Excited-state population of the GAD channel (thermal mode).
    pub p_e: f64,
    /// Depolarizing probabilities after one-/two-qubit gates.
    pub p_1q: f64,
    pub p_2q: f64,
    /// Classical readout bit-flip probability applied before measurement.
    pub p_ro: f64,
    /// Optional inter-layer idle gap (ns); enables idle damping.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub idle_gap_ns: Option<f64>,
}

impl NoiseConfig {
    /// Noiseless configuration with device-like default constants.
    pub fn none() -> Self {
        NoiseConfig {
            mode: NoiseMode::None,
            t1_us: 100.0,
            t2_us: 120.0,
            t_1q_ns: 300.0,
            t_2q_ns: 300.0,
            t_meas_ns: 500.0,
            p_e: 0.0,
            p_1q: 0.01,
            p_2q: 0.01,
            p_ro: 0.0,
            idle_gap_ns: None,
        }
    }

    pub fn with_mode(mode: NoiseMode) -> Self {
        NoiseConfig { mode, ..NoiseConfig::none() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_us > 0.0) || !(self.t2_us > 0.0) {
            return Err(Error::InvalidPhysics("T1 and T2 must be positive".into()));
        }
        if self.t2_us > 2.0 * self.t1_us {
            return Err(Error::InvalidPhysics(format!(
                "T2 = {} us exceeds 2*T1 = {} us (T_phi undefined)",
                self.t2_us,
                2.0 * self.t1_us
            )));
        }
        if !(self.t_1q_ns > 0.0) || !(self.t_2q_ns > 0.0) || !(self.t_meas_ns > 0.0) {
            return Err(Error::InvalidPhysics("gate times must be positive".into()));
        }
        for (name, p) in
            [("p_e", self.p_e), ("p_1q", self.p_1q), ("p_2q", self.p_2q), ("p_ro", self.p_ro)]
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if let Some(g) = self.idle_gap_ns {
            if !(g > 0.0) {
                return Err(Error::InvalidPhysics("idle gap must be positive".into()));
            }
        }
        Ok(())
    }

    /// Whether simulation must run on the density-matrix backend.
    pub fn needs_density_backend(&self) -> bool {
        self.mode != NoiseMode::None || self.p_ro > 0.0
    }
}

/// AD and PD probabilities after time `t`:
/// p_AD = 1 - exp(-t/T1), p_PD = 1 - exp(-t/T_phi) with
/// 1/T_phi = 1/T2 - 1/(2 T1). All arguments share one time unit.
pub fn noise_probs(t: f64, t1: f64, t2: f64) -> Result<(f64, f64)> {
    if !(t1 > 0.0) || !(t2 > 0.0) {
        return Err(Error::InvalidPhysics("T1 and T2 must be positive".into()));
    }
    if t2 > 2.0 * t1 {
        return Err(Error::InvalidPhysics(format!("T2 = {t2} exceeds 2*T1 = {}", 2.0 * t1)));
    }
    if t < 0.0 {
        return Err(Error::Parameter(format!("negative duration t = {t}")));
    }
    let p_ad = 1.0 - (-t / t1).exp();
    let inv_tphi = (1.0 / t2 - 1.0 / (2.0 * t1)).max(0.0);
    let p_pd = 1.0 - (-t * inv_tphi).exp();
    Ok((p_ad, p_pd))
}

/// A single-qubit CPTP channel given by its Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    pub label: &'static str,
    pub operators: Vec<Mat2>,
}

impl KrausChannel {
    /// Max elementwise deviation of sum_k E_k^dag E_k from the identity.
    pub fn cptp_defect(&self) -> f64 {
        let mut sum = [[C::new(0.0, 0.0); 2]; 2];
        for e in &self.operators {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        sum[i][j] += e[k][i].conj() * e[k][j];
                    }
                }
            }
        }
        let mut defect: f64 = 0.0;
        for (i, row) in sum.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((x - C::new(want, 0.0)).norm());
            }
        }
        defect
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Amplitude damping: E0 = [[1, 0], [0, sqrt(1-g)]], E1 = [[0, sqrt(g)], [0, 0]].
pub fn kraus_amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    check_prob("gamma", gamma)?;
    let z = C::new(0.0, 0.0);
    let e0 = [[C::new(1.0, 0.0), z], [z, C::new((1.0 - gamma).sqrt(), 0.0)]];
    let e1 = [[z, C::new(gamma.sqrt(), 0.0)], [z, z]];
    Ok(KrausChannel { label: "amplitude_damping", operators: vec![e0, e1] })
}

/// Phase damping: F0 = sqrt(1-l) I, F1 = sqrt(l)|0><0|, F2 = sqrt(l)|1><1|.
pub fn kraus_phase_damping(lambda: f64) -> Result<KrausChannel> {
    check_prob("lambda", lambda)?;
    let z = C::new(0.0, 0.0);
    let s0 = C::new((1.0 - lambda).sqrt(), 0.0);
    let s1 = C::new(lambda.sqrt(), 0.0);
    let f0 = [[s0, z], [z, s0]];
    let f1 = [[s1, z], [z, z]];
    let f2 = [[z, z], [z, s1]];
    Ok(KrausChannel { label: "phase_damping", operators: vec![f0, f1, f2] })
}

/// Generalized amplitude damping with excited-state population `p_e`.
/// With p_e = 0 the G2/G3 pair reduces to plain amplitude damping.
pub fn kraus_gad(gamma: f64, p_e: f64) -> Result<KrausChannel> {
    check_prob("gamma", gamma)?;
    check_prob("p_e", p_e)?;
    let z = C::new(0.0, 0.0);
    let se = p_e.sqrt();
    let sg = (1.0 - p_e).sqrt();
    let damp = (1.0 - gamma).sqrt();
    let jump = gamma.sqrt();
    let g0 = [[C::new(se * damp, 0.0), z], [z, C::new(se, 0.0)]];
    let g1 = [[z, z], [C::new(se * jump, 0.0), z]];
    let g2 = [[C::new(sg, 0.0), z], [z, C::new(sg * damp, 0.0)]];
    let g3 = [[z, C::new(sg * jump, 0.0)], [z, z]];
    Ok(KrausChannel { label: "gad", operators: vec![g0, g1, g2, g3] })
}

/// Depolarizing channel as {sqrt(1-p) I, sqrt(p/3) X, sqrt(p/3) Y, sqrt(p/3) Z};
/// its action is (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z).
pub fn kraus_depolarizing(p: f64) -> Result<KrausChannel> {
    check_prob("p", p)?;
    let scale = |m: Mat2, s: f64| {
        let mut out = m;
        for row in &mut out {
            for x in row {
                *x *= s;
            }
        }
        out
    };
    let ops = vec![
        scale(identity2(), (1.0 - p).sqrt()),
        scale(pauli_x(), (p / 3.0).sqrt()),
        scale(pauli_y(), (p / 3.0).sqrt()),
        scale(pauli_z(), (p / 3.0).sqrt()),
    ];
    Ok(KrausChannel { label: "depolarizing", operators: ops })
}
