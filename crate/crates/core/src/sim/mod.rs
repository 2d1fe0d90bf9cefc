//! Noiseless statevector and noisy density-matrix evolution of blueprints,
//! with per-gate Kraus channels and Pauli-Z expectation readout.
//!
//! Inputs are angle-embedded as an RY layer (one rotation per qubit) before
//! the blueprint's own gates. The statevector backend serves the noiseless
//! search objective; any noise (including readout flips) forces the
//! density-matrix backend. Runs never share mutable state, so distinct
//! circuits can be simulated from any number of worker threads.

pub mod gates;
pub mod noise;

use num_complex::Complex64;

use crate::circuit::{gate_layers, CircuitBlueprint, GateInstance};
use crate::error::{Error, Result};
use gates::{apply_1q, apply_2q, conj2, conj4, gate_matrix_1q, gate_matrix_2q, pauli_x, Mat2};
use noise::{
    kraus_amplitude_damping, kraus_depolarizing, kraus_gad, kraus_phase_damping, noise_probs,
    KrausChannel, NoiseConfig, NoiseMode,
};

/// Pure state over `num_qubits` qubits; amplitude index bit k = qubit k.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub num_qubits: u32,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(num_qubits: u32) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector { num_qubits, amplitudes }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&mut self, gate: &GateInstance) {
        apply_gate_sv(&mut self.amplitudes, gate);
    }

    /// <Z_i> for every qubit.
    pub fn z_expectations(&self) -> Vec<f64> {
        let q = self.num_qubits as usize;
        let mut z = vec![0.0; q];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (k, zk) in z.iter_mut().enumerate() {
                if idx >> k & 1 == 0 {
                    *zk += p;
                } else {
                    *zk -= p;
                }
            }
        }
        z
    }
}

/// Mixed state as a dense 2^Q x 2^Q matrix, stored row-major: the flat
/// index is `row << Q | col`, so column bits sit low and row bits high.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub num_qubits: u32,
    pub elements: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zero_state(num_qubits: u32) -> Self {
        let dim = 1usize << num_qubits;
        let mut elements = vec![Complex64::new(0.0, 0.0); dim * dim];
        elements[0] = Complex64::new(1.0, 0.0);
        DensityMatrix { num_qubits, elements }
    }

    pub fn from_statevector(sv: &StateVector) -> Self {
        let dim = sv.amplitudes.len();
        let mut elements = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                elements[r * dim + c] = sv.amplitudes[r] * sv.amplitudes[c].conj();
            }
        }
        DensityMatrix { num_qubits: sv.num_qubits, elements }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.elements[(r << self.num_qubits) | c]
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|i| self.elements[i * dim + i]).sum()
    }

    /// Apply an arbitrary single-qubit operator E on `qubit`:
    /// rho <- (E x I) rho (E x I)^dag. Rows mix through E (high bits),
    /// columns through conj(E) (low bits).
    pub fn apply_op_1q(&mut self, qubit: u32, op: &Mat2) {
        let q = self.num_qubits as usize;
        apply_1q(&mut self.elements, q + qubit as usize, op);
        apply_1q(&mut self.elements, qubit as usize, &conj2(op));
    }

    pub fn apply_gate(&mut self, gate: &GateInstance) {
        let q = self.num_qubits as usize;
        match gate.qubits.len() {
            1 => {
                let u = gate_matrix_1q(gate.kind, gate.theta);
                apply_1q(&mut self.elements, q + gate.qubits[0] as usize, &u);
                apply_1q(&mut self.elements, gate.qubits[0] as usize, &conj2(&u));
            }
            _ => {
                let u = gate_matrix_2q(gate.kind, gate.theta);
                let (a, b) = (gate.qubits[0] as usize, gate.qubits[1] as usize);
                apply_2q(&mut self.elements, q + a, q + b, &u);
                apply_2q(&mut self.elements, a, b, &conj4(&u));
            }
        }
    }

    /// rho <- sum_k E_k rho E_k^dag with E_k embedded on `qubit`.
    pub fn apply_kraus(&mut self, qubit: u32, channel: &KrausChannel) {
        let mut total = vec![Complex64::new(0.0, 0.0); self.elements.len()];
        for op in &channel.operators {
            let mut branch = self.clone();
            branch.apply_op_1q(qubit, op);
            for (t, b) in total.iter_mut().zip(&branch.elements) {
                *t += b;
            }
        }
        self.elements = total;
    }

    /// <Z_i> = tr(rho Z_i) for every qubit, from the diagonal.
    pub fn z_expectations(&self) -> Vec<f64> {
        let q = self.num_qubits as usize;
        let dim = self.dim();
        let mut z = vec![0.0; q];
        for i in 0..dim {
            let p = self.elements[i * dim + i].re;
            for (k, zk) in z.iter_mut().enumerate() {
                if i >> k & 1 == 0 {
                    *zk += p;
                } else {
                    *zk -= p;
                }
            }
        }
        z
    }
}

fn apply_gate_sv(amps: &mut [Complex64], gate: &GateInstance) {
    match gate.qubits.len() {
        1 => apply_1q(amps, gate.qubits[0] as usize, &gate_matrix_1q(gate.kind, gate.theta)),
        _ => apply_2q(
            amps,
            gate.qubits[0] as usize,
            gate.qubits[1] as usize,
            &gate_matrix_2q(gate.kind, gate.theta),
        ),
    }
}

/// rho <- sum_k (E_k x I) rho (E_k x I)^dag on `target`.
pub fn apply_channel(
    rho: &DensityMatrix,
    channel: &KrausChannel,
    target: u32,
) -> Result<DensityMatrix> {
    if target >= rho.num_qubits {
        return Err(Error::Dimension(format!(
            "target qubit {target} out of range for {} qubits",
            rho.num_qubits
        )));
    }
    let mut out = rho.clone();
    out.apply_kraus(target, channel);
    Ok(out)
}

/// Per-qubit classical readout flip: rho <- (1-p) rho + p X rho X.
pub fn apply_readout_bitflip(rho: &DensityMatrix, p_ro: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p_ro) {
        return Err(Error::Parameter(format!("p_ro = {p_ro} outside [0, 1]")));
    }
    let mut out = rho.clone();
    if p_ro == 0.0 {
        return Ok(out);
    }
    let x = pauli_x();
    for qubit in 0..rho.num_qubits {
        let mut flipped = out.clone();
        flipped.apply_op_1q(qubit, &x);
        for (a, b) in out.elements.iter_mut().zip(&flipped.elements) {
            *a = (1.0 - p_ro) * *a + p_ro * b;
        }
    }
    Ok(out)
}

/// The per-qubit channels inserted after a gate of duration `t_ns`.
fn gate_channels(noise: &NoiseConfig, t_ns: f64, two_qubit: bool) -> Result<Vec<KrausChannel>> {
    let t_us = t_ns * 1e-3;
    match noise.mode {
        NoiseMode::None => Ok(vec![]),
        NoiseMode::AmplitudeDamping => {
            let (p_ad, _) = noise_probs(t_us, noise.t1_us, noise.t2_us)?;
            Ok(vec![kraus_amplitude_damping(p_ad)?])
        }
        NoiseMode::PhaseDamping => {
            let (_, p_pd) = noise_probs(t_us, noise.t1_us, noise.t2_us)?;
            Ok(vec![kraus_phase_damping(p_pd)?])
        }
        NoiseMode::Thermal => {
            let (p_ad, p_pd) = noise_probs(t_us, noise.t1_us, noise.t2_us)?;
            Ok(vec![kraus_gad(p_ad, noise.p_e)?, kraus_phase_damping(p_pd)?])
        }
        NoiseMode::Depolarizing => {
            let p = if two_qubit { noise.p_2q } else { noise.p_1q };
            Ok(vec![kraus_depolarizing(p)?])
        }
    }
}

fn apply_gate_noise(rho: &mut DensityMatrix, gate: &GateInstance, noise: &NoiseConfig) -> Result<()> {
    let two_qubit = gate.qubits.len() == 2;
    let t_ns = if two_qubit { noise.t_2q_ns } else { noise.t_1q_ns };
    for channel in gate_channels(noise, t_ns, two_qubit)? {
        for &q in &gate.qubits {
            rho.apply_kraus(q, &channel);
        }
    }
    Ok(())
}

fn check_inputs(blueprint: &CircuitBlueprint, angles: &[f64]) -> Result<()> {
    if angles.len() != blueprint.num_qubits as usize {
        return Err(Error::Dimension(format!(
            "{} input angles for {} qubits",
            angles.len(),
            blueprint.num_qubits
        )));
    }
    Ok(())
}

/// Substitute `theta_override` (one entry per parameterized gate, in gate
/// order) into the blueprint's gates without touching the blueprint.
fn gate_with_override(gate: &GateInstance, override_iter: &mut std::slice::Iter<f64>) -> GateInstance {
    if gate.kind.is_parameterized() {
        let theta = override_iter.next().copied();
        GateInstance { kind: gate.kind, qubits: gate.qubits.clone(), theta: theta.or(gate.theta) }
    } else {
        gate.clone()
    }
}

/// Noiseless statevector run; returns <Z_i> per qubit.
pub fn run_statevector(
    blueprint: &CircuitBlueprint,
    angles: &[f64],
    theta_override: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_inputs(blueprint, angles)?;
    let mut sv = StateVector::zero_state(blueprint.num_qubits);
    for (q, &angle) in angles.iter().enumerate() {
        apply_1q(&mut sv.amplitudes, q, &gates::ry(angle));
    }
    let mut over = theta_override.unwrap_or(&[]).iter();
    for gate in &blueprint.gates {
        let g = gate_with_override(gate, &mut over);
        sv.apply_gate(&g);
    }
    Ok(sv.z_expectations())
}

/// Density-matrix run with the configured noise channels inserted after
/// every gate (embedding rotations included), optional idle damping at
/// ASAP layer boundaries, and a readout bit-flip before measurement.
pub fn run_density(
    blueprint: &CircuitBlueprint,
    angles: &[f64],
    noise: &NoiseConfig,
    theta_override: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_inputs(blueprint, angles)?;
    noise.validate()?;
    let mut rho = DensityMatrix::zero_state(blueprint.num_qubits);

    let embedding: Vec<GateInstance> = angles
        .iter()
        .enumerate()
        .map(|(q, &a)| GateInstance::one_q(crate::circuit::GateKind::RY, q as u32, Some(a)))
        .collect();
    for g in &embedding {
        rho.apply_gate(g);
        apply_gate_noise(&mut rho, g, noise)?;
    }

    let mut over = theta_override.unwrap_or(&[]).iter();
    let resolved: Vec<GateInstance> =
        blueprint.gates.iter().map(|g| gate_with_override(g, &mut over)).collect();

    match noise.idle_gap_ns {
        None => {
            for g in &resolved {
                rho.apply_gate(g);
                apply_gate_noise(&mut rho, g, noise)?;
            }
        }
        Some(gap_ns) => {
            // Within an ASAP layer gates act on disjoint qubits and commute,
            // so replaying in (layer, index) order preserves the unitary
            // while exposing layer boundaries for idle damping.
            let layers = gate_layers(blueprint);
            let mut order: Vec<usize> = (0..resolved.len()).collect();
            order.sort_by_key(|&i| (layers[i], i));
            let mut current_layer = 0usize;
            for &i in &order {
                if layers[i] > current_layer {
                    if current_layer > 0 || !embedding.is_empty() {
                        apply_idle_damping(&mut rho, noise, gap_ns)?;
                    }
                    current_layer = layers[i];
                }
                rho.apply_gate(&resolved[i]);
                apply_gate_noise(&mut rho, &resolved[i], noise)?;
            }
        }
    }

    if noise.p_ro > 0.0 {
        rho = apply_readout_bitflip(&rho, noise.p_ro)?;
    }
    Ok(rho.z_expectations())
}

/// Idle damping between layers, using the mode's (T1, T2) mapping for the
/// gap duration. Modes without relaxation semantics are unaffected.
fn apply_idle_damping(rho: &mut DensityMatrix, noise: &NoiseConfig, gap_ns: f64) -> Result<()> {
    if !noise.mode.uses_relaxation_times() {
        return Ok(());
    }
    for channel in gate_channels(noise, gap_ns, false)? {
        for q in 0..rho.num_qubits {
            rho.apply_kraus(q, &channel);
        }
    }
    Ok(())
}

/// Run a blueprint with angle embedding and return <Z_i> per qubit.
/// Dispatches to the statevector backend when the configuration is truly
/// noiseless, and to the density-matrix backend otherwise.
pub fn run_circuit(
    blueprint: &CircuitBlueprint,
    angles: &[f64],
    noise: &NoiseConfig,
) -> Result<Vec<f64>> {
    run_circuit_with_thetas(blueprint, angles, noise, None)
}

/// As [`run_circuit`] but with the trainable angles supplied externally.
pub fn run_circuit_with_thetas(
    blueprint: &CircuitBlueprint,
    angles: &[f64],
    noise: &NoiseConfig,
    theta_override: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if let Some(t) = theta_override {
        let need = blueprint.parameter_count();
        if t.len() != need {
            return Err(Error::Dimension(format!(
                "theta override has {} entries, blueprint has {} parameterized gates",
                t.len(),
                need
            )));
        }
    }
    if noise.needs_density_backend() {
        run_density(blueprint, angles, noise, theta_override)
    } else {
        run_statevector(blueprint, angles, theta_override)
    }
}
