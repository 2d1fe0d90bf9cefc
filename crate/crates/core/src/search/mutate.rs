//! Mutation kernel over the free-form gate space.
//!
//! Each proposal applies a uniform number of edits in {1, ..., m_max};
//! every edit draws delete/replace/insert with probabilities
//! (rho, eta, 1 - rho - eta). Fresh gates sample their kind uniformly,
//! two-qubit targets uniformly over unordered pairs (CX direction is then
//! a fair coin), single-qubit targets uniformly over qubits, and angles
//! uniformly over [0, 2pi). An emptied sequence is repaired with a single
//! H on a uniformly chosen qubit, so mutation always yields a valid
//! blueprint.

use rand::RngExt;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitBlueprint, GateInstance, GateKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    /// Delete probability per edit.
    pub rho: f64,
    /// Replace probability per edit.
    pub eta: f64,
    /// Maximum edits per proposal.
    pub m_max: usize,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig { rho: 0.10, eta: 0.10, m_max: 10 }
    }
}

impl MutationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho < 0.0 || self.eta < 0.0 || self.rho + self.eta > 1.0 {
            return Err(Error::Config(format!(
                "mutation probabilities (rho={}, eta={}) must be nonnegative with rho+eta <= 1",
                self.rho, self.eta
            )));
        }
        if self.m_max == 0 {
            return Err(Error::Config("m_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sample a fresh gate for a circuit over `num_qubits` qubits.
pub fn random_gate(num_qubits: u32, rng: &mut ChaCha12Rng) -> GateInstance {
    let kind = GateKind::ALL[rng.random_range(0..GateKind::ALL.len())];
    let theta = kind.is_parameterized().then(|| rng.random_range(0.0..std::f64::consts::TAU));
    match kind.arity() {
        1 => GateInstance { kind, qubits: vec![rng.random_range(0..num_qubits)], theta },
        _ => {
            // unordered pair, uniform over the Q(Q-1)/2 choices
            let a = rng.random_range(0..num_qubits);
            let mut b = rng.random_range(0..num_qubits - 1);
            if b >= a {
                b += 1;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let (first, second) = if kind == GateKind::CX && rng.random_bool(0.5) {
                (hi, lo)
            } else {
                (lo, hi)
            };
            GateInstance { kind, qubits: vec![first, second], theta }
        }
    }
}

/// Random initial circuit: gate count uniform in {Q, ..., factor*Q}, each
/// gate drawn from the mutation proposal distribution.
pub fn random_blueprint(num_qubits: u32, factor: u32, rng: &mut ChaCha12Rng) -> CircuitBlueprint {
    let lo = num_qubits as usize;
    let hi = (factor.max(1) * num_qubits) as usize;
    let count = rng.random_range(lo..=hi);
    let gates = (0..count).map(|_| random_gate(num_qubits, rng)).collect();
    CircuitBlueprint::new(num_qubits, gates)
}

/// One mutation proposal; always returns a valid blueprint.
pub fn mutate(
    parent: &CircuitBlueprint,
    config: &MutationConfig,
    rng: &mut ChaCha12Rng,
) -> CircuitBlueprint {
    let q = parent.num_qubits;
    let mut gates = parent.gates.clone();
    let edits = rng.random_range(1..=config.m_max);
    for _ in 0..edits {
        let r: f64 = rng.random_range(0.0..1.0);
        if r < config.rho {
            if !gates.is_empty() {
                let idx = rng.random_range(0..gates.len());
                gates.remove(idx);
            }
        } else if r < config.rho + config.eta {
            if gates.is_empty() {
                gates.insert(0, random_gate(q, rng));
            } else {
                let idx = rng.random_range(0..gates.len());
                gates.remove(idx);
                gates.insert(idx, random_gate(q, rng));
            }
        } else {
            let idx = rng.random_range(0..=gates.len());
            gates.insert(idx, random_gate(q, rng));
        }
    }
    if gates.is_empty() {
        gates.push(GateInstance::one_q(GateKind::H, rng.random_range(0..q), None));
    }
    CircuitBlueprint::new(q, gates)
}
