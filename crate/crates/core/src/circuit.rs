//! Circuit intermediate representation: gate sequences over Q qubits,
//! structural metrics, validity checking, canonical hashing, and the
//! QAOA-style template.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

use crate::error::{Error, Result};

/// The eight gate kinds in the search space. RX/RY/RZ/RZZ carry a rotation
/// angle; CZ/CX/SWAP/H do not. RX/RY/RZ/H act on one qubit, the rest on two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    RZZ,
    CZ,
    CX,
    SWAP,
    H,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::RZZ,
        GateKind::CZ,
        GateKind::CX,
        GateKind::SWAP,
        GateKind::H,
    ];

    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::RZZ)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::H => 1,
            GateKind::RZZ | GateKind::CZ | GateKind::CX | GateKind::SWAP => 2,
        }
    }

    /// Whether the gate acts identically under operand exchange.
    /// CX is the only two-qubit kind with distinguished control/target.
    pub fn is_symmetric(self) -> bool {
        matches!(self, GateKind::RZZ | GateKind::CZ | GateKind::SWAP)
    }

    /// Stable index used for one-hot encodings and hashing.
    pub fn index(self) -> usize {
        match self {
            GateKind::RX => 0,
            GateKind::RY => 1,
            GateKind::RZ => 2,
            GateKind::RZZ => 3,
            GateKind::CZ => 4,
            GateKind::CX => 5,
            GateKind::SWAP => 6,
            GateKind::H => 7,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One gate applied to concrete qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateInstance {
    pub kind: GateKind,
    pub qubits: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl GateInstance {
    pub fn one_q(kind: GateKind, qubit: u32, theta: Option<f64>) -> Self {
        GateInstance { kind, qubits: vec![qubit], theta }
    }

    pub fn two_q(kind: GateKind, a: u32, b: u32, theta: Option<f64>) -> Self {
        GateInstance { kind, qubits: vec![a, b], theta }
    }
}

/// An ordered gate sequence over `num_qubits` qubits — the unit of search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitBlueprint {
    pub num_qubits: u32,
    pub gates: Vec<GateInstance>,
}

/// Structural counts used by the cost model and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexitySummary {
    pub total_gates: usize,
    pub two_qubit_gates: usize,
    pub cz_count: usize,
    pub depth: usize,
    pub n_1q: usize,
    pub n_2q: usize,
}

/// A single invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyCircuit,
    QubitOutOfRange { gate: usize, qubit: u32 },
    DuplicateQubits { gate: usize },
    WrongArity { gate: usize, expected: usize, got: usize },
    MissingTheta { gate: usize },
    UnexpectedTheta { gate: usize },
    ThetaOutOfRange { gate: usize, theta: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyCircuit => write!(f, "empty circuit"),
            Violation::QubitOutOfRange { gate, qubit } => {
                write!(f, "gate {gate}: qubit index {qubit} out of range")
            }
            Violation::DuplicateQubits { gate } => write!(f, "gate {gate}: duplicate qubits"),
            Violation::WrongArity { gate, expected, got } => {
                write!(f, "gate {gate}: expected {expected} qubits, got {got}")
            }
            Violation::MissingTheta { gate } => write!(f, "gate {gate}: missing parameter"),
            Violation::UnexpectedTheta { gate } => write!(f, "gate {gate}: unexpected parameter"),
            Violation::ThetaOutOfRange { gate, theta } => {
                write!(f, "gate {gate}: theta {theta} outside [0, 2pi)")
            }
        }
    }
}

impl CircuitBlueprint {
    pub fn new(num_qubits: u32, gates: Vec<GateInstance>) -> Self {
        CircuitBlueprint { num_qubits, gates }
    }

    /// Number of parameterized gates, i.e. the length of the trainable
    /// quantum parameter vector.
    pub fn parameter_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind.is_parameterized()).count()
    }

    /// Rotation angles of parameterized gates, in gate order.
    pub fn thetas(&self) -> Vec<f64> {
        self.gates.iter().filter_map(|g| if g.kind.is_parameterized() { g.theta } else { None }).collect()
    }

    /// Replace the stored angles of parameterized gates, in gate order.
    /// Angles are wrapped into [0, 2pi); for exponential-form rotations this
    /// changes at most a global phase, so expectations are unaffected.
    pub fn with_thetas(&self, thetas: &[f64]) -> CircuitBlueprint {
        let mut out = self.clone();
        let mut it = thetas.iter();
        for g in &mut out.gates {
            if g.kind.is_parameterized() {
                let t = it.next().expect("theta vector too short");
                g.theta = Some(t.rem_euclid(std::f64::consts::TAU));
            }
        }
        assert!(it.next().is_none(), "theta vector too long");
        out
    }
}

/// Check every structural invariant; the returned list is empty iff the
/// blueprint is valid. Violations are data, not faults.
pub fn validate(blueprint: &CircuitBlueprint) -> Vec<Violation> {
    let mut out = Vec::new();
    if blueprint.gates.is_empty() {
        out.push(Violation::EmptyCircuit);
    }
    for (i, g) in blueprint.gates.iter().enumerate() {
        let arity = g.kind.arity();
        if g.qubits.len() != arity {
            out.push(Violation::WrongArity { gate: i, expected: arity, got: g.qubits.len() });
        }
        for &q in &g.qubits {
            if q >= blueprint.num_qubits {
                out.push(Violation::QubitOutOfRange { gate: i, qubit: q });
            }
        }
        if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
            out.push(Violation::DuplicateQubits { gate: i });
        }
        match (g.kind.is_parameterized(), g.theta) {
            (true, None) => out.push(Violation::MissingTheta { gate: i }),
            (false, Some(_)) => out.push(Violation::UnexpectedTheta { gate: i }),
            (true, Some(t)) => {
                if !(0.0..std::f64::consts::TAU).contains(&t) {
                    out.push(Violation::ThetaOutOfRange { gate: i, theta: t });
                }
            }
            (false, None) => {}
        }
    }
    out
}

/// Convenience wrapper returning an error listing all violations.
pub fn ensure_valid(blueprint: &CircuitBlueprint) -> Result<()> {
    let v = validate(blueprint);
    if v.is_empty() {
        Ok(())
    } else {
        let msgs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        Err(Error::InvalidCircuit(msgs.join("; ")))
    }
}

/// Greedy ASAP layering: a gate lands on layer
/// `1 + max(layer of the last gate touching any of its qubits)`.
/// Returns the per-gate layer assignment (1-based).
pub fn gate_layers(blueprint: &CircuitBlueprint) -> Vec<usize> {
    let mut last = vec![0usize; blueprint.num_qubits as usize];
    let mut layers = Vec::with_capacity(blueprint.gates.len());
    for g in &blueprint.gates {
        let layer = 1 + g.qubits.iter().map(|&q| last[q as usize]).max().unwrap_or(0);
        for &q in &g.qubits {
            last[q as usize] = layer;
        }
        layers.push(layer);
    }
    layers
}

/// ASAP circuit depth (max layer; 0 for an empty gate list).
pub fn depth(blueprint: &CircuitBlueprint) -> usize {
    gate_layers(blueprint).into_iter().max().unwrap_or(0)
}

/// Structural counts plus ASAP depth.
pub fn complexity_summary(blueprint: &CircuitBlueprint) -> ComplexitySummary {
    let mut n_1q = 0;
    let mut n_2q = 0;
    let mut cz = 0;
    for g in &blueprint.gates {
        match g.kind.arity() {
            1 => n_1q += 1,
            _ => n_2q += 1,
        }
        if g.kind == GateKind::CZ {
            cz += 1;
        }
    }
    ComplexitySummary {
        total_gates: blueprint.gates.len(),
        two_qubit_gates: n_2q,
        cz_count: cz,
        depth: depth(blueprint),
        n_1q,
        n_2q,
    }
}

/// QAOA-style template: `p` alternating blocks of RZZ(gamma_l) on each
/// coupling (in the given order) followed by RX(beta_l) on every qubit in
/// ascending order. With `p = 0` the gate list is empty and therefore
/// invalid as a standalone circuit.
pub fn qaoa_template(
    num_qubits: u32,
    gammas: &[f64],
    betas: &[f64],
    couplings: &[(u32, u32)],
) -> Result<CircuitBlueprint> {
    if gammas.len() != betas.len() {
        return Err(Error::Parameter(format!(
            "gamma/beta length mismatch: {} vs {}",
            gammas.len(),
            betas.len()
        )));
    }
    for &(a, b) in couplings {
        if a >= num_qubits || b >= num_qubits || a == b {
            return Err(Error::Parameter(format!("invalid coupling ({a}, {b})")));
        }
    }
    let wrap = |x: f64| x.rem_euclid(std::f64::consts::TAU);
    let mut gates = Vec::new();
    for (&gamma, &beta) in gammas.iter().zip(betas) {
        for &(a, b) in couplings {
            gates.push(GateInstance::two_q(GateKind::RZZ, a, b, Some(wrap(gamma))));
        }
        for q in 0..num_qubits {
            gates.push(GateInstance::one_q(GateKind::RX, q, Some(wrap(beta))));
        }
    }
    Ok(CircuitBlueprint::new(num_qubits, gates))
}

/// Hex digest over the canonical gate sequence. Symmetric two-qubit gates
/// (CZ/SWAP/RZZ) hash with sorted operands, CX keeps control/target order,
/// and angles are rounded to 1e-9 so float noise does not defeat dedup.
pub fn canonical_hash(blueprint: &CircuitBlueprint) -> String {
    let mut hasher = Sha256::new();
    hasher.update(blueprint.num_qubits.to_le_bytes());
    for g in &blueprint.gates {
        hasher.update([g.kind.index() as u8]);
        let mut qubits = g.qubits.clone();
        if g.kind.is_symmetric() {
            qubits.sort_unstable();
        }
        hasher.update([qubits.len() as u8]);
        for q in qubits {
            hasher.update(q.to_le_bytes());
        }
        match g.theta {
            Some(t) => {
                hasher.update([1u8]);
                hasher.update(((t / 1e-9).round() as i64).to_le_bytes());
            }
            None => hasher.update([0u8]),
        }
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn h(q: u32) -> GateInstance {
        GateInstance::one_q(GateKind::H, q, None)
    }

    #[test]
    fn minimal_valid_circuit() {
        let bp = CircuitBlueprint::new(1, vec![h(0)]);
        assert!(validate(&bp).is_empty());
    }

    #[test]
    fn duplicate_qubits_flagged() {
        let bp = CircuitBlueprint::new(3, vec![GateInstance::two_q(GateKind::CX, 2, 2, None)]);
        let v = validate(&bp);
        assert!(v.contains(&Violation::DuplicateQubits { gate: 0 }));
    }

    #[test]
    fn missing_theta_flagged() {
        let bp = CircuitBlueprint::new(1, vec![GateInstance::one_q(GateKind::RX, 0, None)]);
        let v = validate(&bp);
        assert!(v.contains(&Violation::MissingTheta { gate: 0 }));
    }

    #[test]
    fn out_of_range_and_empty_flagged() {
        let bp = CircuitBlueprint::new(2, vec![]);
        assert_eq!(validate(&bp), vec![Violation::EmptyCircuit]);
        let bp = CircuitBlueprint::new(1, vec![h(3)]);
        assert_eq!(validate(&bp), vec![Violation::QubitOutOfRange { gate: 0, qubit: 3 }]);
    }

    #[test]
    fn depth_follows_asap_rule() {
        let bp = CircuitBlueprint::new(2, vec![h(0), h(1)]);
        assert_eq!(depth(&bp), 1);
        let bp = CircuitBlueprint::new(1, vec![h(0), GateInstance::one_q(GateKind::RX, 0, Some(0.3))]);
        assert_eq!(depth(&bp), 2);
        // H(q0), CX(q0,q1), H(q1): layers 1, 2, 3
        let bp = CircuitBlueprint::new(
            2,
            vec![h(0), GateInstance::two_q(GateKind::CX, 0, 1, None), h(1)],
        );
        assert_eq!(gate_layers(&bp), vec![1, 2, 3]);
        assert_eq!(depth(&bp), 3);
    }

    #[test]
    fn depth_monotone_under_append() {
        let mut bp = CircuitBlueprint::new(3, vec![h(0), GateInstance::two_q(GateKind::CZ, 0, 1, None)]);
        let d0 = depth(&bp);
        // appending on an untouched qubit of the max layer keeps depth constant
        bp.gates.push(h(2));
        assert_eq!(depth(&bp), d0);
        // appending on a busy qubit increases it
        bp.gates.push(h(0));
        assert_eq!(depth(&bp), d0 + 1);
    }

    #[test]
    fn complexity_counts() {
        let bp = CircuitBlueprint::new(1, vec![h(0)]);
        let s = complexity_summary(&bp);
        assert_eq!((s.total_gates, s.two_qubit_gates, s.depth), (1, 0, 1));

        let bp = CircuitBlueprint::new(
            3,
            vec![
                GateInstance::two_q(GateKind::RZZ, 0, 1, Some(0.5)),
                GateInstance::two_q(GateKind::CZ, 0, 1, None),
                GateInstance::two_q(GateKind::CX, 1, 2, None),
            ],
        );
        let s = complexity_summary(&bp);
        assert_eq!(s.two_qubit_gates, 3);
        assert_eq!(s.cz_count, 1);
        assert_eq!(s.n_2q, 3);
        assert_eq!(s.n_1q, 0);
        assert_eq!(s.total_gates, s.n_1q + s.n_2q);
    }

    #[test]
    fn qaoa_expansion() {
        let bp = qaoa_template(2, &[1.0], &[0.5], &[(0, 1)]).unwrap();
        assert_eq!(bp.gates.len(), 3);
        assert_eq!(bp.gates[0].kind, GateKind::RZZ);
        assert_eq!(bp.gates[1], GateInstance::one_q(GateKind::RX, 0, Some(0.5)));
        assert_eq!(bp.gates[2], GateInstance::one_q(GateKind::RX, 1, Some(0.5)));

        // p=0: empty template, invalid standalone
        let bp = qaoa_template(2, &[], &[], &[(0, 1)]).unwrap();
        assert!(bp.gates.is_empty());
        assert!(!validate(&bp).is_empty());

        // Q=3, p=2, ring: 2*(3 RZZ + 3 RX) = 12 gates
        let ring = [(0, 1), (1, 2), (2, 0)];
        let bp = qaoa_template(3, &[0.1, 0.2], &[0.3, 0.4], &ring).unwrap();
        assert_eq!(bp.gates.len(), 12);
        assert!(validate(&bp).is_empty());

        assert!(qaoa_template(2, &[1.0], &[], &[]).is_err());
    }

    #[test]
    fn hash_symmetry_rules() {
        let cz01 = CircuitBlueprint::new(2, vec![GateInstance::two_q(GateKind::CZ, 0, 1, None)]);
        let cz10 = CircuitBlueprint::new(2, vec![GateInstance::two_q(GateKind::CZ, 1, 0, None)]);
        assert_eq!(canonical_hash(&cz01), canonical_hash(&cz10));

        let cx01 = CircuitBlueprint::new(2, vec![GateInstance::two_q(GateKind::CX, 0, 1, None)]);
        let cx10 = CircuitBlueprint::new(2, vec![GateInstance::two_q(GateKind::CX, 1, 0, None)]);
        assert_ne!(canonical_hash(&cx01), canonical_hash(&cx10));

        assert_eq!(canonical_hash(&cx01), canonical_hash(&cx01.clone()));
    }

    #[test]
    fn hash_sensitive_to_kind_theta_order() {
        let a = CircuitBlueprint::new(
            2,
            vec![GateInstance::one_q(GateKind::RX, 0, Some(1.0)), h(1)],
        );
        let mut b = a.clone();
        b.gates[0].kind = GateKind::RY;
        assert_ne!(canonical_hash(&a), canonical_hash(&b));

        let mut c = a.clone();
        c.gates[0].theta = Some(1.0 + 1e-5);
        assert_ne!(canonical_hash(&a), canonical_hash(&c));

        // sub-rounding perturbation is absorbed
        let mut d = a.clone();
        d.gates[0].theta = Some(1.0 + 1e-13);
        assert_eq!(canonical_hash(&a), canonical_hash(&d));

        let mut e = a.clone();
        e.gates.swap(0, 1);
        assert_ne!(canonical_hash(&a), canonical_hash(&e));
    }

    #[test]
    fn blueprint_json_shape() {
        let bp = CircuitBlueprint::new(
            2,
            vec![GateInstance::one_q(GateKind::RX, 0, Some(PI / 2.0)), h(1)],
        );
        let js = serde_json::to_string(&bp).unwrap();
        assert!(js.contains("\"kind\":\"RX\""), "{js}");
        assert!(js.contains("\"qubits\":[0]"), "{js}");
        // theta omitted for non-parameterized gates
        assert!(js.contains("\"kind\":\"H\",\"qubits\":[1]}"), "{js}");
        let back: CircuitBlueprint = serde_json::from_str(&js).unwrap();
        assert_eq!(back, bp);
    }
}
