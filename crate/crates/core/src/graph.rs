//! Deterministic circuit-to-graph encoding for the surrogate, plus the
//! flat feature vector consumed by the MLP baseline.
//!
//! Nodes are gate instances in circuit order. Node features are
//! `[gate one-hot (8) | normalized position (1) | qubit incidence (Q) |
//! two-qubit flag (1)]`, so the width is Q + 10. Edges run past -> future
//! and are the union of the temporal chain (i, i+1) and shared-qubit
//! connectivity; per-qubit sequential links are a subset of the latter and
//! vanish in deduplication.

use serde::{Deserialize, Serialize};

use crate::circuit::{complexity_summary, ensure_valid, CircuitBlueprint};
use crate::error::Result;
use crate::nn::Mat;

/// How far shared-qubit edges reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharedQubitMode {
    /// Every later gate sharing a qubit (default).
    Transitive,
    /// Only the next gate on each qubit.
    ConsecutiveOnly,
}

/// Directed graph with dense node features, ready for the GIN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitGraph {
    pub num_nodes: usize,
    /// `num_nodes x (Q+10)` feature matrix.
    pub node_features: Mat,
    /// Directed edges (src, dst), src < dst, sorted and deduplicated.
    pub edges: Vec<(u32, u32)>,
}

impl CircuitGraph {
    pub fn feature_width(&self) -> usize {
        self.node_features.cols
    }

    /// In-neighbor lists (sources per destination node).
    pub fn in_neighbors(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.num_nodes];
        for &(s, d) in &self.edges {
            out[d as usize].push(s);
        }
        out
    }
}

/// Encode a valid non-empty blueprint with the given shared-qubit reach.
pub fn encode_with_mode(blueprint: &CircuitBlueprint, mode: SharedQubitMode) -> Result<CircuitGraph> {
    ensure_valid(blueprint)?;
    let q = blueprint.num_qubits as usize;
    let n = blueprint.gates.len();
    let width = q + 10;

    let mut features = Mat::zeros(n, width);
    for (i, gate) in blueprint.gates.iter().enumerate() {
        let row = features.row_mut(i);
        row[gate.kind.index()] = 1.0;
        row[8] = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        for &qb in &gate.qubits {
            row[9 + qb as usize] = 1.0;
        }
        row[9 + q] = if gate.qubits.len() == 2 { 1.0 } else { 0.0 };
    }

    let mut edges = Vec::new();
    for i in 0..n.saturating_sub(1) {
        edges.push((i as u32, i as u32 + 1));
    }
    match mode {
        SharedQubitMode::Transitive => {
            for i in 0..n {
                for j in (i + 1)..n {
                    if shares_qubit(blueprint, i, j) {
                        edges.push((i as u32, j as u32));
                    }
                }
            }
        }
        SharedQubitMode::ConsecutiveOnly => {
            let mut last_on_qubit = vec![None::<usize>; q];
            for (j, gate) in blueprint.gates.iter().enumerate() {
                for &qb in &gate.qubits {
                    if let Some(i) = last_on_qubit[qb as usize] {
                        edges.push((i as u32, j as u32));
                    }
                    last_on_qubit[qb as usize] = Some(j);
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(CircuitGraph { num_nodes: n, node_features: features, edges })
}

/// Encode with the default transitive shared-qubit connectivity.
pub fn encode(blueprint: &CircuitBlueprint) -> Result<CircuitGraph> {
    encode_with_mode(blueprint, SharedQubitMode::Transitive)
}

fn shares_qubit(bp: &CircuitBlueprint, i: usize, j: usize) -> bool {
    bp.gates[i].qubits.iter().any(|q| bp.gates[j].qubits.contains(q))
}

/// Flat 13-dimensional descriptor for the no-graph MLP baseline:
/// `[count per gate kind (8) | total | two-qubit | cz | depth | Q]`,
/// raw counts (the baseline surrogate normalizes internally).
pub fn flat_features(blueprint: &CircuitBlueprint) -> Result<Vec<f64>> {
    ensure_valid(blueprint)?;
    let mut v = vec![0.0; 13];
    for gate in &blueprint.gates {
        v[gate.kind.index()] += 1.0;
    }
    let s = complexity_summary(blueprint);
    v[8] = s.total_gates as f64;
    v[9] = s.two_qubit_gates as f64;
    v[10] = s.cz_count as f64;
    v[11] = s.depth as f64;
    v[12] = blueprint.num_qubits as f64;
    Ok(v)
}

pub const FLAT_FEATURE_WIDTH: usize = 13;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{GateInstance, GateKind};

    fn h(q: u32) -> GateInstance {
        GateInstance::one_q(GateKind::H, q, None)
    }

    #[test]
    fn single_gate_graph() {
        let bp = CircuitBlueprint::new(2, vec![h(0)]);
        let g = encode(&bp).unwrap();
        assert_eq!(g.num_nodes, 1);
        assert!(g.edges.is_empty());
        assert_eq!(g.node_features.at(0, 8), 0.0, "lone node position is 0");
        assert_eq!(g.feature_width(), 12);
    }

    #[test]
    fn disjoint_gates_only_chain() {
        let bp = CircuitBlueprint::new(2, vec![h(0), h(1)]);
        let g = encode(&bp).unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
    }

    #[test]
    fn shared_qubit_edges_and_flags() {
        let bp = CircuitBlueprint::new(
            2,
            vec![h(0), h(1), GateInstance::two_q(GateKind::CX, 0, 1, None)],
        );
        let g = encode(&bp).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (0, 2), (1, 2)]);
        // node 2: two-qubit flag and incidence on both qubits
        assert_eq!(g.node_features.at(2, 9), 1.0);
        assert_eq!(g.node_features.at(2, 10), 1.0);
        assert_eq!(g.node_features.at(2, 11), 1.0);
        // node 0: one-hot H, no flag
        assert_eq!(g.node_features.at(0, GateKind::H.index()), 1.0);
        assert_eq!(g.node_features.at(0, 11), 0.0);
    }

    #[test]
    fn consecutive_mode_is_sparser() {
        // three gates all on qubit 0: transitive adds 0->2, consecutive does not
        let bp = CircuitBlueprint::new(1, vec![h(0), h(0), h(0)]);
        let t = encode_with_mode(&bp, SharedQubitMode::Transitive).unwrap();
        let c = encode_with_mode(&bp, SharedQubitMode::ConsecutiveOnly).unwrap();
        assert_eq!(t.edges, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(c.edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn feature_width_is_q_plus_10() {
        for q in 2..=12u32 {
            let bp = CircuitBlueprint::new(q, vec![h(0), h(1 % q)]);
            let g = encode(&bp).unwrap();
            assert_eq!(g.feature_width(), q as usize + 10);
        }
    }

    #[test]
    fn edge_count_bounds() {
        let bp = CircuitBlueprint::new(
            3,
            vec![
                h(0),
                GateInstance::two_q(GateKind::CZ, 0, 1, None),
                h(2),
                GateInstance::two_q(GateKind::RZZ, 1, 2, Some(0.4)),
                h(0),
            ],
        );
        let g = encode(&bp).unwrap();
        let n = g.num_nodes;
        assert!(g.edges.len() >= n - 1);
        assert!(g.edges.len() <= n * (n - 1) / 2);
        // no self loops, no duplicates, all past -> future
        for &(s, d) in &g.edges {
            assert!(s < d);
        }
        let mut dedup = g.edges.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), g.edges.len());
    }

    #[test]
    fn swapping_entangled_gates_changes_encoding() {
        // permuting two gates that share a qubit must alter edges or features
        let a = CircuitBlueprint::new(
            2,
            vec![
                GateInstance::one_q(GateKind::RX, 0, Some(1.0)),
                GateInstance::two_q(GateKind::CX, 0, 1, None),
            ],
        );
        let mut b = a.clone();
        b.gates.swap(0, 1);
        let ga = encode(&a).unwrap();
        let gb = encode(&b).unwrap();
        assert!(
            ga.edges != gb.edges || ga.node_features != gb.node_features,
            "encoding must distinguish the orderings"
        );
    }

    #[test]
    fn equal_counts_unequal_graphs() {
        // same flat features, different topology
        let a = CircuitBlueprint::new(
            3,
            vec![
                GateInstance::two_q(GateKind::CX, 0, 1, None),
                h(2),
                GateInstance::two_q(GateKind::CX, 0, 1, None),
            ],
        );
        let b = CircuitBlueprint::new(
            3,
            vec![
                GateInstance::two_q(GateKind::CX, 0, 1, None),
                GateInstance::two_q(GateKind::CX, 1, 2, None),
                h(0),
            ],
        );
        assert_eq!(flat_features(&a).unwrap(), flat_features(&b).unwrap());
        let ga = encode(&a).unwrap();
        let gb = encode(&b).unwrap();
        assert!(ga.edges != gb.edges || ga.node_features != gb.node_features);
    }

    #[test]
    fn flat_vector_contents() {
        let bp = CircuitBlueprint::new(4, vec![h(0)]);
        let v = flat_features(&bp).unwrap();
        assert_eq!(v.len(), FLAT_FEATURE_WIDTH);
        assert_eq!(v[GateKind::H.index()], 1.0);
        assert_eq!(&v[8..], &[1.0, 0.0, 0.0, 1.0, 4.0]);

        let bp = CircuitBlueprint::new(
            2,
            vec![
                GateInstance::two_q(GateKind::CZ, 0, 1, None),
                GateInstance::two_q(GateKind::CZ, 0, 1, None),
            ],
        );
        let v = flat_features(&bp).unwrap();
        assert_eq!(v[GateKind::CZ.index()], 2.0);
        assert_eq!(&v[8..], &[2.0, 2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn empty_blueprint_rejected() {
        let bp = CircuitBlueprint::new(2, vec![]);
        assert!(encode(&bp).is_err());
    }

    #[test]
    fn graph_json_dump_round_trips() {
        let bp = CircuitBlueprint::new(2, vec![h(0), GateInstance::two_q(GateKind::CX, 0, 1, None)]);
        let g = encode(&bp).unwrap();
        let js = serde_json::to_string(&g).unwrap();
        let back: CircuitGraph = serde_json::from_str(&js).unwrap();
        assert_eq!(back.edges, g.edges);
        assert_eq!(back.node_features, g.node_features);
    }
}
