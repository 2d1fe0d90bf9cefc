//! Graph-surrogate Bayesian optimization for variational quantum circuit
//! discovery: circuit IR and mutation, statevector/density-matrix simulation
//! with Kraus noise, a hybrid quantum-classical classifier, a GIN surrogate
//! with MC-dropout uncertainty, cost-tempered expected improvement, the
//! search loop with baselines, and post-hoc analysis (Pareto fronts,
//! convergence metrics, noise-robustness sweeps).

pub mod analysis;
pub mod circuit;
pub mod data;
pub mod error;
pub mod graph;
pub mod nn;
pub mod qasm;
pub mod rng;
pub mod search;
pub mod sim;
pub mod surrogate;
pub mod vqc;

pub use error::{Error, Result};
