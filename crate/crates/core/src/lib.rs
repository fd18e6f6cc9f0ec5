//! Time evolution of the open spin-1/2 XXZ chain with matrix product states.
//!
//! The crate evolves product initial states (Néel and domain wall) under
//! `H = Σ J_xy(σˣσˣ + σʸσʸ) + J_z σᶻσᶻ` (or the same with `S = σ/2`, see
//! [`SpinOperators`]) with a second-order Trotter decomposition, tracks the
//! Wootters concurrence of every nearest-neighbour pair, and checks itself
//! against dense exact diagonalization on short chains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ed;
pub mod mps;
pub mod observables;
pub mod quench;
pub mod snapshot;
pub mod spin_model;
mod svd;
pub mod tebd;

pub use mps::{DensityMatrix4, MpsError, MpsState, TruncationParams, TruncationReport};
pub use spin_model::{bond_gate, bond_hamiltonian, pauli, Axis, BondGate, BondOperator, CouplingParams, Spin, SpinOperators};
