//! Exact completion of two-particle reduced density matrices for small
//! fermionic lattice models.
//!
//! The crate builds inhomogeneous Fermi–Hubbard Hamiltonians, folds them into
//! a pair-space reduced Hamiltonian, extracts the critical subset of 2-RDM
//! positions that reduced Hamiltonian touches, and reconstructs the full 2-RDM
//! from that subset by stochastic annealing over the unitary orbit of a trial
//! state.

pub mod annealer;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod hamiltonian;
pub mod heatmap;
mod linalg;
pub mod rdm;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
