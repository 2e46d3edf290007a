//! Exact diagonalization of a Josephson junction coupled to an N-mode
//! transmission-line resonator.
//!
//! The crate builds the charge-gauge Hamiltonian of the junction-terminated
//! LC chain, renormalizes the junction parameters in closed form, and
//! diagonalizes the quasi-charge-blocked sparse Hamiltonian on an
//! energy-truncated Fock basis. All energies are dimensionless (`ħ = 1`,
//! `E_C = 1`); the control parameter is the impedance ratio `z = R_q/Z`,
//! with the transition emerging at `z = 1` as the free spectral range
//! shrinks.
//!
//! Pipeline: [`circuit_modes`] → [`bare_junction`] + [`fock_basis`] →
//! [`spectrum`] → [`observables`], with [`renormalization`] (closed forms)
//! and [`polaron`] (displaced-oscillator analytics) as independent routes
//! used for cross-checks.

pub mod bare_junction;
pub mod circuit_modes;
pub mod cli;
pub mod error;
pub mod fock_basis;
pub mod lanczos;
pub mod observables;
pub mod par;
pub mod polaron;
pub mod renormalization;
pub mod sparse;
pub mod spectrum;
pub mod table;

pub use circuit_modes::{LineSpec, ModeDecomposition};
pub use error::{Error, Result};
pub use lanczos::EigResult;
pub use sparse::SparseBlock;
pub use spectrum::SolverConfig;
