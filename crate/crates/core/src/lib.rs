//! Exact state-vector VQE for the spin-1/2 Heisenberg antiferromagnet on
//! finite kagome patches.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: patches, edge colourings and dimer coverings
//! - [`embed`]: round schedules for square-grid and all-to-all hardware
//! - [`statevec`]: dense state vectors, two-qubit Heisenberg gates, sampling
//! - [`exactdiag`]: sparse Hamiltonians, Lanczos and a dense oracle
//! - [`ansatz`]: Hamiltonian-variational circuits in four parametrisations
//! - [`optim`]: L-BFGS with a strong-Wolfe line search
//! - [`vqe`]: objective, adjoint gradients, runs, sweeps, gradient statistics
//! - [`observables`]: correlations, structure factor, spin gap, shot estimators

pub mod ansatz;
pub mod embed;
pub mod error;
pub mod exactdiag;
pub mod lattice;
pub mod observables;
pub mod optim;
pub mod statevec;
pub mod vqe;

pub use error::{Error, Result};
