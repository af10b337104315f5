//! Simulation of quantum adiabatic evolution on random 3-bit Exact Cover
//! instances.
//!
//! * [`instance`]: clauses, assignments, random generators and the
//!   brute-force classical oracle.
//! * [`hamiltonian`]: the cost table, transverse-field strengths and the
//!   matrix-free application of `H(s) = (1 - s) H_B + s H_P`.
//! * [`evolution`]: state vectors, the Schrödinger integrator and
//!   success-probability readout.
//! * [`experiments`]: run-time search, medians with confidence limits,
//!   quadratic fits and the ensemble sweeps.

pub mod error;
pub mod evolution;
pub mod experiments;
pub mod hamiltonian;
pub mod instance;

pub use error::{Error, Result};
pub use evolution::{
    amplified_success, evolve, initial_state, success_probability, EvolutionConfig, StateVector,
    StepControl,
};
pub use hamiltonian::{HamiltonianData, InterpolationPoint};
pub use instance::{
    clause_cost, generate_fixed_clauses, generate_gusa, Assignment, Clause, ExactCoverInstance,
};
