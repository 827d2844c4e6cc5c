//! Interpolated Hamiltonian families `H(s) = (1 − s) H_B + s H_P`, split
//! clause by clause, with exact-diagonalization spectra and fixed-step
//! Schrödinger evolution.

mod evolution;
mod hamiltonian;
mod sat;

pub use evolution::{
    eigen_residual, evolve, evolve_between, gap_profile, ground_space_overlap,
    overlap_sweep, overlap_with_final_ground, spectrum, OverlapReport, Schedule,
    SpectrumSnapshot, DEGENERACY_TOLERANCE, MAX_DIAG_DIM, MIN_STEPS_PER_UNIT_TIME,
};
pub use hamiltonian::{
    build_base_hamiltonian, build_problem_hamiltonian, interpolate, total_base, total_problem,
    ClauseTerm, Hamiltonian, MAX_HAMILTONIAN_QUBITS,
};
pub use sat::{Literal, SatInstance};
