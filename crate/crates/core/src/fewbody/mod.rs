//! Exact diagonalization for N bosons in M fixed oscillator orbitals.
//!
//! The orbitals are eigenfunctions of the pre-quench trap for all times; the
//! quench enters only through the one-body matrix.

mod analysis;
mod basis;
mod dynamics;
mod hamiltonian;
mod observables;

pub use analysis::{
    cm_mixing_diagnostic, ed_ground_energy, run_ed_quench, validate_busch_relation, CmMixingReport, CmMixingRow, EdRun,
    EdSettings, RelationReport, RelationRow,
};
pub use basis::{binomial, fock_dimension, FockBasis, DEFAULT_BASIS_CAP};
pub use dynamics::{
    ground_state, propagate_quench, propagate_states, ManyBodyState, PositionOperators, PropagationOptions,
    PropagatorKind, TimeGrid, Trajectory, C64, DENSE_LIMIT,
};
pub use hamiltonian::{
    build_hamiltonian, build_hamiltonian_with_table, contact_operator, one_body_operator, Hamiltonian,
};
pub use observables::{one_body_density, x2_expectation, x_expectation, OneBodyDensity};
