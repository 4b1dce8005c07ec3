//! Heisenberg-picture dynamics over a complete Hermitian operator basis.
//!
//! Expectation values `w_i = ⟨Q_i⟩` obey `dw/dt = Λw` with a real generator
//! built from the coherent and dissipative parts of the master equation. A
//! Schrödinger-picture density-matrix evolution is kept alongside as an
//! independent check.

mod dissipator;
mod generator;
mod integrate;
mod oracle;

pub use dissipator::{apply_dissipator, Dissipator, DissipatorTerm};
pub use generator::{
    build_generator, coherent_part, dissipative_part, expectation, hamiltonian_action, GeneratorCache,
    GeneratorMatrix, StateVector,
};
pub use integrate::{
    integrate, integrate_to_steady, propagate_exponential, steady_state, IntegratorOptions, Method,
    SteadyCriterion, Trajectory,
};
pub use oracle::{density_matrix_oracle, DensityMatrixOracle, ORACLE_DIMENSION_LIMIT};
