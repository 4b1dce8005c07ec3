//! Driven multilevel emitters coupled through the free-space electromagnetic
//! field.
//!
//! The crate builds rotating-frame Hamiltonians for small emitter arrays,
//! computes collective dressed states and decay channels, evolves
//! Heisenberg-picture expectation values through a real linear generator over
//! a complete Hermitian operator basis, and evaluates two-photon coincidence
//! observables for a cascade.
//!
//! Units: angular frequencies and rates in 10⁶ rad/s, lengths in nm, times in
//! ns at the API boundary.

pub mod dressed_spectra;
pub mod dynamics;
pub mod em_coupling;
mod error;
pub mod observables;
pub mod operator_algebra;
pub mod runner;
pub mod system_model;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type Complex = num_complex::Complex64;
/// Dense complex matrix on an emitter Hilbert space.
pub type CMatrix = nalgebra::DMatrix<Complex>;
/// Real 3-vector (positions, wave vectors, directions).
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex 3-vector (dipole orientations).
pub type CVec3 = nalgebra::Vector3<Complex>;

pub(crate) fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Largest entry magnitude of a complex matrix.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}
