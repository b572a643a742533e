//! Numerical companion library for the analysis of trapped Bose gases in the
//! Gross-Pitaevskii regime: zero-energy scattering, GP ground states, Bogoliubov
//! quadratic Hamiltonians with sharp lower bounds, homogeneous-torus lattice sums,
//! quasi-free states and desk-scale many-body exact diagonalization.
//!
//! Units: ħ = 2m = 1 throughout (the kinetic operator is −Δ).

pub mod error;
pub mod grid;
pub mod gp;
pub mod homogeneous;
pub mod linalg;
pub mod many_body;
pub mod potential;
pub mod quadratic;
pub mod quadrature;
pub mod quasifree;
pub mod scattering;

pub use error::{Error, Result};
