//! Linear stability of parallel shear flows with a mixed finite element
//! discretization of the pressure-Poisson form of the normal-mode problem.
//!
//! The pipeline runs bottom-up:
//!
//! * [`mesh`] builds the 1D triangulation of `[0, a]` together with the
//!   velocity (quadratic, wall-constrained) and pressure (linear) numbering.
//! * [`elements`] evaluates shape functions and per-element integral blocks.
//! * [`profiles`] supplies base flows `U(y)`, `U'(y)`.
//! * [`assembly`] builds the global matrices `K, S, L, G, H` of the pencil
//!   `K A + L B = c S A`, `G B = H A`.
//! * [`linalg`] holds the dense complex LU, Cholesky, Hessenberg-QR and QZ
//!   kernels.
//! * [`solver`] eliminates the pressure, solves the eigenproblem and turns
//!   eigenpairs into normalized [`solver::Mode`]s.
//! * [`sweep`] scans `(Re, alpha)` space: grids, neutral curves, contours.
//! * [`oracle`] is an independent Chebyshev collocation solver for the
//!   classical Orr-Sommerfeld equation used for cross-validation.
//!
//! Interchangeable pieces (profiles, pressure wall closures, eigen paths)
//! are trait objects registered by name, see [`registry`].

pub mod assembly;
pub mod elements;
mod error;
pub mod linalg;
pub mod mesh;
pub mod oracle;
pub mod profiles;
pub mod registry;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
