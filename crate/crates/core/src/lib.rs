//! Contour-free and contour-based solvers for nonlinear eigenvalue problems
//! `T(λ) v = 0` on a target region of the complex plane.
//!
//! The building blocks are layered bottom-up:
//!
//! - [`kernels`]: dense solves, truncated SVD and eigendecomposition.
//! - [`sampling`]: regions, sampling points and weights.
//! - [`problems`]: problem definitions and canonical test problems.
//! - [`probing`]: resolvent probes `T(zᵢ)⁻¹ U` and moment matrices.
//! - [`ss_solver`]: the Hankel-pencil moment solver.
//! - [`rsrr`]: the randomized sketch-and-project solver.
//! - [`io`]: run configuration, Matrix Market input and result output.

pub mod error;
pub mod io;
pub mod kernels;
pub mod probing;
pub mod problems;
pub mod rsrr;
pub mod sampling;
pub mod ss_solver;

pub use error::{Error, Result};
pub use kernels::DenseMatrix;

pub type C64 = num_complex::Complex64;
