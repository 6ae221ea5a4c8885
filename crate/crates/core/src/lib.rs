//! Numerical laboratory for degenerate complex Monge-Ampère and σ_k-Hessian
//! equations on flat complex tori.
//!
//! The torus `X = (ℝ/ℤ)^{2n}` carries a constant Kähler form `ω` (a positive
//! definite Hermitian matrix `g`) and a nef class represented by a constant
//! positive semidefinite matrix `χ₀` plus an exact perturbation `i∂∂̄ρ`.
//! Everything is discretized spectrally, so the discrete operators inherit the
//! exactness identities of the continuous ones (zero-mean Hessians, invariance
//! of the Monge-Ampère mass).
//!
//! Module map:
//!
//! - [`geometry`]: grids, fields, the spectral complex Hessian, determinant
//!   and σ_k ratios, quadrature and cohomology constants.
//! - [`ma`]: damped Newton solvers for the Monge-Ampère family, the
//!   β-approximation of the envelope and the auxiliary sublevel equation.
//! - [`hessian`]: the σ_k family, Γ_k admissibility and the barrier check.
//! - [`envelope`]: envelopes via the β-scheme with two-sided error bars.
//! - [`estimates`]: sublevel statistics and the inequality chain leading to
//!   the uniform bound.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// `num_traits::Float` supplies float math without std; whenever std ends up
// linked its inherent methods take precedence and the import looks unused.
#![allow(unused_imports)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod envelope;
pub mod error;
pub mod estimates;
mod fft;
pub mod geometry;
pub mod herm;
pub mod hessian;
mod krylov;
pub mod ma;
mod newton;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::{Grid, HermitianField, NefClassSpec, PeriodicField, Problem, ProblemSpec, Torus};
pub use herm::HermMat;
pub use newton::{SolveResult, SolverOptions};
