//! One-step β-parameterized time integrators for linear and semilinear
//! parabolic problems `u_t + L u = f`.
//!
//! The schemes are built by Taylor-expanding about shifted nodes `t^{n+β}`,
//! combining two or three such relations, and eliminating the intermediate
//! layers (`u^{n+1/2}`, or `u^{n+1/3}` and `u^{n+2/3}`) algebraically. The
//! result is a rational function of `Δt·L` applied to `u^n`, plus forcing
//! weights, which is how [`schemes`] evaluates a step.
//!
//! Modules:
//! - [`coeffs`]: Vandermonde-derived difference/interpolation weights.
//! - [`operators`]: the linear operator `L` (scalar, diagonal, dense) and
//!   polynomial-in-`L` application and inversion.
//! - [`schemes`]: the second- and third-order one-step steppers, RK2/RK3
//!   baselines, the explicit predictor, and [`schemes::integrate`].
//! - [`stability`]: stability functions, A-/L-stability classification,
//!   region rasters.
//! - [`spectral`]: periodic 2D Fourier pseudo-spectral discretization.
//! - [`problems`]: the benchmark problems.
//! - [`harness`]: error norms and convergence studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod error;
pub mod harness;
pub mod operators;
pub mod problems;
pub mod schemes;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
