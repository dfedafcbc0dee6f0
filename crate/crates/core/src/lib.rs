//! Fundamental solution, singular kernels and solvers for the Kolmogorov
//! operator `L = ∂t − Δy + y·∇x` on `ℝ^d × ℝ^d × ℝ`.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: the non-commutative group law, dilations, quasi-norm and
//!   quasi-distance, ball volumes.
//! * [`kernel`]: the fundamental solution, its Fourier symbol, and the two
//!   singular kernels obtained by applying `Δy` and `|∇x|^{2/3}`.
//! * [`fractional`]: the fractional Laplacian in `x`, as a spectral
//!   multiplier and as a principal-value singular integral.
//! * [`discretization`]: grids, sampled fields, mixed Lebesgue norms.
//! * [`solver`]: spectral and pointwise solvers for `Lu = f`, the
//!   time-averaged stationary construction and the weak-form check.
//! * [`estimator`]: the regularity, Hörmander and weak-(1,1) experiments.

// Negated comparisons such as `!(x > 0.0)` are used to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod error;
pub mod estimator;
pub mod fractional;
pub mod geometry;
pub mod kernel;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
