//! Backstepping stabilization of the periodic transport equation
//!
//! ```text
//!     α_t + α_x + μ α = ⟨α(t), F⟩ φ(x),   x ∈ [0, L],   α(t, 0) = α(t, L)
//! ```
//!
//! with a scalar internal control acting through a fixed profile `φ`.
//! Everything lives on the Fourier side: states are truncated two-sided
//! coefficient sequences in the basis `e_n(x) = e^{2iπnx/L} / √L`, the
//! feedback `F` is the coefficient sequence `F_n = −K(λ) / conj(φ_n)` and the
//! Fredholm transformation is a multiplier–Toeplitz–multiplier product.
//!
//! Module map:
//!
//! * [`spectral`] – truncated Fourier series, Sobolev norms, the elementary
//!   profiles `Λ^λ_n`, point evaluation.
//! * [`toeplitz`] – FFT-backed Toeplitz products used by the transform.
//! * [`piecewise`] – piecewise exponential × trigonometric functions, the
//!   exact carrier for transformed states.
//! * [`controller`] – controller descriptions, exact coefficients, growth
//!   certificates, jump coefficients, gauge transform.
//! * [`feedback`] – the feedback law, its evaluation and regular/singular split.
//! * [`transform`] – kernels `k_{n,λ}`, the transformation and its inverse.
//! * [`simulate`] – target/closed-loop evolution and decay diagnostics.
//! * [`verify`] – certification checks and the report.
//! * [`finitedim`] – the finite-dimensional analogue (matrices).
//! * [`config`], [`cli`], [`output`] – configuration-driven runner.

pub mod cli;
pub mod config;
pub mod controller;
pub mod error;
pub mod feedback;
pub mod finitedim;
pub mod output;
pub mod piecewise;
pub mod quadrature;
pub mod simulate;
pub mod spectral;
pub mod toeplitz;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Version string embedded in every output file.
pub const ARTIFACT_VERSION: &str = concat!("backstep ", env!("CARGO_PKG_VERSION"));
