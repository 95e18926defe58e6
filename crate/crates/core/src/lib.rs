//! Numerics for the Brownian diffusion of complex Wishart matrices.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every algorithm the
//! experiment runner uses:
//!
//! * [`linalg`]: complex rectangular matrices and a QR-preconditioned
//!   one-sided Jacobi SVD, from which Wishart spectra are taken.
//! * [`stochastic`]: the matrix-valued random walk, the eigenvalue and
//!   singular-value SDEs, seeded per-replica sampling and histograms.
//! * [`analytic`]: large-N closed forms (resolvents, Marcenko–Pastur density,
//!   complex characteristics and their caustics, R-transform) plus the exact
//!   joint eigenvalue law for small N.
//! * [`orthopoly`]: time-dependent monic Laguerre polynomials, the exact
//!   finite-N equation for the averaged characteristic polynomial, its
//!   Cole–Hopf field and the Cauchy transform.
//! * [`special`]: Airy and Bessel functions and the soft/hard edge scaling
//!   predictions built on them.
//!
//! All public APIs take the scaled time `tau`; the physical diffusion time of
//! the matrix entries is `t = r * tau / (2N)` (see [`stochastic::TimeConvention`]).

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod error;
pub mod linalg;
pub mod orthopoly;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stochastic;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use num_rational::BigRational;
