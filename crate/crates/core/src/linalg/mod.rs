//! Dense complex linear algebra.
//!
//! Only what the Wishart experiments need: rectangular complex matrices, their
//! singular values (and optionally vectors), and a symmetric tridiagonal
//! eigensolver used to build Gauss quadrature rules.

mod matrix;
mod svd;
mod tridiag;

pub use matrix::{characteristic_value, RectComplexMatrix, Spectrum};
pub use svd::{svd, svd_singular_values, wishart_spectrum, Svd};
pub use tridiag::symmetric_tridiagonal_eigen;
