use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major complex `rows x cols` matrix with `rows >= cols >= 1`.
///
/// This is the matrix `K` whose entries diffuse; `L = K^H K` is the Wishart
/// matrix.  Square matrices are allowed (needed at the hard edge).
#[derive(Debug, Clone, PartialEq)]
pub struct RectComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl RectComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if cols == 0 || rows < cols {
            return Err(Error::InvalidInput("matrix needs rows >= cols >= 1"));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput("entry count differs from rows * cols"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, alloc::vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    /// Builds a matrix with real entries given row-major.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Position of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
            .map(|i| (i / self.cols, i % self.cols))
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            Some((row, col)) => Err(Error::NonFinite { row, col }),
            None => Ok(()),
        }
    }
}

/// Eigenvalues of `L = K^H K` at one scaled time, ascending and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub time_tau: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sum_i lambda_i^k / N`.
    pub fn moment(&self, k: i32) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().map(|&l| l.powi(k)).sum::<f64>() / n
    }
}

/// `det(z - L) = prod_i (z - lambda_i)` for one sampled spectrum.
pub fn characteristic_value(z: Complex64, spectrum: &Spectrum) -> Complex64 {
    spectrum
        .values
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &l| acc * (z - l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wide_and_mismatched_shapes() {
        assert!(RectComplexMatrix::zeros(2, 3).is_err());
        assert!(RectComplexMatrix::zeros(0, 0).is_err());
        assert!(RectComplexMatrix::new(2, 2, alloc::vec![Complex64::new(0.0, 0.0); 3]).is_err());
        assert!(RectComplexMatrix::zeros(3, 3).is_ok());
    }

    #[test]
    fn characteristic_value_examples() {
        let s = Spectrum { values: alloc::vec![1.0, 2.0], time_tau: 1.0 };
        assert_eq!(characteristic_value(Complex64::new(0.0, 0.0), &s), Complex64::new(2.0, 0.0));
        assert_eq!(characteristic_value(Complex64::new(1.0, 0.0), &s), Complex64::new(0.0, 0.0));
        let s = Spectrum { values: alloc::vec![9.0, 16.0], time_tau: 1.0 };
        assert_eq!(characteristic_value(Complex64::new(1.0, 0.0), &s), Complex64::new(120.0, 0.0));
    }

    #[test]
    fn finds_non_finite_entry() {
        let mut k = RectComplexMatrix::zeros(3, 2).unwrap();
        k.set(2, 1, Complex64::new(f64::NAN, 0.0));
        assert_eq!(k.first_non_finite(), Some((2, 1)));
        assert_eq!(k.check_finite(), Err(Error::NonFinite { row: 2, col: 1 }));
    }
}
