//! Singular values of rectangular complex matrices.
//!
//! Householder QR first reduces `A` (M x N) to its N x N triangular factor,
//! then cyclic one-sided (Hestenes) Jacobi rotations orthogonalise the columns
//! of that factor.  Column norms at convergence are the singular values.
//! Columns are stored split into real and imaginary parts, column-major.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::matrix::{RectComplexMatrix, Spectrum};
use crate::error::Result;

/// A column pair is treated as orthogonal once `|a_p^H a_q| <= tol * |a_p| |a_q|`.
const ORTHOGONALITY_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 30;

/// Thin SVD `A = U diag(sigma) V^H`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// M x N with orthonormal columns; columns for zero singular values are zero.
    pub u: Option<RectComplexMatrix>,
    /// N x N unitary.
    pub v: Option<RectComplexMatrix>,
}

struct Columns {
    len: usize,
    count: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Columns {
    fn zeros(len: usize, count: usize) -> Self {
        Self { len, count, re: vec![0.0; len * count], im: vec![0.0; len * count] }
    }

    fn identity(n: usize) -> Self {
        let mut c = Self::zeros(n, n);
        for j in 0..n {
            c.re[j * n + j] = 1.0;
        }
        c
    }

    fn from_matrix(a: &RectComplexMatrix) -> Self {
        let mut c = Self::zeros(a.rows(), a.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let z = a.get(i, j);
                c.re[j * c.len + i] = z.re;
                c.im[j * c.len + i] = z.im;
            }
        }
        c
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[j * self.len + i], self.im[j * self.len + i])
    }

    #[inline]
    fn put(&mut self, i: usize, j: usize, z: Complex64) {
        self.re[j * self.len + i] = z.re;
        self.im[j * self.len + i] = z.im;
    }

    fn col_norm_sqr(&self, j: usize) -> f64 {
        let r = &self.re[j * self.len..(j + 1) * self.len];
        let m = &self.im[j * self.len..(j + 1) * self.len];
        r.iter().zip(m).map(|(a, b)| a * a + b * b).sum()
    }

    /// Mutable views of columns `p < q` as (re_p, im_p, re_q, im_q).
    fn pair_mut(&mut self, p: usize, q: usize) -> [&mut [f64]; 4] {
        debug_assert!(p < q);
        let len = self.len;
        let (re_lo, re_hi) = self.re.split_at_mut(q * len);
        let (im_lo, im_hi) = self.im.split_at_mut(q * len);
        [
            &mut re_lo[p * len..(p + 1) * len],
            &mut im_lo[p * len..(p + 1) * len],
            &mut re_hi[..len],
            &mut im_hi[..len],
        ]
    }

    fn to_matrix(&self) -> RectComplexMatrix {
        let mut out = RectComplexMatrix::zeros(self.len, self.count).expect("len >= count >= 1");
        for i in 0..self.len {
            for j in 0..self.count {
                out.set(i, j, self.at(i, j));
            }
        }
        out
    }
}

/// In-place Householder QR in LAPACK `zgeqrf` layout: `R` on and above the
/// diagonal, reflector tails below it.  Returns the reflector scalars.
#[allow(clippy::needless_range_loop)]
fn householder_qr(a: &mut Columns) -> Vec<Complex64> {
    let (m, n) = (a.len, a.count);
    let mut taus = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let alpha = a.at(k, k);
        let tail_sqr: f64 = (k + 1..m).map(|i| a.at(i, k).norm_sqr()).sum();
        if tail_sqr == 0.0 && alpha.im == 0.0 {
            continue;
        }
        let norm = (alpha.norm_sqr() + tail_sqr).sqrt();
        let beta = if alpha.re >= 0.0 { -norm } else { norm };
        let tau = (Complex64::new(beta, 0.0) - alpha) / beta;
        let scale = Complex64::new(1.0, 0.0) / (alpha - beta);
        for i in k + 1..m {
            let v = a.at(i, k) * scale;
            a.put(i, k, v);
        }
        a.put(k, k, Complex64::new(beta, 0.0));
        taus[k] = tau;

        // A <- (I - conj(tau) v v^H) A on the trailing columns.
        let ctau = tau.conj();
        for j in k + 1..n {
            let mut w = a.at(k, j);
            for i in k + 1..m {
                w += a.at(i, k).conj() * a.at(i, j);
            }
            w *= ctau;
            let akj = a.at(k, j) - w;
            a.put(k, j, akj);
            for i in k + 1..m {
                let aij = a.at(i, j) - w * a.at(i, k);
                a.put(i, j, aij);
            }
        }
    }
    taus
}

/// Thin `Q` (M x N) from the reflectors left by [`householder_qr`].
fn thin_q(qr: &Columns, taus: &[Complex64]) -> Columns {
    let (m, n) = (qr.len, qr.count);
    let mut q = Columns::zeros(m, n);
    for j in 0..n {
        q.re[j * m + j] = 1.0;
    }
    for k in (0..n).rev() {
        let tau = taus[k];
        if tau == Complex64::new(0.0, 0.0) {
            continue;
        }
        for j in 0..n {
            let mut w = q.at(k, j);
            for i in k + 1..m {
                w += qr.at(i, k).conj() * q.at(i, j);
            }
            w *= tau;
            let qkj = q.at(k, j) - w;
            q.put(k, j, qkj);
            for i in k + 1..m {
                let qij = q.at(i, j) - w * qr.at(i, k);
                q.put(i, j, qij);
            }
        }
    }
    q
}

/// Rotation that orthogonalises a column pair: `a_p <- c a_p - s e a_q`,
/// `a_q <- s a_p + c e a_q` with the unit phase `e`.
#[derive(Clone, Copy)]
struct Rotation {
    c: f64,
    s: f64,
    phase: Complex64,
}

impl Rotation {
    fn apply(&self, [pr, pi, qr, qi]: [&mut [f64]; 4]) {
        let (c, s, er, ei) = (self.c, self.s, self.phase.re, self.phase.im);
        for (((xr, xi), yr), yi) in pr.iter_mut().zip(pi.iter_mut()).zip(qr.iter_mut()).zip(qi.iter_mut()) {
            let (ar, ai) = (*xr, *xi);
            let br = er * *yr - ei * *yi;
            let bi = er * *yi + ei * *yr;
            *xr = c * ar - s * br;
            *xi = c * ai - s * bi;
            *yr = s * ar + c * br;
            *yi = s * ai + c * bi;
        }
    }
}

/// Gram entries `(|a_p|^2, |a_q|^2, a_p^H a_q)` in one pass.
fn gram_pair(pr: &[f64], pi: &[f64], qr: &[f64], qi: &[f64]) -> (f64, f64, Complex64) {
    let (mut a, mut b, mut gr, mut gi) = (0.0, 0.0, 0.0, 0.0);
    for (((&xr, &xi), &yr), &yi) in pr.iter().zip(pi).zip(qr).zip(qi) {
        a += xr * xr + xi * xi;
        b += yr * yr + yi * yi;
        gr += xr * yr + xi * yi;
        gi += xr * yi - xi * yr;
    }
    (a, b, Complex64::new(gr, gi))
}

fn jacobi_sweeps(a: &mut Columns, mut v: Option<&mut Columns>) {
    let n = a.count;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let [pr, pi, qr, qi] = a.pair_mut(p, q);
                let (alpha, beta, gamma) = gram_pair(pr, pi, qr, qi);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let g = gamma.norm();
                if g <= ORTHOGONALITY_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let rot = Rotation { c, s: c * t, phase: gamma.conj() / g };
                rot.apply([pr, pi, qr, qi]);
                if let Some(v) = v.as_deref_mut() {
                    rot.apply(v.pair_mut(p, q));
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

fn decompose(a: &RectComplexMatrix, vectors: bool) -> Result<Svd> {
    a.check_finite()?;
    let n = a.cols();
    let mut qr = Columns::from_matrix(a);
    let taus = householder_qr(&mut qr);

    let mut r = Columns::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            r.put(i, j, qr.at(i, j));
        }
    }
    let mut v = vectors.then(|| Columns::identity(n));
    jacobi_sweeps(&mut r, v.as_mut());

    let norms: Vec<f64> = (0..n).map(|j| r.col_norm_sqr(j).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    if !vectors {
        return Ok(Svd { singular_values, u: None, v: None });
    }

    let q = thin_q(&qr, &taus);
    let m = a.rows();
    let mut u = Columns::zeros(m, n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        if sigma == 0.0 {
            continue;
        }
        for l in 0..n {
            let coeff = r.at(l, src) / sigma;
            if coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..m {
                let z = u.at(i, dst) + q.at(i, l) * coeff;
                u.put(i, dst, z);
            }
        }
    }
    let v = v.expect("requested");
    let mut v_sorted = Columns::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            v_sorted.put(i, dst, v.at(i, src));
        }
    }
    Ok(Svd { singular_values, u: Some(u.to_matrix()), v: Some(v_sorted.to_matrix()) })
}

/// Full thin SVD; `vectors = false` skips `U` and `V`.
pub fn svd(a: &RectComplexMatrix, vectors: bool) -> Result<Svd> {
    decompose(a, vectors)
}

/// Singular values `sigma_1 >= ... >= sigma_N >= 0`.
pub fn svd_singular_values(a: &RectComplexMatrix) -> Result<Vec<f64>> {
    Ok(decompose(a, false)?.singular_values)
}

/// Eigenvalues of `K^H K` (squared singular values), ascending, stamped with `tau`.
pub fn wishart_spectrum(k: &RectComplexMatrix, tau: f64) -> Result<Spectrum> {
    let mut values: Vec<f64> = svd_singular_values(k)?.into_iter().map(|s| s * s).collect();
    values.reverse();
    Ok(Spectrum { values, time_tau: tau })
}
