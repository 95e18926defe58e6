//! Generalised Laguerre polynomials and the time-dependent monic family
//! `M^a_n(x, T) = (-T)^n n! L^a_n(x/T)`.
//!
//! With `a = nu`, `n = N` and raw time `T = r tau / N`, `M` is the averaged
//! characteristic polynomial `<det(z - L(tau))>` and obeys, for every `N`,
//! `dM/dtau = -(r/N) (z M'' + (1 + nu) M')`.
//!
//! Coefficient tables are exact rationals (see [`BiPoly`]); fast evaluation
//! uses the monic three-term recurrence, which avoids the cancellation of the
//! alternating coefficient sum.

use alloc::vec::Vec;

use core::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::symmetric_tridiagonal_eigen;
use crate::quadrature::{gauss_laguerre, Rule};
use crate::stochastic::TimeConvention;

/// `L^alpha_n(x)` by the three-term recurrence in `n`.
pub fn laguerre_eval(n: usize, alpha: f64, x: Complex64) -> Complex64 {
    let mut prev = Complex64::new(1.0, 0.0);
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Real-argument [`laguerre_eval`].
pub fn laguerre_eval_real(n: usize, alpha: f64, x: f64) -> f64 {
    laguerre_eval(n, alpha, Complex64::new(x, 0.0)).re
}

/// Bivariate polynomial `sum c[k][j] x^k t^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPoly<T> {
    coeffs: Vec<Vec<T>>,
}

impl<T: Clone + Num + FromPrimitive> BiPoly<T> {
    /// Zero polynomial with room for degrees `dx` in `x` and `dt` in `t`.
    pub fn zero(dx: usize, dt: usize) -> Self {
        Self { coeffs: alloc::vec![alloc::vec![T::zero(); dt + 1]; dx + 1] }
    }

    pub fn degree_bounds(&self) -> (usize, usize) {
        (self.coeffs.len() - 1, self.coeffs[0].len() - 1)
    }

    pub fn get(&self, k: usize, j: usize) -> T {
        self.coeffs.get(k).and_then(|row| row.get(j)).cloned().unwrap_or_else(T::zero)
    }

    pub fn set(&mut self, k: usize, j: usize, value: T) {
        self.coeffs[k][j] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.is_zero())
    }

    fn from_fn(dx: usize, dt: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        Self { coeffs: (0..=dx).map(|k| (0..=dt).map(|j| f(k, j)).collect()).collect() }
    }

    fn int(k: usize) -> T {
        T::from_usize(k).unwrap_or_else(T::zero)
    }

    pub fn d_x(&self) -> Self {
        let (dx, dt) = self.degree_bounds();
        Self::from_fn(dx, dt, |k, j| self.get(k + 1, j) * Self::int(k + 1))
    }

    pub fn d_t(&self) -> Self {
        let (dx, dt) = self.degree_bounds();
        Self::from_fn(dx, dt, |k, j| self.get(k, j + 1) * Self::int(j + 1))
    }

    /// Multiplies by `x`.
    pub fn mul_x(&self) -> Self {
        let (dx, dt) = self.degree_bounds();
        Self::from_fn(dx + 1, dt, |k, j| if k == 0 { T::zero() } else { self.get(k - 1, j) })
    }

    pub fn scale(&self, c: &T) -> Self {
        let (dx, dt) = self.degree_bounds();
        Self::from_fn(dx, dt, |k, j| self.get(k, j) * c.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let (ax, at) = self.degree_bounds();
        let (bx, bt) = other.degree_bounds();
        Self::from_fn(ax.max(bx), at.max(bt), |k, j| self.get(k, j) + other.get(k, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&(T::zero() - T::one())))
    }

    /// Multiplies by `t`.
    pub fn mul_t(&self) -> Self {
        let (dx, dt) = self.degree_bounds();
        Self::from_fn(dx, dt + 1, |k, j| if j == 0 { T::zero() } else { self.get(k, j - 1) })
    }

    /// Substitutes `t -> c t`.
    pub fn rescale_time(&self, c: &T) -> Self {
        let (dx, dt) = self.degree_bounds();
        let mut pow = alloc::vec![T::one()];
        for j in 1..=dt {
            pow.push(pow[j - 1].clone() * c.clone());
        }
        Self::from_fn(dx, dt, |k, j| self.get(k, j) * pow[j].clone())
    }
}

impl<T: Clone + Num + FromPrimitive + Signed + PartialOrd> BiPoly<T> {
    pub fn max_abs(&self) -> T {
        self.coeffs.iter().flatten().map(|c| c.abs()).fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

impl BiPoly<BigRational> {
    pub fn to_f64(&self) -> BiPoly<f64> {
        let (dx, dt) = self.degree_bounds();
        BiPoly::from_fn(dx, dt, |k, j| self.get(k, j).to_f64().unwrap_or(f64::NAN))
    }
}

/// Exact coefficient table of `M^alpha_n(x, T)` in `x` and raw time `T`.
///
/// The polynomial is homogeneous of degree `n`, so only `c[k][n - k]` is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct MonicTimePoly {
    pub n: usize,
    pub alpha: usize,
    pub table: BiPoly<BigRational>,
}

impl MonicTimePoly {
    /// Coefficient of `x^k T^j`.
    pub fn coeff(&self, k: usize, j: usize) -> BigRational {
        self.table.get(k, j)
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `c_k = (-1)^{n-k} n!/k! C(n + alpha, n - k)` on `x^k T^{n-k}`.
pub fn monic_coeffs(n: usize, alpha: usize) -> MonicTimePoly {
    let mut table = BiPoly::zero(n, n);
    for k in 0..=n {
        let falling: BigInt = (k + 1..=n).map(BigInt::from).product();
        let mut c = falling * binomial(n + alpha, n - k);
        if (n - k) % 2 == 1 {
            c = -c;
        }
        table.set(k, n - k, BigRational::from_integer(c));
    }
    MonicTimePoly { n, alpha, table }
}

/// Floating coefficients of `M^alpha_n`, built from `c_n = 1` by the ratio
/// `c_k / c_{k+1} = -(k + 1)(k + 1 + alpha)/(n - k)`.
pub fn monic_coeffs_f64(n: usize, alpha: usize) -> BiPoly<f64> {
    let mut table = BiPoly::zero(n, n);
    let mut c = 1.0;
    table.set(n, 0, c);
    for k in (0..n).rev() {
        c *= -((k + 1) as f64) * ((k + 1 + alpha) as f64) / ((n - k) as f64);
        table.set(k, n - k, c);
    }
    table
}

/// Horner evaluation of the coefficient table at `(x, T)`.
pub fn monic_eval(poly: &MonicTimePoly, x: Complex64, tau_raw: f64) -> Complex64 {
    let n = poly.n;
    (0..=n).rev().fold(Complex64::new(0.0, 0.0), |acc, k| {
        let c = poly.coeff(k, n - k).to_f64().unwrap_or(f64::NAN);
        acc * x + c * tau_raw.powi((n - k) as i32)
    })
}

/// Exact evaluation at rational `(x, T)`.
pub fn monic_eval_exact(poly: &MonicTimePoly, x: &BigRational, tau_raw: &BigRational) -> BigRational {
    let n = poly.n;
    (0..=n).rev().fold(BigRational::zero(), |acc, k| {
        let mut t = BigRational::one();
        for _ in 0..n - k {
            t *= tau_raw;
        }
        acc * x + poly.coeff(k, n - k) * t
    })
}

/// Maps the scaled time `tau` to the raw polynomial time `T = r tau / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledTimeMap {
    pub conv: TimeConvention,
}

impl ScaledTimeMap {
    pub fn new(conv: TimeConvention) -> Self {
        Self { conv }
    }

    pub fn raw_time(&self, tau: f64) -> f64 {
        self.conv.r() * tau / self.conv.n() as f64
    }
}

/// `(M_n, dM_n/dx)` by the monic recurrence
/// `M_{k+1} = (x - T(2k + a + 1)) M_k - T^2 k (k + a) M_{k-1}`.
///
/// Returns values scaled by a common positive factor when they would
/// overflow; their ratio is exact either way.
fn monic_value_and_slope(n: usize, alpha: f64, x: Complex64, t: f64) -> (Complex64, Complex64, bool) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut m_prev, mut m) = (zero, Complex64::new(1.0, 0.0));
    let (mut d_prev, mut d) = (zero, zero);
    let mut rescaled = false;
    for k in 0..n {
        let kf = k as f64;
        let a = t * (2.0 * kf + alpha + 1.0);
        let b = t * t * kf * (kf + alpha);
        let m_next = (x - a) * m - b * m_prev;
        let d_next = m + (x - a) * d - b * d_prev;
        m_prev = m;
        m = m_next;
        d_prev = d;
        d = d_next;
        let size = m.norm().max(d.norm());
        if size > 1e150 {
            let s = 1.0 / size;
            m *= s;
            m_prev *= s;
            d *= s;
            d_prev *= s;
            rescaled = true;
        }
    }
    (m, d, rescaled)
}

/// Averaged characteristic polynomial `<det(z - L(tau))> = M^nu_N(z, r tau / N)`.
pub fn charpoly(conv: &TimeConvention, z: Complex64, tau: f64) -> Result<Complex64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput("need tau >= 0"));
    }
    let t = ScaledTimeMap::new(*conv).raw_time(tau);
    let (m, _, rescaled) = monic_value_and_slope(conv.n(), conv.nu() as f64, z, t);
    if rescaled {
        return Err(Error::Range(m.norm()));
    }
    Ok(m)
}

/// Zeros of [`charpoly`] (eigenvalues of the Jacobi matrix), ascending.
pub fn charpoly_roots(conv: &TimeConvention, tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("need tau > 0"));
    }
    let t = ScaledTimeMap::new(*conv).raw_time(tau);
    let alpha = conv.nu() as f64;
    let diag: Vec<f64> = (0..conv.n()).map(|k| t * (2.0 * k as f64 + alpha + 1.0)).collect();
    let off: Vec<f64> = (1..conv.n()).map(|k| t * (k as f64 * (k as f64 + alpha)).sqrt()).collect();
    Ok(symmetric_tridiagonal_eigen(&diag, &off)?.0)
}

/// Coefficient table of `dM/dtau + (r/n)(z M'' + (1 + nu) M')` for `M = M^nu_n(z, r tau / n)`.
fn meq_residual_generic<T: Clone + Num + FromPrimitive>(raw: &BiPoly<T>, n: usize, nu: usize, r: T) -> BiPoly<T> {
    let c = r / T::from_usize(n).unwrap_or_else(T::one);
    let scaled = raw.rescale_time(&c);
    let dz = scaled.d_x();
    let spatial = dz.d_x().mul_x().add(&dz.scale(&T::from_usize(1 + nu).unwrap_or_else(T::zero)));
    scaled.d_t().add(&spatial.scale(&c))
}

/// Exact residual of the characteristic-polynomial PDE for degree `n`,
/// Laguerre parameter `nu` and rectangularity `r`, treated as independent.
pub fn meq_residual_exact(n: usize, nu: usize, r: &BigRational) -> Result<BiPoly<BigRational>> {
    if n == 0 {
        return Err(Error::InvalidInput("need N >= 1"));
    }
    Ok(meq_residual_generic(&monic_coeffs(n, nu).table, n, nu, r.clone()))
}

/// Residual for the shape of `conv` (`n = N`, `nu = M - N`, `r = N/M`).
pub fn meq_residual(conv: &TimeConvention) -> Result<BiPoly<BigRational>> {
    let r = BigRational::new(BigInt::from(conv.n()), BigInt::from(conv.m()));
    meq_residual_exact(conv.n(), conv.nu(), &r)
}

/// Floating residual table; compare with the size of the coefficients via [`meq_relative_residual`].
pub fn meq_residual_f64(n: usize, nu: usize, r: f64) -> Result<BiPoly<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("need N >= 1"));
    }
    Ok(meq_residual_generic(&monic_coeffs_f64(n, nu), n, nu, r))
}

/// `max |residual coefficient| / max |scaled coefficient|` on the float path.
pub fn meq_relative_residual(n: usize, nu: usize, r: f64) -> Result<f64> {
    let res = meq_residual_f64(n, nu, r)?;
    let scaled = monic_coeffs_f64(n, nu).rescale_time(&(r / n as f64));
    Ok(res.max_abs() / scaled.max_abs())
}

/// `f_N = (1/N) d/dz ln M^nu_N` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColeHopfValue {
    pub z: Complex64,
    pub tau: f64,
    pub f: Complex64,
    pub n: usize,
}

/// Inverse Cole–Hopf transform of the averaged characteristic polynomial.
pub fn cole_hopf(conv: &TimeConvention, z: Complex64, tau: f64) -> Result<ColeHopfValue> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("need tau > 0"));
    }
    let n = conv.n();
    let t = ScaledTimeMap::new(*conv).raw_time(tau);
    let (m, d, _) = monic_value_and_slope(n, conv.nu() as f64, z, t);
    let f = d / (m * n as f64);
    if m == Complex64::new(0.0, 0.0) || !f.is_finite() {
        return Err(Error::Pole("characteristic polynomial vanishes"));
    }
    Ok(ColeHopfValue { z, tau, f, n })
}

/// Which side of the Cole–Hopf field equation enters the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldTerms {
    /// The exact equation, with the `1/N` viscous terms.
    Full,
    /// The inviscid (Burgers) part only.
    DropViscous,
}

/// Finite-difference residual of
/// `df/dtau + r(2 z f f' + f^2) + (1 - r) f' + (r/N)(2 f' + z f'') = 0`.
pub fn f_pde_residual(conv: &TimeConvention, z: Complex64, tau: f64, h: f64, terms: FieldTerms) -> Result<f64> {
    if !(h > 0.0 && h < tau) {
        return Err(Error::InvalidInput("need 0 < h < tau"));
    }
    let f = |z: Complex64, tau: f64| -> Result<Complex64> {
        cole_hopf(conv, z, tau).map(|v| v.f).map_err(|_| Error::Domain("stencil touches a zero of M"))
    };
    let f0 = f(z, tau)?;
    let (fp, fm) = (f(z + h, tau)?, f(z - h, tau)?);
    let fz = (fp - fm) / (2.0 * h);
    let fzz = (fp - 2.0 * f0 + fm) / (h * h);
    let ft = (f(z, tau + h)? - f(z, tau - h)?) / (2.0 * h);
    Ok(field_equation_residual(conv, z, [f0, fz, fzz, ft], terms))
}

/// Residual of the Cole–Hopf field equation from given `[f, f', f'', df/dtau]`.
pub fn field_equation_residual(conv: &TimeConvention, z: Complex64, derivs: [Complex64; 4], terms: FieldTerms) -> f64 {
    let [f0, fz, fzz, ft] = derivs;
    let (r, n) = (conv.r(), conv.n() as f64);
    let inviscid = ft + r * (2.0 * z * f0 * fz + f0 * f0) + (1.0 - r) * fz;
    let viscous = (r / n) * (2.0 * fz + z * fzz);
    match terms {
        FieldTerms::Full => (inviscid + viscous).norm(),
        FieldTerms::DropViscous => inviscid.norm(),
    }
}

/// Time variables used inside the Cauchy transform.
///
/// `Consistent` uses the raw time `T = r tau / n` both in `M^nu_n(x, T)` and
/// in the weight `(x/T)^nu e^{-x/T}`, and the matching prefactor
/// `(tau/z)^nu e^{z/T}`; with it the transform obeys the same PDE as the
/// polynomial.  `Literal` uses the exponent `r x/(n tau)` and prefactor
/// `(tau/z)^nu e^{r z/(n tau)}`, a combination that does not satisfy it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CauchyReading {
    #[default]
    Consistent,
    Literal,
}

/// Whether the transform is multiplied by its PDE prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prefactor {
    Applied,
    Omitted,
}

/// Parameters of a Cauchy transform `p^nu_n(z, tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchySetup {
    pub n: usize,
    pub nu: usize,
    pub r: f64,
    pub reading: CauchyReading,
}

impl CauchySetup {
    pub fn new(n: usize, nu: usize, r: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("need degree >= 1"));
        }
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidInput("need 0 < r <= 1"));
        }
        Ok(Self { n, nu, r, reading: CauchyReading::Consistent })
    }

    pub fn with_reading(self, reading: CauchyReading) -> Self {
        Self { reading, ..self }
    }

    fn poly_time(&self, tau: f64) -> f64 {
        self.r * tau / self.n as f64
    }

    /// Scale `S` of the exponential weight `e^{-x/S}`.
    fn weight_scale(&self, tau: f64) -> f64 {
        match self.reading {
            CauchyReading::Consistent => self.poly_time(tau),
            CauchyReading::Literal => self.n as f64 * tau / self.r,
        }
    }

    /// Scale `U` of the power weight `(x/U)^nu`.
    fn power_scale(&self, tau: f64) -> f64 {
        match self.reading {
            CauchyReading::Consistent => self.poly_time(tau),
            CauchyReading::Literal => tau,
        }
    }

    /// `(tau/z)^nu e^{z/S}`.
    pub fn prefactor(&self, z: Complex64, tau: f64) -> Complex64 {
        let s = match self.reading {
            CauchyReading::Consistent => self.poly_time(tau),
            CauchyReading::Literal => self.n as f64 * tau / self.r,
        };
        (tau / z).powu(self.nu as u32) * (z / s).exp()
    }

    /// Node count of the first Gauss–Laguerre rule tried.
    pub fn baseline_nodes(&self) -> usize {
        2 * self.n + 16
    }
}

/// Largest Gauss–Laguerre rule the refinement may reach.
pub const CAUCHY_MAX_NODES: usize = 2048;

fn check_off_ray(z: Complex64, tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("need tau > 0"));
    }
    if z.re >= 0.0 && z.im.abs() < 1e-6 * tau {
        return Err(Error::Domain("z lies on the integration ray"));
    }
    Ok(())
}

/// The transform with a given Laguerre rule (weight `u^nu e^{-u}`, `x = S u`).
fn cauchy_with_rule(setup: &CauchySetup, rule: &Rule, z: Complex64, tau: f64) -> Complex64 {
    cauchy_sum(setup, rule, z, tau).0
}

/// Value of the transform and the integral of the modulus of its integrand.
fn cauchy_sum(setup: &CauchySetup, rule: &Rule, z: Complex64, tau: f64) -> (Complex64, f64) {
    let t = setup.poly_time(tau);
    let s = setup.weight_scale(tau);
    let scale = s * (s / setup.power_scale(tau)).powi(setup.nu as i32);
    let alpha = setup.nu as f64;
    let (mut sum, mut mag) = (Complex64::new(0.0, 0.0), 0.0);
    for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
        let x = Complex64::new(s * u, 0.0);
        let (m, _, _) = monic_value_and_slope(setup.n, alpha, x, t);
        let term = w * m / (x - z);
        sum += term;
        mag += term.norm();
    }
    let k = scale / (2.0 * PI);
    (sum * k / Complex64::new(0.0, 1.0), mag * k.abs())
}

/// Gauss–Laguerre rule from the baseline node count, doubled until two
/// successive rules agree to `1e-10` relative.
///
/// When the transform is many orders smaller than its integrand (far from the
/// ray) agreement is measured against the integral of `|integrand|`, the
/// level at which rounding sets in.
pub fn cauchy_rule(setup: &CauchySetup, z: Complex64, tau: f64) -> Result<Rule> {
    check_off_ray(z, tau)?;
    let alpha = setup.nu as f64;
    let mut nodes = setup.baseline_nodes();
    let (mut value, _) = cauchy_sum(setup, &gauss_laguerre(nodes, alpha)?, z, tau);
    let mut diff = f64::INFINITY;
    while nodes * 2 <= CAUCHY_MAX_NODES {
        let finer = gauss_laguerre(nodes * 2, alpha)?;
        let (next, mag) = cauchy_sum(setup, &finer, z, tau);
        diff = (next - value).norm();
        if diff <= (1e-10 * next.norm()).max(256.0 * f64::EPSILON * mag) {
            return Ok(finer);
        }
        nodes *= 2;
        value = next;
    }
    Err(Error::Accuracy(diff))
}

/// `p^nu_n(z, tau) = (1/2 pi i) int_0^inf M^nu_n(x, T) w(x) / (x - z) dx`.
pub fn cauchy_transform(setup: &CauchySetup, z: Complex64, tau: f64) -> Result<Complex64> {
    let rule = cauchy_rule(setup, z, tau)?;
    Ok(cauchy_with_rule(setup, &rule, z, tau))
}

/// Finite-difference residual of `dp~/dtau + (r/n)(z p~'' + (1 + nu) p~')`
/// for `p~ = prefactor * p`.
///
/// One quadrature rule, converged at the centre point, serves all stencil
/// points so that the quadrature error is smooth across the stencil.
pub fn cauchy_pde_residual(setup: &CauchySetup, z: Complex64, tau: f64, h: f64, prefactor: Prefactor) -> Result<f64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("z = 0"));
    }
    if !(h > 0.0 && h < tau) {
        return Err(Error::InvalidInput("need 0 < h < tau"));
    }
    for (dz, dt) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
        check_off_ray(z + dz, tau + dt)?;
    }
    let rule = cauchy_rule(setup, z, tau)?;
    let pt = |z: Complex64, tau: f64| {
        let p = cauchy_with_rule(setup, &rule, z, tau);
        match prefactor {
            Prefactor::Applied => setup.prefactor(z, tau) * p,
            Prefactor::Omitted => p,
        }
    };
    let p0 = pt(z, tau);
    let (pp, pm) = (pt(z + h, tau), pt(z - h, tau));
    let pz = (pp - pm) / (2.0 * h);
    let pzz = (pp - 2.0 * p0 + pm) / (h * h);
    let ptau = (pt(z, tau + h) - pt(z, tau - h)) / (2.0 * h);
    let c = setup.r / setup.n as f64;
    Ok((ptau + c * (z * pzz + (1.0 + setup.nu as f64) * pz)).norm())
}
