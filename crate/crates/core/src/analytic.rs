//! Large-N closed forms for the diffusing Wishart ensemble.
//!
//! With the scaled time `tau`, the resolvent `G(z, tau) = <Tr 1/(z - L)>/N`
//! starts from `G(z, 0) = 1/z` and solves
//! `dG/dtau + (1 - r + 2 r z G) dG/dz + r G^2 = 0`.
//! Along the complex characteristics `z = (1 + tau/z0)(z0 + r tau)` the
//! resolvent is constant, `G = 1/(r tau + z0)`; the map `z0 -> z` folds at
//! `z0 = ±sqrt(r) tau`, which lands exactly on the spectral edges
//! `(1 ± sqrt r)^2 tau`.

use alloc::vec::Vec;

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_laguerre, gauss_legendre_on};
use crate::stochastic::TimeConvention;

/// Rectangularity `r = N/M` and scaled time `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    r: f64,
    tau: f64,
}

impl SpectralParams {
    pub fn new(r: f64, tau: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidInput("need 0 < r <= 1"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput("need tau > 0"));
        }
        Ok(Self { r, tau })
    }

    pub fn from_convention(conv: &TimeConvention, tau: f64) -> Result<Self> {
        Self::new(conv.r(), tau)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same `r`, different time.
    pub fn at_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.r, tau)
    }
}

/// `((1 - sqrt r)^2 tau, (1 + sqrt r)^2 tau)`.
pub fn spectrum_edges(p: &SpectralParams) -> (f64, f64) {
    let s = p.r.sqrt();
    ((1.0 - s) * (1.0 - s) * p.tau, (1.0 + s) * (1.0 + s) * p.tau)
}

fn on_cut(z: Complex64, left: f64, right: f64) -> bool {
    z.im == 0.0 && z.re >= left && z.re <= right
}

/// `sqrt(z - z_L) sqrt(z - z_R)` with principal roots: cut on `[z_L, z_R]`, `~ z` at infinity.
fn edge_root(z: Complex64, left: f64, right: f64) -> Complex64 {
    (z - left).sqrt() * (z - right).sqrt()
}

/// Wishart resolvent `G(z, tau)` off the support.
///
/// Evaluated as `2 / ((r - 1) tau + z + w)`, algebraically equal to
/// `((r - 1) tau + z - w) / (2 r tau z)` but free of cancellation at large `|z|`
/// and regular at `z = 0` when `r < 1`.
pub fn resolvent_wishart(z: Complex64, p: &SpectralParams) -> Result<Complex64> {
    let (left, right) = spectrum_edges(p);
    if on_cut(z, left, right) {
        return Err(Error::OnBranchCut { left, right });
    }
    let w = edge_root(z, left, right);
    Ok(2.0 / ((p.r - 1.0) * p.tau + z + w))
}

/// Boundary value `G(lambda - i0, tau)` for real `lambda`.
///
/// Inside the support `Im G = pi rho(lambda) >= 0`; outside it equals the
/// ordinary resolvent.  `r = 1, lambda = 0` is the hard-edge pole.
pub fn resolvent_wishart_below(lambda: f64, p: &SpectralParams) -> Result<Complex64> {
    let (left, right) = spectrum_edges(p);
    if !(lambda >= left && lambda <= right) {
        return resolvent_wishart(Complex64::new(lambda, 0.0), p);
    }
    if lambda == 0.0 {
        return Err(Error::HardEdgeDivergence);
    }
    let w = Complex64::new(0.0, -((lambda - left) * (right - lambda)).sqrt());
    Ok(2.0 / ((p.r - 1.0) * p.tau + lambda + w))
}

/// Marcenko–Pastur density `sqrt((lambda - c_- tau)(c_+ tau - lambda)) / (2 pi lambda tau r)`.
///
/// Zero outside the support.  For `r = 1` the density diverges like
/// `lambda^{-1/2}` at the origin, reported as [`Error::HardEdgeDivergence`].
pub fn mp_density(lambda: f64, p: &SpectralParams) -> Result<f64> {
    let (left, right) = spectrum_edges(p);
    if !(lambda >= left && lambda <= right) {
        return Ok(0.0);
    }
    if lambda == 0.0 {
        return Err(Error::HardEdgeDivergence);
    }
    Ok(((lambda - left) * (right - lambda)).sqrt() / (2.0 * PI * lambda * p.tau * p.r))
}

/// `int_a^b rho(lambda) dlambda`, exact to rounding.
///
/// Substituting `lambda = c - h cos(theta)` (centre `c`, half-width `h`)
/// turns the integrand into the smooth `h^2 sin^2(theta) / (2 pi r tau lambda)`,
/// including at the hard edge.
pub fn mp_bin_mass(a: f64, b: f64, p: &SpectralParams) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidInput("need a <= b"));
    }
    let (left, right) = spectrum_edges(p);
    let (lo, hi) = (a.max(left), b.min(right));
    if lo >= hi {
        return Ok(0.0);
    }
    let (c, h) = (0.5 * (left + right), 0.5 * (right - left));
    let theta = |x: f64| ((c - x) / h).clamp(-1.0, 1.0).acos();
    let rule = gauss_legendre_on(48, theta(lo), theta(hi))?;
    let mass = rule.apply(|th| {
        let (s, half) = (th.sin(), (0.5 * th).sin());
        // c - h cos = left + 2 h sin^2(theta/2), accurate near the lower edge
        let lambda = left + 2.0 * h * half * half;
        h * h * s * s / (2.0 * PI * p.r * p.tau * lambda)
    });
    Ok(mass)
}

/// Masses of the Marcenko–Pastur law in consecutive bins.
pub fn mp_bin_masses(edges: &[f64], p: &SpectralParams) -> Result<Vec<f64>> {
    edges.windows(2).map(|w| mp_bin_mass(w[0], w[1], p)).collect()
}

/// One point on a characteristic line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicSample {
    pub tau: f64,
    pub z: Complex64,
    pub g: Complex64,
}

/// Characteristic started at `z0` and sampled on `[0, tau]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicLine {
    pub z0: Complex64,
    pub samples: Vec<CharacteristicSample>,
    /// Time at which the line crosses the caustic `dz/dz0 = 0`, if it does within the sampled range.
    pub caustic_tau: Option<f64>,
}

/// Position and resolvent on the characteristic from `z0` at time `tau`.
pub fn characteristic_point(z0: Complex64, r: f64, tau: f64) -> Result<(Complex64, Complex64)> {
    if z0 == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("characteristics cannot start at z0 = 0"));
    }
    let denom = z0 + r * tau;
    if denom.norm() <= f64::EPSILON * (1.0 + z0.norm()) {
        return Err(Error::Domain("characteristic passes through the pole z0 = -r tau"));
    }
    Ok(((1.0 + tau / z0) * denom, 1.0 / denom))
}

/// `dz/dz0 = 1 - r tau^2 / z0^2` along a characteristic.
pub fn characteristic_jacobian(z0: Complex64, r: f64, tau: f64) -> Complex64 {
    1.0 - r * tau * tau / (z0 * z0)
}

/// Samples the characteristic from `z0` at `n_samples` equally spaced times in `[0, tau]`.
pub fn trace_characteristic(z0: Complex64, p: &SpectralParams, n_samples: usize) -> Result<CharacteristicLine> {
    if n_samples < 2 {
        return Err(Error::InvalidInput("need at least two samples"));
    }
    let samples = (0..n_samples)
        .map(|k| {
            let tau = p.tau * k as f64 / (n_samples - 1) as f64;
            characteristic_point(z0, p.r, tau).map(|(z, g)| CharacteristicSample { tau, z, g })
        })
        .collect::<Result<Vec<_>>>()?;
    let caustic_tau = if z0.im == 0.0 {
        Some(z0.re.abs() / p.r.sqrt()).filter(|&t| t <= p.tau)
    } else {
        None
    };
    Ok(CharacteristicLine { z0, samples, caustic_tau })
}

/// Left or right spectral edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Fold of the characteristic map: start `z0c` and image `zc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockPoint {
    pub z0c: f64,
    pub zc: f64,
    pub side: Side,
}

/// Both pre-shock points; the left one comes from negative `z0`.
pub fn find_shocks(p: &SpectralParams) -> (ShockPoint, ShockPoint) {
    let (left, right) = spectrum_edges(p);
    let z0 = p.r.sqrt() * p.tau;
    (
        ShockPoint { z0c: -z0, zc: left, side: Side::Left },
        ShockPoint { z0c: z0, zc: right, side: Side::Right },
    )
}

/// `|z - 1/G - tau/(1 - r tau G)|`.
pub fn implicit_residual(z: Complex64, g: Complex64, p: &SpectralParams) -> Result<f64> {
    implicit_residual_at(z, g, p.r, p.tau)
}

/// [`implicit_residual`] allowing `tau = 0`.
pub fn implicit_residual_at(z: Complex64, g: Complex64, r: f64, tau: f64) -> Result<f64> {
    if g == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("G = 0"));
    }
    let d = 1.0 - r * tau * g;
    if d == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("r tau G = 1"));
    }
    Ok((z - 1.0 / g - tau / d).norm())
}

/// Resolvent of the chiral (block off-diagonal) matrix, `g(w, tau)`.
///
/// Shares the branch of [`resolvent_wishart`] through `z = w^2`, so
/// `G(z) = (r - 1)/(2 r w^2) + (r + 1) g(w)/(2 r w)` holds for every `w`
/// off the cut; no quadrant restriction is needed.
pub fn resolvent_chiral(w: Complex64, p: &SpectralParams) -> Result<Complex64> {
    if w == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("w = 0"));
    }
    let z = w * w;
    let (left, right) = spectrum_edges(p);
    if on_cut(z, left, right) {
        return Err(Error::OnBranchCut { left, right });
    }
    let root = edge_root(z, left, right);
    // (z - root) rewritten as (z^2 - root^2)/(z + root)
    let num = 2.0 * (1.0 + p.r) * p.tau * z - (1.0 - p.r).powi(2) * p.tau * p.tau;
    Ok(num / ((p.r + 1.0) * p.tau * w * (z + root)))
}

/// Anti-Wishart resolvent `G_a = (1 - r)/z + r G`, with a pole of residue `1 - r` at the origin.
pub fn resolvent_antiwishart(z: Complex64, p: &SpectralParams) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole("anti-Wishart resolvent at z = 0"));
    }
    let (left, right) = spectrum_edges(p);
    if on_cut(z, left, right) {
        return Err(Error::OnBranchCut { left, right });
    }
    let w = edge_root(z, left, right);
    // ((1 - r) tau + z - w) / (2 tau z), with the large-z cancellation removed
    let a = (1.0 - p.r) * p.tau + z;
    let num = a * a - w * w;
    Ok(num / (2.0 * p.tau * z * (a + w)))
}

/// Time-dilated R-transform `R(z, tau) = tau / (1 - r tau z)`.
pub fn r_transform(z: Complex64, p: &SpectralParams) -> Result<Complex64> {
    let d = 1.0 - p.r * p.tau * z;
    if d.norm() <= f64::EPSILON {
        return Err(Error::Pole("R-transform at z = 1/(r tau)"));
    }
    Ok(p.tau / d)
}

type Resolvent<'a> = &'a dyn Fn(Complex64, &SpectralParams) -> Result<Complex64>;

fn check_step(h: f64, p: &SpectralParams) -> Result<()> {
    if !(h > 0.0) || h >= p.tau {
        return Err(Error::InvalidInput("need 0 < h < tau"));
    }
    Ok(())
}

/// Central-difference derivatives `(G, dG/dz, dG/dtau)` of a resolvent.
fn stencil(g: Resolvent<'_>, z: Complex64, p: &SpectralParams, h: f64) -> Result<(Complex64, Complex64, Complex64)> {
    check_step(h, p)?;
    let g0 = g(z, p)?;
    let gz = (g(z + h, p)? - g(z - h, p)?) / (2.0 * h);
    let gt = (g(z, &p.at_tau(p.tau + h)?)? - g(z, &p.at_tau(p.tau - h)?)?) / (2.0 * h);
    Ok((g0, gz, gt))
}

/// `|dG/dtau + dG/dz - r (dG/dz - 2 z G dG/dz - G^2)|` by central differences of `resolvent`.
pub fn burgers_residual_of(resolvent: Resolvent<'_>, z: Complex64, p: &SpectralParams, h: f64) -> Result<f64> {
    let (g, gz, gt) = stencil(resolvent, z, p, h)?;
    Ok((gt + gz - p.r * (gz - 2.0 * z * g * gz - g * g)).norm())
}

/// Finite-difference residual of the Wishart Burgers equation for [`resolvent_wishart`].
pub fn burgers_residual(z: Complex64, p: &SpectralParams, h: f64) -> Result<f64> {
    burgers_residual_of(&resolvent_wishart, z, p, h)
}

/// Residual of `((1 - r)/(1 + r))^2 + w^3 (2/(1 + r) dg/dtau + g dg/dw)` for [`resolvent_chiral`].
pub fn chiral_burgers_residual(w: Complex64, p: &SpectralParams, h: f64) -> Result<f64> {
    let (g, gw, gt) = stencil(&resolvent_chiral, w, p, h)?;
    let c = (1.0 - p.r) / (1.0 + p.r);
    Ok((c * c + w * w * w * (2.0 / (1.0 + p.r) * gt + g * gw)).norm())
}

/// Residual of `dG_a/dtau = (1 - r - 2 z G_a) dG_a/dz - G_a^2` for [`resolvent_antiwishart`].
pub fn antiwishart_burgers_residual(z: Complex64, p: &SpectralParams, h: f64) -> Result<f64> {
    let (g, gz, gt) = stencil(&resolvent_antiwishart, z, p, h)?;
    Ok((gt - (1.0 - p.r - 2.0 * z * g) * gz + g * g).norm())
}

/// Largest `N` for which [`joint_density_small_n`] is offered.
pub const JOINT_DENSITY_MAX_N: usize = 3;

/// Unnormalised joint eigenvalue density at physical time `t_phys`:
/// `t^{-MN} prod_{i<j} (lambda_j - lambda_i)^2 prod_k lambda_k^nu e^{-sum lambda / (2t)}`.
pub fn joint_density_small_n(lams: &[f64], t_phys: f64, conv: &TimeConvention) -> Result<f64> {
    let n = conv.n();
    if n > JOINT_DENSITY_MAX_N {
        return Err(Error::Unsupported("joint density is offered for N <= 3 only"));
    }
    if lams.len() != n {
        return Err(Error::InvalidInput("need exactly N eigenvalues"));
    }
    if !(t_phys > 0.0) {
        return Err(Error::InvalidInput("need t > 0"));
    }
    if lams.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::Domain("eigenvalues must be nonnegative"));
    }
    let mut vandermonde = 1.0;
    for i in 0..n {
        for j in i + 1..n {
            vandermonde *= (lams[j] - lams[i]) * (lams[j] - lams[i]);
        }
    }
    let nu = conv.nu() as i32;
    let powers: f64 = lams.iter().map(|l| l.powi(nu)).product();
    let sum: f64 = lams.iter().sum();
    let scale = t_phys.powi(-((conv.m() * n) as i32));
    Ok(scale * vandermonde * powers * (-sum / (2.0 * t_phys)).exp())
}

/// Integral of [`joint_density_small_n`] over the ordered chamber `0 <= lambda_1 <= ... <= lambda_N`.
///
/// The integrand is symmetric, so this is `1/N!` times the integral over the
/// orthant, computed exactly by a tensor Gauss–Laguerre rule in `u = lambda/(2t)`.
pub fn joint_density_normalization(t_phys: f64, conv: &TimeConvention) -> Result<f64> {
    let n = conv.n();
    if n > JOINT_DENSITY_MAX_N {
        return Err(Error::Unsupported("joint density is offered for N <= 3 only"));
    }
    if !(t_phys > 0.0) {
        return Err(Error::InvalidInput("need t > 0"));
    }
    let nu = conv.nu() as f64;
    let rule = gauss_laguerre(n + 2, nu)?;
    let k = rule.len();
    let mut total = 0.0;
    let mut idx = alloc::vec![0usize; n];
    'outer: loop {
        let u: Vec<f64> = idx.iter().map(|&i| rule.nodes[i]).collect();
        let w: f64 = idx.iter().map(|&i| rule.weights[i]).product();
        let mut vandermonde = 1.0;
        for i in 0..n {
            for j in i + 1..n {
                vandermonde *= (u[j] - u[i]) * (u[j] - u[i]);
            }
        }
        total += w * vandermonde;
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < k {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    // lambda = 2t u: Jacobian (2t)^N, Vandermonde (2t)^{N(N-1)}, powers (2t)^{N nu}
    let degree = (n + n * (n - 1) + n * conv.nu()) as i32;
    let scale = t_phys.powi(-((conv.m() * n) as i32)) * (2.0 * t_phys).powi(degree);
    Ok(scale * total / factorial)
}
