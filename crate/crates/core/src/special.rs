//! Airy and Bessel functions, and the edge-scaling predictions built on them.
//!
//! Near a soft edge `f_N(z_e + N^{-2/3} s) ~ A + N^{-1/3} d/ds ln Ai(s / z*^{1/3})`;
//! near the hard edge (`r = 1`) `f_N(N^{-2} s) ~ 1/(2 tau) + N d/ds ln(s^{-nu/2} J_nu(2 sqrt(s/tau)))`.
//!
//! Airy: Taylor stepping of `y'' = x y` from exact values at the origin on
//! `[-8, 3]`, backward stepping from `x = 12` on `(3, 12]`, asymptotic series
//! beyond.  Bessel: ascending series for `x <= 12`, Miller's backward
//! recurrence above.

use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::analytic::{spectrum_edges, SpectralParams};
use crate::error::{Error, Result};
use crate::orthopoly::cole_hopf;
use crate::stochastic::TimeConvention;

pub const AI0: f64 = 0.355_028_053_887_817_2;
pub const AIP0: f64 = -0.258_819_403_792_806_8;

/// Largest `|x|` accepted by [`airy`].
pub const AIRY_RANGE: f64 = 100.0;
/// Largest argument accepted by [`bessel_j`].
pub const BESSEL_RANGE: f64 = 1e4;

const AIRY_STEP: f64 = 0.5;
const AIRY_TAYLOR_LEFT: f64 = -8.0;
const AIRY_TAYLOR_RIGHT: f64 = 3.0;
const AIRY_ASYMPTOTIC_RIGHT: f64 = 12.0;

/// One Taylor step of `y'' = x y` from `a` to `a + h`.
fn airy_taylor_step(a: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    // c_{n+2} (n+2)(n+1) = a c_n + c_{n-1}
    let (mut c0, mut c1, mut c2) = (y, dy, 0.5 * a * y);
    let (mut val, mut der) = (y + dy * h + c2 * h * h, dy + 2.0 * c2 * h);
    let mut hp = h * h;
    let mut small = 0;
    for n in 1..400 {
        let c3 = (a * c1 + c0) / ((n + 2) as f64 * (n + 1) as f64);
        hp *= h;
        let term = c3 * hp;
        val += term;
        der += (n + 2) as f64 * c3 * hp / h;
        if term.abs() <= 1e-18 * val.abs().max(1e-300) {
            small += 1;
            if small == 3 {
                break;
            }
        } else {
            small = 0;
        }
        c0 = c1;
        c1 = c2;
        c2 = c3;
    }
    (val, der)
}

fn airy_integrate(x0: f64, y0: f64, dy0: f64, x1: f64) -> (f64, f64) {
    let steps = ((x1 - x0).abs() / AIRY_STEP).ceil().max(1.0) as usize;
    let h = (x1 - x0) / steps as f64;
    let (mut y, mut dy) = (y0, dy0);
    for i in 0..steps {
        (y, dy) = airy_taylor_step(x0 + h * i as f64, y, dy, h);
    }
    (y, dy)
}

fn airy_u_coefficients(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = alloc::vec![1.0];
    let mut v = alloc::vec![1.0];
    for k in 1..count {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(next);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * next);
    }
    (u, v)
}

/// Truncated at the smallest term: returns `(sum_k (-1)^k u_k / zeta^k, same with v_k)`.
fn airy_decaying_sums(zeta: f64) -> (f64, f64) {
    let (u, v) = airy_u_coefficients(60);
    let (mut su, mut sv, mut p) = (0.0, 0.0, 1.0);
    let mut last = f64::INFINITY;
    for k in 0..u.len() {
        let t = u[k] * p;
        if t.abs() > last {
            break;
        }
        last = t.abs();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        su += sign * t;
        sv += sign * v[k] * p;
        p /= zeta;
    }
    (su, sv)
}

fn airy_positive_asymptotic(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (su, sv) = airy_decaying_sums(zeta);
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    (e / q * su, -e * q * sv)
}

fn airy_negative_asymptotic(x: f64) -> (f64, f64) {
    let y = -x;
    let zeta = 2.0 / 3.0 * y.powf(1.5);
    let (u, v) = airy_u_coefficients(60);
    let (mut pu, mut qu, mut pv, mut qv) = (0.0, 0.0, 0.0, 0.0);
    let mut p = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..u.len() {
        let t = u[k] * p;
        if t.abs() > last {
            break;
        }
        last = t.abs();
        // even k feed the cosine sums, odd k the sine sums, signs alternate per pair
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            pu += sign * t;
            pv += sign * v[k] * p;
        } else {
            qu += sign * t;
            qv += sign * v[k] * p;
        }
        p /= zeta;
    }
    let (s, c) = (zeta - FRAC_PI_4).sin_cos();
    let q = y.powf(0.25);
    let sp = PI.sqrt();
    ((c * pu + s * qu) / (sp * q), q / sp * (s * pv - c * qv))
}

/// `(Ai(x), Ai'(x))` for `|x| <= 100`.
pub fn airy(x: f64) -> Result<(f64, f64)> {
    if !(x.abs() <= AIRY_RANGE) {
        return Err(Error::Range(x));
    }
    Ok(if x > AIRY_ASYMPTOTIC_RIGHT {
        airy_positive_asymptotic(x)
    } else if x > AIRY_TAYLOR_RIGHT {
        let (y, dy) = airy_positive_asymptotic(AIRY_ASYMPTOTIC_RIGHT);
        airy_integrate(AIRY_ASYMPTOTIC_RIGHT, y, dy, x)
    } else if x >= AIRY_TAYLOR_LEFT {
        if x == 0.0 {
            (AI0, AIP0)
        } else {
            airy_integrate(0.0, AI0, AIP0, x)
        }
    } else {
        airy_negative_asymptotic(x)
    })
}

pub fn airy_ai(x: f64) -> Result<f64> {
    airy(x).map(|v| v.0)
}

pub fn airy_ai_prime(x: f64) -> Result<f64> {
    airy(x).map(|v| v.1)
}

/// `Ai'(x)/Ai(x)`; for `x > 12` from the asymptotic series directly, so any positive `x` is accepted.
pub fn airy_log_derivative(x: f64) -> Result<f64> {
    if x > AIRY_ASYMPTOTIC_RIGHT {
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let (su, sv) = airy_decaying_sums(zeta);
        return Ok(-x.sqrt() * sv / su);
    }
    let (ai, aip) = airy(x)?;
    if ai.abs() < 1e-12 * aip.abs() {
        return Err(Error::Pole("zero of Ai"));
    }
    Ok(aip / ai)
}

/// `J_n(x)` for `0 <= x <= 12` by the ascending series.
fn bessel_series(n: usize, x: f64) -> f64 {
    bessel_series_complex(n, Complex64::new(x, 0.0)).re
}

/// Ascending series `sum (-1)^k (w/2)^{2k+n} / (k! (k+n)!)` for complex `w`.
pub fn bessel_series_complex(n: usize, w: Complex64) -> Complex64 {
    let half = w * 0.5;
    let q = half * half;
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    for k in 1..500 {
        term *= -q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && (k as f64) > half.norm() {
            break;
        }
    }
    sum
}

/// `J_0 .. J_{kmax}` at `x > 0` by Miller's backward recurrence normalised with `J_0 + 2 sum J_{2k} = 1`.
fn bessel_miller(kmax: usize, x: f64) -> Vec<f64> {
    let top = (kmax as f64).max(x);
    let mut m = (top + 30.0 + (40.0 * top).sqrt()) as usize;
    m += m % 2;
    let mut out = alloc::vec![0.0; kmax + 1];
    let (mut next, mut cur) = (0.0, 1e-30);
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        // cur = j_k, next = j_{k+1}
        if k <= kmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `J_0 .. J_{kmax}` at `x`.
fn bessel_table(kmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x >= 0.0) {
        return Err(Error::Domain("Bessel argument must be nonnegative"));
    }
    if x > BESSEL_RANGE {
        return Err(Error::Range(x));
    }
    if x <= 12.0 {
        return Ok((0..=kmax).map(|k| bessel_series(k, x)).collect());
    }
    Ok(bessel_miller(kmax, x))
}

/// `J_n(x)` for integer `n >= 0` and `0 <= x <= 1e4`.
pub fn bessel_j(n: usize, x: f64) -> Result<f64> {
    Ok(bessel_table(n, x)?[n])
}

/// `(J_n(x), J_n'(x))`.
pub fn bessel_j_with_derivative(n: usize, x: f64) -> Result<(f64, f64)> {
    let t = bessel_table(n + 1, x)?;
    let d = if n == 0 { -t[1] } else { 0.5 * (t[n - 1] - t[n + 1]) };
    Ok((t[n], d))
}

pub fn bessel_j_prime(n: usize, x: f64) -> Result<f64> {
    bessel_j_with_derivative(n, x).map(|v| v.1)
}

/// `J_n'(w)/J_n(w)` for complex `w` by the ascending series.
pub fn bessel_log_derivative_complex(n: usize, w: Complex64) -> Complex64 {
    let j = bessel_series_complex(n, w);
    let d = if n == 0 {
        -bessel_series_complex(1, w)
    } else {
        0.5 * (bessel_series_complex(n - 1, w) - bessel_series_complex(n + 1, w))
    };
    d / j
}

/// Which edge a prediction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeSide {
    SoftLeft,
    SoftRight,
    Hard,
}

/// Constants of the edge-scaling ansatz `f_N(z_e + N^{-delta} s) ~ A + N^{-gamma} chi(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePrediction {
    pub side: EdgeSide,
    pub a_tau: f64,
    /// Airy scale; soft edges only.
    pub z_star: Option<f64>,
    /// Bessel order; hard edge only.
    pub nu: Option<usize>,
    pub tau: f64,
    pub z_edge: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Exponent of the density near the edge, `rho ~ |z - z_e|^exponent`.
    pub sing_exponent: f64,
}

/// Soft-edge constants; the left soft edge exists only for `r < 1`.
pub fn soft_edge_params(p: &SpectralParams, side: EdgeSide) -> Result<EdgePrediction> {
    let (left, right) = spectrum_edges(p);
    let (r, tau) = (p.r(), p.tau());
    let (z_edge, z_star) = match side {
        EdgeSide::SoftRight => (right, right * right * r.powf(1.5) * tau),
        EdgeSide::SoftLeft if r < 1.0 => (left, -left * left * r.powf(1.5) * tau),
        EdgeSide::SoftLeft => return Err(Error::Unsupported("r = 1 has a hard edge on the left")),
        EdgeSide::Hard => return Err(Error::InvalidInput("use hard_edge_params")),
    };
    Ok(EdgePrediction {
        side,
        a_tau: ((r - 1.0) * tau + z_edge) / (2.0 * r * tau * z_edge),
        z_star: Some(z_star),
        nu: None,
        tau,
        z_edge,
        delta: 2.0 / 3.0,
        gamma: 1.0 / 3.0,
        sing_exponent: 0.5,
    })
}

/// Hard-edge constants at the origin (`r -> 1`, `nu` fixed).
pub fn hard_edge_params(nu: usize, tau: f64) -> Result<EdgePrediction> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("need tau > 0"));
    }
    Ok(EdgePrediction {
        side: EdgeSide::Hard,
        a_tau: 1.0 / (2.0 * tau),
        z_star: None,
        nu: Some(nu),
        tau,
        z_edge: 0.0,
        delta: 2.0,
        gamma: -1.0,
        sing_exponent: -0.5,
    })
}

/// `chi(s) = d/ds ln Ai((s - g z*) / z*^{1/3})` with the real cube root.
pub fn soft_edge_chi_with_g(s: f64, z_star: f64, g: f64) -> Result<f64> {
    if z_star == 0.0 {
        return Err(Error::InvalidInput("z* must be nonzero"));
    }
    let c = 1.0 / z_star.cbrt();
    Ok(c * airy_log_derivative((s - g * z_star) * c)?)
}

/// Soft-edge profile with the matched constant `g = 0`.
pub fn soft_edge_chi(s: f64, z_star: f64) -> Result<f64> {
    soft_edge_chi_with_g(s, z_star, 0.0)
}

/// `A(tau) + N^{-1/3} chi(s)`.
pub fn soft_edge_prediction(s: f64, n: usize, p: &SpectralParams, side: EdgeSide) -> Result<f64> {
    let e = soft_edge_params(p, side)?;
    let chi = soft_edge_chi(s, e.z_star.unwrap_or(f64::NAN))?;
    Ok(e.a_tau + (n as f64).powf(-1.0 / 3.0) * chi)
}

/// `d/ds ln(s^{-nu/2} J_nu(2 sqrt(g s)))`.
pub fn hard_edge_chi_with_g(s: f64, nu: usize, g: f64) -> Result<f64> {
    hard_edge_chi_and_slope(s, nu, g).map(|v| v.0)
}

/// Hard-edge profile with the matched constant `g = 1/tau`.
pub fn hard_edge_chi(s: f64, nu: usize, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("need tau > 0"));
    }
    hard_edge_chi_with_g(s, nu, 1.0 / tau)
}

/// `(chi, dchi/ds)` with the derivative from Bessel's equation.
fn hard_edge_chi_and_slope(s: f64, nu: usize, g: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) || !(g > 0.0) {
        return Err(Error::Domain("need s > 0 and g > 0"));
    }
    let y = 2.0 * (g * s).sqrt();
    let (j, dj) = bessel_j_with_derivative(nu, y)?;
    if j.abs() < 1e-12 * dj.abs() {
        return Err(Error::Pole("zero of J_nu"));
    }
    let q = dj / j;
    let nuf = nu as f64;
    // dy/ds = sqrt(g/s); Q' = -Q/y - 1 + nu^2/y^2 - Q^2
    let dyds = (g / s).sqrt();
    let dq = -q / y - 1.0 + nuf * nuf / (y * y) - q * q;
    let chi = -nuf / (2.0 * s) + dyds * q;
    let slope = nuf / (2.0 * s * s) - 0.5 * dyds / s * q + dyds * dyds * dq;
    Ok((chi, slope))
}

/// `1/(2 tau) + N chi(s)`.
pub fn hard_edge_prediction(s: f64, n: usize, nu: usize, tau: f64) -> Result<f64> {
    Ok(1.0 / (2.0 * tau) + n as f64 * hard_edge_chi(s, nu, tau)?)
}

/// `|chi^2 + chi' - s/z* + g_eq|` for the profile built with `g_profile`.
pub fn airy_layer_residual_with_g(s: f64, z_star: f64, g_profile: f64, g_eq: f64) -> Result<f64> {
    let c = 1.0 / z_star.cbrt();
    let x = (s - g_profile * z_star) * c;
    let q = airy_log_derivative(x)?;
    // (Ai'/Ai)' = x - (Ai'/Ai)^2
    let chi = c * q;
    let dchi = c * c * (x - q * q);
    Ok((chi * chi + dchi - s / z_star + g_eq).abs())
}

/// Soft-layer equation with the matched `g = 0`.
pub fn airy_layer_residual(s: f64, z_star: f64) -> Result<f64> {
    airy_layer_residual_with_g(s, z_star, 0.0, 0.0)
}

/// `|s chi' + s chi^2 + (1 + nu) chi + g_eq|` for the profile built with `g_profile`.
pub fn bessel_layer_residual_with_g(s: f64, nu: usize, g_profile: f64, g_eq: f64) -> Result<f64> {
    let (chi, dchi) = hard_edge_chi_and_slope(s, nu, g_profile)?;
    Ok((s * dchi + s * chi * chi + (1.0 + nu as f64) * chi + g_eq).abs())
}

/// Hard-layer equation with the matched `g = 1/tau`.
pub fn bessel_layer_residual(s: f64, nu: usize, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("need tau > 0"));
    }
    bessel_layer_residual_with_g(s, nu, 1.0 / tau, 1.0 / tau)
}

/// `|Ai'(x)/Ai(x) + sqrt(x)|`, `x >= 10`.
pub fn matching_check_soft(x: f64) -> Result<f64> {
    if !(x >= 10.0) {
        return Err(Error::InvalidInput("soft matching needs x >= 10"));
    }
    Ok((airy_log_derivative(x)? + x.sqrt()).abs())
}

/// `|J_nu'(w)/J_nu(w) + i|` on the ray `w = x (1 + 0.3 i)`, `x >= 20`.
pub fn matching_check_hard(x: f64, nu: usize) -> Result<f64> {
    if !(x >= 20.0) {
        return Err(Error::InvalidInput("hard matching needs x >= 20"));
    }
    let w = Complex64::new(x, 0.3 * x);
    Ok((bessel_log_derivative_complex(nu, w) + Complex64::new(0.0, 1.0)).norm())
}

/// `max_s |f_N(z_R + N^{-2/3} s) - soft prediction|` at `r = 1` and the given `tau`.
pub fn soft_edge_error(n: usize, tau: f64, s_grid: &[f64]) -> Result<f64> {
    let p = SpectralParams::new(1.0, tau)?;
    let conv = TimeConvention::square(n)?;
    let e = soft_edge_params(&p, EdgeSide::SoftRight)?;
    let scale = (n as f64).powf(-2.0 / 3.0);
    let mut worst = 0.0f64;
    for &s in s_grid {
        let f = cole_hopf(&conv, Complex64::new(e.z_edge + scale * s, 0.0), tau)?.f;
        let pred = soft_edge_prediction(s, n, &p, EdgeSide::SoftRight)?;
        worst = worst.max((f - pred).norm());
    }
    Ok(worst)
}

/// `max_s |(f_N(N^{-2} s) - 1/(2 tau))/N - chi(s)|` for `M = N + nu`.
pub fn hard_edge_error(n: usize, nu: usize, tau: f64, s_grid: &[f64]) -> Result<f64> {
    let conv = TimeConvention::new(n, n + nu)?;
    let nf = n as f64;
    let mut worst = 0.0f64;
    for &s in s_grid {
        let f = cole_hopf(&conv, Complex64::new(s / (nf * nf), 0.0), tau)?.f;
        let chi = hard_edge_chi(s, nu, tau)?;
        worst = worst.max(((f - 1.0 / (2.0 * tau)) / nf - chi).norm());
    }
    Ok(worst)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput("need two or more paired points"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series of Ai, independent of the stepping code.
    fn airy_maclaurin(x: f64) -> (f64, f64) {
        let c1 = 1.0 / (3f64.powf(2.0 / 3.0) * libm::tgamma(2.0 / 3.0));
        let c2 = 1.0 / (3f64.powf(1.0 / 3.0) * libm::tgamma(1.0 / 3.0));
        // f = sum a_k x^{3k}, g = sum b_k x^{3k+1}; a_{k+1} = a_k/((3k+2)(3k+3)), b_{k+1} = b_k/((3k+3)(3k+4))
        let (mut a, mut b) = (1.0, 1.0);
        let (mut f, mut g, mut df, mut dg) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..80 {
            let kf = k as f64;
            f += a * x.powi(3 * k);
            g += b * x.powi(3 * k + 1);
            if k > 0 {
                df += a * 3.0 * kf * x.powi(3 * k - 1);
            }
            dg += b * (3.0 * kf + 1.0) * x.powi(3 * k);
            a /= (3.0 * kf + 2.0) * (3.0 * kf + 3.0);
            b /= (3.0 * kf + 3.0) * (3.0 * kf + 4.0);
        }
        (c1 * f - c2 * g, c1 * df - c2 * dg)
    }

    #[test]
    fn airy_origin_values() {
        let (a, ap) = airy_maclaurin(0.0);
        assert!((AI0 - a).abs() < 1e-15 && (AIP0 - ap).abs() < 1e-15);
        assert!((airy_ai(0.0).unwrap() - 0.355_028_053_9).abs() < 1e-10);
        assert!((airy_ai_prime(0.0).unwrap() + 0.258_819_403_8).abs() < 1e-10);
    }

    #[test]
    fn airy_matches_maclaurin_where_it_converges() {
        for i in 0..=60 {
            let x = -6.0 + 0.15 * i as f64;
            let (a, ap) = airy(x).unwrap();
            let (b, bp) = airy_maclaurin(x);
            assert!((a - b).abs() < 1e-11 && (ap - bp).abs() < 1e-11, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn airy_switchovers_agree() {
        let (y, dy) = airy_positive_asymptotic(AIRY_ASYMPTOTIC_RIGHT);
        let back = airy_integrate(AIRY_ASYMPTOTIC_RIGHT, y, dy, AIRY_TAYLOR_RIGHT);
        let fwd = airy_integrate(0.0, AI0, AIP0, AIRY_TAYLOR_RIGHT);
        assert!((back.0 - fwd.0).abs() < 1e-10 && (back.1 - fwd.1).abs() < 1e-10);
        let fwd12 = airy_integrate(AIRY_ASYMPTOTIC_RIGHT, y, dy, 11.0);
        let asy11 = airy_positive_asymptotic(11.0);
        assert!(((fwd12.0 - asy11.0) / asy11.0).abs() < 1e-10);
        let left = airy_integrate(0.0, AI0, AIP0, AIRY_TAYLOR_LEFT);
        let asy = airy_negative_asymptotic(AIRY_TAYLOR_LEFT);
        assert!((left.0 - asy.0).abs() < 1e-10 && (left.1 - asy.1).abs() < 1e-10, "{left:?} {asy:?}");
        assert!(airy(100.5).is_err() && airy(-101.0).is_err());
    }

    #[test]
    fn airy_ode_residual() {
        for x in [-9.0, -2.0, 0.0, 1.0, 3.0, 5.0] {
            let h = 1e-4;
            let f = |t: f64| airy_ai(t).unwrap();
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            assert!((d2 - x * f(x)).abs() < 1e-6, "x={x}");
            // derivative consistency
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            assert!((d1 - airy_ai_prime(x).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn bessel_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
        // J_0(1), J_1(1), J_5(10) reference digits
        assert!((bessel_j(0, 1.0).unwrap() - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(5, 10.0).unwrap() + 0.234_061_528_186_793_7).abs() < 1e-14);
    }

    #[test]
    fn bessel_regimes_agree() {
        for n in 0..=10 {
            for x in [12.0, 13.0, 14.0, 16.0] {
                let miller = bessel_miller(n, x)[n];
                let series = bessel_series(n, x);
                // the series loses about e^x/x of relative precision
                assert!((miller - series).abs() < 1e-10, "n={n} x={x}");
            }
        }
        // sum rule J_0^2 + 2 sum J_k^2 = 1, independent of the normalisation used
        for x in [40.0, 300.0] {
            let t = bessel_miller((x as usize) + 60, x);
            let s: f64 = t[0] * t[0] + 2.0 * t[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-13, "x={x}: {s}");
        }
        // large-x envelope sqrt(2/(pi x)) cos(x - pi/4)
        let x = 5000.0;
        let asym = (2.0 / (PI * x)).sqrt() * (x - FRAC_PI_4).cos();
        assert!((bessel_j(0, x).unwrap() - asym).abs() < 1e-5);
        assert!(bessel_j(0, 2e4).is_err());
    }

    #[test]
    fn bessel_first_zero_and_ode() {
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if bessel_j(0, a).unwrap() * bessel_j(0, m).unwrap() <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        assert!((0.5 * (a + b) - 2.404_825_557_695_773).abs() < 1e-9);
        let (nu, x, h) = (2usize, 5.0, 1e-3);
        let f = |t: f64| bessel_j(nu, t).unwrap();
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        let d1 = bessel_j_prime(nu, x).unwrap();
        assert!((x * x * d2 + x * d1 + (x * x - 4.0) * f(x)).abs() < 1e-5);
    }

    #[test]
    fn soft_edge_constants() {
        let p = SpectralParams::new(1.0, 1.0).unwrap();
        let e = soft_edge_params(&p, EdgeSide::SoftRight).unwrap();
        assert_eq!((e.a_tau, e.z_star), (0.5, Some(16.0)));
        assert!(soft_edge_params(&p, EdgeSide::SoftLeft).is_err());
        let q = SpectralParams::new(0.25, 2.0).unwrap();
        let l = soft_edge_params(&q, EdgeSide::SoftLeft).unwrap();
        assert!(l.z_star.unwrap() < 0.0);
        assert!(soft_edge_prediction(0.3, 100, &q, EdgeSide::SoftLeft).unwrap().is_finite());
        // s -> +inf: prediction -> A - sqrt(s/z*) N^{-1/3}
        let s = 1e4;
        let pred = soft_edge_prediction(s, 64, &p, EdgeSide::SoftRight).unwrap();
        let lead = 0.5 - (s / 16.0).sqrt() / 4.0;
        assert!(((pred - lead) / (s / 16.0).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn hard_edge_profile() {
        let chi = hard_edge_chi(1e-8, 0, 1.0).unwrap();
        assert!((chi + 1.0).abs() < 1e-6);
        assert!((hard_edge_prediction(1e-8, 10, 0, 1.0).unwrap() - (0.5 - 10.0)).abs() < 1e-4);
        let j0 = 2.404_825_557_695_773f64;
        let pole = j0 * j0 / 4.0;
        assert!(matches!(hard_edge_chi(pole, 0, 1.0), Err(Error::Pole(_))));
        assert!(hard_edge_chi(pole + 1e-3, 0, 1.0).is_ok());
    }

    #[test]
    fn layer_residuals() {
        assert!(airy_layer_residual(1.0, 16.0).unwrap() < 1e-9);
        assert!(airy_layer_residual(-2.0, 16.0).unwrap() < 1e-9);
        assert!(airy_layer_residual_with_g(1.0, 16.0, 0.1, 0.0).unwrap() >= 0.09);
        assert!(bessel_layer_residual(0.5, 0, 1.0).unwrap() < 1e-9);
        assert!(bessel_layer_residual(1.3, 2, 0.7).unwrap() < 1e-9);
        let wrong = bessel_layer_residual_with_g(1e-3, 0, 1.0, 2.0).unwrap();
        assert!((wrong - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bessel_slope_matches_differences() {
        let (s, h) = (0.9, 1e-5);
        let (_, slope) = hard_edge_chi_and_slope(s, 3, 1.4).unwrap();
        let fd = (hard_edge_chi_with_g(s + h, 3, 1.4).unwrap() - hard_edge_chi_with_g(s - h, 3, 1.4).unwrap()) / (2.0 * h);
        assert!((slope - fd).abs() < 1e-7);
    }

    #[test]
    fn asymptotic_matching() {
        assert!(matching_check_soft(25.0).unwrap() <= 0.015);
        assert!(matching_check_soft(100.0).unwrap() <= 0.004);
        for x in [25.0, 50.0, 100.0] {
            let v = matching_check_soft(x).unwrap() * 4.0 * x;
            assert!((v - 1.0).abs() < 0.3, "x={x}: {v}");
        }
        assert!(matching_check_hard(30.0, 0).unwrap() <= 0.05);
    }

    #[test]
    fn complex_series_agrees_with_real() {
        for n in [0, 1, 4] {
            let a = bessel_series_complex(n, Complex64::new(7.5, 0.0));
            assert!((a.re - bessel_j(n, 7.5).unwrap()).abs() < 1e-14 && a.im == 0.0);
        }
    }

    #[test]
    fn slope_fit() {
        let x = [16.0, 32.0, 64.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
    }
}
