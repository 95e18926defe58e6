#![allow(clippy::needless_range_loop)]

use approx::assert_relative_eq;
use proptest::prelude::*;
use wishart_core::analytic::{mp_bin_masses, r_transform, resolvent_wishart, spectrum_edges, SpectralParams};
use wishart_core::linalg::{svd_singular_values, wishart_spectrum, RectComplexMatrix};
use wishart_core::orthopoly::laguerre_eval_real;
use wishart_core::rng::{NormalSource, ReplicaStream};
use wishart_core::stochastic::{
    empirical_density, sample_replica, sample_spectra, EnsembleConfig, Estimate, HistogramCounts, SamplingMode,
    TimeConvention,
};
use wishart_core::Complex64;

fn gaussian_matrix(m: usize, n: usize, seed: u64) -> RectComplexMatrix {
    let mut s = ReplicaStream::new(seed, 0);
    let data = (0..m * n).map(|_| Complex64::new(s.standard_normal(), s.standard_normal())).collect();
    RectComplexMatrix::new(m, n, data).unwrap()
}

/// Coefficients of `det(x - A)` for Hermitian `A`, highest first, by Faddeev–LeVerrier.
fn char_poly(a: &[Vec<Complex64>]) -> Vec<f64> {
    let n = a.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs = vec![1.0];
    let mut m = vec![vec![zero; n]; n];
    let mut c_prev = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = vec![vec![zero; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|l| a[i][l] * m[l][j]).sum::<Complex64>();
            }
            next[i][i] += c_prev;
        }
        m = next;
        let mut trace = zero;
        for i in 0..n {
            trace += (0..n).map(|l| a[i][l] * m[l][i]).sum::<Complex64>();
        }
        c_prev = -trace / k as f64;
        coeffs.push(c_prev.re);
    }
    coeffs
}

fn horner(p: &[f64], x: f64) -> (f64, f64) {
    let (mut v, mut d) = (0.0, 0.0);
    for &c in p {
        d = d * x + v;
        v = v * x + c;
    }
    (v, d)
}

/// Real roots of a polynomial with only real, simple roots: bisection between
/// sign changes on a fine grid, polished by Newton.
fn real_roots(p: &[f64], hi: f64) -> Vec<f64> {
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut prev_x = -1e-9 * hi;
    let mut prev = horner(p, prev_x).0;
    for i in 1..=steps {
        let x = hi * i as f64 / steps as f64;
        let v = horner(p, x).0;
        if prev == 0.0 || prev.signum() != v.signum() {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if horner(p, mid).0.signum() == horner(p, a).0.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let mut r = 0.5 * (a + b);
            for _ in 0..3 {
                let (v, d) = horner(p, r);
                if d != 0.0 {
                    r -= v / d;
                }
            }
            roots.push(r);
        }
        prev_x = x;
        prev = v;
    }
    roots
}

fn binomial(n: f64, k: usize) -> f64 {
    (0..k).map(|i| (n - i as f64) / (i + 1) as f64).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn singular_values_are_sorted_and_carry_the_energy(m in 1usize..=64, n_frac in 0.0f64..1.0, seed: u64) {
        let n = 1 + ((m.min(48) - 1) as f64 * n_frac) as usize;
        let a = gaussian_matrix(m, n, seed);
        let s = svd_singular_values(&a).unwrap();
        prop_assert_eq!(s.len(), n);
        prop_assert!(s.iter().all(|&v| v >= 0.0));
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let energy: f64 = s.iter().map(|v| v * v).sum();
        let frob = a.frobenius_norm_sqr();
        prop_assert!((energy - frob).abs() <= 1e-12 * frob, "{} vs {}", energy, frob);
    }

    #[test]
    fn spectrum_matches_characteristic_polynomial_roots(n in 1usize..=4, extra in 0usize..=3, seed: u64) {
        let m = n + extra;
        let k = gaussian_matrix(m, n, seed);
        let mut gram = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                gram[i][j] = (0..m).map(|l| k.get(l, i).conj() * k.get(l, j)).sum();
            }
        }
        let spec = wishart_spectrum(&k, 1.0).unwrap();
        let roots = real_roots(&char_poly(&gram), 1.01 * k.frobenius_norm_sqr() + 1.0);
        prop_assert_eq!(roots.len(), n);
        for (a, b) in spec.values.iter().zip(&roots) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn histogram_masses_sum_to_one(values in prop::collection::vec(-1.0f64..5.0, 1..200), bins in 1usize..50) {
        let mut h = HistogramCounts::new(0.0, 4.0, bins).unwrap();
        for &v in &values {
            h.add(v);
        }
        let inside: u64 = h.counts().iter().sum();
        prop_assert_eq!(inside + h.outside(), values.len() as u64);
        if inside > 0 {
            let total: f64 = h.to_histogram().unwrap().masses.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn theory_bin_masses_sum_to_one(r in 0.05f64..=1.0, tau in 0.1f64..3.0, bins in 1usize..80) {
        let p = SpectralParams::new(r, tau).unwrap();
        let (a, b) = spectrum_edges(&p);
        let edges: Vec<f64> = (0..=bins).map(|i| a + (b - a) * i as f64 / bins as f64).collect();
        let total: f64 = mp_bin_masses(&edges, &p).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "{}", total);
    }

    #[test]
    fn r_transform_inverts_the_resolvent(
        r in 0.05f64..=1.0,
        tau in 0.1f64..3.0,
        x in -10.0f64..20.0,
        y in prop_oneof![-5.0f64..-0.05, 0.05f64..5.0],
    ) {
        let p = SpectralParams::new(r, tau).unwrap();
        let z = Complex64::new(x, y);
        let g = resolvent_wishart(z, &p).unwrap();
        let res = (r_transform(g, &p).unwrap() + 1.0 / g - z).norm();
        prop_assert!(res < 1e-12 * (1.0 + z.norm()), "{}", res);
    }

    #[test]
    fn resolvent_branch(r in 0.05f64..=1.0, tau in 0.1f64..3.0, frac in 0.01f64..0.99, phi in 0.0f64..std::f64::consts::TAU, rad in 100.0f64..1e4) {
        let p = SpectralParams::new(r, tau).unwrap();
        let (a, b) = spectrum_edges(&p);
        let lam = a + (b - a) * frac;
        prop_assert!(resolvent_wishart(Complex64::new(lam, -1e-9), &p).unwrap().im >= 0.0);
        let z = Complex64::from_polar(rad, phi);
        if let Ok(g) = resolvent_wishart(z, &p) {
            // G - 1/z ~ tau/z^2
            prop_assert!((g - 1.0 / z).norm() <= 2.0 * tau / (rad * rad));
        }
    }

    #[test]
    fn laguerre_differentiation(n in 3usize..=20, k in 0usize..=3, alpha in 0usize..=5, x in 0.01f64..50.0) {
        let a = alpha as f64;
        // d^k/dx^k of sum_j (-1)^j C(n+a, n-j) x^j / j!
        let mut value = 0.0;
        let mut scale = 0.0;
        let mut fact = 1.0;
        for j in 0..=n {
            if j > 0 {
                fact *= j as f64;
            }
            if j < k {
                continue;
            }
            let falling: f64 = (0..k).map(|i| (j - i) as f64).product();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * binomial(n as f64 + a, n - j) * falling * x.powi((j - k) as i32) / fact;
            value += term;
            scale += term.abs();
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let direct = sign * laguerre_eval_real(n - k, a + k as f64, x);
        prop_assert!((value - direct).abs() <= 1e-12 * scale.max(1.0), "{} vs {}", value, direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sde_walkers_stay_positive(n in 1usize..=5, extra in 0usize..=2, tau in 0.1f64..1.0, seed: u64) {
        let conv = TimeConvention::new(n, n + extra).unwrap();
        let t = conv.physical_time(tau);
        let cfg = EnsembleConfig::new(conv, tau, t / 200.0, 4, seed).unwrap();
        for replica in 0..cfg.replicas {
            let s = sample_replica(&cfg, SamplingMode::EigenSde, replica).unwrap();
            prop_assert!(s.values.iter().all(|&l| l > 0.0));
            prop_assert!(s.values.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn trace_law() {
    let conv = TimeConvention::new(4, 8).unwrap();
    let tau = 0.7;
    let cfg = EnsembleConfig::new(conv, tau, conv.physical_time(tau), 10_000, 21).unwrap();
    let batch = sample_spectra(&cfg, SamplingMode::MatrixPath).unwrap();
    let m1 = Estimate::from_samples(batch.spectra.iter().map(|s| s.moment(1)));
    assert!((m1.mean - tau).abs() <= 3.0 * m1.stderr, "{m1:?}");
}

#[test]
fn large_matrix_density_is_close_to_the_limit() {
    let conv = TimeConvention::new(64, 128).unwrap();
    let tau = 1.0;
    let cfg = EnsembleConfig::new(conv, tau, conv.physical_time(tau), 40, 5).unwrap();
    let batch = sample_spectra(&cfg, SamplingMode::MatrixPath).unwrap();
    let p = SpectralParams::from_convention(&conv, tau).unwrap();
    let (a, b) = spectrum_edges(&p);
    let hist = empirical_density(&batch.spectra, 20, Some((a, b))).unwrap();
    let l1 = hist.l1_distance(&mp_bin_masses(&hist.bin_edges, &p).unwrap()).unwrap();
    assert!(l1 < 0.08, "{l1}");
}
