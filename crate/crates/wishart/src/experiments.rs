//! The experiments behind the CLI.  Each one computes tables and checks;
//! [`run`] writes them, optional plots, and the manifest.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use wishart_core::analytic::{
    antiwishart_burgers_residual, burgers_residual, chiral_burgers_residual, find_shocks, implicit_residual_at,
    joint_density_normalization, joint_density_small_n, mp_bin_masses, r_transform, resolvent_antiwishart,
    resolvent_wishart, spectrum_edges, trace_characteristic, Side, SpectralParams,
};
use wishart_core::linalg::{characteristic_value, wishart_spectrum, Spectrum};
use wishart_core::orthopoly::{
    cauchy_pde_residual, cauchy_transform, charpoly, meq_relative_residual, meq_residual_exact, monic_coeffs,
    monic_eval, CauchySetup, Prefactor,
};
use wishart_core::quadrature::{gauss_legendre_on, integrate_adaptive};
use wishart_core::rng::ReplicaStream;
use wishart_core::special::{
    airy, airy_layer_residual, bessel_j, bessel_layer_residual, hard_edge_chi, hard_edge_error, log_log_slope,
    matching_check_hard, matching_check_soft, soft_edge_error, soft_edge_params, EdgeSide,
};
use wishart_core::stochastic::{
    empirical_density, evolve_eigenvalues, evolve_singular_values, matrix_at_time, EnsembleConfig, Estimate,
    SamplingMode, TimeConvention,
};
use wishart_core::{BigRational, Complex64, Error};

use crate::config::{Experiment, Params, RunConfig, FORMAT_VERSION};
use crate::output::{clear_artifacts, hash_directory, write_json, Cell, Check, FileHash, Table, MANIFEST_NAME};
use crate::parallel::{map_replicas, sample_spectra};
use crate::{plot, RunError};

/// Execution settings that must not change any numeric output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads, `0` for automatic.
    pub threads: usize,
    /// Also write an SVG next to each CSV.
    pub plot: bool,
}

/// What a finished experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub experiment: Experiment,
    pub dir: PathBuf,
    pub checks: Vec<Check>,
    /// Reports of the experiments run by `validate-all`.
    pub children: Vec<RunReport>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.children.iter().all(RunReport::passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        let mut out: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        for child in &self.children {
            out.extend(child.failures());
        }
        out
    }
}

#[derive(Debug, Default)]
struct Outcome {
    tables: Vec<Table>,
    checks: Vec<Check>,
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct Manifest<'a> {
    format_version: u32,
    experiment: &'static str,
    config: &'a RunConfig,
    seed: u64,
    library_version: &'static str,
    threads: usize,
    started_unix: f64,
    finished_unix: f64,
    wall_seconds: f64,
    passed: bool,
    checks: &'a [Check],
    files: Vec<FileHash>,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Runs `cfg.experiment` and writes `<outdir>/<experiment>/`.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let started = unix_now();
    let clock = Instant::now();
    let mut children = Vec::new();
    let outcome = match cfg.experiment {
        Experiment::Density => density(cfg, opts.threads)?,
        Experiment::Charpoly => charpoly_check(cfg, opts.threads)?,
        Experiment::EdgeSoft => edge_soft(cfg)?,
        Experiment::EdgeHard => edge_hard(cfg)?,
        Experiment::Characteristics => characteristics(cfg)?,
        Experiment::Rtransform => rtransform(cfg)?,
        Experiment::SdeCheck => sde_check(cfg, opts.threads)?,
        Experiment::ValidateAll => {
            let (outcome, reports) = validate_all(cfg, opts)?;
            children = reports;
            outcome
        }
    };
    let dir = experiment_dir(&cfg.outdir(), cfg.experiment);
    clear_artifacts(&dir)?;
    fs::create_dir_all(&dir)?;
    for table in &outcome.tables {
        table.write(&dir)?;
    }
    if opts.plot {
        plot::plot_directory(&dir)?;
    }
    let report = RunReport { experiment: cfg.experiment, dir: dir.clone(), checks: outcome.checks, children };
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        experiment: cfg.experiment.name(),
        config: cfg,
        seed: cfg.seed(),
        library_version: env!("CARGO_PKG_VERSION"),
        threads: if opts.threads == 0 { rayon::current_num_threads() } else { opts.threads },
        started_unix: started,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        passed: report.passed(),
        checks: &report.checks,
        files: hash_directory(&dir)?,
    };
    write_json(&dir.join(MANIFEST_NAME), &manifest)?;
    Ok(report)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn ensemble(cfg: &RunConfig) -> Result<(TimeConvention, f64), RunError> {
    let conv = TimeConvention::new(cfg.n(), cfg.m())?;
    Ok((conv, cfg.tau()))
}

/// `dt` from the config, else `fraction * t_final`.
fn dt_or_default(cfg: &RunConfig, t_final: f64, fraction: f64) -> f64 {
    cfg.params.dt.unwrap_or(fraction * t_final)
}

fn density(cfg: &RunConfig, threads: usize) -> Result<Outcome, RunError> {
    let (conv, tau) = ensemble(cfg)?;
    let t_final = conv.physical_time(tau);
    let ens = EnsembleConfig::new(conv, tau, dt_or_default(cfg, t_final, 0.1), cfg.replicas(), cfg.seed())?;
    let batch = sample_spectra(&ens, SamplingMode::MatrixPath, threads)?;
    let p = SpectralParams::from_convention(&conv, tau)?;
    let (left, right) = spectrum_edges(&p);
    let hist = empirical_density(&batch.spectra, cfg.bins(), Some((left, right)))?;
    let theory = mp_bin_masses(&hist.bin_edges, &p)?;
    let l1 = hist.l1_distance(&theory)?;

    let mut table = Table::new("density", &["bin_center", "empirical", "mp_theory"]);
    for ((x, w), (emp, th)) in hist.centers().iter().zip(hist.bin_edges.windows(2)).zip(hist.masses.iter().zip(&theory)) {
        let width = w[1] - w[0];
        table.push(vec![(*x).into(), (emp / width).into(), (th / width).into()]);
    }

    let nf = conv.n() as f64;
    let (lo, hi) = (right * (1.0 - 5.0 * nf.powf(-2.0 / 3.0)), right * (1.0 + 5.0 * nf.powf(-2.0 / 3.0)));
    let mut edges = Table::new("edges", &["replica", "lambda_max", "window_low", "window_high", "inside"]);
    let mut inside = 0usize;
    for (k, s) in batch.spectra.iter().enumerate() {
        let max = s.values.last().copied().unwrap_or(f64::NAN);
        let ok = max >= lo && max <= hi;
        inside += ok as usize;
        edges.push(vec![k.into(), max.into(), lo.into(), hi.into(), (ok as usize).into()]);
    }
    let fraction = inside as f64 / batch.spectra.len() as f64;
    Ok(Outcome {
        tables: vec![table, edges],
        checks: vec![
            Check::at_most("L1 <= 0.05 (empirical density vs Marchenko-Pastur bin masses)", l1, 0.05),
            Check::at_least("fraction of replicas with max eigenvalue in z_R(1 +- 5 N^-2/3)", fraction, 0.95),
        ],
    })
}

/// `|mean - exact| / stderr`, for the real and imaginary parts separately.
fn complex_z_scores(values: &[Complex64], exact: Complex64) -> (Estimate, Estimate, f64) {
    let re = Estimate::from_samples(values.iter().map(|v| v.re));
    let im = Estimate::from_samples(values.iter().map(|v| v.im));
    let score = |e: &Estimate, x: f64| {
        if e.stderr > 0.0 {
            (e.mean - x).abs() / e.stderr
        } else if (e.mean - x).abs() <= 1e-12 * (1.0 + x.abs()) {
            0.0
        } else {
            f64::INFINITY
        }
    };
    (re, im, score(&re, exact.re).max(score(&im, exact.im)))
}

fn default_charpoly_grid(cfg: &RunConfig) -> Vec<Complex64> {
    cfg.z_grid().into_iter().map(|[re, im]| c(re, im)).collect()
}

fn charpoly_check(cfg: &RunConfig, threads: usize) -> Result<Outcome, RunError> {
    let (conv, tau) = ensemble(cfg)?;
    let t_final = conv.physical_time(tau);
    let ens = EnsembleConfig::new(conv, tau, dt_or_default(cfg, t_final, 0.1), cfg.replicas(), cfg.seed())?;
    let batch = sample_spectra(&ens, SamplingMode::MatrixPath, threads)?;

    let mut checks = Vec::new();
    let mut mc = Table::new(
        "charpoly_mc",
        &["z_re", "z_im", "exact_re", "exact_im", "mc_re", "mc_im", "stderr_re", "stderr_im", "z_score"],
    );
    let mut worst = 0.0f64;
    for z in default_charpoly_grid(cfg) {
        let values: Vec<Complex64> = batch.spectra.iter().map(|s| characteristic_value(z, s)).collect();
        let exact = charpoly(&conv, z, tau)?;
        let (re, im, score) = complex_z_scores(&values, exact);
        worst = worst.max(score);
        mc.push(vec![
            z.re.into(),
            z.im.into(),
            exact.re.into(),
            exact.im.into(),
            re.mean.into(),
            im.mean.into(),
            re.stderr.into(),
            im.stderr.into(),
            score.into(),
        ]);
    }
    checks.push(Check::at_most("Monte Carlo <prod(z - lambda)> vs charpoly, in standard errors", worst, 3.0));

    let mut exact = Table::new("meq_exact", &["N", "nu", "r", "nonzero_terms"]);
    let mut nonzero = 0usize;
    for (r_label, r) in [("1", (1, 1)), ("1/2", (1, 2)), ("2/3", (2, 3))] {
        let r = num_rational(r.0, r.1);
        for n in 1..=8 {
            for nu in 0..=4 {
                let res = meq_residual_exact(n, nu, &r)?;
                let count = usize::from(!res.is_zero());
                nonzero += count;
                exact.push(vec![n.into(), nu.into(), r_label.into(), count.into()]);
            }
        }
    }
    checks.push(Check::at_most("exact PDE residual polynomials that are nonzero (N<=8, nu<=4)", nonzero as f64, 0.0));

    let mut float = Table::new("meq_float", &["N", "nu", "r", "relative_residual"]);
    let mut worst_rel = 0.0f64;
    for r in [1.0, 0.5, 2.0 / 3.0] {
        for nu in [0usize, 1, 4] {
            for n in [1usize, 2, 4, 8, 16, 32, 64] {
                let rel = meq_relative_residual(n, nu, r)?;
                worst_rel = worst_rel.max(rel);
                float.push(vec![n.into(), nu.into(), r.into(), rel.into()]);
            }
        }
    }
    checks.push(Check::below("float PDE relative residual (N<=64)", worst_rel, 1e-10));

    let mut cauchy = Table::new("cauchy", &["nu", "pde_residual", "gauss_laguerre_re", "gauss_laguerre_im", "adaptive_re", "adaptive_im", "relative_difference"]);
    let (z, tau_c) = (c(-2.0, 2.0), 1.0);
    let mut worst_pde = 0.0f64;
    let mut worst_dual = 0.0f64;
    for nu in [0usize, 1] {
        let setup = CauchySetup::new(3, nu, 1.0)?;
        let pde = cauchy_pde_residual(&setup, z, tau_c, 1e-3, Prefactor::Applied)?;
        let gl = cauchy_transform(&setup, z, tau_c)?;
        let adaptive = cauchy_by_adaptive_quadrature(3, nu, 1.0, z, tau_c)?;
        let rel = (gl - adaptive).norm() / adaptive.norm();
        worst_pde = worst_pde.max(pde);
        worst_dual = worst_dual.max(rel);
        cauchy.push(vec![
            nu.into(),
            pde.into(),
            gl.re.into(),
            gl.im.into(),
            adaptive.re.into(),
            adaptive.im.into(),
            rel.into(),
        ]);
    }
    checks.push(Check::below("Cauchy transform PDE residual (N=3, z=-2+2i)", worst_pde, 1e-4));
    checks.push(Check::below("Cauchy transform: Gauss-Laguerre vs adaptive Gauss-Kronrod", worst_dual, 1e-8));

    Ok(Outcome { tables: vec![mc, exact, float, cauchy], checks })
}

fn num_rational(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// The Cauchy transform by adaptive quadrature on `[0, 80 T]`, independent of
/// the Gauss–Laguerre path.
fn cauchy_by_adaptive_quadrature(n: usize, nu: usize, r: f64, z: Complex64, tau: f64) -> Result<Complex64, RunError> {
    let t = r * tau / n as f64;
    let poly = monic_coeffs(n, nu);
    let integrand = |x: f64| {
        let m = monic_eval(&poly, c(x, 0.0), t);
        m * (x / t).powi(nu as i32) * (-x / t).exp() / (x - z)
    };
    let upper = 80.0 * t;
    let re = integrate_adaptive(|x| integrand(x).re, 0.0, upper, 1e-15, 1e-13, 4096)?;
    let im = integrate_adaptive(|x| integrand(x).im, 0.0, upper, 1e-15, 1e-13, 4096)?;
    Ok(c(re, im) / (2.0 * PI * c(0.0, 1.0)))
}

const EDGE_SIZES: [usize; 3] = [16, 32, 64];

/// `ln Gamma(x)` by upward recurrence into the Stirling series.
fn ln_gamma_stirling(x: f64) -> f64 {
    let mut shift = 0.0;
    let mut y = x;
    while y < 30.0 {
        shift -= y.ln();
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    shift + (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + series
}

/// First positive zero of `f` in `[a, b]` by bisection.
fn bisect(mut f: impl FnMut(f64) -> Result<f64, Error>, mut a: f64, mut b: f64) -> Result<f64, RunError> {
    let fa = f(a)?;
    if fa * f(b)? > 0.0 {
        return Err(RunError::Numeric(Error::Domain("no sign change in bracket")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn edge_soft(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let tau = cfg.tau();
    let s_grid = cfg.s_grid();
    let mut checks = Vec::new();

    let mut conv = Table::new("soft_convergence", &["N", "max_error"]);
    let sizes: Vec<f64> = EDGE_SIZES.iter().map(|&n| n as f64).collect();
    let mut errors = Vec::new();
    for &n in &EDGE_SIZES {
        let e = soft_edge_error(n, tau, &s_grid)?;
        errors.push(e);
        conv.push(vec![n.into(), e.into()]);
    }
    let decreasing = errors.windows(2).filter(|w| !(w[1] < w[0])).count();
    checks.push(Check::at_most("soft-edge error E(N) strictly decreasing (violations)", decreasing as f64, 0.0));
    let exponent = -log_log_slope(&sizes, &errors)?;
    checks.push(Check::within("soft-edge error decay exponent", exponent, 0.2, 0.6));

    let z_star = soft_edge_params(&SpectralParams::new(1.0, tau)?, EdgeSide::SoftRight)?.z_star.unwrap_or(f64::NAN);
    let mut profile = Table::new("soft_profile", &["s", "chi"]);
    for &s in &s_grid {
        profile.push(vec![s.into(), wishart_core::special::soft_edge_chi(s, z_star)?.into()]);
    }

    let mut layer = Table::new("airy_layer", &["z_star", "s", "residual"]);
    let mut worst = 0.0f64;
    for zs in [1.0, 16.0, 100.0] {
        for s in linspace(-5.0, 3.0, 161) {
            match airy_layer_residual(s, zs) {
                Ok(res) => {
                    worst = worst.max(res);
                    layer.push(vec![zs.into(), s.into(), res.into()]);
                }
                Err(Error::Pole(_)) => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }
    checks.push(Check::below("Airy scaling-layer ODE residual", worst, 1e-8));

    let (ai0, aip0) = airy(0.0)?;
    let ai0_oracle = 1.0 / (3f64.powf(2.0 / 3.0) * ln_gamma_stirling(2.0 / 3.0).exp());
    let aip0_oracle = -1.0 / (3f64.powf(1.0 / 3.0) * ln_gamma_stirling(1.0 / 3.0).exp());
    checks.push(Check::below("Ai(0) vs Gamma-function oracle", (ai0 - ai0_oracle).abs(), 1e-9));
    checks.push(Check::below("Ai'(0) vs Gamma-function oracle", (aip0 - aip0_oracle).abs(), 1e-9));
    checks.push(Check::at_most("|Ai'/Ai + sqrt(x)| at x = 25", matching_check_soft(25.0)?, 0.015));
    checks.push(Check::at_most("|Ai'/Ai + sqrt(x)| at x = 100", matching_check_soft(100.0)?, 0.004));

    Ok(Outcome { tables: vec![conv, profile, layer], checks })
}

/// First positive zero of `J_0`.
const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// `J_0` from its Maclaurin series, summed until the terms are negligible.
fn bessel_j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn edge_hard(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let tau = cfg.tau();
    let s_grid = cfg.s_grid();
    let mut checks = Vec::new();

    let mut conv = Table::new("hard_convergence", &["N", "max_error"]);
    let mut errors = Vec::new();
    for &n in &EDGE_SIZES {
        let e = hard_edge_error(n, 0, tau, &s_grid)?;
        errors.push(e);
        conv.push(vec![n.into(), e.into()]);
    }
    let decreasing = errors.windows(2).filter(|w| !(w[1] < w[0])).count();
    checks.push(Check::at_most("hard-edge error E~(N) strictly decreasing (violations)", decreasing as f64, 0.0));

    let j0 = bisect(|x| bessel_j(0, x), 2.0, 3.0)?;
    let j0_oracle = bisect(|x| Ok(bessel_j0_series(x)), 2.0, 3.0)?;
    checks.push(Check::below("first zero of J_0 vs Maclaurin-series oracle", (j0 - j0_oracle).abs(), 1e-9));
    checks.push(Check::below("first zero of J_0 vs tabulated value", (j0 - J0_FIRST_ZERO).abs(), 1e-9));

    // 1/chi passes continuously through zero at the pole of chi.
    let inverse_chi = |s: f64| match hard_edge_chi(s, 0, tau) {
        Ok(chi) => Ok(1.0 / chi),
        Err(Error::Pole(_)) => Ok(0.0),
        Err(e) => Err(e),
    };
    let pole = bisect(inverse_chi, 1.0 * tau, 1.9 * tau)?;
    let expected = j0_oracle * j0_oracle * tau / 4.0;
    checks.push(Check::below("hard-edge prediction pole at j_0^2 tau / 4", (pole - expected).abs(), 1e-6));

    let mut profile = Table::new("hard_profile", &["s", "chi"]);
    for &s in &s_grid {
        profile.push(vec![s.into(), hard_edge_chi(s, 0, tau)?.into()]);
    }

    let mut layer = Table::new("bessel_layer", &["nu", "tau", "s", "residual"]);
    let mut worst = 0.0f64;
    for nu in [0usize, 1, 2, 4] {
        for t in [0.5, 1.0, 2.0] {
            for k in 1..=80 {
                let s = 0.05 * k as f64;
                match bessel_layer_residual(s, nu, t) {
                    Ok(res) => {
                        worst = worst.max(res);
                        layer.push(vec![nu.into(), t.into(), s.into(), res.into()]);
                    }
                    Err(Error::Pole(_)) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    checks.push(Check::below("Bessel scaling-layer ODE residual", worst, 1e-8));

    let mut worst_match = 0.0f64;
    for nu in [0usize, 1, 2] {
        worst_match = worst_match.max(matching_check_hard(30.0, nu)?);
    }
    checks.push(Check::at_most("|J_nu'/J_nu + i| at |x| = 30 on the rotated ray", worst_match, 0.05));

    Ok(Outcome { tables: vec![conv, profile, layer], checks })
}

const CHARACTERISTIC_PARAMS: [(f64, f64); 6] = [(1.0, 0.3), (1.0, 1.0), (1.0, 3.0), (0.5, 0.3), (0.5, 1.0), (0.5, 3.0)];

/// 97 real starts on `[-4, 4]`, the two fold points, and one complex start.
fn default_z0_grid(r: f64, tau: f64) -> Vec<Complex64> {
    let mut grid: Vec<Complex64> = linspace(-4.0, 4.0, 97).into_iter().map(|x| c(x, 0.0)).collect();
    let fold = r.sqrt() * tau;
    grid.extend([c(-fold, 0.0), c(fold, 0.0), c(1.0, 1.0)]);
    grid
}

/// Off-cut points for the Burgers checks: 25 abscissae at two heights.
fn burgers_grid() -> Vec<Complex64> {
    let mut out = Vec::new();
    for y in [0.5, 1.5] {
        for x in linspace(-2.0, 6.0, 25) {
            out.push(c(x, y));
        }
    }
    out
}

fn characteristics(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut checks = Vec::new();
    let mut lines = Table::new(
        "lines",
        &["r", "tau_final", "z0_re", "z0_im", "tau", "z_re", "z_im", "g_re", "g_im", "note"],
    );
    let mut shocks = Table::new("shocks", &["r", "tau", "side", "z0c", "zc"]);
    let mut worst_implicit = 0.0f64;
    let mut worst_origin = 0.0f64;
    let mut worst_shock = 0.0f64;
    for (r, tau) in CHARACTERISTIC_PARAMS {
        let p = SpectralParams::new(r, tau)?;
        let grid = if cfg.params.z_grid.is_some() {
            cfg.z_grid().into_iter().map(|[a, b]| c(a, b)).collect()
        } else {
            default_z0_grid(r, tau)
        };
        for z0 in grid {
            match trace_characteristic(z0, &p, 11) {
                Ok(line) => {
                    for s in &line.samples {
                        worst_implicit = worst_implicit.max(implicit_residual_at(s.z, s.g, r, s.tau)?);
                        if s.tau == 0.0 {
                            worst_origin = worst_origin.max((s.z - z0).norm());
                        }
                        lines.push(vec![
                            r.into(),
                            tau.into(),
                            z0.re.into(),
                            z0.im.into(),
                            s.tau.into(),
                            s.z.re.into(),
                            s.z.im.into(),
                            s.g.re.into(),
                            s.g.im.into(),
                            "".into(),
                        ]);
                    }
                }
                Err(Error::Domain(msg)) => {
                    let blank = || Cell::Text(String::new());
                    lines.push(vec![
                        r.into(),
                        tau.into(),
                        z0.re.into(),
                        z0.im.into(),
                        blank(),
                        blank(),
                        blank(),
                        blank(),
                        blank(),
                        Cell::Text(format!("warning: {msg}")),
                    ]);
                }
                Err(e) => return Err(e.into()),
            }
        }
        let (left, right) = spectrum_edges(&p);
        let (ls, rs) = find_shocks(&p);
        for s in [ls, rs] {
            let edge = if s.side == Side::Left { left } else { right };
            worst_shock = worst_shock.max((s.zc - edge).abs());
            let side = if s.side == Side::Left { "left" } else { "right" };
            shocks.push(vec![r.into(), tau.into(), side.into(), s.z0c.into(), s.zc.into()]);
        }
    }
    checks.push(Check::below("implicit-solution residual along characteristics", worst_implicit, 1e-12));
    checks.push(Check::at_most("characteristics start at z0 when tau = 0", worst_origin, 0.0));
    checks.push(Check::at_most("pre-shock points equal the spectral edges", worst_shock, 0.0));

    let mut burgers = Table::new(
        "burgers",
        &["r", "z_re", "z_im", "wishart", "chiral", "antiwishart_pde", "antiwishart_relation"],
    );
    let (mut w_b, mut w_c, mut w_a, mut w_rel) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for r in [1.0, 0.5] {
        let p = SpectralParams::new(r, 1.0)?;
        for z in burgers_grid() {
            let b = burgers_residual(z, &p, 1e-4)?;
            let ch = chiral_burgers_residual(z, &p, 1e-4)?;
            let aw = antiwishart_burgers_residual(z, &p, 1e-4)?;
            let ga = resolvent_antiwishart(z, &p)?;
            let g = resolvent_wishart(z, &p)?;
            let rel = (ga - ((1.0 - r) / z + r * g)).norm();
            w_b = w_b.max(b);
            w_c = w_c.max(ch);
            w_a = w_a.max(aw);
            w_rel = w_rel.max(rel);
            burgers.push(vec![r.into(), z.re.into(), z.im.into(), b.into(), ch.into(), aw.into(), rel.into()]);
        }
    }
    checks.push(Check::below("Wishart Burgers residual (h = 1e-4)", w_b, 1e-5));
    checks.push(Check::below("chiral Burgers residual (h = 1e-4)", w_c, 1e-5));
    checks.push(Check::below("anti-Wishart Burgers residual (h = 1e-4)", w_a, 1e-5));
    checks.push(Check::below("anti-Wishart relation G_a = (1 - r)/z + r G", w_rel, 1e-12));

    Ok(Outcome { tables: vec![lines, shocks, burgers], checks })
}

/// 50 points on the circle `|z - 2| = 3` and 50 points at `Im z = +-0.5`.
fn default_rtransform_grid() -> Vec<Complex64> {
    let mut out: Vec<Complex64> = (0..50)
        .map(|k| {
            let phi = 2.0 * PI * (k as f64 + 0.5) / 50.0;
            c(2.0 + 3.0 * phi.cos(), 3.0 * phi.sin())
        })
        .collect();
    for (k, x) in linspace(-3.0, 8.0, 50).into_iter().enumerate() {
        out.push(c(x, if k % 2 == 0 { 0.5 } else { -0.5 }));
    }
    out
}

fn rtransform(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let tau = cfg.tau();
    let grid: Vec<Complex64> = if cfg.params.z_grid.is_some() {
        cfg.z_grid().into_iter().map(|[a, b]| c(a, b)).collect()
    } else {
        default_rtransform_grid()
    };
    let mut table = Table::new("rtransform", &["r", "z_re", "z_im", "g_re", "g_im", "residual"]);
    let mut worst = 0.0f64;
    for r in [1.0, 0.5] {
        let p = SpectralParams::new(r, tau)?;
        for &z in &grid {
            let g = resolvent_wishart(z, &p)?;
            let res = (r_transform(g, &p)? + 1.0 / g - z).norm();
            worst = worst.max(res);
            table.push(vec![r.into(), z.re.into(), z.im.into(), g.re.into(), g.im.into(), res.into()]);
        }
    }
    Ok(Outcome {
        tables: vec![table],
        checks: vec![Check::below("|R(G(z)) + 1/G(z) - z| off the support", worst, 1e-12)],
    })
}

/// Stream offset separating the singular-value runs from the eigenvalue runs.
const SINGULAR_STREAM_SEED_XOR: u64 = 0x5eed_0000_0000_0001;

/// Eigenvalues at `t_final` from the singular-value SDE `kappa = sqrt(lambda)`.
fn singular_value_replica(cfg: &EnsembleConfig, replica: usize) -> Result<Spectrum, Error> {
    let conv = &cfg.conv;
    let mut src = ReplicaStream::new(cfg.seed ^ SINGULAR_STREAM_SEED_XOR, replica as u64);
    let burn_in = cfg.burn_in_steps as f64 * cfg.dt_phys;
    let k = matrix_at_time(conv, burn_in, &mut src)?;
    let mut kap: Vec<f64> = wishart_spectrum(&k, conv.scaled_time(burn_in))?.values.iter().map(|l| l.sqrt()).collect();
    evolve_singular_values(&mut kap, burn_in, cfg.t_final(), cfg.dt_phys, conv, &mut src)?;
    Ok(Spectrum { values: kap.iter().map(|k| k * k).collect(), time_tau: cfg.tau_final })
}

/// Eigenvalues at `t_final` from the eigenvalue SDE with the same stream layout as [`singular_value_replica`].
fn eigenvalue_replica(cfg: &EnsembleConfig, replica: usize) -> Result<Spectrum, Error> {
    let conv = &cfg.conv;
    let mut src = ReplicaStream::new(cfg.seed, replica as u64);
    let burn_in = cfg.burn_in_steps as f64 * cfg.dt_phys;
    let k = matrix_at_time(conv, burn_in, &mut src)?;
    let mut lam = wishart_spectrum(&k, conv.scaled_time(burn_in))?.values;
    evolve_eigenvalues(&mut lam, burn_in, cfg.t_final(), cfg.dt_phys, conv, &mut src)?;
    Ok(Spectrum { values: lam, time_tau: cfg.tau_final })
}

fn moments(spectra: &[Spectrum], kmax: i32) -> Vec<Estimate> {
    (1..=kmax).map(|k| Estimate::from_samples(spectra.iter().map(|s| s.moment(k)))).collect()
}

/// Sizes of the sde-check sub-runs that are not set by the config.
#[derive(Debug, Clone, Copy)]
struct SdeSizes {
    joint_samples: usize,
    cross_replicas: usize,
}

fn sde_sizes(cfg: &RunConfig) -> SdeSizes {
    // a reduced replica count scales the fixed-size sub-runs down with it
    let scale = cfg.replicas() as f64 / 2000.0;
    SdeSizes {
        joint_samples: ((1e6 * scale.min(1.0)) as usize).max(1000),
        cross_replicas: ((4000.0 * scale.min(1.0)) as usize).max(50),
    }
}

fn sde_check(cfg: &RunConfig, threads: usize) -> Result<Outcome, RunError> {
    let (conv, tau) = ensemble(cfg)?;
    let t_final = conv.physical_time(tau);
    let dt = dt_or_default(cfg, t_final, 1e-4);
    let ens = EnsembleConfig::new(conv, tau, dt, cfg.replicas(), cfg.seed())?;
    let matrix = sample_spectra(&ens, SamplingMode::MatrixPath, threads)?;
    let sde = sample_spectra(&ens, SamplingMode::EigenSde, threads)?;
    let (mm, ms) = (matrix.moments(4), sde.moments(4));
    let mut table = Table::new(
        "moments",
        &["k", "matrix_path_mean", "matrix_path_stderr", "eigen_sde_mean", "eigen_sde_stderr", "z_score"],
    );
    let mut worst = 0.0f64;
    for (k, (a, b)) in mm.iter().zip(&ms).enumerate() {
        let z = a.z_score(b);
        worst = worst.max(z);
        table.push(vec![(k + 1).into(), a.mean.into(), a.stderr.into(), b.mean.into(), b.stderr.into(), z.into()]);
    }
    let mut checks = vec![Check::at_most("moments k=1..4: matrix path vs eigenvalue SDE, combined stderr", worst, 3.0)];
    let sizes = sde_sizes(cfg);

    let (joint, l1) = joint_histogram(cfg.seed(), sizes.joint_samples, threads)?;
    checks.push(Check::at_most("N=2 eigenvalue histogram vs normalized joint density, L1", l1, 0.1));

    let conv2 = TimeConvention::new(2, 3)?;
    let t2 = conv2.physical_time(0.5);
    let ens2 = EnsembleConfig::new(conv2, 0.5, 1e-3 * t2, sizes.cross_replicas, cfg.seed())?;
    let lam = map_replicas(threads, ens2.replicas, |k| eigenvalue_replica(&ens2, k))?;
    let kap = map_replicas(threads, ens2.replicas, |k| singular_value_replica(&ens2, k))?;
    let mut cross = Table::new("singular_vs_eigen", &["k", "eigen_mean", "eigen_stderr", "singular_mean", "singular_stderr", "z_score"]);
    let mut worst_cross = 0.0f64;
    for (k, (a, b)) in moments(&lam, 2).iter().zip(&moments(&kap, 2)).enumerate() {
        let z = a.z_score(b);
        worst_cross = worst_cross.max(z);
        cross.push(vec![(k + 1).into(), a.mean.into(), a.stderr.into(), b.mean.into(), b.stderr.into(), z.into()]);
    }
    checks.push(Check::at_most("N=2 moments: singular-value SDE vs eigenvalue SDE, combined stderr", worst_cross, 3.0));

    Ok(Outcome { tables: vec![table, joint, cross], checks })
}

const JOINT_T: f64 = 0.25;
const JOINT_BINS: usize = 20;
const JOINT_RANGE: f64 = 4.0;

/// Symmetrised 2D histogram of `(lambda_1, lambda_2)` at `N = M = 2`, compared
/// with cell masses of the normalized joint density.
fn joint_histogram(seed: u64, samples: usize, threads: usize) -> Result<(Table, f64), RunError> {
    let conv = TimeConvention::new(2, 2)?;
    let tau = conv.scaled_time(JOINT_T);
    let ens = EnsembleConfig::new(conv, tau, JOINT_T, samples, seed)?;
    let pairs = map_replicas(threads, samples, |k| {
        let mut src = ReplicaStream::new(ens.seed, k as u64);
        let m = matrix_at_time(&conv, JOINT_T, &mut src)?;
        let s = wishart_spectrum(&m, tau)?;
        Ok((s.values[0], s.values[1]))
    })?;
    let width = JOINT_RANGE / JOINT_BINS as f64;
    let cell = |x: f64| if x < JOINT_RANGE { Some(((x / width) as usize).min(JOINT_BINS - 1)) } else { None };
    let mut counts = vec![0.0f64; JOINT_BINS * JOINT_BINS];
    let mut outside = 0.0;
    for &(a, b) in &pairs {
        match (cell(a), cell(b)) {
            (Some(i), Some(j)) => {
                counts[i * JOINT_BINS + j] += 0.5;
                counts[j * JOINT_BINS + i] += 0.5;
            }
            _ => outside += 1.0,
        }
    }
    let total = pairs.len() as f64;

    let z = joint_density_normalization(JOINT_T, &conv)?;
    let mut table = Table::new("joint_n2", &["lambda_a_center", "lambda_b_center", "empirical_mass", "theory_mass"]);
    let mut l1 = 0.0;
    let mut inside_theory = 0.0;
    for i in 0..JOINT_BINS {
        let rx = gauss_legendre_on(8, i as f64 * width, (i + 1) as f64 * width)?;
        for j in 0..JOINT_BINS {
            let ry = gauss_legendre_on(8, j as f64 * width, (j + 1) as f64 * width)?;
            let mut mass = 0.0;
            for (&x, &wx) in rx.nodes.iter().zip(&rx.weights) {
                for (&y, &wy) in ry.nodes.iter().zip(&ry.weights) {
                    mass += wx * wy * joint_density_small_n(&[x, y], JOINT_T, &conv)?;
                }
            }
            // the density is symmetric; the ordered chamber carries the normalisation
            let theory = mass / (2.0 * z);
            let emp = counts[i * JOINT_BINS + j] / total;
            inside_theory += theory;
            l1 += (emp - theory).abs();
            table.push(vec![((i as f64 + 0.5) * width).into(), ((j as f64 + 0.5) * width).into(), emp.into(), theory.into()]);
        }
    }
    l1 += (outside / total - (1.0 - inside_theory)).abs();
    Ok((table, l1))
}

fn validate_all(cfg: &RunConfig, opts: &RunOptions) -> Result<(Outcome, Vec<RunReport>), RunError> {
    let shared = Params { seed: cfg.params.seed, outdir: cfg.params.outdir.clone(), ..Params::default() };
    let mut reports = Vec::new();
    let mut summary = Table::new("summary", &["experiment", "check", "measured", "passed"]);
    for exp in Experiment::ALL_SINGLE {
        let report = run(&RunConfig::new(exp, &shared)?, opts)?;
        for check in &report.checks {
            summary.push(vec![exp.name().into(), check.name.as_str().into(), check.measured.into(), (check.passed as usize).into()]);
        }
        reports.push(report);
    }
    let checks = reports
        .iter()
        .map(|r| Check::at_most(format!("{}: failing checks", r.experiment.name()), r.failures().len() as f64, 0.0))
        .collect();
    Ok((Outcome { tables: vec![summary], checks }, reports))
}

/// Directory an experiment writes into.
pub fn experiment_dir(outdir: &Path, experiment: Experiment) -> PathBuf {
    outdir.join(experiment.name())
}
