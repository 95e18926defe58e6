//! Brownian motion of the matrix `K` and the eigenvalue dynamics it induces.
//!
//! Two independent routes produce spectra at a target scaled time:
//!
//! * **matrix path**: every entry of `K` performs a complex random walk from
//!   `K = 0`; spectra are the squared singular values of `K`;
//! * **eigenvalue SDE**: the "vicious walker" equation
//!   `d lambda_i = 2 sqrt(lambda_i) dB_i + beta (nu + 1 + 2 lambda_i sum_j 1/(lambda_i - lambda_j)) dt`,
//!   integrated by Euler–Maruyama after a short matrix-path burn-in.
//!
//! Euler–Maruyama steps that would break positivity or the ordering of the
//! walkers are rejected and replaced by two half steps, recursively.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{wishart_spectrum, RectComplexMatrix, Spectrum};
use crate::rng::{NormalSource, ReplicaStream};

/// Dyson index of the complex ensemble.
pub const BETA: f64 = 2.0;
/// Deepest recursion of the step-halving safeguard.
pub const MAX_HALVINGS: u32 = 20;
/// Default burn-in length of the eigenvalue SDE, in units of `dt_phys`.
pub const DEFAULT_BURN_IN_STEPS: u32 = 10;

/// Matrix shape and the time conventions tied to it.
///
/// `r = N/M`, `nu = M - N`.  Physical entry-diffusion time `t` and scaled time
/// `tau` are related by `t = r tau / (2N)`, under which `E[Tr L]/N = tau` and
/// the large-N spectrum occupies `[(1 - sqrt r)^2 tau, (1 + sqrt r)^2 tau]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeConvention {
    n: usize,
    m: usize,
}

impl TimeConvention {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::InvalidInput("need 1 <= N <= M"));
        }
        Ok(Self { n, m })
    }

    /// Square matrices (`r = 1`, `nu = 0`).
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nu(&self) -> usize {
        self.m - self.n
    }

    pub fn r(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn beta(&self) -> f64 {
        BETA
    }

    pub fn physical_time(&self, tau: f64) -> f64 {
        self.r() * tau / (2.0 * self.n as f64)
    }

    pub fn scaled_time(&self, t: f64) -> f64 {
        2.0 * self.n as f64 * t / self.r()
    }
}

/// One Monte Carlo ensemble run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub conv: TimeConvention,
    pub tau_final: f64,
    /// Euler–Maruyama step in physical time.
    pub dt_phys: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Matrix-path burn-in before the eigenvalue SDE takes over, in steps of `dt_phys`.
    pub burn_in_steps: u32,
}

impl EnsembleConfig {
    pub fn new(conv: TimeConvention, tau_final: f64, dt_phys: f64, replicas: usize, seed: u64) -> Result<Self> {
        let cfg = Self { conv, tau_final, dt_phys, replicas, seed, burn_in_steps: DEFAULT_BURN_IN_STEPS };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_final > 0.0 && self.tau_final.is_finite()) {
            return Err(Error::InvalidInput("tau_final must be positive"));
        }
        if !(self.dt_phys > 0.0) || self.dt_phys > self.t_final() {
            return Err(Error::InvalidInput("need 0 < dt_phys <= t(tau_final)"));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidInput("need at least one replica"));
        }
        Ok(())
    }

    pub fn t_final(&self) -> f64 {
        self.conv.physical_time(self.tau_final)
    }
}

/// How spectra are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    MatrixPath,
    EigenSde,
}

/// Spectra of all replicas of one run, in replica order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraBatch {
    pub spectra: Vec<Spectrum>,
    pub config: EnsembleConfig,
    pub mode: SamplingMode,
}

/// Mean over replicas of a per-replica statistic, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Self {
        let (mut count, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in samples {
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        }
        let var = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
        Self { mean, stderr: (var / count.max(1) as f64).sqrt() }
    }

    /// `|a - b|` in units of the combined standard error.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let se = self.stderr.hypot(other.stderr);
        (self.mean - other.mean).abs() / se
    }
}

impl SpectraBatch {
    pub fn new(spectra: Vec<Spectrum>, config: EnsembleConfig, mode: SamplingMode) -> Result<Self> {
        if let Some(first) = spectra.first() {
            if spectra.iter().any(|s| s.time_tau != first.time_tau) {
                return Err(Error::InvalidInput("spectra in a batch must share time_tau"));
            }
        }
        Ok(Self { spectra, config, mode })
    }

    /// `m_k = E[sum_i lambda_i^k] / N` for `k = 1..=kmax`.
    pub fn moments(&self, kmax: i32) -> Vec<Estimate> {
        (1..=kmax)
            .map(|k| Estimate::from_samples(self.spectra.iter().map(|s| s.moment(k))))
            .collect()
    }
}

/// Adds an independent complex Gaussian increment to every entry: real and
/// imaginary parts each have mean 0 and variance `dt_phys`.
pub fn step_matrix_brownian<S: NormalSource + ?Sized>(
    k: &mut RectComplexMatrix,
    dt_phys: f64,
    src: &mut S,
) -> Result<()> {
    if !(dt_phys >= 0.0 && dt_phys.is_finite()) {
        return Err(Error::InvalidInput("dt_phys must be finite and nonnegative"));
    }
    if dt_phys == 0.0 {
        return Ok(());
    }
    let sd = dt_phys.sqrt();
    for z in k.entries_mut() {
        let re = src.standard_normal();
        let im = src.standard_normal();
        *z += Complex64::new(sd * re, sd * im);
    }
    Ok(())
}

fn is_valid_walker_state(x: &[f64]) -> bool {
    x.first().is_some_and(|&v| v > 0.0)
        && x.iter().all(|v| v.is_finite())
        && x.windows(2).all(|w| w[0] < w[1])
}

fn check_walkers(x: &[f64], conv: &TimeConvention, dt: f64) -> Result<()> {
    if x.len() != conv.n() {
        return Err(Error::InvalidInput("state length differs from N"));
    }
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput("dt_phys must be finite and nonnegative"));
    }
    if !is_valid_walker_state(x) {
        return Err(Error::Domain("walkers must be positive, distinct and ascending"));
    }
    Ok(())
}

/// Advances `state` by `dt`; a rejected proposal is replaced by two half steps.
fn guarded_step<F>(state: &mut [f64], dt: f64, halvings: u32, trial: &mut Vec<f64>, propose: &mut F) -> Result<()>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> bool,
{
    trial.clear();
    trial.resize(state.len(), 0.0);
    if propose(state, dt, trial) {
        state.copy_from_slice(trial);
        return Ok(());
    }
    if halvings == MAX_HALVINGS {
        return Err(Error::StepSize { halvings, dt });
    }
    guarded_step(state, dt / 2.0, halvings + 1, trial, propose)?;
    guarded_step(state, dt / 2.0, halvings + 1, trial, propose)
}

fn propose_eigenvalues<S: NormalSource + ?Sized>(
    lam: &[f64],
    dt: f64,
    nu: f64,
    src: &mut S,
    out: &mut [f64],
) -> bool {
    let n = lam.len();
    out.fill(0.0);
    for i in 0..n {
        for j in i + 1..n {
            let inv = 1.0 / (lam[i] - lam[j]);
            out[i] += inv;
            out[j] -= inv;
        }
    }
    let sd = dt.sqrt();
    for i in 0..n {
        let drift = BETA * (nu + 1.0 + 2.0 * lam[i] * out[i]);
        out[i] = lam[i] + drift * dt + 2.0 * lam[i].sqrt() * sd * src.standard_normal();
    }
    is_valid_walker_state(out)
}

fn propose_singular_values<S: NormalSource + ?Sized>(
    kap: &[f64],
    dt: f64,
    nu: f64,
    src: &mut S,
    out: &mut [f64],
) -> bool {
    let n = kap.len();
    out.fill(0.0);
    for i in 0..n {
        for j in i + 1..n {
            let diff = 1.0 / (kap[i] - kap[j]);
            let sum = 1.0 / (kap[i] + kap[j]);
            out[i] += diff + sum;
            out[j] += sum - diff;
        }
    }
    let sd = dt.sqrt();
    for i in 0..n {
        let drift = 0.5 * BETA * ((nu + 1.0 - 1.0 / BETA) / kap[i] + out[i]);
        out[i] = kap[i] + drift * dt + sd * src.standard_normal();
    }
    is_valid_walker_state(out)
}

/// One Euler–Maruyama step of the eigenvalue SDE over physical time `dt_phys`.
///
/// `lam` must be positive and strictly ascending.  A proposal that leaves the
/// positive, ordered region is discarded and the interval is covered by two
/// half steps instead (at most [`MAX_HALVINGS`] levels deep).
pub fn step_eigenvalue_sde<S: NormalSource + ?Sized>(
    lam: &mut [f64],
    dt_phys: f64,
    conv: &TimeConvention,
    src: &mut S,
) -> Result<()> {
    check_walkers(lam, conv, dt_phys)?;
    if dt_phys == 0.0 {
        return Ok(());
    }
    let nu = conv.nu() as f64;
    let mut trial = Vec::with_capacity(lam.len());
    guarded_step(lam, dt_phys, 0, &mut trial, &mut |x, h, out| propose_eigenvalues(x, h, nu, src, out))
}

/// One Euler–Maruyama step of the singular-value SDE (unit-variance noise).
pub fn step_singvalue_sde<S: NormalSource + ?Sized>(
    kap: &mut [f64],
    dt_phys: f64,
    conv: &TimeConvention,
    src: &mut S,
) -> Result<()> {
    check_walkers(kap, conv, dt_phys)?;
    if dt_phys == 0.0 {
        return Ok(());
    }
    let nu = conv.nu() as f64;
    let mut trial = Vec::with_capacity(kap.len());
    guarded_step(kap, dt_phys, 0, &mut trial, &mut |x, h, out| propose_singular_values(x, h, nu, src, out))
}

fn uniform_steps(span: f64, dt_max: f64) -> (usize, f64) {
    let steps = ((span / dt_max) - 1e-9).ceil().max(1.0) as usize;
    (steps, span / steps as f64)
}

/// Integrates the eigenvalue SDE from `t_from` to `t_to` with equal steps no longer than `dt_max`.
pub fn evolve_eigenvalues<S: NormalSource + ?Sized>(
    lam: &mut [f64],
    t_from: f64,
    t_to: f64,
    dt_max: f64,
    conv: &TimeConvention,
    src: &mut S,
) -> Result<()> {
    check_walkers(lam, conv, dt_max)?;
    if t_to <= t_from {
        return Ok(());
    }
    let (steps, h) = uniform_steps(t_to - t_from, dt_max);
    let nu = conv.nu() as f64;
    let mut trial = Vec::with_capacity(lam.len());
    for _ in 0..steps {
        guarded_step(lam, h, 0, &mut trial, &mut |x, dt, out| propose_eigenvalues(x, dt, nu, src, out))?;
    }
    Ok(())
}

/// Singular-value counterpart of [`evolve_eigenvalues`].
pub fn evolve_singular_values<S: NormalSource + ?Sized>(
    kap: &mut [f64],
    t_from: f64,
    t_to: f64,
    dt_max: f64,
    conv: &TimeConvention,
    src: &mut S,
) -> Result<()> {
    check_walkers(kap, conv, dt_max)?;
    if t_to <= t_from {
        return Ok(());
    }
    let (steps, h) = uniform_steps(t_to - t_from, dt_max);
    let nu = conv.nu() as f64;
    let mut trial = Vec::with_capacity(kap.len());
    for _ in 0..steps {
        guarded_step(kap, h, 0, &mut trial, &mut |x, dt, out| propose_singular_values(x, dt, nu, src, out))?;
    }
    Ok(())
}

/// `K(t)` for a walk started at `K = 0`.
///
/// The walk has no drift and independent Gaussian increments, so the position
/// at time `t` is drawn as a single increment of variance `t` per component.
pub fn matrix_at_time<S: NormalSource + ?Sized>(conv: &TimeConvention, t_phys: f64, src: &mut S) -> Result<RectComplexMatrix> {
    let mut k = RectComplexMatrix::zeros(conv.m(), conv.n())?;
    step_matrix_brownian(&mut k, t_phys, src)?;
    Ok(k)
}

/// Spectrum of replica `replica`, a pure function of `(cfg, mode, replica)`.
pub fn sample_replica(cfg: &EnsembleConfig, mode: SamplingMode, replica: usize) -> Result<Spectrum> {
    cfg.validate()?;
    let conv = &cfg.conv;
    let mut src = ReplicaStream::new(cfg.seed, replica as u64);
    let t_final = cfg.t_final();
    let burn_in = cfg.burn_in_steps as f64 * cfg.dt_phys;
    if mode == SamplingMode::MatrixPath || burn_in >= t_final {
        let k = matrix_at_time(conv, t_final, &mut src)?;
        return wishart_spectrum(&k, cfg.tau_final);
    }
    let k = matrix_at_time(conv, burn_in, &mut src)?;
    let mut lam = wishart_spectrum(&k, conv.scaled_time(burn_in))?.values;
    evolve_eigenvalues(&mut lam, burn_in, t_final, cfg.dt_phys, conv, &mut src)?;
    Ok(Spectrum { values: lam, time_tau: cfg.tau_final })
}

/// All replicas, serially.  Replica `k` uses stream `(cfg.seed, k)`.
pub fn sample_spectra(cfg: &EnsembleConfig, mode: SamplingMode) -> Result<SpectraBatch> {
    let spectra = (0..cfg.replicas)
        .map(|k| sample_replica(cfg, mode, k))
        .collect::<Result<Vec<_>>>()?;
    SpectraBatch::new(spectra, *cfg, mode)
}

/// Raw bin counts; merging is exact, so any reduction order gives the same histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramCounts {
    edges: Vec<f64>,
    counts: Vec<u64>,
    outside: u64,
}

impl HistogramCounts {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput("histogram needs bins >= 1 and a finite range lo < hi"));
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        edges[bins] = hi;
        Ok(Self { edges, counts: alloc::vec![0; bins], outside: 0 })
    }

    pub fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let (lo, hi) = (self.edges[0], self.edges[bins]);
        if !(x >= lo && x <= hi) {
            self.outside += 1;
            return;
        }
        let idx = (((x - lo) / (hi - lo)) * bins as f64).floor() as usize;
        self.counts[idx.min(bins - 1)] += 1;
    }

    pub fn add_spectrum(&mut self, s: &Spectrum) {
        for &x in &s.values {
            self.add(x);
        }
    }

    pub fn merge(&mut self, other: &HistogramCounts) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::InvalidInput("cannot merge histograms with different bins"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
        Ok(())
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Values that fell outside the range (excluded from the normalisation).
    pub fn outside(&self) -> u64 {
        self.outside
    }

    pub fn to_histogram(&self) -> Result<Histogram> {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidInput("no samples inside the histogram range"));
        }
        let masses = self.counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Histogram { bin_edges: self.edges.clone(), masses })
    }
}

/// Binned probability masses; `masses` sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Mass divided by bin width.
    pub fn densities(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .zip(&self.masses)
            .map(|(w, m)| m / (w[1] - w[0]))
            .collect()
    }

    /// `sum_b |mass_b - reference_b|`.
    pub fn l1_distance(&self, reference: &[f64]) -> Result<f64> {
        if reference.len() != self.masses.len() {
            return Err(Error::InvalidInput("reference has a different number of bins"));
        }
        Ok(self.masses.iter().zip(reference).map(|(a, b)| (a - b).abs()).sum())
    }
}

/// Pooled eigenvalue histogram over all spectra, normalised to unit mass.
///
/// The default range is `[0, 1.05 max lambda]`.  With an explicit range,
/// values outside it are dropped before normalising.
pub fn empirical_density(spectra: &[Spectrum], bins: usize, range: Option<(f64, f64)>) -> Result<Histogram> {
    if spectra.iter().all(|s| s.is_empty()) {
        return Err(Error::InvalidInput("empty batch"));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let max = spectra.iter().flat_map(|s| s.values.iter().copied()).fold(0.0, f64::max);
            (0.0, if max > 0.0 { 1.05 * max } else { 1.0 })
        }
    };
    let mut counts = HistogramCounts::new(lo, hi, bins)?;
    for s in spectra {
        counts.add_spectrum(s);
    }
    counts.to_histogram()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn time_convention_identities() {
        let c = TimeConvention::new(64, 128).unwrap();
        assert_eq!(c.nu(), 64);
        assert_eq!(c.r(), 0.5);
        let t = c.physical_time(1.0);
        assert!((t - 0.5 / 128.0).abs() < 1e-18);
        assert!((c.scaled_time(t) - 1.0).abs() < 1e-15);
        assert!(TimeConvention::new(3, 2).is_err());
        assert!(TimeConvention::new(0, 2).is_err());
    }

    #[test]
    fn config_validation() {
        let conv = TimeConvention::new(2, 3).unwrap();
        assert!(EnsembleConfig::new(conv, 1.0, 1e-3, 1, 0).is_ok());
        assert!(EnsembleConfig::new(conv, 1.0, 10.0, 1, 0).is_err());
        assert!(EnsembleConfig::new(conv, 1.0, 1e-3, 0, 0).is_err());
        assert!(EnsembleConfig::new(conv, -1.0, 1e-3, 1, 0).is_err());
    }

    #[test]
    fn zero_steps_leave_state_unchanged() {
        let mut src = ReplicaStream::new(0, 0);
        let mut k = RectComplexMatrix::from_real(2, 1, &[1.0, 2.0]).unwrap();
        let before = k.clone();
        step_matrix_brownian(&mut k, 0.0, &mut src).unwrap();
        assert_eq!(k, before);

        let conv = TimeConvention::new(2, 3).unwrap();
        let mut lam = vec![0.5, 1.5];
        step_eigenvalue_sde(&mut lam, 0.0, &conv, &mut src).unwrap();
        assert_eq!(lam, vec![0.5, 1.5]);
        step_singvalue_sde(&mut lam, 0.0, &conv, &mut src).unwrap();
        assert_eq!(lam, vec![0.5, 1.5]);
    }

    #[test]
    fn walkers_must_be_ordered_and_positive() {
        let mut src = ReplicaStream::new(0, 0);
        let conv = TimeConvention::new(2, 3).unwrap();
        assert!(step_eigenvalue_sde(&mut [1.0, 0.5], 1e-3, &conv, &mut src).is_err());
        assert!(step_eigenvalue_sde(&mut [0.0, 0.5], 1e-3, &conv, &mut src).is_err());
        assert!(step_eigenvalue_sde(&mut [0.5], 1e-3, &conv, &mut src).is_err());
    }

    #[test]
    fn halving_exhaustion_is_reported() {
        // A source that always pushes walker 0 far below zero can never be accepted.
        struct Hostile;
        impl NormalSource for Hostile {
            fn standard_normal(&mut self) -> f64 {
                -1e6
            }
        }
        let conv = TimeConvention::new(1, 1).unwrap();
        let err = step_eigenvalue_sde(&mut [1.0], 1.0, &conv, &mut Hostile).unwrap_err();
        assert!(matches!(err, Error::StepSize { halvings: MAX_HALVINGS, .. }));
    }

    #[test]
    fn halving_keeps_walkers_ordered() {
        // Near-collision start with a coarse step: every accepted state stays ordered.
        let conv = TimeConvention::new(3, 4).unwrap();
        let mut src = ReplicaStream::new(3, 0);
        let mut lam = vec![1e-4, 1.1e-4, 1.2e-4];
        for _ in 0..200 {
            step_eigenvalue_sde(&mut lam, 1e-4, &conv, &mut src).unwrap();
            assert!(is_valid_walker_state(&lam));
        }
    }

    #[test]
    fn single_entry_increment_variance() {
        // 10^6 increments of size dt: Var(Re dK)/dt = 1.
        let dt = 1e-3;
        let mut src = ReplicaStream::new(5, 0);
        let mut k = RectComplexMatrix::zeros(1, 1).unwrap();
        let n = 1_000_000;
        let mut prev = 0.0;
        let est = Estimate::from_samples((0..n).map(|_| {
            step_matrix_brownian(&mut k, dt, &mut src).unwrap();
            let re = k.get(0, 0).re;
            let inc = (re - prev) / dt.sqrt();
            prev = re;
            inc * inc
        }));
        // Var(x^2) = 2 for a standard normal.
        assert!((est.mean - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "{est:?}");
    }

    #[test]
    fn entry_second_moment_is_twice_time() {
        let t = 0.3;
        let est = Estimate::from_samples((0..100_000u64).map(|k| {
            let mut src = ReplicaStream::new(9, k);
            let m = matrix_at_time(&TimeConvention::new(1, 1).unwrap(), t, &mut src).unwrap();
            m.get(0, 0).norm_sqr()
        }));
        assert!((est.mean - 2.0 * t).abs() < 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn eigenvalue_drift_and_variance_single_walker() {
        let conv = TimeConvention::new(1, 1).unwrap();
        let dt = 0.01;
        let incs: Vec<f64> = (0..100_000u64)
            .map(|k| {
                let mut src = ReplicaStream::new(21, k);
                let mut lam = [1.0];
                step_eigenvalue_sde(&mut lam, dt, &conv, &mut src).unwrap();
                lam[0] - 1.0
            })
            .collect();
        let drift = Estimate::from_samples(incs.iter().map(|d| d / dt));
        assert!((drift.mean - 2.0).abs() < 3.0 * drift.stderr, "{drift:?}");
        let var = Estimate::from_samples(incs.iter().map(|d| (d - 2.0 * dt).powi(2) / dt));
        assert!((var.mean - 4.0).abs() < 3.0 * var.stderr, "{var:?}");
    }

    #[test]
    fn singular_value_drift_single_walker() {
        let conv = TimeConvention::new(1, 1).unwrap();
        let dt = 0.01;
        let drift = Estimate::from_samples((0..100_000u64).map(|k| {
            let mut src = ReplicaStream::new(22, k);
            let mut kap = [1.0];
            step_singvalue_sde(&mut kap, dt, &conv, &mut src).unwrap();
            (kap[0] - 1.0) / dt
        }));
        assert!((drift.mean - 0.5).abs() < 3.0 * drift.stderr, "{drift:?}");
    }

    #[test]
    fn singular_value_pair_drift_matches_formula() {
        // With zero noise the proposal is the drift alone.
        struct Silent;
        impl NormalSource for Silent {
            fn standard_normal(&mut self) -> f64 {
                0.0
            }
        }
        let (k1, k2, nu) = (0.7f64, 1.9f64, 2.0f64);
        let mut out = [0.0; 2];
        assert!(propose_singular_values(&[k1, k2], 1.0, nu, &mut Silent, &mut out));
        let d1 = (nu + 0.5) / k1 + 1.0 / (k1 - k2) + 1.0 / (k1 + k2);
        let d2 = (nu + 0.5) / k2 + 1.0 / (k2 - k1) + 1.0 / (k1 + k2);
        assert!((out[0] - k1 - d1).abs() < 1e-14);
        assert!((out[1] - k2 - d2).abs() < 1e-14);
    }

    #[test]
    fn trace_law_single_entry() {
        let conv = TimeConvention::square(1).unwrap();
        let cfg = EnsembleConfig::new(conv, 1.0, conv.physical_time(1.0), 100_000, 4).unwrap();
        let batch = sample_spectra(&cfg, SamplingMode::MatrixPath).unwrap();
        let m1 = batch.moments(1)[0];
        assert!((m1.mean - 1.0).abs() < 3.0 * m1.stderr, "{m1:?}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let conv = TimeConvention::new(3, 5).unwrap();
        let cfg = EnsembleConfig::new(conv, 0.7, conv.physical_time(0.7) / 50.0, 6, 99).unwrap();
        for mode in [SamplingMode::MatrixPath, SamplingMode::EigenSde] {
            let a = sample_spectra(&cfg, mode).unwrap();
            let b = sample_spectra(&cfg, mode).unwrap();
            assert_eq!(a, b);
            assert!(a.spectra.iter().all(|s| s.values.iter().all(|&l| l > 0.0)));
            // Replica k alone reproduces its slot in the batch.
            assert_eq!(sample_replica(&cfg, mode, 4).unwrap(), a.spectra[4]);
        }
    }

    #[test]
    fn histogram_single_value() {
        let s = vec![Spectrum { values: vec![1.0], time_tau: 1.0 }];
        let h = empirical_density(&s, 1, Some((0.0, 2.0))).unwrap();
        assert_eq!(h.masses, vec![1.0]);
        assert!(empirical_density(&[], 3, None).is_err());
    }

    #[test]
    fn histogram_merge_is_order_independent() {
        let mut a = HistogramCounts::new(0.0, 1.0, 4).unwrap();
        let mut b = a.clone();
        for x in [0.1, 0.3, 0.99, 1.0, 2.0] {
            a.add(x);
        }
        for x in [0.5, 0.6, -1.0] {
            b.add(x);
        }
        let mut ab = a.clone();
        ab.merge(&b).unwrap();
        let mut ba = b.clone();
        ba.merge(&a).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.counts(), &[1, 1, 2, 2]);
        assert_eq!(ab.outside(), 2);
        let h = ab.to_histogram().unwrap();
        assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
