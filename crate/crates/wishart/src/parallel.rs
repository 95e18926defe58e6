//! Deterministic parallel replica execution.
//!
//! Replica `k` draws only from the stream `(seed, k)`, and results are
//! gathered in replica order, so output does not depend on the worker count.

use rayon::prelude::*;
use wishart_core::stochastic::{sample_replica, EnsembleConfig, SamplingMode, SpectraBatch};

use crate::RunError;

/// Environment variable capping the worker count (`0` or unset: all cores).
pub const THREADS_ENV: &str = "WISHART_THREADS";

/// Worker count requested through [`THREADS_ENV`].
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

/// `f(0), ..., f(count - 1)` on `threads` workers (`0`: automatic), in index order.
pub fn map_replicas<T, F>(threads: usize, count: usize, f: F) -> Result<Vec<T>, RunError>
where
    T: Send,
    F: Fn(usize) -> Result<T, wishart_core::Error> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Usage(format!("cannot start worker pool: {e}")))?;
    let out: Result<Vec<T>, wishart_core::Error> = pool.install(|| (0..count).into_par_iter().map(&f).collect());
    Ok(out?)
}

/// Parallel counterpart of `wishart_core::stochastic::sample_spectra`, bit-identical to it.
pub fn sample_spectra(cfg: &EnsembleConfig, mode: SamplingMode, threads: usize) -> Result<SpectraBatch, RunError> {
    cfg.validate()?;
    let spectra = map_replicas(threads, cfg.replicas, |k| sample_replica(cfg, mode, k))?;
    Ok(SpectraBatch::new(spectra, *cfg, mode)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wishart_core::stochastic::TimeConvention;

    #[test]
    fn matches_serial_sampling() {
        let conv = TimeConvention::new(3, 5).unwrap();
        let cfg = EnsembleConfig::new(conv, 0.6, conv.physical_time(0.6) / 40.0, 9, 3).unwrap();
        for mode in [SamplingMode::MatrixPath, SamplingMode::EigenSde] {
            let serial = wishart_core::stochastic::sample_spectra(&cfg, mode).unwrap();
            for threads in [1, 2, 8] {
                assert_eq!(sample_spectra(&cfg, mode, threads).unwrap(), serial);
            }
        }
    }
}
