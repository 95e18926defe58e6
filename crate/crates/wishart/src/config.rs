//! Run configuration: a flat JSON object with a `format-version` field.
//!
//! Precedence, lowest first: experiment defaults, config file, command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::RunError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Density,
    Charpoly,
    EdgeSoft,
    EdgeHard,
    Characteristics,
    Rtransform,
    SdeCheck,
    ValidateAll,
}

impl Experiment {
    pub const ALL_SINGLE: [Experiment; 7] = [
        Experiment::Density,
        Experiment::Charpoly,
        Experiment::EdgeSoft,
        Experiment::EdgeHard,
        Experiment::Characteristics,
        Experiment::Rtransform,
        Experiment::SdeCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Density => "density",
            Experiment::Charpoly => "charpoly",
            Experiment::EdgeSoft => "edge-soft",
            Experiment::EdgeHard => "edge-hard",
            Experiment::Characteristics => "characteristics",
            Experiment::Rtransform => "rtransform",
            Experiment::SdeCheck => "sde-check",
            Experiment::ValidateAll => "validate-all",
        }
    }
}

/// Optional parameters; anything left out takes the experiment default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Physical Euler–Maruyama step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    /// Complex points as `[re, im]` pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_grid: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outdir: Option<PathBuf>,
}

impl Params {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&self, other: &Params) -> Params {
        Params {
            n: other.n.or(self.n),
            m: other.m.or(self.m),
            tau: other.tau.or(self.tau),
            replicas: other.replicas.or(self.replicas),
            bins: other.bins.or(self.bins),
            seed: other.seed.or(self.seed),
            dt: other.dt.or(self.dt),
            s_grid: other.s_grid.clone().or_else(|| self.s_grid.clone()),
            z_grid: other.z_grid.clone().or_else(|| self.z_grid.clone()),
            outdir: other.outdir.clone().or_else(|| self.outdir.clone()),
        }
    }
}

/// Contents of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_grid: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outdir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let cfg: ConfigFile = serde_json::from_str(text).map_err(|e| RunError::Usage(e.to_string()))?;
        if cfg.format_version != FORMAT_VERSION {
            return Err(RunError::Usage(format!(
                "unsupported format-version {} (expected {FORMAT_VERSION})",
                cfg.format_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn params(&self) -> Params {
        Params {
            n: self.n,
            m: self.m,
            tau: self.tau,
            replicas: self.replicas,
            bins: self.bins,
            seed: self.seed,
            dt: self.dt,
            s_grid: self.s_grid.clone(),
            z_grid: self.z_grid.clone(),
            outdir: self.outdir.clone(),
        }
    }
}

/// An experiment with fully resolved parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub format_version: u32,
    pub experiment: Experiment,
    #[serde(flatten)]
    pub params: Params,
}

impl RunConfig {
    /// Defaults for `experiment`, overlaid with `user`.
    pub fn new(experiment: Experiment, user: &Params) -> Result<Self, RunError> {
        let params = defaults(experiment).overlay(user);
        let cfg = Self { format_version: FORMAT_VERSION, experiment, params };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), RunError> {
        let p = &self.params;
        if let (Some(n), Some(m)) = (p.n, p.m) {
            if n == 0 || n > m {
                return Err(RunError::Usage(format!("need 1 <= N <= M, got N={n}, M={m}")));
            }
        }
        if p.tau.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return Err(RunError::Usage("tau must be positive".into()));
        }
        if p.replicas == Some(0) || p.bins == Some(0) {
            return Err(RunError::Usage("replicas and bins must be positive".into()));
        }
        if p.dt.is_some_and(|d| !(d > 0.0)) {
            return Err(RunError::Usage("dt must be positive".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.params.n.unwrap_or(1)
    }

    pub fn m(&self) -> usize {
        self.params.m.unwrap_or_else(|| self.n())
    }

    pub fn tau(&self) -> f64 {
        self.params.tau.unwrap_or(1.0)
    }

    pub fn replicas(&self) -> usize {
        self.params.replicas.unwrap_or(1)
    }

    pub fn bins(&self) -> usize {
        self.params.bins.unwrap_or(60)
    }

    pub fn seed(&self) -> u64 {
        self.params.seed.unwrap_or(0)
    }

    pub fn s_grid(&self) -> Vec<f64> {
        self.params.s_grid.clone().unwrap_or_default()
    }

    pub fn z_grid(&self) -> Vec<[f64; 2]> {
        self.params.z_grid.clone().unwrap_or_default()
    }

    pub fn outdir(&self) -> PathBuf {
        self.params.outdir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Parameters used when neither the config file nor the command line sets them.
pub fn defaults(experiment: Experiment) -> Params {
    let base = Params { seed: Some(7), ..Params::default() };
    match experiment {
        Experiment::Density => Params {
            n: Some(256),
            m: Some(512),
            tau: Some(1.0),
            replicas: Some(100),
            bins: Some(60),
            ..base
        },
        Experiment::Charpoly => Params {
            n: Some(4),
            m: Some(6),
            tau: Some(0.8),
            replicas: Some(100_000),
            z_grid: Some(vec![[-1.0, 0.0], [1.0, 1.0], [6.0, 0.0]]),
            ..base
        },
        Experiment::EdgeSoft => Params { tau: Some(1.0), s_grid: Some(linspace(-2.0, 2.0, 41)), ..base },
        Experiment::EdgeHard => Params { tau: Some(1.0), s_grid: Some(linspace(0.1, 1.2, 23)), ..base },
        Experiment::Characteristics => Params { ..base },
        Experiment::Rtransform => Params { ..base },
        Experiment::SdeCheck => Params {
            n: Some(16),
            m: Some(24),
            tau: Some(0.5),
            replicas: Some(2000),
            ..base
        },
        Experiment::ValidateAll => base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config() {
        let cfg = ConfigFile::parse(r#"{"format-version": 1, "experiment": "density", "N": 8, "M": 12, "s-grid": [0.5]}"#)
            .unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::Density));
        assert_eq!((cfg.n, cfg.m, cfg.s_grid.clone()), (Some(8), Some(12), Some(vec![0.5])));
        assert!(ConfigFile::parse(r#"{"format-version": 2}"#).is_err());
        assert!(ConfigFile::parse(r#"{"format-version": 1, "bogus": 1}"#).is_err());
    }

    #[test]
    fn precedence() {
        let file = Params { n: Some(8), m: Some(12), seed: Some(3), ..Params::default() };
        let flags = Params { seed: Some(9), ..Params::default() };
        let run = RunConfig::new(Experiment::Density, &file.overlay(&flags)).unwrap();
        assert_eq!((run.n(), run.m(), run.seed(), run.bins()), (8, 12, 9, 60));
        assert!(RunConfig::new(Experiment::Density, &Params { n: Some(9), m: Some(3), ..Params::default() }).is_err());
    }
}
