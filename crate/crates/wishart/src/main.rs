use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wishart::config::{ConfigFile, Params};
use wishart::parallel::threads_from_env;
use wishart::{run, Experiment, RunConfig, RunError, RunOptions};

/// Run a validation experiment and write CSV tables, a manifest and optional SVG plots.
///
/// Settings are taken from the experiment defaults, then the config file, then the flags.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    experiment: Experiment,
    /// Flat JSON config with a `format-version` field.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Write an SVG line plot for every CSV.
    #[arg(long)]
    plot: bool,
}

fn resolve(cli: &Cli) -> Result<RunConfig, RunError> {
    let file = match &cli.config {
        Some(path) => Some(ConfigFile::load(path)?),
        None => None,
    };
    if let Some(exp) = file.as_ref().and_then(|f| f.experiment) {
        if exp != cli.experiment {
            return Err(RunError::Usage(format!(
                "config file is for '{}' but '{}' was requested",
                exp.name(),
                cli.experiment.name()
            )));
        }
    }
    let base = file.map(|f| f.params()).unwrap_or_default();
    let flags = Params { seed: cli.seed, outdir: cli.outdir.clone(), ..Params::default() };
    RunConfig::new(cli.experiment, &base.overlay(&flags))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { threads: threads_from_env(), plot: cli.plot };
    match run(&cfg, &opts) {
        Ok(report) => {
            for check in report.children.iter().flat_map(|c| &c.checks).chain(&report.checks) {
                println!("{}", check.line());
            }
            println!("wrote {}", report.dir.display());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
