/*!
Command-line front end for `ranksde`.

```text
ranksde --config model.ini [--out DIR] [--seed N] [--paths N] [--quiet] <simulate|occupancy|check|gaps|integrate>
```

Exit codes: 0 success, 2 config error, 3 explosion, 4 assumption violation,
5 numeric or internal failure. `RANKSDE_THREADS` caps the worker count.
*/

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{run, Command, Report};
pub use config::RunConfig;
pub use error::{CliError, ConfigError};

#[derive(Debug, Parser)]
#[command(name = "ranksde", version, about = "Simulate and analyse rank-based diffusions")]
pub struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides `[sim] seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of independent paths (overrides `[analysis] paths`).
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    /// Simulate paths and write them as CSV.
    Simulate,
    /// Occupation times of the rank cells, ergodic averages and collision fractions.
    Occupancy,
    /// Stability and non-explosion diagnostics.
    Check,
    /// Gap histograms with the theoretical overlay.
    Gaps,
    /// Monte Carlo quadrature of the invariant density.
    Integrate,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Simulate => Command::Simulate,
            Sub::Occupancy => Command::Occupancy,
            Sub::Check => Command::Check,
            Sub::Gaps => Command::Gaps,
            Sub::Integrate => Command::Integrate,
        }
    }
}

impl Cli {
    /// Reads the config file and applies the command-line overrides.
    pub fn load(&self) -> Result<RunConfig, CliError> {
        let path = self.config.as_ref().ok_or_else(|| ConfigError::new(None, "", "--config PATH is required"))?;
        let mut config = RunConfig::from_path(path)?;
        if let Some(dir) = &self.out {
            config.output.dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            config.sim.seed = seed;
        }
        if let Some(paths) = self.paths {
            if paths == 0 {
                return Err(ConfigError::new(None, "--paths", "must be >= 1").into());
            }
            config.analysis.paths = paths;
        }
        Ok(config)
    }
}

/// Installs the global rayon pool sized by `RANKSDE_THREADS`, if set.
pub fn configure_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("RANKSDE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| ConfigError::new(None, "RANKSDE_THREADS", format!("expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::new(None, "RANKSDE_THREADS", e.to_string()))
}

/// Runs the parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = configure_threads().map_err(CliError::from).and_then(|_| {
        let config = cli.load()?;
        run(cli.command.into(), &config)
    });
    match result {
        Ok(report) => {
            if !cli.quiet {
                for line in &report.summary {
                    println!("{line}");
                }
                println!("manifest: {}", report.manifest.display());
            }
            if let Some(m) = &report.explosion {
                eprintln!("error: explosion: {m}");
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
