//! `fracobs`: simulate, test and reconstruct with the time-fractional
//! diffusion observability toolkit.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 configuration
//! or input error, 3 numerical failure (non-convergence, ill-posed solve,
//! failed self-test).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Failure;
use crate::config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "fracobs", version, about = "Regional observability of time-fractional diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration; defaults reproduce the worked example.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Standard deviation of additive Gaussian measurement noise.
    #[arg(long, global = true)]
    noise: Option<f64>,
    /// Tikhonov shift of the HUM system.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Truncation level N.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Gauss nodes per time panel.
    #[arg(long, global = true)]
    quad_nodes: Option<usize>,
    /// Also write plot.py next to the CSV files.
    #[arg(long, global = true)]
    plot_script: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Observation record and state snapshots for the configured initial state.
    Simulate,
    /// Enlarged observability test on ω with the configured band.
    Check,
    /// HUM reconstruction of the initial state on ω.
    Reconstruct,
    /// The worked example: b = 1/2, ω = [1/6, 1/3], y₀ = sin 2πx.
    Example,
    /// Reflection identities, Mittag-Leffler identities, Wright moments.
    Selftest,
}

impl Cli {
    fn config(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(a) = self.alpha {
            cfg.model.alpha = a;
        }
        if let Some(d) = &self.out {
            cfg.output.dir = d.clone();
        }
        if let Some(s) = self.seed {
            cfg.observation.seed = s;
        }
        if let Some(n) = self.noise {
            cfg.observation.noise = n;
        }
        if let Some(e) = self.eps {
            cfg.reconstruction.eps = Some(e);
        }
        if let Some(n) = self.modes {
            cfg.model.n_modes = n;
        }
        if let Some(n) = self.quad_nodes {
            cfg.quadrature.nodes = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.config().and_then(|cfg| match cli.command {
        Command::Simulate => commands::simulate(&cfg, cli.plot_script),
        Command::Check => commands::check(&cfg, cli.plot_script),
        Command::Reconstruct => commands::reconstruct(&cfg, cli.plot_script),
        Command::Example => commands::example(&cfg, cli.plot_script),
        Command::Selftest => commands::selftest(),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
