#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qorigin::flow::Clock;
use serde_json::json;

use commands::{Report, Units};
use config::RunConfig;

/// Entropy-ascent simulations and saturation diagnostics for small
/// multipartite quantum systems.
#[derive(Parser)]
#[command(name = "qorigin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; `-` reads standard input.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Report entropies in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the constrained flow and write trajectory.csv and summary.json.
    Simulate {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum)]
        clock: Option<ClockArg>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Gradient, Hessian and kernel diagnostics over an eps sweep.
    OriginAnalysis,
    /// Generalized stiffness spectra over an eps sweep.
    Stiffness,
    /// Classical chain-rule inequalities and the quantum contrast.
    ObstructionCheck {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Modular-Hamiltonian identities and Gibbs-family fits.
    GibbsCheck,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ClockArg {
    GameTime,
    EntropyTime,
}

fn execute(cli: &Cli) -> Result<(String, Report)> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let units = Units::new(cli.bits);
    let (mode, report) = match &cli.command {
        Command::Simulate {
            eps,
            clock,
            duration,
        } => {
            if let Some(e) = eps {
                cfg.eps = *e;
            }
            if let Some(c) = clock {
                cfg.clock = match c {
                    ClockArg::GameTime => Clock::GameTime,
                    ClockArg::EntropyTime => Clock::EntropyTime,
                };
            }
            if duration.is_some() {
                cfg.duration = *duration;
            }
            ("simulate", commands::simulate(&cfg, &cli.out, &units)?)
        }
        Command::OriginAnalysis => ("origin-analysis", commands::origin_analysis(&cfg)?),
        Command::Stiffness => ("stiffness", commands::stiffness(&cfg)?),
        Command::ObstructionCheck { samples } => {
            if let Some(n) = samples {
                cfg.samples = *n;
            }
            (
                "obstruction-check",
                commands::obstruction_check(&cfg, &units)?,
            )
        }
        Command::GibbsCheck => ("gibbs-check", commands::gibbs_check(&cfg, &units)?),
    };
    Ok((mode.to_string(), report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, report) = match execute(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if mode != "simulate" {
        let path = cli.out.join(format!("{mode}.json"));
        if let Err(e) = std::fs::write(&path, format!("{:#}\n", report.body)) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if report.failures.is_empty() {
        return ExitCode::SUCCESS;
    }
    let record = json!({ "mode": mode, "passed": false, "failures": report.failures });
    let text = format!("{record:#}");
    let _ = std::fs::write(cli.out.join("failure.json"), format!("{text}\n"));
    eprintln!("{text}");
    ExitCode::from(2)
}
