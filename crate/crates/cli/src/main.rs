//! `orifield`: synthesis, orientation analysis and self-validation of
//! anisotropic fractional Brownian fields.
//!
//! Exit codes: 0 success, 1 failed validation, 2 usage, format or model error.

mod commands;
mod config;
mod validate;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::{AnalyzeArgs, SynthArgs, TensorArgs};
use crate::config::{overlay, resolve_globals, with_suffix, write_snapshot, GlobalArgs, Globals};
use crate::validate::Suite;

#[derive(Parser)]
#[command(name = "orifield", version, about = "Anisotropic fractional Brownian fields: synthesis and orientation analysis")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a field model on a square grid.
    Synth(SynthArgs),
    /// Wavelet/Riesz orientation and Hurst analysis of a raster.
    Analyze(AnalyzeArgs),
    /// Structure tensor and orientation of an anisotropy function.
    Tensor(TensorArgs),
    /// Run a validation suite and report each check.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
struct ValidateArgs {
    /// closedform, frame, riesz or montecarlo.
    #[arg(value_enum)]
    suite: Option<Suite>,
    /// Number of Monte-Carlo seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Raster side of the Monte-Carlo runs.
    #[arg(long)]
    n: Option<usize>,
    /// Time budget in seconds; exceeding it fails the suite.
    #[arg(long)]
    budget: Option<f64>,
    /// Also write `<out>.json` and a snapshot into the output directory.
    #[arg(long)]
    out: Option<String>,
}

enum Outcome {
    Ok(Value),
    ValidationFailed(Value),
}

fn run_validate(g: &Globals, args: ValidateArgs) -> Result<Outcome> {
    let suite = args.suite.context("validate needs a suite name")?;
    let seeds = args.seeds.unwrap_or(10);
    let n = args.n.unwrap_or(512);
    let report = validate::run(suite, g.seed, seeds, n, args.budget)?;
    let value = serde_json::to_value(&report)?;
    if let Some(name) = &args.out {
        let stem = g.out_dir.join(name);
        std::fs::write(with_suffix(&stem, ".json"), serde_json::to_string_pretty(&value)? + "\n")?;
        let resolved = ValidateArgs { seeds: Some(seeds), n: Some(n), budget: Some(report.budget_s), ..args.clone() };
        write_snapshot(&stem, "validate", g, &resolved)?;
    }
    Ok(if report.passed { Outcome::Ok(value) } else { Outcome::ValidationFailed(value) })
}

fn run(cli: Cli) -> Result<Outcome> {
    let file = config::load(cli.global.config.as_deref())?;
    let g = resolve_globals(&file, &cli.global)?;
    if let Some(t) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("cannot size the thread pool")?;
    }
    std::fs::create_dir_all(&g.out_dir).with_context(|| format!("cannot create {}", g.out_dir.display()))?;
    let section = |name: &str| file.get(name);
    Ok(match cli.command {
        Command::Synth(a) => Outcome::Ok(commands::synth(&g, overlay(section("synth"), &a)?)?),
        Command::Analyze(a) => Outcome::Ok(commands::analyze(&g, overlay(section("analyze"), &a)?)?),
        Command::Tensor(a) => Outcome::Ok(commands::tensor(&g, overlay(section("tensor"), &a)?)?),
        Command::Validate(a) => run_validate(&g, overlay(section("validate"), &a)?)?,
    })
}

fn print(v: &Value) {
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok(v)) => {
            print(&v);
            ExitCode::SUCCESS
        }
        Ok(Outcome::ValidationFailed(v)) => {
            print(&v);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
