//! `pdm`: config-driven front end for position-dependent mass experiments.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::Command;
use config::Format;
use error::{CliError, CliResult, EXIT_NUMERICAL, EXIT_OK};

#[derive(Debug, Parser)]
#[command(
    name = "pdm",
    version,
    about = "Position-dependent mass experiments through the point canonical transformation"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set grid.n=2001` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Artifact path; a manifest is written beside it. Defaults to stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, global = true)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Check catalog (m, S) pairs against the generating relation.
    Pairs,
    /// Tabulate the map q(x) and its Jacobian.
    Transform,
    /// Lowest levels of the von Roos operator.
    Spectrum,
    /// Compare x-space and q-space spectra.
    Isospectral,
    /// Spectra for the standard orderings against the q-space reference.
    OrderingSweep,
    /// Sample the Coulomb-gauge divergence term.
    GaugeCheck,
    /// Landau levels, numeric against closed form.
    Landau,
    /// Classical trajectory or x/q trajectory equivalence.
    Classical,
    /// Run the subcommand named by `scenario` in the config.
    Run,
}

fn resolve(sub: &Sub, cfg: &config::RunConfig) -> CliResult<Command> {
    Ok(match sub {
        Sub::Pairs => Command::Pairs,
        Sub::Transform => Command::Transform,
        Sub::Spectrum => Command::Spectrum,
        Sub::Isospectral => Command::Isospectral,
        Sub::OrderingSweep => Command::OrderingSweep,
        Sub::GaugeCheck => Command::GaugeCheck,
        Sub::Landau => Command::Landau,
        Sub::Classical => Command::Classical,
        Sub::Run => {
            let name = cfg
                .scenario
                .as_deref()
                .ok_or_else(|| CliError::Validation("`run` needs `scenario` in the config".into()))?;
            Command::from_name(name)?
        }
    })
}

fn execute(cli: Cli) -> CliResult<u8> {
    let mut cfg = config::load(cli.common.config.as_deref(), &cli.common.overrides)?;
    if let Some(p) = cli.common.output {
        cfg.output.path = Some(p);
    }
    if let Some(f) = cli.common.format {
        cfg.output.format = match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        };
    }
    let cmd = resolve(&cli.command, &cfg)?;
    let start = Instant::now();
    let outcome = commands::run(cmd, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let path = cfg.output.path.clone();
    commands::emit(path.as_deref(), &outcome.body)?;
    if let Some(p) = &path {
        let m = manifest::Manifest {
            tool: "pdm",
            version: env!("CARGO_PKG_VERSION"),
            core_version: pdm_core::VERSION,
            subcommand: cmd.name().to_string(),
            config_sha256: manifest::config_digest(&cfg)?,
            config: cfg.clone(),
            tolerances: outcome.tolerances.clone(),
            wall_seconds: elapsed,
            outputs: vec![p.clone()],
            status: if outcome.passed { "passed" } else { "failed" },
            failure: outcome.failure.clone(),
        };
        manifest::write(&m, p)?;
    }
    match outcome.failure {
        Some(why) => {
            eprintln!("pdm {}: check failed: {why}", cmd.name());
            Ok(EXIT_NUMERICAL)
        }
        None => Ok(EXIT_OK),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("pdm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
