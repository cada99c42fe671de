//! `forch`: pseudo-steady-state Forchheimer solves, CMC graphs and the
//! Productivity Index from a single JSON config.
//!
//! Exit codes: 0 success, 1 a `verify` check failed, 2 configuration error,
//! 3 solver failure, 4 transform not admissible. Failures print one JSON
//! object on stderr and, when the output directory exists, `error.json`.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "forch", version, about = "g-Forchheimer pseudo-steady-state flow and CMC graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Grid override `NxM`: radial (or x) cells by angular (or y) cells.
    #[arg(long, value_parser = parse_resolution)]
    pub resolution: Option<[usize; 2]>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the pseudo-steady-state profile; write u, v and the PI report.
    Pss(CommonArgs),
    /// Solve the CMC graph equation on the configured domain.
    Cmc(CommonArgs),
    /// Lift a profile to a CMC graph and recover it back.
    Transform(CommonArgs),
    /// Productivity Index through the CMC graph, checked against the direct solve.
    PiPipeline(CommonArgs),
    /// Radial reference profiles on an annulus.
    Oracle(CommonArgs),
    /// Run the invariant checks on the configured problem.
    Verify(CommonArgs),
}

type Runner = fn(&commands::Context) -> Result<bool, CliError>;

fn parse_resolution(s: &str) -> Result<[usize; 2], String> {
    let (n, m) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok([parse(n)?, parse(m)?])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, Runner) = match &cli.command {
        Command::Pss(a) => (a, commands::pss),
        Command::Cmc(a) => (a, commands::cmc),
        Command::Transform(a) => (a, commands::transform),
        Command::PiPipeline(a) => (a, commands::pi_pipeline),
        Command::Oracle(a) => (a, commands::oracle),
        Command::Verify(a) => (a, commands::verify),
    };
    let name = cli_name(&cli.command);
    let cfg = match RunConfig::load(&args.config, args.resolution) {
        Ok(c) => c,
        Err(issues) => return report(CliError::config(issues), None),
    };
    let out = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("forch-out"));
    if let Err(e) = std::fs::create_dir_all(&out) {
        return report(CliError::io(&out, e), None);
    }
    let ctx =
        commands::Context { cfg, out: out.clone(), quiet: args.quiet, command: name, config_path: args.config.clone() };
    match run(&ctx) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => report(e, Some(&out)),
    }
}

fn cli_name(c: &Command) -> &'static str {
    match c {
        Command::Pss(_) => "pss",
        Command::Cmc(_) => "cmc",
        Command::Transform(_) => "transform",
        Command::PiPipeline(_) => "pi-pipeline",
        Command::Oracle(_) => "oracle",
        Command::Verify(_) => "verify",
    }
}

fn report(e: CliError, out: Option<&std::path::Path>) -> ExitCode {
    let json = e.to_json();
    eprintln!("{json}");
    if let Some(dir) = out {
        // Best effort; the stderr line is the primary channel.
        let _ = std::fs::write(dir.join("error.json"), format!("{json}\n"));
    }
    ExitCode::from(e.code)
}
