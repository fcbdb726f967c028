//! `fracdelay` command line: declarative problem files in, CSV and JSON
//! reports out.
//!
//! Exit codes: 0 success, 2 validation failure, 3 tolerance failure,
//! 4 spectral hit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracdelay_cli::commands::{self, exit_for_error, Exit};
use fracdelay_cli::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fracdelay",
    version,
    about = "Discrete fractional delay difference equations: solvers and spectral diagnostics"
)]
struct Cli {
    /// Problem configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV and JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the scan grid density.
    #[arg(long, global = true)]
    grid_m: Option<usize>,

    /// Override the contour radius.
    #[arg(long, global = true)]
    contour_r: Option<f64>,

    /// Override every tolerance in the verification battery.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Override seeds (random forcing, norm trials).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write the solution CSV.
    Solve {
        /// conv | direct | both
        #[arg(long, default_value = "conv")]
        method: String,
    },
    /// Run the identity battery (kernel algebra, exchange identity,
    /// resolvent identity, method equivalence, transforms).
    Verify,
    /// Scan the circle symbols and boundedness quantities.
    SymbolScan,
    /// Truncated operator norms and regularity trend.
    Mr,
    /// Everything above plus kernel CSV and the contour cross-check.
    Report,
}

fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    let path = cli.config.as_ref().ok_or("missing --config PATH")?;
    let mut cfg = RunConfig::from_path(path).map_err(|e| e.to_string())?;
    if let Some(m) = cli.grid_m {
        cfg.grid.m = m;
    }
    if let Some(r) = cli.contour_r {
        cfg.contour.radius = r;
    }
    if let Some(seed) = cli.seed {
        if cfg.forcing.kind == "random" {
            cfg.forcing.seed = Some(seed);
        }
        cfg.mr.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(Exit::Validation.code() as u8);
        }
    };
    let seed = cli.seed.unwrap_or(cfg.mr.seed);
    let result = match &cli.command {
        Command::Solve { method } => commands::cmd_solve(&cfg, &cli.out, method),
        Command::Verify => commands::cmd_verify(&cfg, &cli.out, seed, cli.tol),
        Command::SymbolScan => commands::cmd_symbol(&cfg, &cli.out),
        Command::Mr => commands::cmd_mr(&cfg, &cli.out, seed),
        Command::Report => commands::cmd_report(&cfg, &cli.out, seed),
    };
    match result {
        Ok(exit) => ExitCode::from(exit.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for_error(&e).code() as u8)
        }
    }
}
