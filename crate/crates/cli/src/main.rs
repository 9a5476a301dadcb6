use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use confgauss_cli::config::{resolve, CommandName, Format, Overrides};
use confgauss_cli::{execute, CliError, EXIT_ERROR};

/// Conformal Gauss map verification suites for hypersurfaces of ℝ⁵.
#[derive(Parser, Debug)]
#[command(name = "confgauss", version)]
struct Cli {
    /// Command to run; may instead come from the config file.
    #[arg(value_enum)]
    command: Option<CommandName>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Surface as `kind[:params][:flipped]` (sphere, torus, perturbed-sphere,
    /// perturbed-torus, r2xs2, rxs3) or SurfaceSpec JSON.
    #[arg(long)]
    surface: Option<String>,
    #[arg(long)]
    level: Option<usize>,
    /// Jet order cap.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Sample size of pointwise suites.
    #[arg(long)]
    points: Option<usize>,
    /// Möbius map as JSON (a list of primitives).
    #[arg(long)]
    moebius: Option<String>,
    /// Tolerance override `<suite>=<value>` or `<residual>=<value>`; repeatable.
    #[arg(long = "tol")]
    tol: Vec<String>,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p)?),
        None => None,
    };
    let o = Overrides {
        command: cli.command,
        surface: cli.surface,
        level: cli.level,
        order: cli.order,
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
        points: cli.points,
        moebius: cli.moebius,
        tolerances: cli.tol,
    };
    let cfg = resolve(file.as_deref(), &o)?;
    execute(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR as u8);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
