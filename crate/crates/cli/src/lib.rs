//! Configuration-driven front end: resolve a [`config::RunConfig`], run one
//! command, emit a JSON or CSV report and map the outcome to an exit code.

pub mod commands;
pub mod config;
pub mod report;

use std::io::{IsTerminal, Write};

use confgauss::error::GeomError;

use crate::config::{Format, RunConfig};
use crate::report::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Exit codes: every residual within tolerance, a tolerance failure, and a
/// usage, validation or I/O error.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;

/// Report text in the configured format.
pub fn render(cfg: &RunConfig, r: &Report) -> String {
    match cfg.output.format {
        Format::Json => report::emit_json(cfg, r),
        Format::Csv => report::emit_csv(cfg, r),
    }
}

fn summary(r: &Report) -> String {
    let color = std::env::var_os("NO_COLOR").is_none() && std::io::stderr().is_terminal();
    let mut s = String::new();
    for (name, e) in &r.residuals {
        let tag = match (e.pass, color) {
            (true, true) => "\x1b[32mPASS\x1b[0m",
            (false, true) => "\x1b[31mFAIL\x1b[0m",
            (true, false) => "PASS",
            (false, false) => "FAIL",
        };
        s.push_str(&format!("{tag} {name} {:.3e} (tol {:.1e})\n", e.value, e.tolerance));
    }
    s
}

/// Run, write the report and return the exit code.
pub fn execute(cfg: &RunConfig) -> Result<i32, CliError> {
    let r = commands::run(cfg)?;
    let text = render(cfg, &r);
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    eprint!("{}", summary(&r));
    Ok(if r.all_pass() { EXIT_PASS } else { EXIT_TOLERANCE })
}
