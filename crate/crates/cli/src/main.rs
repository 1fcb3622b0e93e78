use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use folwerk_cli::{parse_with_budget, parse_window_spec, run, write_reports, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "folwerk", version, about = "Check presentations of derived foliations and mates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every `check` in a presentation file.
    Check {
        file: PathBuf,
        /// Directory receiving one JSON report per check.
        #[arg(long, value_name = "DIR")]
        json: Option<PathBuf>,
        /// Include rewrite traces in mate reports.
        #[arg(long)]
        trace: bool,
        /// Truncation override, e.g. `w=3,d=4`.
        #[arg(long, value_name = "w=W,d=D")]
        window: Option<String>,
        /// Run independent checks concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

fn main() -> ExitCode {
    let Command::Check { file, json, trace, window, parallel } = Cli::parse().command;
    match check(&file, json, trace, window, parallel) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn check(
    file: &PathBuf,
    json: Option<PathBuf>,
    trace: bool,
    window: Option<String>,
    parallel: bool,
) -> Result<i32, CliError> {
    let src = std::fs::read_to_string(file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
    let budget = match std::env::var("FOLWERK_BUDGET") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| CliError::Io(format!("FOLWERK_BUDGET=`{v}` is not a count")))?),
        Err(_) => None,
    };
    let mut ws = parse_with_budget(&src, budget)?;
    if let Some(spec) = window {
        ws.window = parse_window_spec(&spec, ws.window).map_err(|msg| CliError::Syntax { line: 0, col: 0, msg: format!("--window: {msg}") })?;
    }
    let out = run(&ws, &RunOptions { trace, parallel })?;
    for (r, t) in out.reports.iter().zip(&out.timings) {
        let status = if r.passed { "ok" } else { "FAILED" };
        println!("check #{} {} ({}) ... {status} [{:.1} ms]", r.index, r.check, r.kind, t.as_secs_f64() * 1e3);
        if !r.passed {
            if let Some(f) = r.result.get("first_failure").filter(|v| !v.is_null()) {
                println!("  first failure: {f}");
            }
        }
    }
    if let Some(dir) = json {
        write_reports(&dir, &file.display().to_string(), &out)?;
    }
    let failed = out.reports.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed", out.reports.len(), failed);
    Ok(out.exit_code())
}
