//! `mixkin` command-line driver.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver or I/O failure,
//! 3 comparison outside tolerance. The worker thread count is read from
//! `MIXKIN_THREADS`.

mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mixkin::compare::{compare_runs, Tolerance};
use mixkin::config::{parse_config, RunMode};
use mixkin::scenario::run_scenario;
use mixkin::Error;

#[derive(Parser)]
#[command(name = "mixkin", version, about = "Two-species disparate-mass kinetic solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Run the temperature-relaxation oracle for a config file.
    Oracle { config: PathBuf },
    /// Compare two series files, e.g. `compare a.csv b.csv 1e-6,T_L=1e-3,interp`.
    Compare { a: PathBuf, b: PathBuf, tolerance: String },
    /// Run the built-in invariant checks.
    Selftest,
}

const EXIT_INVALID: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_COMPARE: u8 = 3;

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("MIXKIN_THREADS") {
        let n: usize = v.parse().with_context(|| format!("MIXKIN_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn code_for(e: &Error) -> u8 {
    if e.is_validation() {
        EXIT_INVALID
    } else {
        EXIT_SOLVER
    }
}

fn run(path: &PathBuf, force_oracle: bool) -> u8 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_INVALID;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_INVALID;
        }
    };
    if force_oracle {
        cfg.mode = RunMode::Oracle;
    }
    match run_scenario(&cfg) {
        Ok(s) => {
            let l = &s.last;
            println!(
                "{} steps, {} rows -> {}; final T_L = {:.6}, T_H = {:.6}",
                s.steps,
                s.rows,
                cfg.output.display(),
                l.light.t,
                l.heavy.t
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            code_for(&e)
        }
    }
}

fn compare(a: &PathBuf, b: &PathBuf, spec: &str) -> u8 {
    let tol = match Tolerance::parse(spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    match compare_runs(a, b, &tol) {
        Ok(r) => {
            print!("{}", r.to_csv());
            if r.pass() {
                0
            } else {
                EXIT_COMPARE
            }
        }
        Err(e @ Error::MismatchedSeries(_)) => {
            eprintln!("error: {e}");
            EXIT_COMPARE
        }
        Err(e) => {
            eprintln!("error: {e}");
            code_for(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INVALID);
    }
    let code = match &cli.cmd {
        Cmd::Run { config } => run(config, false),
        Cmd::Oracle { config } => run(config, true),
        Cmd::Compare { a, b, tolerance } => compare(a, b, tolerance),
        Cmd::Selftest => {
            let checks = selftest::run();
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.pass) {
                0
            } else {
                EXIT_SOLVER
            }
        }
    };
    ExitCode::from(code)
}
