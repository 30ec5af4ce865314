//! Command-line driver: configuration, study execution and machine-readable
//! output. Exit codes are 0 (ok), 2 (configuration) and 3 (numerical or I/O).

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Parser, Subcommand};
use config::{RawConfig, RunConfig, Tolerances};
use error::{CliError, CliResult};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable capping the worker threads (0 = one per core).
pub const THREADS_ENV: &str = "WHASYM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "whasym", version, about = "Truncated Wiener-Hopf determinants and their asymptotics")]
pub struct Cli {
    /// Configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for sweep files (overrides [output] dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Model kind (overrides [model] kind).
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Comma-separated extents (overrides [sweep] T).
    #[arg(long = "T", global = true)]
    pub t: Option<String>,
    /// Finest grid density (overrides [sweep] N_per_unit).
    #[arg(long = "N-per-unit", global = true)]
    pub n_per_unit: Option<String>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Determinant sweep over T: writes sweep.csv, sweep.json and sweep.meta.
    Sweep,
    /// Asymptotic decomposition as JSON on stdout.
    Predict,
    /// Kernel samples as CSV on stdout.
    Kernel,
    /// Invariant suite; exit 0 iff every check passes.
    Selftest,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.trim_start_matches("error:").trim();
            eprintln!("{}", CliError::Config(format!("arguments: {msg}")).line());
            return 2;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}

fn configure_threads() -> CliResult<usize> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
        Err(_) => 0,
    };
    // a pool built earlier in the same process is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(rayon::current_num_threads())
}

/// Merges the file (if any) with command-line overrides.
pub fn load_config(cli: &Cli) -> CliResult<RawConfig> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    if let Some(m) = &cli.model {
        raw.set("model", "kind", m.clone());
    }
    if let Some(t) = &cli.t {
        raw.set("sweep", "T", t.clone());
    }
    if let Some(n) = &cli.n_per_unit {
        raw.set("sweep", "N_per_unit", n.clone());
    }
    if let Some(out) = &cli.out {
        raw.set("output", "dir", out.to_string_lossy().into_owned());
    }
    Ok(raw)
}

fn execute(cli: &Cli) -> CliResult<i32> {
    let threads = configure_threads()?;
    let raw = load_config(cli)?;
    match cli.command {
        Command::Selftest => {
            // the suite needs no model; only tolerance overrides are read
            let tol = if raw.get("model", "kind").is_some() {
                RunConfig::from_raw(&raw)?.tolerances
            } else {
                let mut r = raw.clone();
                r.set("model", "kind", "custom");
                RunConfig::from_raw(&r)?.tolerances
            };
            Ok(selftest(&tol))
        }
        Command::Predict => {
            let cfg = RunConfig::from_raw(&raw)?;
            print!("{}", commands::predict_json(&cfg)?);
            Ok(0)
        }
        Command::Kernel => {
            let cfg = RunConfig::from_raw(&raw)?;
            print!("{}", commands::kernel_csv(&cfg)?);
            Ok(0)
        }
        Command::Sweep => {
            let cfg = RunConfig::from_raw(&raw)?;
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let start = Instant::now();
            let result = commands::sweep(&cfg)?;
            let elapsed = start.elapsed().as_secs_f64();
            std::fs::create_dir_all(&dir)?;
            write(&dir, "sweep.csv", &output::sweep_csv(&result))?;
            write(&dir, "sweep.json", &output::render(&output::sweep_json(&result)))?;
            let meta = format!(
                "model = {}\nthreads = {threads}\nelapsed_seconds = {elapsed:.3}\nversion = {}\n",
                cfg.model.name(),
                env!("CARGO_PKG_VERSION")
            );
            write(&dir, "sweep.meta", &meta)?;
            if !cli.quiet {
                println!(
                    "wrote {} rows to {} in {elapsed:.1} s",
                    result.rows.len(),
                    dir.join("sweep.csv").display()
                );
            }
            Ok(0)
        }
    }
}

fn selftest(tol: &Tolerances) -> i32 {
    let checks = commands::selftest(tol);
    let mut out = std::io::stdout().lock();
    for c in &checks {
        let _ = writeln!(out, "{}", c.line());
    }
    if checks.iter().all(commands::Check::passed) {
        0
    } else {
        3
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
