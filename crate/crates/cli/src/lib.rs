//! Driver behind the `illiq` binary: a JSON run configuration in, a CSV or
//! JSON table out.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 runtime error.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Parser)]
#[command(
    name = "illiq",
    version,
    about = "Liquidity-adjusted risk measures and their checks"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// β(y) and block/split capital over a position grid
    Beta(Common),
    /// Axiom suites for ρ and the illiquidity measures
    Axioms(Common),
    /// Conjugate, biconjugate recovery and penalty duality checks
    Dual(Common),
    /// Block exit against split exit, position by position
    SplitCompare(Common),
    /// Multi-asset measures and capital
    Portfolio(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for the parallel parts
    #[arg(long)]
    threads: Option<usize>,
    /// Override a config field, e.g. `rho.delta=0.1` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Why a run stopped early.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

fn run(command: Command, stdout: &mut dyn Write) -> Result<bool, Failure> {
    let (args, default_format, exec): (Common, Format, fn(_, _) -> _) = match command {
        Command::Beta(a) => (a, Format::Csv, commands::beta_cmd),
        Command::Axioms(a) => (a, Format::Json, commands::axioms_cmd),
        Command::Dual(a) => (a, Format::Csv, commands::dual_cmd),
        Command::SplitCompare(a) => (a, Format::Csv, commands::split_compare_cmd),
        Command::Portfolio(a) => (a, Format::Json, commands::portfolio_cmd),
    };
    let (cfg, base) = config::load(&args.config, &args.set)?;
    let out: output::Output = match args.threads {
        Some(0) => return Err(Failure::Config("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Runtime(e.to_string()))?
            .install(|| exec(&cfg, &base))?,
        None => exec(&cfg, &base)?,
    };
    output::write(
        &out,
        args.format.unwrap_or(default_format),
        args.out.as_deref(),
        stdout,
    )?;
    Ok(out.passed)
}

/// Runs one command line (program name first) and returns the exit code.
/// Table output without `--out` goes to `stdout`; diagnostics go to stderr.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command, stdout) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("check failed");
            1
        }
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}
