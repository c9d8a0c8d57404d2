use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oclab_cli::{emit, run, CliError, Command};

#[derive(Parser)]
#[command(
    name = "oclab",
    version,
    about = "Output-constrained randomized quantization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// More progress output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Suppress warnings.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON experiment config.
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Constrained minimum mutual information on a grid.
    Imin(ConfigArg),
    /// Output-constrained and classical distortion-rate values.
    Dcurve(ConfigArg),
    /// Optimal finitely randomized quantizer with an exact output law.
    P1(ConfigArg),
    /// Same with the output law in a Prokhorov ball.
    P3(ConfigArg),
    /// Optimal transport cost and coupling.
    Ot(ConfigArg),
    /// Random-coding scheme simulation.
    Simulate(ConfigArg),
    /// Closest types and their divergence sequence.
    Types(ConfigArg),
    /// Invariant suite.
    Verify(ConfigArg),
}

impl Cmd {
    fn split(&self) -> (Command, &PathBuf) {
        match self {
            Cmd::Imin(a) => (Command::Imin, &a.config),
            Cmd::Dcurve(a) => (Command::Dcurve, &a.config),
            Cmd::P1(a) => (Command::P1, &a.config),
            Cmd::P3(a) => (Command::P3, &a.config),
            Cmd::Ot(a) => (Command::Ot, &a.config),
            Cmd::Simulate(a) => (Command::Simulate, &a.config),
            Cmd::Types(a) => (Command::Types, &a.config),
            Cmd::Verify(a) => (Command::Verify, &a.config),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("OCLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("OCLAB_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    init_threads()?;
    let (cmd, path) = cli.command.split();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (globals, out) = run(cmd, &text)?;
    if !cli.quiet {
        for w in &out.warnings {
            eprintln!("warning: {w}");
        }
    }
    let written = emit(&globals, &out)?;
    if cli.verbose > 0 {
        for p in written {
            eprintln!("wrote {}", p.display());
        }
    }
    match out.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
