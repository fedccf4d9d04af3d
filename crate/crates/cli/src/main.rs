use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use framelab_cli::{exit_code, run, Command, Invocation};

/// Scenario-driven filter-function and frame-equivalence toolkit.
#[derive(Parser)]
#[command(name = "framelab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario's Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the frequency-grid point count.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Filter-function curves per channel, plus a mismatch summary.
    Filterfn(Common),
    /// Geometric and dynamical phase versus time.
    Phases(Common),
    /// Tune the frame-angle amplitude to zero the target phase.
    Calibrate(Common),
    /// Ensemble infidelity versus the spectral-integral prediction.
    Montecarlo(Common),
    /// Bloch-sphere path of the cyclic state.
    BlochPath(Common),
    /// Full equivalence report (conditions, gate, filter functions).
    Verify(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes; usage errors are
            // validation failures
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let (command, common) = match cli.command {
        Cmd::Filterfn(c) => (Command::FilterFn, c),
        Cmd::Phases(c) => (Command::Phases, c),
        Cmd::Calibrate(c) => (Command::Calibrate, c),
        Cmd::Montecarlo(c) => (Command::MonteCarlo, c),
        Cmd::BlochPath(c) => (Command::BlochPath, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let inv = Invocation {
        command,
        config_path: common.config,
        out_dir: common.out,
        seed: common.seed,
        grid_points: common.grid_points,
        quiet: common.quiet,
    };
    match run(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
