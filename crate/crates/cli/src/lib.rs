//! Library surface of the command-line frontend; `main.rs` is a thin
//! argument-parsing shell around [`run`].

pub mod commands;
pub mod config;

use std::path::PathBuf;

use framelab_core::error::{Error, Result};
use sha2::{Digest, Sha256};

use commands::RunOptions;
use config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    FilterFn,
    Phases,
    Calibrate,
    MonteCarlo,
    BlochPath,
    Verify,
}

pub struct Invocation {
    pub command: Command,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    pub quiet: bool,
}

/// Exit code classes: 0 success, 1 validation, 2 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Dimension(_) => 1,
        Error::Numerical(_) => 2,
    }
}

pub fn run(inv: &Invocation) -> Result<()> {
    let text = std::fs::read_to_string(&inv.config_path).map_err(|e| {
        Error::Validation(format!("cannot read {}: {e}", inv.config_path.display()))
    })?;
    let digest = {
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        let out = h.finalize();
        out.iter().take(6).map(|b| format!("{b:02x}")).collect::<String>()
    };
    let config = ScenarioConfig::parse(&text)?;
    let scenario = config.build()?;
    let opts = RunOptions {
        out_dir: inv.out_dir.clone(),
        seed: inv.seed,
        grid_points: inv.grid_points,
        quiet: inv.quiet,
        config_digest: digest,
    };
    match inv.command {
        Command::FilterFn => commands::cmd_filterfn(&scenario, &opts),
        Command::Phases => commands::cmd_phases(&scenario, &opts),
        Command::Calibrate => commands::cmd_calibrate(&scenario, &opts),
        Command::MonteCarlo => commands::cmd_montecarlo(&scenario, &opts),
        Command::BlochPath => commands::cmd_bloch_path(&scenario, &opts),
        Command::Verify => commands::cmd_verify(&scenario, &opts),
    }
}
