//! Subcommand implementations: run the pipeline, write CSV files.
//!
//! Every file starts with `#`-prefixed comment lines carrying the tool
//! version, scenario name, and the config digest, followed by an RFC-4180
//! style header row and data rows with 17 significant digits. Outputs are
//! bitwise reproducible for a fixed config and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use framelab_core::calibrate::{zero_phase, PhaseTarget};
use framelab_core::equivalence::{check_conditions, report_equivalence};
use framelab_core::error::{Error, Result};
use framelab_core::filterfn::{avg_infidelity, filter_function};
use framelab_core::montecarlo::{ensemble_infidelity, RNG_ALGORITHM};
use framelab_core::phases::{abelian_decompose, bloch_path, principal_angle};
use framelab_core::propagation::{propagate, Stepper};

use crate::config::{CalibrateTarget, Scenario};

/// Options shared by all subcommands.
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    pub quiet: bool,
    /// Digest of the raw config file, for output headers.
    pub config_digest: String,
}

impl RunOptions {
    fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

struct CsvFile {
    text: String,
    path: PathBuf,
}

impl CsvFile {
    fn new(opts: &RunOptions, scenario: &Scenario, stem: &str) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# framelab {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "# scenario: {}", scenario.name);
        let _ = writeln!(text, "# config-sha256: {}", opts.config_digest);
        Self {
            text,
            path: opts.out_dir.join(format!("{}_{stem}.csv", scenario.name)),
        }
    }

    fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let _ = writeln!(
            self.text,
            "{}",
            cells.into_iter().collect::<Vec<_>>().join(",")
        );
    }

    fn header(&mut self, cells: &[&str]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    fn write(self) -> Result<PathBuf> {
        std::fs::create_dir_all(self.path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| Error::Validation(format!("cannot create output dir: {e}")))?;
        std::fs::write(&self.path, self.text)
            .map_err(|e| Error::Validation(format!("cannot write {}: {e}", self.path.display())))?;
        Ok(self.path)
    }
}

fn filter_curves(
    scenario: &Scenario,
    opts: &RunOptions,
    traj: &framelab_core::Trajectory,
    grid: &[f64],
    stem: &str,
) -> Result<Vec<framelab_core::FilterFunctionResult>> {
    let channels = scenario.require_channels()?;
    let results: Vec<_> = channels
        .iter()
        .map(|ch| filter_function(traj, ch, grid))
        .collect::<Result<_>>()?;
    let mut file = CsvFile::new(opts, scenario, stem);
    let mut header = vec!["omega".to_string()];
    header.extend(results.iter().map(|r| format!("f_{}", r.label)));
    file.header(&header.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for (k, &w) in grid.iter().enumerate() {
        let mut cells = vec![fmt(w)];
        cells.extend(results.iter().map(|r| fmt(r.values[k])));
        file.row(cells);
    }
    let path = file.write()?;
    opts.say(&format!("wrote {}", path.display()));
    Ok(results)
}

/// Per-channel filter-function curves for the base (and transformed)
/// schedule plus a mismatch summary.
pub fn cmd_filterfn(scenario: &Scenario, opts: &RunOptions) -> Result<()> {
    let steps = scenario.config.grid.time_steps;
    let grid = scenario.frequency_grid(opts.grid_points);
    let traj_base = propagate(&scenario.base, steps, Stepper::Magnus4)?;
    let base = filter_curves(scenario, opts, &traj_base, &grid, "filterfn_base")?;

    let mut summary = CsvFile::new(opts, scenario, "filterfn_summary");
    match &scenario.transformed {
        Some(transformed) => {
            let traj_tf = propagate(transformed, steps, Stepper::Magnus4)?;
            let _ = filter_curves(scenario, opts, &traj_tf, &grid, "filterfn_transformed")?;
            let report =
                report_equivalence(&traj_base, &traj_tf, scenario.require_channels()?, &grid)?;
            summary.comment(&format!("gate_distance: {}", fmt(report.gate_distance)));
            summary.header(&["channel", "filter_max", "filter_mismatch", "integrand_mismatch"]);
            for ch in &report.channels {
                summary.row([
                    ch.label.clone(),
                    fmt(ch.filter_max),
                    fmt(ch.filter_mismatch),
                    fmt(ch.integrand_mismatch),
                ]);
            }
            let path = summary.write()?;
            opts.say(&format!("wrote {}", path.display()));
            opts.say(&format!(
                "max filter mismatch {:.3e}, gate distance {:.3e}",
                report.max_filter_mismatch(),
                report.gate_distance
            ));
        }
        None => {
            summary.header(&["channel", "filter_max"]);
            for r in &base {
                summary.row([r.label.clone(), fmt(r.max_value())]);
            }
            let path = summary.write()?;
            opts.say(&format!("wrote {}", path.display()));
        }
    }
    Ok(())
}

fn phase_file(
    scenario: &Scenario,
    opts: &RunOptions,
    schedule: &framelab_core::ControlSchedule,
    stem: &str,
) -> Result<framelab_core::phases::AbelianPhaseDecomposition> {
    let steps = scenario.config.grid.time_steps;
    let traj = propagate(schedule, steps, Stepper::Magnus4)?;
    let dec = abelian_decompose(&traj, &scenario.state()?)?;
    let mut file = CsvFile::new(opts, scenario, stem);
    file.comment(&format!("cyclic_residual: {}", fmt(dec.cyclic_residual)));
    file.header(&["t", "alpha_g", "alpha_d", "alpha_sum"]);
    for k in 0..dec.times.len() {
        file.row([
            fmt(dec.times[k]),
            fmt(dec.geometric[k]),
            fmt(dec.dynamical[k]),
            fmt(dec.geometric[k] + dec.dynamical[k]),
        ]);
    }
    let path = file.write()?;
    opts.say(&format!("wrote {}", path.display()));
    Ok(dec)
}

/// Geometric and dynamical phase versus time for the base (and
/// transformed) schedule.
pub fn cmd_phases(scenario: &Scenario, opts: &RunOptions) -> Result<()> {
    let dec = phase_file(scenario, opts, &scenario.base, "phases_base")?;
    opts.say(&format!(
        "base: alpha_g(T) = {:.6}, alpha_d(T) = {:.6}",
        principal_angle(dec.final_geometric()),
        principal_angle(dec.final_dynamical())
    ));
    if let Some(transformed) = &scenario.transformed {
        let dec_tf = phase_file(scenario, opts, transformed, "phases_transformed")?;
        opts.say(&format!(
            "transformed: alpha_g(T) = {:.6}, alpha_d(T) = {:.6}",
            principal_angle(dec_tf.final_geometric()),
            principal_angle(dec_tf.final_dynamical())
        ));
        let sum_gap = principal_angle(
            dec.final_geometric() + dec.final_dynamical()
                - dec_tf.final_geometric()
                - dec_tf.final_dynamical(),
        )
        .abs();
        opts.say(&format!("phase-sum agreement: {sum_gap:.3e} rad"));
    }
    Ok(())
}

/// Tune the frame-angle amplitude until the target phase vanishes.
pub fn cmd_calibrate(scenario: &Scenario, opts: &RunOptions) -> Result<()> {
    let cal = &scenario.config.calibrate;
    let target = match cal.target {
        CalibrateTarget::GeometricZero => PhaseTarget::GeometricZero,
        CalibrateTarget::DynamicalZero => PhaseTarget::DynamicalZero,
    };
    let steps = scenario.config.grid.time_steps;
    let cfg = scenario.config.clone();
    let result = zero_phase(
        |c| {
            let mut with_amp = cfg.clone();
            if let Some(tf) = with_amp.transform.as_mut() {
                tf.amplitude = c;
            }
            let built = with_amp.build()?;
            built
                .transformed
                .ok_or_else(|| Error::Validation("calibration needs a [transform] section".into()))
        },
        &scenario.state()?,
        target,
        (cal.bracket[0], cal.bracket[1]),
        cal.tolerance,
        steps,
        Stepper::Magnus4,
    )?;

    let mut file = CsvFile::new(opts, scenario, "calibration");
    file.comment(&format!("c_star: {}", fmt(result.c_star)));
    file.comment(&format!("residual_rad: {}", fmt(result.residual)));
    file.comment(&format!("iterations: {}", result.iterations));
    file.header(&["iteration", "bracket_lo", "bracket_hi"]);
    for (k, (lo, hi)) in result.bracket_history.iter().enumerate() {
        file.row([k.to_string(), fmt(*lo), fmt(*hi)]);
    }
    let path = file.write()?;
    opts.say(&format!("wrote {}", path.display()));
    opts.say(&format!(
        "c* = {:.8} (residual {:.2e} rad, {} iterations)",
        result.c_star,
        result.residual.abs(),
        result.iterations
    ));
    Ok(())
}

/// Predicted (spectral-integral) versus measured (ensemble) infidelity
/// across the configured noise scales.
pub fn cmd_montecarlo(scenario: &Scenario, opts: &RunOptions) -> Result<()> {
    let channels = scenario.require_channels()?;
    let mc = &scenario.config.montecarlo;
    let seed = opts.seed.unwrap_or(mc.seed);
    let steps = mc.time_steps;
    let grid = scenario.frequency_grid(opts.grid_points);

    let traj = propagate(&scenario.base, steps, Stepper::Magnus4)?;
    let base_filters: Vec<_> = channels
        .iter()
        .map(|ch| filter_function(&traj, ch, &grid))
        .collect::<Result<_>>()?;

    let mut file = CsvFile::new(opts, scenario, "montecarlo");
    file.comment(&format!("rng: {RNG_ALGORITHM}"));
    file.comment(&format!("seed: {seed}"));
    file.comment(&format!("batch: {}", mc.batch));
    file.header(&["scale", "predicted", "measured", "stderr", "ratio"]);
    for (i, &scale) in mc.scales.iter().enumerate() {
        let scaled: Vec<_> = channels
            .iter()
            .map(|ch| ch.clone().with_psd(ch.psd.scaled(scale)))
            .collect::<Result<_>>()?;
        let parts: Vec<_> = base_filters
            .iter()
            .zip(scaled.iter())
            .map(|(f, ch)| (f, &ch.psd))
            .collect();
        let predicted = avg_infidelity(&parts)?;
        if predicted.truncation_bound > 0.01 * predicted.value.max(f64::MIN_POSITIVE) {
            opts.say(&format!(
                "warning: frequency grid truncates the spectral integral \
                 (bound {:.2e} vs value {:.2e})",
                predicted.truncation_bound, predicted.value
            ));
        }
        let measured = ensemble_infidelity(
            &scenario.base,
            &scaled,
            steps,
            Stepper::Magnus4,
            mc.batch,
            seed.wrapping_add(i as u64),
        )?;
        let ratio = if predicted.value > 0.0 {
            measured.mean / predicted.value
        } else {
            f64::NAN
        };
        file.row([
            fmt(scale),
            fmt(predicted.value),
            fmt(measured.mean),
            fmt(measured.stderr),
            fmt(ratio),
        ]);
        opts.say(&format!(
            "scale {scale:.3e}: predicted {:.4e}, measured {:.4e} +- {:.1e} (ratio {ratio:.3})",
            predicted.value, measured.mean, measured.stderr
        ));
    }
    let path = file.write()?;
    opts.say(&format!("wrote {}", path.display()));
    Ok(())
}

fn bloch_file(
    scenario: &Scenario,
    opts: &RunOptions,
    schedule: &framelab_core::ControlSchedule,
    stem: &str,
) -> Result<()> {
    if schedule.basis().dim() != 2 {
        return Err(Error::Validation(
            "bloch-path needs a two-level schedule".into(),
        ));
    }
    let steps = scenario.config.grid.time_steps;
    let traj = propagate(schedule, steps, Stepper::Magnus4)?;
    let path_points = bloch_path(&traj, &scenario.state()?);
    let mut file = CsvFile::new(opts, scenario, stem);
    file.header(&["t", "x", "y", "z"]);
    for (k, p) in path_points.iter().enumerate() {
        file.row([fmt(traj.times()[k]), fmt(p[0]), fmt(p[1]), fmt(p[2])]);
    }
    let path = file.write()?;
    opts.say(&format!("wrote {}", path.display()));
    Ok(())
}

/// Bloch-sphere coordinates of the cyclic state along the evolution.
pub fn cmd_bloch_path(scenario: &Scenario, opts: &RunOptions) -> Result<()> {
    bloch_file(scenario, opts, &scenario.base, "bloch_base")?;
    if let Some(transformed) = &scenario.transformed {
        bloch_file(scenario, opts, transformed, "bloch_transformed")?;
    }
    Ok(())
}

/// Full equivalence report: sufficiency conditions, gate distance, and
/// filter-function mismatch. Exits nonzero when a tolerance is breached.
pub fn cmd_verify(scenario: &Scenario, opts: &RunOptions) -> Result<()> {
    let channels = scenario.require_channels()?;
    let transformed = scenario.transformed.as_ref().ok_or_else(|| {
        Error::Validation("verify needs a [transform] section".into())
    })?;
    let frame = scenario.frame.as_ref().unwrap();
    let tol = &scenario.config.tolerances;
    let steps = scenario.config.grid.time_steps;
    let grid = scenario.frequency_grid(opts.grid_points);

    let conditions = check_conditions(frame, channels, 256)?;
    let traj_base = propagate(&scenario.base, steps, Stepper::Magnus4)?;
    let traj_tf = propagate(transformed, steps, Stepper::Magnus4)?;
    let report = report_equivalence(&traj_base, &traj_tf, channels, &grid)?;

    let mut file = CsvFile::new(opts, scenario, "verify");
    file.comment(&format!("gate_distance: {}", fmt(report.gate_distance)));
    file.header(&[
        "channel",
        "eigenvector_violation",
        "commutator_violation",
        "nullspace_violation",
        "filter_max",
        "filter_mismatch",
        "integrand_mismatch",
        "conditions_pass",
    ]);
    for (cond, equiv) in conditions.iter().zip(report.channels.iter()) {
        file.row([
            cond.label.clone(),
            fmt(cond.eigenvector_violation),
            fmt(cond.commutator_violation),
            fmt(cond.nullspace_violation),
            fmt(equiv.filter_max),
            fmt(equiv.filter_mismatch),
            fmt(equiv.integrand_mismatch),
            (cond.passes(tol.conditions)).to_string(),
        ]);
    }
    let path = file.write()?;
    opts.say(&format!("wrote {}", path.display()));
    opts.say(&format!(
        "gate distance {:.3e}, max filter mismatch {:.3e}",
        report.gate_distance,
        report.max_filter_mismatch()
    ));

    let conditions_ok = conditions.iter().all(|c| c.passes(tol.conditions));
    if !conditions_ok {
        let worst = conditions
            .iter()
            .map(|c| (c.label.clone(), c.max_violation()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        return Err(Error::Numerical(format!(
            "sufficiency conditions violated (channel '{}' at {:.3e})",
            worst.0, worst.1
        )));
    }
    if report.gate_distance > tol.gate_distance {
        return Err(Error::Numerical(format!(
            "gate distance {:.3e} exceeds tolerance {:.1e}",
            report.gate_distance, tol.gate_distance
        )));
    }
    if report.max_filter_mismatch() > tol.filter_mismatch {
        return Err(Error::Numerical(format!(
            "filter mismatch {:.3e} exceeds tolerance {:.1e}",
            report.max_filter_mismatch(),
            tol.filter_mismatch
        )));
    }
    opts.say("equivalence verified");
    Ok(())
}
