//! First-order filter functions and the spectral infidelity integral.
//!
//! For a trajectory with adjoints R(t) and a channel with sensitivity
//! chi(t) = chi[h_c(t)], the frequency response is
//!
//!   r(omega) = integral_0^T R^T(t) chi(t) e^{-i omega t} dt,
//!
//! the filter function is F(omega) = |r(omega)|^2, and the ensemble-average
//! infidelity estimate is (1/2 pi) sum_q integral S_q(omega) F_q(omega)
//! d omega. All integrals are trapezoidal on the trajectory's time grid and
//! the caller's frequency grid.

use ndarray::Array1;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::trapezoid_weights;
use crate::noise::{sensitivity, NoiseChannel, Psd};
use crate::propagation::Trajectory;

/// Filter function of one channel over a frequency grid.
#[derive(Debug, Clone)]
pub struct FilterFunctionResult {
    pub label: String,
    pub omega: Vec<f64>,
    /// Complex response vector r(omega_k), one per grid point.
    pub response: Vec<Array1<Complex64>>,
    /// F(omega_k) = |r(omega_k)|^2.
    pub values: Vec<f64>,
}

impl FilterFunctionResult {
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// The time-domain integrand R^T(t_k) chi[h(t_k)] on the trajectory grid.
pub fn sensitivity_track(traj: &Trajectory, channel: &NoiseChannel) -> Result<Vec<Array1<f64>>> {
    channel.check_basis(traj.basis())?;
    (0..traj.len())
        .map(|k| {
            let chi = sensitivity(channel, traj.control(k))?;
            Ok(traj.adjoint(k).t().dot(&chi))
        })
        .collect()
}

fn response_at(
    track: &[Array1<f64>],
    times: &[f64],
    weights: &[f64],
    omega: f64,
) -> Array1<Complex64> {
    let d = track[0].len();
    let mut acc = Array1::<Complex64>::zeros(d);
    for ((g, &t), &w) in track.iter().zip(times.iter()).zip(weights.iter()) {
        let phase = Complex64::new(0.0, -omega * t).exp() * w;
        for i in 0..d {
            acc[i] += phase * g[i];
        }
    }
    acc
}

/// r(omega) for a single frequency.
pub fn r_omega(traj: &Trajectory, channel: &NoiseChannel, omega: f64) -> Result<Array1<Complex64>> {
    let track = sensitivity_track(traj, channel)?;
    let weights = trapezoid_weights(traj.times());
    Ok(response_at(&track, traj.times(), &weights, omega))
}

/// Filter function over a frequency grid. Frequencies are evaluated
/// independently (in parallel) and collected in grid order.
pub fn filter_function(
    traj: &Trajectory,
    channel: &NoiseChannel,
    omegas: &[f64],
) -> Result<FilterFunctionResult> {
    if omegas.is_empty() {
        return Err(Error::Validation("empty frequency grid".into()));
    }
    let track = sensitivity_track(traj, channel)?;
    let weights = trapezoid_weights(traj.times());
    let times = traj.times();
    let response: Vec<Array1<Complex64>> = omegas
        .par_iter()
        .map(|&w| response_at(&track, times, &weights, w))
        .collect();
    let values: Vec<f64> = response
        .iter()
        .map(|r| r.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    Ok(FilterFunctionResult {
        label: channel.label.clone(),
        omega: omegas.to_vec(),
        response,
        values,
    })
}

/// Symmetric linear frequency grid [-max, max] with an odd number of points
/// (so omega = 0 is always on the grid).
pub fn symmetric_grid(omega_max: f64, points: usize) -> Vec<f64> {
    let n = if points % 2 == 0 { points + 1 } else { points };
    let half = (n - 1) / 2;
    (0..n)
        .map(|k| omega_max * (k as f64 - half as f64) / half as f64)
        .collect()
}

/// Log-spaced positive frequency grid, for plotting.
pub fn log_grid(omega_min: f64, omega_max: f64, points: usize) -> Vec<f64> {
    let (a, b) = (omega_min.ln(), omega_max.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Ensemble-average infidelity estimate from filter functions and PSDs.
#[derive(Debug, Clone)]
pub struct InfidelityEstimate {
    /// (1/2 pi) sum_q integral S_q F_q d omega over the supplied grid.
    pub value: f64,
    pub per_channel: Vec<f64>,
    /// Upper estimate of the spectral weight lost outside the grid,
    /// assuming F decays at least as 1/omega^2 past the edges. Zero when
    /// every PSD's support is covered by the grid.
    pub truncation_bound: f64,
}

/// (1/2 pi) sum_q integral S_q(omega) F_q(omega) d omega by trapezoid over
/// the result grids.
pub fn avg_infidelity(parts: &[(&FilterFunctionResult, &Psd)]) -> Result<InfidelityEstimate> {
    let mut per_channel = Vec::with_capacity(parts.len());
    let mut truncation = 0.0;
    for (ff, psd) in parts {
        psd.validate()?;
        if ff.omega.len() < 2 {
            return Err(Error::Validation(
                "infidelity integral needs at least two grid points".into(),
            ));
        }
        let w = trapezoid_weights(&ff.omega);
        let mut s = 0.0;
        for k in 0..ff.omega.len() {
            s += w[k] * psd.value(ff.omega[k]) * ff.values[k];
        }
        per_channel.push(s / std::f64::consts::TAU);

        let edge = ff.omega.last().unwrap().abs().max(ff.omega[0].abs());
        let covered = match psd {
            Psd::White { level } => *level == 0.0,
            Psd::PowerLaw { omega_uv, .. } => *omega_uv <= edge,
            Psd::Tabulated { omega, .. } => *omega.last().unwrap() <= edge,
        };
        if !covered && edge > 0.0 {
            // integral_edge^inf S F ~ S(edge) F(edge) edge for F ~ 1/omega^2
            let f_edge = ff.values[0].max(*ff.values.last().unwrap());
            truncation += 2.0 * psd.value(edge) * f_edge * edge / std::f64::consts::TAU;
        }
    }
    Ok(InfidelityEstimate {
        value: per_channel.iter().sum(),
        per_channel,
        truncation_bound: truncation,
    })
}
