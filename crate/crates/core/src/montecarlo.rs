//! Stochastic noise trajectories and ensemble infidelity validation.
//!
//! Trajectories are synthesized per (channel, shot) from a counter-derived
//! ChaCha12 stream, so batches are reproducible bit for bit from the
//! configured seed and independent of execution order; shots run in
//! parallel and reduce through an index-ordered, Kahan-compensated mean.
//!
//! Spectral synthesis targets the two-sided PSD convention used by the
//! infidelity integral: for white noise of level S0 sampled at spacing dt,
//! the per-sample variance is S0 / dt (band-limited to the grid Nyquist),
//! and the batch-averaged periodogram dt |X_k|^2 / n reproduces S(omega).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::control::ControlSchedule;
use crate::error::{Error, Result};
use crate::linalg::kahan_sum;
use crate::noise::{NoiseChannel, Psd};
use crate::propagation::{propagate, propagate_noisy, time_grid, Stepper};

/// RNG identity recorded in outputs for reproducibility.
pub const RNG_ALGORITHM: &str = "chacha12";

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derived stream seed for one (channel, shot) pair.
pub fn derive_seed(seed: u64, channel: usize, shot: usize) -> u64 {
    splitmix64(seed ^ splitmix64((channel as u64) << 32 | shot as u64))
}

fn nyquist(dt: f64) -> f64 {
    std::f64::consts::PI / dt
}

fn check_resolvable(psd: &Psd, dt: f64) -> Result<()> {
    let ny = nyquist(dt);
    let uv = match psd {
        Psd::White { .. } => return Ok(()),
        Psd::PowerLaw { omega_uv, .. } => *omega_uv,
        Psd::Tabulated { omega, .. } => *omega.last().unwrap(),
    };
    if uv > ny * (1.0 + 1e-12) {
        return Err(Error::Validation(format!(
            "PSD support extends to {uv:.3e} rad/time but the grid Nyquist is {ny:.3e}; \
             refine the time grid"
        )));
    }
    Ok(())
}

/// One synthesized trajectory of `n_steps` samples at spacing `dt`.
fn synthesize_one(psd: &Psd, n_steps: usize, dt: f64, rng: &mut ChaCha12Rng) -> Vec<f64> {
    match psd {
        Psd::White { level } => {
            if *level == 0.0 {
                return vec![0.0; n_steps];
            }
            let sigma = (level / dt).sqrt();
            (0..n_steps)
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        _ => {
            // Hermitian-symmetric Gaussian spectrum shaped by sqrt(S), then
            // an inverse FFT. E|X_j|^2 = S(omega_j) m / dt reproduces the
            // two-sided PSD in the periodogram dt |X|^2 / m.
            let m = n_steps;
            let mut spectrum = vec![Complex64::new(0.0, 0.0); m];
            let half = m / 2;
            let base = 2.0 * std::f64::consts::PI / (m as f64 * dt);
            let amp0 = (psd.value(0.0) * m as f64 / dt).sqrt();
            spectrum[0] = Complex64::new(amp0 * rng.sample::<f64, _>(StandardNormal), 0.0);
            for j in 1..half {
                let s = (psd.value(base * j as f64) * m as f64 / (2.0 * dt)).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                spectrum[j] = Complex64::new(s * re, s * im);
                spectrum[m - j] = spectrum[j].conj();
            }
            if m % 2 == 0 && half > 0 {
                let s = (psd.value(base * half as f64) * m as f64 / dt).sqrt();
                spectrum[half] = Complex64::new(s * rng.sample::<f64, _>(StandardNormal), 0.0);
            }
            let mut planner = FftPlanner::new();
            let ifft = planner.plan_fft_inverse(m);
            ifft.process(&mut spectrum);
            spectrum.iter().map(|z| z.re / m as f64).collect()
        }
    }
}

/// A reproducible batch of noise trajectories for one channel.
#[derive(Debug, Clone)]
pub struct NoiseTrajectoryBatch {
    pub label: String,
    /// samples[shot][step]
    pub samples: Vec<Vec<f64>>,
    pub seed: u64,
    pub psd: Psd,
    pub dt: f64,
}

/// Synthesize `batch` trajectories of `n_steps` samples with spacing `dt`.
/// Shot `i` uses the derived stream `derive_seed(seed, channel_index, i)`.
pub fn sample_trajectories(
    psd: &Psd,
    n_steps: usize,
    dt: f64,
    batch: usize,
    seed: u64,
    channel_index: usize,
) -> Result<NoiseTrajectoryBatch> {
    psd.validate()?;
    check_resolvable(psd, dt)?;
    if n_steps == 0 || batch == 0 {
        return Err(Error::Validation(
            "batch and step counts must be positive".into(),
        ));
    }
    let samples: Vec<Vec<f64>> = (0..batch)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, channel_index, shot));
            synthesize_one(psd, n_steps, dt, &mut rng)
        })
        .collect();
    Ok(NoiseTrajectoryBatch {
        label: format!("channel{channel_index}"),
        samples,
        seed,
        psd: psd.clone(),
        dt,
    })
}

impl NoiseTrajectoryBatch {
    /// Batch-averaged periodogram dt |X_k|^2 / n and its frequency grid
    /// (positive frequencies up to Nyquist).
    pub fn periodogram(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.samples[0].len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let mut acc = vec![0.0f64; m / 2 + 1];
        for shot in &self.samples {
            let mut buf: Vec<Complex64> =
                shot.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            fft.process(&mut buf);
            for (k, a) in acc.iter_mut().enumerate() {
                *a += self.dt * buf[k].norm_sqr() / m as f64;
            }
        }
        for a in acc.iter_mut() {
            *a /= self.samples.len() as f64;
        }
        let base = 2.0 * std::f64::consts::PI / (m as f64 * self.dt);
        let freqs = (0..=m / 2).map(|k| base * k as f64).collect();
        (freqs, acc)
    }
}

/// Mean and standard error of an ensemble estimate.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleResult {
    pub mean: f64,
    pub stderr: f64,
    pub batch: usize,
}

fn infidelity(ideal: &crate::linalg::CMatrix, noisy: &crate::linalg::CMatrix) -> f64 {
    let n = ideal.nrows() as f64;
    let overlap = crate::linalg::trace(&crate::linalg::dagger(ideal).dot(noisy)).norm();
    1.0 - (overlap / n).powi(2)
}

fn uniform_dt(grid: &[f64]) -> Result<f64> {
    let dt = grid[1] - grid[0];
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::Validation(
                "noise synthesis requires a uniform time grid".into(),
            ));
        }
    }
    Ok(dt)
}

fn mean_stderr(values: &[f64]) -> EnsembleResult {
    let n = values.len();
    let mean = kahan_sum(values) / n as f64;
    let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = kahan_sum(&sq) / ((n - 1).max(1) as f64);
    EnsembleResult {
        mean,
        stderr: (var / n as f64).sqrt(),
        batch: n,
    }
}

/// Ensemble-averaged trace infidelity 1 - |tr(U_ideal† U_noisy)|^2 / N^2
/// over `batch` noise realizations drawn from the channels' PSDs.
pub fn ensemble_infidelity(
    schedule: &ControlSchedule,
    channels: &[NoiseChannel],
    steps: usize,
    stepper: Stepper,
    batch: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    let values = shot_infidelities(schedule, channels, steps, stepper, batch, seed)?;
    Ok(mean_stderr(&values))
}

/// Per-shot infidelities, indexed by shot; shot i of channel q always uses
/// the stream `derive_seed(seed, q, i)`, so two schedules evaluated with
/// the same seed, grid, and channels see identical noise.
pub fn shot_infidelities(
    schedule: &ControlSchedule,
    channels: &[NoiseChannel],
    steps: usize,
    stepper: Stepper,
    batch: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if batch == 0 {
        return Err(Error::Validation("batch must be positive".into()));
    }
    if channels.is_empty() {
        return Err(Error::Validation("no channels".into()));
    }
    let grid = time_grid(schedule, steps);
    let dt = uniform_dt(&grid)?;
    let n_steps = grid.len() - 1;
    for ch in channels {
        ch.psd.validate()?;
        check_resolvable(&ch.psd, dt)?;
        ch.check_basis(schedule.basis())?;
    }
    let ideal = propagate(schedule, steps, stepper)?.final_unitary().clone();

    (0..batch)
        .into_par_iter()
        .map(|shot| {
            let noise: Vec<Vec<f64>> = channels
                .iter()
                .enumerate()
                .map(|(q, ch)| {
                    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, q, shot));
                    synthesize_one(&ch.psd, n_steps, dt, &mut rng)
                })
                .collect();
            let noisy = propagate_noisy(schedule, channels, &noise, steps, stepper)?;
            Ok(infidelity(&ideal, &noisy))
        })
        .collect::<Result<Vec<f64>>>()
}

/// Shared-seed paired comparison of two schedules under identical noise.
#[derive(Debug, Clone, Copy)]
pub struct PairedComparison {
    pub first: EnsembleResult,
    pub second: EnsembleResult,
    /// Mean and standard error of the per-shot difference (first - second).
    pub diff_mean: f64,
    pub diff_stderr: f64,
}

/// Run both schedules against the same noise realizations (same seed,
/// channels, and grid) and compare.
pub fn paired_ensemble_infidelity(
    first: &ControlSchedule,
    second: &ControlSchedule,
    channels: &[NoiseChannel],
    steps: usize,
    stepper: Stepper,
    batch: usize,
    seed: u64,
) -> Result<PairedComparison> {
    if (first.duration() - second.duration()).abs() > 1e-12 * first.duration() {
        return Err(Error::Validation(
            "paired comparison needs schedules of equal duration".into(),
        ));
    }
    let a = shot_infidelities(first, channels, steps, stepper, batch, seed)?;
    let b = shot_infidelities(second, channels, steps, stepper, batch, seed)?;
    let diffs: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let d = mean_stderr(&diffs);
    Ok(PairedComparison {
        first: mean_stderr(&a),
        second: mean_stderr(&b),
        diff_mean: d.mean,
        diff_stderr: d.stderr,
    })
}

/// Quasi-static limit: each shot draws one constant amplitude per channel
/// from N(0, sigma_q^2).
pub fn ensemble_infidelity_quasistatic(
    schedule: &ControlSchedule,
    channels: &[NoiseChannel],
    sigmas: &[f64],
    steps: usize,
    stepper: Stepper,
    batch: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    if sigmas.len() != channels.len() {
        return Err(Error::Dimension(format!(
            "{} sigmas for {} channels",
            sigmas.len(),
            channels.len()
        )));
    }
    let grid = time_grid(schedule, steps);
    let n_steps = grid.len() - 1;
    let ideal = propagate(schedule, steps, stepper)?.final_unitary().clone();
    let values: Vec<f64> = (0..batch)
        .into_par_iter()
        .map(|shot| {
            let noise: Vec<Vec<f64>> = sigmas
                .iter()
                .enumerate()
                .map(|(q, &sigma)| {
                    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, q, shot));
                    let amp: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
                    vec![amp; n_steps]
                })
                .collect();
            let noisy = propagate_noisy(schedule, channels, &noise, steps, stepper)?;
            Ok(infidelity(&ideal, &noisy))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_stderr(&values))
}
