//! Deterministic control schedules h_c(t).
//!
//! A [`ControlSchedule`] is a pure sampler t -> coefficient vector against a
//! generator basis, together with its duration and the list of interior
//! segment boundaries where the sampler may jump. Schedules are immutable;
//! all constructors validate their parameters up front.

use std::sync::Arc;

use ndarray::Array1;

use crate::algebra::GeneratorBasis;
use crate::error::{Error, Result};

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Wrap a constant as a time function.
pub fn constant(value: f64) -> TimeFn {
    Arc::new(move |_| value)
}

/// A deterministic control coefficient schedule on [0, duration].
#[derive(Clone)]
pub struct ControlSchedule {
    basis: Arc<GeneratorBasis>,
    duration: f64,
    boundaries: Vec<f64>,
    sampler: Arc<dyn Fn(f64) -> Array1<f64> + Send + Sync>,
}

impl ControlSchedule {
    pub fn new(
        basis: Arc<GeneratorBasis>,
        duration: f64,
        boundaries: Vec<f64>,
        sampler: Arc<dyn Fn(f64) -> Array1<f64> + Send + Sync>,
    ) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::Validation(format!(
                "schedule duration must be positive, got {duration}"
            )));
        }
        let mut boundaries = boundaries;
        boundaries.retain(|&t| t > 0.0 && t < duration);
        boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
        boundaries.dedup();
        Ok(Self {
            basis,
            duration,
            boundaries,
            sampler,
        })
    }

    pub fn basis(&self) -> &Arc<GeneratorBasis> {
        &self.basis
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Interior times where the sampler is allowed to be discontinuous.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Control coefficient vector at time t.
    pub fn sample(&self, t: f64) -> Array1<f64> {
        (self.sampler)(t)
    }

    /// The same pulse applied `count` times back to back.
    pub fn repeated(&self, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Validation("repetition count must be >= 1".into()));
        }
        let period = self.duration;
        let total = period * count as f64;
        let inner = self.sampler.clone();
        let sampler = Arc::new(move |t: f64| {
            let mut tt = t - period * (t / period).floor();
            if t >= total {
                tt = period;
            }
            inner(tt)
        });
        let mut boundaries = Vec::new();
        for k in 0..count {
            let off = period * k as f64;
            if k > 0 {
                boundaries.push(off);
            }
            boundaries.extend(self.boundaries.iter().map(|&b| b + off));
        }
        Self::new(self.basis.clone(), total, boundaries, sampler)
    }
}

/// Time-dependent parameters of the generic two-level control
/// h_c = (Omega cos phi, Omega sin phi, Delta) / 2.
#[derive(Clone)]
pub struct Su2Params {
    pub rabi: TimeFn,
    pub phase: TimeFn,
    pub detuning: TimeFn,
}

impl Su2Params {
    pub fn constant(rabi: f64, phase: f64, detuning: f64) -> Self {
        Self {
            rabi: constant(rabi),
            phase: constant(phase),
            detuning: constant(detuning),
        }
    }
}

/// h_c(t) = (Omega(t) cos phi(t), Omega(t) sin phi(t), Delta(t)) / 2.
pub fn su2_schedule(params: Su2Params, duration: f64) -> Result<ControlSchedule> {
    let basis = GeneratorBasis::pauli();
    let p = params.clone();
    let sampler = Arc::new(move |t: f64| {
        let om = (p.rabi)(t);
        let ph = (p.phase)(t);
        let dl = (p.detuning)(t);
        Array1::from(vec![0.5 * om * ph.cos(), 0.5 * om * ph.sin(), 0.5 * dl])
    });
    ControlSchedule::new(basis, duration, Vec::new(), sampler)
}

/// Zero control on an arbitrary basis (free evolution).
pub fn free_evolution(basis: Arc<GeneratorBasis>, duration: f64) -> Result<ControlSchedule> {
    let d = basis.adjoint_dim();
    let sampler = Arc::new(move |_t: f64| Array1::zeros(d));
    ControlSchedule::new(basis, duration, Vec::new(), sampler)
}

/// Pulse envelope shape for area-constrained segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Envelope {
    /// Constant amplitude over each segment.
    #[default]
    Constant,
    /// sin^2 ramp over each segment (zero at both segment ends).
    SinSquared,
}

/// A sin^2-shaped pulse of fixed area: amplitude and cumulative area in
/// closed form.
#[derive(Debug, Clone, Copy)]
pub struct SinSquaredPulse {
    pub area: f64,
    pub duration: f64,
}

impl SinSquaredPulse {
    pub fn amplitude(&self, t: f64) -> f64 {
        let x = std::f64::consts::PI * t / self.duration;
        2.0 * self.area / self.duration * x.sin().powi(2)
    }

    /// Integral of the amplitude from 0 to t; equals `area` at t = duration.
    pub fn integral(&self, t: f64) -> f64 {
        let tau = std::f64::consts::TAU;
        self.area * (t / self.duration - (tau * t / self.duration).sin() / tau)
    }
}

/// One segment of an orange-slice pulse.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub area: f64,
    pub phase: f64,
}

/// Segment layout of the orange-slice pulse: areas (theta, pi, pi - theta)
/// with drive phases (eta + pi/2, eta - gamma - pi/2, eta + pi/2) and
/// durations proportional to areas.
pub fn orange_slice_segments(gamma: f64, theta: f64, eta: f64, duration: f64) -> Vec<Segment> {
    use std::f64::consts::PI;
    let areas = [theta, PI, PI - theta];
    let phases = [eta + PI / 2.0, eta - gamma - PI / 2.0, eta + PI / 2.0];
    let total: f64 = 2.0 * PI;
    let mut out = Vec::new();
    let mut t0 = 0.0;
    for (&area, &phase) in areas.iter().zip(phases.iter()) {
        if area <= 0.0 {
            continue;
        }
        let tau = duration * area / total;
        out.push(Segment {
            start: t0,
            end: t0 + tau,
            area,
            phase,
        });
        t0 += tau;
    }
    if let Some(last) = out.last_mut() {
        last.end = duration;
    }
    out
}

/// Resonant pulse tracing an orange-slice path on the Bloch sphere.
///
/// Three segments of areas (theta, pi, pi - theta), total area 2 pi, with
/// piecewise-constant drive phase and Delta = 0. The final propagator is
/// `exp(i gamma n . s)` with `n = (sin theta cos eta, sin theta sin eta,
/// -cos theta)`; the sign conventions are pinned by the gate-level tests.
pub fn orange_slice_schedule(
    gamma: f64,
    theta: f64,
    eta: f64,
    envelope: Envelope,
    duration: f64,
) -> Result<ControlSchedule> {
    use std::f64::consts::PI;
    if !(duration > 0.0) {
        return Err(Error::Validation(format!(
            "pulse duration must be positive, got {duration}"
        )));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Validation(format!(
            "polar angle theta must lie in [0, pi], got {theta}"
        )));
    }
    let segments = orange_slice_segments(gamma, theta, eta, duration);
    let total_area: f64 = segments.iter().map(|s| s.area).sum();
    if (total_area - 2.0 * PI).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "segment areas sum to {total_area}, expected 2 pi"
        )));
    }
    let boundaries: Vec<f64> = segments.iter().skip(1).map(|s| s.start).collect();
    let segs = segments.clone();
    let basis = GeneratorBasis::pauli();
    let sampler = Arc::new(move |t: f64| {
        let seg = segs
            .iter()
            .rev()
            .find(|s| t >= s.start)
            .unwrap_or(&segs[0]);
        let tau = seg.end - seg.start;
        let om = match envelope {
            Envelope::Constant => seg.area / tau,
            Envelope::SinSquared => SinSquaredPulse {
                area: seg.area,
                duration: tau,
            }
            .amplitude(t - seg.start),
        };
        Array1::from(vec![
            0.5 * om * seg.phase.cos(),
            0.5 * om * seg.phase.sin(),
            0.0,
        ])
    });
    ControlSchedule::new(basis, duration, boundaries, sampler)
}

/// A frame-angle profile nu(t) with nu(0) = nu(period) = 0.
#[derive(Clone)]
pub struct NuProfile {
    amplitude: f64,
    period: f64,
    form: NuForm,
}

#[derive(Clone)]
enum NuForm {
    SinSquared,
    Sampled { values: Arc<Vec<f64>> },
}

impl NuProfile {
    /// nu(t) = c sin^2(pi t / period); endpoint zeros hold exactly.
    pub fn sin_squared(amplitude: f64, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Validation(format!(
                "profile period must be positive, got {period}"
            )));
        }
        Ok(Self {
            amplitude,
            period,
            form: NuForm::SinSquared,
        })
    }

    /// Profile given as uniform samples over [0, period]; both endpoint
    /// samples must be zero. Values are linearly interpolated and the
    /// derivative is the piecewise slope.
    pub fn from_samples(values: Vec<f64>, period: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Validation(
                "sampled profile needs at least two points".into(),
            ));
        }
        if !(period > 0.0) {
            return Err(Error::Validation(format!(
                "profile period must be positive, got {period}"
            )));
        }
        let first = values[0];
        let last = *values.last().unwrap();
        if first.abs() > 1e-15 || last.abs() > 1e-15 {
            return Err(Error::Validation(format!(
                "profile endpoints must vanish, got nu(0) = {first}, nu(T) = {last}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("profile samples must be finite".into()));
        }
        Ok(Self {
            amplitude: values.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs())),
            period,
            form: NuForm::Sampled {
                values: Arc::new(values),
            },
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Same profile with a different amplitude (sin^2 family only).
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        match self.form {
            NuForm::SinSquared => Self::sin_squared(amplitude, self.period),
            NuForm::Sampled { .. } => Err(Error::Validation(
                "cannot rescale a sampled profile by amplitude".into(),
            )),
        }
    }

    pub fn nu(&self, t: f64) -> f64 {
        let frac = t / self.period;
        if frac <= 0.0 || frac >= 1.0 {
            return 0.0;
        }
        match &self.form {
            NuForm::SinSquared => {
                let x = std::f64::consts::PI * frac;
                self.amplitude * x.sin().powi(2)
            }
            NuForm::Sampled { values } => {
                let n = values.len() - 1;
                let x = (t / self.period * n as f64).clamp(0.0, n as f64);
                let k = (x.floor() as usize).min(n - 1);
                let frac = x - k as f64;
                values[k] * (1.0 - frac) + values[k + 1] * frac
            }
        }
    }

    pub fn nu_dot(&self, t: f64) -> f64 {
        let frac = t / self.period;
        if frac <= 0.0 || frac >= 1.0 {
            return 0.0;
        }
        match &self.form {
            NuForm::SinSquared => {
                let pi = std::f64::consts::PI;
                self.amplitude * pi / self.period * (2.0 * pi * frac).sin()
            }
            NuForm::Sampled { values } => {
                let n = values.len() - 1;
                let dt = self.period / n as f64;
                let x = (t / self.period * n as f64).clamp(0.0, n as f64);
                let k = (x.floor() as usize).min(n - 1);
                (values[k + 1] - values[k]) / dt
            }
        }
    }
}

/// The frame-shifted two-level control
/// h_c = (Omega cos(phi + nu), Omega sin(phi + nu), Delta + nu') / 2.
pub fn modified_su2_schedule(
    params: Su2Params,
    nu: NuProfile,
    duration: f64,
) -> Result<ControlSchedule> {
    check_profile_span(&nu, duration)?;
    let basis = GeneratorBasis::pauli();
    let p = params.clone();
    let sampler = Arc::new(move |t: f64| {
        let om = (p.rabi)(t);
        let ph = (p.phase)(t) + nu.nu(t);
        let dl = (p.detuning)(t) + nu.nu_dot(t);
        Array1::from(vec![0.5 * om * ph.cos(), 0.5 * om * ph.sin(), 0.5 * dl])
    });
    ControlSchedule::new(basis, duration, Vec::new(), sampler)
}

/// Frame-shifted orange-slice pulse, sharing the base segment layout.
pub fn modified_orange_slice_schedule(
    gamma: f64,
    theta: f64,
    eta: f64,
    envelope: Envelope,
    nu: NuProfile,
    duration: f64,
) -> Result<ControlSchedule> {
    check_profile_span(&nu, duration)?;
    let base = orange_slice_schedule(gamma, theta, eta, envelope, duration)?;
    let boundaries = base.boundaries().to_vec();
    let basis = base.basis().clone();
    let sampler = Arc::new(move |t: f64| {
        let h = base.sample(t);
        let (hx, hy) = (h[0], h[1]);
        let (s, c) = nu.nu(t).sin_cos();
        Array1::from(vec![
            c * hx - s * hy,
            s * hx + c * hy,
            h[2] + 0.5 * nu.nu_dot(t),
        ])
    });
    ControlSchedule::new(basis, duration, boundaries, sampler)
}

fn check_profile_span(nu: &NuProfile, duration: f64) -> Result<()> {
    if (nu.period() - duration).abs() > 1e-12 * duration.max(1.0) {
        return Err(Error::Validation(format!(
            "profile period {} does not match schedule duration {}",
            nu.period(),
            duration
        )));
    }
    Ok(())
}

/// Parameters of the two-drive three-level (Lambda) control.
#[derive(Clone)]
pub struct LambdaParams {
    /// Pulse amplitude envelope Omega(t).
    pub rabi: TimeFn,
    /// Fixed polarization angles.
    pub theta: f64,
    pub phi: f64,
    /// Detunings of the two drives.
    pub delta0: f64,
    pub delta1: f64,
}

fn lambda_coeffs(
    om: f64,
    theta: f64,
    phi_half_arg: f64,
    delta0: f64,
    delta1: f64,
    nu_dot: f64,
) -> Array1<f64> {
    let (st, ct) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let (sp, cp) = (phi_half_arg.sin(), phi_half_arg.cos());
    Array1::from(vec![
        0.0,
        0.0,
        (delta0 - delta1 + nu_dot) / 2.0,
        om * cp * st,
        om * sp * st,
        -om * cp * ct,
        om * sp * ct,
        (delta0 + delta1) / (2.0 * 3.0f64.sqrt()),
    ])
}

/// Eight-component Gell-Mann coefficient vector of the Lambda control.
pub fn lambda_schedule(params: LambdaParams, duration: f64) -> Result<ControlSchedule> {
    let basis = GeneratorBasis::gell_mann();
    let p = params.clone();
    let sampler = Arc::new(move |t: f64| {
        lambda_coeffs((p.rabi)(t), p.theta, p.phi / 2.0, p.delta0, p.delta1, 0.0)
    });
    ControlSchedule::new(basis, duration, Vec::new(), sampler)
}

/// Frame-shifted Lambda control: phi -> phi + nu(t) inside the half-angle
/// arguments, and the third component gains nu'(t) / 2.
pub fn modified_lambda_schedule(
    params: LambdaParams,
    nu: NuProfile,
    duration: f64,
) -> Result<ControlSchedule> {
    check_profile_span(&nu, duration)?;
    let basis = GeneratorBasis::gell_mann();
    let p = params.clone();
    let sampler = Arc::new(move |t: f64| {
        lambda_coeffs(
            (p.rabi)(t),
            p.theta,
            (p.phi + nu.nu(t)) / 2.0,
            p.delta0,
            p.delta1,
            nu.nu_dot(t),
        )
    });
    ControlSchedule::new(basis, duration, Vec::new(), sampler)
}
