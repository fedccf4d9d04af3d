//! Frame transformations and the gate / filter-function invariance checks.
//!
//! A [`FrameTransform`] is a single-axis rotating frame
//! `Q(t) = exp(nu(t) L_a)` in the adjoint representation, with group path
//! `V(t) = exp(-i nu(t) s_a / 2)` and induced control shift
//! `h_Q(t) = (nu'(t) / 2) e_a`. Identity endpoints (`nu(0) = nu(T) = 0`)
//! guarantee the transformed schedule implements the same final gate.
//!
//! The per-channel sufficiency conditions for filter-function invariance
//! are checked exactly as stated: (i) the additive part a_q is an
//! eigenvector of Q(t), (ii) Q(t) commutes with M_q, (iii) h_Q(t) lies in
//! the null space of M_q. [`verify_equivalence`] then re-measures the
//! invariance directly rather than trusting the conditions.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::algebra::{adjoint_generator, exp_real_antisymmetric, GeneratorBasis};
use crate::control::{ControlSchedule, NuProfile};
use crate::error::{Error, Result};
use crate::filterfn::{filter_function, sensitivity_track};
use crate::linalg::{exp_neg_i_hermitian, CMatrix};
use crate::noise::NoiseChannel;
use crate::propagation::{gate_distance, propagate, Stepper, Trajectory};

/// A fixed-axis frame transformation with identity endpoints.
#[derive(Clone)]
pub struct FrameTransform {
    basis: Arc<GeneratorBasis>,
    axis: usize,
    generator: Array2<f64>,
    nu: NuProfile,
    duration: f64,
}

impl FrameTransform {
    /// `Q(t) = exp(nu(t) L_axis)` for an arbitrary generator index.
    pub fn along_axis(
        axis: usize,
        nu: NuProfile,
        basis: Arc<GeneratorBasis>,
        duration: f64,
    ) -> Result<Self> {
        if (nu.period() - duration).abs() > 1e-12 * duration.max(1.0) {
            return Err(Error::Validation(format!(
                "profile period {} does not match transform duration {}",
                nu.period(),
                duration
            )));
        }
        if nu.nu(0.0) != 0.0 || nu.nu(duration) != 0.0 {
            return Err(Error::Validation(
                "frame angle must vanish at both endpoints".into(),
            ));
        }
        let generator = adjoint_generator(axis, &basis)?;
        Ok(Self {
            basis,
            axis,
            generator,
            nu,
            duration,
        })
    }

    pub fn basis(&self) -> &Arc<GeneratorBasis> {
        &self.basis
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn profile(&self) -> &NuProfile {
        &self.nu
    }

    /// Adjoint path Q(t).
    pub fn q_at(&self, t: f64) -> Array2<f64> {
        exp_real_antisymmetric(&self.generator, self.nu.nu(t))
    }

    /// Group path V(t) = exp(-i nu(t) s_axis / 2).
    pub fn v_at(&self, t: f64) -> CMatrix {
        let half = self.nu.nu(t) / 2.0;
        let h = self.basis.generator(self.axis).mapv(|z| z * half);
        exp_neg_i_hermitian(&h)
    }

    /// Induced control shift h_Q(t) = (nu'(t) / 2) e_axis.
    pub fn h_q_at(&self, t: f64) -> Array1<f64> {
        let mut h = Array1::zeros(self.basis.adjoint_dim());
        h[self.axis] = self.nu.nu_dot(t) / 2.0;
        h
    }

    /// Generator decomposition omega(t) of Q(t) = exp(omega(t) . L): a
    /// single fixed-axis component here.
    pub fn omega_at(&self, t: f64) -> Array1<f64> {
        let mut w = Array1::zeros(self.basis.adjoint_dim());
        w[self.axis] = self.nu.nu(t);
        w
    }
}

/// Frame about the z-like generator: index 2 in both the Pauli order
/// (x, y, z) and the Gell-Mann order.
pub fn z_axis_transform(
    nu: NuProfile,
    basis: Arc<GeneratorBasis>,
    duration: f64,
) -> Result<FrameTransform> {
    FrameTransform::along_axis(2, nu, basis, duration)
}

/// Per-channel report of the three sufficiency conditions.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub label: String,
    /// Max over t of the residual ||Q a - lambda a|| (0 when a = 0).
    pub eigenvector_violation: f64,
    /// Rayleigh eigenvalue of a_q under Q at the worst time (1 when a = 0).
    pub eigenvalue: f64,
    /// Max over t of max |[Q, M]| entries.
    pub commutator_violation: f64,
    /// Max over t of ||M h_Q||.
    pub nullspace_violation: f64,
}

impl ConditionReport {
    pub fn max_violation(&self) -> f64 {
        self.eigenvector_violation
            .max(self.commutator_violation)
            .max(self.nullspace_violation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() < tol
    }
}

/// Evaluate the sufficiency conditions on a sampled time grid.
pub fn check_conditions(
    transform: &FrameTransform,
    channels: &[NoiseChannel],
    samples: usize,
) -> Result<Vec<ConditionReport>> {
    let n = samples.max(2);
    let mut reports: Vec<ConditionReport> = channels
        .iter()
        .map(|ch| ConditionReport {
            label: ch.label.clone(),
            eigenvector_violation: 0.0,
            eigenvalue: 1.0,
            commutator_violation: 0.0,
            nullspace_violation: 0.0,
        })
        .collect();
    for ch in channels {
        ch.check_basis(transform.basis())?;
    }
    for k in 0..=n {
        let t = transform.duration() * k as f64 / n as f64;
        let q = transform.q_at(t);
        let hq = transform.h_q_at(t);
        for (ch, rep) in channels.iter().zip(reports.iter_mut()) {
            let a = &ch.additive;
            let a_norm_sq = a.dot(a);
            if a_norm_sq > 0.0 {
                let qa = q.dot(a);
                let lambda = qa.dot(a) / a_norm_sq;
                let resid = (&qa - &a.mapv(|x| x * lambda))
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt();
                if resid > rep.eigenvector_violation {
                    rep.eigenvector_violation = resid;
                    rep.eigenvalue = lambda;
                }
            }
            let comm = q.dot(&ch.linear) - ch.linear.dot(&q);
            let comm_max = comm.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            rep.commutator_violation = rep.commutator_violation.max(comm_max);
            let mhq = ch.linear.dot(&hq);
            let null_resid = mhq.dot(&mhq).sqrt();
            rep.nullspace_violation = rep.nullspace_violation.max(null_resid);
        }
    }
    Ok(reports)
}

/// Pointwise transformed schedule h~(t) = Q(t) h(t) + h_Q(t).
///
/// The transform's profile is applied periodically when the schedule is a
/// whole number of transform periods long (composite pulses).
pub fn transform_schedule(
    schedule: &ControlSchedule,
    transform: &FrameTransform,
) -> Result<ControlSchedule> {
    if schedule.basis().dim() != transform.basis().dim() {
        return Err(Error::Dimension(format!(
            "schedule on su({}) but transform on su({})",
            schedule.basis().dim(),
            transform.basis().dim()
        )));
    }
    let period = transform.duration();
    let total = schedule.duration();
    let reps = (total / period).round();
    if reps < 1.0 || (total - reps * period).abs() > 1e-9 * total {
        return Err(Error::Validation(format!(
            "schedule duration {total} is not a whole number of transform periods {period}"
        )));
    }
    let tf = transform.clone();
    let inner = schedule.clone();
    let sampler = Arc::new(move |t: f64| {
        let mut tt = t - period * (t / period).floor();
        if t >= total {
            tt = period;
        }
        let h = inner.sample(t);
        tf.q_at(tt).dot(&h) + tf.h_q_at(tt)
    });
    ControlSchedule::new(
        schedule.basis().clone(),
        total,
        schedule.boundaries().to_vec(),
        sampler,
    )
}

/// Per-channel invariance measurements.
#[derive(Debug, Clone)]
pub struct ChannelEquivalence {
    pub label: String,
    /// Max over the grid of ||R~^T chi~ - R^T chi||.
    pub integrand_mismatch: f64,
    /// Max over the frequency grid of |F - F~| / max F.
    pub filter_mismatch: f64,
    pub filter_max: f64,
}

/// Gate- and filter-function-level equivalence report for two schedules.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// 1 - |tr(U~† U)| / N at the final time.
    pub gate_distance: f64,
    pub channels: Vec<ChannelEquivalence>,
}

impl EquivalenceReport {
    pub fn max_integrand_mismatch(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.integrand_mismatch)
            .fold(0.0, f64::max)
    }

    pub fn max_filter_mismatch(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.filter_mismatch)
            .fold(0.0, f64::max)
    }
}

/// Propagate both schedules and measure final-gate distance, pointwise
/// integrand mismatch, and filter-function mismatch per channel.
pub fn verify_equivalence(
    base: &ControlSchedule,
    transformed: &ControlSchedule,
    channels: &[NoiseChannel],
    omegas: &[f64],
    steps: usize,
    stepper: Stepper,
) -> Result<EquivalenceReport> {
    if (base.duration() - transformed.duration()).abs() > 1e-12 * base.duration() {
        return Err(Error::Validation(
            "schedules must share the same duration".into(),
        ));
    }
    if base.basis().dim() != transformed.basis().dim() {
        return Err(Error::Dimension(
            "schedules must share the same basis".into(),
        ));
    }
    let traj_base = propagate(base, steps, stepper)?;
    let traj_tf = propagate(transformed, steps, stepper)?;
    report_equivalence(&traj_base, &traj_tf, channels, omegas)
}

/// Equivalence report from already-propagated trajectories.
pub fn report_equivalence(
    traj_base: &Trajectory,
    traj_tf: &Trajectory,
    channels: &[NoiseChannel],
    omegas: &[f64],
) -> Result<EquivalenceReport> {
    let gate = gate_distance(traj_tf.final_unitary(), traj_base.final_unitary());
    let mut out = Vec::with_capacity(channels.len());
    for ch in channels {
        let track_base = sensitivity_track(traj_base, ch)?;
        let track_tf = sensitivity_track(traj_tf, ch)?;
        let mut integrand = 0.0f64;
        if traj_base.len() == traj_tf.len() {
            for (a, b) in track_base.iter().zip(track_tf.iter()) {
                let d = (a - b).iter().map(|x| x * x).sum::<f64>().sqrt();
                integrand = integrand.max(d);
            }
        } else {
            integrand = f64::NAN;
        }
        let ff_base = filter_function(traj_base, ch, omegas)?;
        let ff_tf = filter_function(traj_tf, ch, omegas)?;
        let fmax = ff_base.max_value();
        let mismatch = ff_base
            .values
            .iter()
            .zip(ff_tf.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / fmax.max(f64::MIN_POSITIVE);
        out.push(ChannelEquivalence {
            label: ch.label.clone(),
            integrand_mismatch: integrand,
            filter_mismatch: mismatch,
            filter_max: fmax,
        });
    }
    Ok(EquivalenceReport {
        gate_distance: gate,
        channels: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{
        constant, lambda_schedule, modified_lambda_schedule, modified_su2_schedule, su2_schedule,
        Envelope, LambdaParams, Su2Params,
    };
    use crate::filterfn::symmetric_grid;
    use crate::noise::{su2_standard_channels, su3_standard_channels, Normalization, Psd};
    use std::f64::consts::PI;

    fn sin2_profile(c: f64, t: f64) -> NuProfile {
        NuProfile::sin_squared(c, t).unwrap()
    }

    #[test]
    fn identity_profile_gives_identity_transform() {
        let basis = crate::algebra::GeneratorBasis::pauli();
        let tf = z_axis_transform(sin2_profile(0.0, 1.0), basis, 1.0).unwrap();
        for t in [0.0, 0.33, 1.0] {
            let q = tf.q_at(t);
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((q[[i, j]] - expect).abs() < 1e-14);
                }
            }
            assert!(tf.h_q_at(t).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn z_transform_rotates_transverse_plane() {
        let basis = crate::algebra::GeneratorBasis::pauli();
        let c = PI / 3.0;
        let tf = z_axis_transform(sin2_profile(c, 2.0), basis, 2.0).unwrap();
        // at mid-time nu = c
        let q = tf.q_at(1.0);
        let (s, co) = c.sin_cos();
        let expect = [[co, -s, 0.0], [s, co, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((q[[i, j]] - expect[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn h_q_is_half_profile_derivative_on_axis() {
        let basis = crate::algebra::GeneratorBasis::pauli();
        let (c, t_total) = (-0.7, 3.0);
        let tf = z_axis_transform(sin2_profile(c, t_total), basis, t_total).unwrap();
        for frac in [0.1, 0.5, 0.9] {
            let t = frac * t_total;
            let expect = 0.5 * c * PI / t_total * (2.0 * PI * t / t_total).sin();
            let hq = tf.h_q_at(t);
            assert!((hq[2] - expect).abs() < 1e-14);
            assert_eq!(hq[0], 0.0);
            assert_eq!(hq[1], 0.0);
        }
    }

    #[test]
    fn transform_endpoints_are_identity() {
        let basis = crate::algebra::GeneratorBasis::gell_mann();
        let tf = z_axis_transform(sin2_profile(-0.46, 1.0), basis, 1.0).unwrap();
        for t in [0.0, 1.0] {
            let q = tf.q_at(t);
            for i in 0..8 {
                for j in 0..8 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((q[[i, j]] - expect).abs() < 1e-10);
                }
            }
            let v = tf.v_at(t);
            assert!(crate::linalg::max_abs_diff(&v, &crate::linalg::identity(3)) < 1e-10);
        }
    }

    #[test]
    fn su2_conditions_pass_for_z_axis() {
        let basis = crate::algebra::GeneratorBasis::pauli();
        let tf = z_axis_transform(sin2_profile(-0.46, 1.0), basis, 1.0).unwrap();
        let channels = su2_standard_channels(Normalization::Derivative);
        let reports = check_conditions(&tf, &channels, 64).unwrap();
        for rep in &reports {
            assert!(rep.passes(1e-10), "{}: {:?}", rep.label, rep);
        }
        // dephasing additive part has eigenvalue exactly 1
        assert!((reports[0].eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn su2_x_axis_fails_eigenvector_condition() {
        let basis = crate::algebra::GeneratorBasis::pauli();
        let tf = FrameTransform::along_axis(0, sin2_profile(0.8, 1.0), basis, 1.0).unwrap();
        let channels = su2_standard_channels(Normalization::Derivative);
        let reports = check_conditions(&tf, &channels, 64).unwrap();
        assert!(reports[0].eigenvector_violation > 1e-2, "{:?}", reports[0]);
        assert!(!reports[0].passes(1e-10));
    }

    #[test]
    fn uniform_multiplicative_model_fails_nullspace_condition() {
        // a = 0, M = identity: commutes with everything, but h_Q never lies
        // in the null space, so the equivalence breaks.
        let basis = crate::algebra::GeneratorBasis::pauli();
        let tf = z_axis_transform(sin2_profile(0.5, 1.0), basis.clone(), 1.0).unwrap();
        let ch = NoiseChannel::new(
            "uniform",
            basis,
            Array1::zeros(3),
            Array2::eye(3),
            Psd::White { level: 1.0 },
        )
        .unwrap();
        let reports = check_conditions(&tf, &[ch], 64).unwrap();
        assert!(reports[0].commutator_violation < 1e-14);
        assert!(reports[0].nullspace_violation > 0.1, "{:?}", reports[0]);
        assert!(!reports[0].passes(1e-10));
    }

    #[test]
    fn su3_conditions_pass_for_gell_mann_z_axis() {
        let basis = crate::algebra::GeneratorBasis::gell_mann();
        let tf = z_axis_transform(sin2_profile(-0.35, 1.0), basis, 1.0).unwrap();
        let channels = su3_standard_channels(Normalization::Derivative);
        let reports = check_conditions(&tf, &channels, 64).unwrap();
        for rep in &reports {
            assert!(rep.passes(1e-10), "{}: {:?}", rep.label, rep);
        }
    }

    #[test]
    fn transform_schedule_matches_closed_form_modification() {
        let t_total = 2.0;
        let params = Su2Params::constant(1.1, 0.4, 0.25);
        let base = su2_schedule(params.clone(), t_total).unwrap();
        let nu = sin2_profile(-0.46, t_total);
        let tf = z_axis_transform(nu.clone(), base.basis().clone(), t_total).unwrap();
        let via_transform = transform_schedule(&base, &tf).unwrap();
        let closed_form = modified_su2_schedule(params, nu, t_total).unwrap();
        for k in 0..=40 {
            let t = t_total * k as f64 / 40.0;
            let a = via_transform.sample(t);
            let b = closed_form.sample(t);
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-12, "t={t} component {i}");
            }
        }
    }

    #[test]
    fn lambda_transform_matches_closed_form_modification() {
        let t_total = 1.0;
        let params = LambdaParams {
            rabi: constant(2.0),
            theta: PI / 4.0,
            phi: PI / 2.0,
            delta0: 0.0,
            delta1: 0.0,
        };
        let base = lambda_schedule(params.clone(), t_total).unwrap();
        let nu = sin2_profile(-0.35, t_total);
        let tf = z_axis_transform(nu.clone(), base.basis().clone(), t_total).unwrap();
        let via_transform = transform_schedule(&base, &tf).unwrap();
        let closed_form = modified_lambda_schedule(params, nu, t_total).unwrap();
        for k in 0..=40 {
            let t = t_total * k as f64 / 40.0;
            let a = via_transform.sample(t);
            let b = closed_form.sample(t);
            for i in 0..8 {
                assert!((a[i] - b[i]).abs() < 1e-12, "t={t} component {i}");
            }
        }
    }

    #[test]
    fn identity_transform_is_identity_on_schedules() {
        let base = su2_schedule(Su2Params::constant(0.9, 1.2, -0.1), 1.5).unwrap();
        let tf = z_axis_transform(sin2_profile(0.0, 1.5), base.basis().clone(), 1.5).unwrap();
        let same = transform_schedule(&base, &tf).unwrap();
        for k in 0..=20 {
            let t = 1.5 * k as f64 / 20.0;
            let a = base.sample(t);
            let b = same.sample(t);
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_schedule_transforms_to_pure_shift() {
        let basis = crate::algebra::GeneratorBasis::pauli();
        let base = crate::control::free_evolution(basis.clone(), 1.0).unwrap();
        let tf = z_axis_transform(sin2_profile(0.7, 1.0), basis, 1.0).unwrap();
        let shifted = transform_schedule(&base, &tf).unwrap();
        for frac in [0.2, 0.6] {
            let h = shifted.sample(frac);
            let hq = tf.h_q_at(frac);
            for i in 0..3 {
                assert!((h[i] - hq[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn self_equivalence_report_is_all_zeros() {
        let base = su2_schedule(Su2Params::constant(1.0, 0.0, 0.3), 2.0).unwrap();
        let mut channels = su2_standard_channels(Normalization::Derivative);
        for ch in &mut channels {
            *ch = ch.clone().with_psd(Psd::White { level: 1e-4 }).unwrap();
        }
        let grid = symmetric_grid(10.0, 101);
        let report =
            verify_equivalence(&base, &base, &channels, &grid, 500, Stepper::Magnus4).unwrap();
        assert!(report.gate_distance.abs() < 1e-14);
        for ch in &report.channels {
            assert_eq!(ch.integrand_mismatch, 0.0);
            assert_eq!(ch.filter_mismatch, 0.0);
        }
    }

    #[test]
    fn equivalence_holds_pointwise_when_conditions_pass() {
        let t_pulse = 2.0 * PI;
        let base = crate::control::orange_slice_schedule(
            -PI / 8.0,
            PI / 2.0,
            0.0,
            Envelope::SinSquared,
            t_pulse,
        )
        .unwrap();
        let nu = sin2_profile(-0.46, t_pulse);
        let tf = z_axis_transform(nu, base.basis().clone(), t_pulse).unwrap();
        let transformed = transform_schedule(&base, &tf).unwrap();
        let channels = su2_standard_channels(Normalization::Derivative);
        let grid = symmetric_grid(6.0, 241);
        let report =
            verify_equivalence(&base, &transformed, &channels, &grid, 4000, Stepper::Magnus4)
                .unwrap();
        assert!(report.gate_distance < 1e-12, "{}", report.gate_distance);
        for ch in &report.channels {
            assert!(ch.integrand_mismatch < 1e-10, "{}: {:?}", ch.label, ch);
            assert!(ch.filter_mismatch < 1e-10, "{}: {:?}", ch.label, ch);
        }
    }

    #[test]
    fn broken_endpoint_shows_up_as_gate_distance() {
        // A frame angle with nu(T) != 0 leaves a residual rotation at the
        // final time; the trace distance is 1 - |cos(nu(T)/2)|.
        let t_total = 2.0;
        let base = su2_schedule(Su2Params::constant(1.0, 0.0, 0.0), t_total).unwrap();
        let nu_end = 0.3;
        let basis = base.basis().clone();
        let base2 = base.clone();
        let broken = ControlSchedule::new(
            basis,
            t_total,
            vec![],
            Arc::new(move |t| {
                let x = (t / t_total).clamp(0.0, 1.0);
                let nu = nu_end * (0.5 * PI * x).sin().powi(2);
                let nudot = nu_end * 0.5 * PI / t_total * (PI * x).sin();
                let h = base2.sample(t);
                let (s, c) = nu.sin_cos();
                Array1::from(vec![
                    c * h[0] - s * h[1],
                    s * h[0] + c * h[1],
                    h[2] + 0.5 * nudot,
                ])
            }),
        )
        .unwrap();
        let channels = su2_standard_channels(Normalization::Derivative);
        let grid = symmetric_grid(10.0, 41);
        let report =
            verify_equivalence(&base, &broken, &channels, &grid, 2000, Stepper::Magnus4).unwrap();
        let expect = 1.0 - (nu_end / 2.0).cos();
        assert!(
            (report.gate_distance - expect).abs() < 1e-6,
            "distance {} vs {}",
            report.gate_distance,
            expect
        );
    }
}
