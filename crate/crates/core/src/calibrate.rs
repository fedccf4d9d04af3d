//! Scalar calibration of the frame-angle amplitude.
//!
//! [`zero_phase`] tunes the amplitude c of a frame-angle family nu_c(t)
//! until the final geometric (or dynamical) phase of a cyclic state
//! vanishes, converting a geometric implementation into a dynamical one or
//! vice versa. The root finder is a bracketed Brent iteration (inverse
//! quadratic / secant / bisection), derivative-free since every objective
//! evaluation runs a full propagation.

use ndarray::Array1;
use num_complex::Complex64;

use crate::control::ControlSchedule;
use crate::error::{Error, Result};
use crate::phases::{abelian_decompose, principal_angle};
use crate::propagation::{propagate, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseTarget {
    /// Drive the final geometric phase to zero (purely dynamical gate).
    GeometricZero,
    /// Drive the final dynamical phase to zero (purely geometric gate).
    DynamicalZero,
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub c_star: f64,
    /// Objective value at c_star (radians, principal branch).
    pub residual: f64,
    pub iterations: usize,
    /// Bracket after each iteration, outermost first.
    pub bracket_history: Vec<(f64, f64)>,
}

/// Final target phase (principal branch) of the schedule built at
/// amplitude c.
pub fn phase_objective<F>(
    build: F,
    psi0: &Array1<Complex64>,
    target: PhaseTarget,
    steps: usize,
    stepper: Stepper,
    c: f64,
) -> Result<f64>
where
    F: Fn(f64) -> Result<ControlSchedule>,
{
    let schedule = build(c)?;
    let traj = propagate(&schedule, steps, stepper)?;
    let dec = abelian_decompose(&traj, psi0)?;
    let phase = match target {
        PhaseTarget::GeometricZero => dec.final_geometric(),
        PhaseTarget::DynamicalZero => dec.final_dynamical(),
    };
    Ok(principal_angle(phase))
}

/// Find the amplitude in `bracket` at which the target phase vanishes.
///
/// `build` maps an amplitude c to the full (possibly composite) schedule;
/// `psi0` is the cyclic state used for the phase decomposition. The
/// objective must change sign across the bracket.
pub fn zero_phase<F>(
    build: F,
    psi0: &Array1<Complex64>,
    target: PhaseTarget,
    bracket: (f64, f64),
    tol: f64,
    steps: usize,
    stepper: Stepper,
) -> Result<CalibrationResult>
where
    F: Fn(f64) -> Result<ControlSchedule>,
{
    let f = |c: f64| phase_objective(&build, psi0, target, steps, stepper, c);

    let (mut a, mut b) = bracket;
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(CalibrationResult {
            c_star: a,
            residual: 0.0,
            iterations: 0,
            bracket_history: vec![bracket],
        });
    }
    if fb == 0.0 {
        return Ok(CalibrationResult {
            c_star: b,
            residual: 0.0,
            iterations: 0,
            bracket_history: vec![bracket],
        });
    }
    if fa * fb > 0.0 {
        return Err(Error::Validation(format!(
            "objective does not change sign on [{a}, {b}]: f(a) = {fa:.3e}, f(b) = {fb:.3e}"
        )));
    }

    let mut history = vec![(a, b)];
    // Brent iteration, after the classic zbrent structure.
    let (mut c_pt, mut fc) = (a, fa);
    let (mut d, mut e) = (b - a, b - a);
    let eps = f64::EPSILON;
    let max_iter = 100;
    for iter in 1..=max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c_pt = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c_pt;
            c_pt = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * eps * b.abs() + 1e-15;
        let xm = 0.5 * (c_pt - b);
        history.push(if b < c_pt { (b, c_pt) } else { (c_pt, b) });
        if fb.abs() < tol || xm.abs() <= tol1 {
            return Ok(CalibrationResult {
                c_star: b,
                residual: fb,
                iterations: iter,
                bracket_history: history,
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c_pt {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b)?;
    }
    Err(Error::Numerical(format!(
        "phase calibration did not converge in {max_iter} iterations"
    )))
}
