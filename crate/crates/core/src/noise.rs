//! Noise channels: sensitivity vectors and power spectral densities.
//!
//! A channel couples one stochastic amplitude delta_q(t) into the control
//! through the affine sensitivity chi_q[h] = a_q + M_q h. The standard
//! channel sets below are normalized so that chi_q equals the derivative of
//! the control vector with respect to the physical parameter being
//! perturbed (Delta -> Delta + delta, phi -> phi + delta,
//! Omega -> Omega (1 + delta), ...); the finite-difference tests pin this.
//! [`Normalization::Compat`] reproduces an alternative normalization found
//! in parts of the literature (multiplicative sensitivities halved for the
//! two-level set, additive detuning sensitivities scaled by 2 pi for the
//! Lambda set). The conditions and equivalence checks are insensitive to
//! these overall scales.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::algebra::GeneratorBasis;
use crate::error::{Error, Result};

/// Power spectral density of a stochastic amplitude, two-sided in angular
/// frequency: the ensemble variance is (1/2 pi) * integral of S over all
/// omega. Units: (amplitude)^2 * time.
#[derive(Debug, Clone, PartialEq)]
pub enum Psd {
    /// Flat spectrum S(omega) = level.
    White { level: f64 },
    /// S(omega) = amplitude / |omega|^exponent between the cutoffs,
    /// zero outside.
    PowerLaw {
        amplitude: f64,
        exponent: f64,
        omega_ir: f64,
        omega_uv: f64,
    },
    /// Piecewise-linear interpolation of (omega, S) pairs for omega >= 0,
    /// extended symmetrically; zero outside the tabulated range.
    Tabulated { omega: Vec<f64>, values: Vec<f64> },
}

impl Psd {
    pub fn validate(&self) -> Result<()> {
        match self {
            Psd::White { level } => {
                if !level.is_finite() || *level < 0.0 {
                    return Err(Error::Validation(format!(
                        "white PSD level must be finite and >= 0, got {level}"
                    )));
                }
            }
            Psd::PowerLaw {
                amplitude,
                omega_ir,
                omega_uv,
                ..
            } => {
                if !amplitude.is_finite() || *amplitude < 0.0 {
                    return Err(Error::Validation("power-law amplitude must be >= 0".into()));
                }
                if !(0.0 < *omega_ir && omega_ir < omega_uv) {
                    return Err(Error::Validation(format!(
                        "power-law cutoffs must satisfy 0 < omega_ir < omega_uv, \
                         got ({omega_ir}, {omega_uv})"
                    )));
                }
            }
            Psd::Tabulated { omega, values } => {
                if omega.len() != values.len() || omega.len() < 2 {
                    return Err(Error::Validation(
                        "tabulated PSD needs matching omega/value lists of length >= 2".into(),
                    ));
                }
                if omega.windows(2).any(|w| w[1] <= w[0]) || omega[0] < 0.0 {
                    return Err(Error::Validation(
                        "tabulated PSD frequencies must be nonnegative and increasing".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Validation("tabulated PSD values must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    /// S(omega); symmetric in omega.
    pub fn value(&self, omega: f64) -> f64 {
        let w = omega.abs();
        match self {
            Psd::White { level } => *level,
            Psd::PowerLaw {
                amplitude,
                exponent,
                omega_ir,
                omega_uv,
            } => {
                if w < *omega_ir || w > *omega_uv {
                    0.0
                } else {
                    amplitude / w.powf(*exponent)
                }
            }
            Psd::Tabulated { omega, values } => {
                if w < omega[0] || w > *omega.last().unwrap() {
                    return 0.0;
                }
                let idx = omega.partition_point(|&x| x < w).min(omega.len() - 1);
                let i = idx.max(1);
                let (w0, w1) = (omega[i - 1], omega[i]);
                let frac = (w - w0) / (w1 - w0);
                values[i - 1] * (1.0 - frac) + values[i] * frac
            }
        }
    }

    /// Scale the overall level by `factor`.
    pub fn scaled(&self, factor: f64) -> Psd {
        match self {
            Psd::White { level } => Psd::White {
                level: level * factor,
            },
            Psd::PowerLaw {
                amplitude,
                exponent,
                omega_ir,
                omega_uv,
            } => Psd::PowerLaw {
                amplitude: amplitude * factor,
                exponent: *exponent,
                omega_ir: *omega_ir,
                omega_uv: *omega_uv,
            },
            Psd::Tabulated { omega, values } => Psd::Tabulated {
                omega: omega.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }
}

/// One stochastic variable's coupling into the control.
#[derive(Clone)]
pub struct NoiseChannel {
    pub label: String,
    /// Control-independent (additive) part a_q.
    pub additive: Array1<f64>,
    /// Linear (multiplicative) part M_q.
    pub linear: Array2<f64>,
    pub psd: Psd,
    basis: Arc<GeneratorBasis>,
}

impl NoiseChannel {
    pub fn new(
        label: impl Into<String>,
        basis: Arc<GeneratorBasis>,
        additive: Array1<f64>,
        linear: Array2<f64>,
        psd: Psd,
    ) -> Result<Self> {
        let d = basis.adjoint_dim();
        if additive.len() != d || linear.nrows() != d || linear.ncols() != d {
            return Err(Error::Dimension(format!(
                "channel arrays must have dimension {d}"
            )));
        }
        if additive.iter().any(|x| !x.is_finite()) || linear.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("channel entries must be finite".into()));
        }
        psd.validate()?;
        Ok(Self {
            label: label.into(),
            additive,
            linear,
            psd,
            basis,
        })
    }

    pub fn basis(&self) -> &Arc<GeneratorBasis> {
        &self.basis
    }

    pub fn check_basis(&self, other: &Arc<GeneratorBasis>) -> Result<()> {
        if self.basis.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "channel '{}' lives on su({}) but the schedule uses su({})",
                self.label,
                self.basis.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn with_psd(mut self, psd: Psd) -> Result<Self> {
        psd.validate()?;
        self.psd = psd;
        Ok(self)
    }
}

/// chi_q[h] = a_q + M_q h.
pub fn sensitivity(channel: &NoiseChannel, h: &Array1<f64>) -> Result<Array1<f64>> {
    if h.len() != channel.additive.len() {
        return Err(Error::Dimension(format!(
            "control vector has length {}, channel '{}' needs {}",
            h.len(),
            channel.label,
            channel.additive.len()
        )));
    }
    Ok(&channel.additive + &channel.linear.dot(h))
}

/// Normalization convention for the standard channel sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// chi_q is the exact parameter derivative of the control vector.
    #[default]
    Derivative,
    /// Alternative published normalization kept for comparison.
    Compat,
}

/// The three standard two-level channels: additive detuning, additive
/// drive phase, multiplicative drive amplitude.
pub fn su2_standard_channels(norm: Normalization) -> Vec<NoiseChannel> {
    let basis = GeneratorBasis::pauli();
    let scale = match norm {
        Normalization::Derivative => 1.0,
        Normalization::Compat => 0.5,
    };
    let zero3 = Array1::zeros(3);
    let z33 = Array2::zeros((3, 3));

    let a_deph = Array1::from(vec![0.0, 0.0, 0.5]);

    let mut m_phase = Array2::zeros((3, 3));
    m_phase[[1, 0]] = scale; // y x^T
    m_phase[[0, 1]] = -scale; // -x y^T

    let mut m_amp = Array2::zeros((3, 3));
    m_amp[[0, 0]] = scale;
    m_amp[[1, 1]] = scale;

    vec![
        NoiseChannel::new(
            "dephasing",
            basis.clone(),
            a_deph,
            z33.clone(),
            Psd::White { level: 0.0 },
        )
        .unwrap(),
        NoiseChannel::new(
            "phase",
            basis.clone(),
            zero3.clone(),
            m_phase,
            Psd::White { level: 0.0 },
        )
        .unwrap(),
        NoiseChannel::new("amplitude", basis, zero3, m_amp, Psd::White { level: 0.0 }).unwrap(),
    ]
}

/// The five standard Lambda-system channels: additive detunings of the two
/// drives, multiplicative amplitude, and additive polarization angles.
pub fn su3_standard_channels(norm: Normalization) -> Vec<NoiseChannel> {
    let basis = GeneratorBasis::gell_mann();
    let zero8 = Array1::zeros(8);
    let z88 = Array2::<f64>::zeros((8, 8));
    let s3 = 3.0f64.sqrt();

    let detuning_scale = match norm {
        Normalization::Derivative => 0.5,
        Normalization::Compat => std::f64::consts::PI,
    };
    let mut a_d0 = Array1::zeros(8);
    a_d0[2] = detuning_scale;
    a_d0[7] = detuning_scale / s3;
    let mut a_d1 = Array1::zeros(8);
    a_d1[2] = -detuning_scale;
    a_d1[7] = detuning_scale / s3;

    // 1-based elementary-matrix indices from the channel definitions map to
    // 0-based array indices here.
    let mut m_amp = Array2::<f64>::zeros((8, 8));
    m_amp[[3, 3]] = 1.0;
    m_amp[[4, 4]] = 1.0;
    m_amp[[5, 5]] = 1.0;
    if let Normalization::Derivative = norm {
        m_amp[[6, 6]] = 1.0;
    }

    let mut m_theta = Array2::<f64>::zeros((8, 8));
    m_theta[[4, 6]] = 0.5; // E_{5,7}
    m_theta[[6, 4]] = -0.5; // -E_{7,5}
    m_theta[[5, 3]] = 0.5; // E_{6,4}
    m_theta[[3, 5]] = -0.5; // -E_{4,6}

    let mut m_phi = Array2::<f64>::zeros((8, 8));
    m_phi[[4, 3]] = 0.5; // E_{5,4}
    m_phi[[3, 4]] = -0.5; // -E_{4,5}
    m_phi[[5, 6]] = 0.5; // E_{6,7}
    m_phi[[6, 5]] = -0.5; // -E_{7,6}

    let white0 = Psd::White { level: 0.0 };
    vec![
        NoiseChannel::new("detuning0", basis.clone(), a_d0, z88.clone(), white0.clone()).unwrap(),
        NoiseChannel::new("detuning1", basis.clone(), a_d1, z88.clone(), white0.clone()).unwrap(),
        NoiseChannel::new("amplitude", basis.clone(), zero8.clone(), m_amp, white0.clone())
            .unwrap(),
        NoiseChannel::new("theta", basis.clone(), zero8.clone(), m_theta, white0.clone()).unwrap(),
        NoiseChannel::new("phi", basis, zero8, m_phi, white0).unwrap(),
    ]
}
