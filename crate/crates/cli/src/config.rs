//! Scenario configuration: TOML schema and assembly into core objects.
//!
//! Unknown keys are rejected everywhere, so typos fail loudly before any
//! numerics run.

use std::sync::Arc;

use ndarray::Array1;
use num_complex::Complex64;
use serde::Deserialize;

use framelab_core::control::{
    free_evolution, lambda_schedule, orange_slice_schedule, ControlSchedule, Envelope,
    LambdaParams, NuProfile, Su2Params,
};
use framelab_core::equivalence::{transform_schedule, FrameTransform};
use framelab_core::error::{Error, Result};
use framelab_core::noise::{su2_standard_channels, su3_standard_channels, Normalization, Psd};
use framelab_core::{GeneratorBasis, NoiseChannel};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub transform: Option<TransformConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub channels: ChannelsConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub calibrate: CalibrateConfig,
    #[serde(default)]
    pub montecarlo: MonteCarloConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleConfig {
    /// Resonant slice pulse: three segments of areas (theta, pi, pi-theta).
    OrangeSlice {
        gamma: f64,
        theta: f64,
        eta: f64,
        #[serde(default)]
        envelope: EnvelopeConfig,
        duration: f64,
        #[serde(default = "one")]
        repetitions: usize,
    },
    /// Constant two-level drive.
    Su2Constant {
        rabi: f64,
        phase: f64,
        detuning: f64,
        duration: f64,
        #[serde(default = "one")]
        repetitions: usize,
    },
    /// Two-drive three-level pulse with a sin^2 envelope of given area.
    Lambda {
        theta: f64,
        phi: f64,
        #[serde(default)]
        delta0: f64,
        #[serde(default)]
        delta1: f64,
        #[serde(default = "pi_area")]
        area: f64,
        duration: f64,
    },
    /// Zero control on the two-level basis.
    Free { duration: f64 },
}

fn one() -> usize {
    1
}

fn pi_area() -> f64 {
    std::f64::consts::PI
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeConfig {
    Constant,
    #[default]
    SinSquared,
}

impl From<EnvelopeConfig> for Envelope {
    fn from(e: EnvelopeConfig) -> Self {
        match e {
            EnvelopeConfig::Constant => Envelope::Constant,
            EnvelopeConfig::SinSquared => Envelope::SinSquared,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    /// Frame axis: "z-axis" (index 2) or "x-axis" (index 0, a deliberately
    /// broken choice for condition demonstrations).
    pub kind: TransformKind,
    #[serde(default)]
    pub profile: ProfileKind,
    /// Amplitude c of the sin^2 profile.
    #[serde(default)]
    pub amplitude: f64,
    /// Samples over one pulse period, for profile = "sampled".
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    ZAxis,
    XAxis,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    #[default]
    SinSquared,
    Sampled,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Total propagation steps over the full (repeated) schedule.
    #[serde(default = "default_time_steps")]
    pub time_steps: usize,
    /// Points of the symmetric frequency grid (made odd if even).
    #[serde(default = "default_freq_points")]
    pub frequency_points: usize,
    /// Frequency-grid half-width in rad/time; 0 means 50 / duration.
    #[serde(default)]
    pub frequency_max: f64,
}

fn default_time_steps() -> usize {
    4000
}

fn default_freq_points() -> usize {
    4001
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            time_steps: default_time_steps(),
            frequency_points: default_freq_points(),
            frequency_max: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelsConfig {
    #[serde(default)]
    pub standard: StandardChannels,
    #[serde(default)]
    pub normalization: NormalizationConfig,
    /// Per-channel PSD by channel label; channels without an entry keep a
    /// zero-level white spectrum.
    #[serde(default)]
    pub psd: std::collections::BTreeMap<String, PsdConfig>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StandardChannels {
    #[default]
    None,
    Su2,
    Su3,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationConfig {
    #[default]
    Derivative,
    Compat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum PsdConfig {
    White {
        level: f64,
    },
    PowerLaw {
        amplitude: f64,
        exponent: f64,
        omega_ir: f64,
        omega_uv: f64,
    },
    Tabulated {
        omega: Vec<f64>,
        values: Vec<f64>,
    },
}

impl From<PsdConfig> for Psd {
    fn from(p: PsdConfig) -> Self {
        match p {
            PsdConfig::White { level } => Psd::White { level },
            PsdConfig::PowerLaw {
                amplitude,
                exponent,
                omega_ir,
                omega_uv,
            } => Psd::PowerLaw {
                amplitude,
                exponent,
                omega_ir,
                omega_uv,
            },
            PsdConfig::Tabulated { omega, values } => Psd::Tabulated { omega, values },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct StateConfig {
    #[serde(default)]
    pub preset: StatePreset,
    /// [re, im] pairs for preset = "custom".
    #[serde(default)]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            preset: StatePreset::PlusX,
            amplitudes: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StatePreset {
    #[default]
    PlusX,
    MinusX,
    Custom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    #[serde(default)]
    pub target: CalibrateTarget,
    #[serde(default = "default_bracket")]
    pub bracket: [f64; 2],
    #[serde(default = "default_cal_tol")]
    pub tolerance: f64,
}

fn default_bracket() -> [f64; 2] {
    [-1.0, 0.0]
}

fn default_cal_tol() -> f64 {
    1e-8
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            target: CalibrateTarget::GeometricZero,
            bracket: default_bracket(),
            tolerance: default_cal_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrateTarget {
    #[default]
    GeometricZero,
    DynamicalZero,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "default_batch")]
    pub batch: usize,
    /// Propagation steps for noisy shots (coarser than the deterministic
    /// grid is fine at percent-level tolerances).
    #[serde(default = "default_mc_steps")]
    pub time_steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Multipliers applied to every declared channel PSD, one ensemble per
    /// entry.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
}

fn default_batch() -> usize {
    10_000
}

fn default_mc_steps() -> usize {
    2000
}

fn default_scales() -> Vec<f64> {
    vec![1.0]
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            batch: default_batch(),
            time_steps: default_mc_steps(),
            seed: 0,
            scales: default_scales(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "tol_gate")]
    pub gate_distance: f64,
    #[serde(default = "tol_filter")]
    pub filter_mismatch: f64,
    #[serde(default = "tol_conditions")]
    pub conditions: f64,
}

fn tol_gate() -> f64 {
    1e-8
}

fn tol_filter() -> f64 {
    1e-7
}

fn tol_conditions() -> f64 {
    1e-10
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            gate_distance: tol_gate(),
            filter_mismatch: tol_filter(),
            conditions: tol_conditions(),
        }
    }
}

/// Everything a command needs, assembled and validated.
pub struct Scenario {
    pub name: String,
    pub base: ControlSchedule,
    pub transformed: Option<ControlSchedule>,
    pub frame: Option<FrameTransform>,
    pub channels: Vec<NoiseChannel>,
    pub config: ScenarioConfig,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    /// Single-pulse duration (the transform-profile period).
    fn pulse_duration(&self) -> f64 {
        match &self.schedule {
            ScheduleConfig::OrangeSlice { duration, .. }
            | ScheduleConfig::Su2Constant { duration, .. }
            | ScheduleConfig::Lambda { duration, .. }
            | ScheduleConfig::Free { duration } => *duration,
        }
    }

    fn build_base(&self) -> Result<ControlSchedule> {
        match &self.schedule {
            ScheduleConfig::OrangeSlice {
                gamma,
                theta,
                eta,
                envelope,
                duration,
                repetitions,
            } => orange_slice_schedule(*gamma, *theta, *eta, (*envelope).into(), *duration)?
                .repeated(*repetitions),
            ScheduleConfig::Su2Constant {
                rabi,
                phase,
                detuning,
                duration,
                repetitions,
            } => framelab_core::control::su2_schedule(
                Su2Params::constant(*rabi, *phase, *detuning),
                *duration,
            )?
            .repeated(*repetitions),
            ScheduleConfig::Lambda {
                theta,
                phi,
                delta0,
                delta1,
                area,
                duration,
            } => {
                let pulse = framelab_core::control::SinSquaredPulse {
                    area: *area,
                    duration: *duration,
                };
                let params = LambdaParams {
                    rabi: Arc::new(move |t| pulse.amplitude(t)),
                    theta: *theta,
                    phi: *phi,
                    delta0: *delta0,
                    delta1: *delta1,
                };
                lambda_schedule(params, *duration)
            }
            ScheduleConfig::Free { duration } => {
                free_evolution(GeneratorBasis::pauli(), *duration)
            }
        }
    }

    pub fn nu_profile(&self, amplitude: f64) -> Result<NuProfile> {
        let period = self.pulse_duration();
        let tf = self.transform.as_ref().ok_or_else(|| {
            Error::Validation("this command needs a [transform] section".into())
        })?;
        match tf.profile {
            ProfileKind::SinSquared => NuProfile::sin_squared(amplitude, period),
            ProfileKind::Sampled => {
                let values = tf.values.clone().ok_or_else(|| {
                    Error::Validation("sampled profile needs a `values` array".into())
                })?;
                NuProfile::from_samples(values, period)
            }
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        let base = self.build_base()?;
        let basis = base.basis().clone();

        let frame = match &self.transform {
            None => None,
            Some(tf) => {
                let nu = self.nu_profile(tf.amplitude)?;
                let axis = match tf.kind {
                    TransformKind::ZAxis => 2,
                    TransformKind::XAxis => 0,
                };
                Some(FrameTransform::along_axis(
                    axis,
                    nu,
                    basis.clone(),
                    self.pulse_duration(),
                )?)
            }
        };
        let transformed = match &frame {
            Some(f) => Some(transform_schedule(&base, f)?),
            None => None,
        };

        let norm = match self.channels.normalization {
            NormalizationConfig::Derivative => Normalization::Derivative,
            NormalizationConfig::Compat => Normalization::Compat,
        };
        let mut channels = match self.channels.standard {
            StandardChannels::None => Vec::new(),
            StandardChannels::Su2 => {
                if basis.dim() != 2 {
                    return Err(Error::Validation(
                        "su2 channel set on a non-two-level schedule".into(),
                    ));
                }
                su2_standard_channels(norm)
            }
            StandardChannels::Su3 => {
                if basis.dim() != 3 {
                    return Err(Error::Validation(
                        "su3 channel set on a non-three-level schedule".into(),
                    ));
                }
                su3_standard_channels(norm)
            }
        };
        let mut unused: Vec<&String> = self
            .channels
            .psd
            .keys()
            .filter(|label| !channels.iter().any(|c| &&c.label == label))
            .collect();
        if let Some(label) = unused.pop() {
            return Err(Error::Validation(format!(
                "psd entry '{label}' does not match any declared channel"
            )));
        }
        for ch in &mut channels {
            if let Some(psd) = self.channels.psd.get(&ch.label) {
                *ch = ch.clone().with_psd(psd.clone().into())?;
            }
        }

        Ok(Scenario {
            name: self.name.clone(),
            base,
            transformed,
            frame,
            channels,
            config: self.clone(),
        })
    }

    fn build_state(&self, dim: usize) -> Result<Array1<Complex64>> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self.state.preset {
            StatePreset::PlusX => {
                if dim != 2 {
                    return Err(Error::Validation(
                        "state preset plus-x needs a two-level schedule".into(),
                    ));
                }
                Ok(Array1::from(vec![
                    Complex64::new(r, 0.0),
                    Complex64::new(r, 0.0),
                ]))
            }
            StatePreset::MinusX => {
                if dim != 2 {
                    return Err(Error::Validation(
                        "state preset minus-x needs a two-level schedule".into(),
                    ));
                }
                Ok(Array1::from(vec![
                    Complex64::new(r, 0.0),
                    Complex64::new(-r, 0.0),
                ]))
            }
            StatePreset::Custom => {
                let amps = self.state.amplitudes.as_ref().ok_or_else(|| {
                    Error::Validation("custom state needs an `amplitudes` list".into())
                })?;
                if amps.len() != dim {
                    return Err(Error::Validation(format!(
                        "custom state has {} amplitudes, Hilbert space is {dim}",
                        amps.len()
                    )));
                }
                let v = Array1::from_iter(amps.iter().map(|[re, im]| Complex64::new(*re, *im)));
                let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if n < 1e-12 {
                    return Err(Error::Validation("custom state has zero norm".into()));
                }
                Ok(v.mapv(|z| z / n))
            }
        }
    }
}

impl Scenario {
    /// The cyclic state used by phase and path commands; validated against
    /// the schedule's Hilbert-space dimension on demand.
    pub fn state(&self) -> Result<Array1<Complex64>> {
        self.config.build_state(self.base.basis().dim())
    }

    /// Frequency grid per config (with optional CLI overrides applied by
    /// the caller through `grid_override`).
    pub fn frequency_grid(&self, points_override: Option<usize>) -> Vec<f64> {
        let points = points_override.unwrap_or(self.config.grid.frequency_points);
        let max = if self.config.grid.frequency_max > 0.0 {
            self.config.grid.frequency_max
        } else {
            50.0 / self.base.duration()
        };
        framelab_core::filterfn::symmetric_grid(max, points)
    }

    pub fn require_channels(&self) -> Result<&[NoiseChannel]> {
        if self.channels.is_empty() {
            return Err(Error::Validation("no channels declared".into()));
        }
        Ok(&self.channels)
    }

    pub fn schedule_kind(&self) -> &'static str {
        match &self.config.schedule {
            ScheduleConfig::OrangeSlice { .. } => "orange-slice",
            ScheduleConfig::Su2Constant { .. } => "su2-constant",
            ScheduleConfig::Lambda { .. } => "lambda",
            ScheduleConfig::Free { .. } => "free",
        }
    }
}
