//! Numerical laboratory for control-pulse noise sensitivity.
//!
//! The crate propagates deterministic su(N) control schedules, computes
//! first-order filter functions against declared noise channels, applies
//! identity-endpoint frame transformations that trade geometric phase for
//! dynamical phase while leaving the final gate and every filter function
//! unchanged, and validates the spectral infidelity estimate against Monte
//! Carlo ensembles.
//!
//! Module map:
//!
//! * [`algebra`] - su(N) generator bases, structure constants, adjoints;
//! * [`control`] - deterministic control schedules h_c(t);
//! * [`propagation`] - time-ordered propagators and adjoint trajectories;
//! * [`noise`] - noise channels (sensitivities plus spectral densities);
//! * [`filterfn`] - filter functions and the infidelity integral;
//! * [`equivalence`] - frame transformations, sufficiency conditions, and
//!   gate/filter-function invariance reports;
//! * [`phases`] - geometric/dynamical phase bookkeeping, Abelian and
//!   non-Abelian;
//! * [`calibrate`] - scalar root finding on the frame-angle amplitude;
//! * [`montecarlo`] - stochastic trajectory synthesis and ensemble
//!   infidelity validation.

pub mod algebra;
pub mod calibrate;
pub mod control;
pub mod equivalence;
pub mod error;
pub mod filterfn;
pub mod linalg;
pub mod montecarlo;
pub mod noise;
pub mod phases;
pub mod propagation;

pub use algebra::{adjoint_generator, adjoint_of, GeneratorBasis};
pub use control::{ControlSchedule, Envelope, LambdaParams, NuProfile, Su2Params};
pub use error::{Error, Result};
pub use filterfn::{avg_infidelity, filter_function, FilterFunctionResult};
pub use noise::{sensitivity, NoiseChannel, Normalization, Psd};
pub use propagation::{gate_distance, propagate, propagate_noisy, Stepper, Trajectory};
