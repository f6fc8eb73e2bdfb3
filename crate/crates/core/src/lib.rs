//! Photon-number filtering of a single cavity mode by atoms that cross it
//! with a time-dependent coupling.
//!
//! Each atom enters in its lower level, interacts with the mode through a
//! pulse `g(t)` at constant detuning, and is detected on exit. Because the
//! Jaynes-Cummings dynamics splits into independent two-level blocks labelled
//! by the excitation number `n`, the detection multiplies the photon-number
//! distribution by a *filter function* `|a-(n)|^2` (or `|a+(n)|^2`).
//!
//! - [`pulses`]: coupling shapes, areas and area normalization.
//! - [`dynamics`]: per-block RK4 integration and closed-form filters.
//! - [`field`]: photon distributions and measurement updates.
//! - [`stats`]: moments and the Mandel Q-parameter.
//! - [`experiments`]: config-driven experiment runs and file output.

pub mod dynamics;
pub mod experiments;
pub mod field;
pub mod par;
pub mod pulses;
pub mod quad;
pub mod stats;

pub use dynamics::{
    analytic_rosen_zener, analytic_zero_detuning, filter_function, filter_function_with,
    integrate_block, rz_maxima, BlockAmplitudes, Branch, DetunedDrive, DynamicsError,
    FilterFunction, FilterSource, StepControl,
};
pub use field::{
    apply_measurement, apply_sequence, poisson_distribution, post_select_lower, FieldError,
    MeasurementOutcome, PhotonDistribution,
};
pub use par::Execution;
pub use pulses::{ make_appendix_suite, make_microwave, PulseArea, PulseError, PulseKind, PulseShape };
pub use stats::{ classify, moments, DistributionStats, PhotonStatistics, StatsError };
