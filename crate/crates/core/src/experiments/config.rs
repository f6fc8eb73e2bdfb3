//! Experiment configuration files.
//!
//! A config is a TOML document with a required `kind` and any subset of the
//! parameters below; omitted fields take the per-kind defaults of
//! [`ExperimentConfig::defaults`]. Unknown keys are rejected.

use std::{ fmt, path::PathBuf, str::FromStr };
use serde::{ Deserialize, Serialize };
use crate::dynamics::StepControl;
use super::ExperimentError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FilterCurves,
    #[serde(rename = "sharpen")]
    SharpeningSequence,
    QSweep,
    DetuningSensitivity,
    Feasibility,
}

impl ExperimentKind {
    pub const ALL: [Self; 5] = [
        Self::FilterCurves,
        Self::SharpeningSequence,
        Self::QSweep,
        Self::DetuningSensitivity,
        Self::Feasibility,
    ];

    /// Name used for the CLI subcommand and the `kind` key.
    pub fn name(self) -> &'static str {
        match self {
            Self::FilterCurves => "filter-curves",
            Self::SharpeningSequence => "sharpen",
            Self::QSweep => "q-sweep",
            Self::DetuningSensitivity => "detuning-sensitivity",
            Self::Feasibility => "feasibility",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => {
                let step = (self.stop - self.start) / (n - 1) as f64;
                (0..n)
                    .map(|k| if k + 1 == n { self.stop } else { self.start + step * k as f64 })
                    .collect()
            }
        }
    }

    fn validate(&self, name: &str) -> Result<(), ExperimentError> {
        if self.points == 0 {
            return Err(ExperimentError::Config(format!("{name}: grid is empty")));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(ExperimentError::Config(format!("{name}: non-finite bounds")));
        }
        Ok(())
    }
}

/// Complete description of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Coupling amplitude `g0` (before any `l` rescaling).
    pub g0: f64,
    /// Rosen-Zener time scale `T`; also fixes `kv = 2 / (pi T)` for the
    /// microwave pulses and the common area `pi T g0`.
    #[serde(rename = "T")]
    pub t_width: f64,
    /// Constant detuning `dw`.
    pub delta_omega: f64,
    /// Half-wavelength indices drawn as separate filter curves.
    pub l_values: Vec<u32>,
    /// Half-wavelength index of the filter used by `sharpen` and `q-sweep`.
    pub l: u32,
    /// Mean photon number of the initial Poissonian field.
    pub mean_photons: f64,
    /// Numbers of lower-level detections `m` to report.
    pub atom_counts: Vec<u32>,
    /// Coupling amplitudes for `q-sweep`.
    pub g0_grid: Grid,
    /// Detunings for `detuning-sensitivity`.
    pub delta_omega_grid: Grid,
    /// Excitation block probed by `detuning-sensitivity`.
    pub probe_n: usize,
    /// Fock-basis truncation. Filter curves default to 100; field runs default
    /// to `ceil(mean + 10 sqrt(mean))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    pub numerics: StepControl,
    /// Atom speed `v` in m/s.
    pub atom_speed: f64,
    /// Mode frequency `nu` in Hz.
    pub mode_frequency: f64,
    /// Cavity loss time in s.
    pub loss_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Same fields as [`ExperimentConfig`], all optional except `kind`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    kind: Option<ExperimentKind>,
    g0: Option<f64>,
    #[serde(rename = "T")]
    t_width: Option<f64>,
    delta_omega: Option<f64>,
    l_values: Option<Vec<u32>>,
    l: Option<u32>,
    mean_photons: Option<f64>,
    atom_counts: Option<Vec<u32>>,
    g0_grid: Option<Grid>,
    delta_omega_grid: Option<Grid>,
    probe_n: Option<usize>,
    n_max: Option<usize>,
    numerics: Option<StepControl>,
    atom_speed: Option<f64>,
    mode_frequency: Option<f64>,
    loss_time: Option<f64>,
    output_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $raw:ident, $($field:ident),* $(,)?) => {
        $( if let Some(v) = $raw.$field { $cfg.$field = v; } )*
    };
}

impl ExperimentConfig {
    /// Default parameter set for each kind.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            kind,
            g0: 5.0,
            t_width: 0.1,
            delta_omega: 0.5,
            l_values: vec![1, 2, 3],
            l: 1,
            mean_photons: 16.0,
            atom_counts: vec![0, 1, 5, 25],
            g0_grid: Grid::new(1.0, 10.0, 40),
            delta_omega_grid: Grid::new(0.0, 5.0, 11),
            probe_n: 49,
            n_max: None,
            numerics: StepControl::default(),
            atom_speed: 300.0,
            mode_frequency: 50e9,
            loss_time: 0.3,
            output_dir: None,
        };
        match kind {
            ExperimentKind::FilterCurves => cfg.n_max = Some(100),
            ExperimentKind::QSweep => {
                cfg.mean_photons = 20.0;
                cfg.atom_counts = vec![25];
            }
            ExperimentKind::SharpeningSequence
            | ExperimentKind::DetuningSensitivity
            | ExperimentKind::Feasibility => {}
        }
        cfg
    }

    /// Parse a TOML config. `fallback_kind` is used when the file has no
    /// `kind` key; if both are given they must agree.
    pub fn from_toml_str(text: &str, fallback_kind: Option<ExperimentKind>) -> Result<Self, ExperimentError> {
        let raw: PartialConfig = toml::from_str(text)?;
        let kind = match (raw.kind, fallback_kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(ExperimentError::Config(format!("config is for `{a}`, not `{b}`")));
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(ExperimentError::Config("missing `kind`".into())),
        };
        let mut cfg = Self::defaults(kind);
        overlay!(
            cfg, raw, g0, t_width, delta_omega, l_values, l, mean_photons, atom_counts, g0_grid,
            delta_omega_grid, probe_n, numerics, atom_speed, mode_frequency, loss_time,
        );
        if raw.n_max.is_some() {
            cfg.n_max = raw.n_max;
        }
        if raw.output_dir.is_some() {
            cfg.output_dir = raw.output_dir;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, ExperimentError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ExperimentError::Config(format!("`{name}` must be positive, got {v}")))
            }
        };
        positive("g0", self.g0)?;
        positive("T", self.t_width)?;
        positive("atom_speed", self.atom_speed)?;
        positive("mode_frequency", self.mode_frequency)?;
        positive("loss_time", self.loss_time)?;
        if !self.delta_omega.is_finite() {
            return Err(ExperimentError::Config("`delta_omega` must be finite".into()));
        }
        if !(self.mean_photons.is_finite() && self.mean_photons >= 0.0) {
            return Err(ExperimentError::Config(format!("`mean_photons` = {}", self.mean_photons)));
        }
        if self.l_values.is_empty() || self.l_values.contains(&0) || self.l == 0 {
            return Err(ExperimentError::Config("half-wavelength indices must be >= 1".into()));
        }
        if self.atom_counts.is_empty() {
            return Err(ExperimentError::Config("`atom_counts` is empty".into()));
        }
        self.g0_grid.validate("g0_grid")?;
        if self.g0_grid.start <= 0.0 || self.g0_grid.stop <= 0.0 {
            return Err(ExperimentError::Config("`g0_grid` must be positive".into()));
        }
        self.delta_omega_grid.validate("delta_omega_grid")?;
        if self.probe_n == 0 {
            return Err(ExperimentError::Config("`probe_n` must be >= 1".into()));
        }
        if self.n_max == Some(0) {
            return Err(ExperimentError::Config("`n_max` must be >= 1".into()));
        }
        self.numerics.validate()?;
        Ok(())
    }
}
