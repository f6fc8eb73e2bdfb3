//! Experiments: filter curves, multi-atom sharpening, the
//! Mandel-Q sweep, pulse-shape detuning sensitivity and the transit-time
//! estimate.
//!
//! Each experiment has a pure `compute` step returning typed results and a
//! [`run`] entry point that renders them to delimited text, gnuplot scripts
//! and a hashed manifest under an output directory.

mod config;
mod output;

use std::{ collections::BTreeMap, f64::consts::PI, io, path::Path, time::Instant };
use serde::{ Deserialize, Serialize };
use thiserror::Error;
use crate::{
    dynamics::{
        self, analytic_rosen_zener, filter_function_with, rz_maxima, Branch, BlockAmplitudes,
        DetunedDrive, DynamicsError, FilterFunction,
    },
    field::{ self, apply_measurement, FieldError, MeasurementOutcome, PhotonDistribution },
    par::{ self, Execution },
    pulses::{ make_appendix_suite, rescaled_microwave, PulseError, PulseKind, PulseShape },
    stats::{ moments, DistributionStats, StatsError },
};

pub use config::{ ExperimentConfig, ExperimentKind, Grid };
pub use output::{
    read_rows, FeasibilityRow, ManifestEntry, QSweepRow, RunRecord, SensitivityRow, StatsRow,
};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("config syntax: {0}")]
    ConfigSyntax(#[from] toml::de::Error),
    #[error("config snapshot: {0}")]
    ConfigSnapshot(#[from] toml::ser::Error),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("table: {0}")]
    Csv(#[from] csv::Error),
    #[error("run record: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Integrator outcome for one computed filter or probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFlag {
    pub label: String,
    pub converged: bool,
    pub max_richardson_delta: Option<f64>,
    pub max_norm_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ConvergenceFlag {
    fn from_filter(label: &str, result: &Result<FilterFunction, DynamicsError>) -> Self {
        match result {
            Ok(f) => {
                let d = f.diagnostics().copied().unwrap_or_default();
                Self {
                    label: label.to_string(),
                    converged: true,
                    max_richardson_delta: Some(d.max_richardson_delta),
                    max_norm_error: Some(d.max_norm_error),
                    message: None,
                }
            }
            Err(e) => Self::failed(label, e),
        }
    }

    fn failed(label: &str, err: &dyn std::fmt::Display) -> Self {
        Self {
            label: label.to_string(),
            converged: false,
            max_richardson_delta: None,
            max_norm_error: None,
            message: Some(err.to_string()),
        }
    }
}

/// Microwave pulse with the `g0 * l` rescaling and area-matched `kv`.
pub fn microwave_for(cfg: &ExperimentConfig, g0: f64, l: u32) -> Result<PulseShape, PulseError> {
    rescaled_microwave(g0, cfg.t_width, l)
}

fn field_n_max(cfg: &ExperimentConfig) -> usize {
    cfg.n_max.unwrap_or_else(|| field::default_n_max(cfg.mean_photons))
}

// ---------------------------------------------------------------------------
// filter curves

/// One curve of the filter-function comparison.
#[derive(Debug)]
pub struct FilterCurve {
    pub label: String,
    pub filter: Result<FilterFunction, DynamicsError>,
}

/// Rosen-Zener (closed form and numeric) and rescaled microwave filters for
/// every `l` in `cfg.l_values`, all at `cfg.delta_omega`.
pub fn filter_curves(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<FilterCurve>, ExperimentError> {
    let n_max = cfg.n_max.unwrap_or(100);
    let mut drives = vec![(
        "rz-numeric".to_string(),
        DetunedDrive::new(PulseShape::rosen_zener(cfg.g0, cfg.t_width)?, cfg.delta_omega)?,
    )];
    for &l in &cfg.l_values {
        let pulse = microwave_for(cfg, cfg.g0, l)?;
        drives.push((format!("microwave-l{l}"), DetunedDrive::new(pulse, cfg.delta_omega)?));
    }
    let mut curves = vec![FilterCurve {
        label: "rz-analytic".into(),
        filter: analytic_rosen_zener(cfg.g0, cfg.t_width, cfg.delta_omega, n_max),
    }];
    curves.extend(drives.into_iter().map(|(label, drive)| FilterCurve {
        filter: filter_function_with(&drive, n_max, Branch::Lower, &cfg.numerics, exec),
        label,
    }));
    Ok(curves)
}

// ---------------------------------------------------------------------------
// sharpening

#[derive(Clone, Debug)]
pub struct SharpeningStep {
    pub atoms: u32,
    pub distribution: PhotonDistribution,
    pub stats: DistributionStats,
    /// Probability that all `atoms` transits were detected in the lower level.
    pub probability: f64,
}

#[derive(Clone, Debug)]
pub struct Sharpening {
    pub filter: FilterFunction,
    pub initial: PhotonDistribution,
    /// One entry per requested atom count, in ascending order.
    pub steps: Vec<SharpeningStep>,
    pub warnings: Vec<String>,
}

/// Poissonian field conditioned on `m` lower-level detections for each `m`
/// in `cfg.atom_counts`, using the microwave filter with `cfg.l`.
pub fn sharpening(cfg: &ExperimentConfig, exec: Execution) -> Result<Sharpening, ExperimentError> {
    let n_max = field_n_max(cfg);
    let pulse = microwave_for(cfg, cfg.g0, cfg.l)?;
    let mut warnings = Vec::new();
    // filter maxima sit at sqrt(n) |A| = k pi, i.e. T g0 -> |A| / pi
    let tg = pulse.area().value.abs() / PI;
    if tg > 0.0 {
        let k = (cfg.mean_photons.sqrt() * tg).round() as u32;
        let peak = rz_maxima(tg, 1.0, k);
        if (cfg.mean_photons - peak.location).abs() > 0.5 * peak.width {
            warnings.push(format!(
                "mean photon number {} is off the nearest filter maximum n_M = {} (width {})",
                cfg.mean_photons, peak.location, peak.width
            ));
        }
    }
    let drive = DetunedDrive::new(pulse, cfg.delta_omega)?;
    let filter = filter_function_with(&drive, n_max, Branch::Lower, &cfg.numerics, exec)?;
    let initial = field::poisson_distribution(cfg.mean_photons, n_max)?;

    let mut counts = cfg.atom_counts.clone();
    counts.sort_unstable();
    counts.dedup();
    let mut steps = Vec::with_capacity(counts.len());
    let mut current = initial.clone();
    let mut done = 0;
    let mut probability = 1.0;
    for m in counts {
        while done < m {
            let (next, p) = apply_measurement(&current, &filter, MeasurementOutcome::Lower)?;
            current = next;
            probability *= p;
            done += 1;
        }
        steps.push(SharpeningStep {
            atoms: m,
            stats: moments(&current)?,
            distribution: current.clone(),
            probability,
        });
    }
    Ok(Sharpening { filter, initial, steps, warnings })
}

// ---------------------------------------------------------------------------
// Q sweep

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    Ok,
    /// The all-lower record has zero probability under this filter.
    Impossible,
    NonConvergence,
}

#[derive(Clone, Debug)]
pub struct QPoint {
    pub g0: f64,
    pub atoms: u32,
    pub status: PointStatus,
    pub stats: Option<DistributionStats>,
}

#[derive(Clone, Debug)]
pub struct QSweep {
    pub points: Vec<QPoint>,
    pub convergence: Vec<ConvergenceFlag>,
}

impl QSweep {
    /// Grid point with the most negative Q for `atoms` detections.
    pub fn optimum(&self, atoms: u32) -> Option<&QPoint> {
        self.points
            .iter()
            .filter(|p| p.atoms == atoms)
            .filter_map(|p| p.stats.map(|s| (p, s.mandel_q)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, _)| p)
    }

    /// `(g0, Q)` for every resolved point with `atoms` detections.
    pub fn curve(&self, atoms: u32) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.atoms == atoms)
            .filter_map(|p| p.stats.map(|s| (p.g0, s.mandel_q)))
            .collect()
    }
}

/// Mandel Q after `m` lower detections (each `m` in `cfg.atom_counts`) as a
/// function of `g0`, with a freshly computed filter per grid point.
pub fn q_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<QSweep, ExperimentError> {
    let n_max = field_n_max(cfg);
    let initial = field::poisson_distribution(cfg.mean_photons, n_max)?;
    let grid = cfg.g0_grid.values();
    let drives = grid
        .iter()
        .map(|&g0| Ok(DetunedDrive::new(microwave_for(cfg, g0, cfg.l)?, cfg.delta_omega)?))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    // parallel over the grid; each filter runs its blocks sequentially
    let filters = par::map_slice(exec, &drives, |drive| {
        filter_function_with(drive, n_max, Branch::Lower, &cfg.numerics, Execution::Sequential)
    });
    let mut points = Vec::new();
    let mut convergence = Vec::new();
    for (&g0, filter) in grid.iter().zip(&filters) {
        convergence.push(ConvergenceFlag::from_filter(&format!("g0={g0}"), filter));
        for &m in &cfg.atom_counts {
            let (status, stats) = match filter {
                Err(_) => (PointStatus::NonConvergence, None),
                Ok(f) => match field::post_select_lower(&initial, f, m) {
                    Ok(d) => match moments(&d) {
                        Ok(s) => (PointStatus::Ok, Some(s)),
                        Err(StatsError::UndefinedQ) => (PointStatus::Impossible, None),
                    },
                    Err(FieldError::ImpossibleOutcome) => (PointStatus::Impossible, None),
                    Err(e) => return Err(e.into()),
                },
            };
            points.push(QPoint { g0, atoms: m, status, stats });
        }
    }
    Ok(QSweep { points, convergence })
}

// ---------------------------------------------------------------------------
// detuning sensitivity

#[derive(Clone, Debug)]
pub struct SensitivityPoint {
    pub pulse: PulseKind,
    pub delta_omega: f64,
    pub p_minus: Option<f64>,
    /// `p_minus(dw) - p_minus(0)` at the probed block.
    pub shift: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Sensitivity {
    pub probe_n: usize,
    pub baselines: Vec<(PulseKind, f64)>,
    pub points: Vec<SensitivityPoint>,
    pub convergence: Vec<ConvergenceFlag>,
}

impl Sensitivity {
    pub fn shift(&self, pulse: PulseKind, delta_omega: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.pulse == pulse && p.delta_omega == delta_omega)
            .and_then(|p| p.shift)
    }

    /// Pulse kinds sorted by increasing shift at `delta_omega`.
    pub fn ranking(&self, delta_omega: f64) -> Vec<(PulseKind, f64)> {
        let mut ranked: Vec<_> = self
            .points
            .iter()
            .filter(|p| p.delta_omega == delta_omega)
            .filter_map(|p| p.shift.map(|s| (p.pulse, s)))
            .collect();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
        ranked
    }
}

fn probe(drive: &DetunedDrive, n: usize, cfg: &ExperimentConfig) -> Result<(f64, f64, f64), DynamicsError> {
    let r = dynamics::integrate_block_report(drive, n, BlockAmplitudes::lower(n), &cfg.numerics)?;
    Ok((r.amplitudes.p_minus(), r.richardson_delta, r.norm_error))
}

/// Lower-level survival at block `cfg.probe_n` for the five area-normalized
/// comparison pulses over `cfg.delta_omega_grid`, and its shift from the
/// resonant value.
pub fn detuning_sensitivity(cfg: &ExperimentConfig, exec: Execution) -> Result<Sensitivity, ExperimentError> {
    let suite = make_appendix_suite(cfg.g0, cfg.t_width)?;
    let grid = cfg.delta_omega_grid.values();
    let mut tasks = Vec::new();
    for pulse in &suite {
        tasks.push((pulse, 0.0));
        tasks.extend(grid.iter().map(|&dw| (pulse, dw)));
    }
    let results = par::map_slice(exec, &tasks, |&(pulse, dw)| {
        DetunedDrive::new(pulse.clone(), dw).and_then(|d| probe(&d, cfg.probe_n, cfg))
    });

    let mut baselines = Vec::new();
    let mut points = Vec::new();
    let mut convergence = Vec::new();
    let mut results = results.into_iter();
    for pulse in &suite {
        let kind = pulse.kind();
        let base = results.next().expect("one baseline per pulse");
        let base_value = match &base {
            Ok((p, ..)) => Some(*p),
            Err(e) => {
                convergence.push(ConvergenceFlag::failed(&format!("{kind} dw=0"), e));
                None
            }
        };
        if let Some(b) = base_value {
            baselines.push((kind, b));
        }
        for &dw in &grid {
            let result = results.next().expect("one result per grid point");
            let label = format!("{kind} dw={dw}");
            let p_minus = match result {
                Ok((p, delta, norm)) => {
                    convergence.push(ConvergenceFlag {
                        label,
                        converged: true,
                        max_richardson_delta: Some(delta),
                        max_norm_error: Some(norm),
                        message: None,
                    });
                    Some(p)
                }
                Err(e) => {
                    convergence.push(ConvergenceFlag::failed(&label, &e));
                    None
                }
            };
            let shift = p_minus.zip(base_value).map(|(p, b)| p - b);
            points.push(SensitivityPoint { pulse: kind, delta_omega: dw, p_minus, shift });
        }
    }
    Ok(Sensitivity { probe_n: cfg.probe_n, baselines, points, convergence })
}

// ---------------------------------------------------------------------------
// feasibility

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    /// Mode wavenumber `k = 2 pi nu / c` in 1/m.
    pub wavenumber: f64,
    /// Transit time `pi / (k v)` in s.
    pub interaction_time: f64,
    pub loss_time: f64,
    /// `interaction_time / loss_time`.
    pub ratio: f64,
}

/// Atom transit time through the mode for speed `atom_speed` (m/s) and mode
/// frequency `mode_frequency` (Hz), compared with the cavity loss time.
pub fn feasibility(atom_speed: f64, mode_frequency: f64, loss_time: f64) -> Result<Feasibility, ExperimentError> {
    for (name, v) in [("atom_speed", atom_speed), ("mode_frequency", mode_frequency), ("loss_time", loss_time)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(ExperimentError::Config(format!("`{name}` must be positive, got {v}")));
        }
    }
    let wavenumber = 2.0 * PI * mode_frequency / SPEED_OF_LIGHT;
    let interaction_time = PI / (wavenumber * atom_speed);
    Ok(Feasibility { wavenumber, interaction_time, loss_time, ratio: interaction_time / loss_time })
}

// ---------------------------------------------------------------------------

/// Run `cfg` and write its outputs into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, exec: Execution) -> Result<RunRecord, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();
    let rendered = match cfg.kind {
        ExperimentKind::FilterCurves => output::render_filter_curves(cfg, &filter_curves(cfg, exec)?)?,
        ExperimentKind::SharpeningSequence => output::render_sharpening(&sharpening(cfg, exec)?)?,
        ExperimentKind::QSweep => output::render_q_sweep(&q_sweep(cfg, exec)?)?,
        ExperimentKind::DetuningSensitivity => {
            output::render_sensitivity(&detuning_sensitivity(cfg, exec)?)?
        }
        ExperimentKind::Feasibility => output::render_feasibility(
            cfg,
            &feasibility(cfg.atom_speed, cfg.mode_frequency, cfg.loss_time)?,
        )?,
    };
    output::write_run(cfg, out_dir, rendered, started.elapsed().as_secs_f64())
}

/// Collected summary numbers for a run record.
pub(crate) type Summary = BTreeMap<String, f64>;
