//! Two-level dynamics inside one excitation block and the resulting photon
//! filter functions.
//!
//! Block `n` couples `|n-1, +>` to `|n, ->` with rate `g(t) sqrt(n)` and a
//! constant detuning. Blocks never mix, so each is a 2x2 Schrödinger equation
//! integrated independently with classic fourth-order Runge-Kutta.

use std::{ f64::consts::PI, io };
use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };
use thiserror::Error;
use crate::{
    par::{ self, Execution },
    pulses::PulseShape,
};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("block n={n}: step halving moved |a-|^2 by {delta:e} (tolerance {tolerance:e})")]
    NonConvergence { n: usize, delta: f64, tolerance: f64 },
    #[error("initial amplitudes have norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("invalid parameter `{name}`: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("invalid filter function: {0}")]
    InvalidFilter(String),
    #[error("filter table i/o: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Amplitudes `(a+(n), a-(n))` of block `n`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BlockAmplitudes {
    pub a_plus: C64,
    pub a_minus: C64,
    pub n: usize,
}

impl BlockAmplitudes {
    /// Atom in the lower level: `a- = 1, a+ = 0`.
    pub fn lower(n: usize) -> Self {
        Self { a_plus: C64::new(0.0, 0.0), a_minus: C64::new(1.0, 0.0), n }
    }

    /// Atom in the upper level: `a+ = 1, a- = 0`.
    pub fn upper(n: usize) -> Self {
        Self { a_plus: C64::new(1.0, 0.0), a_minus: C64::new(0.0, 0.0), n }
    }

    pub fn p_plus(&self) -> f64 {
        self.a_plus.norm_sqr()
    }

    pub fn p_minus(&self) -> f64 {
        self.a_minus.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.p_plus() + self.p_minus()
    }
}

/// A pulse together with its constant detuning `dw = omega_atom - omega_mode`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetunedDrive {
    pub delta_omega: f64,
    pub pulse: PulseShape,
}

impl DetunedDrive {
    pub fn new(pulse: PulseShape, delta_omega: f64) -> Result<Self, DynamicsError> {
        if !delta_omega.is_finite() {
            return Err(DynamicsError::InvalidParameter { name: "delta_omega", value: delta_omega });
        }
        Ok(Self { delta_omega, pulse })
    }
}

/// Fixed-step control for the RK4 integrator.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    /// Upper bound on `omega_max * dt`, where `omega_max` is the larger of
    /// `|dw| / 2` and the peak coupling `g_peak sqrt(n)` of the block.
    pub max_phase_step: f64,
    /// Largest allowed change of `|a-|^2` when the step is halved.
    pub tolerance: f64,
    /// Floor on the number of steps across the support.
    pub min_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { max_phase_step: 0.01, tolerance: 1e-7, min_steps: 256 }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.max_phase_step.is_finite() && self.max_phase_step > 0.0) {
            return Err(DynamicsError::InvalidParameter {
                name: "max_phase_step",
                value: self.max_phase_step,
            });
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(DynamicsError::InvalidParameter { name: "tolerance", value: self.tolerance });
        }
        if self.min_steps == 0 {
            return Err(DynamicsError::InvalidParameter { name: "min_steps", value: 0.0 });
        }
        Ok(())
    }

    fn steps_for(&self, drive: &DetunedDrive, n: usize) -> usize {
        let coupling = drive.pulse.peak() * (n as f64).sqrt();
        let omega = (0.5 * drive.delta_omega.abs()).max(coupling);
        let duration = drive.pulse.support().duration();
        let steps = (duration * omega / self.max_phase_step).ceil();
        (steps as usize).max(self.min_steps)
    }
}

/// Result of integrating one block, with the integrator's own diagnostics.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BlockReport {
    pub amplitudes: BlockAmplitudes,
    /// Steps used for the reported (finer) solution.
    pub steps: usize,
    /// `| |a-|^2(dt) - |a-|^2(dt/2) |`.
    pub richardson_delta: f64,
    /// `| |a+|^2 + |a-|^2 - 1 |` of the reported solution.
    pub norm_error: f64,
}

/// Integrate block `n` from the start to the end of the pulse support.
pub fn integrate_block(
    drive: &DetunedDrive,
    n: usize,
    init: BlockAmplitudes,
    ctrl: &StepControl,
) -> Result<BlockAmplitudes, DynamicsError> {
    integrate_block_report(drive, n, init, ctrl).map(|r| r.amplitudes)
}

/// As [`integrate_block`], returning step-halving and unitarity diagnostics.
///
/// The block is integrated at step `dt` and again at `dt / 2`; the finer
/// solution is returned. If the two disagree on `|a-|^2` by more than
/// `ctrl.tolerance` the call fails with [`DynamicsError::NonConvergence`].
pub fn integrate_block_report(
    drive: &DetunedDrive,
    n: usize,
    init: BlockAmplitudes,
    ctrl: &StepControl,
) -> Result<BlockReport, DynamicsError> {
    ctrl.validate()?;
    let norm = init.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(DynamicsError::NotNormalized(norm));
    }
    let support = drive.pulse.support();
    if n == 0 {
        // |0,-> has no partner; only the detuning phase evolves.
        let phase = 0.5 * drive.delta_omega * support.duration();
        let amplitudes = BlockAmplitudes {
            a_plus: init.a_plus * C64::from_polar(1.0, -phase),
            a_minus: init.a_minus * C64::from_polar(1.0, phase),
            n,
        };
        return Ok(BlockReport {
            amplitudes,
            steps: 0,
            richardson_delta: 0.0,
            norm_error: (amplitudes.norm_sqr() - 1.0).abs(),
        });
    }
    let coarse_steps = ctrl.steps_for(drive, n);
    let coarse = rk4(drive, n, [init.a_plus, init.a_minus], coarse_steps);
    let fine = rk4(drive, n, [init.a_plus, init.a_minus], 2 * coarse_steps);
    let delta = (coarse[1].norm_sqr() - fine[1].norm_sqr()).abs();
    if delta.is_nan() || delta > ctrl.tolerance {
        return Err(DynamicsError::NonConvergence { n, delta, tolerance: ctrl.tolerance });
    }
    let amplitudes = BlockAmplitudes { a_plus: fine[0], a_minus: fine[1], n };
    Ok(BlockReport {
        amplitudes,
        steps: 2 * coarse_steps,
        richardson_delta: delta,
        norm_error: (amplitudes.norm_sqr() - 1.0).abs(),
    })
}

/// Classic RK4 for `i d/dt (a+, a-) = [[dw/2, c], [c, -dw/2]] (a+, a-)` with
/// `c = g(t) sqrt(n)`.
fn rk4(drive: &DetunedDrive, n: usize, init: [C64; 2], steps: usize) -> [C64; 2] {
    let support = drive.pulse.support();
    let h = support.duration() / steps as f64;
    let half_dw = 0.5 * drive.delta_omega;
    let root_n = (n as f64).sqrt();
    let coupling = |t: f64| drive.pulse.eval(t) * root_n;
    // -i H y
    let deriv = |c: f64, y: [C64; 2]| -> [C64; 2] {
        let p = y[0] * half_dw + y[1] * c;
        let m = y[0] * c - y[1] * half_dw;
        [C64::new(p.im, -p.re), C64::new(m.im, -m.re)]
    };
    let axpy = |y: [C64; 2], a: f64, k: [C64; 2]| [y[0] + k[0] * a, y[1] + k[1] * a];

    let mut y = init;
    let mut c_left = coupling(support.start);
    for step in 0..steps {
        let t = support.start + h * step as f64;
        let t_right = if step + 1 == steps { support.end } else { support.start + h * (step + 1) as f64 };
        let c_mid = coupling(t + 0.5 * h);
        let c_right = coupling(t_right);
        let k1 = deriv(c_left, y);
        let k2 = deriv(c_mid, axpy(y, 0.5 * h, k1));
        let k3 = deriv(c_mid, axpy(y, 0.5 * h, k2));
        let k4 = deriv(c_right, axpy(y, h, k3));
        let w = h / 6.0;
        y = [
            y[0] + (k1[0] + (k2[0] + k3[0]) * 2.0 + k4[0]) * w,
            y[1] + (k1[1] + (k2[1] + k3[1]) * 2.0 + k4[1]) * w,
        ];
        c_left = c_right;
    }
    y
}

/// Initial atomic level for every transit.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    #[default]
    Lower,
    Upper,
}

impl Branch {
    fn initial(self, n: usize) -> BlockAmplitudes {
        match self {
            Self::Lower => BlockAmplitudes::lower(n),
            Self::Upper => BlockAmplitudes::upper(n),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterSource {
    Numeric,
    ZeroDetuningAnalytic,
    RosenZenerAnalytic,
}

impl FilterSource {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Numeric => "numeric",
            Self::ZeroDetuningAnalytic => "zero-detuning-analytic",
            Self::RosenZenerAnalytic => "rosen-zener-analytic",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [Self::Numeric, Self::ZeroDetuningAnalytic, Self::RosenZenerAnalytic]
            .into_iter()
            .find(|s| s.tag() == tag)
    }
}

/// Worst-case integrator diagnostics over all blocks of a numeric filter.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_richardson_delta: f64,
    pub max_norm_error: f64,
    pub total_steps: usize,
}

/// Survival and transition probabilities `|a+(n)|^2`, `|a-(n)|^2` after one
/// transit, for `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterFunction {
    p_plus: Vec<f64>,
    p_minus: Vec<f64>,
    source: FilterSource,
    branch: Branch,
    delta_omega: Option<f64>,
    pulse: Option<PulseShape>,
    diagnostics: Option<Diagnostics>,
}

/// Slack allowed on `p+ + p- = 1` and on the upper bound of each entry.
pub const FILTER_SUM_TOLERANCE: f64 = 1e-8;

impl FilterFunction {
    /// Build from raw arrays, checking `p+ + p- = 1` and `0 <= p <= 1`.
    pub fn from_arrays(
        p_plus: Vec<f64>,
        p_minus: Vec<f64>,
        source: FilterSource,
    ) -> Result<Self, DynamicsError> {
        if p_plus.len() != p_minus.len() || p_plus.is_empty() {
            return Err(DynamicsError::InvalidFilter(format!(
                "array lengths {} and {}",
                p_plus.len(),
                p_minus.len()
            )));
        }
        for (n, (&pp, &pm)) in p_plus.iter().zip(&p_minus).enumerate() {
            let in_range = |p: f64| (0.0..=1.0 + 1e-12).contains(&p);
            if !in_range(pp) || !in_range(pm) || (pp + pm - 1.0).abs() > FILTER_SUM_TOLERANCE {
                return Err(DynamicsError::InvalidFilter(format!("n={n}: p+={pp}, p-={pm}")));
            }
        }
        Ok(Self {
            p_plus,
            p_minus,
            source,
            branch: Branch::Lower,
            delta_omega: None,
            pulse: None,
            diagnostics: None,
        })
    }

    /// Filter that leaves every photon number untouched on a lower detection.
    pub fn identity(n_max: usize) -> Self {
        Self::from_arrays(vec![0.0; n_max + 1], vec![1.0; n_max + 1], FilterSource::ZeroDetuningAnalytic)
            .expect("identity filter is valid")
    }

    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = branch;
        self
    }

    pub fn p_plus(&self) -> &[f64] {
        &self.p_plus
    }

    pub fn p_minus(&self) -> &[f64] {
        &self.p_minus
    }

    pub fn n_max(&self) -> usize {
        self.p_minus.len() - 1
    }

    pub fn source(&self) -> FilterSource {
        self.source
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn delta_omega(&self) -> Option<f64> {
        self.delta_omega
    }

    pub fn pulse(&self) -> Option<&PulseShape> {
        self.pulse.as_ref()
    }

    pub fn diagnostics(&self) -> Option<&Diagnostics> {
        self.diagnostics.as_ref()
    }

    /// Largest pointwise `|p-|` difference between two filters of equal size.
    pub fn max_gap(&self, other: &Self) -> f64 {
        self.p_minus
            .iter()
            .zip(&other.p_minus)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Write as delimited text with columns `n,p_plus,p_minus,source`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), DynamicsError> {
        let mut w = csv::Writer::from_writer(writer);
        for (n, (&p_plus, &p_minus)) in self.p_plus.iter().zip(&self.p_minus).enumerate() {
            w.serialize(FilterRow { n, p_plus, p_minus, source: self.source.tag().to_string() })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a table written by [`Self::write_csv`].
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, DynamicsError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut p_plus = Vec::new();
        let mut p_minus = Vec::new();
        let mut source = None;
        for row in r.deserialize() {
            let row: FilterRow = row?;
            if row.n != p_plus.len() {
                return Err(DynamicsError::InvalidFilter(format!("row {} out of order", row.n)));
            }
            let tag = FilterSource::from_tag(&row.source)
                .ok_or_else(|| DynamicsError::InvalidFilter(format!("unknown source `{}`", row.source)))?;
            if source.is_some_and(|s| s != tag) {
                return Err(DynamicsError::InvalidFilter("mixed source tags".into()));
            }
            source = Some(tag);
            p_plus.push(row.p_plus);
            p_minus.push(row.p_minus);
        }
        let source = source.ok_or_else(|| DynamicsError::InvalidFilter("empty table".into()))?;
        Self::from_arrays(p_plus, p_minus, source)
    }
}

#[derive(Serialize, Deserialize)]
struct FilterRow {
    n: usize,
    p_plus: f64,
    p_minus: f64,
    source: String,
}

/// Numeric filter function for blocks `0..=n_max`, evaluated in parallel
/// where available.
pub fn filter_function(
    drive: &DetunedDrive,
    n_max: usize,
    branch: Branch,
    ctrl: &StepControl,
) -> Result<FilterFunction, DynamicsError> {
    filter_function_with(drive, n_max, branch, ctrl, Execution::default())
}

pub fn filter_function_with(
    drive: &DetunedDrive,
    n_max: usize,
    branch: Branch,
    ctrl: &StepControl,
    exec: Execution,
) -> Result<FilterFunction, DynamicsError> {
    if n_max < 1 {
        return Err(DynamicsError::InvalidParameter { name: "n_max", value: n_max as f64 });
    }
    ctrl.validate()?;
    let reports = par::map_range(exec, 1..n_max + 1, |n| {
        integrate_block_report(drive, n, branch.initial(n), ctrl)
    });
    // Block 0 holds only |0,->; an upper-level atom has no partner there
    // either, so neither branch can make a transition.
    let (first_plus, first_minus) = match branch {
        Branch::Lower => (0.0, 1.0),
        Branch::Upper => (1.0, 0.0),
    };
    let mut p_plus = Vec::with_capacity(n_max + 1);
    let mut p_minus = Vec::with_capacity(n_max + 1);
    p_plus.push(first_plus);
    p_minus.push(first_minus);
    let mut diag = Diagnostics::default();
    for report in reports {
        let report = report?;
        p_plus.push(report.amplitudes.p_plus());
        p_minus.push(report.amplitudes.p_minus());
        diag.max_richardson_delta = diag.max_richardson_delta.max(report.richardson_delta);
        diag.max_norm_error = diag.max_norm_error.max(report.norm_error);
        diag.total_steps += report.steps;
    }
    let mut filter = FilterFunction::from_arrays(p_plus, p_minus, FilterSource::Numeric)?;
    filter.branch = branch;
    filter.delta_omega = Some(drive.delta_omega);
    filter.pulse = Some(drive.pulse.clone());
    filter.diagnostics = Some(diag);
    Ok(filter)
}

/// Resonant filter `|a-|^2 = cos^2(sqrt(n) A)`, valid for any pulse of area `A`.
pub fn analytic_zero_detuning(area: f64, n_max: usize) -> FilterFunction {
    let (p_plus, p_minus) = (0..=n_max)
        .map(|n| {
            let s = ((n as f64).sqrt() * area).sin().powi(2);
            (s, 1.0 - s)
        })
        .unzip();
    let mut filter = FilterFunction::from_arrays(p_plus, p_minus, FilterSource::ZeroDetuningAnalytic)
        .expect("trigonometric filter is valid");
    filter.delta_omega = Some(0.0);
    filter
}

/// Closed-form Rosen-Zener filter for `g(t) = g0 sech(t / T)`:
/// `|a+|^2 = sin^2(pi T g0 sqrt(n)) sech^2(pi T dw / 2)`.
pub fn analytic_rosen_zener(
    g0: f64,
    t_width: f64,
    delta_omega: f64,
    n_max: usize,
) -> Result<FilterFunction, DynamicsError> {
    if !(t_width.is_finite() && t_width > 0.0) {
        return Err(DynamicsError::InvalidParameter { name: "T", value: t_width });
    }
    let damping = (PI * t_width * delta_omega / 2.0).cosh().powi(-2);
    let (p_plus, p_minus) = (0..=n_max)
        .map(|n| {
            let s = (PI * t_width * g0 * (n as f64).sqrt()).sin().powi(2) * damping;
            (s, 1.0 - s)
        })
        .unzip();
    let mut filter = FilterFunction::from_arrays(p_plus, p_minus, FilterSource::RosenZenerAnalytic)?;
    filter.delta_omega = Some(delta_omega);
    filter.pulse = PulseShape::rosen_zener(g0, t_width).ok();
    Ok(filter)
}

/// Location and width of a resonant filter maximum.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterPeak {
    /// `n_M = k^2 / (T g0)^2`.
    pub location: f64,
    /// `sqrt(n_M) / (T g0)`.
    pub width: f64,
}

/// `k`-th maximum of the small-detuning Rosen-Zener lower-level filter.
pub fn rz_maxima(t_width: f64, g0: f64, k: u32) -> FilterPeak {
    let tg = t_width * g0;
    let location = f64::from(k * k) / (tg * tg);
    FilterPeak { location, width: location.sqrt() / tg }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{ make_microwave, rescaled_microwave };

    fn rz_drive(dw: f64) -> DetunedDrive {
        DetunedDrive::new(PulseShape::rosen_zener(5.0, 0.1).unwrap(), dw).unwrap()
    }

    #[test]
    fn resonant_block_follows_area() {
        let pulse = PulseShape::gaussian(3.0, 0.4, 0.3).unwrap();
        let area = pulse.area().value;
        let drive = DetunedDrive::new(pulse, 0.0).unwrap();
        for n in [1, 4, 9, 30] {
            let out = integrate_block(&drive, n, BlockAmplitudes::lower(n), &StepControl::default()).unwrap();
            let expect = ((n as f64).sqrt() * area).cos().powi(2);
            assert!((out.p_minus() - expect).abs() < 1e-8, "n={n}");
            assert!((out.p_plus() - (1.0 - expect)).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn rosen_zener_block_fixture() {
        // sin^2(3.5 pi) = 1, sech^2(pi/4) = 0.569497...
        let fixture = 1.0 - (PI / 4.0).cosh().powi(-2);
        assert!((fixture - 0.430_066_036_2).abs() < 1e-10);
        let out = integrate_block(&rz_drive(5.0), 49, BlockAmplitudes::lower(49), &StepControl::default()).unwrap();
        assert!((out.p_minus() - fixture).abs() < 1e-6, "{}", out.p_minus());
        let analytic = analytic_rosen_zener(5.0, 0.1, 5.0, 49).unwrap();
        assert!((analytic.p_minus()[49] - fixture).abs() < 1e-14);
    }

    #[test]
    fn zero_block_only_gains_phase() {
        let drive = rz_drive(2.0);
        let out = integrate_block(&drive, 0, BlockAmplitudes::lower(0), &StepControl::default()).unwrap();
        assert!((out.p_minus() - 1.0).abs() < 1e-15);
        assert_eq!(out.p_plus(), 0.0);
        let expect = 0.5 * 2.0 * drive.pulse.support().duration();
        assert!((out.a_minus - C64::from_polar(1.0, expect)).norm() < 1e-12);
    }

    #[test]
    fn vanishing_coupling_leaves_lower_level() {
        // l = 2 at resonance: both lobes cancel exactly
        let drive = DetunedDrive::new(make_microwave(5.0, 10.0, 2).unwrap(), 0.0).unwrap();
        let f = filter_function(&drive, 30, Branch::Lower, &StepControl::default()).unwrap();
        for &p in f.p_minus() {
            assert!((p - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_unnormalized_init() {
        let init = BlockAmplitudes { a_plus: C64::new(1.0, 0.0), a_minus: C64::new(1.0, 0.0), n: 3 };
        assert!(matches!(
            integrate_block(&rz_drive(0.0), 3, init, &StepControl::default()),
            Err(DynamicsError::NotNormalized(_))
        ));
    }

    #[test]
    fn coarse_steps_signal_nonconvergence() {
        let ctrl = StepControl { max_phase_step: 2.0, tolerance: 1e-9, min_steps: 4 };
        let err = filter_function(&rz_drive(0.5), 20, Branch::Lower, &ctrl).unwrap_err();
        assert!(matches!(err, DynamicsError::NonConvergence { n, .. } if n >= 1), "{err}");
    }

    #[test]
    fn upper_branch_mirrors_lower() {
        // The 2x2 block is symmetric under swapping levels and dw -> -dw.
        let ctrl = StepControl::default();
        let lower = filter_function(&rz_drive(1.5), 20, Branch::Lower, &ctrl).unwrap();
        let upper = filter_function(&rz_drive(-1.5), 20, Branch::Upper, &ctrl).unwrap();
        assert_eq!(upper.branch(), Branch::Upper);
        assert_eq!((upper.p_plus()[0], upper.p_minus()[0]), (1.0, 0.0));
        for n in 1..=20 {
            assert!((lower.p_minus()[n] - upper.p_plus()[n]).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn analytic_zero_detuning_examples() {
        let f = analytic_zero_detuning(0.0, 10);
        assert!(f.p_minus().iter().all(|&p| p == 1.0));
        let f = analytic_zero_detuning(PI / 2.0, 4);
        assert!((f.p_minus()[4] - 1.0).abs() < 1e-15);
        assert!(f.p_minus()[1].abs() < 1e-15);
        assert_eq!(f.source(), FilterSource::ZeroDetuningAnalytic);
    }

    #[test]
    fn analytic_rosen_zener_examples() {
        let rz = analytic_rosen_zener(5.0, 0.1, 0.0, 100).unwrap();
        let zd = analytic_zero_detuning(PI * 0.1 * 5.0, 100);
        assert!(rz.max_gap(&zd) < 1e-14);
        let f = analytic_rosen_zener(5.0, 0.1, 0.5, 16).unwrap();
        assert!((f.p_minus()[16] - 1.0).abs() < 1e-14);
        assert!(analytic_rosen_zener(5.0, 0.0, 0.5, 16).is_err());
    }

    #[test]
    fn maxima_examples() {
        let peak = rz_maxima(0.1, 5.0, 2);
        assert!((peak.location - 16.0).abs() < 1e-12);
        assert!((peak.width - 8.0).abs() < 1e-12);
        assert_eq!(rz_maxima(0.1, 5.0, 0).location, 0.0);
    }

    #[test]
    fn odd_harmonics_track_each_other_at_small_detuning() {
        let ctrl = StepControl::default();
        let curve = |l: u32, dw: f64| {
            let drive = DetunedDrive::new(rescaled_microwave(5.0, 0.1, l).unwrap(), dw).unwrap();
            filter_function(&drive, 100, Branch::Lower, &ctrl).unwrap()
        };
        // Frozen from running both curves: the largest gap sits at n = 2.
        let small = curve(1, 0.5).max_gap(&curve(3, 0.5));
        assert!((small - 2.3715e-3).abs() < 1e-6, "{small}");
        assert!(curve(1, 5.0).max_gap(&curve(3, 5.0)) > 1e-2);
    }

    #[test]
    fn csv_round_trip() {
        let f = analytic_rosen_zener(5.0, 0.1, 0.5, 30).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,p_plus,p_minus,source\n0,"));
        let back = FilterFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.p_plus(), f.p_plus());
        assert_eq!(back.p_minus(), f.p_minus());
        assert_eq!(back.source(), f.source());
    }

    #[test]
    fn from_arrays_rejects_bad_rows() {
        assert!(FilterFunction::from_arrays(vec![0.5], vec![0.4], FilterSource::Numeric).is_err());
        assert!(FilterFunction::from_arrays(vec![-0.1], vec![1.1], FilterSource::Numeric).is_err());
        assert!(FilterFunction::from_arrays(vec![], vec![], FilterSource::Numeric).is_err());
    }

    #[test]
    fn rosen_zener_minimum_rises_with_detuning() {
        let ctrl = StepControl::default();
        let values: Vec<f64> = (0..=5)
            .map(|dw| integrate_block(&rz_drive(dw as f64), 49, BlockAmplitudes::lower(49), &ctrl).unwrap().p_minus())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
    }

    #[test]
    fn detuned_microwave_minima_deepen_with_n() {
        let drive = DetunedDrive::new(rescaled_microwave(5.0, 0.1, 1).unwrap(), 5.0).unwrap();
        let f = filter_function(&drive, 60, Branch::Lower, &StepControl::default()).unwrap();
        let local_min = |lo: usize, hi: usize| f.p_minus()[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
        let near_9 = local_min(5, 14);
        let near_49 = local_min(42, 56);
        assert!(near_49 < near_9, "{near_49} vs {near_9}");
        assert!(near_49 < 1.0 - (PI / 4.0).cosh().powi(-2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pulse() -> impl Strategy<Value = PulseShape> {
            prop_oneof![
                (0.5..6.0f64, 0.05..0.2f64).prop_map(|(g, t)| PulseShape::rosen_zener(g, t).unwrap()),
                (0.5..6.0f64, 0.1..0.5f64, 0.2..0.5f64).prop_map(|(g, tau, s)| PulseShape::gaussian(g, tau, s).unwrap()),
                (0.5..6.0f64, 1..5u32).prop_map(|(g, l)| rescaled_microwave(g, 0.1, l).unwrap()),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn blocks_stay_unitary(p in pulse(), dw in -6.0..6.0f64, n in 1..60usize) {
                let drive = DetunedDrive::new(p, dw).unwrap();
                let report = integrate_block_report(&drive, n, BlockAmplitudes::lower(n), &StepControl::default()).unwrap();
                prop_assert!(report.norm_error < 1e-8);
                let p_minus = report.amplitudes.p_minus();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&p_minus));
            }

            #[test]
            fn resonant_blocks_depend_only_on_area(p in pulse(), n in 1..40usize) {
                let area = p.area().value;
                let drive = DetunedDrive::new(p, 0.0).unwrap();
                let out = integrate_block(&drive, n, BlockAmplitudes::lower(n), &StepControl::default()).unwrap();
                prop_assert!((out.p_minus() - ((n as f64).sqrt() * area).cos().powi(2)).abs() < 1e-6);
            }

            #[test]
            fn analytic_filters_are_normalized(g in 0.1..10.0f64, t in 0.01..0.5f64, dw in -10.0..10.0f64) {
                let f = analytic_rosen_zener(g, t, dw, 80).unwrap();
                for (a, b) in f.p_plus().iter().zip(f.p_minus()) {
                    prop_assert!((a + b - 1.0).abs() < 1e-8);
                }
            }
        }
    }
}
