//! Time-dependent atom-mode couplings.
//!
//! A [`PulseShape`] is a real coupling rate `g(t)` that vanishes outside a
//! finite support window. The standing-wave microwave mode has compact support
//! by construction; shapes with infinite tails are cut off where the discarded
//! area is negligible (or, for the Lorentzian, compensated by area
//! normalization).

use std::f64::consts::PI;
use serde::{ Deserialize, Serialize };
use thiserror::Error;
use crate::quad::adaptive_simpson;

/// Rosen-Zener support half-width in units of `T`. The sech tail beyond it
/// carries a fraction `~e^-25` of the area.
pub const ROSEN_ZENER_CUTOFF: f64 = 25.0;
/// Square-wave support extends this many `t_s` past each plateau edge.
pub const SQUARE_WAVE_CUTOFF: f64 = 30.0;
/// Gaussian support half-width in units of `sigma * tau`.
pub const GAUSSIAN_CUTOFF: f64 = 16.0;
/// Lorentzian support half-width in units of `gamma * tau`.
pub const LORENTZIAN_CUTOFF: f64 = 200.0;

/// Absolute tolerance for quadrature areas.
pub const AREA_TOLERANCE: f64 = 1e-10;
const AREA_PANELS: usize = 64;

/// Width parameters of the fixed five-pulse comparison suite.
pub const SUITE_SWITCH_WIDTH: f64 = 0.02;
pub const SUITE_SIGMA: f64 = 0.3;
pub const SUITE_GAMMA: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("pulse parameter `{name}` must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("half-wavelength index must be at least 1, got {0}")]
    InvalidHarmonic(i64),
}

/// The five coupling families.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKind {
    SquareWave,
    Trigonometric,
    Gaussian,
    RosenZener,
    Lorentzian,
}

impl PulseKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::SquareWave => "square-wave",
            Self::Trigonometric => "trigonometric",
            Self::Gaussian => "gaussian",
            Self::RosenZener => "rosen-zener",
            Self::Lorentzian => "lorentzian",
        }
    }
}

impl std::fmt::Display for PulseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Shape parameters for each family, without the overall amplitude.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    /// `cos(kv l t)` for odd `l`, `sin(kv l t)` for even `l`, on
    /// `|t| <= pi / (2 kv)`.
    Trigonometric { kv: f64, l: u32 },
    /// `sech(t / T)`.
    RosenZener {
        #[serde(rename = "T")]
        t_width: f64,
    },
    /// `(tanh((t + tau) / t_s) - tanh((t - tau) / t_s)) / 2`.
    SquareWave { tau: f64, t_s: f64 },
    /// `exp(-(t / tau)^2 / (4 sigma^2)) / (2 sigma sqrt(pi))`.
    Gaussian { tau: f64, sigma: f64 },
    /// `(gamma / pi)^2 / ((t / tau)^2 + gamma^2)`.
    Lorentzian { tau: f64, gamma: f64 },
}

impl Shape {
    pub fn kind(&self) -> PulseKind {
        match self {
            Self::Trigonometric { .. } => PulseKind::Trigonometric,
            Self::RosenZener { .. } => PulseKind::RosenZener,
            Self::SquareWave { .. } => PulseKind::SquareWave,
            Self::Gaussian { .. } => PulseKind::Gaussian,
            Self::Lorentzian { .. } => PulseKind::Lorentzian,
        }
    }

    fn validate(&self) -> Result<(), PulseError> {
        match *self {
            Self::Trigonometric { kv, l } => {
                if l == 0 {
                    return Err(PulseError::InvalidHarmonic(0));
                }
                positive("kv", kv)
            }
            Self::RosenZener { t_width } => positive("T", t_width),
            Self::SquareWave { tau, t_s } => positive("tau", tau).and(positive("t_s", t_s)),
            Self::Gaussian { tau, sigma } => positive("tau", tau).and(positive("sigma", sigma)),
            Self::Lorentzian { tau, gamma } => positive("tau", tau).and(positive("gamma", gamma)),
        }
    }

    /// Symmetric half-width of the support window.
    fn half_width(&self) -> f64 {
        match *self {
            Self::Trigonometric { kv, .. } => PI / (2.0 * kv),
            Self::RosenZener { t_width } => ROSEN_ZENER_CUTOFF * t_width,
            Self::SquareWave { tau, t_s } => tau + SQUARE_WAVE_CUTOFF * t_s,
            Self::Gaussian { tau, sigma } => GAUSSIAN_CUTOFF * sigma * tau,
            Self::Lorentzian { tau, gamma } => LORENTZIAN_CUTOFF * gamma * tau,
        }
    }

    /// Unit-amplitude profile, ignoring the support window.
    fn profile(&self, t: f64) -> f64 {
        match *self {
            Self::Trigonometric { kv, l } => {
                let phase = kv * f64::from(l) * t;
                if l % 2 == 1 { phase.cos() } else { phase.sin() }
            }
            Self::RosenZener { t_width } => 1.0 / (t / t_width).cosh(),
            Self::SquareWave { tau, t_s } => {
                0.5 * (((t + tau) / t_s).tanh() - ((t - tau) / t_s).tanh())
            }
            Self::Gaussian { tau, sigma } => {
                let u = t / tau;
                (-(u * u) / (4.0 * sigma * sigma)).exp() / (2.0 * sigma * PI.sqrt())
            }
            Self::Lorentzian { tau, gamma } => {
                let u = t / tau;
                (gamma / PI).powi(2) / (u * u + gamma * gamma)
            }
        }
    }

    /// Closed-form area of the unit-amplitude profile, where one is used.
    fn analytic_area(&self) -> Option<f64> {
        match *self {
            Self::Trigonometric { kv, l } => {
                if l % 2 == 0 {
                    Some(0.0)
                } else {
                    // sin(l pi / 2) alternates +1, -1, ... over odd l
                    let sign = if (l / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    Some(sign * 2.0 / (kv * f64::from(l)))
                }
            }
            Self::RosenZener { t_width } => Some(PI * t_width),
            Self::Gaussian { tau, .. } => Some(tau),
            Self::SquareWave { .. } | Self::Lorentzian { .. } => None,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), PulseError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(PulseError::NonPositive { name, value })
    }
}

/// Closed time interval outside of which the coupling is identically zero.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub start: f64,
    pub end: f64,
}

impl Support {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaMethod {
    Analytic,
    Quadrature,
}

/// Time integral of a coupling over its support.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseArea {
    pub value: f64,
    pub method: AreaMethod,
}

/// A coupling `g(t) = amplitude * profile(t)` on a finite support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PulseSpec", into = "PulseSpec")]
pub struct PulseShape {
    shape: Shape,
    amplitude: f64,
    support: Support,
}

/// Serialized form of a [`PulseShape`]: kind tag, named parameters and the
/// amplitude `g0`. The support is recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    #[serde(flatten)]
    pub shape: Shape,
    pub g0: f64,
}

impl TryFrom<PulseSpec> for PulseShape {
    type Error = PulseError;

    fn try_from(spec: PulseSpec) -> Result<Self, Self::Error> {
        Self::new(spec.shape, spec.g0)
    }
}

impl From<PulseShape> for PulseSpec {
    fn from(pulse: PulseShape) -> Self {
        Self { shape: pulse.shape, g0: pulse.amplitude }
    }
}

impl PulseShape {
    pub fn new(shape: Shape, amplitude: f64) -> Result<Self, PulseError> {
        positive("g0", amplitude)?;
        shape.validate()?;
        let half = shape.half_width();
        Ok(Self { shape, amplitude, support: Support { start: -half, end: half } })
    }

    pub fn trigonometric(g0: f64, kv: f64, l: u32) -> Result<Self, PulseError> {
        Self::new(Shape::Trigonometric { kv, l }, g0)
    }

    pub fn rosen_zener(g0: f64, t_width: f64) -> Result<Self, PulseError> {
        Self::new(Shape::RosenZener { t_width }, g0)
    }

    pub fn square_wave(g0: f64, tau: f64, t_s: f64) -> Result<Self, PulseError> {
        Self::new(Shape::SquareWave { tau, t_s }, g0)
    }

    pub fn gaussian(g0: f64, tau: f64, sigma: f64) -> Result<Self, PulseError> {
        Self::new(Shape::Gaussian { tau, sigma }, g0)
    }

    pub fn lorentzian(g0: f64, tau: f64, gamma: f64) -> Result<Self, PulseError> {
        Self::new(Shape::Lorentzian { tau, gamma }, g0)
    }

    pub fn kind(&self) -> PulseKind {
        self.shape.kind()
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Overall prefactor `g0`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// Same shape with a different prefactor.
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self, PulseError> {
        Self::new(self.shape, amplitude)
    }

    /// Coupling rate at time `t`; exactly zero off the support.
    pub fn eval(&self, t: f64) -> f64 {
        if self.support.contains(t) {
            self.amplitude * self.shape.profile(t)
        } else {
            0.0
        }
    }

    /// Largest `|g(t)|` on the support.
    pub fn peak(&self) -> f64 {
        match self.shape {
            Shape::Trigonometric { .. } => self.amplitude,
            _ => self.eval(0.0).abs(),
        }
    }

    /// Pulse area, from the closed form when one exists and by quadrature
    /// over the support otherwise.
    pub fn area(&self) -> PulseArea {
        match self.shape.analytic_area() {
            Some(unit) => PulseArea { value: self.amplitude * unit, method: AreaMethod::Analytic },
            None => self.quadrature_area(),
        }
    }

    /// Pulse area by adaptive Simpson over the support.
    pub fn quadrature_area(&self) -> PulseArea {
        let Support { start, end } = self.support;
        let value = adaptive_simpson(|t| self.eval(t), start, end, AREA_TOLERANCE, AREA_PANELS);
        PulseArea { value, method: AreaMethod::Quadrature }
    }

    /// Rescale the amplitude so that `area()` equals `target`.
    pub fn normalized_to_area(&self, target: f64) -> Result<Self, PulseError> {
        let current = self.area().value;
        positive("area", current.abs())?;
        self.with_amplitude(self.amplitude * target / current.abs())
    }

    /// Time for the coupling to fall from `high` to `low` (fractions of the
    /// peak) on the trailing edge. Only defined for single-lobed symmetric
    /// shapes that decrease monotonically away from `t = 0`.
    pub fn switch_time(&self, high: f64, low: f64) -> Option<f64> {
        if let Shape::Trigonometric { l, .. } = self.shape {
            if l != 1 {
                return None;
            }
        }
        let peak = self.eval(0.0);
        if !(peak > 0.0 && high > low && low > 0.0 && high < 1.0) {
            return None;
        }
        let end = self.support.end;
        let crossing = |level: f64| -> Option<f64> {
            let target = level * peak;
            if self.eval(end) > target {
                return None;
            }
            let (mut lo, mut hi) = (0.0, end);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.eval(mid) > target { lo = mid } else { hi = mid }
            }
            Some(0.5 * (lo + hi))
        };
        Some(crossing(low)? - crossing(high)?)
    }

    /// Inverse of [`Self::switch_time`] between half maximum and 1% of peak,
    /// in units of `1 / time`.
    pub fn edge_steepness(&self) -> Option<f64> {
        self.switch_time(0.5, 0.01).map(f64::recip)
    }
}

/// Standing-wave coupling seen by an atom crossing a mode with `l`
/// half-wavelengths at speed `v` (`kv = k * v`).
pub fn make_microwave(g0: f64, kv: f64, l: i64) -> Result<PulseShape, PulseError> {
    if l < 1 {
        return Err(PulseError::InvalidHarmonic(l));
    }
    let l = u32::try_from(l).map_err(|_| PulseError::InvalidHarmonic(l))?;
    PulseShape::trigonometric(g0, kv, l)
}

/// `kv` that gives the `l = 1` microwave pulse the Rosen-Zener area `pi T g0`.
pub fn area_matched_kv(t_width: f64) -> f64 {
    2.0 / (PI * t_width)
}

/// Microwave pulse on the common-area scale: amplitude `g0 * l` so that
/// every odd `l` has the same `|area|`, and `kv = 2 / (pi T)`.
pub fn rescaled_microwave(g0: f64, t_width: f64, l: u32) -> Result<PulseShape, PulseError> {
    positive("T", t_width)?;
    PulseShape::trigonometric(g0 * f64::from(l), area_matched_kv(t_width), l)
}

/// The five comparison pulses with their tabulated parameters and no area
/// correction, ordered from fastest to slowest switching.
pub fn appendix_suite_raw(g0: f64, t_width: f64) -> Result<Vec<PulseShape>, PulseError> {
    positive("g0", g0)?;
    positive("T", t_width)?;
    let tau = PI * t_width;
    Ok(vec![
        PulseShape::square_wave(g0, tau, SUITE_SWITCH_WIDTH)?,
        PulseShape::trigonometric(g0, area_matched_kv(t_width), 1)?,
        PulseShape::gaussian(g0, tau, SUITE_SIGMA)?,
        PulseShape::rosen_zener(g0, t_width)?,
        PulseShape::lorentzian(g0, tau, SUITE_GAMMA)?,
    ])
}

/// [`appendix_suite_raw`] with every amplitude rescaled to area `pi T g0`.
pub fn make_appendix_suite(g0: f64, t_width: f64) -> Result<Vec<PulseShape>, PulseError> {
    let target = PI * t_width * g0;
    appendix_suite_raw(g0, t_width)?
        .iter()
        .map(|p| p.normalized_to_area(target))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const G0: f64 = 5.0;
    const T: f64 = 0.1;

    #[test]
    fn eval_examples() {
        let trig = make_microwave(5.0, 10.0, 1).unwrap();
        assert_eq!(trig.eval(0.0), 5.0);
        let rz = PulseShape::rosen_zener(5.0, 0.1).unwrap();
        assert_eq!(rz.eval(0.0), 5.0);
        let sine = make_microwave(5.0, 10.0, 2).unwrap();
        assert_eq!(sine.eval(0.0), 0.0);
        let edge = PI / 20.0;
        assert_eq!(trig.eval(edge * (1.0 + 1e-12)), 0.0);
        assert_eq!(trig.eval(-edge * (1.0 + 1e-12)), 0.0);
    }

    #[test]
    fn odd_microwave_vanishes_at_edges() {
        for l in [1, 3, 5, 7] {
            let p = make_microwave(5.0, 10.0, l).unwrap();
            let s = p.support();
            assert!(p.eval(s.start).abs() < 1e-12 * 5.0, "l={l}");
            assert!(p.eval(s.end).abs() < 1e-12 * 5.0, "l={l}");
        }
    }

    #[test]
    fn microwave_construction() {
        let p = make_microwave(5.0, 10.0, 1).unwrap();
        assert_eq!(p.support(), Support { start: -PI / 20.0, end: PI / 20.0 });
        let p2 = make_microwave(5.0, 10.0, 2).unwrap();
        assert_eq!(p2.support(), p.support());
        assert_eq!(p2.area().value, 0.0);
        assert!(p2.quadrature_area().value.abs() < 1e-10);
        // closed form: 2 g0 / (kv l) = 1/3 in magnitude
        let p3 = make_microwave(5.0, 10.0, 3).unwrap();
        assert!((p3.area().value.abs() - 1.0 / 3.0).abs() < 1e-15);
        assert!((p3.quadrature_area().value - p3.area().value).abs() < 1e-9);
        assert_eq!(make_microwave(5.0, 10.0, 0), Err(PulseError::InvalidHarmonic(0)));
        assert_eq!(make_microwave(5.0, 10.0, -3), Err(PulseError::InvalidHarmonic(-3)));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PulseShape::rosen_zener(0.0, 0.1).is_err());
        assert!(PulseShape::rosen_zener(5.0, -0.1).is_err());
        assert!(PulseShape::gaussian(5.0, 1.0, f64::NAN).is_err());
        assert!(PulseShape::lorentzian(5.0, 0.0, 0.3).is_err());
    }

    #[test]
    fn area_examples() {
        let rz = PulseShape::rosen_zener(G0, T).unwrap();
        let a = rz.area();
        assert_eq!(a.method, AreaMethod::Analytic);
        assert!((a.value - PI / 2.0).abs() < 1e-15);
        let trig = PulseShape::trigonometric(G0, area_matched_kv(T), 1).unwrap();
        assert!((trig.area().value - PI / 2.0).abs() < 1e-14);
        assert!((trig.quadrature_area().value - PI / 2.0).abs() < 1e-9);
        let even = make_microwave(G0, area_matched_kv(T), 2).unwrap();
        assert_eq!(even.area().value, 0.0);
        let sq = PulseShape::square_wave(G0, PI * T, 0.02).unwrap();
        assert_eq!(sq.area().method, AreaMethod::Quadrature);
    }

    #[test]
    fn analytic_matches_quadrature() {
        let pulses = [
            PulseShape::rosen_zener(G0, T).unwrap(),
            PulseShape::gaussian(G0, PI * T, 0.3).unwrap(),
            make_microwave(G0, 10.0, 1).unwrap(),
            make_microwave(G0, 10.0, 3).unwrap(),
            make_microwave(G0, 10.0, 5).unwrap(),
        ];
        for p in &pulses {
            let a = p.area().value;
            let q = p.quadrature_area().value;
            assert!((a - q).abs() <= 1e-6 * a.abs(), "{:?}: {a} vs {q}", p.kind());
        }
    }

    #[test]
    fn square_wave_approaches_step_limit() {
        // t_s -> 0 limit is a rectangle of width 2 tau
        let tau = PI * T;
        for t_s in [0.02, 0.005, 0.001] {
            let sq = PulseShape::square_wave(1.0, tau, t_s).unwrap();
            let q = sq.quadrature_area().value;
            assert!((q - 2.0 * tau).abs() < 1e-8, "t_s={t_s}: {q}");
        }
        let sharp = PulseShape::square_wave(1.0, tau, 1e-4).unwrap();
        assert!((sharp.eval(0.5 * tau) - 1.0).abs() < 1e-12);
        assert!(sharp.eval(1.5 * tau).abs() < 1e-12);
    }

    #[test]
    fn suite_scale_factors() {
        let raw = appendix_suite_raw(G0, T).unwrap();
        let norm = make_appendix_suite(G0, T).unwrap();
        let scales: Vec<f64> = raw.iter().zip(&norm).map(|(r, n)| n.amplitude() / r.amplitude()).collect();
        // order: square, trig, gaussian, rz, lorentzian
        assert!((scales[0] - 0.5).abs() < 1e-3, "{scales:?}");
        assert!((scales[1] - 1.0).abs() < 1e-12);
        assert!((scales[2] - 1.0).abs() < 1e-12);
        assert_eq!(scales[3], 1.0);
        // printed Lorentzian area ~ gamma T g0, less the truncated tails
        assert!(scales[4] > PI / 0.3 && scales[4] < PI / 0.3 * 1.01, "{scales:?}");
        for p in &norm {
            let q = p.quadrature_area().value;
            assert!((q - PI / 2.0).abs() < 1e-6 * PI / 2.0, "{:?} {q}", p.kind());
        }
    }

    #[test]
    fn raw_areas_disagree_with_target() {
        let raw = appendix_suite_raw(G0, T).unwrap();
        let sq = raw[0].quadrature_area().value;
        assert!((sq - 2.0 * PI * T * G0).abs() < 1e-6);
        let lor = raw[4].quadrature_area().value;
        assert!((lor / (SUITE_GAMMA * T * G0) - 1.0).abs() < 4e-3);
    }

    #[test]
    fn symmetry() {
        let mut pulses = make_appendix_suite(G0, T).unwrap();
        pulses.push(make_microwave(G0, 7.0, 3).unwrap());
        for p in &pulses {
            for k in 0..200 {
                let t = p.support().end * k as f64 / 199.0;
                assert!((p.eval(t) - p.eval(-t)).abs() <= 1e-14 * p.peak(), "{:?} t={t}", p.kind());
            }
        }
        let sine = make_microwave(G0, 7.0, 4).unwrap();
        for k in 0..200 {
            let t = sine.support().end * k as f64 / 199.0;
            assert!((sine.eval(t) + sine.eval(-t)).abs() <= 1e-14 * G0);
        }
    }

    #[test]
    fn switch_rate_ordering() {
        let suite = make_appendix_suite(G0, T).unwrap();
        let steep: Vec<f64> = suite.iter().map(|p| p.edge_steepness().unwrap()).collect();
        for w in steep.windows(2) {
            assert!(w[0] > w[1], "{steep:?}");
        }
        assert!(make_microwave(G0, 7.0, 3).unwrap().switch_time(0.5, 0.01).is_none());
    }

    #[test]
    fn serde_round_trip() {
        for p in make_appendix_suite(G0, T).unwrap() {
            let text = toml::to_string(&p).unwrap();
            let back: PulseShape = toml::from_str(&text).unwrap();
            assert_eq!(back, p);
        }
        let text = "kind = \"rosen-zener\"\nT = 0.1\ng0 = 5.0\n";
        let p: PulseShape = toml::from_str(text).unwrap();
        assert_eq!(p, PulseShape::rosen_zener(5.0, 0.1).unwrap());
        let bad = "kind = \"trigonometric\"\nkv = 1.0\nl = 0\ng0 = 5.0\n";
        assert!(toml::from_str::<PulseShape>(bad).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn suite_areas_agree(g0 in 0.1..10.0f64, t in 0.02..0.5f64) {
                let target = PI * t * g0;
                for p in make_appendix_suite(g0, t).unwrap() {
                    prop_assert!((p.area().value - target).abs() <= 1e-6 * target);
                    prop_assert!((p.quadrature_area().value - target).abs() <= 1e-6 * target, "{:?}", p.kind());
                }
            }

            #[test]
            fn microwave_parity(g0 in 0.1..10.0f64, kv in 0.5..50.0f64, l in 1..9i64, frac in 0.0..1.0f64) {
                let p = make_microwave(g0, kv, l).unwrap();
                let t = p.support().end * frac;
                let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
                prop_assert!((p.eval(-t) - sign * p.eval(t)).abs() <= 1e-12 * g0);
                prop_assert_eq!(p.eval(p.support().end * 1.000_001), 0.0);
            }
        }
    }
}
