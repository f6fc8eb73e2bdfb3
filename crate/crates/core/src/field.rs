//! Cavity photon-number distributions and their update on atom detection.

use std::io;
use serde::{ Deserialize, Serialize };
use thiserror::Error;
use crate::dynamics::{ Branch, FilterFunction };

/// Largest Poisson tail mass that may be dropped by truncation.
pub const MAX_TRUNCATED_TAIL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("n_max = {n_max} drops Poisson tail mass {tail:e} (limit {limit:e})")]
    TruncationTooSmall { n_max: usize, tail: f64, limit: f64 },
    #[error("measured outcome has zero probability")]
    ImpossibleOutcome,
    #[error("distribution has n_max = {dist}, filter has n_max = {filter}")]
    SizeMismatch { dist: usize, filter: usize },
    #[error("measurement update is only defined for atoms entering in the lower level")]
    UnsupportedBranch,
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("distribution table i/o: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Atomic level found on detection after the transit.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementOutcome {
    Lower,
    Upper,
}

/// Normalized photon-number probabilities `P_n`, `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    /// Normalize non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, FieldError> {
        if weights.is_empty() {
            return Err(FieldError::Invalid("no entries".into()));
        }
        if let Some((n, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(FieldError::Invalid(format!("P_{n} = {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(FieldError::Invalid("all weights are zero".into()));
        }
        Ok(Self { probs: weights.into_iter().map(|w| w / total).collect() })
    }

    /// Fock state `|k>` on `0..=n_max`.
    pub fn fock(k: usize, n_max: usize) -> Result<Self, FieldError> {
        if k > n_max {
            return Err(FieldError::Invalid(format!("k = {k} exceeds n_max = {n_max}")));
        }
        let mut probs = vec![0.0; n_max + 1];
        probs[k] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Index of the largest probability (first one on ties).
    pub fn mode(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (n, &p)| if p > best.1 { (n, p) } else { best })
            .0
    }

    /// Smallest and largest `n` with `P_n > 0`.
    pub fn support(&self) -> Option<(usize, usize)> {
        let lo = self.probs.iter().position(|&p| p > 0.0)?;
        let hi = self.probs.iter().rposition(|&p| p > 0.0)?;
        Some((lo, hi))
    }

    /// Write as delimited text with columns `n,P_n`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), FieldError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "P_n"])?;
        for (n, p) in self.probs.iter().enumerate() {
            w.write_record([n.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a table written by [`Self::write_csv`]. Values are taken as
    /// written, without renormalizing.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, FieldError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut probs = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |k: usize| -> Result<&str, FieldError> {
                record.get(k).ok_or_else(|| FieldError::Invalid("short row".into()))
            };
            let n: usize = parse(0)?.parse().map_err(|e| FieldError::Invalid(format!("{e}")))?;
            let p: f64 = parse(1)?.parse().map_err(|e| FieldError::Invalid(format!("{e}")))?;
            if n != probs.len() || !(p.is_finite() && p >= 0.0) {
                return Err(FieldError::Invalid(format!("bad row n={n}, P={p}")));
            }
            probs.push(p);
        }
        if probs.is_empty() {
            return Err(FieldError::Invalid("empty table".into()));
        }
        Ok(Self { probs })
    }
}

/// `ln P_n` for a Poissonian of mean `mean`, by the ratio recurrence.
fn poisson_log_pmf(mean: f64) -> impl Iterator<Item = f64> {
    let ln_mean = mean.ln();
    (0usize..).scan(-mean, move |ln_p, n| {
        if n > 0 {
            *ln_p += ln_mean - (n as f64).ln();
        }
        Some(*ln_p)
    })
}

/// Poisson probability mass beyond `n_max`.
pub fn poisson_tail_mass(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    for (n, ln_p) in poisson_log_pmf(mean).enumerate().skip(n_max + 1) {
        let p = ln_p.exp();
        tail += p;
        // terms fall off geometrically once past the mean
        if n as f64 > mean && (p == 0.0 || p <= tail * 1e-17) {
            break;
        }
    }
    tail
}

/// Coherent-state photon statistics `P_n = exp(-mean) mean^n / n!` on
/// `0..=n_max`, renormalized after truncation.
pub fn poisson_distribution(mean: f64, n_max: usize) -> Result<PhotonDistribution, FieldError> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(FieldError::Invalid(format!("mean photon number {mean}")));
    }
    if mean == 0.0 {
        return PhotonDistribution::fock(0, n_max);
    }
    let tail = poisson_tail_mass(mean, n_max);
    if tail > MAX_TRUNCATED_TAIL {
        return Err(FieldError::TruncationTooSmall { n_max, tail, limit: MAX_TRUNCATED_TAIL });
    }
    PhotonDistribution::from_weights(poisson_log_pmf(mean).take(n_max + 1).map(f64::exp).collect())
}

/// Poisson tail mass that [`default_n_max`] leaves behind, at most.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-12;

/// Default truncation `ceil(mean + 10 sqrt(mean))`, at least 1, raised
/// further while the tail exceeds [`DEFAULT_TAIL_BOUND`] (small means only).
pub fn default_n_max(mean: f64) -> usize {
    let mut n_max = ((mean + 10.0 * mean.sqrt()).ceil() as usize).max(1);
    while poisson_tail_mass(mean, n_max) >= DEFAULT_TAIL_BOUND {
        n_max += 1;
    }
    n_max
}

/// Condition the field on detecting one atom (entering in the lower level)
/// in `outcome`. Returns the renormalized distribution and the probability
/// of the outcome.
///
/// A lower detection weights `P_n` by `|a-(n)|^2`. An upper detection means
/// the atom took one photon: `P'_n ∝ |a+(n+1)|^2 P_{n+1}`, and `P'_{n_max} = 0`.
pub fn apply_measurement(
    dist: &PhotonDistribution,
    filter: &FilterFunction,
    outcome: MeasurementOutcome,
) -> Result<(PhotonDistribution, f64), FieldError> {
    if filter.branch() != Branch::Lower {
        return Err(FieldError::UnsupportedBranch);
    }
    if dist.n_max() != filter.n_max() {
        return Err(FieldError::SizeMismatch { dist: dist.n_max(), filter: filter.n_max() });
    }
    let probs = dist.probs();
    let weights: Vec<f64> = match outcome {
        MeasurementOutcome::Lower => probs.iter().zip(filter.p_minus()).map(|(p, f)| p * f).collect(),
        MeasurementOutcome::Upper => {
            let mut shifted: Vec<f64> =
                probs[1..].iter().zip(&filter.p_plus()[1..]).map(|(p, f)| p * f).collect();
            shifted.push(0.0);
            shifted
        }
    };
    let success: f64 = weights.iter().sum();
    if success <= 0.0 {
        return Err(FieldError::ImpossibleOutcome);
    }
    let probs = weights.into_iter().map(|w| w / success).collect();
    Ok((PhotonDistribution { probs }, success))
}

/// Fold [`apply_measurement`] over a sequence of transits through identical
/// pulses. Returns the final distribution and each step's outcome
/// probability.
pub fn apply_sequence(
    dist: &PhotonDistribution,
    filter: &FilterFunction,
    outcomes: &[MeasurementOutcome],
) -> Result<(PhotonDistribution, Vec<f64>), FieldError> {
    let mut current = dist.clone();
    let mut probabilities = Vec::with_capacity(outcomes.len());
    for &outcome in outcomes {
        let (next, p) = apply_measurement(&current, filter, outcome)?;
        current = next;
        probabilities.push(p);
    }
    Ok((current, probabilities))
}

/// Field after `m` atoms all detected in the lower level, in closed form:
/// `P_n(m) ∝ |a-(n)|^(2m) P_n`.
pub fn post_select_lower(
    dist: &PhotonDistribution,
    filter: &FilterFunction,
    m: u32,
) -> Result<PhotonDistribution, FieldError> {
    if dist.n_max() != filter.n_max() {
        return Err(FieldError::SizeMismatch { dist: dist.n_max(), filter: filter.n_max() });
    }
    let exponent = i32::try_from(m).map_err(|_| FieldError::Invalid(format!("m = {m}")))?;
    let weights: Vec<f64> =
        dist.probs().iter().zip(filter.p_minus()).map(|(p, f)| p * f.powi(exponent)).collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(FieldError::ImpossibleOutcome);
    }
    PhotonDistribution::from_weights(weights)
}
