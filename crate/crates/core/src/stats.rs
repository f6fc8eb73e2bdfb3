//! Photon-number moments and the Mandel Q-parameter.

use serde::{ Deserialize, Serialize };
use thiserror::Error;
use crate::field::PhotonDistribution;

/// Half-width of the band around `Q = 0` classified as Poissonian.
pub const POISSONIAN_BAND: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("Mandel Q is undefined for the vacuum (mean photon number 0)")]
    UndefinedQ,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub mean: f64,
    pub variance: f64,
    /// `(variance - mean) / mean`.
    pub mandel_q: f64,
}

impl DistributionStats {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhotonStatistics {
    SubPoissonian,
    Poissonian,
    SuperPoissonian,
}

pub fn moments(dist: &PhotonDistribution) -> Result<DistributionStats, StatsError> {
    let probs = dist.probs();
    let mean: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    if mean <= 0.0 {
        return Err(StatsError::UndefinedQ);
    }
    // central second moment; avoids cancellation in <n^2> - <n>^2
    let variance: f64 = probs
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let d = n as f64 - mean;
            d * d * p
        })
        .sum();
    Ok(DistributionStats { mean, variance, mandel_q: (variance - mean) / mean })
}

pub fn classify(stats: &DistributionStats) -> PhotonStatistics {
    if stats.mandel_q < -POISSONIAN_BAND {
        PhotonStatistics::SubPoissonian
    } else if stats.mandel_q > POISSONIAN_BAND {
        PhotonStatistics::SuperPoissonian
    } else {
        PhotonStatistics::Poissonian
    }
}
