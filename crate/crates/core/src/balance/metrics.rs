use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ElementAssembly,
    BoundaryAssembly,
    Solver,
}

/// Per-rank elapsed times of one balancing iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    pub iteration: usize,
    pub times: Vec<f64>,
    pub phase: Phase,
}

impl TimingSample {
    pub fn new(iteration: usize, times: Vec<f64>, phase: Phase) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("timing sample has no ranks"));
        }
        if let Some((i, t)) = times.iter().enumerate().find(|(_, t)| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::invalid(format!("rank {i}: time must be positive, got {t}")));
        }
        Ok(Self {
            iteration,
            times,
            phase,
        })
    }

    pub fn n_ranks(&self) -> usize {
        self.times.len()
    }

    pub fn mean(&self) -> f64 {
        self.times.iter().sum::<f64>() / self.times.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceMetrics {
    pub mean: f64,
    /// `max(t) / mean`, at least 1.
    pub imbalance: f64,
    pub per_rank: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Load-balance ratio `mean / max(t)`.
    pub lb: f64,
}

impl BalanceMetrics {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn compute_metrics(sample: &TimingSample) -> BalanceMetrics {
    let mean = sample.mean();
    let max = sample.times.iter().cloned().fold(f64::MIN, f64::max);
    BalanceMetrics {
        mean,
        imbalance: max / mean,
        per_rank: sample.times.iter().map(|t| t / mean).collect(),
        deviations: sample.times.iter().map(|t| (t - mean).abs()).collect(),
        lb: mean / max,
    }
}
