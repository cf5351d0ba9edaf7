use serde::{Deserialize, Serialize};

use super::regression::{fit, Observation, RegressionMode};
use super::TimingSample;
use crate::{Error, Result};

/// Smallest allowed correction coefficient (gap between consecutive
/// cumulative coefficients).
pub const DELTA_MIN: f64 = 0.01;
/// Regression slopes at or below this keep the previous splitting point.
pub const BETA_MIN: f64 = 1e-9;
pub const DEFAULT_WLR_GROWTH: f64 = 1.5;

/// Per-splitting-point observation history plus the current cumulative
/// coefficients `Lambda_0 = 0 < Lambda_1 < ... < Lambda_P = P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionState {
    n_parts: usize,
    history: Vec<Vec<Observation>>,
    cumulative: Vec<f64>,
    mode: RegressionMode,
    wlr_growth: f64,
}

/// Splitting points left untouched by an update because their fit was
/// unusable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub frozen: Vec<usize>,
}

impl CorrectionState {
    /// Starts from `lambda_i = 1` for every subdomain.
    pub fn new(n_parts: usize, mode: RegressionMode) -> Result<Self> {
        Self::with_growth(n_parts, mode, DEFAULT_WLR_GROWTH)
    }

    pub fn with_growth(n_parts: usize, mode: RegressionMode, wlr_growth: f64) -> Result<Self> {
        if n_parts == 0 {
            return Err(Error::invalid("number of parts must be at least 1"));
        }
        if !(wlr_growth.is_finite() && wlr_growth > 0.0) {
            return Err(Error::invalid(format!("WLR growth must be positive, got {wlr_growth}")));
        }
        Ok(Self {
            n_parts,
            history: vec![Vec::new(); n_parts - 1],
            cumulative: (0..=n_parts).map(|i| i as f64).collect(),
            mode,
            wlr_growth,
        })
    }

    pub fn n_parts(&self) -> usize {
        self.n_parts
    }

    pub fn mode(&self) -> RegressionMode {
        self.mode
    }

    /// Cumulative coefficients, `P + 1` entries starting at 0.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Observations for splitting point `i` in `1..P`.
    pub fn history(&self, i: usize) -> &[Observation] {
        &self.history[i - 1]
    }

    /// Correction coefficients `lambda_i = Lambda_i - Lambda_{i-1}`.
    pub fn coeffs(&self) -> Vec<f64> {
        self.cumulative.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Records `(Lambda_i, Upsilon_i)` for every splitting point, where
    /// `Upsilon_i` is the sum of the first `i` times over their mean.
    pub fn observe(&mut self, sample: &TimingSample) -> Result<()> {
        if sample.n_ranks() != self.n_parts {
            return Err(Error::LengthMismatch {
                expected: self.n_parts,
                actual: sample.n_ranks(),
            });
        }
        let mean = sample.mean();
        let mut partial = 0.0;
        for i in 1..self.n_parts {
            partial += sample.times[i - 1];
            self.history[i - 1].push(Observation {
                lambda_cum: self.cumulative[i],
                upsilon: partial / mean,
            });
        }
        Ok(())
    }

    /// Moves each splitting point to where its regression line crosses
    /// `y = i`, then restores a strictly increasing sequence with gaps of at
    /// least [`DELTA_MIN`].
    pub fn update_coefficients(&mut self) -> UpdateOutcome {
        let mut outcome = UpdateOutcome::default();
        let mut proposed = self.cumulative.clone();
        for i in 1..self.n_parts {
            let next = fit(&self.history[i - 1], self.mode, self.wlr_growth)
                .ok()
                .filter(|f| f.beta.is_finite() && f.beta > BETA_MIN)
                .map(|f| f.solve_for(i as f64))
                .filter(|x| x.is_finite());
            match next {
                Some(x) => proposed[i] = x,
                None => outcome.frozen.push(i),
            }
        }
        project_monotone(&mut proposed, DELTA_MIN);
        self.cumulative = proposed;
        outcome
    }
}

/// Clamps interior entries forward then backward so that
/// `c[i] - c[i-1] >= gap` with both endpoints fixed.
pub fn project_monotone(cumulative: &mut [f64], gap: f64) {
    let n = cumulative.len();
    if n < 3 {
        return;
    }
    for i in 1..n - 1 {
        cumulative[i] = cumulative[i].max(cumulative[i - 1] + gap);
    }
    for i in (1..n - 1).rev() {
        cumulative[i] = cumulative[i].min(cumulative[i + 1] - gap);
    }
}
