use serde::{Deserialize, Serialize};

/// Fits below this variance of the abscissae are treated as degenerate.
pub const MIN_X_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressionMode {
    /// All observations weigh the same.
    Slr,
    /// Observation `k` (1-based, oldest first) weighs `growth^(k-1)`.
    Wlr,
}

/// One `(cumulative coefficient, normalized cumulative time)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub lambda_cum: f64,
    pub upsilon: f64,
}

/// Line `y = alpha + beta * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub alpha: f64,
    pub beta: f64,
    pub n_obs: usize,
}

impl RegressionFit {
    /// Abscissa where the line reaches `y`.
    pub fn solve_for(&self, y: f64) -> f64 {
        (y - self.alpha) / self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FitError {
    #[error("no observations")]
    Empty,
    #[error("abscissae have (near) zero variance")]
    Degenerate,
}

/// Weighted least-squares line through the anchor `(0, 0)` (weight 1) and
/// the observations.
pub fn fit(history: &[Observation], mode: RegressionMode, wlr_growth: f64) -> Result<RegressionFit, FitError> {
    if history.is_empty() {
        return Err(FitError::Empty);
    }
    let mut points = Vec::with_capacity(history.len() + 1);
    points.push((0.0, 0.0, 1.0));
    let mut w = 1.0;
    for obs in history {
        points.push((obs.lambda_cum, obs.upsilon, w));
        if mode == RegressionMode::Wlr {
            w *= wlr_growth;
        }
    }

    let sw: f64 = points.iter().map(|p| p.2).sum();
    let mx = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx / sw >= MIN_X_VARIANCE) {
        return Err(FitError::Degenerate);
    }
    let beta = sxy / sxx;
    Ok(RegressionFit {
        alpha: my - beta * mx,
        beta,
        n_obs: history.len(),
    })
}
