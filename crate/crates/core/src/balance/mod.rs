//! Iterative partition correction driven by measured per-rank times.
//!
//! Each iteration partitions with the current coefficients, times the
//! element-assembly phase, records `(Lambda_i, Upsilon_i)` for every
//! splitting point and moves each point to where its regression line
//! crosses `y = i`.

mod correction;
mod metrics;
mod regression;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;
use crate::sfc::{project_to_bins, split_1d, BinSequence, Partition, SfcConfig};
use crate::{Error, Result};

pub use correction::{project_monotone, CorrectionState, UpdateOutcome, BETA_MIN, DEFAULT_WLR_GROWTH, DELTA_MIN};
pub use metrics::{compute_metrics, BalanceMetrics, Phase, TimingSample};
pub use regression::{fit, FitError, Observation, RegressionFit, RegressionMode, MIN_X_VARIANCE};

pub const DEFAULT_TOL: f64 = 0.02;
pub const DEFAULT_MAX_ITERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceOptions {
    pub mode: RegressionMode,
    /// Converged once `I - 1 <= tol`.
    pub tol: f64,
    pub max_iters: usize,
    pub wlr_growth: f64,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        Self {
            mode: RegressionMode::Wlr,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            wlr_growth: DEFAULT_WLR_GROWTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub lambda: Vec<f64>,
    pub times: Vec<f64>,
    pub imbalance: f64,
    pub lb: f64,
    pub max_dev: f64,
    pub mean: f64,
    pub cut_bins: Vec<usize>,
    pub subdomain_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub final_partition_ref: Option<String>,
    #[serde(skip)]
    pub final_partition: Option<Partition>,
}

impl BalanceReport {
    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("a report holds at least one iteration")
    }

    pub fn n_iterations(&self) -> usize {
        self.iterations.len()
    }

    /// Flat `k,rank,time,I_k` table, ranks numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,rank,time,I_k\n");
        for it in &self.iterations {
            for (r, t) in it.times.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", it.k, r + 1, t, t / it.mean);
            }
        }
        out
    }
}

/// Runs the balancing loop on a mesh. The timer receives each candidate
/// partition and the 1-based iteration number and must return
/// element-assembly times for every subdomain.
pub fn run_balancing_loop<F>(
    mesh: &Mesh,
    cfg: &SfcConfig,
    n_parts: usize,
    timer: F,
    opts: &BalanceOptions,
) -> Result<BalanceReport>
where
    F: FnMut(&Partition, usize) -> Result<TimingSample>,
{
    let seq = project_to_bins(mesh, cfg)?;
    run_balancing_on_bins(&seq, n_parts, timer, opts)
}

/// [`run_balancing_loop`] over an already projected bin sequence.
pub fn run_balancing_on_bins<F>(
    seq: &BinSequence,
    n_parts: usize,
    mut timer: F,
    opts: &BalanceOptions,
) -> Result<BalanceReport>
where
    F: FnMut(&Partition, usize) -> Result<TimingSample>,
{
    if opts.max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    if !(opts.tol.is_finite() && opts.tol >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be non-negative, got {}", opts.tol)));
    }
    let mut state = CorrectionState::with_growth(n_parts, opts.mode, opts.wlr_growth)?;
    let mut iterations = Vec::new();
    let mut converged = false;
    let mut last = None;

    for k in 1..=opts.max_iters {
        let lambda = state.coeffs();
        let partition = split_1d(seq, n_parts, &lambda)?;
        let sample = timer(&partition, k)?;
        if sample.n_ranks() != n_parts {
            return Err(Error::LengthMismatch {
                expected: n_parts,
                actual: sample.n_ranks(),
            });
        }
        if sample.phase != Phase::ElementAssembly {
            return Err(Error::invalid("balancing is driven by element-assembly times"));
        }
        let m = compute_metrics(&sample);
        iterations.push(IterationRecord {
            k,
            lambda,
            times: sample.times.clone(),
            imbalance: m.imbalance,
            lb: m.lb,
            max_dev: m.max_deviation(),
            mean: m.mean,
            cut_bins: partition.cut_bins.clone(),
            subdomain_weights: partition.subdomain_weights.clone(),
        });
        last = Some(partition);
        if m.imbalance - 1.0 <= opts.tol {
            converged = true;
            break;
        }
        if k < opts.max_iters {
            state.observe(&sample)?;
            state.update_coefficients();
        }
    }

    Ok(BalanceReport {
        iterations,
        converged,
        final_partition_ref: None,
        final_partition: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Linear cost model: time = weight / throughput.
    fn linear_timer(throughput: Vec<f64>) -> impl FnMut(&Partition, usize) -> Result<TimingSample> {
        move |p, k| {
            let times = p
                .subdomain_weights
                .iter()
                .zip(&throughput)
                .map(|(w, th)| w / th)
                .collect();
            TimingSample::new(k, times, Phase::ElementAssembly)
        }
    }

    #[test]
    fn already_balanced_stops_at_first_iteration() {
        let seq = BinSequence::from_weights(&vec![1.0; 400]).unwrap();
        let r = run_balancing_on_bins(&seq, 8, linear_timer(vec![1.0; 8]), &BalanceOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.n_iterations(), 1);
        assert!(r.last().lambda.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn heterogeneous_converges_to_throughput_shares() {
        let theta = vec![1.0, 10.0, 3.0, 5.0];
        let seq = BinSequence::from_weights(&vec![1.0; 20_000]).unwrap();
        let r = run_balancing_on_bins(&seq, 4, linear_timer(theta.clone()), &BalanceOptions::default()).unwrap();
        assert!(r.converged, "{:?}", r.iterations.iter().map(|i| i.imbalance).collect::<Vec<_>>());
        let total: f64 = theta.iter().sum();
        for (w, th) in r.last().subdomain_weights.iter().zip(&theta) {
            let ideal = 20_000.0 * th / total;
            assert!((w - ideal).abs() <= 0.03 * ideal + 1.0, "{w} vs {ideal}");
        }
    }

    #[test]
    fn report_serialization_and_csv() {
        let seq = BinSequence::from_weights(&vec![1.0; 100]).unwrap();
        let opts = BalanceOptions {
            max_iters: 3,
            ..Default::default()
        };
        let r = run_balancing_on_bins(&seq, 2, linear_timer(vec![1.0, 2.0]), &opts).unwrap();
        let json: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert!(json["iterations"][0]["lambda"].is_array());
        assert!(json["converged"].is_boolean());
        let csv = r.to_csv();
        assert!(csv.starts_with("k,rank,time,I_k\n1,1,"));
        assert_eq!(csv.lines().count(), 1 + 2 * r.n_iterations());
    }

    #[test]
    fn stops_at_max_iters() {
        let seq = BinSequence::from_weights(&[1.0, 1.0, 1.0]).unwrap();
        let opts = BalanceOptions {
            max_iters: 4,
            tol: 0.0,
            ..Default::default()
        };
        let r = run_balancing_on_bins(&seq, 2, linear_timer(vec![1.0, 7.0]), &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.n_iterations(), 4);
        assert!(r.final_partition.is_some());
    }

    #[test]
    fn timer_length_checked() {
        let seq = BinSequence::from_weights(&[1.0; 10]).unwrap();
        let res = run_balancing_on_bins(
            &seq,
            2,
            |_, k| TimingSample::new(k, vec![1.0, 2.0, 3.0], Phase::ElementAssembly),
            &BalanceOptions::default(),
        );
        assert!(matches!(res, Err(Error::LengthMismatch { .. })));
    }
}
