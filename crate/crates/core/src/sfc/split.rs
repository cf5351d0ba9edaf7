use rayon::prelude::*;

use super::{project_to_bins, units_to_weight, BinSequence, Partition, SfcConfig};
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Tolerance on `sum(lambda) == P`, relative to `P`.
const COEFF_SUM_TOL: f64 = 1e-9;

pub(crate) fn validate_coeffs(n_parts: usize, coeffs: &[f64]) -> Result<()> {
    if n_parts == 0 {
        return Err(Error::invalid("number of parts must be at least 1"));
    }
    if coeffs.len() != n_parts {
        return Err(Error::LengthMismatch {
            expected: n_parts,
            actual: coeffs.len(),
        });
    }
    if let Some((i, c)) = coeffs.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::InvalidCoefficients(format!("lambda[{i}] = {c} must be positive")));
    }
    let sum: f64 = coeffs.iter().sum();
    if (sum - n_parts as f64).abs() > COEFF_SUM_TOL * n_parts as f64 {
        return Err(Error::InvalidCoefficients(format!(
            "coefficients sum to {sum}, expected {n_parts}"
        )));
    }
    Ok(())
}

/// Cumulative target weights `sum_{j<=i} lambda_j * W / P` for the `P - 1`
/// interior splitting points.
pub fn cumulative_targets(coeffs: &[f64], total_weight: f64) -> Vec<f64> {
    let p = coeffs.len() as f64;
    let mut acc = 0.0;
    coeffs[..coeffs.len().saturating_sub(1)]
        .iter()
        .map(|&c| {
            acc += c;
            acc * total_weight / p
        })
        .collect()
}

/// Splits the bin sequence at the boundaries closest to the cumulative
/// targets (ties go to the earlier boundary). Bins are never divided.
pub fn split_1d(seq: &BinSequence, n_parts: usize, coeffs: &[f64]) -> Result<Partition> {
    split_1d_chunked(seq, n_parts, coeffs, 1)
}

/// [`split_1d`] computed over `n_chunks` contiguous key ranges, each scanning
/// locally after an exchange of prefix weights. The result is identical for
/// every chunk count.
pub fn split_1d_chunked(seq: &BinSequence, n_parts: usize, coeffs: &[f64], n_chunks: usize) -> Result<Partition> {
    validate_coeffs(n_parts, coeffs)?;
    if n_chunks == 0 {
        return Err(Error::invalid("n_chunks must be at least 1"));
    }
    if n_parts > seq.len() {
        return Err(Error::InsufficientGranularity {
            parts: n_parts,
            bins: seq.len(),
        });
    }
    if n_parts == 1 {
        return Ok(Partition::from_cuts(seq, Vec::new()));
    }

    let targets = cumulative_targets(coeffs, seq.total_weight());
    let ranges = chunk_ranges(seq, n_chunks);

    // Phase 1: chunk-local totals, then an exclusive prefix scan.
    let totals: Vec<i128> = ranges
        .par_iter()
        .map(|r| seq.bins()[r.clone()].iter().map(|b| b.units()).sum())
        .collect();
    let offsets: Vec<i128> = totals
        .iter()
        .scan(0i128, |acc, t| {
            let start = *acc;
            *acc += t;
            Some(start)
        })
        .collect();

    // Phase 2: each chunk proposes its best boundary per target.
    let proposals: Vec<Vec<Option<Candidate>>> = ranges
        .par_iter()
        .zip(offsets.par_iter())
        .map(|(r, &offset)| local_candidates(seq, r.clone(), offset, &targets))
        .collect();

    let mut cuts: Vec<usize> = (0..targets.len())
        .map(|i| {
            proposals
                .iter()
                .filter_map(|p| p[i])
                .min_by(|a, b| a.distance.total_cmp(&b.distance).then(a.boundary.cmp(&b.boundary)))
                .map(|c| c.boundary)
                .expect("some chunk owns an interior boundary")
        })
        .collect();

    enforce_feasible(&mut cuts, seq.len());
    Ok(Partition::from_cuts(seq, cuts))
}

/// Projects `mesh` and splits it with the chunked scan.
pub fn partition_chunked(
    mesh: &Mesh,
    cfg: &SfcConfig,
    n_parts: usize,
    coeffs: &[f64],
    n_chunks: usize,
) -> Result<Partition> {
    let seq = project_to_bins(mesh, cfg)?;
    split_1d_chunked(&seq, n_parts, coeffs, n_chunks)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    distance: f64,
    boundary: usize,
}

/// Bin-index ranges covering equal slices of the key space.
fn chunk_ranges(seq: &BinSequence, n_chunks: usize) -> Vec<std::ops::Range<usize>> {
    let space = u128::from(seq.key_space());
    let n = n_chunks as u128;
    let mut starts: Vec<usize> = (0..n_chunks)
        .map(|c| {
            let lo = (c as u128 * space / n) as u64;
            seq.bins().partition_point(|b| b.key < lo)
        })
        .collect();
    starts.push(seq.len());
    starts.windows(2).map(|w| w[0]..w[1]).collect()
}

/// Closest boundary to each target among those owned by one chunk. A chunk
/// owns the boundary after each of its bins, excluding the sequence end.
fn local_candidates(
    seq: &BinSequence,
    range: std::ops::Range<usize>,
    offset: i128,
    targets: &[f64],
) -> Vec<Option<Candidate>> {
    let start = range.start;
    let end = range.end.min(seq.len() - 1);
    if start >= end {
        return vec![None; targets.len()];
    }
    // cum[j] is the cumulative weight at boundary start + 1 + j.
    let mut acc = offset;
    let cum: Vec<f64> = seq.bins()[start..end]
        .iter()
        .map(|b| {
            acc += b.units();
            units_to_weight(acc)
        })
        .collect();

    targets
        .iter()
        .map(|&t| {
            let above = cum.partition_point(|&c| c < t);
            let mut best: Option<Candidate> = None;
            let mut consider = |j: usize| {
                // Earliest boundary carrying the same cumulative value.
                let j = cum.partition_point(|&c| c < cum[j]);
                let cand = Candidate {
                    distance: (cum[j] - t).abs(),
                    boundary: start + 1 + j,
                };
                if best.is_none_or(|b| cand.distance < b.distance) {
                    best = Some(cand);
                }
            };
            if above > 0 {
                consider(above - 1);
            }
            if above < cum.len() {
                consider(above);
            }
            best
        })
        .collect()
}

/// Makes cuts strictly increasing inside `[1, n_bins - 1]` so every
/// subdomain keeps at least one bin.
fn enforce_feasible(cuts: &mut [usize], n_bins: usize) {
    let mut prev = 0;
    for c in cuts.iter_mut() {
        *c = (*c).max(prev + 1);
        prev = *c;
    }
    let mut next = n_bins;
    for c in cuts.iter_mut().rev() {
        *c = (*c).min(next - 1);
        next = *c;
    }
}
