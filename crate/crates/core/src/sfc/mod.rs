//! Space-filling-curve partitioner.
//!
//! Elements are quantized by centroid onto a regular `2^L` grid inside the
//! mesh bounding box, grouped into weighted bins, ordered along a Hilbert
//! curve, and the resulting 1D sequence is cut into `P` contiguous pieces
//! whose weights track per-subdomain targets `lambda_i * W / P`.
//!
//! Bin weights are accumulated in fixed point (see [`weight_units`]) so that
//! cumulative sums are exact and associative; this is what makes the chunked
//! partitioner produce bit-identical cuts for any chunk count.

mod hilbert;
mod io;
mod split;

use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;
use crate::{Error, Result};

pub use hilbert::{hilbert_cell, hilbert_key, MAX_LEVEL};
pub use io::{parse_partition, write_partition, write_partition_sidecar, PartitionSidecar};
pub use split::{partition_chunked, split_1d, split_1d_chunked};

/// Fractional bits of the fixed-point weight representation.
pub const WEIGHT_FRAC_BITS: u32 = 52;
const WEIGHT_SCALE: f64 = (1u64 << WEIGHT_FRAC_BITS) as f64;

/// Converts a weight to fixed-point units (nearest multiple of `2^-52`).
pub fn weight_units(w: f64) -> i128 {
    (w * WEIGHT_SCALE).round() as i128
}

pub(crate) fn units_to_weight(u: i128) -> f64 {
    u as f64 / WEIGHT_SCALE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curve {
    Hilbert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfcConfig {
    /// Bits per axis.
    pub level: u32,
    pub curve: Curve,
}

impl SfcConfig {
    pub fn new(level: u32) -> Result<Self> {
        if !(1..=MAX_LEVEL).contains(&level) {
            return Err(Error::invalid(format!("SFC level must be in 1..={MAX_LEVEL}, got {level}")));
        }
        Ok(Self {
            level,
            curve: Curve::Hilbert,
        })
    }

    pub fn key_space(&self) -> u64 {
        1u64 << (3 * self.level)
    }
}

impl Default for SfcConfig {
    fn default() -> Self {
        Self {
            level: 8,
            curve: Curve::Hilbert,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub key: u64,
    /// Element ids, ascending.
    pub element_ids: Vec<u64>,
    units: i128,
}

impl Bin {
    pub fn weight(&self) -> f64 {
        units_to_weight(self.units)
    }

    pub(crate) fn units(&self) -> i128 {
        self.units
    }
}

/// Occupied bins in strictly ascending key order.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSequence {
    bins: Vec<Bin>,
    key_space: u64,
    total_units: i128,
}

impl BinSequence {
    /// Builds a sequence directly from bin weights: keys `0..n`, one element
    /// per bin whose id is the bin index.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!("bin weight must be non-negative, got {w}")));
        }
        let bins: Vec<Bin> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Bin {
                key: i as u64,
                element_ids: vec![i as u64],
                units: weight_units(w),
            })
            .collect();
        let key_space = (bins.len() as u64).next_power_of_two();
        Ok(Self::from_bins(bins, key_space))
    }

    fn from_bins(bins: Vec<Bin>, key_space: u64) -> Self {
        let total_units = bins.iter().map(|b| b.units).sum();
        Self {
            bins,
            key_space,
            total_units,
        }
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        units_to_weight(self.total_units)
    }

    pub fn n_elements(&self) -> usize {
        self.bins.iter().map(|b| b.element_ids.len()).sum()
    }

    pub(crate) fn key_space(&self) -> u64 {
        self.key_space
    }
}

/// Grid cell of a centroid: floor of the normalized coordinate times `2^L`,
/// clamped into `[0, 2^L - 1]`.
pub(crate) fn quantize(p: [f64; 3], mesh: &Mesh, level: u32) -> [u32; 3] {
    let bb = mesh.bounding_box();
    let side = (1u64 << level) as f64;
    let max_cell = (1u32 << level) - 1;
    let mut cell = [0u32; 3];
    for a in 0..3 {
        let t = (p[a] - bb.min[a]) / (bb.max[a] - bb.min[a]);
        let c = (t * side).floor();
        cell[a] = if c <= 0.0 {
            0
        } else if c >= f64::from(max_cell) {
            max_cell
        } else {
            c as u32
        };
    }
    cell
}

/// Projects the mesh onto weighted Hilbert-ordered bins. The result does not
/// depend on the order of elements in the mesh.
pub fn project_to_bins(mesh: &Mesh, cfg: &SfcConfig) -> Result<BinSequence> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut keyed: Vec<(u64, u64, i128)> = mesh
        .elements()
        .iter()
        .map(|e| {
            let cell = quantize(e.centroid, mesh, cfg.level);
            (hilbert::encode(cell, cfg.level), e.id, weight_units(e.weight))
        })
        .collect();
    keyed.sort_unstable_by_key(|&(key, id, _)| (key, id));

    let mut bins: Vec<Bin> = Vec::new();
    for (key, id, units) in keyed {
        match bins.last_mut() {
            Some(b) if b.key == key => {
                b.element_ids.push(id);
                b.units += units;
            }
            _ => bins.push(Bin {
                key,
                element_ids: vec![id],
                units,
            }),
        }
    }
    Ok(BinSequence::from_bins(bins, cfg.key_space()))
}

/// Contiguous split of a bin sequence into `n_parts` subdomains.
///
/// `cut_bins[i]` is the number of bins in subdomains `0..=i`, i.e. the cut
/// sits right after bin `cut_bins[i] - 1`. Subdomains are indexed from 0
/// here; exported files number them from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub n_parts: usize,
    pub cut_bins: Vec<usize>,
    /// `(element id, subdomain)`, sorted by element id.
    pub assignment: Vec<(u64, usize)>,
    pub subdomain_weights: Vec<f64>,
}

impl Partition {
    pub fn n_elements(&self) -> usize {
        self.assignment.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.subdomain_weights.iter().sum()
    }

    /// Subdomain of an element, by binary search over the sorted assignment.
    pub fn subdomain_of(&self, id: u64) -> Option<usize> {
        self.assignment
            .binary_search_by_key(&id, |&(e, _)| e)
            .ok()
            .map(|i| self.assignment[i].1)
    }

    pub(crate) fn from_cuts(seq: &BinSequence, cut_bins: Vec<usize>) -> Self {
        let n_parts = cut_bins.len() + 1;
        let mut units = vec![0i128; n_parts];
        let mut assignment = Vec::with_capacity(seq.n_elements());
        let mut part = 0;
        for (b, bin) in seq.bins().iter().enumerate() {
            while part < cut_bins.len() && b >= cut_bins[part] {
                part += 1;
            }
            units[part] += bin.units();
            assignment.extend(bin.element_ids.iter().map(|&id| (id, part)));
        }
        assignment.sort_unstable();
        Partition {
            n_parts,
            cut_bins,
            assignment,
            subdomain_weights: units.into_iter().map(units_to_weight).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_synthetic_mesh, ElementKind, KindMix, PartitionElement, SpatialProfile};

    fn el(id: u64, c: [f64; 3], w: f64) -> PartitionElement {
        PartitionElement {
            id,
            kind: ElementKind::Tetrahedron,
            centroid: c,
            weight: w,
        }
    }

    #[test]
    fn opposite_corners_level_one() {
        let mesh = Mesh::new(vec![el(0, [0.0; 3], 4.0), el(1, [1.0; 3], 4.0)]).unwrap();
        let seq = project_to_bins(&mesh, &SfcConfig::new(1).unwrap()).unwrap();
        let keys: Vec<u64> = seq.bins().iter().map(|b| b.key).collect();
        assert_eq!(keys, vec![0, hilbert_key([1, 1, 1], 1).unwrap()]);
    }

    #[test]
    fn single_cell_is_single_bin() {
        let mesh = Mesh::new(vec![
            el(0, [0.1, 0.1, 0.1], 4.0),
            el(1, [0.1, 0.1, 0.1], 5.0),
            el(2, [0.1, 0.1, 0.1], 6.0),
        ])
        .unwrap();
        let seq = project_to_bins(&mesh, &SfcConfig::default()).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.total_weight(), 15.0);
        assert_eq!(seq.bins()[0].element_ids, vec![0, 1, 2]);
    }

    #[test]
    fn input_order_does_not_matter() {
        let mix = KindMix::new(0.5, 0.0, 0.0, 0.5).unwrap();
        let mesh = generate_synthetic_mesh(2000, mix, 1, SpatialProfile::Clustered).unwrap();
        let mut reversed: Vec<_> = mesh.elements().to_vec();
        reversed.reverse();
        let shuffled = Mesh::new(reversed).unwrap();
        let cfg = SfcConfig::new(4).unwrap();
        assert_eq!(project_to_bins(&mesh, &cfg).unwrap(), project_to_bins(&shuffled, &cfg).unwrap());
    }

    #[test]
    fn bins_sorted_and_conserve_weight() {
        let mix = KindMix::new(0.25, 0.25, 0.25, 0.25).unwrap();
        let mesh = generate_synthetic_mesh(3000, mix, 2, SpatialProfile::Uniform).unwrap();
        let seq = project_to_bins(&mesh, &SfcConfig::new(3).unwrap()).unwrap();
        assert!(seq.bins().windows(2).all(|w| w[0].key < w[1].key));
        assert!(seq.bins().iter().all(|b| b.element_ids.windows(2).all(|w| w[0] < w[1])));
        let rel = (seq.total_weight() - mesh.total_weight()).abs() / mesh.total_weight();
        assert!(rel <= 1e-12);
        assert_eq!(seq.n_elements(), 3000);
    }

    #[test]
    fn boundary_centroids_clamp_into_last_cell() {
        let mesh = Mesh::new(vec![el(0, [0.0; 3], 1.0), el(1, [1.0, 1.0, 1.0], 1.0)]).unwrap();
        let cell = quantize([1.0; 3], &mesh, 2);
        assert_eq!(cell, [3, 3, 3]);
        let cell = quantize([2.0, -1.0, 0.5], &mesh, 2);
        assert_eq!(cell, [3, 0, 2]);
    }

    #[test]
    fn fixed_point_units() {
        assert_eq!(weight_units(1.0), 1i128 << 52);
        assert_eq!(units_to_weight(weight_units(0.375)), 0.375);
        assert!((units_to_weight(weight_units(0.1)) - 0.1).abs() <= f64::EPSILON);
        assert_eq!(units_to_weight(weight_units(8.0) * 3), 24.0);
    }
}
