//! Partition-level mesh representation.
//!
//! A [`Mesh`] is what the partitioner consumes: one centroid and one cost
//! weight per element. [`FullMesh`] carries nodes and connectivity for the
//! assembly workload and can be reduced to a [`Mesh`].

mod full;
mod io;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use full::{generate_full_mesh, FullElement, FullMesh, GridMeshOptions};
pub use io::{load_mesh, parse_mesh, store_mesh, write_mesh};

/// Largest accepted element weight. Keeps fixed-point weight sums in the
/// partitioner far from overflow.
pub const MAX_WEIGHT: f64 = 1e12;

/// Relative margin added to each bounding-box axis.
pub const BOX_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementKind {
    #[serde(rename = "tet")]
    Tetrahedron,
    #[serde(rename = "pyr")]
    Pyramid,
    #[serde(rename = "pri")]
    Prism,
    #[serde(rename = "hex")]
    Hexahedron,
}

impl ElementKind {
    pub const ALL: [ElementKind; 4] = [
        ElementKind::Tetrahedron,
        ElementKind::Pyramid,
        ElementKind::Prism,
        ElementKind::Hexahedron,
    ];

    pub fn node_count(self) -> usize {
        match self {
            ElementKind::Tetrahedron => 4,
            ElementKind::Pyramid => 5,
            ElementKind::Prism => 6,
            ElementKind::Hexahedron => 8,
        }
    }

    /// Gauss-point count of the default integration rule for this kind.
    pub fn default_gauss_points(self) -> u32 {
        match self {
            ElementKind::Tetrahedron => 4,
            ElementKind::Pyramid => 5,
            ElementKind::Prism => 6,
            ElementKind::Hexahedron => 8,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ElementKind::Tetrahedron => "tet",
            ElementKind::Pyramid => "pyr",
            ElementKind::Prism => "pri",
            ElementKind::Hexahedron => "hex",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "tet" => Some(ElementKind::Tetrahedron),
            "pyr" => Some(ElementKind::Pyramid),
            "pri" => Some(ElementKind::Prism),
            "hex" => Some(ElementKind::Hexahedron),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            ElementKind::Tetrahedron => 0,
            ElementKind::Pyramid => 1,
            ElementKind::Prism => 2,
            ElementKind::Hexahedron => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionElement {
    pub id: u64,
    pub kind: ElementKind,
    pub centroid: [f64; 3],
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn extent(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

/// Validated, non-empty set of partition elements with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    elements: Vec<PartitionElement>,
    bounding_box: BoundingBox,
}

impl Mesh {
    pub fn new(elements: Vec<PartitionElement>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(elements.len());
        for e in &elements {
            if !seen.insert(e.id) {
                return Err(Error::invalid(format!("duplicate element id {}", e.id)));
            }
            check_element(e).map_err(Error::InvalidInput)?;
        }
        let bounding_box = compute_bounding_box(&elements)?;
        Ok(Self {
            elements,
            bounding_box,
        })
    }

    pub fn elements(&self) -> &[PartitionElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bounding_box
    }

    /// Sum of element weights, accumulated in storage order.
    pub fn total_weight(&self) -> f64 {
        self.elements.iter().map(|e| e.weight).sum()
    }
}

pub(crate) fn check_element(e: &PartitionElement) -> std::result::Result<(), String> {
    if !(e.weight.is_finite() && e.weight > 0.0) {
        return Err(format!("element {}: weight must be positive, got {}", e.id, e.weight));
    }
    if e.weight > MAX_WEIGHT {
        return Err(format!("element {}: weight {} exceeds {MAX_WEIGHT}", e.id, e.weight));
    }
    if e.centroid.iter().any(|c| !c.is_finite()) {
        return Err(format!("element {}: non-finite centroid", e.id));
    }
    Ok(())
}

/// Tight box over the element centroids, widened by [`BOX_MARGIN`] relative
/// to the largest extent. Axes with zero extent are widened to
/// `max(1e-9, 1e-9 * max_extent)`.
pub fn compute_bounding_box(elements: &[PartitionElement]) -> Result<BoundingBox> {
    let first = elements.first().ok_or(Error::EmptyMesh)?;
    let mut min = first.centroid;
    let mut max = first.centroid;
    for e in &elements[1..] {
        for a in 0..3 {
            min[a] = min[a].min(e.centroid[a]);
            max[a] = max[a].max(e.centroid[a]);
        }
    }
    let max_extent = (0..3).map(|a| max[a] - min[a]).fold(0.0, f64::max);
    let degenerate = f64::max(BOX_MARGIN, BOX_MARGIN * max_extent);
    for a in 0..3 {
        let extent = max[a] - min[a];
        let pad = if extent > 0.0 {
            0.5 * BOX_MARGIN * extent
        } else {
            0.5 * degenerate
        };
        min[a] -= pad;
        max[a] += pad;
        if max[a] - min[a] <= 0.0 {
            // Large coordinates can swallow the pad entirely.
            let ulp_pad = min[a].abs().max(1.0) * f64::EPSILON;
            min[a] -= ulp_pad;
            max[a] += ulp_pad;
        }
    }
    Ok(BoundingBox { min, max })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialProfile {
    Uniform,
    /// 80% of the elements inside the octant `[0, 0.5)^3`.
    Clustered,
}

/// Proportions of each element kind, indexed like [`ElementKind::ALL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindMix([f64; 4]);

impl KindMix {
    pub fn new(tet: f64, pyr: f64, pri: f64, hex: f64) -> Result<Self> {
        let p = [tet, pyr, pri, hex];
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("kind proportions must be non-negative"));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("kind proportions sum to {sum}, expected 1")));
        }
        Ok(Self(p))
    }

    pub fn only(kind: ElementKind) -> Self {
        let mut p = [0.0; 4];
        p[kind.index()] = 1.0;
        Self(p)
    }

    pub fn proportion(&self, kind: ElementKind) -> f64 {
        self.0[kind.index()]
    }

    /// Element counts per kind by largest-remainder apportionment.
    fn counts(&self, n: usize) -> [usize; 4] {
        let mut counts = [0usize; 4];
        let mut rem = [(0.0f64, 0usize); 4];
        for (i, p) in self.0.iter().enumerate() {
            let exact = p * n as f64;
            counts[i] = exact.floor() as usize;
            rem[i] = (exact - exact.floor(), i);
        }
        let assigned: usize = counts.iter().sum();
        rem.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in rem.iter().take(n.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }
}

impl Default for KindMix {
    fn default() -> Self {
        Self::only(ElementKind::Tetrahedron)
    }
}

/// Deterministic synthetic mesh with centroids inside the unit cube and
/// weights equal to each kind's default Gauss-point count.
pub fn generate_synthetic_mesh(
    n_elements: usize,
    kind_mix: KindMix,
    seed: u64,
    profile: SpatialProfile,
) -> Result<Mesh> {
    if n_elements == 0 {
        return Err(Error::invalid("n_elements must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = kind_mix.counts(n_elements);
    let mut kinds: Vec<ElementKind> = ElementKind::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&k, c)| std::iter::repeat_n(k, c))
        .collect();
    kinds.shuffle(&mut rng);

    let n_clustered = match profile {
        SpatialProfile::Uniform => 0,
        SpatialProfile::Clustered => (0.8 * n_elements as f64).floor() as usize,
    };
    let mut in_cluster: Vec<bool> = (0..n_elements).map(|i| i < n_clustered).collect();
    in_cluster.shuffle(&mut rng);

    let elements = kinds
        .into_iter()
        .zip(in_cluster)
        .enumerate()
        .map(|(i, (kind, clustered))| {
            let scale = if clustered { 0.5 } else { 1.0 };
            let centroid = [
                scale * rng.random::<f64>(),
                scale * rng.random::<f64>(),
                scale * rng.random::<f64>(),
            ];
            PartitionElement {
                id: i as u64,
                kind,
                centroid,
                weight: f64::from(kind.default_gauss_points()),
            }
        })
        .collect();
    Mesh::new(elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(id: u64, c: [f64; 3]) -> PartitionElement {
        PartitionElement {
            id,
            kind: ElementKind::Tetrahedron,
            centroid: c,
            weight: 4.0,
        }
    }

    #[test]
    fn all_tet_weights() {
        let m = generate_synthetic_mesh(8, KindMix::only(ElementKind::Tetrahedron), 7, SpatialProfile::Uniform)
            .unwrap();
        assert_eq!(m.len(), 8);
        assert!(m.elements().iter().all(|e| e.weight == 4.0));
        assert_eq!(m.total_weight(), 32.0);
    }

    #[test]
    fn single_hex() {
        let m = generate_synthetic_mesh(1, KindMix::only(ElementKind::Hexahedron), 0, SpatialProfile::Uniform)
            .unwrap();
        assert_eq!(m.total_weight(), 8.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let mix = KindMix::new(0.4, 0.1, 0.2, 0.3).unwrap();
        let a = generate_synthetic_mesh(500, mix, 11, SpatialProfile::Clustered).unwrap();
        let b = generate_synthetic_mesh(500, mix, 11, SpatialProfile::Clustered).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_mesh(500, mix, 12, SpatialProfile::Clustered).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mix_counts_are_exact() {
        let mix = KindMix::new(0.25, 0.25, 0.25, 0.25).unwrap();
        let m = generate_synthetic_mesh(10, mix, 3, SpatialProfile::Uniform).unwrap();
        let mut counts = [0; 4];
        for e in m.elements() {
            counts[e.kind.index()] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), 10);
        assert!(counts.iter().all(|&c| c == 2 || c == 3));
        for e in m.elements() {
            assert_eq!(e.weight, f64::from(e.kind.default_gauss_points()));
        }
    }

    #[test]
    fn clustered_profile_fills_one_octant() {
        let m = generate_synthetic_mesh(1000, KindMix::default(), 5, SpatialProfile::Clustered).unwrap();
        let inside = m
            .elements()
            .iter()
            .filter(|e| e.centroid.iter().all(|&c| c < 0.5))
            .count();
        // 800 placed there by construction, plus uniform ones landing there by chance.
        assert!(inside >= 800);
        assert!(inside < 900);
    }

    #[test]
    fn invalid_proportions_rejected() {
        assert!(KindMix::new(0.5, 0.5, 0.5, 0.0).is_err());
        assert!(KindMix::new(-0.5, 0.5, 0.5, 0.5).is_err());
        assert!(KindMix::new(0.5, 0.5, 0.0, 1e-10).is_ok());
    }

    #[test]
    fn zero_elements_rejected() {
        assert!(generate_synthetic_mesh(0, KindMix::default(), 0, SpatialProfile::Uniform).is_err());
    }

    #[test]
    fn bounding_box_tight_with_margin() {
        let bb = compute_bounding_box(&[at(0, [0.0; 3]), at(1, [1.0; 3])]).unwrap();
        for a in 0..3 {
            assert!(bb.min[a] < 0.0 && bb.min[a] > -1e-9);
            assert!(bb.max[a] > 1.0 && bb.max[a] < 1.0 + 1e-9);
        }
    }

    #[test]
    fn bounding_box_degenerate_point() {
        let bb = compute_bounding_box(&[at(0, [0.5; 3])]).unwrap();
        for e in bb.extent() {
            assert!(e > 0.0);
            approx::assert_relative_eq!(e, 1e-9, max_relative = 1e-6);
        }
        assert!(bb.contains([0.5; 3]));
    }

    #[test]
    fn bounding_box_degenerate_axis_only() {
        let bb = compute_bounding_box(&[at(0, [0.0, 0.0, 0.3]), at(1, [2.0, 1.0, 0.3])]).unwrap();
        let ext = bb.extent();
        approx::assert_relative_eq!(ext[0], 2.0, max_relative = 1e-8);
        approx::assert_relative_eq!(ext[1], 1.0, max_relative = 1e-8);
        approx::assert_relative_eq!(ext[2], 2e-9, max_relative = 1e-6);
    }

    #[test]
    fn empty_box_is_error() {
        assert!(matches!(compute_bounding_box(&[]), Err(Error::EmptyMesh)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(Mesh::new(vec![at(3, [0.0; 3]), at(3, [1.0; 3])]).is_err());
    }

    #[test]
    fn non_positive_weight_rejected() {
        let mut e = at(0, [0.0; 3]);
        e.weight = 0.0;
        assert!(Mesh::new(vec![e]).is_err());
    }
}
