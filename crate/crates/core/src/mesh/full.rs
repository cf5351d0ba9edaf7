//! Node/connectivity mesh used by the assembly workload.
//!
//! JSON layout:
//! `{"nodes": [[x,y,z], ...], "elements": [{"kind": "tet", "conn": [...], "rule": 4}, ...]}`
//! where `rule` is the Gauss-point count of the element's integration rule.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ElementKind, Mesh, PartitionElement};
use crate::{Error, ParseError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullElement {
    pub kind: ElementKind,
    pub conn: Vec<usize>,
    pub rule: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullMesh {
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<FullElement>,
}

/// Integration rules known for each kind, by Gauss-point count.
pub(crate) fn known_rule(kind: ElementKind, rule: u32) -> bool {
    matches!(
        (kind, rule),
        (ElementKind::Tetrahedron, 1 | 4)
            | (ElementKind::Pyramid, 5)
            | (ElementKind::Prism, 6)
            | (ElementKind::Hexahedron, 8)
    )
}

impl FullMesh {
    pub fn new(nodes: Vec<[f64; 3]>, elements: Vec<FullElement>) -> Result<Self> {
        let mesh = Self { nodes, elements };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> std::result::Result<(), ParseError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.iter().any(|c| !c.is_finite()) {
                return Err(ParseError::new(0, format!("node {i}: non-finite coordinate")));
            }
        }
        for (i, e) in self.elements.iter().enumerate() {
            let want = e.kind.node_count();
            if e.conn.len() != want {
                return Err(ParseError::new(
                    0,
                    format!("element {i}: {} needs {want} nodes, got {}", e.kind.tag(), e.conn.len()),
                ));
            }
            if let Some(&bad) = e.conn.iter().find(|&&c| c >= self.nodes.len()) {
                return Err(ParseError::new(0, format!("element {i}: node index {bad} out of range")));
            }
            if !known_rule(e.kind, e.rule) {
                return Err(ParseError::new(
                    0,
                    format!("element {i}: unknown rule id {} for {}", e.rule, e.kind.tag()),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, ParseError> {
        let mesh: FullMesh = serde_json::from_str(text).map_err(|e| ParseError::new(e.line(), e.to_string()))?;
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("full mesh serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }

    pub fn store(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn centroid(&self, element: usize) -> [f64; 3] {
        let conn = &self.elements[element].conn;
        let mut c = [0.0; 3];
        for &n in conn {
            for a in 0..3 {
                c[a] += self.nodes[n][a];
            }
        }
        c.map(|v| v / conn.len() as f64)
    }

    /// Partition view: node-average centroids, weight = Gauss-point count.
    /// Element ids are positions in `elements`.
    pub fn to_partition_mesh(&self) -> Result<Mesh> {
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| PartitionElement {
                id: i as u64,
                kind: e.kind,
                centroid: self.centroid(i),
                weight: f64::from(e.rule),
            })
            .collect();
        Mesh::new(elements)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMeshOptions {
    /// Cells per axis over the unit cube.
    pub dims: [usize; 3],
    /// Probability that a cell is split into six tetrahedra instead of kept as a hexahedron.
    pub tet_fraction: f64,
    /// Interior-node displacement as a fraction of the cell size, in `[0, 0.25]`.
    pub jitter: f64,
    /// Gauss rule for tetrahedra (1 or 4).
    pub tet_rule: u32,
    pub seed: u64,
}

impl Default for GridMeshOptions {
    fn default() -> Self {
        Self {
            dims: [4, 4, 4],
            tet_fraction: 0.5,
            jitter: 0.0,
            tet_rule: 4,
            seed: 0,
        }
    }
}

/// Structured hex/tet mesh of the unit cube. With `jitter == 0` the element
/// volumes sum to exactly 1.
pub fn generate_full_mesh(opts: &GridMeshOptions) -> Result<FullMesh> {
    let [nx, ny, nz] = opts.dims;
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::invalid("grid dimensions must be positive"));
    }
    if !(0.0..=1.0).contains(&opts.tet_fraction) {
        return Err(Error::invalid("tet_fraction must lie in [0, 1]"));
    }
    if !(0.0..=0.25).contains(&opts.jitter) {
        return Err(Error::invalid("jitter must lie in [0, 0.25]"));
    }
    if !known_rule(ElementKind::Tetrahedron, opts.tet_rule) {
        return Err(Error::invalid(format!("unknown tetrahedron rule {}", opts.tet_rule)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let h = [1.0 / nx as f64, 1.0 / ny as f64, 1.0 / nz as f64];
    let node_id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let idx = [i, j, k];
                let dims = [nx, ny, nz];
                let mut p = [0.0; 3];
                for a in 0..3 {
                    p[a] = idx[a] as f64 * h[a];
                }
                let interior = (0..3).all(|a| idx[a] > 0 && idx[a] < dims[a]);
                if interior && opts.jitter > 0.0 {
                    for a in 0..3 {
                        p[a] += opts.jitter * h[a] * rng.random_range(-1.0..1.0);
                    }
                }
                nodes.push(p);
            }
        }
    }

    const AXIS_PERMUTATIONS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut elements = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corner = |bits: usize| node_id(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                if rng.random::<f64>() < opts.tet_fraction {
                    // Kuhn split along the 0-7 diagonal; conforming between neighbouring cells.
                    for perm in AXIS_PERMUTATIONS {
                        let b0 = 1 << perm[0];
                        let b1 = b0 | (1 << perm[1]);
                        elements.push(FullElement {
                            kind: ElementKind::Tetrahedron,
                            conn: vec![corner(0), corner(b0), corner(b1), corner(7)],
                            rule: opts.tet_rule,
                        });
                    }
                } else {
                    elements.push(FullElement {
                        kind: ElementKind::Hexahedron,
                        conn: [0b000, 0b001, 0b011, 0b010, 0b100, 0b101, 0b111, 0b110]
                            .iter()
                            .map(|&b| corner(b))
                            .collect(),
                        rule: 8,
                    });
                }
            }
        }
    }
    Ok(FullMesh { nodes, elements })
}
