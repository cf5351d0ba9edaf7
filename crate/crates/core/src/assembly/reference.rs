//! Reference-element tables: Gauss points, weights, shape functions and
//! their derivatives for the supported categories.

use crate::mesh::ElementKind;
use crate::{Error, Result};

/// Integration category: element kind plus Gauss rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Category {
    pub kind: ElementKind,
    /// Gauss-point count, doubling as the rule id.
    pub rule: u32,
    pub nnode: usize,
    pub ngaus: usize,
}

impl Category {
    pub fn new(kind: ElementKind, rule: u32) -> Result<Self> {
        match (kind, rule) {
            (ElementKind::Tetrahedron, 1 | 4) | (ElementKind::Hexahedron, 8) => Ok(Self {
                kind,
                rule,
                nnode: kind.node_count(),
                ngaus: rule as usize,
            }),
            _ => Err(Error::UnsupportedCategory(format!(
                "no shape functions for {} with rule {rule}",
                kind.tag()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceElement {
    pub category: Category,
    /// Quadrature weights, `[ngaus]`.
    pub weights: Vec<f64>,
    /// Shape values `N[i][g]`, stored `i * ngaus + g`.
    pub shape: Vec<f64>,
    /// Reference gradients `dN[i][g]`, stored `i * ngaus + g`.
    pub grad: Vec<[f64; 3]>,
}

impl ReferenceElement {
    pub fn new(category: Category) -> Self {
        let points = gauss_points(category);
        let nnode = category.nnode;
        let ngaus = category.ngaus;
        let mut shape = vec![0.0; nnode * ngaus];
        let mut grad = vec![[0.0; 3]; nnode * ngaus];
        for (g, (xi, _)) in points.iter().enumerate() {
            for i in 0..nnode {
                let (n, dn) = shape_fn(category.kind, i, *xi);
                shape[i * ngaus + g] = n;
                grad[i * ngaus + g] = dn;
            }
        }
        Self {
            category,
            weights: points.iter().map(|p| p.1).collect(),
            shape,
            grad,
        }
    }

    #[inline]
    pub fn n(&self, i: usize, g: usize) -> f64 {
        self.shape[i * self.category.ngaus + g]
    }

    /// `|det J|` of the isoparametric map at every Gauss point.
    pub fn jacobian_dets(&self, coords: &[[f64; 3]]) -> Vec<f64> {
        let ngaus = self.category.ngaus;
        (0..ngaus)
            .map(|g| {
                let mut j = [[0.0f64; 3]; 3];
                for (i, x) in coords.iter().enumerate() {
                    let dn = self.grad[i * ngaus + g];
                    for a in 0..3 {
                        for b in 0..3 {
                            j[a][b] += x[a] * dn[b];
                        }
                    }
                }
                det3(&j).abs()
            })
            .collect()
    }
}

pub(crate) fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn gauss_points(c: Category) -> Vec<([f64; 3], f64)> {
    match (c.kind, c.rule) {
        (ElementKind::Tetrahedron, 1) => vec![([0.25; 3], 1.0 / 6.0)],
        (ElementKind::Tetrahedron, 4) => {
            let a = 0.585_410_196_624_968_5;
            let b = 0.138_196_601_125_010_5;
            let w = 1.0 / 24.0;
            vec![([a, b, b], w), ([b, a, b], w), ([b, b, a], w), ([b, b, b], w)]
        }
        (ElementKind::Hexahedron, 8) => {
            let q = 1.0 / 3f64.sqrt();
            HEX_CORNERS
                .iter()
                .map(|s| ([s[0] * q, s[1] * q, s[2] * q], 1.0))
                .collect()
        }
        _ => unreachable!("category validated on construction"),
    }
}

/// Reference-cube corners in node order.
const HEX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

fn shape_fn(kind: ElementKind, i: usize, xi: [f64; 3]) -> (f64, [f64; 3]) {
    match kind {
        ElementKind::Tetrahedron => match i {
            0 => (1.0 - xi[0] - xi[1] - xi[2], [-1.0, -1.0, -1.0]),
            1 => (xi[0], [1.0, 0.0, 0.0]),
            2 => (xi[1], [0.0, 1.0, 0.0]),
            _ => (xi[2], [0.0, 0.0, 1.0]),
        },
        ElementKind::Hexahedron => {
            let s = HEX_CORNERS[i];
            let f = [
                1.0 + s[0] * xi[0],
                1.0 + s[1] * xi[1],
                1.0 + s[2] * xi[2],
            ];
            (
                0.125 * f[0] * f[1] * f[2],
                [
                    0.125 * s[0] * f[1] * f[2],
                    0.125 * f[0] * s[1] * f[2],
                    0.125 * f[0] * f[1] * s[2],
                ],
            )
        }
        _ => unreachable!("category validated on construction"),
    }
}
