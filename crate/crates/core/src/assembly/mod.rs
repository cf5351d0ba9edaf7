//! Packed mass-matrix assembly.
//!
//! Elements are grouped by [`Category`], stored contiguously and cut into
//! fixed-size packs; the last pack of a category is padded with zero
//! Jacobians. The kernel then evaluates
//! `Ae[i][j] = sum_g |J|[g] * w[g] * N[i][g] * N[j][g]` for all lanes of a
//! pack at once, with the lane index innermost.

mod reference;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::mesh::FullMesh;
use crate::{Error, Result};

pub use reference::{Category, ReferenceElement};

/// Elements per scatter chunk; fixed so the reduction tree does not depend
/// on the thread count.
const SCATTER_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct Pack {
    pub category: Category,
    pub reference: Arc<ReferenceElement>,
    pub pack_size: usize,
    /// Valid element ids; lanes at `valid_count..pack_size` are padding.
    pub element_ids: Vec<usize>,
    pub valid_count: usize,
    /// `|det J|`, laid out `[ngaus][pack_size]`. Zero in padded lanes.
    pub jacobian: Vec<f64>,
}

impl Pack {
    /// Element matrices for every lane, laid out `[nnode][nnode][pack_size]`.
    pub fn compute_lanes(&self) -> Vec<f64> {
        let Category { nnode, ngaus, .. } = self.category;
        let ps = self.pack_size;
        let r = &self.reference;
        let mut ae = vec![0.0; nnode * nnode * ps];
        for i in 0..nnode {
            for j in i..nnode {
                let out = &mut ae[(i * nnode + j) * ps..(i * nnode + j + 1) * ps];
                for g in 0..ngaus {
                    let (w, ni, nj) = (r.weights[g], r.n(i, g), r.n(j, g));
                    let jg = &self.jacobian[g * ps..(g + 1) * ps];
                    for (a, &jac) in out.iter_mut().zip(jg) {
                        *a += jac * w * ni * nj;
                    }
                }
            }
        }
        for i in 0..nnode {
            for j in 0..i {
                let (src, dst) = ((j * nnode + i) * ps, (i * nnode + j) * ps);
                ae.copy_within(src..src + ps, dst);
            }
        }
        ae
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackSet {
    pub packs: Vec<Pack>,
    pub n_elements: usize,
}

/// Dense symmetric element matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrix {
    pub nnode: usize,
    pub values: Vec<f64>,
}

impl ElementMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nnode + j]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.values[i * self.nnode..(i + 1) * self.nnode].iter().sum()
    }
}

/// Element matrices indexed by element position in the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub matrices: Vec<ElementMatrix>,
}

impl ElementMatrices {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Order-independent fingerprint of all entries' bit patterns.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for m in &self.matrices {
            for v in &m.values {
                h ^= v.to_bits();
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

fn category_of(mesh: &FullMesh, e: usize) -> Result<Category> {
    let el = &mesh.elements[e];
    Category::new(el.kind, el.rule)
}

fn element_coords(mesh: &FullMesh, e: usize) -> Vec<[f64; 3]> {
    mesh.elements[e].conn.iter().map(|&n| mesh.nodes[n]).collect()
}

/// Groups elements by category (ascending element id within each) and
/// gathers their Jacobians into packs of `pack_size` lanes.
pub fn build_packs(mesh: &FullMesh, pack_size: usize) -> Result<PackSet> {
    if pack_size == 0 {
        return Err(Error::invalid("pack size must be at least 1"));
    }
    mesh.validate()?;
    let mut groups: BTreeMap<Category, Vec<usize>> = BTreeMap::new();
    for e in 0..mesh.elements.len() {
        groups.entry(category_of(mesh, e)?).or_default().push(e);
    }

    let mut packs = Vec::new();
    for (category, ids) in groups {
        let reference = Arc::new(ReferenceElement::new(category));
        for chunk in ids.chunks(pack_size) {
            let mut jacobian = vec![0.0; category.ngaus * pack_size];
            for (lane, &e) in chunk.iter().enumerate() {
                for (g, d) in reference.jacobian_dets(&element_coords(mesh, e)).into_iter().enumerate() {
                    jacobian[g * pack_size + lane] = d;
                }
            }
            packs.push(Pack {
                category,
                reference: Arc::clone(&reference),
                pack_size,
                element_ids: chunk.to_vec(),
                valid_count: chunk.len(),
                jacobian,
            });
        }
    }
    Ok(PackSet {
        packs,
        n_elements: mesh.elements.len(),
    })
}

/// Runs the kernel over all packs (in parallel) and scatters valid lanes to
/// their element slots; padded lanes are dropped.
pub fn assemble_packs(set: &PackSet) -> ElementMatrices {
    let per_pack: Vec<Vec<(usize, ElementMatrix)>> = set
        .packs
        .par_iter()
        .map(|pack| {
            let nnode = pack.category.nnode;
            let ps = pack.pack_size;
            let lanes = pack.compute_lanes();
            pack.element_ids
                .iter()
                .enumerate()
                .map(|(lane, &e)| {
                    let values = (0..nnode * nnode).map(|ij| lanes[ij * ps + lane]).collect();
                    (e, ElementMatrix { nnode, values })
                })
                .collect()
        })
        .collect();

    let mut slots: Vec<Option<ElementMatrix>> = vec![None; set.n_elements];
    for (e, m) in per_pack.into_iter().flatten() {
        slots[e] = Some(m);
    }
    ElementMatrices {
        matrices: slots
            .into_iter()
            .map(|m| m.expect("every element belongs to one pack"))
            .collect(),
    }
}

/// Classical element-by-element assembly.
pub fn assemble_reference(mesh: &FullMesh) -> Result<ElementMatrices> {
    let mut refs: BTreeMap<Category, ReferenceElement> = BTreeMap::new();
    let mut matrices = Vec::with_capacity(mesh.elements.len());
    for e in 0..mesh.elements.len() {
        let cat = category_of(mesh, e)?;
        let r = refs.entry(cat).or_insert_with(|| ReferenceElement::new(cat));
        let dets = r.jacobian_dets(&element_coords(mesh, e));
        let n = cat.nnode;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (g, &d) in dets.iter().enumerate() {
                    acc += d * r.weights[g] * r.n(i, g) * r.n(j, g);
                }
                values[i * n + j] = acc;
                values[j * n + i] = acc;
            }
        }
        matrices.push(ElementMatrix { nnode: n, values });
    }
    Ok(ElementMatrices { matrices })
}

/// Global node-by-node matrix in coordinate form, sorted by `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(r, _, v) in &self.entries {
            out[r] += v;
        }
        out
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or(0.0)
    }
}

/// Sums element matrices into the global matrix through the connectivity.
/// Fixed-size element chunks accumulate locally in ascending element id and
/// are merged in chunk order.
pub fn scatter_global(matrices: &ElementMatrices, mesh: &FullMesh) -> Result<CooMatrix> {
    if matrices.len() != mesh.elements.len() {
        return Err(Error::LengthMismatch {
            expected: mesh.elements.len(),
            actual: matrices.len(),
        });
    }
    let partials: Vec<BTreeMap<(usize, usize), f64>> = (0..mesh.elements.len())
        .collect::<Vec<_>>()
        .par_chunks(SCATTER_CHUNK)
        .map(|chunk| {
            let mut local = BTreeMap::new();
            for &e in chunk {
                let conn = &mesh.elements[e].conn;
                let m = &matrices.matrices[e];
                for (i, &a) in conn.iter().enumerate() {
                    for (j, &b) in conn.iter().enumerate() {
                        *local.entry((a, b)).or_insert(0.0) += m.get(i, j);
                    }
                }
            }
            local
        })
        .collect();

    let mut global: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for part in partials {
        for (k, v) in part {
            *global.entry(k).or_insert(0.0) += v;
        }
    }
    Ok(CooMatrix {
        n: mesh.nodes.len(),
        entries: global.into_iter().map(|((a, b), v)| (a, b, v)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pack_size: usize,
    pub median_seconds: f64,
    pub speedup: f64,
}

/// Times [`assemble_packs`] for each pack size (pack construction excluded,
/// one discarded warm-up run) and normalizes to pack size 1, which is always
/// included.
pub fn sweep_pack_size(mesh: &FullMesh, sizes: &[usize], reps: usize) -> Result<Vec<SweepRow>> {
    if reps < 3 {
        return Err(Error::invalid("at least 3 repetitions are required"));
    }
    let mut sizes: Vec<usize> = sizes.to_vec();
    sizes.push(1);
    sizes.sort_unstable();
    sizes.dedup();

    let mut medians = Vec::with_capacity(sizes.len());
    for &size in &sizes {
        let set = build_packs(mesh, size)?;
        std::hint::black_box(assemble_packs(&set));
        let mut times: Vec<f64> = (0..reps)
            .map(|_| {
                let start = Instant::now();
                std::hint::black_box(assemble_packs(std::hint::black_box(&set)));
                start.elapsed().as_secs_f64()
            })
            .collect();
        times.sort_by(f64::total_cmp);
        let mid = times.len() / 2;
        let median = if times.len() % 2 == 1 {
            times[mid]
        } else {
            0.5 * (times[mid - 1] + times[mid])
        };
        // Clock resolution floor keeps speedups finite on tiny meshes.
        medians.push(median.max(1e-9));
    }
    let base = medians[0];
    Ok(sizes
        .into_iter()
        .zip(medians)
        .map(|(pack_size, median_seconds)| SweepRow {
            pack_size,
            median_seconds,
            speedup: base / median_seconds,
        })
        .collect())
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("pack_size,median_seconds,speedup\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.pack_size, r.median_seconds, r.speedup);
    }
    out
}
