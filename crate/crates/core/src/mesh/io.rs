//! Canonical line-oriented partition-mesh format.
//!
//! ```text
//! pmesh 1 <n_elements>
//! <id> <tet|pyr|pri|hex> <cx> <cy> <cz> <weight>
//! ...
//! ```
//!
//! Reals are written in shortest round-trip decimal, so a store/load cycle is
//! bit-exact.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{check_element, ElementKind, Mesh, PartitionElement};
use crate::{ParseError, Result};

const MAGIC: &str = "pmesh";
const VERSION: &str = "1";

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::with_capacity(48 * (mesh.len() + 1));
    let _ = writeln!(out, "{MAGIC} {VERSION} {}", mesh.len());
    for e in mesh.elements() {
        let [x, y, z] = e.centroid;
        let _ = writeln!(out, "{} {} {x} {y} {z} {}", e.id, e.kind.tag(), e.weight);
    }
    out
}

pub fn store_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = fs::read_to_string(path)?;
    Ok(parse_mesh(&text)?)
}

/// Parses the canonical text format. Never returns a partial mesh.
pub fn parse_mesh(text: &str) -> std::result::Result<Mesh, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "missing header"))?;
    let n = parse_header(header)?;
    if n == 0 {
        return Err(ParseError::new(1, "mesh must contain at least one element"));
    }

    // Cap the pre-allocation; the header count is untrusted.
    let mut elements = Vec::with_capacity(n.min(1 << 20));
    let mut ids = HashSet::with_capacity(n.min(1 << 20));
    for (lineno, line) in lines.by_ref() {
        if elements.len() == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(ParseError::new(lineno, format!("unexpected record beyond declared count {n}")));
        }
        let e = parse_record(lineno, line)?;
        if !ids.insert(e.id) {
            return Err(ParseError::new(lineno, format!("duplicate element id {}", e.id)));
        }
        check_element(&e).map_err(|m| ParseError::new(lineno, m))?;
        elements.push(e);
    }
    if elements.len() != n {
        return Err(ParseError::new(
            elements.len() + 2,
            format!("truncated file: expected {n} records, found {}", elements.len()),
        ));
    }
    Mesh::new(elements).map_err(|e| ParseError::new(0, e.to_string()))
}

fn parse_header(line: &str) -> std::result::Result<usize, ParseError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        [MAGIC, VERSION, n] => n
            .parse()
            .map_err(|_| ParseError::new(1, format!("invalid element count {n:?}"))),
        [MAGIC, v, _] => Err(ParseError::new(1, format!("unsupported pmesh version {v:?}"))),
        _ => Err(ParseError::new(1, "expected header `pmesh 1 <n_elements>`")),
    }
}

fn parse_record(lineno: usize, line: &str) -> std::result::Result<PartitionElement, ParseError> {
    let err = |m: String| ParseError::new(lineno, m);
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [id, kind, cx, cy, cz, w] = fields.as_slice() else {
        return Err(err(format!("expected 6 fields, found {}", fields.len())));
    };
    let id: u64 = id.parse().map_err(|_| err(format!("invalid element id {id:?}")))?;
    let kind = ElementKind::from_tag(kind).ok_or_else(|| err(format!("unknown element kind {kind:?}")))?;
    let real = |s: &str, what: &str| -> std::result::Result<f64, ParseError> {
        let v: f64 = s.parse().map_err(|_| err(format!("invalid {what} {s:?}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err(format!("non-finite {what}")))
        }
    };
    Ok(PartitionElement {
        id,
        kind,
        centroid: [real(cx, "x")?, real(cy, "y")?, real(cz, "z")?],
        weight: real(w, "weight")?,
    })
}
