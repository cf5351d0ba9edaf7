//! Partition export.
//!
//! Text file: header `part 1 <P> <n_elements>`, then `<element_id> <subdomain>`
//! per line with subdomains numbered from 1, ordered by element id. The JSON
//! sidecar carries the cut positions and subdomain weights.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Partition;
use crate::ParseError;

pub fn write_partition(p: &Partition) -> String {
    let mut out = String::with_capacity(16 * (p.n_elements() + 1));
    let _ = writeln!(out, "part 1 {} {}", p.n_parts, p.n_elements());
    for &(id, part) in &p.assignment {
        let _ = writeln!(out, "{id} {}", part + 1);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSidecar {
    pub cut_bins: Vec<usize>,
    pub subdomain_weights: Vec<f64>,
}

impl From<&Partition> for PartitionSidecar {
    fn from(p: &Partition) -> Self {
        Self {
            cut_bins: p.cut_bins.clone(),
            subdomain_weights: p.subdomain_weights.clone(),
        }
    }
}

pub fn write_partition_sidecar(p: &Partition) -> String {
    serde_json::to_string_pretty(&PartitionSidecar::from(p)).expect("sidecar serializes")
}

/// Reads the text export back into `(P, [(element id, subdomain from 0)])`.
pub fn parse_partition(text: &str) -> Result<(usize, Vec<(u64, usize)>), ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| ParseError::new(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n_parts, n) = match fields.as_slice() {
        ["part", "1", p, n] => (
            p.parse::<usize>().map_err(|_| ParseError::new(1, format!("invalid part count {p:?}")))?,
            n.parse::<usize>().map_err(|_| ParseError::new(1, format!("invalid element count {n:?}")))?,
        ),
        _ => return Err(ParseError::new(1, "expected header `part 1 <P> <n_elements>`")),
    };
    if n_parts == 0 {
        return Err(ParseError::new(1, "part count must be positive"));
    }
    let mut out = Vec::with_capacity(n.min(1 << 20));
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if out.len() == n {
            return Err(ParseError::new(lineno, "unexpected record beyond declared count"));
        }
        let mut it = line.split_whitespace();
        let (Some(id), Some(part), None) = (it.next(), it.next(), it.next()) else {
            return Err(ParseError::new(lineno, "expected `<element_id> <subdomain>`"));
        };
        let id: u64 = id.parse().map_err(|_| ParseError::new(lineno, format!("invalid element id {id:?}")))?;
        let part: usize = part
            .parse()
            .map_err(|_| ParseError::new(lineno, format!("invalid subdomain {part:?}")))?;
        if part == 0 || part > n_parts {
            return Err(ParseError::new(lineno, format!("subdomain {part} outside 1..={n_parts}")));
        }
        if out.last().is_some_and(|&(prev, _)| prev >= id) {
            return Err(ParseError::new(lineno, "element ids must be strictly increasing"));
        }
        out.push((id, part - 1));
    }
    if out.len() != n {
        return Err(ParseError::new(0, format!("truncated file: expected {n} records, found {}", out.len())));
    }
    Ok((n_parts, out))
}
