//! Replays the checked-in fuzz corpus through every parser and throws
//! arbitrary text at them. Seeds named `valid_*` must parse, `invalid_*` must
//! be rejected.

use std::fs;
use std::path::Path;

use coexbal::coexec::{ExecutionPlan, PlanConfig};
use coexbal::mesh::{parse_mesh, write_mesh, FullMesh};
use coexbal::sfc::parse_partition;
use proptest::prelude::*;

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut seeds: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&path).unwrap())
        })
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty(), "empty corpus for {target}");
    seeds
}

fn check<T, E: std::fmt::Debug>(target: &str, parse: impl Fn(&str) -> Result<T, E>) {
    for (name, text) in corpus(target) {
        let result = parse(&text);
        if name.starts_with("valid") {
            assert!(result.is_ok(), "{target}/{name}: {:?}", result.err());
        } else {
            assert!(result.is_err(), "{target}/{name} was accepted");
        }
    }
}

#[test]
fn pmesh_corpus() {
    check("parse_mesh", |t| {
        let mesh = parse_mesh(t)?;
        assert_eq!(parse_mesh(&write_mesh(&mesh)).unwrap(), mesh);
        Ok::<_, coexbal::ParseError>(mesh)
    });
}

#[test]
fn full_mesh_corpus() {
    check("full_mesh_json", FullMesh::from_json);
}

#[test]
fn plan_corpus() {
    check("plan_json", |t| {
        let cfg = PlanConfig::from_json(t).map_err(coexbal::Error::from)?;
        ExecutionPlan::from_config(&cfg)
    });
}

#[test]
fn partition_corpus() {
    check("parse_partition", parse_partition);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_mesh(&text);
        let _ = FullMesh::from_json(&text);
        let _ = PlanConfig::from_json(&text);
        let _ = parse_partition(&text);
    }

    #[test]
    fn pmesh_like_text_never_panics(
        n in 0usize..4,
        rows in prop::collection::vec(("[0-9]{1,3}", "tet|pyr|pri|hex|box", "-?[0-9.e]{1,6}", "-?[0-9.]{1,4}"), 0..5),
    ) {
        let mut text = format!("pmesh 1 {n}\n");
        for (id, kind, c, w) in rows {
            text.push_str(&format!("{id} {kind} {c} {c} {c} {w}\n"));
        }
        if let Ok(mesh) = parse_mesh(&text) {
            prop_assert_eq!(mesh.len(), n);
        }
    }

    #[test]
    fn partition_like_text_never_panics(
        p in 0usize..4,
        rows in prop::collection::vec((0u64..10, 0usize..5), 0..6),
    ) {
        let mut text = format!("part 1 {p} {}\n", rows.len());
        for (id, part) in &rows {
            text.push_str(&format!("{id} {part}\n"));
        }
        if let Ok((parts, assignment)) = parse_partition(&text) {
            prop_assert_eq!(parts, p);
            prop_assert!(assignment.iter().all(|&(_, s)| s < p));
        }
    }
}
