#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mesh) = coexbal::mesh::FullMesh::from_json(text) {
        let again = coexbal::mesh::FullMesh::from_json(&mesh.to_json()).expect("serialized mesh parses");
        assert_eq!(mesh, again);
        let _ = coexbal::assembly::build_packs(&mesh, 8);
    }
});
