#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mesh) = coexbal::mesh::parse_mesh(text) {
        // Accepted meshes survive a write/parse cycle unchanged.
        let again = coexbal::mesh::parse_mesh(&coexbal::mesh::write_mesh(&mesh)).expect("canonical output parses");
        assert_eq!(mesh, again);
    }
});
