#![no_main]

use fraclap::mesh::{read_mesh, write_mesh, MeshDomain};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mesh) = read_mesh(text, MeshDomain::Polygon) {
        // Accepted meshes survive a write/read cycle unchanged.
        let written = write_mesh(&mesh);
        let again = read_mesh(&written, MeshDomain::Polygon).expect("written mesh parses");
        assert_eq!(write_mesh(&again), written);
    }
});
