//! Regenerates the bundled hull meshes: `cargo run --example gen_meshes -- <dir>`.

use std::path::PathBuf;

use oceansim::mesh::{HullSpec, TriMesh};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenarios/meshes".into()));
    std::fs::create_dir_all(&dir).expect("create mesh directory");
    let hulls = [
        ("motorboat", HullSpec { length: 6.0, beam: 2.2, draft: 0.5, freeboard: 0.8, ring: 12, stations: 7, pointed_bow: false }),
        ("sailing_boat", HullSpec { length: 9.0, beam: 3.0, draft: 1.2, freeboard: 1.0, ring: 8, stations: 17, pointed_bow: true }),
        ("yacht", HullSpec { length: 14.0, beam: 4.2, draft: 1.2, freeboard: 1.8, ring: 15, stations: 5, pointed_bow: false }),
        ("zodiac", HullSpec { length: 4.2, beam: 1.9, draft: 0.3, freeboard: 0.5, ring: 13, stations: 22, pointed_bow: false }),
        ("barge", HullSpec { length: 12.0, beam: 4.0, draft: 0.8, freeboard: 1.0, ring: 13, stations: 49, pointed_bow: false }),
    ];
    for (name, spec) in hulls {
        let mesh = TriMesh::hull(&spec).expect("valid hull");
        let path = dir.join(format!("{name}.obj"));
        let text = format!("# {name}\n{}", mesh.to_obj_string());
        std::fs::write(&path, text).expect("write mesh");
        println!("{}: {} triangles, volume {:.3} m^3", path.display(), mesh.triangles().len(), mesh.volume());
    }
}
