//! Builds graded meshes on the three domains and prints their quality.

use graded_rt::mesh::*;

fn main() -> graded_rt::Result<()> {
    for beta in [1.0, 2.0, 2.5] {
        let spec = GradingSpec::new(8, beta)?;
        println!(
            "beta={beta} nodes={:?}",
            grade_points(&spec)
                .iter()
                .map(|x| format!("{x:.4}"))
                .collect::<Vec<_>>()
        );
        let meshes = [
            ("square", build_reference_graded_square(&spec)?),
            ("triangle", build_reference_graded_triangle(&spec)?),
            (
                "face",
                build_graded_face_mesh(&FaceGeometry::unit_right_triangle(), &spec)?,
            ),
        ];
        for (name, m) in &meshes {
            let q = mesh_quality_report(m);
            println!(
                "  {name:8} elements={:4} h_max={:.4} h_min={:.2e} max_aspect={:8.2} conforming={}",
                q.n_elements, q.h_max, q.h_min, q.max_aspect, q.conforming
            );
        }
    }
    // A closed surface: every cube face graded toward its edges.
    let cube = SurfaceMesh::unit_cube(&GradingSpec::new(4, 2.0)?)?;
    println!(
        "cube: elements={} conforming={}",
        cube.n_elements(),
        cube.is_conforming()
    );
    Ok(())
}
