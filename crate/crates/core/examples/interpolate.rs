//! RT0 interpolation of an edge-singular field: L² error and EOC per β.

use std::sync::Arc;

use graded_rt::field::families::edge_singular;
use graded_rt::mesh::{build_graded_face_mesh, FaceGeometry, GradingSpec};
use graded_rt::norms::l2_error;
use graded_rt::quadrature::QuadLevel;
use graded_rt::rt::{commuting_defect, interpolate_rt};
use graded_rt::study::eoc;

fn main() -> graded_rt::Result<()> {
    let u = edge_singular(0.3);
    let level = QuadLevel(0);
    let ns = [4, 8, 16, 32];
    for beta in [1.0, 1.5, 2.0, 2.5] {
        let mut h = Vec::new();
        let mut err = Vec::new();
        for n in ns {
            let mesh = Arc::new(build_graded_face_mesh(
                &FaceGeometry::unit_right_triangle(),
                &GradingSpec::new(n, beta)?,
            )?);
            let rt = interpolate_rt(&u, &mesh, level)?;
            h.push(1.0 / n as f64);
            err.push(l2_error(&u, &rt, level).value);
            if n == ns[0] {
                println!(
                    "beta={beta} commuting defect {:.2e}",
                    commuting_defect(&u, &mesh, level)?
                );
            }
        }
        let rates = eoc(&h, &err);
        for (i, n) in ns.iter().enumerate() {
            let r = if i == 0 {
                String::new()
            } else {
                format!("{:.3}", rates[i - 1])
            };
            println!("  N={n:3} error={:.4e} eoc={r}", err[i]);
        }
    }
    Ok(())
}
