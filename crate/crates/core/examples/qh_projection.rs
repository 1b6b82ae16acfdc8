//! Q_h on graded face meshes: inf-sup constants, the commuting property and
//! the dual-norm error ratio.

use std::sync::Arc;

use graded_rt::field::families::smooth_divergence_free;
use graded_rt::mesh::{build_graded_face_mesh, FaceGeometry, GradingSpec};
use graded_rt::norms::{DualNormOperator, DualNormSpec};
use graded_rt::qh::{assemble_mixed_system, inf_sup_constant, qh_error_report, solve_qh};
use graded_rt::quadrature::QuadLevel;

fn main() -> graded_rt::Result<()> {
    let level = QuadLevel(0);
    let u = smooth_divergence_free();
    let mut meshes = Vec::new();
    for n in [4, 8, 16] {
        let mesh = Arc::new(build_graded_face_mesh(
            &FaceGeometry::unit_right_triangle(),
            &GradingSpec::new(n, 2.0)?,
        )?);
        let gamma = inf_sup_constant(&assemble_mixed_system(&mesh)?)?;
        let sol = solve_qh(&u, &mesh, level)?;
        println!(
            "N={n:2} inf-sup={gamma:.4} residual={:.1e} multiplier={:.1e}",
            sol.residual, sol.multiplier
        );
        meshes.push(mesh);
    }
    let op = DualNormOperator::new(&meshes[0].domain, DualNormSpec::new(4)?)?;
    let report = qh_error_report(&u, &meshes, &op, level)?;
    for r in &report.rows {
        println!(
            "N={:2} dual={:.4e} interp={:.4e} ratio={:?} defect={:.1e}",
            r.n, r.dual_error, r.interp_error, r.ratio, r.commuting_defect
        );
    }
    if let Some(f) = report.fit {
        println!("ratio slope {:.3} (r2 {:.3})", f.slope, f.r_squared);
    }
    Ok(())
}
