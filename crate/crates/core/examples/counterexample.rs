//! The componentwise-stability counterexample: fluxes, ratio and its blow-up in ε.

use graded_rt::norms::counterexample_report;
use graded_rt::quadrature::QuadLevel;

fn main() -> graded_rt::Result<()> {
    println!("eps,fluxes,flux_residual,pi2_l2,u2_h_half,ratio,u1_ah1_sq");
    for eps in [0.5, 0.2, 0.1] {
        let r = counterexample_report(eps, QuadLevel(0))?;
        println!(
            "{eps},{:?},{:.1e},{:.4},{:.4},{:.4},{:.4e}",
            r.fluxes, r.flux_residual, r.pi2_l2, r.u2_h_half, r.ratio, r.u1_ah1_sq
        );
    }
    Ok(())
}
