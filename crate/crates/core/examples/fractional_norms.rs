//! Slobodeckij and anisotropic seminorms of `x₂^α` on the reference shapes.

use graded_rt::field::families::power_x2;
use graded_rt::mesh::Domain;
use graded_rt::norms::{anisotropic_seminorm, fractional_seminorm, sobolev_norm};
use graded_rt::quadrature::QuadLevel;

fn main() -> graded_rt::Result<()> {
    let level = QuadLevel(0);
    let g = power_x2(0.3, 1.0);
    for region in [Domain::unit_square(), Domain::unit_triangle()] {
        for s in [0.25, 0.5, 0.75] {
            let h = fractional_seminorm(&g, &region, s, level)?;
            let a1 = anisotropic_seminorm(&g, &region, s, 1, level)?;
            let a2 = anisotropic_seminorm(&g, &region, s, 2, level)?;
            let full = sobolev_norm(&g, &region, s, level)?;
            println!("{}", h.csv_row("x2^0.3"));
            println!("{}", a1.csv_row("x2^0.3"));
            println!("{}", a2.csv_row("x2^0.3"));
            println!(
                "  full H^{s} norm {:.6} (converged={})",
                full.value, full.converged
            );
        }
    }
    Ok(())
}
