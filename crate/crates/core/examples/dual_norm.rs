//! The discrete `H̃^{-1/2}` surrogate of a few scalars on the unit triangle.

use graded_rt::field::{families::power_x2, ScalarField};
use graded_rt::mesh::Domain;
use graded_rt::norms::{DualNormOperator, DualNormSpec, DualSource};
use graded_rt::quadrature::QuadLevel;

fn main() -> graded_rt::Result<()> {
    let region = Domain::unit_triangle();
    let fields = [
        ("1", ScalarField::constant(1.0)),
        ("x2^-0.3", power_x2(-0.3, 1.0)),
        (
            "sin(8 x1)",
            ScalarField::new("sin(8 x1)", |x| (8.0 * x[0]).sin()),
        ),
    ];
    for m in [2, 3, 4, 5] {
        let op = DualNormOperator::new(&region, DualNormSpec::new(m)?)?;
        let vals: Vec<String> = fields
            .iter()
            .map(|(n, f)| format!("{n}={:.6}", op.norm(&DualSource::Field(f), QuadLevel(0))))
            .collect();
        println!("m={m} dofs={:4} {}", op.n_dofs(), vals.join(" "));
    }
    Ok(())
}
