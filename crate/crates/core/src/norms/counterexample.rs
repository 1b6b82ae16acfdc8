//! Norms of the counterexample family `u^ε` on T̂.

use std::sync::Arc;

use super::{fractional_seminorm, l2_norm};
use crate::error::Result;
use crate::field::ScalarField;
use crate::geom::Shape;
use crate::mesh::{build_reference_graded_triangle, Domain, GradingSpec};
use crate::quadrature::{EndGrading, IntervalSpec, QuadLevel};
use crate::rt::{
    build_counterexample_field, counterexample_dw, interpolate_rt_report, kink_radius,
};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CounterexampleRow {
    pub eps: f64,
    pub kink_radius: f64,
    /// Outward fluxes of `u^ε` through the three edges of T̂.
    pub fluxes: [f64; 3],
    /// Edges whose flux came from Green's formula.
    pub recovered: usize,
    /// Largest deviation of `Π̂_RT u^ε` from `(0, 1)` at the vertices of T̂.
    pub flux_residual: f64,
    /// `‖(Π̂_RT u^ε)₂‖_{0,T̂}`.
    pub pi2_l2: f64,
    /// `‖u₂^ε‖_{H^{1/2}(T̂)}`.
    pub u2_h_half: f64,
    pub u2_converged: bool,
    /// `|u₁^ε|²_{AH₁^{1/2}(T̂)}`; `+∞` when the kink radius underflows.
    pub u1_ah1_sq: f64,
    pub ratio: f64,
    pub augmented_ratio: f64,
}

/// `|u₁^ε|²_{AH₁^{1/2}(T̂)} = ∫₀¹ (w')²(x₂) (1 − x₂)² dx₂`, since each line
/// carries the linear function `(1 − x₁) w'(x₂)` on `(x₂, 1)`, whose squared
/// seminorm is `w'(x₂)² (1 − x₂)²`.
pub fn counterexample_ah1_sq(eps: f64, level: QuadLevel) -> f64 {
    let r = kink_radius(eps);
    if r <= 0.0 {
        // `(w')² ~ ε² / (t ln(e/t))²` is not integrable at 0.
        return f64::INFINITY;
    }
    // The integrand behaves like `1/t²` near `r`, so the grading must reach down to `r`;
    // the higher order removes the per-panel error of the self-similar panels.
    let depth = (1.0 / r).log(4.0).ceil() as usize + level.geometric_levels();
    let rule = IntervalSpec::new(r, 1.0, level)
        .graded(EndGrading::Geometric, EndGrading::None)
        .geometric_levels(depth)
        .order(level.order() + 8)
        .build();
    rule.integrate(|t| {
        let d = counterexample_dw(eps, t);
        d * d * (1.0 - t) * (1.0 - t)
    })
}

pub fn counterexample_report(eps: f64, level: QuadLevel) -> Result<CounterexampleRow> {
    let u = build_counterexample_field(eps)?;
    let cell = Arc::new(build_reference_graded_triangle(&GradingSpec {
        n: 1,
        beta: 1.0,
    })?);
    let interp = interpolate_rt_report(&u, &cell, level)?;
    let rt = &interp.rt;
    let local = rt.local_fluxes(0);
    let fluxes = [local[0], local[1], local[2]];
    let flux_residual = Shape::Triangle
        .ref_vertices()
        .iter()
        .map(|&x| {
            let v = rt.eval_unchecked(0, x);
            v[0].abs().max((v[1] - 1.0).abs())
        })
        .fold(0.0, f64::max);

    let t = Domain::unit_triangle();
    let u2 = u.component(1);
    let pi2 = ScalarField::new("pi2", {
        let rt = rt.clone();
        move |x| rt.eval_unchecked(0, x)[1]
    });
    let pi2_l2 = l2_norm(&pi2, &t, level).value;
    let semi = fractional_seminorm(&u2, &t, 0.5, level)?;
    let l2 = l2_norm(&u2, &t, level).value;
    let u2_h_half = (l2 * l2 + semi.squared()).sqrt();
    let u1_ah1_sq = counterexample_ah1_sq(eps, level);
    Ok(CounterexampleRow {
        eps,
        kink_radius: kink_radius(eps),
        fluxes,
        recovered: interp.recovered.len(),
        flux_residual,
        pi2_l2,
        u2_h_half,
        u2_converged: semi.converged,
        u1_ah1_sq,
        ratio: pi2_l2 / u2_h_half,
        augmented_ratio: pi2_l2 / (u2_h_half + u1_ah1_sq.sqrt()),
    })
}
