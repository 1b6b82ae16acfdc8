//! L² norms, Sobolev–Slobodeckij seminorms, the anisotropic seminorms
//! `AH₁^s`, `AH₂^s`, a discrete `H^{−1/2}` dual norm and the scaling checks
//! behind the anisotropic-element estimates.

mod counterexample;
mod dual;
mod scaling;
mod slobodeckij;
mod stability;

use rayon::prelude::*;

pub use counterexample::{counterexample_ah1_sq, counterexample_report, CounterexampleRow};
pub use dual::{discrete_dual_half_norm, DualNormOperator, DualNormSpec, DualSource, TestSpace};
pub use scaling::{piola_scaling_identity_check, ScalingResiduals, ScalingShape};
pub use stability::{stability_ratios, Branch, CellRatio};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::geom::Shape;
use crate::integrate::{checked_region_integral, Checked};
use crate::mesh::Domain;
use crate::quadrature::{EndGrading, QuadLevel};
use crate::rt::RTFunction;

/// Levels whose seminorms differ by more than this are flagged.
pub const SEMINORM_TOL: f64 = 0.05;

/// A seminorm value at the finer of two quadrature levels.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SeminormValue {
    pub value: f64,
    /// Relative difference between the two levels.
    pub rel_error: f64,
    pub s: f64,
    pub axis: Option<u8>,
    pub region: String,
    pub level: u32,
    pub converged: bool,
}

impl SeminormValue {
    fn from_squares(
        a: f64,
        b: f64,
        s: f64,
        axis: Option<u8>,
        region: &Domain,
        level: QuadLevel,
    ) -> Self {
        let (va, vb) = (a.max(0.0).sqrt(), b.max(0.0).sqrt());
        let rel_error = if vb > 0.0 && vb.is_finite() {
            (va - vb).abs() / vb
        } else if va == vb {
            0.0
        } else {
            f64::INFINITY
        };
        SeminormValue {
            value: vb,
            rel_error,
            s,
            axis,
            region: region.label(),
            level: level.0,
            converged: rel_error <= SEMINORM_TOL || vb <= 1e-300,
        }
    }

    pub fn squared(&self) -> f64 {
        self.value * self.value
    }

    /// `field,region,s,value,error,level` row of the norm report format.
    pub fn csv_row(&self, field: &str) -> String {
        let axis = self
            .axis
            .map(|a| format!("AH{a}"))
            .unwrap_or_else(|| "H".into());
        format!(
            "{field},{},{axis},{},{:.12e},{:.3e},{}",
            self.region, self.s, self.value, self.rel_error, self.level
        )
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "Slobodeckij order must lie in (0, 1), got {s}"
        )))
    }
}

/// `|g|_{H^s(R)}`: the double integral with kernel `|x−y|^{−(2+2s)}`.
pub fn fractional_seminorm(
    g: &ScalarField,
    region: &Domain,
    s: f64,
    level: QuadLevel,
) -> Result<SeminormValue> {
    check_s(s)?;
    let a = slobodeckij::seminorm_sq_2d(g, region.shape, &region.map, s, level);
    let b = slobodeckij::seminorm_sq_2d(g, region.shape, &region.map, s, level.next());
    Ok(SeminormValue::from_squares(a, b, s, None, region, level))
}

/// `|f|_{H^s(lo,hi)}` with kernel `|x−y|^{−(1+2s)}`, graded toward singular ends.
pub fn fractional_seminorm_1d(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    s: f64,
    ends: (EndGrading, EndGrading),
    level: QuadLevel,
) -> Result<f64> {
    check_s(s)?;
    Ok(slobodeckij::seminorm_sq_1d(f, lo, hi, s, ends.0, ends.1, &[], level).sqrt())
}

/// `|g|²_{AH_axis^s}` at one level: the outer integral, across the lines, of
/// the 1D seminorms along lines parallel to axis `axis`. On T̂ the lines run
/// over `(x₂, 1)` (axis 1) and `(0, x₁)` (axis 2).
fn anisotropic_sq(g: &ScalarField, region: &Domain, s: f64, axis: u8, level: QuadLevel) -> f64 {
    let m = &region.map;
    let (h1, h2) = (m.a[0][0], m.a[1][1]);
    let (o1, o2) = (m.b[0], m.b[1]);
    let hints = g.hints.region_hints(region.shape, m);
    let (e, v) = (&hints.edge, &hints.vertex);
    // (outer lo, outer hi, inner lo, inner hi) gradings.
    let gr = match (region.shape, axis) {
        (Shape::Parallelogram, 1) => [
            e[0].max(v[0]).max(v[1]),
            e[2].max(v[2]).max(v[3]),
            e[3],
            e[1],
        ],
        (Shape::Parallelogram, _) => [
            e[3].max(v[0]).max(v[3]),
            e[1].max(v[1]).max(v[2]),
            e[0],
            e[2],
        ],
        (Shape::Triangle, 1) => [e[0].max(v[0]).max(v[1]), v[2], e[2], e[1]],
        (Shape::Triangle, _) => [v[0], e[1].max(v[1]).max(v[2]), e[0], e[2]],
    };
    let (outer_breaks, inner_breaks) = if axis == 1 {
        (&hints.x2_breaks, &hints.x1_breaks)
    } else {
        (&hints.x1_breaks, &hints.x2_breaks)
    };
    let outer = crate::quadrature::IntervalSpec::new(0.0, 1.0, level)
        .graded(gr[0], gr[1])
        .breaks(outer_breaks.iter().copied())
        .build();
    let f = g.function();
    let parts: Vec<f64> = outer
        .nodes
        .par_iter()
        .zip(&outer.weights)
        .map(|(&t, &w)| {
            let (lo, hi) = match (region.shape, axis) {
                (Shape::Parallelogram, _) => (0.0, 1.0),
                (Shape::Triangle, 1) => (t, 1.0),
                (Shape::Triangle, _) => (0.0, t),
            };
            let sq = if axis == 1 {
                let x2 = o2 + h2 * t;
                let br: Vec<f64> = inner_breaks.iter().map(|&c| o1 + h1 * c).collect();
                slobodeckij::seminorm_sq_1d(
                    &|x1| f([x1, x2]),
                    o1 + h1 * lo,
                    o1 + h1 * hi,
                    s,
                    gr[2],
                    gr[3],
                    &br,
                    level,
                )
            } else {
                let x1 = o1 + h1 * t;
                let br: Vec<f64> = inner_breaks.iter().map(|&c| o2 + h2 * c).collect();
                slobodeckij::seminorm_sq_1d(
                    &|x2| f([x1, x2]),
                    o2 + h2 * lo,
                    o2 + h2 * hi,
                    s,
                    gr[2],
                    gr[3],
                    &br,
                    level,
                )
            };
            w * sq
        })
        .collect();
    let across = if axis == 1 { h2 } else { h1 };
    parts.iter().sum::<f64>() * across
}

/// `|g|_{AH_axis^s(R)}` on Q̂, T̂ or an axis-aligned image of them.
pub fn anisotropic_seminorm(
    g: &ScalarField,
    region: &Domain,
    s: f64,
    axis: u8,
    level: QuadLevel,
) -> Result<SeminormValue> {
    check_s(s)?;
    if axis != 1 && axis != 2 {
        return Err(Error::InvalidArgument(format!(
            "axis must be 1 or 2, got {axis}"
        )));
    }
    let m = &region.map;
    if !m.is_diagonal() || m.a[0][0] <= 0.0 || m.a[1][1] <= 0.0 {
        return Err(Error::InvalidArgument(
            "anisotropic seminorms need an axis-aligned region".into(),
        ));
    }
    let a = anisotropic_sq(g, region, s, axis, level);
    let b = anisotropic_sq(g, region, s, axis, level.next());
    Ok(SeminormValue::from_squares(
        a,
        b,
        s,
        Some(axis),
        region,
        level,
    ))
}

/// `‖g‖_{0,R}`.
pub fn l2_norm(g: &ScalarField, region: &Domain, level: QuadLevel) -> Checked {
    let c = checked_region_integral(region.shape, &region.map, &g.hints, level, &|x| {
        let v = g.eval(x);
        v * v
    });
    let v = c.value.max(0.0).sqrt();
    Checked {
        value: v,
        error: if v > 0.0 {
            c.error / (2.0 * v)
        } else {
            c.error.sqrt()
        },
    }
}

/// `‖g‖_{H^s(R)} = (‖g‖₀² + |g|²_{H^s})^{1/2}`.
pub fn sobolev_norm(
    g: &ScalarField,
    region: &Domain,
    s: f64,
    level: QuadLevel,
) -> Result<SeminormValue> {
    let l2 = l2_norm(g, region, level);
    let mut semi = fractional_seminorm(g, region, s, level)?;
    let total = (l2.value * l2.value + semi.squared()).sqrt();
    if total > 0.0 {
        semi.rel_error = (semi.rel_error * semi.value + l2.error) / total;
    }
    semi.value = total;
    Ok(semi)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EquivalenceReport {
    /// `‖g‖_{H^s(Q̂)}`.
    pub lhs: f64,
    /// `‖g‖₀ + |g|_{AH₁^s} + |g|_{AH₂^s}`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Both sides of the equivalence of `‖·‖_{H^s(Q̂)}` with the sum of the L²
/// norm and the two anisotropic seminorms.
pub fn norm_equivalence_report(
    g: &ScalarField,
    s: f64,
    level: QuadLevel,
) -> Result<EquivalenceReport> {
    let q = Domain::unit_square();
    let lhs = sobolev_norm(g, &q, s, level)?.value;
    let rhs = l2_norm(g, &q, level).value
        + anisotropic_seminorm(g, &q, s, 1, level)?.value
        + anisotropic_seminorm(g, &q, s, 2, level)?.value;
    Ok(EquivalenceReport {
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// `‖u − f‖_{0}` over the mesh of `f`, element by element.
pub fn l2_error(field: &VectorField, f: &RTFunction, level: QuadLevel) -> Checked {
    let mesh = &f.mesh;
    let parts: Vec<Checked> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let el = &mesh.elements[k];
            checked_region_integral(el.shape, &el.map, &field.hints, level, &|x| {
                let u = field.eval(x);
                let v = f.eval_unchecked(k, el.map.inverse_apply(x));
                (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)
            })
        })
        .collect();
    let sq: f64 = parts.iter().map(|c| c.value).sum();
    let err: f64 = parts.iter().map(|c| c.error).sum();
    let v = sq.max(0.0).sqrt();
    Checked {
        value: v,
        error: if v > 0.0 { err / (2.0 * v) } else { err.sqrt() },
    }
}

/// `‖div u − div f‖₀`.
pub fn div_error(field: &VectorField, f: &RTFunction, level: QuadLevel) -> Result<f64> {
    let div = field
        .divergence()
        .ok_or_else(|| Error::MissingDivergence(field.label.clone()))?;
    let mesh = &f.mesh;
    let sq: f64 = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let el = &mesh.elements[k];
            let c = f.div(k);
            crate::integrate::region_integral(el.shape, &el.map, &div.hints, level, &|x| {
                (div.eval(x) - c).powi(2)
            })
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(sq.max(0.0).sqrt())
}

/// `‖u − f‖_{H(div)}`.
pub fn hdiv_error(field: &VectorField, f: &RTFunction, level: QuadLevel) -> Result<f64> {
    let l2 = l2_error(field, f, level).value;
    let d = div_error(field, f, level)?;
    Ok((l2 * l2 + d * d).sqrt())
}
