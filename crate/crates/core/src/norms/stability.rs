//! Componentwise stability ratios of the reference-element interpolant over
//! the cells of a graded mesh.

use std::sync::Arc;

use rayon::prelude::*;

use super::{anisotropic_seminorm, l2_norm, sobolev_norm};
use crate::error::Result;
use crate::field::VectorField;
use crate::geom::Shape;
use crate::integrate::region_integral;
use crate::mesh::{
    build_reference_graded_square, build_reference_graded_triangle, Domain, GradedMesh, GradingSpec,
};
use crate::quadrature::QuadLevel;
use crate::rt::{interpolate_rt_report, RTFunction};

/// Which right-hand side the ratio is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `s > 1/2`: `‖u_l‖_{H^s}` alone on Q̂, plus `‖div u‖₀` on T̂.
    Smooth,
    /// Adds `|u_{l+1}|_{AH_{l+1}^s}` and `‖div u‖₀`.
    LowRegularity,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CellRatio {
    pub cell: usize,
    pub shape: Shape,
    /// Component index, 1 or 2.
    pub component: u8,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub converged: bool,
}

fn single_cell(shape: Shape) -> Arc<GradedMesh> {
    let spec = GradingSpec { n: 1, beta: 1.0 };
    Arc::new(
        match shape {
            Shape::Parallelogram => build_reference_graded_square(&spec),
            Shape::Triangle => build_reference_graded_triangle(&spec),
        }
        .expect("single reference cell"),
    )
}

/// `‖(Π̂ û)_l‖₀` for the interpolant on the reference cell.
fn component_norm(rt: &RTFunction, shape: Shape, l: usize, level: QuadLevel) -> f64 {
    let el = &rt.mesh.elements[0];
    region_integral(shape, &el.map, &Default::default(), level, &|x| {
        let v = rt.eval_unchecked(0, el.map.inverse_apply(x));
        v[l] * v[l]
    })
    .max(0.0)
    .sqrt()
}

/// Ratios for both components on one reference cell.
pub fn reference_ratios(
    u_hat: &VectorField,
    shape: Shape,
    branch: Branch,
    s: f64,
    level: QuadLevel,
) -> Result<[CellRatio; 2]> {
    let cell = single_cell(shape);
    let rt = interpolate_rt_report(u_hat, &cell, level)?.rt;
    let region = match shape {
        Shape::Parallelogram => Domain::unit_square(),
        Shape::Triangle => Domain::unit_triangle(),
    };
    let div = match (shape, branch, u_hat.divergence()) {
        (Shape::Parallelogram, Branch::Smooth, _) => 0.0,
        (_, _, Some(d)) => l2_norm(&d, &region, level).value,
        (_, _, None) => return Err(crate::Error::MissingDivergence(u_hat.label.clone())),
    };
    let mut out = Vec::with_capacity(2);
    for l in 0..2 {
        let num = component_norm(&rt, shape, l, level);
        let own = sobolev_norm(&u_hat.component(l), &region, s, level)?;
        let mut den = own.value + div;
        let mut converged = own.converged;
        if branch == Branch::LowRegularity {
            let other = (l + 1) % 2;
            let a =
                anisotropic_seminorm(&u_hat.component(other), &region, s, other as u8 + 1, level)?;
            den += a.value;
            converged &= a.converged;
        }
        let ratio = if den > 0.0 { num / den } else { 0.0 };
        out.push(CellRatio {
            cell: 0,
            shape,
            component: l as u8 + 1,
            numerator: num,
            denominator: den,
            ratio,
            converged,
        });
    }
    let b = out.pop().unwrap();
    let a = out.pop().unwrap();
    Ok([a, b])
}

/// Ratios for every cell of `mesh`, after Piola pull-back to the reference
/// cell. Cells on which the field vanishes identically are skipped.
pub fn stability_ratios(
    field: &VectorField,
    mesh: &GradedMesh,
    branch: Branch,
    s: f64,
    level: QuadLevel,
) -> Result<Vec<CellRatio>> {
    let per_cell: Vec<Result<[CellRatio; 2]>> = mesh
        .elements
        .par_iter()
        .map(|el| reference_ratios(&field.piola_pull_back(&el.map), el.shape, branch, s, level))
        .collect();
    let mut out = Vec::with_capacity(2 * mesh.n_elements());
    for (k, r) in per_cell.into_iter().enumerate() {
        for mut c in r? {
            if c.denominator > 0.0 {
                c.cell = k;
                out.push(c);
            }
        }
    }
    Ok(out)
}
