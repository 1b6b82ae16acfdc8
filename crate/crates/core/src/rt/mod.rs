//! RT0 spaces on graded meshes: edge-flux degrees of freedom, the
//! interpolant `Π_RT`, the piecewise-constant projection `Π_0` and the
//! commuting diagram between them.

mod basis;
mod counterexample;

use std::fmt::Write;
use std::sync::Arc;

use rayon::prelude::*;

pub use basis::{ref_basis, ref_edge_length, ref_normal, RTLocalBasis};
pub use counterexample::{
    build_counterexample_field, counterexample_dw, counterexample_w, kink_radius,
};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::geom::{dot, norm, sub, Point2};
use crate::integrate::{checked_region_integral, region_integral, Checked};
use crate::mesh::GradedMesh;
use crate::quadrature::{IntervalSpec, QuadLevel};

/// Relative tolerance between two quadrature levels for a flux to count as
/// converged.
pub const FLUX_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FluxValue {
    pub value: f64,
    /// Difference between the two quadrature levels.
    pub error: f64,
    pub converged: bool,
}

/// `∫ u·n ds` over the segment `p0 → p1` with unit normal `n`.
pub fn segment_flux(
    field: &VectorField,
    p0: Point2,
    p1: Point2,
    n: Point2,
    level: QuadLevel,
) -> FluxValue {
    let (glo, ghi, breaks) = field.hints.segment_hints(p0, p1);
    let d = sub(p1, p0);
    let len = norm(d);
    let integrand = |t: f64| {
        let u = field.eval([p0[0] + t * d[0], p0[1] + t * d[1]]);
        len * dot(u, n)
    };
    let rule = |l: QuadLevel| {
        IntervalSpec::new(0.0, 1.0, l)
            .graded(glo, ghi)
            .breaks(breaks.iter().copied())
            .build()
    };
    let (r0, r1) = (rule(level), rule(level.next()));
    let (a, b) = (r0.integrate(integrand), r1.integrate(integrand));
    let error = (b - a).abs();
    let tail = r1.tail(integrand);
    let scale = b.abs().max(len * 1e-3).max(1e-300);
    let converged = b.is_finite()
        && error <= FLUX_TOL * b.abs().max(1.0).max(scale)
        && tail <= FLUX_TOL * scale.max(1.0);
    FluxValue {
        value: b,
        error,
        converged,
    }
}

/// Flux of `field` through global edge `e` along its global normal.
pub fn edge_flux(field: &VectorField, mesh: &GradedMesh, e: usize, level: QuadLevel) -> FluxValue {
    let (p, q) = mesh.edge_points(e);
    segment_flux(field, p, q, mesh.edge_normal(e), level)
}

/// Coefficient vector over the global oriented edges of an RT0 space.
#[derive(Clone, Debug)]
pub struct RTFunction {
    pub mesh: Arc<GradedMesh>,
    pub coeffs: Vec<f64>,
}

impl RTFunction {
    pub fn new(mesh: Arc<GradedMesh>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.n_edges() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} edges",
                coeffs.len(),
                mesh.n_edges()
            )));
        }
        Ok(RTFunction { mesh, coeffs })
    }

    pub fn zeros(mesh: Arc<GradedMesh>) -> Self {
        let n = mesh.n_edges();
        RTFunction {
            mesh,
            coeffs: vec![0.0; n],
        }
    }

    /// Outward fluxes through the local edges of element `k`.
    pub fn local_fluxes(&self, k: usize) -> [f64; 4] {
        let el = &self.mesh.elements[k];
        let mut f = [0.0; 4];
        for (l, (&e, &s)) in el.edges().iter().zip(el.signs()).enumerate() {
            f[l] = s * self.coeffs[e];
        }
        f
    }

    /// Value at reference point `x̂` of element `k`, without range checks.
    #[inline]
    pub fn eval_unchecked(&self, k: usize, x: Point2) -> [f64; 2] {
        let el = &self.mesh.elements[k];
        let f = self.local_fluxes(k);
        let mut v = [0.0; 2];
        for (l, fl) in f.iter().enumerate().take(el.n_vertices()) {
            let phi = ref_basis(el.shape, l, x);
            v[0] += fl * phi[0];
            v[1] += fl * phi[1];
        }
        let w = el.map.linear(v);
        let d = el.det.abs();
        [w[0] / d, w[1] / d]
    }

    pub fn eval(&self, k: usize, x: Point2) -> Result<[f64; 2]> {
        eval_rt(self, k, x)
    }

    /// Value at a physical point, located by search.
    pub fn eval_at(&self, x: Point2) -> Option<[f64; 2]> {
        self.mesh
            .locate(x)
            .map(|(k, xr)| self.eval_unchecked(k, xr))
    }

    pub fn div(&self, k: usize) -> f64 {
        div_rt(self, k)
    }

    /// The piecewise-linear field as an analytic field, evaluated by point
    /// location; kinks are not declared, so quadrature of it should be done
    /// element by element.
    pub fn as_field(&self) -> VectorField {
        let f = self.clone();
        VectorField::new("rt", move |x| f.eval_at(x).unwrap_or([f64::NAN; 2]))
    }

    /// `(id, a, b, coefficient)` per edge under a mesh checksum header.
    pub fn export_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# graded-rt rt-function v1");
        let _ = writeln!(s, "# mesh-checksum {}", self.mesh.checksum());
        let _ = writeln!(s, "# edges {}", self.coeffs.len());
        for (e, c) in self.coeffs.iter().enumerate() {
            let [a, b] = self.mesh.edges[e].v;
            let _ = writeln!(s, "{e} {a} {b} {c:.17e}");
        }
        s
    }
}

/// Value of `f` at reference point `x̂` of element `k`.
pub fn eval_rt(f: &RTFunction, k: usize, x: Point2) -> Result<[f64; 2]> {
    let el = f
        .mesh
        .elements
        .get(k)
        .ok_or_else(|| Error::InvalidArgument(format!("no element {k}")))?;
    if !el.shape.contains_ref(x, 1e-12) {
        return Err(Error::PointOutside(x[0], x[1]));
    }
    Ok(f.eval_unchecked(k, x))
}

/// Constant divergence of `f` on element `k`: net outward flux over area.
pub fn div_rt(f: &RTFunction, k: usize) -> f64 {
    let el = &f.mesh.elements[k];
    f.local_fluxes(k).iter().take(el.n_vertices()).sum::<f64>() / el.area()
}

/// Interpolant together with per-edge quadrature diagnostics.
#[derive(Clone, Debug)]
pub struct Interpolation {
    pub rt: RTFunction,
    pub fluxes: Vec<FluxValue>,
    /// Edges whose flux came from Green's formula on an incident element.
    pub recovered: Vec<usize>,
}

/// `Π_RT u`: the RT0 function whose edge coefficients are the fluxes of `u`.
pub fn interpolate_rt(
    field: &VectorField,
    mesh: &Arc<GradedMesh>,
    level: QuadLevel,
) -> Result<RTFunction> {
    interpolate_rt_report(field, mesh, level).map(|r| r.rt)
}

/// As `interpolate_rt`. Where the improper edge integral cannot be resolved
/// in floating point, the flux is taken from Green's formula with the test
/// function 1 on an incident element, `∫_K div u` minus the other fluxes.
pub fn interpolate_rt_report(
    field: &VectorField,
    mesh: &Arc<GradedMesh>,
    level: QuadLevel,
) -> Result<Interpolation> {
    let mut fluxes: Vec<FluxValue> = (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| edge_flux(field, mesh, e, level))
        .collect();
    let mut recovered = Vec::new();
    let mut pending: Vec<usize> = (0..fluxes.len())
        .filter(|&e| !fluxes[e].converged)
        .collect();
    if !pending.is_empty() {
        let div = field.divergence().ok_or_else(|| {
            Error::QuadratureNonConvergence(format!(
                "{} edge flux(es) of `{}` unresolved and no divergence for recovery",
                pending.len(),
                field.label
            ))
        })?;
        loop {
            let mut progress = false;
            for &e in &pending {
                if fluxes[e].converged {
                    continue;
                }
                for &(k, l) in &mesh.edges[e].incident {
                    let el = &mesh.elements[k];
                    if el
                        .edges()
                        .iter()
                        .enumerate()
                        .any(|(m, &o)| m != l && !fluxes[o].converged)
                    {
                        continue;
                    }
                    let d = checked_region_integral(el.shape, &el.map, &div.hints, level, &|x| {
                        div.eval(x)
                    });
                    if !d.converged(FLUX_TOL, 1.0) {
                        continue;
                    }
                    let others: f64 = el
                        .edges()
                        .iter()
                        .zip(el.signs())
                        .enumerate()
                        .filter(|(m, _)| *m != l)
                        .map(|(_, (&o, &s))| s * fluxes[o].value)
                        .sum();
                    let s = el.signs()[l];
                    fluxes[e] = FluxValue {
                        value: s * (d.value - others),
                        error: d.error,
                        converged: true,
                    };
                    recovered.push(e);
                    progress = true;
                    break;
                }
            }
            pending.retain(|&e| !fluxes[e].converged);
            if pending.is_empty() || !progress {
                break;
            }
        }
        if let Some(&e) = pending.first() {
            return Err(Error::QuadratureNonConvergence(format!(
                "flux of `{}` through edge {e} (levels differ by {:.3e})",
                field.label, fluxes[e].error
            )));
        }
    }
    recovered.sort_unstable();
    let rt = RTFunction {
        mesh: mesh.clone(),
        coeffs: fluxes.iter().map(|f| f.value).collect(),
    };
    Ok(Interpolation {
        rt,
        fluxes,
        recovered,
    })
}

/// One value per element.
#[derive(Clone, Debug)]
pub struct PWConstant {
    pub mesh: Arc<GradedMesh>,
    pub values: Vec<f64>,
}

impl PWConstant {
    pub fn new(mesh: Arc<GradedMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_elements() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} elements",
                values.len(),
                mesh.n_elements()
            )));
        }
        Ok(PWConstant { mesh, values })
    }

    /// Element divergences of an RT0 function.
    pub fn divergence_of(f: &RTFunction) -> Self {
        PWConstant {
            mesh: f.mesh.clone(),
            values: (0..f.mesh.n_elements()).map(|k| div_rt(f, k)).collect(),
        }
    }

    /// `∫ g` over the whole mesh.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.mesh.elements)
            .map(|(v, e)| v * e.area())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.mesh.elements)
            .map(|(v, e)| v * v * e.area())
            .sum::<f64>()
            .sqrt()
    }
}

/// `Π_0 g`: element means.
pub fn project_piecewise_constant(
    g: &ScalarField,
    mesh: &Arc<GradedMesh>,
    level: QuadLevel,
) -> PWConstant {
    let values = mesh
        .elements
        .par_iter()
        .map(|el| region_integral(el.shape, &el.map, &g.hints, level, &|x| g.eval(x)) / el.area())
        .collect();
    PWConstant {
        mesh: mesh.clone(),
        values,
    }
}

/// As `project_piecewise_constant`, with the level difference per element.
pub fn project_piecewise_constant_checked(
    g: &ScalarField,
    mesh: &Arc<GradedMesh>,
    level: QuadLevel,
) -> Vec<Checked> {
    mesh.elements
        .par_iter()
        .map(|el| {
            let c = checked_region_integral(el.shape, &el.map, &g.hints, level, &|x| g.eval(x));
            Checked {
                value: c.value / el.area(),
                error: c.error / el.area(),
            }
        })
        .collect()
}

/// `max_K |div(Π_RT u) − Π_0(div u)|`.
pub fn commuting_defect(
    field: &VectorField,
    mesh: &Arc<GradedMesh>,
    level: QuadLevel,
) -> Result<f64> {
    let div = field
        .divergence()
        .ok_or_else(|| Error::MissingDivergence(field.label.clone()))?;
    let rt = interpolate_rt(field, mesh, level)?;
    let p0 = project_piecewise_constant(&div, mesh, level);
    Ok((0..mesh.n_elements())
        .map(|k| (div_rt(&rt, k) - p0.values[k]).abs())
        .fold(0.0, f64::max))
}
