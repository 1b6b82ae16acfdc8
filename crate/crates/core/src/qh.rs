//! The per-face projection `Q_h`: a mixed problem whose solution keeps the
//! `Π_RT` boundary fluxes and commutes with the divergence.
//!
//! With `X_h` the RT0 space, `R_h` mean-zero piecewise constants, find
//! `z_h` with prescribed boundary fluxes and `f_h ∈ R_h` such that
//!
//! ```text
//! (z_h, v) + (div v, f_h) = (u, v)       v ∈ X_h, v·n = 0 on the boundary
//! (div z_h, g)            = (div u, g)   g ∈ R_h
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::mesh::{coarsen_to_quasi_uniform, mesh_quality_report, CoarseMesh, GradedMesh};
use crate::norms::{hdiv_error, DualNormOperator, DualSource};
use crate::quadrature::{region_rule, QuadLevel, RegionHints};
use crate::rt::{interpolate_rt, project_piecewise_constant, ref_basis, PWConstant, RTFunction};
use crate::study::{fit_rate, RateFit};

/// Relative residual above which a solve is reported as failed.
pub const SOLVE_TOL: f64 = 1e-10;

type Coo = Vec<(usize, usize, f64)>;

/// Assembled RT0 mass and divergence matrices of one mesh.
#[derive(Clone, Debug)]
pub struct MixedSystem {
    pub mesh: Arc<GradedMesh>,
    /// `(row, col, value)` of `M`, edges × edges, sorted and summed.
    pub mass: Vec<(usize, usize, f64)>,
    /// `(element, edge, value)` of `B`, `B_{Ke} = ∫_K div φ_e`.
    pub div: Vec<(usize, usize, f64)>,
    pub areas: Vec<f64>,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

fn sort_and_sum(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_by_key(|a| (a.0, a.1));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
    for (r, c, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out
}

/// Local mass matrix `∫_K φ_a·φ_b` in local edge order, signs included.
fn local_mass(el: &crate::mesh::Element) -> [[f64; 4]; 4] {
    let n = el.n_vertices();
    let rule = region_rule(el.shape, &RegionHints::default(), QuadLevel(0));
    let mut m = [[0.0; 4]; 4];
    let s = el.signs();
    for (x, w) in rule {
        let mut v = [[0.0; 2]; 4];
        for (a, va) in v.iter_mut().enumerate().take(n) {
            *va = el.map.linear(ref_basis(el.shape, a, x));
        }
        for a in 0..n {
            for b in 0..n {
                m[a][b] += w * (v[a][0] * v[b][0] + v[a][1] * v[b][1]);
            }
        }
    }
    let ad = el.det.abs();
    for a in 0..n {
        for b in 0..n {
            m[a][b] *= s[a] * s[b] / ad;
        }
    }
    m
}

pub fn assemble_mixed_system(mesh: &Arc<GradedMesh>) -> Result<MixedSystem> {
    let q = mesh_quality_report(mesh);
    if !q.conforming {
        return Err(Error::NonConforming(
            "mixed system needs a conforming single-face mesh".into(),
        ));
    }
    let parts: Vec<(Coo, Coo)> = mesh
        .elements
        .par_iter()
        .enumerate()
        .map(|(k, el)| {
            let m = local_mass(el);
            let e = el.edges();
            let mut mt = Vec::with_capacity(16);
            let mut bt = Vec::with_capacity(4);
            for a in 0..e.len() {
                for b in 0..e.len() {
                    mt.push((e[a], e[b], m[a][b]));
                }
                bt.push((k, e[a], el.signs()[a]));
            }
            (mt, bt)
        })
        .collect();
    let (mut mt, mut bt) = (Vec::new(), Vec::new());
    for (m, b) in parts {
        mt.extend(m);
        bt.extend(b);
    }
    Ok(MixedSystem {
        mesh: mesh.clone(),
        mass: sort_and_sum(mt),
        div: sort_and_sum(bt),
        areas: mesh.elements.iter().map(|e| e.area()).collect(),
        interior: mesh.interior_edges(),
        boundary: mesh.boundary_edges(),
    })
}

impl MixedSystem {
    pub fn n_edges(&self) -> usize {
        self.mesh.n_edges()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn mass_dense(&self) -> Mat<f64> {
        let n = self.n_edges();
        let mut m = Mat::zeros(n, n);
        for &(r, c, v) in &self.mass {
            m[(r, c)] += v;
        }
        m
    }

    pub fn div_dense(&self) -> Mat<f64> {
        let mut b = Mat::zeros(self.n_elements(), self.n_edges());
        for &(r, c, v) in &self.div {
            b[(r, c)] += v;
        }
        b
    }

    /// `M` and `B` in coordinate text format.
    pub fn export_coo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# mass {} {}", self.n_edges(), self.n_edges());
        for &(r, c, v) in &self.mass {
            let _ = writeln!(s, "{r} {c} {v:.17e}");
        }
        let _ = writeln!(s, "# div {} {}", self.n_elements(), self.n_edges());
        for &(r, c, v) in &self.div {
            let _ = writeln!(s, "{r} {c} {v:.17e}");
        }
        s
    }

    /// Position of each edge among the interior unknowns.
    fn interior_index(&self) -> Vec<Option<usize>> {
        let mut idx = vec![None; self.n_edges()];
        for (i, &e) in self.interior.iter().enumerate() {
            idx[e] = Some(i);
        }
        idx
    }
}

/// Solution of the mixed problem.
#[derive(Clone, Debug)]
pub struct MixedSolution {
    pub z: RTFunction,
    pub f: PWConstant,
    /// Multiplier of the mean-zero constraint; vanishes up to quadrature
    /// error when the boundary fluxes balance `∫ div u`.
    pub multiplier: f64,
    /// `‖A x − b‖ / ‖b‖` of the saddle-point solve.
    pub residual: f64,
}

/// `(u, φ_e)` for every edge and `∫_K div u` for every element.
fn loads(u: &VectorField, sys: &MixedSystem, level: QuadLevel) -> Result<(Vec<f64>, Vec<f64>)> {
    let div = u
        .divergence()
        .ok_or_else(|| Error::MissingDivergence(u.label.clone()))?;
    let mesh = &sys.mesh;
    let per_el: Vec<([f64; 4], f64)> = mesh
        .elements
        .par_iter()
        .map(|el| {
            let n = el.n_vertices();
            let rh = u.hints.region_hints(el.shape, &el.map);
            let mut f = [0.0; 4];
            for (x, w) in region_rule(el.shape, &rh, level) {
                let v = u.eval(el.map.apply(x));
                for (a, fa) in f.iter_mut().enumerate().take(n) {
                    let p = el.map.linear(ref_basis(el.shape, a, x));
                    *fa += w * (v[0] * p[0] + v[1] * p[1]);
                }
            }
            for (a, fa) in f.iter_mut().enumerate().take(n) {
                *fa *= el.signs()[a];
            }
            let dh = div.hints.region_hints(el.shape, &el.map);
            let d: f64 = region_rule(el.shape, &dh, level)
                .iter()
                .map(|(x, w)| w * div.eval(el.map.apply(*x)))
                .sum();
            (f, d * el.det.abs())
        })
        .collect();
    let mut ue = vec![0.0; sys.n_edges()];
    let mut dk = Vec::with_capacity(per_el.len());
    for (el, (f, d)) in mesh.elements.iter().zip(per_el) {
        for (a, &e) in el.edges().iter().enumerate() {
            ue[e] += f[a];
        }
        dk.push(d);
    }
    Ok((ue, dk))
}

/// Solves the mixed problem with boundary fluxes taken from `boundary`.
pub fn solve_qh_with(
    u: &VectorField,
    sys: &MixedSystem,
    boundary: &RTFunction,
    level: QuadLevel,
) -> Result<MixedSolution> {
    let (ue, dk) = loads(u, sys, level)?;
    let idx = sys.interior_index();
    let (ni, nk) = (sys.interior.len(), sys.n_elements());
    let n = ni + nk + 1;
    let zb = |e: usize| {
        if idx[e].is_none() {
            boundary.coeffs[e]
        } else {
            0.0
        }
    };

    let mut rhs = vec![0.0; n];
    let mut trip: Vec<Triplet<usize, usize, f64>> =
        Vec::with_capacity(sys.mass.len() + 2 * sys.div.len() + 2 * nk);
    for (i, &e) in sys.interior.iter().enumerate() {
        rhs[i] = ue[e];
    }
    for &(r, c, v) in &sys.mass {
        if let Some(i) = idx[r] {
            match idx[c] {
                Some(j) => trip.push(Triplet::new(i, j, v)),
                None => rhs[i] -= v * zb(c),
            }
        }
    }
    rhs[ni..ni + nk].copy_from_slice(&dk);
    for &(k, e, v) in &sys.div {
        match idx[e] {
            Some(i) => {
                trip.push(Triplet::new(ni + k, i, v));
                trip.push(Triplet::new(i, ni + k, v));
            }
            None => rhs[ni + k] -= v * zb(e),
        }
    }
    for (k, &a) in sys.areas.iter().enumerate() {
        trip.push(Triplet::new(ni + k, n - 1, a));
        trip.push(Triplet::new(n - 1, ni + k, a));
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Singular(format!("saddle-point assembly: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::Singular(format!("saddle-point factorization: {e:?}")))?;
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    if (0..n).any(|i| !x[(i, 0)].is_finite()) {
        return Err(Error::Singular(
            "saddle-point solve produced non-finite values".into(),
        ));
    }

    let ax = &a * &x;
    let rn: f64 = (0..n)
        .map(|i| (ax[(i, 0)] - rhs[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    let bn: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = if bn > 0.0 { rn / bn } else { rn };
    if residual > SOLVE_TOL {
        return Err(Error::Singular(format!(
            "saddle-point residual {residual:.3e}"
        )));
    }

    let mut coeffs = vec![0.0; sys.n_edges()];
    for e in 0..sys.n_edges() {
        coeffs[e] = match idx[e] {
            Some(i) => x[(i, 0)],
            None => boundary.coeffs[e],
        };
    }
    let f = (0..nk).map(|k| x[(ni + k, 0)]).collect();
    Ok(MixedSolution {
        z: RTFunction::new(sys.mesh.clone(), coeffs)?,
        f: PWConstant::new(sys.mesh.clone(), f)?,
        multiplier: x[(n - 1, 0)],
        residual,
    })
}

/// `Q_h u` on `mesh`, with boundary fluxes of `Π_RT u`.
pub fn solve_qh(
    u: &VectorField,
    mesh: &Arc<GradedMesh>,
    level: QuadLevel,
) -> Result<MixedSolution> {
    let sys = assemble_mixed_system(mesh)?;
    let pi = interpolate_rt(u, mesh, level)?;
    solve_qh_with(u, &sys, &pi, level)
}

/// Discrete inf-sup constant of the divergence coupling between interior-flux
/// RT0 functions with the `H(div)` norm and mean-zero piecewise constants
/// with the L² norm. `+∞` when the mean-zero space is trivial.
pub fn inf_sup_constant(sys: &MixedSystem) -> Result<f64> {
    let nk = sys.n_elements();
    if nk <= 1 {
        return Ok(f64::INFINITY);
    }
    let idx = sys.interior_index();
    let ni = sys.interior.len();
    if ni == 0 {
        return Ok(0.0);
    }
    let ws: Vec<f64> = sys.areas.iter().map(|a| a.sqrt()).collect();
    // C = W^{-1/2} B_I.
    let mut c = Mat::<f64>::zeros(nk, ni);
    for &(k, e, v) in &sys.div {
        if let Some(i) = idx[e] {
            c[(k, i)] += v / ws[k];
        }
    }
    // A = M_II + Cᵀ C.
    let mut a = c.transpose() * &c;
    for &(r, col, v) in &sys.mass {
        if let (Some(i), Some(j)) = (idx[r], idx[col]) {
            a[(i, j)] += v;
        }
    }
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::Singular(format!("H(div) Gram matrix: {e:?}")))?;
    let x = llt.solve(c.transpose());
    let p = &c * &x;
    // q = W^{1/2}1/|W^{1/2}1| spans the kernel; move it above the spectrum.
    let qn = sys.areas.iter().sum::<f64>().sqrt();
    let s = Mat::<f64>::from_fn(nk, nk, |i, j| {
        0.5 * (p[(i, j)] + p[(j, i)]) + 2.0 * ws[i] * ws[j] / (qn * qn)
    });
    let ev = s
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Singular(format!("inf-sup eigenproblem: {e:?}")))?;
    Ok(ev[0].max(0.0).sqrt())
}

/// `Π_RT^{q/u} u` and `Π_0^{q/u} div u` on the quasi-uniform coarsening.
pub fn coarse_projections(
    u: &VectorField,
    mesh: &GradedMesh,
    level: QuadLevel,
) -> Result<(CoarseMesh, RTFunction, PWConstant)> {
    let coarse = coarsen_to_quasi_uniform(mesh)?;
    let cm = Arc::new(coarse.mesh.clone());
    let rt = interpolate_rt(u, &cm, level)?;
    let div = u
        .divergence()
        .ok_or_else(|| Error::MissingDivergence(u.label.clone()))?;
    let p0 = project_piecewise_constant(&div, &cm, level);
    Ok((coarse, rt, p0))
}

/// Prolongation of a coarse piecewise constant to the fine mesh.
pub fn prolong_piecewise_constant(
    coarse: &CoarseMesh,
    p: &PWConstant,
    fine: &Arc<GradedMesh>,
) -> Result<PWConstant> {
    PWConstant::new(
        fine.clone(),
        coarse.parent.iter().map(|&c| p.values[c]).collect(),
    )
}

/// One mesh of a `Q_h` error table.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct QhRow {
    pub n: usize,
    pub h: f64,
    /// `‖u − Q_h u‖` in the discrete `H^{−1/2}` surrogate, both components.
    pub dual_error: f64,
    /// `‖u − Π_RT u‖_{H(div)}`.
    pub interp_error: f64,
    /// `None` when the interpolation error vanishes.
    pub ratio: Option<f64>,
    pub commuting_defect: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct QhReport {
    pub rows: Vec<QhRow>,
    /// Slope of `log ratio` against `log h`, when at least three ratios exist.
    pub fit: Option<RateFit>,
}

/// `‖v‖` for a vector error field given element-wise.
pub fn dual_error(op: &DualNormOperator, u: &VectorField, z: &RTFunction, level: QuadLevel) -> f64 {
    let mesh = &z.mesh;
    let mut sq = 0.0;
    for l in 0..2 {
        let f = |k: usize, x: crate::geom::Point2| {
            let el = &mesh.elements[k];
            u.eval(x)[l] - z.eval_unchecked(k, el.map.inverse_apply(x))[l]
        };
        let src = DualSource::OnMesh {
            mesh,
            hints: u.component_hints(l),
            f: &f,
        };
        sq += op.norm(&src, level).powi(2);
    }
    sq.sqrt()
}

/// `max_K |div z_K − (Π_0 div u)_K|`.
pub fn qh_commuting_defect(u: &VectorField, sol: &MixedSolution, level: QuadLevel) -> Result<f64> {
    let div = u
        .divergence()
        .ok_or_else(|| Error::MissingDivergence(u.label.clone()))?;
    let p0 = project_piecewise_constant(&div, &sol.z.mesh, level);
    Ok((0..sol.z.mesh.n_elements())
        .map(|k| (sol.z.div(k) - p0.values[k]).abs())
        .fold(0.0, f64::max))
}

/// Error table over a sequence of meshes covering one region.
pub fn qh_error_report(
    u: &VectorField,
    meshes: &[Arc<GradedMesh>],
    op: &DualNormOperator,
    level: QuadLevel,
) -> Result<QhReport> {
    let mut rows = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let sys = assemble_mixed_system(mesh)?;
        let pi = interpolate_rt(u, mesh, level)?;
        let sol = solve_qh_with(u, &sys, &pi, level)?;
        let interp_error = hdiv_error(u, &pi, level)?;
        let dual = dual_error(op, u, &sol.z, level);
        let ratio = (interp_error > 1e-13).then(|| dual / interp_error);
        rows.push(QhRow {
            n: mesh.grading.map(|g| g.n).unwrap_or(0),
            h: mesh
                .grading
                .map(|g| g.h())
                .unwrap_or_else(|| mesh_quality_report(mesh).h_max),
            dual_error: dual,
            interp_error,
            ratio,
            commuting_defect: qh_commuting_defect(u, &sol, level)?,
            residual: sol.residual,
        });
    }
    let with: Vec<&QhRow> = rows.iter().filter(|r| r.ratio.is_some()).collect();
    let fit = if with.len() >= 3 {
        let h: Vec<f64> = with.iter().map(|r| r.h).collect();
        let r: Vec<f64> = with.iter().map(|r| r.ratio.unwrap()).collect();
        Some(fit_rate(&h, &r)?)
    } else {
        None
    };
    Ok(QhReport { rows, fit })
}
