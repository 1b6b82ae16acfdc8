//! Study execution: one CSV row per grid point, in canonical order.

use std::sync::Arc;

use rayon::prelude::*;

use super::config::{StudyConfig, StudyKind};
use super::fit::{eoc, fit_rate};
use super::plot::{loglog_svg, Series};
use crate::error::{Error, Result};
use crate::geom::Shape;
use crate::mesh::{mesh_quality_report, GradedMesh};
use crate::norms::{
    counterexample_report, hdiv_error, l2_error, piola_scaling_identity_check, stability_ratios,
    DualNormOperator, DualNormSpec,
};
use crate::qh::{assemble_mixed_system, inf_sup_constant, qh_error_report};
use crate::rt::interpolate_rt;

/// Relative tolerance for the two-level check of L² errors.
const ERROR_TOL: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub kind: StudyKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// One line per fitted quantity.
    pub summary: Vec<String>,
    pub plot: Option<String>,
    /// Quantities whose quadrature levels disagreed.
    pub nonconverged: usize,
    header: Vec<String>,
}

impl StudyOutput {
    /// Header block, then the CSV body.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for h in &self.header {
            out.push_str("# ");
            out.push_str(h);
            out.push('\n');
        }
        out.push_str(&self.body()?);
        Ok(out)
    }

    /// The CSV body alone, without the header block.
    pub fn body(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Column `name` parsed as numbers; empty cells become NaN.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.columns.iter().position(|c| c == name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| r[i].parse().unwrap_or(f64::NAN))
            .collect()
    }
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn header(cfg: &StudyConfig) -> Vec<String> {
    let l = cfg.level();
    let mut h = vec![
        format!("graded-rt {}", env!("CARGO_PKG_VERSION")),
        format!("study {}", cfg.study.kind.name()),
        format!("quadrature-levels {} {}", l.0, l.next().0),
    ];
    h.extend(
        cfg.to_toml()
            .lines()
            .filter(|s| !s.is_empty())
            .map(|s| format!("config {s}")),
    );
    h
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    summary: Vec<String>,
    series: Vec<Series>,
    axes: (&'static str, &'static str),
    nonconverged: usize,
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutput> {
    cfg.validate()?;
    let t = match cfg.study.kind {
        StudyKind::InterpConvergence => interp_convergence(cfg)?,
        StudyKind::StabilityRatio => stability(cfg)?,
        StudyKind::Counterexample => counterexample(cfg)?,
        StudyKind::Infsup => infsup(cfg)?,
        StudyKind::QhRate => qh_rate(cfg)?,
        StudyKind::ScalingIdentity => scaling(cfg)?,
    };
    let plot = (!t.series.is_empty()).then(|| loglog_svg(&t.series, t.axes.0, t.axes.1));
    Ok(StudyOutput {
        kind: cfg.study.kind,
        columns: t.columns.iter().map(|s| s.to_string()).collect(),
        rows: t.rows,
        summary: t.summary,
        plot,
        nonconverged: t.nonconverged,
        header: header(cfg),
    })
}

fn meshes(cfg: &StudyConfig) -> Result<Vec<(f64, usize, Arc<GradedMesh>)>> {
    cfg.grid()
        .into_par_iter()
        .map(|(b, n)| Ok((b, n, Arc::new(cfg.build_mesh(b, n)?))))
        .collect()
}

fn fit_line(what: &str, beta: f64, x: &[f64], y: &[f64]) -> String {
    match fit_rate(x, y) {
        Ok(f) => format!(
            "beta={beta} {what} slope={:.4} r2={:.4}{}",
            f.slope,
            f.r_squared,
            if f.flagged { " flagged" } else { "" }
        ),
        Err(e) => format!("beta={beta} {what} no fit ({e})"),
    }
}

/// Error, h_max, converged, H(div) error, elements.
type InterpRow = (f64, f64, bool, Option<f64>, usize);

fn interp_convergence(cfg: &StudyConfig) -> Result<Table> {
    let u = cfg.vector_field()?;
    let level = cfg.level();
    let grid = meshes(cfg)?;
    let vals: Vec<Result<InterpRow>> = grid
        .par_iter()
        .map(|(_, _, mesh)| {
            let rt = interpolate_rt(&u, mesh, level)?;
            let e = l2_error(&u, &rt, level);
            let hdiv = if u.has_divergence() {
                Some(hdiv_error(&u, &rt, level)?)
            } else {
                None
            };
            let q = mesh_quality_report(mesh);
            Ok((
                e.value,
                q.h_max,
                e.converged(ERROR_TOL, 1e-14),
                hdiv,
                mesh.n_elements(),
            ))
        })
        .collect();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut series = Vec::new();
    let mut nonconverged = 0;
    for &beta in &cfg.mesh.beta {
        let idx: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].0 == beta).collect();
        let mut h = Vec::new();
        let mut err = Vec::new();
        let mut norm = Vec::new();
        let mut rec = Vec::new();
        for &i in &idx {
            let (e, hmax, conv, hdiv, ne) = match &vals[i] {
                Ok(v) => *v,
                Err(_) => return Err(vals.into_iter().nth(i).unwrap().unwrap_err()),
            };
            let hh = 1.0 / grid[i].1 as f64;
            nonconverged += !conv as usize;
            h.push(hh);
            err.push(e);
            norm.push(e / hh.powf(1.0 - beta / 2.0));
            rec.push((grid[i].1, hh, hmax, ne, e, hdiv, conv));
        }
        let rates = eoc(&h, &err);
        for (j, (n, hh, hmax, ne, e, hdiv, conv)) in rec.into_iter().enumerate() {
            rows.push(vec![
                num(beta),
                n.to_string(),
                num(hh),
                num(hmax),
                ne.to_string(),
                num(e),
                opt(hdiv),
                opt(j.checked_sub(1).map(|k| rates[k])),
                num(norm[j]),
                conv.to_string(),
            ]);
        }
        summary.push(fit_line("l2-error-rate", beta, &h, &err));
        summary.push(fit_line("normalized-error-rate", beta, &h, &norm));
        series.push(Series {
            label: format!("beta={beta}"),
            points: h.iter().copied().zip(err.iter().copied()).collect(),
        });
    }
    Ok(Table {
        columns: vec![
            "beta",
            "n",
            "h",
            "h_max",
            "elements",
            "l2_error",
            "hdiv_error",
            "eoc",
            "normalized_error",
            "converged",
        ],
        rows,
        summary,
        series,
        axes: ("h = 1/N", "L2 interpolation error"),
        nonconverged,
    })
}

fn stability(cfg: &StudyConfig) -> Result<Table> {
    let u = cfg.vector_field()?;
    let level = cfg.level();
    let branch = cfg.norm.branch;
    let grid = meshes(cfg)?;
    // Cells already run in parallel inside `stability_ratios`.
    let per: Vec<_> = grid
        .iter()
        .map(|(_, _, mesh)| stability_ratios(&u, mesh, branch, cfg.norm.s, level))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut series = Vec::new();
    let mut nonconverged = 0;
    for &beta in &cfg.mesh.beta {
        for comp in [1u8, 2] {
            let mut ns = Vec::new();
            let mut maxes = Vec::new();
            for (i, (b, n, _)) in grid.iter().enumerate() {
                if *b != beta {
                    continue;
                }
                let cells: Vec<_> = per[i].iter().filter(|c| c.component == comp).collect();
                let nc = cells.iter().filter(|c| !c.converged).count();
                nonconverged += nc;
                for shape in [Shape::Parallelogram, Shape::Triangle] {
                    let of: Vec<_> = cells.iter().filter(|c| c.shape == shape).collect();
                    if let Some(m) = of.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)) {
                        rows.push(vec![
                            num(beta),
                            n.to_string(),
                            shape.name().to_string(),
                            comp.to_string(),
                            of.len().to_string(),
                            m.cell.to_string(),
                            num(m.numerator),
                            num(m.denominator),
                            num(m.ratio),
                            of.iter().filter(|c| !c.converged).count().to_string(),
                        ]);
                    }
                }
                if let Some(m) = cells.iter().map(|c| c.ratio).max_by(f64::total_cmp) {
                    ns.push(*n as f64);
                    maxes.push(m);
                }
            }
            summary.push(fit_line(
                &format!("component={comp} max-ratio-vs-N"),
                beta,
                &ns,
                &maxes,
            ));
            series.push(Series {
                label: format!("beta={beta} u{comp}"),
                points: ns.iter().copied().zip(maxes.iter().copied()).collect(),
            });
        }
    }
    Ok(Table {
        columns: vec![
            "beta",
            "n",
            "shape",
            "component",
            "cells",
            "argmax_cell",
            "numerator",
            "denominator",
            "max_ratio",
            "nonconverged",
        ],
        rows,
        summary,
        series,
        axes: ("N", "max stability ratio"),
        nonconverged,
    })
}

fn counterexample(cfg: &StudyConfig) -> Result<Table> {
    let level = cfg.level();
    let reports: Vec<_> = cfg
        .counterexample
        .eps
        .par_iter()
        .map(|&e| counterexample_report(e, level))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut nonconverged = 0;
    for r in &reports {
        nonconverged += !r.u2_converged as usize;
        rows.push(vec![
            num(r.eps),
            num(r.kink_radius),
            num(r.fluxes[0]),
            num(r.fluxes[1]),
            num(r.fluxes[2]),
            num(r.flux_residual),
            num(r.pi2_l2),
            num(r.u2_h_half),
            num(r.u1_ah1_sq),
            num(r.ratio),
            num(r.augmented_ratio),
            r.u2_converged.to_string(),
        ]);
    }
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    let growth = ratios
        .last()
        .zip(ratios.first())
        .map(|(a, b)| a / b)
        .unwrap_or(f64::NAN);
    let summary = vec![format!("ratio growth first-to-last eps = {growth:.4}")];
    Ok(Table {
        columns: vec![
            "eps",
            "kink_radius",
            "flux_e1",
            "flux_e2",
            "flux_e3",
            "flux_residual",
            "pi2_l2",
            "u2_h_half",
            "u1_ah1_sq",
            "ratio",
            "augmented_ratio",
            "converged",
        ],
        rows,
        summary,
        series: vec![Series {
            label: "ratio".into(),
            points: reports.iter().map(|r| (r.eps, r.ratio)).collect(),
        }],
        axes: ("eps", "ratio"),
        nonconverged,
    })
}

fn infsup(cfg: &StudyConfig) -> Result<Table> {
    let grid = meshes(cfg)?;
    let vals: Vec<(f64, usize, usize)> = grid
        .par_iter()
        .map(|(_, _, mesh)| {
            let sys = assemble_mixed_system(mesh)?;
            Ok((
                inf_sup_constant(&sys)?,
                sys.n_elements(),
                sys.interior.len(),
            ))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut series = Vec::new();
    for &beta in &cfg.mesh.beta {
        let mut ns = Vec::new();
        let mut gs = Vec::new();
        for (i, (b, n, _)) in grid.iter().enumerate() {
            if *b != beta {
                continue;
            }
            let (g, ne, ni) = vals[i];
            rows.push(vec![
                num(beta),
                n.to_string(),
                ne.to_string(),
                ni.to_string(),
                num(g),
            ]);
            if g.is_finite() {
                ns.push(*n as f64);
                gs.push(g);
            }
        }
        let (lo, hi) = gs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &g| (l.min(g), h.max(g)));
        summary.push(format!(
            "beta={beta} gamma min={lo:.6} max={hi:.6} spread={:.4}",
            hi / lo
        ));
        summary.push(fit_line("gamma-vs-N", beta, &ns, &gs));
        series.push(Series {
            label: format!("beta={beta}"),
            points: ns.iter().copied().zip(gs.iter().copied()).collect(),
        });
    }
    Ok(Table {
        columns: vec!["beta", "n", "elements", "interior_edges", "inf_sup"],
        rows,
        summary,
        series,
        axes: ("N", "discrete inf-sup constant"),
        nonconverged: 0,
    })
}

fn qh_rate(cfg: &StudyConfig) -> Result<Table> {
    let u = cfg.vector_field()?;
    let level = cfg.level();
    let grid = meshes(cfg)?;
    let domain = grid[0].2.domain;
    let op = DualNormOperator::new(&domain, DualNormSpec::new(cfg.norm.dual_m)?)?;
    let per: Vec<_> = grid
        .par_iter()
        .map(|(_, _, mesh)| qh_error_report(&u, std::slice::from_ref(mesh), &op, level))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut series = Vec::new();
    for &beta in &cfg.mesh.beta {
        let mut h = Vec::new();
        let mut r = Vec::new();
        for (i, (b, _, _)) in grid.iter().enumerate() {
            if *b != beta {
                continue;
            }
            let row = &per[i].rows[0];
            rows.push(vec![
                num(beta),
                row.n.to_string(),
                num(row.h),
                num(row.dual_error),
                num(row.interp_error),
                opt(row.ratio),
                num(row.commuting_defect),
                num(row.residual),
            ]);
            if let Some(q) = row.ratio {
                h.push(row.h);
                r.push(q);
            }
        }
        summary.push(fit_line("ratio-vs-h", beta, &h, &r));
        series.push(Series {
            label: format!("beta={beta}"),
            points: h.iter().copied().zip(r.iter().copied()).collect(),
        });
    }
    Ok(Table {
        columns: vec![
            "beta",
            "n",
            "h",
            "dual_error",
            "interp_error",
            "ratio",
            "commuting_defect",
            "residual",
        ],
        rows,
        summary,
        series,
        axes: ("h = 1/N", "dual error / H(div) interpolation error"),
        nonconverged: 0,
    })
}

fn scaling(cfg: &StudyConfig) -> Result<Table> {
    let g = cfg.scalar_field()?;
    let level = cfg.level();
    let sc = &cfg.scaling;
    let pairs: Vec<(f64, f64)> = sc.h1.iter().copied().zip(sc.h2.iter().copied()).collect();
    let res: Vec<_> = pairs
        .iter()
        .map(|&(h1, h2)| piola_scaling_identity_check(h1, h2, &g, sc.shape, level))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut nonconverged = 0;
    let mut worst: f64 = 0.0;
    for r in &res {
        nonconverged += !r.converged as usize;
        worst = worst.max(r.max_equality_residual());
        rows.push(vec![
            num(r.h1),
            num(r.h2),
            num(r.l2.0),
            num(r.l2.1),
            num(r.l2_residual),
            num(r.ah2.0),
            num(r.ah2.1),
            num(r.ah2_residual),
            num(r.h_half.0),
            num(r.h_half.1),
            num(r.h_half_slack),
            r.converged.to_string(),
        ]);
    }
    Ok(Table {
        columns: vec![
            "h1",
            "h2",
            "l2_lhs",
            "l2_rhs",
            "l2_residual",
            "ah2_lhs",
            "ah2_rhs",
            "ah2_residual",
            "h_half_lhs",
            "h_half_rhs",
            "h_half_slack",
            "converged",
        ],
        rows,
        summary: vec![format!("largest equality residual {worst:.3e}")],
        series: Vec::new(),
        axes: ("", ""),
        nonconverged,
    })
}
