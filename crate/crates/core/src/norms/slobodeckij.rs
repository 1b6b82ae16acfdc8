//! Slobodeckij double integrals in relative coordinates.
//!
//! With `x = y + z`, `∫_R∫_R (g(x)−g(y))² |x−y|^{−d−2s}` becomes
//! `∫_D |z|^{−d−2s} F(z) dz` with `F(z) = ∫_{R∩(R−z)} (g(y+z)−g(y))² dy`.
//! `D = R − R` is split into triangles with apex 0 and integrated in polar
//! form, which removes the kernel singularity; `F(−z) = F(z)` halves the work.

use rayon::prelude::*;

use crate::field::ScalarField;
use crate::geom::{cross, norm, Affine2, Point2, Shape};
use crate::quadrature::{
    tensor_rule, triangle_rule, EndGrading, IntervalSpec, QuadLevel, RegionHints, Rule1d,
};

/// Triangles `(P, Q)` with apex 0 covering half of `R̂ − R̂`.
fn half_difference_domain(shape: Shape) -> &'static [(Point2, Point2)] {
    match shape {
        Shape::Parallelogram => &[
            ([1.0, 0.0], [1.0, 1.0]),
            ([1.0, 1.0], [0.0, 1.0]),
            ([0.0, 1.0], [-1.0, 1.0]),
            ([-1.0, 1.0], [-1.0, 0.0]),
        ],
        Shape::Triangle => &[
            ([1.0, 0.0], [1.0, 1.0]),
            ([1.0, 1.0], [0.0, 1.0]),
            ([0.0, 1.0], [-1.0, 0.0]),
        ],
    }
}

/// Overlap `R̂ ∩ (R̂ − z)` as an affine image of the reference shape.
pub(crate) fn overlap(shape: Shape, z: Point2) -> Option<Affine2> {
    match shape {
        Shape::Parallelogram => {
            let (a1, b1) = ((-z[0]).max(0.0), (1.0 - z[0]).min(1.0));
            let (a2, b2) = ((-z[1]).max(0.0), (1.0 - z[1]).min(1.0));
            (b1 > a1 && b2 > a2).then(|| Affine2::diagonal(b1 - a1, b2 - a2, [a1, a2]))
        }
        Shape::Triangle => {
            let alpha = (-z[1]).max(0.0);
            let beta = (1.0 - z[0]).min(1.0);
            let gamma = (z[1] - z[0]).max(0.0);
            let l = beta - alpha - gamma;
            (l > 0.0).then(|| Affine2::diagonal(l, l, [alpha + gamma, alpha]))
        }
    }
}

pub(crate) struct OuterPoint {
    pub z: Point2,
    /// Polar weight `w_ρ w_θ ρ |det(P,Q)|`, times 2 for the symmetric half.
    pub weight: f64,
}

/// Polar quadrature over half of `R̂ − R̂`.
pub(crate) fn outer_points(shape: Shape, rho: &Rule1d, theta: &Rule1d) -> Vec<OuterPoint> {
    let mut out = Vec::new();
    for &(p, q) in half_difference_domain(shape) {
        let jac = cross(p, q).abs();
        for (&t, &wt) in theta.nodes.iter().zip(&theta.weights) {
            let d = [(1.0 - t) * p[0] + t * q[0], (1.0 - t) * p[1] + t * q[1]];
            for (&r, &wr) in rho.nodes.iter().zip(&rho.weights) {
                out.push(OuterPoint {
                    z: [r * d[0], r * d[1]],
                    weight: 2.0 * wr * wt * r * jac,
                });
            }
        }
    }
    out
}

/// Inner rule on the overlap for offset `z`, in reference coordinates of R̂.
pub(crate) fn inner_rule(
    shape: Shape,
    hints: &RegionHints,
    z: Point2,
    level: QuadLevel,
    panels: usize,
) -> Vec<(Point2, f64)> {
    let Some(m) = overlap(shape, z) else {
        return Vec::new();
    };
    let zn = z[0].abs().max(z[1].abs());
    let (c, g) = hints.tensor_layout(shape);
    let to_param = |c: f64, off: f64, len: f64| (c - off) / len;
    let (h1, h2) = (m.a[0][0], m.a[1][1]);
    let (o1, o2) = (m.b[0], m.b[1]);
    let bb: Vec<f64> = hints
        .x2_breaks
        .iter()
        .flat_map(|&c| [to_param(c, o2, h2), to_param(c - z[1], o2, h2)])
        .collect();
    let b = IntervalSpec::new(0.0, 1.0, level)
        .graded(g[2], g[3])
        .geometric_levels(inner_levels(level, zn))
        .breaks(bb)
        .panels(panels)
        .build();
    let rule = match shape {
        Shape::Parallelogram => {
            let ab: Vec<f64> = hints
                .x1_breaks
                .iter()
                .flat_map(|&c| [to_param(c, o1, h1), to_param(c - z[0], o1, h1)])
                .collect();
            let a = IntervalSpec::new(0.0, 1.0, level)
                .graded(g[0], g[1])
                .geometric_levels(inner_levels(level, zn))
                .breaks(ab)
                .panels(panels)
                .build();
            tensor_rule(&a, &b)
        }
        Shape::Triangle => {
            let a = IntervalSpec::new(0.0, 1.0, level)
                .graded(g[0], g[1])
                .geometric_levels(inner_levels(level, zn))
                .panels(panels)
                .build();
            triangle_rule(c, &a, &b)
        }
    };
    let det = h1 * h2;
    rule.into_iter()
        .map(|(x, w)| (m.apply(x), w * det))
        .collect()
}

/// Geometric depth for seminorm rules, shallower than for fluxes: the
/// squared differences are bounded, so deep layers contribute nothing.
/// The layer that matters has width about `|z|`, so the depth follows it.
pub(crate) fn inner_levels(level: QuadLevel, z: f64) -> usize {
    let rel = (1.0 / z.abs().max(1e-300)).log(4.0).max(0.0).ceil() as usize;
    (4 + 2 * level.0 as usize + rel).min(outer_levels(level) + 4)
}

pub(crate) fn outer_levels(level: QuadLevel) -> usize {
    16 + 8 * level.0 as usize
}

pub(crate) fn outer_grading(hints: &RegionHints) -> EndGrading {
    hints.strongest().max(EndGrading::Geometric)
}

/// `|g|²_{H^s(R)}` on `R = map(shape)`.
pub(crate) fn seminorm_sq_2d(
    g: &ScalarField,
    shape: Shape,
    map: &Affine2,
    s: f64,
    level: QuadLevel,
) -> f64 {
    let hints = g.hints.region_hints(shape, map);
    let rho = IntervalSpec::new(0.0, 1.0, level)
        .graded(outer_grading(&hints), EndGrading::None)
        .geometric_levels(outer_levels(level))
        .build();
    let theta = IntervalSpec::new(0.0, 1.0, level).build();
    let pts = outer_points(shape, &rho, &theta);
    let expo = -(2.0 + 2.0 * s);
    let ad = map.det().abs();
    let f = g.function();
    let parts: Vec<f64> = pts
        .par_iter()
        .map(|p| {
            let k = norm(map.linear(p.z)).powf(expo);
            if k == 0.0 || !k.is_finite() {
                return 0.0;
            }
            let inner: f64 = inner_rule(shape, &hints, p.z, level, 1)
                .iter()
                .map(|(y, w)| {
                    let d = f(map.apply([y[0] + p.z[0], y[1] + p.z[1]])) - f(map.apply(*y));
                    w * d * d
                })
                .sum();
            p.weight * k * inner
        })
        .collect();
    parts.iter().sum::<f64>() * ad * ad
}

/// `|f|²_{H^s(lo,hi)}` for a function of one variable.
#[allow(clippy::too_many_arguments)]
pub(crate) fn seminorm_sq_1d(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    s: f64,
    grade_lo: EndGrading,
    grade_hi: EndGrading,
    breaks: &[f64],
    level: QuadLevel,
) -> f64 {
    let len = hi - lo;
    if !(len > 0.0) {
        return 0.0;
    }
    let outer = grade_lo.max(grade_hi).max(EndGrading::Geometric);
    let zr = IntervalSpec::new(0.0, len, level)
        .graded(outer, EndGrading::None)
        .geometric_levels(outer_levels(level))
        .build();
    let expo = -(1.0 + 2.0 * s);
    let mut total = 0.0;
    for (&z, &wz) in zr.nodes.iter().zip(&zr.weights) {
        let br = breaks.iter().flat_map(|&c| [c, c - z]);
        let zn = z / len;
        let yr = IntervalSpec::new(lo, hi - z, level)
            .graded(grade_lo, grade_hi)
            .geometric_levels(inner_levels(level, zn))
            .breaks(br)
            .build();
        let inner = yr.integrate(|y| {
            let d = f(y + z) - f(y);
            d * d
        });
        total += wz * z.powf(expo) * inner;
    }
    2.0 * total
}
