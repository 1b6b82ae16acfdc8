//! Gauss–Legendre rules, graded composite rules on intervals and the
//! tensor/collapsed rules on Q̂ and T̂ built from them.

use std::sync::OnceLock;

use crate::geom::{Point2, Shape};

const MAX_ORDER: usize = 48;
/// Ratio of consecutive panels in geometric grading.
pub const GEOMETRIC_RATIO: f64 = 0.25;
/// Smallest relative offset the log-log substitution is allowed to reach.
const LOGLOG_FLOOR: f64 = 1e-300;

fn gauss_table() -> &'static [(Vec<f64>, Vec<f64>)] {
    static TABLE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    TABLE.get_or_init(|| (1..=MAX_ORDER).map(legendre_rule).collect())
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = (1.0 - z) / 2.0;
        x[n - 1 - i] = (1.0 + z) / 2.0;
        w[i] = wi / 2.0;
        w[n - 1 - i] = wi / 2.0;
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (&'static [f64], &'static [f64]) {
    let (x, w) = &gauss_table()[n.clamp(1, MAX_ORDER) - 1];
    (x, w)
}

/// Refinement level shared by all quadrature in the crate. Level `L + 1` is
/// the comparison rule used for error indicators at level `L`.
#[derive(
    Clone,
    Copy,
    Debug,
    Default,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    serde::Serialize,
    serde::Deserialize,
)]
pub struct QuadLevel(pub u32);

impl QuadLevel {
    pub fn order(self) -> usize {
        (8 + 2 * self.0 as usize).min(MAX_ORDER)
    }

    pub fn geometric_levels(self) -> usize {
        40 + 20 * self.0 as usize
    }

    pub fn loglog_step(self) -> f64 {
        0.25 / 2f64.powi(self.0 as i32)
    }

    pub fn next(self) -> QuadLevel {
        QuadLevel(self.0 + 1)
    }
}

/// How a rule concentrates nodes toward one end of an interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EndGrading {
    #[default]
    None,
    Geometric,
    /// Substitution `t = exp(1 − e^σ)`, for `log log(1/t)` type behaviour.
    LogLog,
}

#[derive(Clone, Debug)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
    pub grade_lo: EndGrading,
    pub grade_hi: EndGrading,
    pub breaks: Vec<f64>,
    pub order: usize,
    pub geometric_levels: usize,
    pub loglog_step: f64,
    pub panels: usize,
}

impl IntervalSpec {
    pub fn new(lo: f64, hi: f64, level: QuadLevel) -> Self {
        IntervalSpec {
            lo,
            hi,
            grade_lo: EndGrading::None,
            grade_hi: EndGrading::None,
            breaks: Vec::new(),
            order: level.order(),
            geometric_levels: level.geometric_levels(),
            loglog_step: level.loglog_step(),
            panels: 1,
        }
    }

    pub fn graded(mut self, lo: EndGrading, hi: EndGrading) -> Self {
        self.grade_lo = lo;
        self.grade_hi = hi;
        self
    }

    pub fn breaks(mut self, b: impl IntoIterator<Item = f64>) -> Self {
        self.breaks.extend(b);
        self
    }

    pub fn order(mut self, n: usize) -> Self {
        self.order = n;
        self
    }

    pub fn panels(mut self, p: usize) -> Self {
        self.panels = p.max(1);
        self
    }

    pub fn geometric_levels(mut self, k: usize) -> Self {
        self.geometric_levels = k;
        self
    }

    pub fn build(&self) -> Rule1d {
        Rule1d::from_spec(self)
    }
}

/// A 1D rule. `probes` hold (node, density weight) pairs at the cut-off of a
/// truncated substitution; a non-negligible integrand there means the rule
/// could not reach the singularity.
#[derive(Clone, Debug, Default)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub probes: Vec<(f64, f64)>,
}

impl Rule1d {
    pub fn gauss(n: usize, lo: f64, hi: f64) -> Self {
        let mut r = Rule1d::default();
        r.push_panel(lo, hi, n);
        r
    }

    /// Composite Gauss rule over consecutive `points`.
    pub fn composite(points: &[f64], n: usize) -> Self {
        let mut r = Rule1d::default();
        for p in points.windows(2) {
            r.push_panel(p[0], p[1], n);
        }
        r
    }

    fn push_panel(&mut self, a: f64, b: f64, n: usize) {
        if b <= a {
            return;
        }
        let (x, w) = gauss_legendre(n);
        let h = b - a;
        for (xi, wi) in x.iter().zip(w) {
            self.nodes.push(a + h * xi);
            self.weights.push(h * wi);
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Largest integrand density at the truncation probes.
    pub fn tail(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.probes
            .iter()
            .map(|&(x, w)| (w * f(x)).abs())
            .fold(0.0, f64::max)
    }

    fn append(&mut self, other: Rule1d) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
        self.probes.extend(other.probes);
    }

    fn from_spec(s: &IntervalSpec) -> Self {
        let (lo, hi) = (s.lo, s.hi);
        if !(hi > lo) {
            return Rule1d::default();
        }
        let tol = 1e-14 * (hi - lo).max(lo.abs().max(hi.abs()) * 1e-2);
        let mut breaks: Vec<f64> = s
            .breaks
            .iter()
            .copied()
            .filter(|&b| b > lo + tol && b < hi - tol)
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= tol);
        match (s.grade_lo, s.grade_hi) {
            (EndGrading::None, EndGrading::None) => {
                let mut pts: Vec<f64> = (0..=s.panels)
                    .map(|k| lo + (hi - lo) * k as f64 / s.panels as f64)
                    .collect();
                pts.extend(breaks);
                pts.sort_by(f64::total_cmp);
                pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
                Rule1d::composite(&pts, s.order)
            }
            (g, EndGrading::None) => one_sided(s, g, lo, hi - lo, 1.0, &breaks),
            (EndGrading::None, g) => one_sided(s, g, hi, hi - lo, -1.0, &breaks),
            _ => {
                let mid = 0.5 * (lo + hi);
                let mut left = s.clone();
                left.hi = mid;
                left.grade_hi = EndGrading::None;
                left.breaks = breaks.clone();
                left.panels = s.panels.div_ceil(2);
                let mut right = s.clone();
                right.lo = mid;
                right.grade_lo = EndGrading::None;
                right.breaks = breaks;
                right.panels = s.panels.div_ceil(2);
                let mut r = Rule1d::from_spec(&left);
                r.append(Rule1d::from_spec(&right));
                r
            }
        }
    }
}

/// Rule on `origin + dir·u`, `u ∈ [0, len]`, graded toward `u = 0`.
fn one_sided(
    s: &IntervalSpec,
    g: EndGrading,
    origin: f64,
    len: f64,
    dir: f64,
    breaks: &[f64],
) -> Rule1d {
    let ubreaks: Vec<f64> = breaks.iter().map(|&b| (b - origin) * dir).collect();
    let mut r = Rule1d::default();
    match g {
        EndGrading::None => unreachable!(),
        EndGrading::Geometric => {
            let mut pts = vec![0.0, len];
            let mut q = 1.0;
            for _ in 0..s.geometric_levels {
                q *= GEOMETRIC_RATIO;
                pts.push(len * q);
            }
            for k in 1..s.panels {
                pts.push(len * k as f64 / s.panels as f64);
            }
            pts.extend(ubreaks);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let c = Rule1d::composite(&pts, s.order);
            r.nodes = c.nodes;
            r.weights = c.weights;
        }
        EndGrading::LogLog => {
            let smax = (1.0 - LOGLOG_FLOOR.ln()).ln();
            let mut sig: Vec<f64> = Vec::new();
            let mut t = 0.0;
            while t < smax {
                sig.push(t);
                t += s.loglog_step;
            }
            sig.push(smax);
            for &b in &ubreaks {
                let sb = (1.0 + (len / b).ln()).ln();
                if sb > 0.0 && sb < smax {
                    sig.push(sb);
                }
            }
            sig.sort_by(f64::total_cmp);
            sig.dedup();
            let c = Rule1d::composite(&sig, s.order);
            for (&sg, &w) in c.nodes.iter().zip(&c.weights) {
                let es = sg.exp();
                let rel = (1.0 - es).exp();
                r.nodes.push(len * rel);
                r.weights.push(w * len * rel * es);
            }
            let es = smax.exp();
            let rel = (1.0 - es).exp();
            r.probes.push((len * rel, len * rel * es));
        }
    }
    // Offsets below the resolution at `origin` would evaluate the integrand at
    // the singular end itself; their weight is negligible.
    let (mut nodes, mut weights) = (Vec::with_capacity(r.len()), Vec::with_capacity(r.len()));
    for (&u, &w) in r.nodes.iter().zip(&r.weights) {
        let x = origin + dir * u;
        if x != origin {
            nodes.push(x);
            weights.push(w);
        }
    }
    r.nodes = nodes;
    r.weights = weights;
    for p in r.probes.iter_mut() {
        p.0 = origin + dir * p.0;
    }
    r
}

/// Per-region singularity description in reference coordinates. Edge and
/// vertex numbering follows `Shape::ref_vertices`, edge `k` joining vertex
/// `k` to vertex `k+1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionHints {
    pub edge: [EndGrading; 4],
    pub vertex: [EndGrading; 4],
    pub x1_breaks: Vec<f64>,
    pub x2_breaks: Vec<f64>,
}

impl RegionHints {
    pub fn is_smooth(&self) -> bool {
        self.edge
            .iter()
            .chain(&self.vertex)
            .all(|g| *g == EndGrading::None)
            && self.x1_breaks.is_empty()
            && self.x2_breaks.is_empty()
    }

    pub fn strongest(&self) -> EndGrading {
        self.edge
            .iter()
            .chain(&self.vertex)
            .copied()
            .max()
            .unwrap_or_default()
    }

    /// Collapse and gradings `[a_lo, a_hi, b_lo, b_hi]` of the tensor
    /// coordinates used by `region_rule`: `(a, b) = (x̂₁, x̂₂)` on Q̂; on T̂ the
    /// collapse whose apex needs the fewest graded ends.
    pub fn tensor_layout(&self, shape: Shape) -> (Collapse, [EndGrading; 4]) {
        let (e, v) = (&self.edge, &self.vertex);
        match shape {
            Shape::Parallelogram => (
                Collapse::Upper,
                [
                    e[3].max(v[0]).max(v[3]),
                    e[1].max(v[1]).max(v[2]),
                    e[0].max(v[0]).max(v[1]),
                    e[2].max(v[2]).max(v[3]),
                ],
            ),
            Shape::Triangle => {
                let upper = [
                    e[2].max(v[0]),
                    e[1].max(v[1]),
                    e[0].max(v[0]).max(v[1]),
                    v[2],
                ];
                let origin = [
                    v[0],
                    e[1].max(v[1]).max(v[2]),
                    e[0].max(v[1]),
                    e[2].max(v[2]),
                ];
                let cost = |g: &[EndGrading; 4]| {
                    let ends = |a: EndGrading, b: EndGrading| {
                        1 + (a != EndGrading::None) as u32 + (b != EndGrading::None) as u32
                    };
                    ends(g[0], g[1]) * ends(g[2], g[3])
                };
                if self.x2_breaks.is_empty() && cost(&origin) < cost(&upper) {
                    (Collapse::Origin, origin)
                } else {
                    (Collapse::Upper, upper)
                }
            }
        }
    }
}

/// Square-to-triangle maps used for T̂.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Collapse {
    /// `x₁ = b + (1 − b)a`, `x₂ = b`, apex at (1, 1).
    Upper,
    /// `x₁ = a`, `x₂ = ab`, apex at the origin.
    Origin,
}

/// Quadrature on the reference element: `(x̂, weight)` with weights summing to the reference area.
pub fn region_rule(shape: Shape, hints: &RegionHints, level: QuadLevel) -> Vec<(Point2, f64)> {
    region_rule_panels(shape, hints, level, 1)
}

pub fn region_rule_panels(
    shape: Shape,
    hints: &RegionHints,
    level: QuadLevel,
    panels: usize,
) -> Vec<(Point2, f64)> {
    let (c, g) = hints.tensor_layout(shape);
    let a = IntervalSpec::new(0.0, 1.0, level)
        .graded(g[0], g[1])
        .panels(panels);
    let b = IntervalSpec::new(0.0, 1.0, level)
        .graded(g[2], g[3])
        .panels(panels);
    match shape {
        Shape::Parallelogram => {
            let a = a.breaks(hints.x1_breaks.iter().copied()).build();
            let b = b.breaks(hints.x2_breaks.iter().copied()).build();
            tensor_rule(&a, &b)
        }
        Shape::Triangle => {
            let a = a.build();
            let b = b.breaks(hints.x2_breaks.iter().copied()).build();
            triangle_rule(c, &a, &b)
        }
    }
}

pub fn tensor_rule(a: &Rule1d, b: &Rule1d) -> Vec<(Point2, f64)> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (&y, &wy) in b.nodes.iter().zip(&b.weights) {
        for (&x, &wx) in a.nodes.iter().zip(&a.weights) {
            out.push(([x, y], wx * wy));
        }
    }
    out
}

/// Rule on T̂ from `x₁ = b + (1 − b)a`, `x₂ = b`.
pub fn collapsed_rule(a: &Rule1d, b: &Rule1d) -> Vec<(Point2, f64)> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (&y, &wy) in b.nodes.iter().zip(&b.weights) {
        for (&x, &wx) in a.nodes.iter().zip(&a.weights) {
            out.push(([y + (1.0 - y) * x, y], wx * wy * (1.0 - y)));
        }
    }
    out
}

/// Rule on T̂ from `x₁ = a`, `x₂ = ab`.
pub fn origin_collapsed_rule(a: &Rule1d, b: &Rule1d) -> Vec<(Point2, f64)> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (&y, &wy) in b.nodes.iter().zip(&b.weights) {
        for (&x, &wx) in a.nodes.iter().zip(&a.weights) {
            out.push(([x, x * y], wx * wy * x));
        }
    }
    out
}

pub fn triangle_rule(c: Collapse, a: &Rule1d, b: &Rule1d) -> Vec<(Point2, f64)> {
    match c {
        Collapse::Upper => collapsed_rule(a, b),
        Collapse::Origin => origin_collapsed_rule(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let s: f64 = x.iter().zip(w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                assert!(
                    (s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14,
                    "n={n} p={p} s={s}"
                );
            }
        }
    }

    #[test]
    fn geometric_rule_handles_algebraic_endpoint() {
        let r = IntervalSpec::new(0.0, 1.0, QuadLevel(0))
            .graded(EndGrading::Geometric, EndGrading::None)
            .build();
        let v = r.integrate(|t| t.powf(-0.5));
        assert!((v - 2.0).abs() < 2e-8, "{v}");
        let r = IntervalSpec::new(2.0, 3.0, QuadLevel(0))
            .graded(EndGrading::None, EndGrading::Geometric)
            .build();
        let v = r.integrate(|t| (3.0 - t).powf(0.3));
        assert!((v - 1.0 / 1.3).abs() < 1e-9, "{v}");
    }

    #[test]
    fn loglog_rule_integrates_derivative_of_loglog() {
        // ∫_0^1 1/(t log(e/t)^2) dt = 1
        let r = IntervalSpec::new(0.0, 1.0, QuadLevel(0))
            .graded(EndGrading::LogLog, EndGrading::None)
            .build();
        let v = r.integrate(|t| 1.0 / (t * (1.0 - t.ln()).powi(2)));
        assert!((v - 1.0).abs() < 2e-3, "{v}");
        assert_eq!(r.probes.len(), 1);
    }

    #[test]
    fn breaks_split_panels() {
        let r = IntervalSpec::new(0.0, 1.0, QuadLevel(0))
            .breaks([0.3])
            .build();
        let v = r.integrate(|t| (t - 0.3).abs());
        assert!((v - (0.09 + 0.49) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_sided_grading() {
        let r = IntervalSpec::new(0.0, 1.0, QuadLevel(0))
            .graded(EndGrading::Geometric, EndGrading::Geometric)
            .build();
        let v = r.integrate(|t| (t * (1.0 - t)).powf(-0.5));
        assert!((v - std::f64::consts::PI).abs() < 1e-7, "{v}");
    }

    #[test]
    fn region_rules_have_reference_area() {
        let h = RegionHints::default();
        let s: f64 = region_rule(Shape::Parallelogram, &h, QuadLevel(0))
            .iter()
            .map(|p| p.1)
            .sum();
        assert!((s - 1.0).abs() < 1e-14);
        let t: f64 = region_rule(Shape::Triangle, &h, QuadLevel(0))
            .iter()
            .map(|p| p.1)
            .sum();
        assert!((t - 0.5).abs() < 1e-14);
        let m: f64 = region_rule(Shape::Triangle, &h, QuadLevel(0))
            .iter()
            .map(|(x, w)| w * x[0] * x[1])
            .sum();
        assert!((m - 1.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn origin_vertex_uses_origin_collapse() {
        let h = RegionHints {
            vertex: [
                EndGrading::Geometric,
                EndGrading::None,
                EndGrading::None,
                EndGrading::None,
            ],
            ..Default::default()
        };
        let (c, g) = h.tensor_layout(Shape::Triangle);
        assert_eq!(c, Collapse::Origin);
        let rule = region_rule(Shape::Triangle, &h, QuadLevel(0));
        // ∫_T̂ x₁^{-1/2} = ∫_0^1 x^{1/2} = 2/3
        let v: f64 = rule.iter().map(|(x, w)| w * x[0].powf(-0.5)).sum();
        assert!((v - 2.0 / 3.0).abs() < 1e-9, "{v} {g:?}");
        let m: f64 = rule.iter().map(|(x, w)| w * x[0] * x[1]).sum();
        assert!((m - 1.0 / 8.0).abs() < 1e-14);
        let e = RegionHints {
            edge: [
                EndGrading::Geometric,
                EndGrading::None,
                EndGrading::None,
                EndGrading::None,
            ],
            ..Default::default()
        };
        assert_eq!(e.tensor_layout(Shape::Triangle).0, Collapse::Upper);
    }
}
