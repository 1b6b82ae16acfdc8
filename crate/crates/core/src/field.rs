//! Analytic scalar and vector fields with the singularity hints that the
//! quadrature needs.

use std::fmt;
use std::sync::Arc;

use crate::geom::{dot, norm, sub, Affine2, Point2, Shape};
use crate::quadrature::{EndGrading, RegionHints};

pub type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point2) -> [f64; 2] + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularKind {
    /// `dist^α` behaviour.
    Algebraic,
    /// `log log(1/dist)` behaviour.
    LogLog,
}

impl SingularKind {
    pub fn grading(self) -> EndGrading {
        match self {
            SingularKind::Algebraic => EndGrading::Geometric,
            SingularKind::LogLog => EndGrading::LogLog,
        }
    }
}

/// The line `{x : n·(x − p) = 0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub point: Point2,
    pub normal: Point2,
}

impl Line {
    pub fn horizontal(y: f64) -> Self {
        Line {
            point: [0.0, y],
            normal: [0.0, 1.0],
        }
    }

    pub fn vertical(x: f64) -> Self {
        Line {
            point: [x, 0.0],
            normal: [1.0, 0.0],
        }
    }

    pub fn through(p: Point2, q: Point2) -> Self {
        let t = sub(q, p);
        Line {
            point: p,
            normal: [-t[1], t[0]],
        }
    }

    pub fn signed_distance(&self, x: Point2) -> f64 {
        dot(self.normal, sub(x, self.point)) / norm(self.normal)
    }

    fn contains(&self, x: Point2, scale: f64) -> bool {
        self.signed_distance(x).abs() <= 1e-11 * scale
    }

    /// The same set written in the coordinates `x̂` of `x = map(x̂)`.
    pub fn pull_back(&self, map: &Affine2) -> Line {
        Line {
            point: map.inverse_apply(self.point),
            normal: map.transpose_linear(self.normal),
        }
    }
}

/// Where a field stops being smooth.
#[derive(Clone, Debug, Default)]
pub struct Hints {
    pub singular: Vec<(Line, SingularKind)>,
    /// Lines across which the field is continuous but not smooth.
    pub kinks: Vec<Line>,
}

impl Hints {
    pub fn is_empty(&self) -> bool {
        self.singular.is_empty() && self.kinks.is_empty()
    }

    pub fn with_singularity(mut self, line: Line, kind: SingularKind) -> Self {
        self.singular.push((line, kind));
        self
    }

    pub fn merge(&self, other: &Hints) -> Hints {
        let mut h = self.clone();
        h.singular.extend(other.singular.iter().copied());
        h.kinks.extend(other.kinks.iter().copied());
        h
    }

    pub fn pull_back(&self, map: &Affine2) -> Hints {
        Hints {
            singular: self
                .singular
                .iter()
                .map(|(l, k)| (l.pull_back(map), *k))
                .collect(),
            kinks: self.kinks.iter().map(|l| l.pull_back(map)).collect(),
        }
    }

    /// Hints for the region `map(shape)` expressed in reference coordinates.
    pub fn region_hints(&self, shape: Shape, map: &Affine2) -> RegionHints {
        let mut out = RegionHints::default();
        if self.is_empty() {
            return out;
        }
        let rv = shape.ref_vertices();
        let n = rv.len();
        let pv: Vec<Point2> = rv.iter().map(|&v| map.apply(v)).collect();
        let scale = (0..n)
            .map(|k| norm(sub(pv[(k + 1) % n], pv[k])))
            .fold(0.0, f64::max);
        let scale = scale.max(1e-300) + pv.iter().map(|p| norm(*p)).fold(0.0, f64::max) * 1e-3;
        for (line, kind) in &self.singular {
            let on: Vec<bool> = pv.iter().map(|&p| line.contains(p, scale)).collect();
            let edge_on: Vec<bool> = (0..n).map(|k| on[k] && on[(k + 1) % n]).collect();
            for k in 0..n {
                if edge_on[k] {
                    out.edge[k] = out.edge[k].max(kind.grading());
                }
                let prev = (k + n - 1) % n;
                if on[k] && !edge_on[k] && !edge_on[prev] {
                    out.vertex[k] = out.vertex[k].max(kind.grading());
                }
            }
        }
        for line in &self.kinks {
            let rl = line.pull_back(map);
            let nn = norm(rl.normal);
            let c = dot(rl.normal, rl.point);
            if rl.normal[0].abs() <= 1e-12 * nn {
                let y = c / rl.normal[1];
                if y > 0.0 && y < 1.0 {
                    out.x2_breaks.push(y);
                }
            } else if rl.normal[1].abs() <= 1e-12 * nn {
                let x = c / rl.normal[0];
                if x > 0.0 && x < 1.0 {
                    out.x1_breaks.push(x);
                }
            }
        }
        out
    }

    /// Gradings at the two ends of the segment `p0 → p1` and the kink
    /// parameters in (0, 1).
    pub fn segment_hints(&self, p0: Point2, p1: Point2) -> (EndGrading, EndGrading, Vec<f64>) {
        let (mut lo, mut hi) = (EndGrading::None, EndGrading::None);
        let mut breaks = Vec::new();
        let d = sub(p1, p0);
        let scale = norm(d) + (norm(p0) + norm(p1)) * 1e-3;
        for (line, kind) in &self.singular {
            let (a, b) = (line.contains(p0, scale), line.contains(p1, scale));
            if a && !b {
                lo = lo.max(kind.grading());
            } else if b && !a {
                hi = hi.max(kind.grading());
            }
        }
        for line in &self.kinks {
            let den = dot(line.normal, d);
            if den != 0.0 {
                let t = dot(line.normal, sub(line.point, p0)) / den;
                if t > 0.0 && t < 1.0 {
                    breaks.push(t);
                }
            }
        }
        (lo, hi, breaks)
    }
}

#[derive(Clone)]
pub struct ScalarField {
    f: ScalarFn,
    pub label: String,
    pub hints: Hints,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .finish()
    }
}

impl ScalarField {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(Point2) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            f: Arc::new(f),
            label: label.into(),
            hints: Hints::default(),
        }
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(format!("const({c})"), move |_| c)
    }

    pub fn with_singularity(mut self, line: Line, kind: SingularKind) -> Self {
        self.hints.singular.push((line, kind));
        self
    }

    pub fn with_kink(mut self, line: Line) -> Self {
        self.hints.kinks.push(line);
        self
    }

    pub fn with_hints(mut self, hints: Hints) -> Self {
        self.hints = hints;
        self
    }

    #[inline]
    pub fn eval(&self, x: Point2) -> f64 {
        (self.f)(x)
    }

    pub fn function(&self) -> &ScalarFn {
        &self.f
    }

    /// `x̂ ↦ c·g(map(x̂))`.
    pub fn compose(&self, map: &Affine2, c: f64) -> ScalarField {
        let f = self.f.clone();
        let m = *map;
        ScalarField {
            f: Arc::new(move |x| c * f(m.apply(x))),
            label: self.label.clone(),
            hints: self.hints.pull_back(map),
        }
    }
}

#[derive(Clone)]
pub struct VectorField {
    u: VectorFn,
    div: Option<ScalarFn>,
    pub label: String,
    /// Sobolev regularity index, informational only.
    pub regularity: Option<f64>,
    pub hints: Hints,
    /// Sharper hints for the individual components; `hints` covers both.
    component_hints: Option<[Hints; 2]>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .finish()
    }
}

impl VectorField {
    pub fn new(
        label: impl Into<String>,
        u: impl Fn(Point2) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        VectorField {
            u: Arc::new(u),
            div: None,
            label: label.into(),
            regularity: None,
            hints: Hints::default(),
            component_hints: None,
        }
    }

    pub fn with_divergence(mut self, d: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        self.div = Some(Arc::new(d));
        self
    }

    pub fn with_regularity(mut self, s: f64) -> Self {
        self.regularity = Some(s);
        self
    }

    pub fn with_singularity(mut self, line: Line, kind: SingularKind) -> Self {
        self.hints.singular.push((line, kind));
        self
    }

    pub fn with_kink(mut self, line: Line) -> Self {
        self.hints.kinks.push(line);
        self
    }

    /// Separate hints per component. The field-wide hints become their union.
    pub fn with_component_hints(mut self, h1: Hints, h2: Hints) -> Self {
        self.hints = h1.merge(&h2);
        self.component_hints = Some([h1, h2]);
        self
    }

    pub fn component_hints(&self, l: usize) -> &Hints {
        match &self.component_hints {
            Some(h) => &h[l],
            None => &self.hints,
        }
    }

    #[inline]
    pub fn eval(&self, x: Point2) -> [f64; 2] {
        (self.u)(x)
    }

    pub fn has_divergence(&self) -> bool {
        self.div.is_some()
    }

    pub fn divergence(&self) -> Option<ScalarField> {
        self.div.as_ref().map(|d| ScalarField {
            f: d.clone(),
            label: format!("div {}", self.label),
            hints: self.hints.clone(),
        })
    }

    pub fn component(&self, l: usize) -> ScalarField {
        let u = self.u.clone();
        ScalarField {
            f: Arc::new(move |x| u(x)[l]),
            label: format!("{}[{}]", self.label, l + 1),
            hints: self.component_hints(l).clone(),
        }
    }

    /// Contravariant pull-back `û(x̂) = |det A| A⁻¹ u(A x̂ + b)`, the inverse of
    /// the Piola push-forward used for RT0 elements.
    pub fn piola_pull_back(&self, map: &Affine2) -> VectorField {
        let u = self.u.clone();
        let m = *map;
        let d = m.det();
        let ad = d.abs();
        let inv = [
            [m.a[1][1] / d, -m.a[0][1] / d],
            [-m.a[1][0] / d, m.a[0][0] / d],
        ];
        let pulled = move |x: Point2| {
            let v = u(m.apply(x));
            [
                ad * (inv[0][0] * v[0] + inv[0][1] * v[1]),
                ad * (inv[1][0] * v[0] + inv[1][1] * v[1]),
            ]
        };
        let div = self
            .div
            .clone()
            .map(|dv| -> ScalarFn { Arc::new(move |x| ad * dv(m.apply(x))) });
        VectorField {
            u: Arc::new(pulled),
            div,
            label: self.label.clone(),
            regularity: self.regularity,
            hints: self.hints.pull_back(map),
            component_hints: self.mapped_component_hints(map),
        }
    }

    /// Piola push-forward by `map`, the inverse of `piola_pull_back`.
    pub fn piola_push_forward(&self, map: &Affine2) -> VectorField {
        let u = self.u.clone();
        let m = *map;
        let ad = m.det().abs();
        let pushed = move |x: Point2| {
            let v = u(m.inverse_apply(x));
            let w = m.linear(v);
            [w[0] / ad, w[1] / ad]
        };
        let div = self
            .div
            .clone()
            .map(|dv| -> ScalarFn { Arc::new(move |x| dv(m.inverse_apply(x)) / ad) });
        let inv = inverse_map(map);
        VectorField {
            u: Arc::new(pushed),
            div,
            label: self.label.clone(),
            regularity: self.regularity,
            hints: self.hints.pull_back(&inv),
            component_hints: self.mapped_component_hints(&inv),
        }
    }

    pub fn sum(&self, other: &VectorField, c: f64) -> VectorField {
        let (u, v) = (self.u.clone(), other.u.clone());
        let div = match (&self.div, &other.div) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.clone(), b.clone());
                Some(Arc::new(move |x| a(x) + c * b(x)) as ScalarFn)
            }
            _ => None,
        };
        VectorField {
            u: Arc::new(move |x| {
                let (p, q) = (u(x), v(x));
                [p[0] + c * q[0], p[1] + c * q[1]]
            }),
            div,
            label: format!("{}+{}*{}", self.label, c, other.label),
            regularity: None,
            hints: self.hints.merge(&other.hints),
            component_hints: match (&self.component_hints, &other.component_hints) {
                (None, None) => None,
                _ => Some([0, 1].map(|l| self.component_hints(l).merge(other.component_hints(l)))),
            },
        }
    }

    // Components only stay separate under maps that do not mix them.
    fn mapped_component_hints(&self, map: &Affine2) -> Option<[Hints; 2]> {
        let h = self.component_hints.as_ref()?;
        map.is_diagonal()
            .then(|| [h[0].pull_back(map), h[1].pull_back(map)])
    }
}

fn inverse_map(m: &Affine2) -> Affine2 {
    let d = m.det();
    let a = [
        [m.a[1][1] / d, -m.a[0][1] / d],
        [-m.a[1][0] / d, m.a[0][0] / d],
    ];
    let b = [
        -(a[0][0] * m.b[0] + a[0][1] * m.b[1]),
        -(a[1][0] * m.b[0] + a[1][1] * m.b[1]),
    ];
    Affine2 { a, b }
}

/// Built-in field families.
pub mod families {
    use super::*;

    /// `(a, b) + c(x₁, x₂)`, an RT0 member on any affine hybrid mesh.
    pub fn rt0_member(a: f64, b: f64, c: f64) -> VectorField {
        VectorField::new(format!("rt0({a},{b},{c})"), move |x| {
            [a + c * x[0], b + c * x[1]]
        })
        .with_divergence(move |_| 2.0 * c)
    }

    /// `(a + c x₁, b + d x₂)`, an RT0 member on axis-aligned rectangle meshes.
    pub fn rt0_rectangle_member(a: f64, b: f64, c: f64, d: f64) -> VectorField {
        VectorField::new(format!("rt0rect({a},{b},{c},{d})"), move |x| {
            [a + c * x[0], b + d * x[1]]
        })
        .with_divergence(move |_| c + d)
    }

    /// `(sin x₁, cos x₂)`.
    pub fn smooth_trig() -> VectorField {
        VectorField::new("trig", |x| [x[0].sin(), x[1].cos()])
            .with_divergence(|x| x[0].cos() - x[1].sin())
            .with_regularity(f64::INFINITY)
    }

    /// Member `k` of a family of shifted trigonometric fields.
    pub fn smooth_trig_shifted(k: usize) -> VectorField {
        let p = 0.7 * k as f64;
        let (w1, w2) = (1.0 + 0.5 * k as f64, 2.0 - 0.25 * k as f64);
        VectorField::new(format!("trig{k}"), move |x| {
            [
                (w1 * x[0] + p).sin() + 0.5 * (w2 * x[1]).cos(),
                (w2 * x[1] - p).cos() + 0.3 * x[0],
            ]
        })
        .with_divergence(move |x| w1 * (w1 * x[0] + p).cos() - w2 * (w2 * x[1] - p).sin())
        .with_regularity(f64::INFINITY)
    }

    /// Stream-function field `curl(sin(2x₁+0.3) sin(3x₂+0.2))`.
    pub fn smooth_divergence_free() -> VectorField {
        VectorField::new("divfree", |x| {
            let (a, b) = (2.0 * x[0] + 0.3, 3.0 * x[1] + 0.2);
            [3.0 * a.sin() * b.cos(), -2.0 * a.cos() * b.sin()]
        })
        .with_divergence(|_| 0.0)
        .with_regularity(f64::INFINITY)
    }

    /// `((1+α) x₂^α, 0)`, divergence free, singular along `x₂ = 0`.
    pub fn edge_singular(alpha: f64) -> VectorField {
        VectorField::new(format!("edge-singular({alpha})"), move |x| {
            [(1.0 + alpha) * x[1].max(0.0).powf(alpha), 0.0]
        })
        .with_divergence(|_| 0.0)
        .with_regularity(alpha + 0.5)
        .with_singularity(Line::horizontal(0.0), SingularKind::Algebraic)
    }

    /// `((1+α) x₂^α, (1+α) x₁^α)`, divergence free, singular along both axes.
    pub fn corner_singular(alpha: f64) -> VectorField {
        VectorField::new(format!("corner-singular({alpha})"), move |x| {
            [
                (1.0 + alpha) * x[1].max(0.0).powf(alpha),
                (1.0 + alpha) * x[0].max(0.0).powf(alpha),
            ]
        })
        .with_divergence(|_| 0.0)
        .with_regularity(alpha + 0.5)
        .with_component_hints(
            Hints::default().with_singularity(Line::horizontal(0.0), SingularKind::Algebraic),
            Hints::default().with_singularity(Line::vertical(0.0), SingularKind::Algebraic),
        )
    }

    /// `x₂^α` as a scalar field.
    pub fn power_x2(alpha: f64, c: f64) -> ScalarField {
        ScalarField::new(format!("{c}*x2^{alpha}"), move |x| {
            c * x[1].max(0.0).powf(alpha)
        })
        .with_singularity(Line::horizontal(0.0), SingularKind::Algebraic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_hints_flag_edges_not_their_vertices() {
        let g = families::power_x2(0.3, 1.0);
        let h = g
            .hints
            .region_hints(Shape::Parallelogram, &Affine2::IDENTITY);
        assert_eq!(h.edge[0], EndGrading::Geometric);
        assert!(h.vertex.iter().all(|v| *v == EndGrading::None));
        let cell = Affine2::diagonal(0.25, 0.25, [0.25, 0.0]);
        let h = g.hints.region_hints(Shape::Triangle, &cell);
        assert_eq!(h.edge[0], EndGrading::Geometric);
        let off = Affine2::diagonal(0.25, 0.25, [0.25, 0.25]);
        assert!(g.hints.region_hints(Shape::Parallelogram, &off).is_smooth());
    }

    #[test]
    fn kinks_become_breaks() {
        let g = ScalarField::new("k", |x| (x[1] - 0.5).abs()).with_kink(Line::horizontal(0.5));
        let m = Affine2::diagonal(2.0, 2.0, [0.0, 0.0]);
        let h = g.hints.region_hints(Shape::Parallelogram, &m);
        assert_eq!(h.x2_breaks, vec![0.25]);
        let (_, _, b) = g.hints.segment_hints([0.0, 0.0], [0.0, 2.0]);
        assert_eq!(b, vec![0.25]);
    }

    #[test]
    fn piola_round_trip() {
        let u = families::smooth_trig();
        let m = Affine2 {
            a: [[0.3, 0.1], [-0.2, 0.5]],
            b: [0.4, -0.1],
        };
        let back = u.piola_pull_back(&m).piola_push_forward(&m);
        for p in [[0.1, 0.2], [0.7, -0.3]] {
            let (a, b) = (u.eval(p), back.eval(p));
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        }
        let d = u.piola_pull_back(&m).divergence().unwrap();
        let x = [0.2, 0.3];
        assert!(
            (d.eval(x) - m.det().abs() * u.divergence().unwrap().eval(m.apply(x))).abs() < 1e-14
        );
    }
}
