//! Discrete `H^{−1/2}` surrogate: the dual norm against continuous piecewise
//! linears on a uniform `2^m` grid of the region, with the `H^{1/2}` inner
//! product `(v, w)₀ + (v, w)_{H^{1/2}}` discretized by quadrature.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};
use rayon::prelude::*;

use super::slobodeckij::{outer_points, overlap};
use crate::error::{Error, Result};
use crate::field::{Hints, ScalarField};
use crate::geom::{norm, Affine2, Point2, Shape};
use crate::integrate::region_integral;
use crate::mesh::{Domain, GradedMesh};
use crate::quadrature::{collapsed_rule, region_rule_panels, tensor_rule, QuadLevel, Rule1d};
use crate::rt::PWConstant;

/// Which piecewise linears are tested against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSpace {
    /// All of `V_m`.
    #[default]
    Full,
    /// Functions vanishing on the boundary of the region.
    ZeroTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DualNormSpec {
    /// Dyadic refinement level of the test space.
    pub m: u32,
    pub space: TestSpace,
}

impl Default for DualNormSpec {
    fn default() -> Self {
        DualNormSpec {
            m: 4,
            space: TestSpace::Full,
        }
    }
}

impl DualNormSpec {
    pub fn new(m: u32) -> Result<Self> {
        let spec = DualNormSpec {
            m,
            space: TestSpace::Full,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_space(mut self, space: TestSpace) -> Self {
        self.space = space;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > 7 {
            return Err(Error::InvalidArgument(format!(
                "dual norm refinement m must lie in 1..=7, got {}",
                self.m
            )));
        }
        Ok(())
    }
}

/// What to measure.
pub enum DualSource<'a> {
    Field(&'a ScalarField),
    PWConstant(&'a PWConstant),
    /// An element-wise function on a mesh covering the region, called with
    /// the element index and a physical point.
    OnMesh {
        mesh: &'a GradedMesh,
        hints: &'a Hints,
        f: &'a (dyn Fn(usize, Point2) -> f64 + Sync),
    },
}

/// Uniform P1 space on the reference shape, split by diagonals parallel to
/// the hypotenuse of T̂.
struct P1Grid {
    shape: Shape,
    n: usize,
    /// Grid node `(i, j)` to unknown index.
    index: Vec<Option<usize>>,
    n_dofs: usize,
}

impl P1Grid {
    fn new(shape: Shape, m: u32, space: TestSpace) -> Self {
        let n = 1usize << m;
        let mut index = vec![None; (n + 1) * (n + 1)];
        let mut k = 0;
        for j in 0..=n {
            for i in 0..=n {
                let inside = match shape {
                    Shape::Parallelogram => true,
                    Shape::Triangle => j <= i,
                };
                let boundary = match shape {
                    Shape::Parallelogram => i == 0 || j == 0 || i == n || j == n,
                    Shape::Triangle => j == 0 || i == n || i == j,
                };
                if inside && !(space == TestSpace::ZeroTrace && boundary) {
                    index[j * (n + 1) + i] = Some(k);
                    k += 1;
                }
            }
        }
        P1Grid {
            shape,
            n,
            index,
            n_dofs: k,
        }
    }

    fn node(&self, i: usize, j: usize) -> Option<usize> {
        self.index[j * (self.n + 1) + i]
    }

    /// Nonzero basis values at a reference point.
    fn eval(&self, y: Point2) -> [(Option<usize>, f64); 3] {
        let n = self.n as f64;
        let (u, v) = (y[0] * n, y[1] * n);
        let i = (u.floor().max(0.0) as usize).min(self.n - 1);
        let j = (v.floor().max(0.0) as usize).min(self.n - 1);
        let (a, b) = (u - i as f64, v - j as f64);
        if a >= b {
            [
                (self.node(i, j), 1.0 - a),
                (self.node(i + 1, j), a - b),
                (self.node(i + 1, j + 1), b),
            ]
        } else {
            [
                (self.node(i, j), 1.0 - b),
                (self.node(i + 1, j + 1), a),
                (self.node(i, j + 1), b - a),
            ]
        }
    }

    /// Grid triangles as images of T̂ with their three nodes.
    fn triangles(&self) -> Vec<(Affine2, [Option<usize>; 3])> {
        let h = 1.0 / self.n as f64;
        let mut out = Vec::new();
        for j in 0..self.n {
            for i in 0..self.n {
                if self.shape == Shape::Triangle && i < j {
                    continue;
                }
                let o = [i as f64 * h, j as f64 * h];
                out.push((
                    Affine2::diagonal(h, h, o),
                    [
                        self.node(i, j),
                        self.node(i + 1, j),
                        self.node(i + 1, j + 1),
                    ],
                ));
                if self.shape == Shape::Parallelogram || i > j {
                    out.push((
                        Affine2::from_columns(o, [h, h], [-h, 0.0]),
                        [
                            self.node(i, j),
                            self.node(i + 1, j + 1),
                            self.node(i, j + 1),
                        ],
                    ));
                }
            }
        }
        out
    }
}

/// The factored Gram matrix of one region and test space, reusable across
/// sources.
pub struct DualNormOperator {
    region: Domain,
    spec: DualNormSpec,
    grid: P1Grid,
    gram: Mat<f64>,
    llt: Llt<f64>,
}

impl std::fmt::Debug for DualNormOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DualNormOperator")
            .field("region", &self.region)
            .field("spec", &self.spec)
            .field("n_dofs", &self.grid.n_dofs)
            .finish()
    }
}

impl DualNormOperator {
    pub fn new(region: &Domain, spec: DualNormSpec) -> Result<Self> {
        spec.validate()?;
        let grid = P1Grid::new(region.shape, spec.m, spec.space);
        let gram = assemble_gram(&grid, region);
        let llt = gram
            .llt(Side::Lower)
            .map_err(|e| Error::Singular(format!("dual norm Gram matrix: {e:?}")))?;
        Ok(DualNormOperator {
            region: *region,
            spec,
            grid,
            gram,
            llt,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.grid.n_dofs
    }

    pub fn gram(&self) -> &Mat<f64> {
        &self.gram
    }

    pub fn spec(&self) -> DualNormSpec {
        self.spec
    }

    /// `(f, φ_i)` over the region.
    pub fn load(&self, src: &DualSource, level: QuadLevel) -> Vec<f64> {
        match src {
            DualSource::Field(g) => self.load_field(g, level),
            DualSource::PWConstant(p) => {
                let f = |k: usize, _x: Point2| p.values[k];
                self.load_on_mesh(&p.mesh, &Hints::default(), &f, level)
            }
            DualSource::OnMesh { mesh, hints, f } => self.load_on_mesh(mesh, hints, *f, level),
        }
    }

    /// `sqrt(Fᵀ G⁻¹ F)`.
    pub fn norm(&self, src: &DualSource, level: QuadLevel) -> f64 {
        let f = self.load(src, level);
        self.norm_of_load(&f)
    }

    pub fn norm_of_load(&self, f: &[f64]) -> f64 {
        let rhs = Mat::from_fn(f.len(), 1, |i, _| f[i]);
        let x = self.llt.solve(&rhs);
        let q: f64 = (0..f.len()).map(|i| f[i] * x[(i, 0)]).sum();
        q.max(0.0).sqrt()
    }

    fn load_field(&self, g: &ScalarField, level: QuadLevel) -> Vec<f64> {
        let rm = &self.region.map;
        let parts: Vec<Vec<(usize, f64)>> = self
            .grid
            .triangles()
            .par_iter()
            .map(|(cell, nodes)| {
                let map = rm.compose(cell);
                let lam: [fn(Point2) -> f64; 3] = [|x| 1.0 - x[0], |x| x[0] - x[1], |x| x[1]];
                nodes
                    .iter()
                    .zip(lam)
                    .filter_map(|(node, l)| {
                        let k = (*node)?;
                        let v = region_integral(Shape::Triangle, &map, &g.hints, level, &|x| {
                            g.eval(x) * l(map.inverse_apply(x))
                        });
                        Some((k, v))
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; self.grid.n_dofs];
        for p in parts {
            for (k, v) in p {
                out[k] += v;
            }
        }
        out
    }

    fn load_on_mesh(
        &self,
        mesh: &GradedMesh,
        hints: &Hints,
        f: &(dyn Fn(usize, Point2) -> f64 + Sync),
        level: QuadLevel,
    ) -> Vec<f64> {
        let rm = self.region.map;
        let cell = norm(rm.column(0)).min(norm(rm.column(1))) / self.grid.n as f64;
        let nd = self.grid.n_dofs;
        // Fixed chunks summed in order keep the result independent of the thread count.
        let ids: Vec<usize> = (0..mesh.n_elements()).collect();
        let parts: Vec<Vec<f64>> = ids
            .par_chunks(16)
            .map(|chunk| {
                let mut acc = vec![0.0; nd];
                for &k in chunk {
                    let el = &mesh.elements[k];
                    let diam = mesh.element_diameter(k);
                    let panels = ((2.0 * diam / cell).ceil() as usize).clamp(1, 4 * self.grid.n);
                    let rh = hints.region_hints(el.shape, &el.map);
                    let ad = el.det.abs();
                    for (x, w) in region_rule_panels(el.shape, &rh, level, panels) {
                        let p = el.map.apply(x);
                        let v = f(k, p) * w * ad;
                        for (node, phi) in self.grid.eval(rm.inverse_apply(p)) {
                            if let Some(i) = node {
                                acc[i] += v * phi;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; nd];
        for p in parts {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }
}

/// Exact P1 mass plus the quadrature Slobodeckij part with `s = 1/2`.
fn assemble_gram(grid: &P1Grid, region: &Domain) -> Mat<f64> {
    let nd = grid.n_dofs;
    let map = &region.map;
    let ad = map.det().abs();
    let mut g = Mat::<f64>::zeros(nd, nd);

    for (cell, nodes) in grid.triangles() {
        let area = 0.5 * cell.det().abs() * ad;
        for a in 0..3 {
            for b in 0..3 {
                if let (Some(i), Some(j)) = (nodes[a], nodes[b]) {
                    g[(i, j)] += area * if a == b { 1.0 / 6.0 } else { 1.0 / 12.0 };
                }
            }
        }
    }

    let n = grid.n;
    let hc = 1.0 / n as f64;
    // Radial panels: geometric in both directions from the grid spacing.
    let mut rp = vec![0.0];
    let mut r = hc * 0.5f64.powi(10);
    while r < 1.0 {
        rp.push(r);
        r *= 2.0;
    }
    rp.push(1.0);
    let rho = Rule1d::composite(&rp, 4);
    let tp: Vec<f64> = (0..=4).map(|k| k as f64 / 4.0).collect();
    let theta = Rule1d::composite(&tp, 4);
    let pts = outer_points(grid.shape, &rho, &theta);
    let expo = -3.0;

    // Dense accumulators per chunk; the chunk count depends only on the sizes,
    // so the summation order does not depend on scheduling.
    let n_chunks = ((1usize << 24) / (nd * nd).max(1)).clamp(1, 16);
    let chunk_len = pts.len().div_ceil(n_chunks).max(1);
    let parts: Vec<Vec<f64>> = pts
        .par_chunks(chunk_len)
        .map(|chunk| {
            let mut acc = vec![0.0; nd * nd];
            for p in chunk {
                let k = norm(map.linear(p.z)).powf(expo);
                if k == 0.0 || !k.is_finite() {
                    continue;
                }
                let Some(om) = overlap(grid.shape, p.z) else {
                    continue;
                };
                let w0 = p.weight * k * om.det().abs();
                for (y, w) in inner_rule(grid.shape, &om, n) {
                    let y = om.apply(y);
                    let a = grid.eval([y[0] + p.z[0], y[1] + p.z[1]]);
                    let b = grid.eval(y);
                    let mut d: [(usize, f64); 6] = [(0, 0.0); 6];
                    let mut len = 0;
                    for (node, v) in a.into_iter().chain(b.into_iter().map(|(i, v)| (i, -v))) {
                        if let Some(i) = node {
                            if let Some(e) = d[..len].iter_mut().find(|e| e.0 == i) {
                                e.1 += v;
                            } else {
                                d[len] = (i, v);
                                len += 1;
                            }
                        }
                    }
                    let ww = w0 * w;
                    for &(i, vi) in &d[..len] {
                        for &(j, vj) in &d[..len] {
                            acc[i * nd + j] += ww * vi * vj;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut semi = vec![0.0; nd * nd];
    for part in parts {
        for (x, y) in semi.iter_mut().zip(part) {
            *x += y;
        }
    }
    let scale = ad * ad;
    for i in 0..nd {
        for j in 0..nd {
            g[(i, j)] += scale * semi[i * nd + j];
        }
    }
    g
}

/// Inner rule on the overlap, in its own reference coordinates.
fn inner_rule(shape: Shape, om: &Affine2, n: usize) -> Vec<(Point2, f64)> {
    let panels = |len: f64| ((len * n as f64).ceil() as usize).max(1);
    let uniform =
        |p: usize| Rule1d::composite(&(0..=p).map(|k| k as f64 / p as f64).collect::<Vec<_>>(), 3);
    let a = uniform(panels(om.a[0][0]));
    let b = uniform(panels(om.a[1][1]));
    match shape {
        Shape::Parallelogram => tensor_rule(&a, &b),
        Shape::Triangle => collapsed_rule(&a, &b),
    }
}

/// One-shot `‖f‖_{H^{−1/2}}` surrogate on `region`.
pub fn discrete_dual_half_norm(
    src: &DualSource,
    region: &Domain,
    spec: DualNormSpec,
    level: QuadLevel,
) -> Result<f64> {
    Ok(DualNormOperator::new(region, spec)?.norm(src, level))
}
