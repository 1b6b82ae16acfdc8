use super::GradedMesh;
use crate::geom::Point2;

/// Uniform bucket grid over the mesh bounding box.
#[derive(Debug)]
pub(crate) struct Locator {
    lo: Point2,
    cell: Point2,
    dims: (usize, usize),
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    pub fn new(mesh: &GradedMesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let side = ((mesh.n_elements() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let dims = (side, side);
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(1e-300),
            ((hi[1] - lo[1]) / side as f64).max(1e-300),
        ];
        let mut buckets = vec![Vec::new(); side * side];
        for (k, el) in mesh.elements.iter().enumerate() {
            let mut a = [f64::INFINITY; 2];
            let mut b = [f64::NEG_INFINITY; 2];
            for &v in el.vertices() {
                for d in 0..2 {
                    a[d] = a[d].min(mesh.vertices[v][d]);
                    b[d] = b[d].max(mesh.vertices[v][d]);
                }
            }
            let (i0, j0) = index(lo, cell, dims, a);
            let (i1, j1) = index(lo, cell, dims, b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * side + i].push(k);
                }
            }
        }
        Locator {
            lo,
            cell,
            dims,
            buckets,
        }
    }

    pub fn locate(&self, mesh: &GradedMesh, x: Point2) -> Option<(usize, Point2)> {
        let (i, j) = index(self.lo, self.cell, self.dims, x);
        let mut best: Option<(usize, Point2, f64)> = None;
        for &k in &self.buckets[j * self.dims.0 + i] {
            let el = &mesh.elements[k];
            let xr = el.map.inverse_apply(x);
            let out = outside(el.shape, xr);
            if out <= 0.0 {
                return Some((k, xr));
            }
            if best.is_none_or(|b| out < b.2) {
                best = Some((k, xr, out));
            }
        }
        best.filter(|b| b.2 <= 1e-10).map(|b| (b.0, b.1))
    }
}

fn index(lo: Point2, cell: Point2, dims: (usize, usize), x: Point2) -> (usize, usize) {
    let i = ((x[0] - lo[0]) / cell[0])
        .floor()
        .clamp(0.0, (dims.0 - 1) as f64) as usize;
    let j = ((x[1] - lo[1]) / cell[1])
        .floor()
        .clamp(0.0, (dims.1 - 1) as f64) as usize;
    (i, j)
}

/// How far a reference point lies outside the reference element (≤ 0 inside).
fn outside(shape: crate::geom::Shape, x: Point2) -> f64 {
    match shape {
        crate::geom::Shape::Triangle => (-x[1]).max(x[0] - 1.0).max(x[1] - x[0]),
        crate::geom::Shape::Parallelogram => (-x[0]).max(-x[1]).max(x[0] - 1.0).max(x[1] - 1.0),
    }
}
