use crate::geom::{Point2, Shape};

/// Local RT0 basis on Q̂ or T̂. Function `k` has unit outward flux through
/// reference edge `k` and zero flux through the others.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RTLocalBasis {
    pub shape: Shape,
}

impl RTLocalBasis {
    pub fn new(shape: Shape) -> Self {
        RTLocalBasis { shape }
    }

    pub fn len(&self) -> usize {
        self.shape.n_vertices()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn eval(&self, k: usize, x: Point2) -> Point2 {
        ref_basis(self.shape, k, x)
    }

    /// `dof[i][j]`: outward flux of basis function `j` through edge `i`.
    pub fn dof_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let v = self.shape.ref_vertices();
        let g = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        (0..n)
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                let nrm = ref_normal(self.shape, i);
                let len = ref_edge_length(self.shape, i);
                (0..n)
                    .map(|j| {
                        g.iter()
                            .map(|&t| {
                                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                                let f = self.eval(j, p);
                                0.5 * len * (f[0] * nrm[0] + f[1] * nrm[1])
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Reference basis: on Q̂ `(0,x₂−1), (x₁,0), (0,x₂), (x₁−1,0)`; on T̂
/// `(x₁−1,x₂−1), (x₁,x₂), (x₁−1,x₂)`.
#[inline]
pub fn ref_basis(shape: Shape, k: usize, x: Point2) -> Point2 {
    match (shape, k) {
        (Shape::Parallelogram, 0) => [0.0, x[1] - 1.0],
        (Shape::Parallelogram, 1) => [x[0], 0.0],
        (Shape::Parallelogram, 2) => [0.0, x[1]],
        (Shape::Parallelogram, 3) => [x[0] - 1.0, 0.0],
        (Shape::Triangle, 0) => [x[0] - 1.0, x[1] - 1.0],
        (Shape::Triangle, 1) => [x[0], x[1]],
        (Shape::Triangle, 2) => [x[0] - 1.0, x[1]],
        _ => panic!("no basis function {k} on {shape:?}"),
    }
}

/// Unit outward normal of reference edge `k`.
pub fn ref_normal(shape: Shape, k: usize) -> Point2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match (shape, k) {
        (_, 0) => [0.0, -1.0],
        (_, 1) => [1.0, 0.0],
        (Shape::Parallelogram, 2) => [0.0, 1.0],
        (Shape::Parallelogram, 3) => [-1.0, 0.0],
        (Shape::Triangle, 2) => [-s, s],
        _ => panic!("no edge {k} on {shape:?}"),
    }
}

pub fn ref_edge_length(shape: Shape, k: usize) -> f64 {
    match (shape, k) {
        (Shape::Triangle, 2) => std::f64::consts::SQRT_2,
        _ => 1.0,
    }
}
