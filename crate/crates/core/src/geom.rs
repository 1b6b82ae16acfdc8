//! Small fixed-size vector helpers and affine maps of the plane.

pub type Point2 = [f64; 2];
pub type Point3 = [f64; 3];

#[inline]
pub fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point2, b: Point2) -> Point2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point2, t: f64) -> Point2 {
    [a[0] * t, a[1] * t]
}

#[inline]
pub fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point2, b: Point2) -> f64 {
    norm(sub(a, b))
}

pub fn lerp(a: Point2, b: Point2, t: f64) -> Point2 {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

pub fn sub3(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot3(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: Point3) -> f64 {
    dot3(a, a).sqrt()
}

/// `x = A x̂ + b`, with `a[row][col]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine2 {
    pub a: [[f64; 2]; 2],
    pub b: Point2,
}

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2 {
        a: [[1.0, 0.0], [0.0, 1.0]],
        b: [0.0, 0.0],
    };

    pub fn diagonal(h1: f64, h2: f64, offset: Point2) -> Self {
        Affine2 {
            a: [[h1, 0.0], [0.0, h2]],
            b: offset,
        }
    }

    /// Map sending the origin to `origin` and the unit vectors to `c1`, `c2` (as columns).
    pub fn from_columns(origin: Point2, c1: Point2, c2: Point2) -> Self {
        Affine2 {
            a: [[c1[0], c2[0]], [c1[1], c2[1]]],
            b: origin,
        }
    }

    #[inline]
    pub fn linear(&self, v: Point2) -> Point2 {
        [
            self.a[0][0] * v[0] + self.a[0][1] * v[1],
            self.a[1][0] * v[0] + self.a[1][1] * v[1],
        ]
    }

    #[inline]
    pub fn apply(&self, x: Point2) -> Point2 {
        add(self.linear(x), self.b)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn inverse_apply(&self, y: Point2) -> Point2 {
        let d = self.det();
        let r = sub(y, self.b);
        [
            (self.a[1][1] * r[0] - self.a[0][1] * r[1]) / d,
            (-self.a[1][0] * r[0] + self.a[0][0] * r[1]) / d,
        ]
    }

    /// `Aᵀ v`, used to pull a line normal back to reference coordinates.
    pub fn transpose_linear(&self, v: Point2) -> Point2 {
        [
            self.a[0][0] * v[0] + self.a[1][0] * v[1],
            self.a[0][1] * v[0] + self.a[1][1] * v[1],
        ]
    }

    pub fn column(&self, j: usize) -> Point2 {
        [self.a[0][j], self.a[1][j]]
    }

    pub fn is_diagonal(&self) -> bool {
        let s = self.a[0][0].abs().max(self.a[1][1].abs());
        self.a[0][1].abs() <= 1e-14 * s && self.a[1][0].abs() <= 1e-14 * s
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine2) -> Affine2 {
        let c1 = self.linear(inner.column(0));
        let c2 = self.linear(inner.column(1));
        Affine2::from_columns(self.apply(inner.b), c1, c2)
    }
}

/// Reference shape of an element: `Triangle` is T̂ = {0 < x₂ < x₁ < 1}, `Parallelogram` is Q̂ = (0,1)².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Shape {
    Triangle,
    Parallelogram,
}

impl Shape {
    pub fn ref_vertices(self) -> &'static [Point2] {
        match self {
            Shape::Triangle => &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
            Shape::Parallelogram => &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    pub fn n_vertices(self) -> usize {
        match self {
            Shape::Triangle => 3,
            Shape::Parallelogram => 4,
        }
    }

    pub fn ref_area(self) -> f64 {
        match self {
            Shape::Triangle => 0.5,
            Shape::Parallelogram => 1.0,
        }
    }

    pub fn contains_ref(self, x: Point2, tol: f64) -> bool {
        match self {
            Shape::Triangle => x[1] >= -tol && x[0] <= 1.0 + tol && x[1] <= x[0] + tol,
            Shape::Parallelogram => {
                x[0] >= -tol && x[0] <= 1.0 + tol && x[1] >= -tol && x[1] <= 1.0 + tol
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Triangle => "triangle",
            Shape::Parallelogram => "parallelogram",
        }
    }
}
