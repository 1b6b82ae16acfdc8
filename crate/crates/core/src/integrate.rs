//! Integrals over mapped reference elements.

use crate::field::Hints;
use crate::geom::{Affine2, Point2, Shape};
use crate::quadrature::{region_rule, QuadLevel};

/// An integral at the finer of two levels with the difference between them.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Checked {
    pub value: f64,
    pub error: f64,
}

impl Checked {
    pub fn converged(&self, rel_tol: f64, abs_floor: f64) -> bool {
        self.error <= rel_tol * self.value.abs().max(abs_floor)
    }
}

/// `∫_{map(shape)} f dx`, `f` taking physical points.
pub fn region_integral(
    shape: Shape,
    map: &Affine2,
    hints: &Hints,
    level: QuadLevel,
    f: &dyn Fn(Point2) -> f64,
) -> f64 {
    let rule = region_rule(shape, &hints.region_hints(shape, map), level);
    let s: f64 = rule.iter().map(|(x, w)| w * f(map.apply(*x))).sum();
    s * map.det().abs()
}

pub fn checked_region_integral(
    shape: Shape,
    map: &Affine2,
    hints: &Hints,
    level: QuadLevel,
    f: &dyn Fn(Point2) -> f64,
) -> Checked {
    let a = region_integral(shape, map, hints, level, f);
    let b = region_integral(shape, map, hints, level.next(), f);
    Checked {
        value: b,
        error: (b - a).abs(),
    }
}
