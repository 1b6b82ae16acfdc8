//! Piola scaling identities on `diag(h₁, h₂)·R̂`.

use super::{anisotropic_seminorm, fractional_seminorm, l2_norm};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geom::{Affine2, Shape};
use crate::mesh::Domain;
use crate::quadrature::QuadLevel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingShape {
    Triangle,
    Rectangle,
}

impl ScalingShape {
    fn shape(self) -> Shape {
        match self {
            ScalingShape::Triangle => Shape::Triangle,
            ScalingShape::Rectangle => Shape::Parallelogram,
        }
    }
}

/// Both sides of each identity, with `u₁ = u₂ = g` on the scaled element
/// and `û = |det A| A⁻¹ u ∘ A`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ScalingResiduals {
    pub h1: f64,
    pub h2: f64,
    /// `‖û₁‖²_{0,R̂}` and `(h₂/h₁)‖u₁‖²_{0,R}`.
    pub l2: (f64, f64),
    pub l2_residual: f64,
    /// `|û₂|²_{AH₂^{1/2}(R̂)}` and `h₁|u₂|²_{AH₂^{1/2}(R)}`.
    pub ah2: (f64, f64),
    pub ah2_residual: f64,
    /// `|û₁|²_{H^{1/2}(R̂)}` and `h₁^{−2} h_max³ |u₁|²_{H^{1/2}(R)}`.
    pub h_half: (f64, f64),
    /// `1 − lhs/rhs`; nonnegative when the inequality holds.
    pub h_half_slack: f64,
    pub converged: bool,
}

impl ScalingResiduals {
    pub fn max_equality_residual(&self) -> f64 {
        self.l2_residual.max(self.ah2_residual)
    }

    pub fn inequality_holds(&self) -> bool {
        self.h_half_slack >= 0.0
    }
}

fn residual(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        (lhs / rhs - 1.0).abs()
    }
}

/// Evaluates the three scaling relations used for anisotropic elements.
pub fn piola_scaling_identity_check(
    h1: f64,
    h2: f64,
    g: &ScalarField,
    shape: ScalingShape,
    level: QuadLevel,
) -> Result<ScalingResiduals> {
    if !(h1 > 0.0 && h2 > 0.0 && h1 <= 1.0 && h2 <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "scalings must lie in (0, 1], got ({h1}, {h2})"
        )));
    }
    let sh = shape.shape();
    let map = Affine2::diagonal(h1, h2, [0.0, 0.0]);
    let phys = Domain { shape: sh, map };
    let refd = Domain {
        shape: sh,
        map: Affine2::IDENTITY,
    };
    let u1_hat = g.compose(&map, h2);
    let u2_hat = g.compose(&map, h1);
    let hmax = h1.max(h2);

    let l2_lhs = l2_norm(&u1_hat, &refd, level).value.powi(2);
    let l2_rhs = h2 / h1 * l2_norm(g, &phys, level).value.powi(2);

    let a_ref = anisotropic_seminorm(&u2_hat, &refd, 0.5, 2, level)?;
    let a_phys = anisotropic_seminorm(g, &phys, 0.5, 2, level)?;
    let ah2 = (a_ref.squared(), h1 * a_phys.squared());

    let s_ref = fractional_seminorm(&u1_hat, &refd, 0.5, level)?;
    let s_phys = fractional_seminorm(g, &phys, 0.5, level)?;
    let h_half = (s_ref.squared(), hmax.powi(3) / (h1 * h1) * s_phys.squared());
    let h_half_slack = if h_half.1 > 0.0 {
        1.0 - h_half.0 / h_half.1
    } else if h_half.0 <= 0.0 {
        0.0
    } else {
        -1.0
    };

    Ok(ScalingResiduals {
        h1,
        h2,
        l2: (l2_lhs, l2_rhs),
        l2_residual: residual(l2_lhs, l2_rhs),
        ah2,
        ah2_residual: residual(ah2.0, ah2.1),
        h_half,
        h_half_slack,
        converged: a_ref.converged && a_phys.converged && s_ref.converged && s_phys.converged,
    })
}
