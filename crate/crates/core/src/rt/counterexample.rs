use crate::error::{Error, Result};
use crate::field::{Line, SingularKind, VectorField};

/// `r*(ε) = e·exp(−exp(1/ε))`, below which `w^ε ≡ 1`. Underflows to 0 for
/// ε below about 0.14.
pub fn kink_radius(eps: f64) -> f64 {
    std::f64::consts::E * (-(1.0 / eps).exp()).exp()
}

/// `w^ε(t) = min{1, ε log log(e/t)}`.
pub fn counterexample_w(eps: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let inner = 1.0 - t.ln();
    if inner <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (eps * inner.ln()).min(1.0)
}

/// Derivative of `w^ε`; zero below the kink radius.
pub fn counterexample_dw(eps: f64, t: f64) -> f64 {
    if t <= kink_radius(eps) || t <= 0.0 {
        return 0.0;
    }
    -eps / (t * (1.0 - t.ln()))
}

/// `u^ε(x) = ((1 − x₁) ∂₂w^ε(x₂), w^ε(x₂))`, divergence free.
pub fn build_counterexample_field(eps: f64) -> Result<VectorField> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let r = kink_radius(eps);
    let mut u = VectorField::new(format!("counterexample({eps})"), move |x| {
        [
            (1.0 - x[0]) * counterexample_dw(eps, x[1]),
            counterexample_w(eps, x[1]),
        ]
    })
    .with_divergence(|_| 0.0)
    .with_singularity(Line::horizontal(0.0), SingularKind::LogLog);
    if r > 0.0 {
        u = u.with_kink(Line::horizontal(r));
    }
    Ok(u)
}
