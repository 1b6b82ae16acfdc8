use crate::error::{Error, Result};

/// Fits below this coefficient of determination are flagged.
pub const R2_FLAG: f64 = 0.95;

/// Least-squares fit `e ≈ c·h^p` on log-log data.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub coefficient: f64,
    pub r_squared: f64,
    pub flagged: bool,
}

pub fn fit_rate(h: &[f64], e: &[f64]) -> Result<RateFit> {
    if h.len() != e.len() {
        return Err(Error::InvalidArgument(format!(
            "{} abscissae for {} values",
            h.len(),
            e.len()
        )));
    }
    if h.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a rate fit needs at least 3 points, got {}",
            h.len()
        )));
    }
    if let Some(v) = h.iter().chain(e).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rate fits need positive finite data, got {v}"
        )));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "rate fit abscissae are all equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(RateFit {
        slope,
        coefficient: (my - slope * mx).exp(),
        r_squared,
        flagged: r_squared < R2_FLAG,
    })
}

/// Pairwise orders `ln(e_i/e_{i+1}) / ln(h_i/h_{i+1})`.
pub fn eoc(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}
