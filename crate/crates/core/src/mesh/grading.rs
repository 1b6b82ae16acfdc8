use crate::error::{Error, Result};

/// Refinement level `N` and grading exponent `β` of a mesh family.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GradingSpec {
    pub n: usize,
    pub beta: f64,
}

impl GradingSpec {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        let s = GradingSpec { n, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidGrading("N must be at least 1".into()));
        }
        if !(self.beta >= 1.0) || !self.beta.is_finite() {
            return Err(Error::InvalidGrading(format!(
                "beta must be >= 1, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Mesh parameter `h = 1/N`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }
}

/// Nodes `(i/N)^β`, `i = 0..=N`.
pub fn grade_points(spec: &GradingSpec) -> Vec<f64> {
    let n = spec.n;
    (0..=n)
        .map(|i| {
            if i == n {
                1.0
            } else {
                (i as f64 / n as f64).powf(spec.beta)
            }
        })
        .collect()
}

/// Consecutive index ranges `[start, end)` of the intervals between `points`
/// whose lengths are comparable to the largest interval.
///
/// Intervals are accumulated from the left until the group reaches the length
/// of the largest interval. The last group always contains the largest
/// interval, so every group length lies in `[ℓ_max, 2ℓ_max)` when lengths are
/// nondecreasing.
pub fn coarse_groups(points: &[f64]) -> Vec<(usize, usize)> {
    let n = points.len().saturating_sub(1);
    let lmax = points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let mut groups = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for i in 0..n {
        acc += points[i + 1] - points[i];
        if acc >= lmax * (1.0 - 1e-12) {
            groups.push((start, i + 1));
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < n {
        match groups.last_mut() {
            Some(g) => g.1 = n,
            None => groups.push((0, n)),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_match_formula() {
        let p = grade_points(&GradingSpec::new(4, 2.0).unwrap());
        assert_eq!(p, vec![0.0, 0.0625, 0.25, 0.5625, 1.0]);
        assert_eq!(
            grade_points(&GradingSpec::new(1, 7.0).unwrap()),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GradingSpec::new(0, 2.0).is_err());
        assert!(GradingSpec::new(3, 0.5).is_err());
        assert!(GradingSpec::new(3, f64::NAN).is_err());
    }

    #[test]
    fn groups_cover_and_balance() {
        for &(n, b) in &[(1, 1.0), (4, 2.0), (16, 2.5), (64, 1.5), (7, 3.0)] {
            let p = grade_points(&GradingSpec::new(n, b).unwrap());
            let g = coarse_groups(&p);
            assert_eq!(g.first().unwrap().0, 0);
            assert_eq!(g.last().unwrap().1, n);
            for w in g.windows(2) {
                assert_eq!(w[0].1, w[1].0);
            }
            let lmax = p[n] - p[n - 1];
            for &(s, e) in &g {
                let len = p[e] - p[s];
                assert!(
                    len >= lmax * (1.0 - 1e-9) && len < 2.0 * lmax,
                    "{n} {b} {len} {lmax}"
                );
            }
        }
    }
}
