//! Study configuration: a flat TOML subset with bracketed sections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{families, ScalarField, VectorField};
use crate::mesh::{
    build_graded_face_mesh, build_reference_graded_square, build_reference_graded_triangle,
    FaceGeometry, GradedMesh, GradingSpec,
};
use crate::norms::{Branch, ScalingShape};
use crate::quadrature::QuadLevel;
use crate::rt::build_counterexample_field;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    InterpConvergence,
    StabilityRatio,
    Counterexample,
    Infsup,
    QhRate,
    ScalingIdentity,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::InterpConvergence => "interp-convergence",
            StudyKind::StabilityRatio => "stability-ratio",
            StudyKind::Counterexample => "counterexample",
            StudyKind::Infsup => "infsup",
            StudyKind::QhRate => "qh-rate",
            StudyKind::ScalingIdentity => "scaling-identity",
        }
    }
}

/// Built-in field families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `(a, b) + c(x₁, x₂)`.
    Rt0,
    Trig,
    TrigShifted,
    DivergenceFree,
    EdgeSingular,
    CornerSingular,
    Counterexample,
    /// Scalar `c`.
    Constant,
    /// Scalar `c·x₂^α`.
    PowerX2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Square,
    Triangle,
    /// The unit right triangle as a face, split into six graded blocks.
    Face,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub kind: StudyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub family: Family,
    pub alpha: f64,
    pub eps: f64,
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection {
            family: Family::EdgeSingular,
            alpha: 0.3,
            eps: 0.1,
            k: 1,
            a: 1.0,
            b: 0.0,
            c: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub domain: DomainKind,
    pub beta: Vec<f64>,
    pub n: Vec<usize>,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            domain: DomainKind::Face,
            beta: vec![1.0, 2.0],
            n: vec![4, 8, 16, 32],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormSection {
    pub s: f64,
    pub branch: Branch,
    pub dual_m: u32,
}

impl Default for NormSection {
    fn default() -> Self {
        NormSection {
            s: 0.5,
            branch: Branch::LowRegularity,
            dual_m: 4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    /// Coarser of the two levels every checked quantity is computed at.
    pub level: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleSection {
    pub eps: Vec<f64>,
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        CounterexampleSection {
            eps: vec![0.5, 0.2, 0.1, 0.05],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub shape: ScalingShape,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection {
            shape: ScalingShape::Triangle,
            h1: vec![0.5, 0.25],
            h2: vec![0.125, 0.0625],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudySection,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub norm: NormSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub counterexample: CounterexampleSection,
    #[serde(default)]
    pub scaling: ScalingSection,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl StudyConfig {
    /// Defaults for `kind`, as a starting point for programmatic use.
    pub fn new(kind: StudyKind) -> Self {
        StudyConfig {
            study: StudySection {
                kind,
                out: None,
                plot: None,
            },
            field: FieldSection::default(),
            mesh: MeshSection::default(),
            norm: NormSection::default(),
            quadrature: QuadratureSection::default(),
            counterexample: CounterexampleSection::default(),
            scaling: ScalingSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: StudyConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The configuration as TOML, used for the CSV header echo.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn level(&self) -> QuadLevel {
        QuadLevel(self.quadrature.level)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.mesh;
        if m.n.is_empty() {
            return Err(bad("mesh.n", "empty"));
        }
        if m.n[0] == 0 {
            return Err(bad("mesh.n", "entries must be positive"));
        }
        if m.n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad(
                "mesh.n",
                format!("must be strictly increasing, got {:?}", m.n),
            ));
        }
        if m.beta.is_empty() {
            return Err(bad("mesh.beta", "empty"));
        }
        if let Some(b) = m.beta.iter().find(|b| !(**b >= 1.0 && **b < 3.0)) {
            return Err(bad("mesh.beta", format!("{b} outside [1, 3)")));
        }
        let s = self.norm.s;
        if !(s > 0.0 && s < 1.0) {
            return Err(bad("norm.s", format!("{s} outside (0, 1)")));
        }
        if !(1..=7).contains(&self.norm.dual_m) {
            return Err(bad(
                "norm.dual_m",
                format!("{} outside 1..=7", self.norm.dual_m),
            ));
        }
        if self.quadrature.level > 3 {
            return Err(bad(
                "quadrature.level",
                format!("{} above 3", self.quadrature.level),
            ));
        }
        let f = &self.field;
        if !(f.alpha > 0.0 && f.alpha < 1.0) {
            return Err(bad("field.alpha", format!("{} outside (0, 1)", f.alpha)));
        }
        if !(f.eps > 0.0) {
            return Err(bad("field.eps", "must be positive"));
        }
        if self.counterexample.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(bad("counterexample.eps", "entries must be positive"));
        }
        let sc = &self.scaling;
        if sc.h1.len() != sc.h2.len() {
            return Err(bad(
                "scaling.h2",
                format!("{} entries for {} in scaling.h1", sc.h2.len(), sc.h1.len()),
            ));
        }
        if let Some(h) = sc
            .h1
            .iter()
            .chain(&sc.h2)
            .find(|h| !(**h > 0.0 && **h <= 1.0))
        {
            return Err(bad("scaling.h1/h2", format!("{h} outside (0, 1]")));
        }
        match self.study.kind {
            StudyKind::ScalingIdentity => {
                self.scalar_field()?;
            }
            StudyKind::Counterexample => {}
            _ => {
                self.vector_field()?;
            }
        }
        Ok(())
    }

    pub fn vector_field(&self) -> Result<VectorField> {
        let f = &self.field;
        Ok(match f.family {
            Family::Rt0 => families::rt0_member(f.a, f.b, f.c),
            Family::Trig => families::smooth_trig(),
            Family::TrigShifted => families::smooth_trig_shifted(f.k),
            Family::DivergenceFree => families::smooth_divergence_free(),
            Family::EdgeSingular => families::edge_singular(f.alpha),
            Family::CornerSingular => families::corner_singular(f.alpha),
            Family::Counterexample => build_counterexample_field(f.eps)?,
            Family::Constant | Family::PowerX2 => {
                return Err(bad(
                    "field.family",
                    "a scalar family where a vector field is needed",
                ))
            }
        })
    }

    pub fn scalar_field(&self) -> Result<ScalarField> {
        let f = &self.field;
        Ok(match f.family {
            Family::Constant => ScalarField::constant(f.c),
            Family::PowerX2 => families::power_x2(f.alpha, f.c),
            _ => {
                return Err(bad(
                    "field.family",
                    "a vector family where a scalar field is needed",
                ))
            }
        })
    }

    pub fn build_mesh(&self, beta: f64, n: usize) -> Result<GradedMesh> {
        let spec = GradingSpec::new(n, beta)?;
        match self.mesh.domain {
            DomainKind::Square => build_reference_graded_square(&spec),
            DomainKind::Triangle => build_reference_graded_triangle(&spec),
            DomainKind::Face => build_graded_face_mesh(&FaceGeometry::unit_right_triangle(), &spec),
        }
    }

    /// `(β, N)` pairs in canonical order: β outer, N inner.
    pub fn grid(&self) -> Vec<(f64, usize)> {
        self.mesh
            .beta
            .iter()
            .flat_map(|&b| self.mesh.n.iter().map(move |&n| (b, n)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let c = StudyConfig::parse(
            "[study]\nkind = \"infsup\"\n\n[mesh]\nbeta = [1.0, 2.5]\nn = [2, 4, 8]\n",
        )
        .unwrap();
        assert_eq!(c.study.kind, StudyKind::Infsup);
        assert_eq!(c.grid().len(), 6);
        assert_eq!(c.norm.s, 0.5);
        let again = StudyConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn errors_name_the_offending_field() {
        let cases = [
            ("[study]\nkind = \"infsup\"\n[mesh]\nn = [4, 4]\n", "mesh.n"),
            (
                "[study]\nkind = \"infsup\"\n[mesh]\nbeta = [3.0]\n",
                "mesh.beta",
            ),
            ("[study]\nkind = \"infsup\"\n[norm]\ns = 1.5\n", "norm.s"),
            ("[study]\nkind = \"infsup\"\n[mesh]\nbogus = 1\n", "bogus"),
            ("[study]\nkind = \"nothing\"\n", "nothing"),
            (
                "[study]\nkind = \"scaling-identity\"\n[field]\nfamily = \"trig\"\n",
                "field.family",
            ),
        ];
        for (text, key) in cases {
            match StudyConfig::parse(text) {
                Err(Error::Config(m)) => assert!(m.contains(key), "{m}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
