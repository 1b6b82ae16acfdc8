//! Configuration-driven experiment runner.

mod config;
mod fit;
mod plot;
mod run;

pub use config::{
    CounterexampleSection, DomainKind, Family, FieldSection, MeshSection, NormSection,
    QuadratureSection, ScalingSection, StudyConfig, StudyKind, StudySection,
};
pub use fit::{eoc, fit_rate, RateFit, R2_FLAG};
pub use plot::{loglog_svg, Series};
pub use run::{run_study, StudyOutput};
