//! Runs a study from a TOML file (default: configs/infsup.toml) and prints the CSV.

use graded_rt::study::{run_study, StudyConfig};

fn main() -> graded_rt::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/infsup.toml").into());
    let cfg = StudyConfig::from_file(path.as_ref())?;
    let out = run_study(&cfg)?;
    print!("{}", out.to_csv()?);
    for line in &out.summary {
        eprintln!("{line}");
    }
    Ok(())
}
