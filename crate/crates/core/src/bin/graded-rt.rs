use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graded_rt::mesh::mesh_quality_report;
use graded_rt::study::{run_study, DomainKind, Family, StudyConfig, StudyKind};
use graded_rt::Error;

#[derive(Parser)]
#[command(
    name = "graded-rt",
    version,
    about = "RT0 interpolation and Q_h studies on beta-graded meshes"
)]
struct Cli {
    /// Study configuration (TOML sections, key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Coarser quadrature level, overriding the config.
    #[arg(long, global = true)]
    quad_level: Option<u32>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct GridArgs {
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
    /// Comma-separated grading exponents.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Comma-separated refinement levels.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
}

#[derive(Args, Clone, Default)]
struct FieldArgs {
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a graded mesh and print its quality report.
    Mesh {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// L² interpolation errors and rates.
    Interp {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Run the study described by --config.
    Study {
        /// Also write a log-log SVG plot.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Counterexample ratios over a list of ε.
    Counterexample {
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Discrete inf-sup constants.
    Infsup {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Q_h error table and ratio slope.
    Qh {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        /// Refinement level of the dual-norm test space.
        #[arg(long)]
        dual_m: Option<u32>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum DomainArg {
    Square,
    Triangle,
    Face,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FamilyArg {
    Trig,
    TrigShifted,
    DivergenceFree,
    EdgeSingular,
    CornerSingular,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_QUADRATURE: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidGrading(_)
        | Error::InvalidArgument(_)
        | Error::DegenerateFace(_) => EXIT_CONFIG,
        Error::QuadratureNonConvergence(_) => EXIT_QUADRATURE,
        _ => 1,
    }
}

fn load_config(cli: &Cli, kind: StudyKind) -> Result<StudyConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => StudyConfig::from_file(p)?,
        None => StudyConfig::new(kind),
    };
    cfg.study.kind = kind;
    if let Some(l) = cli.quad_level {
        cfg.quadrature.level = l;
    }
    Ok(cfg)
}

fn apply_grid(cfg: &mut StudyConfig, g: &GridArgs) {
    if let Some(d) = g.domain {
        cfg.mesh.domain = match d {
            DomainArg::Square => DomainKind::Square,
            DomainArg::Triangle => DomainKind::Triangle,
            DomainArg::Face => DomainKind::Face,
        };
    }
    if let Some(b) = &g.beta {
        cfg.mesh.beta = b.clone();
    }
    if let Some(n) = &g.n {
        cfg.mesh.n = n.clone();
    }
}

fn apply_field(cfg: &mut StudyConfig, f: &FieldArgs) {
    if let Some(fam) = f.family {
        cfg.field.family = match fam {
            FamilyArg::Trig => Family::Trig,
            FamilyArg::TrigShifted => Family::TrigShifted,
            FamilyArg::DivergenceFree => Family::DivergenceFree,
            FamilyArg::EdgeSingular => Family::EdgeSingular,
            FamilyArg::CornerSingular => Family::CornerSingular,
        };
    }
    if let Some(a) = f.alpha {
        cfg.field.alpha = a;
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, Error> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let (kind, mut cfg, plot) = match &cli.cmd {
        Cmd::Mesh { grid } => {
            let mut cfg = load_config(cli, StudyKind::Infsup)?;
            apply_grid(&mut cfg, grid);
            cfg.validate()?;
            let (beta, n) = cfg.grid()[0];
            let mesh = cfg.build_mesh(beta, n)?;
            let q = mesh_quality_report(&mesh);
            eprintln!(
                "elements={} edges={} h_max={:.6e} h_min={:.6e} max_aspect={:.6e} conforming={} area={:.15e}",
                q.n_elements, q.n_edges, q.h_max, q.h_min, q.max_aspect, q.conforming, q.area
            );
            write_out(cli.out.as_deref(), &mesh.export_text())?;
            return Ok(0);
        }
        Cmd::Interp { grid, field } => {
            let mut cfg = load_config(cli, StudyKind::InterpConvergence)?;
            apply_grid(&mut cfg, grid);
            apply_field(&mut cfg, field);
            (StudyKind::InterpConvergence, cfg, None)
        }
        Cmd::Study { plot } => {
            if cli.config.is_none() {
                return Err(Error::Config("study: --config is required".into()));
            }
            let cfg = StudyConfig::from_file(cli.config.as_ref().unwrap())?;
            (cfg.study.kind, cfg, plot.clone())
        }
        Cmd::Counterexample { eps } => {
            let mut cfg = load_config(cli, StudyKind::Counterexample)?;
            if let Some(e) = eps {
                cfg.counterexample.eps = e.clone();
            }
            (StudyKind::Counterexample, cfg, None)
        }
        Cmd::Infsup { grid } => {
            let mut cfg = load_config(cli, StudyKind::Infsup)?;
            apply_grid(&mut cfg, grid);
            (StudyKind::Infsup, cfg, None)
        }
        Cmd::Qh {
            grid,
            field,
            dual_m,
        } => {
            let mut cfg = load_config(cli, StudyKind::QhRate)?;
            if cli.config.is_none() {
                cfg.field.family = Family::DivergenceFree;
            }
            apply_grid(&mut cfg, grid);
            apply_field(&mut cfg, field);
            if let Some(m) = dual_m {
                cfg.norm.dual_m = *m;
            }
            (StudyKind::QhRate, cfg, None)
        }
    };
    cfg.study.kind = kind;
    if let Some(l) = cli.quad_level {
        cfg.quadrature.level = l;
    }
    let out = run_study(&cfg)?;
    let csv_path = cli
        .out
        .clone()
        .or_else(|| cfg.study.out.clone().map(PathBuf::from));
    write_out(csv_path.as_deref(), &out.to_csv()?)?;
    let plot_path = plot.or_else(|| cfg.study.plot.clone().map(PathBuf::from));
    if let (Some(p), Some(svg)) = (plot_path, &out.plot) {
        std::fs::write(p, svg)?;
    }
    for line in &out.summary {
        eprintln!("{line}");
    }
    if out.nonconverged > 0 {
        eprintln!(
            "{} quantities did not converge between quadrature levels",
            out.nonconverged
        );
        return Ok(EXIT_QUADRATURE);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
