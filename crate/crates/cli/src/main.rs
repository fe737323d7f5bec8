use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hpefie_core::efie_system::Excitation;
use hpefie_core::harness::{configure_threads, run_suite, DegreePolicy, StudyConfig, Suite, Thresholds};
use hpefie_core::mesh::Fixture;
use hpefie_core::SurfaceKind;

#[derive(Parser)]
#[command(name = "hpefie", version, about = "Verification suites for hp boundary elements of the EFIE")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one suite and emit its report.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// algebraic | poincare | interpolation | rates | efie-convergence | extinction
    #[arg(long)]
    suite: Suite,
    /// cube | square-screen | L-screen
    #[arg(long, conflicts_with = "mesh")]
    fixture: Option<Fixture>,
    /// Mesh file (vertices and triangles).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// closed | screen; required with --mesh.
    #[arg(long)]
    kind: Option<SurfaceKind>,
    /// Uniform degree or range, e.g. `2`, `0..2`, `0..=3`.
    #[arg(long = "p", conflicts_with_all = ["degrees", "graded"])]
    p: Option<String>,
    /// Per-cell degrees of the base mesh, one per line.
    #[arg(long, conflicts_with = "graded")]
    degrees: Option<PathBuf>,
    /// Degrees graded toward a base-mesh edge, `EDGE:PMIN:PMAX`.
    #[arg(long)]
    graded: Option<String>,
    /// Number of family members (refinement levels 0..L).
    #[arg(long, default_value_t = 1)]
    levels: usize,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Gauss points per direction of the singular panel rules.
    #[arg(long, default_value_t = 6)]
    quad: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory for report.json, rates.csv and matrix.bin.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Highest degree of the exact checks and of the p-family.
    #[arg(long, default_value_t = 4)]
    p_max: usize,
    /// Seeded fields per member in the interpolation suite.
    #[arg(long, default_value_t = 10)]
    samples: usize,
    /// Write the EFIE matrix of the coarsest member to matrix.bin.
    #[arg(long)]
    dump_matrix: bool,
    /// Excitation as JSON, e.g. `{"type":"plane-wave","direction":[0,0,1],"polarization":[1,0,0],"k":1,"amplitude":1}`.
    #[arg(long)]
    excitation: Option<String>,
    /// JSON file overriding entries of the threshold table.
    #[arg(long)]
    thresholds: Option<PathBuf>,
}

fn default_degrees(suite: Suite) -> DegreePolicy {
    match suite {
        Suite::Interpolation => DegreePolicy::Uniform { min: 0, max: 3 },
        Suite::Rates => DegreePolicy::uniform(0),
        Suite::Extinction => DegreePolicy::uniform(1),
        _ => DegreePolicy::Uniform { min: 0, max: 1 },
    }
}

fn config(a: &RunArgs) -> anyhow::Result<StudyConfig> {
    let mut cfg = match (&a.mesh, a.fixture) {
        (Some(path), _) => {
            let Some(kind) = a.kind else { bail!("--kind is required with --mesh") };
            StudyConfig::from_path(path, kind)
        }
        (None, f) => {
            let mut c = StudyConfig::fixture(f.unwrap_or(Fixture::Cube));
            if let Some(kind) = a.kind {
                c.kind = kind;
            }
            c
        }
    };
    cfg.degrees = if let Some(p) = &a.p {
        DegreePolicy::parse_range(p)?
    } else if let Some(path) = &a.degrees {
        DegreePolicy::File { path: path.clone() }
    } else if let Some(g) = &a.graded {
        let v: Vec<usize> =
            g.split(':').map(str::parse).collect::<Result<_, _>>().context("--graded EDGE:PMIN:PMAX")?;
        let [edge, p_min, p_max] = v[..] else { bail!("--graded expects EDGE:PMIN:PMAX") };
        DegreePolicy::Graded { edge, p_min, p_max }
    } else {
        default_degrees(a.suite)
    };
    cfg.levels = a.levels;
    cfg.k = a.k;
    cfg.quad_order = a.quad;
    cfg.seed = a.seed;
    cfg.out_dir = a.out.clone();
    cfg.p_max = a.p_max;
    cfg.samples = a.samples;
    cfg.dump_matrix = a.dump_matrix;
    if let Some(e) = &a.excitation {
        cfg.excitation = Some(serde_json::from_str::<Excitation>(e).context("parsing --excitation")?);
    }
    if let Some(path) = &a.thresholds {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.thresholds = serde_json::from_str::<Thresholds>(&text).context("parsing thresholds")?;
    }
    Ok(cfg)
}

fn run(a: RunArgs) -> anyhow::Result<ExitCode> {
    if let Some(t) = a.threads {
        configure_threads(t)?;
    }
    let cfg = config(&a)?;
    let report = run_suite(&cfg, a.suite)?;
    for c in &report.checks {
        eprintln!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.describe());
    }
    for w in &report.warnings {
        eprintln!("WARN {w}");
    }
    if cfg.out_dir.is_none() {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    if let Some(f) = &report.first_failure {
        eprintln!("suite {} failed: {f}", a.suite.as_str());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Cli { cmd: Cmd::Run(a) } = Cli::parse();
    match run(a) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
