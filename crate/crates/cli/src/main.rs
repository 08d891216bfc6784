use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use scalarflat::elliptic::PreconditionerKind;
use scalarflat::job::{exit_code, execute, BoundarySpec, Grid, JobConfig, Mode};
use scalarflat::meancurv::CoefficientConvention;

/// Scalar-flat conformal factors on the exterior of the unit ball.
///
/// Settings come from `--config` (TOML) and are overridden by flags.
/// Writes report.json, fields.csv and (meancurv) boundary.csv.
///
/// Exit status: 0 success, 2 config or input error, 3 solve failure,
/// 4 a report check failed.
#[derive(Debug, Parser)]
#[command(name = "scalarflat", version)]
struct Args {
    /// dirichlet | meancurv | quotient | oracle | convergence-study
    #[arg(long, value_parser = parse::<Mode>)]
    mode: Option<Mode>,

    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Linear solver relative tolerance [default: 1e-11]
    #[arg(long)]
    tol: Option<f64>,

    /// Linear solver iteration cap [default: 200]
    #[arg(long)]
    max_iter: Option<usize>,

    /// banded-lu | jacobi [default: banded-lu]
    #[arg(long, value_parser = parse_preconditioner)]
    preconditioner: Option<PreconditionerKind>,

    /// Monotone iteration tolerance [default: 1e-10]
    #[arg(long)]
    iteration_tol: Option<f64>,

    /// Monotone iteration cap [default: 500]
    #[arg(long)]
    max_iterations: Option<usize>,

    /// NsxNtheta; Ntheta = 1 is the radial chart [default: 200x64]
    #[arg(long, value_parser = parse::<Grid>)]
    grid: Option<Grid>,

    /// Dimension n >= 3 [default: 3]
    #[arg(long)]
    n_dim: Option<usize>,

    /// flat | conformal:c0,c1,... | axisym:{json} [default: flat]
    #[arg(long)]
    metric: Option<String>,

    /// Boundary data: 0.1 | cos:c0,c1,... | csv:path
    #[arg(long, value_parser = parse::<BoundarySpec>, allow_hyphen_values = true)]
    f: Option<BoundarySpec>,

    /// Exponent in du/deta = f u^beta [default: n/(n-2)]
    #[arg(long)]
    beta: Option<f64>,

    /// Number of lambda samples in [0, 1] [default: 11]
    #[arg(long)]
    lambda_steps: Option<usize>,

    /// transformation-law | dimension-ratio [default: transformation-law]
    #[arg(long, value_parser = parse::<CoefficientConvention>)]
    coefficient_convention: Option<CoefficientConvention>,

    /// meancurv: reduce to R = H = 0 first and prescribe H = f
    #[arg(long)]
    prescribe_target: bool,

    /// quotient: evaluation budget [default: 40]
    #[arg(long)]
    budget: Option<usize>,

    /// convergence-study: radial node counts, e.g. 50,100,200
    #[arg(long, value_delimiter = ',')]
    grids: Option<Vec<usize>>,

    /// dirichlet: write the assembled system as triplets to this file
    #[arg(long)]
    dump_system: Option<PathBuf>,

    /// Output directory [default: out]
    #[arg(long, env = "SCALARFLAT_OUT")]
    out: Option<PathBuf>,
}

fn parse<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr<Err = scalarflat::Error>,
{
    s.parse().map_err(|e: scalarflat::Error| e.root().to_string())
}

fn parse_preconditioner(s: &str) -> Result<PreconditionerKind, String> {
    match s {
        "banded-lu" => Ok(PreconditionerKind::BandedLu),
        "jacobi" => Ok(PreconditionerKind::Jacobi),
        _ => Err(format!("unknown preconditioner {s:?} (expected banded-lu | jacobi)")),
    }
}

fn merge(args: Args) -> scalarflat::Result<JobConfig> {
    let mut c = match &args.config {
        Some(path) => JobConfig::from_file(path)?,
        None => JobConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { c.$field = v; })*
        };
    }
    set!(tol, max_iter, preconditioner, iteration_tol, max_iterations, grid, n_dim, metric, lambda_steps, coefficient_convention);
    if args.mode.is_some() {
        c.mode = args.mode;
    }
    if args.f.is_some() {
        c.f = args.f;
    }
    if args.beta.is_some() {
        c.beta = args.beta;
    }
    if args.dump_system.is_some() {
        c.dump_system = args.dump_system;
    }
    if args.out.is_some() {
        c.out = args.out;
    }
    c.prescribe_target |= args.prescribe_target;
    if let Some(b) = args.budget {
        c.quotient.budget = b;
    }
    if let Some(g) = args.grids {
        c.study.grids = g;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match merge(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let (report, code) = execute(&config, &out);
    match &report.failure {
        Some(f) => match &f.stage {
            Some(stage) => eprintln!("error: {stage}: {}", f.message),
            None => eprintln!("error: {}", f.message),
        },
        None => {
            for (name, _) in report.checks.iter().filter(|(_, ok)| !**ok) {
                eprintln!("check failed: {name}");
            }
        }
    }
    let path = out.join("report.json");
    if path.exists() {
        println!("{}", path.display());
    }
    ExitCode::from(code)
}
