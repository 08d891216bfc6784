//! Job configuration and orchestration: one config in, one report and a set
//! of fields out.
//!
//! Config files are TOML with kebab-case keys; every key has a default
//! except `mode` (see README for the full table).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;

use crate::dirichlet::{lambda_problem, lambda_sweep, mass_from_fit, solve_scalar_flat_dirichlet};
use crate::elliptic::{assemble, PreconditionerKind, SolverOptions};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{metric_from_spec, scalar_curvature, BoundaryField, Chart, MetricField, MetricSpec, ScalarField};
use crate::meancurv::{
    build_sub_super, harmonic_unit, monotone_iterate, prescribe_mean_curvature, rho_threshold,
    solve_boundary_problem, CoefficientConvention, IterationOptions,
};
use crate::oracle::{radial_dirichlet_yamabe, radial_mean_curvature};
use crate::quotient::{estimate_sobolev_quotient, TrialFamily};
use crate::report::{emit_boundary_fields, emit_fields, emit_report, Extrema, Failure, SolveReport, Stopwatch};
use crate::weighted::{decay_fit, FitOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Dirichlet,
    Meancurv,
    Quotient,
    Oracle,
    ConvergenceStudy,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Dirichlet,
        Mode::Meancurv,
        Mode::Quotient,
        Mode::Oracle,
        Mode::ConvergenceStudy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dirichlet => "dirichlet",
            Mode::Meancurv => "meancurv",
            Mode::Quotient => "quotient",
            Mode::Oracle => "oracle",
            Mode::ConvergenceStudy => "convergence-study",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown mode {s:?} (expected dirichlet | meancurv | quotient | oracle | convergence-study)"
                ))
            })
    }
}

/// Boundary data `f`.
///
/// Text forms: `0.1` (constant), `cos:c0,c1,...` for `sum c_k cos(theta)^k`,
/// `csv:path` for per-node values. In TOML a number or an array of numbers
/// may be given directly.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "BoundaryText")]
pub enum BoundarySpec {
    Constant(f64),
    CosSeries(Vec<f64>),
    Csv(PathBuf),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoundaryText {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

impl TryFrom<BoundaryText> for BoundarySpec {
    type Error = Error;

    fn try_from(t: BoundaryText) -> Result<Self> {
        match t {
            BoundaryText::Number(v) => Ok(BoundarySpec::Constant(v)),
            BoundaryText::List(c) => Ok(BoundarySpec::CosSeries(c)),
            BoundaryText::Text(s) => s.parse(),
        }
    }
}

impl FromStr for BoundarySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("f: not a number: {t:?}")))
        };
        if let Some(rest) = s.strip_prefix("cos:") {
            return Ok(BoundarySpec::CosSeries(rest.split(',').map(num).collect::<Result<_>>()?));
        }
        if let Some(rest) = s.strip_prefix("csv:") {
            return Ok(BoundarySpec::Csv(PathBuf::from(rest)));
        }
        num(s).map(BoundarySpec::Constant)
    }
}

impl BoundarySpec {
    pub fn on(&self, chart: &Arc<Chart>) -> Result<BoundaryField> {
        match self {
            BoundarySpec::Constant(v) => Ok(BoundaryField::constant(chart.clone(), *v)),
            BoundarySpec::CosSeries(c) => {
                if c.is_empty() {
                    return Err(Error::Config("f: empty cos series".into()));
                }
                if !chart.is_axisymmetric() && c.iter().skip(1).any(|&v| v != 0.0) {
                    return Err(Error::Config("f: angular terms need an axisymmetric grid (Ntheta > 1)".into()));
                }
                BoundaryField::from_fn(chart.clone(), |t| {
                    c.iter().rev().fold(0.0, |acc, ck| acc * t.cos() + ck)
                })
            }
            BoundarySpec::Csv(path) => crate::report::read_boundary_csv(path, chart),
        }
    }

    fn constant(&self) -> Option<f64> {
        match self {
            BoundarySpec::Constant(v) => Some(*v),
            BoundarySpec::CosSeries(c) if c.iter().skip(1).all(|&v| v == 0.0) => c.first().copied(),
            _ => None,
        }
    }
}

/// Grid size `NsxNtheta`; `Ntheta = 1` selects the radial chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "String")]
pub struct Grid {
    pub ns: usize,
    pub ntheta: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { ns: 200, ntheta: 64 }
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid: expected NsxNtheta, e.g. 200x64, got {s:?}"));
        let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        Ok(Grid {
            ns: a.trim().parse().map_err(|_| bad())?,
            ntheta: b.trim().parse().map_err(|_| bad())?,
        })
    }
}

impl TryFrom<String> for Grid {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.ns, self.ntheta)
    }
}

impl Grid {
    pub fn chart(&self, n: usize) -> Result<Arc<Chart>> {
        if self.ntheta == 1 {
            Chart::radial(n, self.ns)
        } else {
            Chart::axisymmetric(n, self.ns, self.ntheta)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuotientConfig {
    pub family: TrialFamily,
    pub budget: usize,
}

impl Default for QuotientConfig {
    fn default() -> Self {
        QuotientConfig {
            family: TrialFamily::default(),
            budget: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Radial node counts, each the previous doubled.
    pub grids: Vec<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { grids: vec![50, 100, 200] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct JobConfig {
    pub mode: Option<Mode>,
    pub n_dim: usize,
    /// `flat`, `conformal:c0,c1,...` or `axisym:{json}`.
    pub metric: String,
    pub grid: Grid,
    /// Linear solver tolerance (relative residual).
    pub tol: f64,
    /// Linear solver iteration cap.
    pub max_iter: usize,
    pub preconditioner: PreconditionerKind,
    /// Monotone iteration stopping tolerance and cap.
    pub iteration_tol: f64,
    pub max_iterations: usize,
    pub f: Option<BoundarySpec>,
    /// Defaults to `n/(n-2)`.
    pub beta: Option<f64>,
    pub lambda_steps: usize,
    pub coefficient_convention: CoefficientConvention,
    /// Run the full prescribed-mean-curvature pipeline in meancurv mode
    /// instead of solving `du/deta = f u^beta` on the metric as given.
    pub prescribe_target: bool,
    pub out: Option<PathBuf>,
    pub quotient: QuotientConfig,
    pub study: StudyConfig,
    /// Write the assembled Dirichlet system as triplets (dirichlet mode).
    pub dump_system: Option<PathBuf>,
}

impl Default for JobConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        let iteration = IterationOptions::default();
        JobConfig {
            mode: None,
            n_dim: 3,
            metric: "flat".into(),
            grid: Grid::default(),
            tol: solver.tol,
            max_iter: solver.max_iter,
            preconditioner: solver.preconditioner,
            iteration_tol: iteration.tol,
            max_iterations: iteration.max_iter,
            f: None,
            beta: None,
            lambda_steps: 11,
            coefficient_convention: CoefficientConvention::default(),
            prescribe_target: false,
            out: None,
            quotient: QuotientConfig::default(),
            study: StudyConfig::default(),
            dump_system: None,
        }
    }
}

impl JobConfig {
    /// Parses TOML; errors carry the line and column of the offending key.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn metric_spec(&self) -> Result<MetricSpec> {
        self.metric
            .parse()
            .map_err(|e: Error| Error::Config(format!("metric: {}", e.root())))
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(self.n_dim as f64 / (self.n_dim as f64 - 2.0))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            preconditioner: self.preconditioner,
            ..SolverOptions::default()
        }
    }

    pub fn iteration_options(&self) -> IterationOptions {
        IterationOptions {
            tol: self.iteration_tol,
            max_iter: self.max_iterations,
            ..IterationOptions::default()
        }
    }

    pub fn validate(&self) -> Result<Mode> {
        let cfg = |m: String| Err(Error::Config(m));
        let Some(mode) = self.mode else {
            return cfg("mode: required".into());
        };
        if self.n_dim < 3 {
            return cfg(format!("n-dim: must be at least 3, got {}", self.n_dim));
        }
        for (name, v) in [("tol", self.tol), ("iteration-tol", self.iteration_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return cfg(format!("{name}: must be positive, got {v}"));
            }
        }
        if self.max_iter == 0 || self.max_iterations == 0 {
            return cfg("max-iter and max-iterations must be positive".into());
        }
        if self.grid.ns < 3 || self.grid.ntheta == 0 {
            return cfg(format!("grid: too small: {}", self.grid));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return cfg(format!("beta: must be positive, got {b}"));
            }
        }
        self.metric_spec()?;
        match mode {
            Mode::Dirichlet if self.lambda_steps < 2 => {
                return cfg(format!("lambda-steps: need at least 2, got {}", self.lambda_steps));
            }
            Mode::Meancurv if self.f.is_none() => return cfg("f: required in meancurv mode".into()),
            Mode::Meancurv if self.prescribe_target && self.beta.is_some() => {
                return cfg("beta: fixed to n/(n-2) when prescribe-target is set".into());
            }
            Mode::Quotient if self.quotient.budget == 0 => return cfg("quotient.budget: must be positive".into()),
            Mode::ConvergenceStudy => {
                let g = &self.study.grids;
                if g.len() < 2 || g.windows(2).any(|w| w[1] != 2 * w[0]) {
                    return cfg(format!("study.grids: need at least two sizes, each doubling the last, got {g:?}"));
                }
            }
            _ => {}
        }
        if matches!(mode, Mode::Oracle | Mode::ConvergenceStudy) {
            if let Some(f) = &self.f {
                if f.constant().is_none() {
                    return cfg(format!("f: {mode} mode needs constant f"));
                }
            }
            if matches!(self.metric_spec()?, MetricSpec::Axisym(_)) {
                return cfg(format!("metric: {mode} mode needs a flat or conformal metric"));
            }
        }
        Ok(mode)
    }
}

/// Report plus the fields to export.
#[derive(Debug, Clone)]
pub struct JobOutput {
    pub report: SolveReport,
    pub fields: Vec<(String, ScalarField)>,
    pub boundary_fields: Vec<(String, BoundaryField)>,
}

/// A failed job keeps whatever diagnostics were gathered before the error.
#[derive(Debug, Clone)]
pub struct JobFailure {
    pub error: Error,
    pub report: SolveReport,
}

impl fmt::Display for JobFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for JobFailure {}

fn fail(mut report: SolveReport, error: Error) -> JobFailure {
    report.failure = Some(Failure::from(&error));
    JobFailure { error, report }
}

pub fn run_job(config: &JobConfig) -> std::result::Result<JobOutput, JobFailure> {
    let clock = Stopwatch::start();
    let mode_name = config.mode.map_or("unknown", Mode::as_str);
    let mode = config.validate().map_err(|e| fail(SolveReport::new(mode_name), e))?;
    let mut result = match mode {
        Mode::Dirichlet => run_dirichlet(config),
        Mode::Meancurv => run_meancurv(config),
        Mode::Quotient => run_quotient(config),
        Mode::Oracle => run_oracle(config),
        Mode::ConvergenceStudy => run_study(config),
    };
    match &mut result {
        Ok(out) => clock.record(&mut out.report),
        Err(f) => clock.record(&mut f.report),
    }
    result
}

fn plain<T>(mode: Mode, r: Result<T>) -> std::result::Result<T, JobFailure> {
    r.map_err(|e| fail(SolveReport::new(mode.as_str()), e))
}

fn metric(config: &JobConfig) -> Result<MetricField> {
    let chart = config.grid.chart(config.n_dim).stage("grid")?;
    metric_from_spec(chart, &config.metric_spec()?).stage("metric")
}

fn run_dirichlet(config: &JobConfig) -> std::result::Result<JobOutput, JobFailure> {
    let mode = Mode::Dirichlet;
    let g = plain(mode, metric(config))?;
    let opts = config.solver_options();
    if let Some(path) = &config.dump_system {
        plain(mode, dump_dirichlet(&g, path).stage("system dump"))?;
    }
    let sol = plain(mode, solve_scalar_flat_dirichlet(&g, &opts))?;
    let mut report = sol.report;
    let sweep = lambda_sweep(&g, config.lambda_steps, &opts).map_err(|e| fail(report.clone(), e))?;
    report.iterations.insert("lambda samples".into(), sweep.samples.len());
    report.history.insert(
        "lambda sweep min phi".into(),
        sweep.samples.iter().filter_map(|s| s.min_phi).collect(),
    );
    if let Some(m) = sweep.min_over_lambda() {
        report.scalars.insert("min phi over lambda".into(), m);
    }
    report.checks.insert("lambda sweep: min phi > 0".into(), sweep.certified());

    let r = plain(mode, scalar_curvature(&g))?;
    let r_new = plain(mode, scalar_curvature(&sol.metric))?;
    let v = plain(mode, sol.phi.map(|x| x - 1.0))?;
    Ok(JobOutput {
        report,
        fields: vec![
            ("phi".into(), sol.phi),
            ("v".into(), v),
            ("R(g)".into(), r),
            ("R(g~)".into(), r_new),
        ],
        boundary_fields: Vec::new(),
    })
}

fn dump_dirichlet(g: &MetricField, path: &Path) -> Result<()> {
    let r = scalar_curvature(g)?;
    let system = assemble(&lambda_problem(g, &r, 1.0)?)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    system.write_triplets(std::io::BufWriter::new(fs::File::create(path)?))?;
    Ok(())
}

fn run_meancurv(config: &JobConfig) -> std::result::Result<JobOutput, JobFailure> {
    let mode = Mode::Meancurv;
    let g = plain(mode, metric(config))?;
    let spec = config.f.as_ref().expect("validated");
    let f = plain(mode, spec.on(g.chart()).stage("boundary data"))?;
    let (sopts, iopts) = (config.solver_options(), config.iteration_options());
    let beta = config.beta();

    let sol = if config.prescribe_target {
        plain(
            mode,
            prescribe_mean_curvature(&g, &f, config.coefficient_convention, &sopts, &iopts),
        )?
    } else {
        // Stage by stage, so a failure still reports the barrier and rho.
        let mut partial = SolveReport::new(mode.as_str());
        partial.scalars.insert("beta".into(), beta);
        partial.extrema.insert("f".into(), Extrema::of(f.values()));
        let unit = harmonic_unit(&g, &sopts)
            .stage("harmonic barrier")
            .map_err(|e| fail(partial.clone(), e))?;
        partial.extrema.insert("dv_deta".into(), Extrema::of(unit.dv_deta.values()));
        if let Ok(rho) = rho_threshold(&unit.dv_deta, beta) {
            partial.extrema.insert("rho".into(), Extrema::of(rho.values()));
        }
        let pair = build_sub_super(&unit, &f, beta)
            .stage("sub/supersolutions")
            .map_err(|e| fail(partial.clone(), e))?;
        monotone_iterate(&pair, &g, &sopts, &iopts)
            .stage("monotone iteration")
            .map_err(|e| fail(partial, e))?
    };

    let pair = &sol.pair;
    let mut boundary_fields = vec![("f".into(), pair.f.clone()), ("dv_deta".into(), pair.dv_deta.clone())];
    if let Some(rho) = &pair.rho {
        boundary_fields.push(("rho".into(), rho.clone()));
    }
    Ok(JobOutput {
        fields: vec![
            ("u".into(), sol.u),
            ("v".into(), pair.v.clone()),
            ("u_minus".into(), pair.u_minus.clone()),
            ("u_plus".into(), pair.u_plus.clone()),
        ],
        boundary_fields,
        report: sol.report,
    })
}

fn run_quotient(config: &JobConfig) -> std::result::Result<JobOutput, JobFailure> {
    let mode = Mode::Quotient;
    let g = plain(mode, metric(config))?;
    let q = &config.quotient;
    let est = plain(
        mode,
        estimate_sobolev_quotient(&g, &q.family, q.budget).stage("quotient search"),
    )?;
    let mut report = SolveReport::new(mode.as_str());
    report.scalars.insert("q_upper".into(), est.q_upper);
    report.scalars.insert("argmin center".into(), est.argmin.center);
    report.scalars.insert("argmin width".into(), est.argmin.width);
    report.scalars.insert("argmin tilt".into(), est.argmin.tilt);
    report.iterations.insert("evaluations".into(), est.evaluations);
    report.checks.insert("q_upper > 0 (evidence only)".into(), est.positivity_evidence);
    let trial = plain(mode, q.family.trial(&g, &est.argmin))?;
    Ok(JobOutput {
        report,
        fields: vec![("trial".into(), trial)],
        boundary_fields: Vec::new(),
    })
}

fn conformal_coefficients(spec: &MetricSpec) -> Vec<f64> {
    match spec {
        MetricSpec::Conformal { coefficients } => coefficients.clone(),
        _ => vec![1.0],
    }
}

fn oracle_tol(config: &JobConfig) -> f64 {
    config.tol.max(1e-13)
}

fn mean_curvature_oracle(config: &JobConfig, f: f64) -> Result<crate::oracle::RadialMeanCurvature> {
    radial_mean_curvature(f, config.beta(), config.n_dim, oracle_tol(config))?
        .ok_or_else(|| Error::NoRoot(format!("(n-2) a = f (1+a)^beta has no root on the branch through 0 for f = {f}")))
}

fn run_oracle(config: &JobConfig) -> std::result::Result<JobOutput, JobFailure> {
    let mode = Mode::Oracle;
    let chart = plain(mode, config.grid.chart(config.n_dim))?;
    let mut report = SolveReport::new(mode.as_str());
    let spec = plain(mode, config.metric_spec())?;
    if let Some(f) = config.f.as_ref().and_then(BoundarySpec::constant) {
        if !matches!(spec, MetricSpec::Flat) {
            return Err(fail(report, Error::Config("metric: the mean-curvature oracle is for the flat metric".into())));
        }
        let sol = mean_curvature_oracle(config, f).stage("oracle").map_err(|e| fail(report.clone(), e))?;
        report.scalars.insert("a".into(), sol.a);
        report.scalars.insert("u(1)".into(), sol.u_boundary());
        report.scalars.insert("beta".into(), config.beta());
        let u = plain(mode, ScalarField::from_fn(chart, |s, _| sol.u(s)))?;
        return Ok(JobOutput {
            report,
            fields: vec![("u".into(), u)],
            boundary_fields: Vec::new(),
        });
    }
    let u0 = conformal_coefficients(&spec);
    let sol = radial_dirichlet_yamabe(&u0, config.n_dim, oracle_tol(config))
        .stage("oracle")
        .map_err(|e| fail(report.clone(), e))?;
    let phi = plain(mode, ScalarField::from_fn(chart.clone(), |s, _| sol.phi(s)))?;
    let total = plain(
        mode,
        ScalarField::from_fn(chart, |s, _| {
            sol.phi(s) * u0.iter().rev().fold(0.0, |acc, c| acc * s + c) - 1.0
        }),
    )?;
    if let Ok(fit) = decay_fit(&total, &FitOptions::default()) {
        report.mass = mass_from_fit(&fit, config.n_dim, 0.05);
        report.decay_fits.insert("factor-1".into(), fit);
    }
    report.extrema.insert("phi".into(), Extrema::of(phi.values()));
    Ok(JobOutput {
        report,
        fields: vec![("phi".into(), phi)],
        boundary_fields: Vec::new(),
    })
}

/// Radial grid-halving sequence against the oracle. With `f` set the
/// mean-curvature problem on the flat metric is studied, otherwise the
/// Dirichlet problem.
fn run_study(config: &JobConfig) -> std::result::Result<JobOutput, JobFailure> {
    let mode = Mode::ConvergenceStudy;
    let n = config.n_dim;
    let spec = plain(mode, config.metric_spec())?;
    let mut report = SolveReport::new(mode.as_str());
    let f = config.f.as_ref().and_then(BoundarySpec::constant);
    let (sopts, iopts) = (config.solver_options(), config.iteration_options());

    let exact: Box<dyn Fn(f64) -> f64> = match f {
        Some(f) => {
            if !matches!(spec, MetricSpec::Flat) {
                return Err(fail(report, Error::Config("metric: the mean-curvature study is for the flat metric".into())));
            }
            let sol = mean_curvature_oracle(config, f).stage("oracle").map_err(|e| fail(report.clone(), e))?;
            report.scalars.insert("oracle a".into(), sol.a);
            Box::new(move |s| sol.u(s))
        }
        None => {
            let sol = radial_dirichlet_yamabe(&conformal_coefficients(&spec), n, oracle_tol(config))
                .stage("oracle")
                .map_err(|e| fail(report.clone(), e))?;
            Box::new(move |s| sol.phi(s))
        }
    };

    let mut errors = Vec::new();
    let mut hs = Vec::new();
    let mut last = None;
    for &ns in &config.study.grids {
        let solved = (|| -> Result<ScalarField> {
            let chart = Chart::radial(n, ns)?;
            let g = metric_from_spec(chart.clone(), &spec)?;
            let u = match f {
                Some(f) => solve_boundary_problem(&g, &BoundaryField::constant(chart, f), config.beta(), &sopts, &iopts)?.u,
                None => solve_scalar_flat_dirichlet(&g, &sopts)?.phi,
            };
            Ok(u)
        })()
        .map_err(|e| e.in_stage("study solve"));
        let u = solved.map_err(|e| fail(report.clone(), e))?;
        let chart = u.chart().clone();
        let err = chart
            .s()
            .iter()
            .zip(u.values())
            .map(|(&s, &v)| (v - exact(s)).abs())
            .fold(0.0, f64::max);
        errors.push(err);
        hs.push(chart.hs());
        report.history.insert("errors".into(), errors.clone());
        report.history.insert("h".into(), hs.clone());
        last = Some(u);
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let exact_discrete = errors.iter().all(|&e| e <= 1e-10);
    // error ratio of at least 3.2 per halving
    let order_ok = orders.last().is_some_and(|&p| p >= 3.2f64.log2());
    if orders.iter().all(|p| p.is_finite()) {
        report.history.insert("observed order".into(), orders.clone());
    }
    report.checks.insert("second-order convergence".into(), exact_discrete || order_ok);
    let u = last.expect("at least two grids");
    let name = if f.is_some() { "u" } else { "phi" };
    let oracle = plain(mode, ScalarField::from_fn(u.chart().clone(), |s, _| exact(s)))?;
    Ok(JobOutput {
        report,
        fields: vec![(name.into(), u), ("oracle".into(), oracle)],
        boundary_fields: Vec::new(),
    })
}

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const CONFIG: u8 = 2;
    pub const SOLVE: u8 = 3;
    pub const ACCEPTANCE: u8 = 4;
}

/// Exit status for an error: bad input is distinguished from a solve that
/// ran and failed.
pub fn exit_code(error: &Error) -> u8 {
    match error.root() {
        Error::Config(_)
        | Error::InvalidSpec(_)
        | Error::InvalidChart(_)
        | Error::SlowDecay { .. }
        | Error::PoleIrregular(_)
        | Error::NotPositiveDefinite { .. }
        | Error::SizeMismatch { .. }
        | Error::Io(_) => exit::CONFIG,
        _ => exit::SOLVE,
    }
}

/// Runs the job and writes `report.json`, `fields.csv` and, when present,
/// `boundary.csv` into `out`. The report is written on failure too.
pub fn execute(config: &JobConfig, out: &Path) -> (SolveReport, u8) {
    match run_job(config) {
        Ok(output) => {
            let written = (|| -> Result<()> {
                emit_report(&output.report, out)?;
                let fields: Vec<(&str, &ScalarField)> = output.fields.iter().map(|(k, v)| (k.as_str(), v)).collect();
                emit_fields(&fields, out)?;
                if !output.boundary_fields.is_empty() {
                    let b: Vec<(&str, &BoundaryField)> =
                        output.boundary_fields.iter().map(|(k, v)| (k.as_str(), v)).collect();
                    emit_boundary_fields(&b, out, "boundary.csv")?;
                }
                Ok(())
            })();
            match written {
                Ok(()) if output.report.passed() => (output.report, exit::SUCCESS),
                Ok(()) => (output.report, exit::ACCEPTANCE),
                Err(e) => {
                    let mut report = output.report;
                    report.failure = Some(Failure::from(&e));
                    (report, exit::CONFIG)
                }
            }
        }
        Err(failure) => {
            let code = exit_code(&failure.error);
            // Best effort: an unwritable output directory is reported by the caller.
            let _ = emit_report(&failure.report, out);
            (failure.report, code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> JobConfig {
        JobConfig::from_toml(text).unwrap()
    }

    #[test]
    fn parses_forms() {
        assert_eq!("200x64".parse::<Grid>().unwrap(), Grid { ns: 200, ntheta: 64 });
        assert!("200".parse::<Grid>().is_err());
        assert_eq!("0.1".parse::<BoundarySpec>().unwrap(), BoundarySpec::Constant(0.1));
        assert_eq!(
            "cos:0.1,0.05".parse::<BoundarySpec>().unwrap(),
            BoundarySpec::CosSeries(vec![0.1, 0.05])
        );
        assert_eq!("csv:a.csv".parse::<BoundarySpec>().unwrap(), BoundarySpec::Csv("a.csv".into()));
        assert_eq!("convergence-study".parse::<Mode>().unwrap(), Mode::ConvergenceStudy);
        let c = config("mode = \"meancurv\"\nf = [0.1, 0.0, 0.02]\ngrid = \"40x8\"\n[quotient]\nbudget = 3\n");
        assert_eq!(c.f, Some(BoundarySpec::CosSeries(vec![0.1, 0.0, 0.02])));
        assert_eq!(c.quotient.budget, 3);
        assert_eq!(c.beta(), 3.0);
    }

    #[test]
    fn config_errors_name_line_and_field() {
        let e = JobConfig::from_toml("mode = \"dirichlet\"\ntoll = 1e-9\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("toll"), "{e}");
        let e = JobConfig::from_toml("mode = \"dirichlet\"\ngrid = \"9\"\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("grid"), "{e}");
        let missing = config("mode = \"meancurv\"\n").validate().unwrap_err().to_string();
        assert!(missing.contains("f: required"), "{missing}");
        let neg = config("mode = \"dirichlet\"\ntol = -1\n").validate().unwrap_err().to_string();
        assert!(neg.contains("tol"), "{neg}");
        assert!(config("").validate().is_err());
    }

    #[test]
    fn cos_series_values() {
        let chart = Chart::axisymmetric(3, 11, 6).unwrap();
        let f = BoundarySpec::CosSeries(vec![0.1, 0.0, 0.02]).on(&chart).unwrap();
        for (j, v) in f.values().iter().enumerate() {
            let c = chart.theta_at(j).cos();
            assert!((v - (0.1 + 0.02 * c * c)).abs() < 1e-15);
        }
        let radial = Chart::radial(3, 11).unwrap();
        assert!(BoundarySpec::CosSeries(vec![0.1, 0.2]).on(&radial).is_err());
    }

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(exit_code(&Error::Config("x".into()).in_stage("metric")), exit::CONFIG);
        assert_eq!(exit_code(&Error::NoSupersolution { node: 0, f: 0.2, rho: 0.1 }), exit::SOLVE);
    }
}
