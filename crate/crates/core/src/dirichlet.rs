//! Scalar-flat conformal factors that fix the metric on the boundary.
//!
//! With `v = phi - 1`, the factor solves
//! `kappa Delta_g v - R v = R`, `v = 0` on the boundary and `v -> 0` at
//! infinity, where `kappa = 4(n-1)/(n-2)`.

use serde::Serialize;

use crate::elliptic::{LinearProblem, LinearSolver, SolverOptions};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{
    conformal_laplacian_coefficient, conformal_transform, scalar_curvature, MetricField, ScalarField,
};
use crate::report::{Extrema, SolveReport, Stopwatch};
use crate::weighted::{decay_fit, weighted_norm, DecayFit, FitOptions, WeightedNormSpec};

#[derive(Debug, Clone)]
pub struct ConformalSolution {
    pub phi: ScalarField,
    pub metric: MetricField,
    pub report: SolveReport,
}

/// Decay weight used for residual norms: the curvature of `g~` is measured
/// in `L^2_{delta-2}` with `delta = 5/2 - n`.
pub fn residual_weight(n: usize) -> f64 {
    2.5 - n as f64 - 2.0
}

/// The linear problem for `v_lambda`, given the scalar curvature `r` of `g`.
pub fn lambda_problem(g: &MetricField, r: &ScalarField, lambda: f64) -> Result<LinearProblem> {
    let kappa = conformal_laplacian_coefficient(g.n());
    Ok(LinearProblem::new(g.clone(), kappa)
        .with_c(r.map(|v| -lambda * v)?)
        .with_source(r.map(|v| lambda * v)?))
}

fn check_positive(phi: &ScalarField) -> Result<()> {
    let (node, min_phi) = phi.argmin();
    if !(min_phi > 0.0) {
        return Err(Error::SobolevPositivity { node, min_phi });
    }
    Ok(())
}

/// Mass coefficient `m` from a fit `u - 1 ~ a s^q`, valid when `q` is close
/// to `n - 2`: `m = 2a`.
pub fn mass_from_fit(fit: &DecayFit, n: usize, tol: f64) -> Option<f64> {
    match fit {
        DecayFit::Decaying { a, q, .. } if (q - (n as f64 - 2.0)).abs() <= tol => Some(2.0 * a),
        DecayFit::Decaying { .. } => None,
        DecayFit::Constant { .. } => Some(0.0),
        DecayFit::NoDecay { .. } => None,
    }
}

pub fn solve_scalar_flat_dirichlet(g: &MetricField, options: &SolverOptions) -> Result<ConformalSolution> {
    let clock = Stopwatch::start();
    let n = g.n();
    let r = scalar_curvature(g).stage("scalar curvature")?;
    let problem = lambda_problem(g, &r, 1.0)?;
    let solver = LinearSolver::new(&problem, *options).stage("dirichlet solve")?;
    let lin = solver.solve(g.chart()).stage("dirichlet solve")?;
    let phi = lin.solution.map(|v| 1.0 + v)?;
    check_positive(&phi).stage("dirichlet solve")?;
    let metric = conformal_transform(g, &phi).stage("conformal transform")?;

    let mut report = SolveReport::new("dirichlet");
    report.iterations.insert("gmres".into(), lin.iterations);
    report.history.insert("gmres".into(), lin.history);
    report.residuals.insert("linear (relative)".into(), lin.residual);
    let spec = WeightedNormSpec::lebesgue(2.0, residual_weight(n));
    report
        .residuals
        .insert(format!("R(g) {spec}"), weighted_norm(&r, &spec)?);
    let r_new = scalar_curvature(&metric).stage("scalar curvature")?;
    report
        .residuals
        .insert(format!("R(g~) {spec}"), weighted_norm(&r_new, &spec)?);
    report
        .residuals
        .insert("R(g~) sup".into(), r_new.values().iter().fold(0f64, |m, v| m.max(v.abs())));
    let bdry = phi.boundary();
    let boundary_err = bdry.values().iter().fold(0f64, |m, v| m.max((v - 1.0).abs()));
    report.residuals.insert("boundary |phi-1|".into(), boundary_err);
    report.extrema.insert("phi".into(), Extrema::of(phi.values()));
    report.extrema.insert("R(g)".into(), Extrema::of(r.values()));
    report.scalars.insert("positivity margin".into(), phi.min());

    let fit_opts = FitOptions::default();
    let vfield = phi.map(|v| v - 1.0)?;
    if let Ok(fit) = decay_fit(&vfield, &fit_opts) {
        let ok = match fit {
            DecayFit::Decaying { q, .. } => q >= n as f64 - 2.0 - 0.05,
            DecayFit::Constant { u_inf } => u_inf.abs() < 1e-12,
            DecayFit::NoDecay { .. } => false,
        };
        report.checks.insert("phi-1 decays at least like r^(2-n)".into(), ok);
        report.mass = mass_from_fit(&fit, n, 0.05);
        report.decay_fits.insert("phi-1".into(), fit);
    }
    if g.is_conformally_flat() {
        let total = metric.conformal_factor().map(|v| v - 1.0)?;
        if let Ok(fit) = decay_fit(&total, &fit_opts) {
            if let Some(m) = mass_from_fit(&fit, n, 0.05) {
                report.scalars.insert("mass (total factor)".into(), m);
            }
            report.decay_fits.insert("factor-1".into(), fit);
        }
    }
    report.checks.insert("min phi > 0".into(), true);
    report.checks.insert("phi = 1 on boundary".into(), boundary_err == 0.0);
    clock.record(&mut report);
    Ok(ConformalSolution { phi, metric, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaSample {
    pub lambda: f64,
    pub min_phi: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub phi: Option<ScalarField>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaSweep {
    pub samples: Vec<LambdaSample>,
}

impl LambdaSweep {
    /// `min phi_lambda > 0` at every sampled `lambda`.
    pub fn certified(&self) -> bool {
        self.samples.iter().all(|s| s.min_phi.is_some_and(|m| m > 0.0))
    }

    pub fn min_over_lambda(&self) -> Option<f64> {
        self.samples
            .iter()
            .map(|s| s.min_phi)
            .try_fold(f64::INFINITY, |acc, m| m.map(|m| acc.min(m)))
    }
}

/// Solves `kappa Delta_g v - lambda R v = lambda R` on an even grid of
/// `steps` values of `lambda` in `[0, 1]`. The matrix changes with
/// `lambda`, so each sample is assembled separately; failures are recorded
/// per sample and the sweep continues.
pub fn lambda_sweep(g: &MetricField, steps: usize, options: &SolverOptions) -> Result<LambdaSweep> {
    if steps < 2 {
        return Err(Error::InvalidSpec(format!("lambda sweep needs at least 2 steps, got {steps}")));
    }
    let r = scalar_curvature(g).stage("scalar curvature")?;
    let mut samples = Vec::with_capacity(steps);
    for i in 0..steps {
        let lambda = i as f64 / (steps - 1) as f64;
        let solved = lambda_problem(g, &r, lambda)
            .and_then(|p| LinearSolver::new(&p, *options)?.solve(g.chart()))
            .and_then(|lin| lin.solution.map(|v| 1.0 + v));
        samples.push(match solved {
            Ok(phi) => LambdaSample {
                lambda,
                min_phi: Some(phi.min()),
                error: None,
                phi: Some(phi),
            },
            Err(e) => LambdaSample {
                lambda,
                min_phi: None,
                error: Some(e.to_string()),
                phi: None,
            },
        });
    }
    Ok(LambdaSweep { samples })
}
