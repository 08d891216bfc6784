//! Scalar-flat conformal factors with prescribed boundary mean curvature.
//!
//! After reducing to a metric with `R = 0` and `H = 0`, the problem is
//! `Delta_g u = 0`, `du/deta = f u^beta` on the boundary, `u -> 1`. It is
//! solved by monotone iteration between the barriers `1 - v + alpha v`,
//! where `v` is the harmonic function equal to 1 on the boundary.

use serde::{Deserialize, Serialize};

use crate::elliptic::{LinearProblem, LinearSolver, SolverOptions};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{
    boundary_mean_curvature, conformal_laplacian_coefficient, conformal_transform, laplace_beltrami,
    normal_derivative, scalar_curvature, BoundaryField, MetricField, ScalarField,
};
use crate::report::{Extrema, SolveReport, Stopwatch};
use crate::weighted::{decay_fit, weighted_norm, DecayFit, FitOptions, WeightedNormSpec};

/// How prescribed mean curvature `f_target` maps to the boundary datum `f`
/// of `du/deta = f u^(n/(n-2))` once `H = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientConvention {
    /// `f = (n-2)/(2(n-1)) f_target`, from the mean-curvature law.
    #[default]
    TransformationLaw,
    /// `f = (n-2)/n f_target`.
    DimensionRatio,
}

impl CoefficientConvention {
    pub fn coefficient(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            CoefficientConvention::TransformationLaw => (n - 2.0) / (2.0 * (n - 1.0)),
            CoefficientConvention::DimensionRatio => (n - 2.0) / n,
        }
    }
}

impl std::str::FromStr for CoefficientConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transformation-law" => Ok(CoefficientConvention::TransformationLaw),
            "dimension-ratio" => Ok(CoefficientConvention::DimensionRatio),
            other => Err(Error::Config(format!(
                "unknown coefficient convention {other:?} (expected transformation-law or dimension-ratio)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub phi: ScalarField,
    pub metric: MetricField,
    /// Sup of `|R|` and `|H|` of the reduced metric.
    pub scalar_residual: f64,
    pub mean_curvature_residual: f64,
}

/// Conformal factor `phi -> 1` making both the scalar curvature and the
/// boundary mean curvature vanish:
/// `kappa Delta_g phi - R phi = 0`, `2(n-1)/(n-2) dphi/deta + H phi = 0`.
pub fn reduce_to_minimal(g: &MetricField, options: &SolverOptions) -> Result<Reduction> {
    let n = g.n() as f64;
    let r = scalar_curvature(g)?;
    let h = boundary_mean_curvature(g)?;
    let gamma = h.map(|v| v * (n - 2.0) / (2.0 * (n - 1.0)))?;
    let zero = BoundaryField::constant(g.chart().clone(), 0.0);
    let problem = LinearProblem::new(g.clone(), conformal_laplacian_coefficient(g.n()))
        .with_c(r.map(|v| -v)?)
        .with_robin(gamma, zero)
        .with_limit(1.0);
    let phi = LinearSolver::new(&problem, *options)?.solve(g.chart())?.solution;
    let (node, min_phi) = phi.argmin();
    if !(min_phi > 0.0) {
        return Err(Error::SobolevPositivity { node, min_phi });
    }
    let metric = conformal_transform(g, &phi)?;
    let scalar_residual = scalar_curvature(&metric)?.values().iter().fold(0f64, |m, v| m.max(v.abs()));
    let mean_curvature_residual = boundary_mean_curvature(&metric)?
        .values()
        .iter()
        .fold(0f64, |m, v| m.max(v.abs()));
    Ok(Reduction {
        phi,
        metric,
        scalar_residual,
        mean_curvature_residual,
    })
}

#[derive(Debug, Clone)]
pub struct HarmonicUnit {
    pub v: ScalarField,
    pub dv_deta: BoundaryField,
}

/// Slack allowed above 1 by the discrete maximum principle check.
const MAX_PRINCIPLE_SLACK: f64 = 1e-10;

/// Harmonic `v` with `v = 1` on the boundary and `v -> 0`, and its normal
/// derivative. Fails if `v` leaves `(0, 1]` away from infinity or if
/// `dv/deta` is not positive.
pub fn harmonic_unit(g: &MetricField, options: &SolverOptions) -> Result<HarmonicUnit> {
    let chart = g.chart().clone();
    let problem = LinearProblem::new(g.clone(), 1.0).with_dirichlet(BoundaryField::constant(chart.clone(), 1.0));
    let v = LinearSolver::new(&problem, *options)?.solve(&chart)?.solution;
    let nt = chart.ntheta();
    for (k, &val) in v.values().iter().enumerate().skip(nt) {
        if !(val > 0.0 && val <= 1.0 + MAX_PRINCIPLE_SLACK) {
            return Err(Error::MaximumPrinciple { node: k, value: val });
        }
    }
    let dv_deta = normal_derivative(g, &v)?;
    if !(dv_deta.min() > 0.0) {
        return Err(Error::NonPositiveNormalDerivative { min: dv_deta.min() });
    }
    Ok(HarmonicUnit { v, dv_deta })
}

/// `rho = dv/deta (1/(beta-1))^(1-beta) beta^(-beta)`: data below `rho`
/// admit a supersolution in the barrier family.
pub fn rho_threshold(dv_deta: &BoundaryField, beta: f64) -> Result<BoundaryField> {
    if !(beta > 1.0) {
        return Err(Error::ThresholdUndefined { beta });
    }
    let k = (1.0 / (beta - 1.0)).powf(1.0 - beta) * beta.powf(-beta);
    dv_deta.map(|d| d * k)
}

#[derive(Debug, Clone)]
pub struct SubSuperPair {
    pub v: ScalarField,
    pub dv_deta: BoundaryField,
    pub beta: f64,
    pub f: BoundaryField,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub u_minus: ScalarField,
    pub u_plus: ScalarField,
    /// Present when `beta > 1`.
    pub rho: Option<BoundaryField>,
}

fn barrier_margin(dv: &BoundaryField, f: &BoundaryField, beta: f64, alpha: f64) -> f64 {
    dv.values()
        .iter()
        .zip(f.values())
        .map(|(d, fj)| (alpha - 1.0) * d - fj * alpha.powf(beta))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn barrier_margin_min(dv: &BoundaryField, f: &BoundaryField, beta: f64, alpha: f64) -> f64 {
    dv.values()
        .iter()
        .zip(f.values())
        .map(|(d, fj)| (alpha - 1.0) * d - fj * alpha.powf(beta))
        .fold(f64::INFINITY, f64::min)
}

/// Builds `u_- = 1 - v + alpha_- v` and `u_+ = 1 - v + alpha_+ v`.
///
/// `alpha_-` is the largest value in `(0, 1]` found by bisection with
/// `max[(alpha-1) dv/deta - f alpha^beta] <= 0`; it is 1 when `f >= 0`.
pub fn build_sub_super(unit: &HarmonicUnit, f: &BoundaryField, beta: f64) -> Result<SubSuperPair> {
    if !(beta > 0.0) {
        return Err(Error::Unsupported(format!("beta must be positive, got {beta}")));
    }
    let dv = &unit.dv_deta;
    let positive_f = f.values().iter().any(|&x| x > 0.0);
    let rho = if beta > 1.0 { Some(rho_threshold(dv, beta)?) } else { None };
    let alpha_plus = match &rho {
        Some(rho) if positive_f => {
            for (j, (fj, rj)) in f.values().iter().zip(rho.values()).enumerate() {
                if fj >= rj {
                    return Err(Error::NoSupersolution { node: j, f: *fj, rho: *rj });
                }
            }
            beta / (beta - 1.0)
        }
        None if positive_f => return Err(Error::ThresholdUndefined { beta }),
        _ => 2.0,
    };
    if barrier_margin_min(dv, f, beta, alpha_plus) < 0.0 {
        return Err(Error::NoSupersolution {
            node: 0,
            f: f.max(),
            rho: rho.as_ref().map_or(f64::NAN, |r| r.min()),
        });
    }

    let h = |a: f64| barrier_margin(dv, f, beta, a);
    let alpha_minus = if h(1.0) <= 0.0 {
        1.0
    } else {
        let mut trace = vec![(1.0, h(1.0))];
        let mut lo = 0.5;
        while h(lo) > 0.0 {
            trace.push((lo, h(lo)));
            lo *= 0.5;
            if lo < 1e-12 {
                return Err(Error::SubsolutionSearch {
                    message: "no admissible alpha in (0, 1]".into(),
                    trace,
                });
            }
        }
        let mut hi = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let hm = h(mid);
            trace.push((mid, hm));
            if hm <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        if !(h(lo) <= 0.0) {
            return Err(Error::SubsolutionSearch {
                message: "bisection ended outside the admissible set".into(),
                trace,
            });
        }
        lo
    };
    let u_minus = unit.v.map(|v| 1.0 - v + alpha_minus * v)?;
    let u_plus = unit.v.map(|v| 1.0 - v + alpha_plus * v)?;
    Ok(SubSuperPair {
        v: unit.v.clone(),
        dv_deta: dv.clone(),
        beta,
        f: f.clone(),
        alpha_minus,
        alpha_plus,
        u_minus,
        u_plus,
        rho,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationOptions {
    /// Stop when `sup |u_{k+1} - u_k|` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Roundoff allowance for the monotonicity and sandwich checks.
    pub slack: f64,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            tol: 1e-10,
            max_iter: 500,
            slack: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    /// `sup |u_{k+1} - u_k|`.
    pub update: f64,
    /// `min (u_{k+1} - u_k)`; nonnegative up to roundoff.
    pub min_increment: f64,
    /// `min (u_{k+1} - u_-)` and `min (u_+ - u_{k+1})`.
    pub lower_margin: f64,
    pub upper_margin: f64,
}

#[derive(Debug, Clone)]
pub struct MeanCurvatureSolution {
    pub u: ScalarField,
    pub metric: MetricField,
    pub pair: SubSuperPair,
    pub history: Vec<IterateRecord>,
    /// `sup |du/deta - f u^beta|`.
    pub robin_residual: f64,
    pub report: SolveReport,
}

/// Stabilization weight `c = max(1, sup beta |f| t^(beta-1))` over
/// `t` in `[min u_-, max u_+]`.
pub fn stabilization_weight(pair: &SubSuperPair) -> f64 {
    let (t0, t1) = (pair.u_minus.min(), pair.u_plus.max());
    let tpow = t0.powf(pair.beta - 1.0).max(t1.powf(pair.beta - 1.0));
    pair.f
        .values()
        .iter()
        .map(|fj| pair.beta * fj.abs() * tpow)
        .fold(1.0, f64::max)
}

/// Iterates `Delta_g u_{k+1} = 0`,
/// `du_{k+1}/deta + c u_{k+1} = f u_k^beta + c u_k`, `u_{k+1} -> 1`,
/// from `u_0 = u_-`, checking monotonicity and the sandwich at every step.
pub fn monotone_iterate(
    pair: &SubSuperPair,
    g: &MetricField,
    solver_options: &SolverOptions,
    options: &IterationOptions,
) -> Result<MeanCurvatureSolution> {
    let clock = Stopwatch::start();
    g.check_boundary_chart(&pair.f)?;
    let chart = g.chart().clone();
    let c = stabilization_weight(pair);
    let gamma = BoundaryField::constant(chart.clone(), c);
    let robin_data = |u: &ScalarField| -> Result<BoundaryField> {
        let ub = u.boundary();
        let vals = ub
            .values()
            .iter()
            .zip(pair.f.values())
            .map(|(uj, fj)| fj * uj.powf(pair.beta) + c * uj)
            .collect();
        BoundaryField::new(chart.clone(), vals)
    };
    let base = LinearProblem::new(g.clone(), 1.0).with_limit(1.0);
    let problem = base.clone().with_robin(gamma.clone(), robin_data(&pair.u_minus)?);
    let solver = LinearSolver::new(&problem, *solver_options)?;
    let mut u = pair.u_minus.clone();
    let mut history = Vec::new();
    let mut gmres_iterations = 0;
    loop {
        let iteration = history.len() + 1;
        if iteration > options.max_iter {
            return Err(Error::IterationNonConvergence {
                iterations: options.max_iter,
                last_update: history.last().map_or(f64::NAN, |r: &IterateRecord| r.update),
            });
        }
        let p = base.clone().with_robin(gamma.clone(), robin_data(&u)?);
        let lin = solver.solve_problem(&p)?;
        gmres_iterations += lin.iterations;
        let next = lin.solution;
        let mut rec = IterateRecord {
            update: 0.0,
            min_increment: f64::INFINITY,
            lower_margin: f64::INFINITY,
            upper_margin: f64::INFINITY,
        };
        for k in 0..chart.len() {
            let (old, new) = (u.values()[k], next.values()[k]);
            let (lo, hi) = (pair.u_minus.values()[k], pair.u_plus.values()[k]);
            let inc = new - old;
            rec.update = rec.update.max(inc.abs());
            rec.min_increment = rec.min_increment.min(inc);
            rec.lower_margin = rec.lower_margin.min(new - lo);
            rec.upper_margin = rec.upper_margin.min(hi - new);
            if inc < -options.slack {
                return Err(Error::MonotonicityViolation {
                    iteration,
                    node: k,
                    decrease: -inc,
                });
            }
            if new < lo - options.slack || new > hi + options.slack {
                return Err(Error::SandwichViolation {
                    iteration,
                    node: k,
                    excess: (lo - new).max(new - hi),
                });
            }
        }
        history.push(rec);
        u = next;
        if rec.update < options.tol {
            break;
        }
    }

    let du = normal_derivative(g, &u)?;
    let robin_residual = du
        .values()
        .iter()
        .zip(u.boundary().values())
        .zip(pair.f.values())
        .map(|((d, uj), fj)| (d - fj * uj.powf(pair.beta)).abs())
        .fold(0.0, f64::max);
    let metric = conformal_transform(g, &u)?;

    let mut report = SolveReport::new("meancurv");
    report.iterations.insert("monotone".into(), history.len());
    report.iterations.insert("gmres".into(), gmres_iterations);
    report.history.insert("update".into(), history.iter().map(|r| r.update).collect());
    report.history.insert("min_increment".into(), history.iter().map(|r| r.min_increment).collect());
    report.residuals.insert("robin sup".into(), robin_residual);
    let lap = laplace_beltrami(g, &u)?;
    let spec = WeightedNormSpec::lebesgue(2.0, crate::dirichlet::residual_weight(g.n()));
    report.residuals.insert(format!("Delta_g u {spec}"), weighted_norm(&lap, &spec)?);
    report.scalars.insert("alpha_minus".into(), pair.alpha_minus);
    report.scalars.insert("alpha_plus".into(), pair.alpha_plus);
    report.scalars.insert("beta".into(), pair.beta);
    report.scalars.insert("c".into(), c);
    report.scalars.insert("u(boundary) mean".into(), mean(u.boundary().values()));
    if let Some(rho) = &pair.rho {
        report.extrema.insert("rho".into(), Extrema::of(rho.values()));
    }
    report.extrema.insert("u".into(), Extrema::of(u.values()));
    report.extrema.insert("dv_deta".into(), Extrema::of(pair.dv_deta.values()));
    report.extrema.insert("f".into(), Extrema::of(pair.f.values()));
    report.scalars.insert(
        "sandwich lower margin".into(),
        history.iter().map(|r| r.lower_margin).fold(f64::INFINITY, f64::min),
    );
    report.scalars.insert(
        "sandwich upper margin".into(),
        history.iter().map(|r| r.upper_margin).fold(f64::INFINITY, f64::min),
    );
    if let Ok(fit) = decay_fit(&u.map(|v| v - 1.0)?, &FitOptions::default()) {
        if let DecayFit::Decaying { a, .. } = fit {
            report.scalars.insert("a".into(), a);
        }
        report.decay_fits.insert("u-1".into(), fit);
    }
    report.checks.insert("monotone".into(), true);
    report.checks.insert("sandwich".into(), true);
    report.checks.insert("u > 0".into(), u.min() > 0.0);
    clock.record(&mut report);
    Ok(MeanCurvatureSolution {
        u,
        metric,
        pair: pair.clone(),
        history,
        robin_residual,
        report,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Solves `du/deta = f u^beta` on `g` directly (no reduction): barrier,
/// sub/supersolutions, monotone iteration.
pub fn solve_boundary_problem(
    g: &MetricField,
    f: &BoundaryField,
    beta: f64,
    solver_options: &SolverOptions,
    options: &IterationOptions,
) -> Result<MeanCurvatureSolution> {
    let unit = harmonic_unit(g, solver_options).stage("harmonic barrier")?;
    let pair = build_sub_super(&unit, f, beta).stage("sub/supersolutions")?;
    monotone_iterate(&pair, g, solver_options, options).stage("monotone iteration")
}

/// Full pipeline: reduce to `R = H = 0`, then solve for `u` with
/// `f = coefficient * f_target` and `beta = n/(n-2)`, and check the mean
/// curvature of the result against `f_target`.
pub fn prescribe_mean_curvature(
    g: &MetricField,
    f_target: &BoundaryField,
    convention: CoefficientConvention,
    solver_options: &SolverOptions,
    options: &IterationOptions,
) -> Result<MeanCurvatureSolution> {
    let n = g.n();
    let red = reduce_to_minimal(g, solver_options).stage("reduction")?;
    let f = f_target.map(|v| v * convention.coefficient(n))?;
    let beta = n as f64 / (n as f64 - 2.0);
    let mut sol = solve_boundary_problem(&red.metric, &f, beta, solver_options, options)?;
    // The final metric is phi^(4/(n-2)) u^(4/(n-2)) g.
    let h = boundary_mean_curvature(&sol.metric).stage("final check")?;
    let err = h.max_abs_diff(f_target);
    sol.report.mode = "meancurv-prescribe".into();
    sol.report.residuals.insert("reduction R sup".into(), red.scalar_residual);
    sol.report.residuals.insert("reduction H sup".into(), red.mean_curvature_residual);
    sol.report.residuals.insert("H(g~) - f_target sup".into(), err);
    sol.report.extrema.insert("phi (reduction)".into(), Extrema::of(red.phi.values()));
    sol.report.extrema.insert("H(g~)".into(), Extrema::of(h.values()));
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    fn flat(n: usize, ns: usize, nt: usize) -> MetricField {
        let c = if nt == 1 { Chart::radial(n, ns) } else { Chart::axisymmetric(n, ns, nt) };
        MetricField::flat(c.unwrap())
    }

    fn constant_f(g: &MetricField, f: f64) -> BoundaryField {
        BoundaryField::constant(g.chart().clone(), f)
    }

    #[test]
    fn rho_examples() {
        let c = Chart::radial(3, 11).unwrap();
        let one = BoundaryField::constant(c.clone(), 1.0);
        let two = BoundaryField::constant(c, 2.0);
        assert!((rho_threshold(&one, 3.0).unwrap().values()[0] - 4.0 / 27.0).abs() < 1e-15);
        assert!((rho_threshold(&two, 2.0).unwrap().values()[0] - 0.5).abs() < 1e-15);
        assert!(matches!(rho_threshold(&one, 1.0), Err(Error::ThresholdUndefined { .. })));
    }

    #[test]
    fn harmonic_unit_flat() {
        let g = flat(3, 81, 1);
        let u = harmonic_unit(&g, &SolverOptions::default()).unwrap();
        assert!((u.dv_deta.values()[0] - 1.0).abs() < 1e-10);
        let g4 = flat(4, 81, 1);
        let u4 = harmonic_unit(&g4, &SolverOptions::default()).unwrap();
        assert!((u4.dv_deta.values()[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn sub_super_examples() {
        let g = flat(3, 41, 1);
        let unit = harmonic_unit(&g, &SolverOptions::default()).unwrap();
        let pair = build_sub_super(&unit, &constant_f(&g, 0.1), 3.0).unwrap();
        assert_eq!(pair.alpha_plus, 1.5);
        assert_eq!(pair.alpha_minus, 1.0);
        assert!(matches!(
            build_sub_super(&unit, &constant_f(&g, 0.16), 3.0),
            Err(Error::NoSupersolution { .. })
        ));
        let neg = build_sub_super(&unit, &constant_f(&g, -1.0), 3.0).unwrap();
        // root of alpha^3 + alpha - 1
        let a = neg.alpha_minus;
        assert!((a * a * a + a - 1.0).abs() < 1e-9, "{a}");
        assert_eq!(neg.alpha_plus, 2.0);
    }

    #[test]
    fn zero_data_converges_immediately() {
        let g = flat(3, 41, 6);
        let sol = solve_boundary_problem(
            &g,
            &constant_f(&g, 0.0),
            3.0,
            &SolverOptions::default(),
            &IterationOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.history.len(), 1);
        assert!(sol.u.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn flat_reduction_is_horizon_factor() {
        let g = flat(3, 201, 1);
        let red = reduce_to_minimal(&g, &SolverOptions::default()).unwrap();
        let exact = ScalarField::from_fn(g.chart().clone(), |s, _| 1.0 + s).unwrap();
        assert!(red.phi.max_abs_diff(&exact) < 1e-4);
        assert!(red.mean_curvature_residual < 1e-3, "{}", red.mean_curvature_residual);
    }

    #[test]
    fn conventions_parse() {
        assert_eq!("dimension-ratio".parse::<CoefficientConvention>().unwrap(), CoefficientConvention::DimensionRatio);
        assert!("other".parse::<CoefficientConvention>().is_err());
        assert!((CoefficientConvention::TransformationLaw.coefficient(3) - 0.25).abs() < 1e-15);
    }
}
