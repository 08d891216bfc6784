//! Browser bindings for three small radial computations. Every export
//! returns a JSON string; failures come back as `{"error": "..."}`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use scalarflat::dirichlet::lambda_sweep;
use scalarflat::elliptic::SolverOptions;
use scalarflat::geometry::{metric_from_spec, BoundaryField, Chart, MetricField, MetricSpec};
use scalarflat::meancurv::{solve_boundary_problem, IterationOptions};
use scalarflat::oracle::radial_mean_curvature;

#[derive(Debug, Serialize)]
pub struct MeanCurvatureProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub rho: Option<f64>,
    /// Sup-norm change per monotone iteration.
    pub updates: Vec<f64>,
    pub a_oracle: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SweepResult {
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub min_phi: Vec<Option<f64>>,
    /// `phi_lambda` along the radius, one row per `lambda`.
    pub phi: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct RhoCurve {
    pub alpha: Vec<f64>,
    /// `(alpha - 1) dv / alpha^beta`.
    pub value: Vec<f64>,
    pub rho: f64,
    pub alpha_star: f64,
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

/// Rows of the radial chart from `r = 1` outwards, skipping infinity.
fn radii(chart: &Chart) -> impl Iterator<Item = usize> + '_ {
    (1..chart.ns()).rev()
}

/// Solves `du/deta = f u^beta` on the flat exterior with `ns` radial nodes.
pub fn mean_curvature_profile_impl(f: f64, beta: f64, n: usize, ns: usize) -> Result<MeanCurvatureProfile, String> {
    let chart = Chart::radial(n, ns).map_err(|e| e.to_string())?;
    let g = MetricField::flat(chart.clone());
    let bf = BoundaryField::constant(chart.clone(), f);
    let sol = solve_boundary_problem(&g, &bf, beta, &SolverOptions::default(), &IterationOptions::default())
        .map_err(|e| e.to_string())?;
    let rows: Vec<usize> = radii(&chart).collect();
    let pick = |v: &[f64]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let a_oracle = radial_mean_curvature(f, beta, n, 1e-13)
        .map_err(|e| e.to_string())?
        .map(|o| o.a);
    Ok(MeanCurvatureProfile {
        r: rows.iter().map(|&i| chart.r(i)).collect(),
        u: pick(sol.u.values()),
        u_minus: pick(sol.pair.u_minus.values()),
        u_plus: pick(sol.pair.u_plus.values()),
        alpha_minus: sol.pair.alpha_minus,
        alpha_plus: sol.pair.alpha_plus,
        rho: sol.pair.rho.as_ref().map(|r| r.values()[0]),
        updates: sol.history.iter().map(|h| h.update).collect(),
        a_oracle,
    })
}

/// `lambda` sweep of the Dirichlet problem for `u0 = 1 + c1/r + c2/r^2`.
pub fn lambda_sweep_impl(c1: f64, c2: f64, ns: usize, steps: usize) -> Result<SweepResult, String> {
    let chart = Chart::radial(3, ns).map_err(|e| e.to_string())?;
    let spec = MetricSpec::Conformal {
        coefficients: vec![1.0, c1, c2],
    };
    let g = metric_from_spec(chart.clone(), &spec).map_err(|e| e.to_string())?;
    let sweep = lambda_sweep(&g, steps, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let rows: Vec<usize> = radii(&chart).collect();
    Ok(SweepResult {
        r: rows.iter().map(|&i| chart.r(i)).collect(),
        lambda: sweep.samples.iter().map(|s| s.lambda).collect(),
        min_phi: sweep.samples.iter().map(|s| s.min_phi).collect(),
        phi: sweep
            .samples
            .iter()
            .map(|s| match &s.phi {
                Some(p) => rows.iter().map(|&i| p.values()[i]).collect(),
                None => Vec::new(),
            })
            .collect(),
    })
}

/// The barrier function `(alpha - 1) dv alpha^-beta` on `(1, alpha_max]`
/// and its maximum.
pub fn rho_curve_impl(dv: f64, beta: f64, alpha_max: f64, samples: usize) -> Result<RhoCurve, String> {
    if !(beta > 1.0) || !(dv > 0.0) || !(alpha_max > 1.0) || samples < 2 {
        return Err("need beta > 1, dv > 0, alpha_max > 1 and at least 2 samples".into());
    }
    let chart = Chart::radial(3, 6).map_err(|e| e.to_string())?;
    let rho = scalarflat::meancurv::rho_threshold(&BoundaryField::constant(chart, dv), beta)
        .map_err(|e| e.to_string())?
        .values()[0];
    let alpha: Vec<f64> = (0..samples)
        .map(|k| 1.0 + (alpha_max - 1.0) * k as f64 / (samples - 1) as f64)
        .collect();
    let value = alpha.iter().map(|a| (a - 1.0) * dv * a.powf(-beta)).collect();
    Ok(RhoCurve {
        alpha,
        value,
        rho,
        alpha_star: beta / (beta - 1.0),
    })
}

#[wasm_bindgen]
pub fn mean_curvature_profile(f: f64, beta: f64, n: usize, ns: usize) -> String {
    to_json(mean_curvature_profile_impl(f, beta, n, ns))
}

#[wasm_bindgen]
pub fn dirichlet_lambda_sweep(c1: f64, c2: f64, ns: usize, steps: usize) -> String {
    to_json(lambda_sweep_impl(c1, c2, ns, steps))
}

#[wasm_bindgen]
pub fn rho_curve(dv: f64, beta: f64, alpha_max: f64, samples: usize) -> String {
    to_json(rho_curve_impl(dv, beta, alpha_max, samples))
}
