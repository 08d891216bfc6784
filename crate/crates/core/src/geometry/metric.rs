//! Riemannian metrics on the chart.
//!
//! Components are stored in the orthonormal frame of the flat metric
//! (`dr`, `r dtheta`, and `r sin(theta)` times the round metric on the
//! azimuthal sphere), so the flat metric is the identity and asymptotic
//! flatness means the stored components tend to `diag(1, 1, 1)`.
//!
//! A metric is kept as `w^(4/(n-2)) * base`, with `base` either the flat
//! metric or explicit frame components, so conformal changes compose by
//! multiplying factors.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chart::{Chart, ChartMode};
use super::field::{same_chart, BoundaryField, ScalarField};
use crate::error::{Error, Result};
use crate::weighted::{decay_fit, DecayFit, FitOptions};

/// One term `coeff * r^-k * cos(theta)^l` of a component perturbation.
/// For the mixed `r-theta` component the term is multiplied by `sin(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term(pub i32, pub u32, pub f64);

impl Term {
    fn eval(&self, s: f64, cos_t: f64) -> f64 {
        self.2 * s.powi(self.0) * cos_t.powi(self.1 as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisymSpec {
    /// Declared decay exponent: every component deviates from flat like `r^-decay`.
    pub decay: f64,
    #[serde(default)]
    pub rr: Vec<Term>,
    #[serde(default)]
    pub rt: Vec<Term>,
    #[serde(default)]
    pub tt: Vec<Term>,
    #[serde(default)]
    pub az: Vec<Term>,
}

/// Metric description.
///
/// Text grammar (see README):
///
/// ```text
/// flat
/// conformal:c0,c1,c2,...        u0 = c0 + c1/r + c2/r^2 + ...   (c0 = 1)
/// axisym:{json AxisymSpec}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSpec {
    Flat,
    Conformal { coefficients: Vec<f64> },
    Axisym(AxisymSpec),
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "flat" {
            return Ok(MetricSpec::Flat);
        }
        if let Some(rest) = text.strip_prefix("conformal:") {
            let coefficients = rest
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidSpec(format!("coefficient {c:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(MetricSpec::Conformal { coefficients });
        }
        if let Some(rest) = text.strip_prefix("axisym:") {
            let spec: AxisymSpec = serde_json::from_str(rest)
                .map_err(|e| Error::InvalidSpec(format!("axisym spec: {e}")))?;
            return Ok(MetricSpec::Axisym(spec));
        }
        Err(Error::InvalidSpec(format!(
            "unknown metric {text:?} (expected flat | conformal:c0,c1,... | axisym:{{json}})"
        )))
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Flat => write!(f, "flat"),
            MetricSpec::Conformal { coefficients } => {
                let parts: Vec<String> = coefficients.iter().map(|c| c.to_string()).collect();
                write!(f, "conformal:{}", parts.join(","))
            }
            MetricSpec::Axisym(spec) => write!(
                f,
                "axisym:{}",
                serde_json::to_string(spec).map_err(|_| fmt::Error)?
            ),
        }
    }
}

/// Frame components at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameComponents {
    pub rr: Vec<f64>,
    pub rt: Vec<f64>,
    pub tt: Vec<f64>,
    pub az: Vec<f64>,
}

impl FrameComponents {
    pub fn flat(len: usize) -> Self {
        FrameComponents {
            rr: vec![1.0; len],
            rt: vec![0.0; len],
            tt: vec![1.0; len],
            az: vec![1.0; len],
        }
    }

    pub fn at(&self, k: usize) -> [f64; 4] {
        [self.rr[k], self.rt[k], self.tt[k], self.az[k]]
    }
}

/// Inverse-metric and volume data in the frame, per node.
///
/// `a, b, c` are the entries of the inverse of the `(r, theta)` block and
/// `mu` is the volume density relative to the flat measure.
#[derive(Debug, Clone)]
pub(crate) struct FrameCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Base {
    Flat,
    Frame(FrameComponents),
}

#[derive(Debug, Clone)]
pub struct MetricField {
    chart: Arc<Chart>,
    base: Base,
    factor: Vec<f64>,
    /// Coefficients of the factor as a polynomial in `s = 1/r`, when known.
    factor_poly: Option<Vec<f64>>,
}

pub(crate) fn eval_poly(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn min_eigenvalue(rr: f64, rt: f64, tt: f64) -> f64 {
    let mean = 0.5 * (rr + tt);
    let half_diff = 0.5 * (rr - tt);
    mean - (half_diff * half_diff + rt * rt).sqrt()
}

impl MetricField {
    pub fn flat(chart: Arc<Chart>) -> Self {
        let len = chart.len();
        MetricField {
            chart,
            base: Base::Flat,
            factor: vec![1.0; len],
            factor_poly: Some(vec![1.0]),
        }
    }

    /// `u0^(4/(n-2))` times the flat metric.
    pub fn conformally_flat(factor: &ScalarField) -> Result<Self> {
        check_positive(factor.values())?;
        Ok(MetricField {
            chart: factor.chart().clone(),
            base: Base::Flat,
            factor: factor.values().to_vec(),
            factor_poly: None,
        })
    }

    /// Conformally flat metric whose factor is `sum_k c_k r^-k`.
    pub fn conformal_polynomial(chart: Arc<Chart>, coefficients: &[f64]) -> Result<Self> {
        let values = chart.sample(|s, _| eval_poly(coefficients, s));
        check_positive(&values)?;
        Ok(MetricField {
            chart,
            base: Base::Flat,
            factor: values,
            factor_poly: Some(coefficients.to_vec()),
        })
    }

    pub fn from_components(chart: Arc<Chart>, comps: FrameComponents) -> Result<Self> {
        let len = chart.len();
        for v in [&comps.rr, &comps.rt, &comps.tt, &comps.az] {
            if v.len() != len {
                return Err(Error::SizeMismatch {
                    expected: len,
                    got: v.len(),
                });
            }
            if let Some(k) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(k));
            }
        }
        for k in 0..len {
            let lam = min_eigenvalue(comps.rr[k], comps.rt[k], comps.tt[k]).min(comps.az[k]);
            if lam <= 0.0 {
                return Err(Error::NotPositiveDefinite {
                    node: k,
                    min_eigenvalue: lam,
                });
            }
        }
        if chart.mode() == ChartMode::Radial {
            for k in 0..len {
                if comps.rt[k] != 0.0 || (comps.tt[k] - comps.az[k]).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(
                        "a radial chart needs rt = 0 and tt = az (spherical symmetry)".into(),
                    ));
                }
            }
        }
        Ok(MetricField {
            chart,
            base: Base::Frame(comps),
            factor: vec![1.0; len],
            factor_poly: Some(vec![1.0]),
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn n(&self) -> usize {
        self.chart.n()
    }

    /// True when the metric is a conformal multiple of the flat metric.
    pub fn is_conformally_flat(&self) -> bool {
        self.base == Base::Flat
    }

    /// The accumulated conformal factor `w` in `w^(4/(n-2)) * base`.
    pub fn conformal_factor(&self) -> ScalarField {
        ScalarField::new(self.chart.clone(), self.factor.clone())
            .expect("factor validated on construction")
    }

    pub(crate) fn factor_values(&self) -> &[f64] {
        &self.factor
    }

    pub(crate) fn factor_poly(&self) -> Option<&[f64]> {
        self.factor_poly.as_deref()
    }

    /// The metric with the conformal factor stripped.
    pub fn base(&self) -> MetricField {
        let len = self.chart.len();
        MetricField {
            chart: self.chart.clone(),
            base: self.base.clone(),
            factor: vec![1.0; len],
            factor_poly: Some(vec![1.0]),
        }
    }

    pub(crate) fn has_trivial_factor(&self) -> bool {
        self.factor.iter().all(|&w| w == 1.0)
    }

    fn base_at(&self, k: usize) -> [f64; 4] {
        match &self.base {
            Base::Flat => [1.0, 0.0, 1.0, 1.0],
            Base::Frame(c) => c.at(k),
        }
    }

    pub(crate) fn base_components(&self) -> FrameComponents {
        match &self.base {
            Base::Flat => FrameComponents::flat(self.chart.len()),
            Base::Frame(c) => c.clone(),
        }
    }

    fn power(&self) -> f64 {
        4.0 / (self.n() as f64 - 2.0)
    }

    /// Effective frame components at node `k`: `[rr, rt, tt, az]`.
    pub fn components_at(&self, k: usize) -> [f64; 4] {
        let scale = self.factor[k].powf(self.power());
        self.base_at(k).map(|c| c * scale)
    }

    pub fn components(&self) -> FrameComponents {
        let len = self.chart.len();
        let mut out = FrameComponents::flat(len);
        for k in 0..len {
            let [rr, rt, tt, az] = self.components_at(k);
            out.rr[k] = rr;
            out.rt[k] = rt;
            out.tt[k] = tt;
            out.az[k] = az;
        }
        out
    }

    /// Frame components on the `r = 1` slice, `[rr, rt, tt, az]` per angular node.
    pub fn boundary_components(&self) -> Vec<[f64; 4]> {
        let i = self.chart.boundary_row();
        (0..self.chart.ntheta())
            .map(|j| self.components_at(self.chart.index(i, j)))
            .collect()
    }

    pub(crate) fn coefficients(&self) -> FrameCoefficients {
        let len = self.chart.len();
        let n = self.n() as f64;
        let radial = self.chart.mode() == ChartMode::Radial;
        let mut out = FrameCoefficients {
            a: vec![0.0; len],
            b: vec![0.0; len],
            c: vec![0.0; len],
            mu: vec![0.0; len],
        };
        for k in 0..len {
            let [rr, rt, tt, az] = self.components_at(k);
            if radial {
                out.a[k] = 1.0 / rr;
                out.c[k] = 1.0 / az;
                out.mu[k] = rr.sqrt() * az.powf(0.5 * (n - 1.0));
            } else {
                let det = rr * tt - rt * rt;
                out.a[k] = tt / det;
                out.b[k] = -rt / det;
                out.c[k] = rr / det;
                out.mu[k] = det.sqrt() * az.powf(0.5 * (n - 2.0));
            }
        }
        out
    }

    /// Decay fit of the angular mean of `g_rr - 1`.
    pub fn rr_decay(&self, options: &FitOptions) -> Result<DecayFit> {
        let comps = self.components();
        let dev = ScalarField::new(self.chart.clone(), comps.rr.iter().map(|v| v - 1.0).collect())?;
        decay_fit(&dev, options)
    }

    /// Decay fit of the largest deviation from the flat metric over all
    /// components and angles.
    pub fn deviation_decay(&self, options: &FitOptions) -> Result<DecayFit> {
        let comps = self.components();
        let nt = self.chart.ntheta();
        let mut env = vec![0.0; self.chart.len()];
        for i in 0..self.chart.ns() {
            let mut m = 0f64;
            for j in 0..nt {
                let k = self.chart.index(i, j);
                m = m
                    .max((comps.rr[k] - 1.0).abs())
                    .max(comps.rt[k].abs())
                    .max((comps.tt[k] - 1.0).abs())
                    .max((comps.az[k] - 1.0).abs());
            }
            for j in 0..nt {
                env[self.chart.index(i, j)] = m;
            }
        }
        decay_fit(&ScalarField::new(self.chart.clone(), env)?, options)
    }

    pub(crate) fn with_factor(&self, factor: Vec<f64>, factor_poly: Option<Vec<f64>>) -> Self {
        MetricField {
            chart: self.chart.clone(),
            base: self.base.clone(),
            factor,
            factor_poly,
        }
    }

    pub(crate) fn check_chart(&self, chart: &Arc<Chart>) -> Result<()> {
        if same_chart(&self.chart, chart) {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }

    pub(crate) fn check_boundary_chart(&self, f: &BoundaryField) -> Result<()> {
        self.check_chart(f.chart())
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v > 0.0)) {
        Some(k) => Err(Error::Positivity {
            node: k,
            value: values[k],
        }),
        None => Ok(()),
    }
}

/// Slack on the measured decay exponent.
pub const DECAY_TOLERANCE: f64 = 0.05;

/// Decay exponent that asymptotic flatness requires: `g - flat = o(r^(5/2 - n))`.
pub fn required_decay(n: usize) -> f64 {
    n as f64 - 2.5
}

/// Builds and validates a metric from its description.
pub fn metric_from_spec(chart: Arc<Chart>, spec: &MetricSpec) -> Result<MetricField> {
    let n = chart.n();
    let (metric, declared) = match spec {
        MetricSpec::Flat => return Ok(MetricField::flat(chart)),
        MetricSpec::Conformal { coefficients } => {
            match coefficients.first() {
                Some(&c0) if (c0 - 1.0).abs() < 1e-14 => {}
                _ => {
                    return Err(Error::InvalidSpec(
                        "conformal factor must tend to 1 (leading coefficient 1)".into(),
                    ))
                }
            }
            let metric = MetricField::conformal_polynomial(chart.clone(), coefficients)?;
            let declared = coefficients
                .iter()
                .enumerate()
                .skip(1)
                .find(|(_, c)| **c != 0.0)
                .map(|(k, _)| k as f64);
            (metric, declared)
        }
        MetricSpec::Axisym(spec) => {
            let comps = axisym_components(&chart, spec)?;
            let metric = MetricField::from_components(chart.clone(), comps)?;
            let analytic = [&spec.rr, &spec.rt, &spec.tt, &spec.az]
                .iter()
                .flat_map(|terms| terms.iter())
                .filter(|t| t.2 != 0.0)
                .map(|t| t.0)
                .min();
            if let Some(k) = analytic {
                if (k as f64) < spec.decay - DECAY_TOLERANCE {
                    return Err(Error::SlowDecay {
                        required: spec.decay,
                        measured: k as f64,
                    });
                }
            }
            (metric, analytic.map(|_| spec.decay))
        }
    };
    let Some(declared) = declared else {
        return Ok(metric);
    };
    // Exponents come from the analytic terms. A numeric fit over the far
    // window is biased by subleading terms and can flip sign when they
    // cancel, so it is not used to reject a spec.
    if declared <= required_decay(n) - DECAY_TOLERANCE {
        return Err(Error::SlowDecay {
            required: required_decay(n),
            measured: declared,
        });
    }
    Ok(metric)
}

fn axisym_components(chart: &Arc<Chart>, spec: &AxisymSpec) -> Result<FrameComponents> {
    let radial = chart.mode() == ChartMode::Radial;
    if radial {
        if spec.rr.iter().chain(&spec.tt).chain(&spec.az).any(|t| t.1 != 0) || !spec.rt.is_empty() {
            return Err(Error::InvalidSpec(
                "angular dependence requires an axisymmetric chart".into(),
            ));
        }
    }
    let eval = |terms: &[Term], s: f64, t: f64| terms.iter().map(|term| term.eval(s, t.cos())).sum::<f64>();
    let len = chart.len();
    let mut comps = FrameComponents::flat(len);
    for i in 0..chart.ns() {
        let s = chart.s()[i];
        for j in 0..chart.ntheta() {
            let t = chart.theta_at(j);
            let k = chart.index(i, j);
            comps.rr[k] = 1.0 + eval(&spec.rr, s, t);
            comps.rt[k] = if radial { 0.0 } else { t.sin() * eval(&spec.rt, s, t) };
            comps.tt[k] = 1.0 + eval(&spec.tt, s, t);
            comps.az[k] = 1.0 + eval(&spec.az, s, t);
        }
        // regularity on the axis: the two angular directions must agree at the poles
        for pole in [0.0, std::f64::consts::PI] {
            let tt = 1.0 + eval(&spec.tt, s, pole);
            let az = 1.0 + eval(&spec.az, s, pole);
            if (tt - az).abs() > 1e-12 * tt.abs().max(1.0) {
                return Err(Error::PoleIrregular(format!(
                    "g_tt = {tt} but g_az = {az} at s = {s}, theta = {pole}"
                )));
            }
        }
    }
    Ok(comps)
}
