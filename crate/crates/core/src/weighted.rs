//! Weighted Lebesgue/Sobolev norms on the exterior domain and decay fits.
//!
//! All quantities are taken with respect to the flat background: the
//! measure `r^(n-1) dr dOmega` and flat covariant derivatives.
//!
//! `||u||_{p,delta} = ( int |u|^p r^(-delta p - n) dmu0 )^(1/p)`, and for
//! `p = inf` the nodal maximum of `r^-delta |u|`. The Sobolev norm sums
//! `||D^j u||_{p, delta - j}` for `j = 0..=k`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fd::{self, Parity};
use crate::geometry::{Chart, ChartMode, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    /// Exponent; `f64::INFINITY` for the weighted supremum.
    pub p: f64,
    pub k: u32,
    pub delta: f64,
}

impl WeightedNormSpec {
    pub fn lebesgue(p: f64, delta: f64) -> Self {
        WeightedNormSpec { p, k: 0, delta }
    }

    pub fn sobolev(k: u32, p: f64, delta: f64) -> Self {
        WeightedNormSpec { p, k, delta }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::InvalidSpec(format!("norm exponent p = {} < 1", self.p)));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidSpec("non-finite decay weight".into()));
        }
        if self.k > 2 {
            return Err(Error::Unsupported(format!(
                "derivative order {} (orders 0..=2 are implemented)",
                self.k
            )));
        }
        Ok(())
    }
}

fn parse_p(text: &str) -> Result<f64> {
    match text.trim() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| Error::InvalidSpec(format!("exponent {other:?}: {e}"))),
    }
}

impl FromStr for WeightedNormSpec {
    type Err = Error;

    /// Accepts `L(p,delta)` and `W(k,p,delta)`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let inner = |prefix: &str| {
            text.strip_prefix(prefix)
                .and_then(|rest| rest.strip_suffix(')'))
                .map(|body| body.split(',').map(str::trim).collect::<Vec<_>>())
        };
        let bad = || Error::InvalidSpec(format!("norm spec {text:?} (expected L(p,delta) or W(k,p,delta))"));
        let spec = if let Some(parts) = inner("L(") {
            let [p, delta] = parts.as_slice() else { return Err(bad()) };
            WeightedNormSpec::lebesgue(parse_p(p)?, delta.parse().map_err(|_| bad())?)
        } else if let Some(parts) = inner("W(") {
            let [k, p, delta] = parts.as_slice() else { return Err(bad()) };
            WeightedNormSpec::sobolev(
                k.parse().map_err(|_| bad())?,
                parse_p(p)?,
                delta.parse().map_err(|_| bad())?,
            )
        } else {
            return Err(bad());
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for WeightedNormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.p.is_infinite() { "inf".to_string() } else { self.p.to_string() };
        if self.k == 0 {
            write!(f, "L({p},{})", self.delta)
        } else {
            write!(f, "W({},{p},{})", self.k, self.delta)
        }
    }
}

/// Pointwise magnitude of the `order`-th flat covariant derivative.
fn derivative_magnitude(u: &ScalarField, order: u32) -> Vec<f64> {
    let chart = u.chart();
    let vals = u.values();
    if order == 0 {
        return vals.iter().map(|v| v.abs()).collect();
    }
    let n = chart.n() as f64;
    let us = fd::d_s(chart, vals);
    let axi = chart.mode() == ChartMode::Axisymmetric;
    let ut = fd::d_theta(chart, vals, Parity::Even);
    let mut out = vec![0.0; vals.len()];
    if order == 1 {
        for (k, o) in out.iter_mut().enumerate() {
            let s = chart.s()[chart.split(k).0];
            *o = (s.powi(4) * us[k] * us[k] + s * s * ut[k] * ut[k]).sqrt();
        }
        return out;
    }
    let uss = fd::d_ss(chart, vals);
    let utt = fd::d_thth(chart, vals, Parity::Even);
    let ust = fd::d_theta(chart, &us, Parity::Even);
    for (k, o) in out.iter_mut().enumerate() {
        let (i, j) = chart.split(k);
        let s = chart.s()[i];
        let ur = -s * s * us[k];
        let urr = s.powi(4) * uss[k] + 2.0 * s.powi(3) * us[k];
        if !axi {
            *o = (urr * urr + (n - 1.0) * (s * ur).powi(2)).sqrt();
            continue;
        }
        let cot = chart.theta_at(j).cos() / chart.theta_at(j).sin();
        let urt = -s * s * ust[k];
        let h_rt = s * urt - s * s * ut[k];
        let h_tt = s * s * utt[k] + s * ur;
        let h_az = s * ur + s * s * cot * ut[k];
        *o = (urr * urr + 2.0 * h_rt * h_rt + h_tt * h_tt + (n - 2.0) * h_az * h_az).sqrt();
    }
    out
}

/// Value at the `s = 0` node by quadratic extrapolation from nodes 1..=3.
fn extrapolate_to_infinity(nodal: &mut [f64], chart: &Chart) {
    let nt = chart.ntheta();
    for j in 0..nt {
        let f = |i: usize| nodal[i * nt + j];
        nodal[j] = 3.0 * f(1) - 3.0 * f(2) + f(3);
    }
}

fn lebesgue(chart: &Chart, x: &[f64], p: f64, delta: f64) -> f64 {
    let nt = chart.ntheta();
    if p.is_infinite() {
        let mut w: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let s = chart.s()[k / nt];
                if s == 0.0 { 0.0 } else { s.powf(delta) * v }
            })
            .collect();
        if delta < 0.0 {
            extrapolate_to_infinity(&mut w, chart);
        } else {
            for j in 0..nt {
                w[j] = if delta == 0.0 { x[j] } else { 0.0 };
            }
        }
        return w.iter().copied().fold(0.0, f64::max);
    }
    // in s variables the integrand is |x|^p s^(delta p - 1)
    let mut integrand: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let s = chart.s()[k / nt];
            if s == 0.0 { 0.0 } else { v.powf(p) * s.powf(delta * p - 1.0) }
        })
        .collect();
    extrapolate_to_infinity(&mut integrand, chart);
    for v in integrand.iter_mut().take(nt) {
        *v = v.max(0.0);
    }
    chart.integrate(&integrand).max(0.0).powf(1.0 / p)
}

/// Weighted norm of `u` on its chart.
pub fn weighted_norm(u: &ScalarField, spec: &WeightedNormSpec) -> Result<f64> {
    spec.validate()?;
    let chart = u.chart();
    let mut total = 0.0;
    for j in 0..=spec.k {
        let x = derivative_magnitude(u, j);
        total += lebesgue(chart, &x, spec.p, spec.delta - j as f64);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Far region is `0 < s <= window`.
    pub window: f64,
    pub min_nodes: usize,
    /// Fits with relative residual above this are flagged.
    pub residual_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            window: 0.2,
            min_nodes: 8,
            residual_threshold: 1e-3,
        }
    }
}

/// Result of fitting `u ~ u_inf + a r^-q` in the far region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecayFit {
    /// `residual` is the largest deviation of the pure power law from the
    /// data over the window, relative to the largest `|u - u_inf|` there.
    Decaying {
        u_inf: f64,
        a: f64,
        q: f64,
        residual: f64,
    },
    Constant { u_inf: f64 },
    NoDecay { u_inf: f64, q: f64 },
}

impl DecayFit {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            DecayFit::Decaying { q, .. } => Some(*q),
            _ => None,
        }
    }

    pub fn coefficient(&self) -> f64 {
        match self {
            DecayFit::Decaying { a, .. } => *a,
            _ => 0.0,
        }
    }

    pub fn limit(&self) -> f64 {
        match self {
            DecayFit::Decaying { u_inf, .. }
            | DecayFit::Constant { u_inf }
            | DecayFit::NoDecay { u_inf, .. } => *u_inf,
        }
    }

    pub fn is_within(&self, options: &FitOptions) -> bool {
        match self {
            DecayFit::Decaying { residual, .. } => *residual <= options.residual_threshold,
            DecayFit::Constant { .. } => true,
            DecayFit::NoDecay { .. } => false,
        }
    }
}

/// Fits `u_inf + a r^-q` to the angular mean of `u` over the far region.
///
/// `u_inf` is the value at the `s = 0` node. The regression is done in log
/// variables, `ln|u - u_inf| = ln|a| + q ln s + c1 s + c2 s^2`, where the two
/// nuisance terms absorb the next orders of the expansion.
pub fn decay_fit(u: &ScalarField, options: &FitOptions) -> Result<DecayFit> {
    let chart = u.chart();
    let profile = u.angular_mean();
    let u_inf = profile[0];
    let window: Vec<usize> = (1..chart.ns())
        .filter(|&i| chart.s()[i] <= options.window)
        .collect();
    if window.len() < options.min_nodes {
        return Err(Error::InvalidSpec(format!(
            "decay fit needs {} nodes with s <= {}, chart has {}",
            options.min_nodes,
            options.window,
            window.len()
        )));
    }
    let dev: Vec<f64> = window.iter().map(|&i| profile[i] - u_inf).collect();
    let scale = dev.iter().fold(0f64, |m, d| m.max(d.abs()));
    if scale <= 1e-13 * u_inf.abs().max(1.0) {
        return Ok(DecayFit::Constant { u_inf });
    }
    let sign = if dev.iter().sum::<f64>() >= 0.0 { 1.0 } else { -1.0 };
    let rows: Vec<(f64, f64)> = window
        .iter()
        .zip(&dev)
        .filter(|(_, d)| d.abs() > 0.0)
        .map(|(&i, d)| (chart.s()[i], d.abs().ln()))
        .collect();
    if rows.len() < 4 {
        return Ok(DecayFit::NoDecay { u_inf, q: 0.0 });
    }
    let design = DMatrix::from_fn(rows.len(), 4, |r, c| {
        let s = rows[r].0;
        match c {
            0 => 1.0,
            1 => s.ln(),
            2 => s,
            _ => s * s,
        }
    });
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidSpec(format!("decay regression: {e}")))?;
    let q = coef[1];
    if !(q > 0.0) {
        return Ok(DecayFit::NoDecay { u_inf, q });
    }
    let a = sign * coef[0].exp();
    let residual = window
        .iter()
        .zip(&dev)
        .map(|(&i, d)| (d - a * chart.s()[i].powf(q)).abs())
        .fold(0.0, f64::max)
        / scale;
    Ok(DecayFit::Decaying {
        u_inf,
        a,
        q,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_specs() {
        let w: WeightedNormSpec = "W(2,2,-0.5)".parse().unwrap();
        assert_eq!(w, WeightedNormSpec::sobolev(2, 2.0, -0.5));
        let l: WeightedNormSpec = "L(inf,-1)".parse().unwrap();
        assert!(l.p.is_infinite() && l.k == 0 && l.delta == -1.0);
        assert_eq!(l.to_string().parse::<WeightedNormSpec>().unwrap(), l);
        assert!("L(0.5,-1)".parse::<WeightedNormSpec>().is_err());
        assert!("W(1,2)".parse::<WeightedNormSpec>().is_err());
        assert!("Q(2,1)".parse::<WeightedNormSpec>().is_err());
    }

    #[test]
    fn sup_norm_of_inverse_r() {
        let c = Chart::radial(3, 101).unwrap();
        let u = ScalarField::from_radial(c, 0.0, |r| 1.0 / r).unwrap();
        let v = weighted_norm(&u, &WeightedNormSpec::lebesgue(f64::INFINITY, -1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l2_norm_of_inverse_square() {
        // 4 pi int_1^inf r^-3 dr = 2 pi
        let c = Chart::axisymmetric(3, 201, 16).unwrap();
        let u = ScalarField::from_radial(c, 0.0, |r| r.powi(-2)).unwrap();
        let v = weighted_norm(&u, &WeightedNormSpec::lebesgue(2.0, -1.0)).unwrap();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-10, "{v}");
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let c = Chart::axisymmetric(4, 41, 8).unwrap();
        let u = ScalarField::constant(c, 0.0);
        for spec in ["L(2,-1)", "W(2,2,-0.5)", "W(1,inf,-2)", "L(1,0.3)"] {
            assert_eq!(weighted_norm(&u, &spec.parse().unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn gradient_norm_of_power() {
        // u = r^-2: |du| = 2 r^-3, ||du||_{2,-2}^2 = 4 pi int 4 r^-6 r^(4-3) r^2 dr = 16 pi / 2
        let c = Chart::radial(3, 401).unwrap();
        let u = ScalarField::from_radial(c, 0.0, |r| r.powi(-2)).unwrap();
        let full = weighted_norm(&u, &WeightedNormSpec::sobolev(1, 2.0, -1.0)).unwrap();
        let expected = (2.0 * PI).sqrt() + (8.0 * PI).sqrt();
        assert!((full - expected).abs() < 1e-8, "{full} vs {expected}");
    }

    #[test]
    fn hessian_norm_matches_between_chart_modes() {
        let u_of = |c| ScalarField::from_fn(c, |s: f64, _| s * s + 0.5 * s.powi(3)).unwrap();
        let spec = WeightedNormSpec::sobolev(2, 2.0, -1.0);
        let radial = weighted_norm(&u_of(Chart::radial(3, 201).unwrap()), &spec).unwrap();
        let axi = weighted_norm(&u_of(Chart::axisymmetric(3, 201, 12).unwrap()), &spec).unwrap();
        assert!((radial - axi).abs() < 1e-9 * radial, "{radial} vs {axi}");
    }

    #[test]
    fn fit_exact_member() {
        let c = Chart::radial(3, 201).unwrap();
        let u = ScalarField::from_radial(c, 1.0, |r| 1.0 + 1.0 / r).unwrap();
        let DecayFit::Decaying { u_inf, a, q, residual } = decay_fit(&u, &FitOptions::default()).unwrap() else {
            panic!()
        };
        assert_eq!(u_inf, 1.0);
        assert!((a - 1.0).abs() < 1e-10 && (q - 1.0).abs() < 1e-10 && residual < 1e-10);
    }

    #[test]
    fn fit_with_subleading_term() {
        let c = Chart::radial(3, 200).unwrap();
        let u = ScalarField::from_radial(c, 1.0, |r| 1.0 + 2.0 / r + 5.0 / r.powi(3)).unwrap();
        let fit = decay_fit(&u, &FitOptions::default()).unwrap();
        let DecayFit::Decaying { u_inf, a, q, .. } = fit else { panic!() };
        assert!((u_inf - 1.0).abs() < 1e-2);
        assert!((a - 2.0).abs() < 0.02, "a = {a}");
        assert!((q - 1.0).abs() < 0.01, "q = {q}");
    }

    #[test]
    fn fit_constant_and_no_decay() {
        let c = Chart::radial(3, 201).unwrap();
        let one = ScalarField::constant(c.clone(), 1.0);
        assert_eq!(decay_fit(&one, &FitOptions::default()).unwrap(), DecayFit::Constant { u_inf: 1.0 });
        // grows towards infinity in the window relative to its s = 0 value
        let grow = ScalarField::from_fn(c.clone(), |s, _| if s == 0.0 { 0.0 } else { 1.0 / s.sqrt() }).unwrap();
        assert!(matches!(decay_fit(&grow, &FitOptions::default()).unwrap(), DecayFit::NoDecay { .. }));
        let coarse = ScalarField::constant(Chart::radial(3, 11).unwrap(), 1.0);
        assert!(decay_fit(&coarse, &FitOptions::default()).is_err());
    }
}
