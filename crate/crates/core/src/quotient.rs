//! Upper bounds for the Sobolev quotient
//! `Q(g) = inf (int |grad f|^2 + c_n R f^2) / ||f||^2_{2n/(n-2)}`
//! over compactly supported trials, `c_n = (n-2)/(4(n-1))`.
//!
//! Only upper bounds are produced: a positive value is evidence, not proof,
//! that `Q > 0`; a nonpositive value disproves it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fd::{self, Parity};
use crate::geometry::{scalar_curvature, MetricField, ScalarField};

pub fn quotient_coefficient(n: usize) -> f64 {
    let n = n as f64;
    (n - 2.0) / (4.0 * (n - 1.0))
}

/// Numerator and denominator of the quotient, with `R` supplied.
fn quotient_parts(g: &MetricField, r: &ScalarField, f: &ScalarField) -> Result<(f64, f64)> {
    let chart = g.chart();
    if !crate::geometry::field::same_chart(chart, f.chart()) {
        return Err(Error::ChartMismatch);
    }
    let n = chart.n();
    let nt = chart.ntheta();
    let vals = f.values();
    if vals.iter().all(|&v| v == 0.0) {
        return Err(Error::QuotientUndefined("trial function is identically zero".into()));
    }
    let edge = (0..nt).chain(chart.boundary_row() * nt..chart.len());
    if let Some(k) = edge.into_iter().find(|&k| vals[k] != 0.0) {
        return Err(Error::QuotientUndefined(format!(
            "trial is not compactly supported (nonzero at node {k})"
        )));
    }
    let co = g.coefficients();
    let fs = fd::d_s(chart, vals);
    let ft = fd::d_theta(chart, vals, Parity::Even);
    let cn = quotient_coefficient(n);
    let p = 2.0 * n as f64 / (n as f64 - 2.0);
    let mut num = vec![0.0; chart.len()];
    let mut den = vec![0.0; chart.len()];
    for k in nt..chart.len() {
        let (i, _) = chart.split(k);
        let s = chart.s()[i];
        let fr = -s * s * fs[k];
        let fth = s * ft[k];
        let grad2 = co.a[k] * fr * fr + 2.0 * co.b[k] * fr * fth + co.c[k] * fth * fth;
        let jac = co.mu[k] * chart.flat_jacobian(i);
        num[k] = (grad2 + cn * r.values()[k] * vals[k] * vals[k]) * jac;
        den[k] = vals[k].abs().powf(p) * jac;
    }
    Ok((chart.integrate(&num), chart.integrate(&den).powf(2.0 / p)))
}

/// The quotient of one trial. The trial must vanish on the boundary row and
/// at infinity.
pub fn rayleigh_quotient(g: &MetricField, f: &ScalarField) -> Result<f64> {
    let r = scalar_curvature(g)?;
    let (num, den) = quotient_parts(g, &r, f)?;
    Ok(num / den)
}

/// `exp(1 - 1/(1 - x^2))` on `|x| < 1`, zero outside; equals 1 at `x = 0`.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialProfile {
    /// `bump((r - center) / width)`.
    Bump,
    /// `(1 + ((r - center)/width)^2)^(-(n-2)/2)` times the cutoffs.
    Bubble,
}

/// One trial's parameters; `tilt` multiplies by `1 + tilt cos(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub center: f64,
    pub width: f64,
    pub tilt: f64,
}

/// Trials supported in `1 + cutoff_width < r < cutoff_radius`, tapered to
/// zero over `cutoff_width` at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrialFamily {
    pub profile: TrialProfile,
    pub center: (f64, f64),
    pub width: (f64, f64),
    pub tilt: (f64, f64),
    pub cutoff_radius: f64,
    pub cutoff_width: f64,
}

impl Default for TrialFamily {
    fn default() -> Self {
        TrialFamily {
            profile: TrialProfile::Bump,
            center: (2.0, 6.0),
            width: (0.3, 1.5),
            tilt: (0.0, 0.0),
            cutoff_radius: 10.0,
            cutoff_width: 0.25,
        }
    }
}

impl TrialFamily {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !(ordered(self.center) && ordered(self.width) && ordered(self.tilt)) {
            return Err(Error::InvalidSpec("trial family ranges must be finite with lo <= hi".into()));
        }
        if !(self.width.0 > 0.0 && self.cutoff_width > 0.0 && self.cutoff_radius > 1.0 + 2.0 * self.cutoff_width) {
            return Err(Error::InvalidSpec("trial family widths and cutoff radius out of range".into()));
        }
        if self.tilt.0 <= -1.0 || self.tilt.1 >= 1.0 {
            return Err(Error::InvalidSpec("tilt must lie in (-1, 1)".into()));
        }
        Ok(())
    }

    pub fn value(&self, n: usize, p: &TrialParams, r: f64, theta: f64) -> f64 {
        let cw = self.cutoff_width;
        let inner = smooth_step((r - 1.0 - cw) / cw);
        let outer = smooth_step((self.cutoff_radius - r) / cw);
        let x = (r - p.center) / p.width;
        let radial = match self.profile {
            TrialProfile::Bump => bump(x),
            TrialProfile::Bubble => (1.0 + x * x).powf(-0.5 * (n as f64 - 2.0)),
        };
        inner * outer * radial * (1.0 + p.tilt * theta.cos())
    }

    pub fn trial(&self, g: &MetricField, p: &TrialParams) -> Result<ScalarField> {
        let n = g.n();
        ScalarField::from_fn(g.chart().clone(), |s, t| if s == 0.0 { 0.0 } else { self.value(n, p, 1.0 / s, t) })
    }

    fn midpoint(&self) -> TrialParams {
        TrialParams {
            center: 0.5 * (self.center.0 + self.center.1),
            width: 0.5 * (self.width.0 + self.width.1),
            tilt: 0.5 * (self.tilt.0 + self.tilt.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientEstimate {
    /// Smallest quotient found: an upper bound for `Q`.
    pub q_upper: f64,
    pub argmin: TrialParams,
    pub evaluations: usize,
    /// `q_upper > 0`. Not a proof of positivity.
    pub positivity_evidence: bool,
}

/// Coordinate search over the family's parameter box with at most `budget`
/// quotient evaluations. Deterministic; ties keep the earlier point.
pub fn estimate_sobolev_quotient(g: &MetricField, family: &TrialFamily, budget: usize) -> Result<QuotientEstimate> {
    if budget == 0 {
        return Err(Error::InvalidSpec("quotient search budget must be positive".into()));
    }
    family.validate()?;
    let r = scalar_curvature(g)?;
    let eval = |p: &TrialParams| -> Result<f64> {
        let f = family.trial(g, p)?;
        let (num, den) = quotient_parts(g, &r, &f)?;
        Ok(num / den)
    };
    let ranges = [family.center, family.width, family.tilt];
    let mut best = family.midpoint();
    let mut best_q = eval(&best)?;
    let mut used = 1;
    let mut steps: Vec<f64> = ranges.iter().map(|(lo, hi)| 0.25 * (hi - lo)).collect();
    let get = |p: &TrialParams, d: usize| [p.center, p.width, p.tilt][d];
    let set = |p: &mut TrialParams, d: usize, v: f64| match d {
        0 => p.center = v,
        1 => p.width = v,
        _ => p.tilt = v,
    };
    'search: while used < budget && steps.iter().any(|&s| s > 1e-6) {
        let mut improved = false;
        for d in 0..3 {
            if steps[d] <= 1e-6 {
                continue;
            }
            for sign in [-1.0, 1.0] {
                if used >= budget {
                    break 'search;
                }
                let mut cand = best;
                let v = (get(&best, d) + sign * steps[d]).clamp(ranges[d].0, ranges[d].1);
                if v == get(&best, d) {
                    continue;
                }
                set(&mut cand, d, v);
                let q = eval(&cand)?;
                used += 1;
                if q < best_q {
                    best_q = q;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    Ok(QuotientEstimate {
        q_upper: best_q,
        argmin: best,
        evaluations: used,
        positivity_evidence: best_q > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    #[test]
    fn zero_and_non_compact_trials_rejected() {
        let g = MetricField::flat(Chart::radial(3, 101).unwrap());
        let zero = ScalarField::constant(g.chart().clone(), 0.0);
        assert!(matches!(rayleigh_quotient(&g, &zero), Err(Error::QuotientUndefined(_))));
        let one = ScalarField::from_fn(g.chart().clone(), |s, _| s * (1.0 - s) + 0.1 * s).unwrap();
        assert!(rayleigh_quotient(&g, &one).is_err());
    }

    #[test]
    fn scaling_invariance() {
        let g = MetricField::flat(Chart::axisymmetric(3, 201, 8).unwrap());
        let fam = TrialFamily::default();
        let p = TrialParams { center: 3.0, width: 1.0, tilt: 0.3 };
        let f = fam.trial(&g, &p).unwrap();
        let q1 = rayleigh_quotient(&g, &f).unwrap();
        let q2 = rayleigh_quotient(&g, &f.map(|v| -2.5 * v).unwrap()).unwrap();
        assert!(q1 > 0.0);
        assert!(((q1 - q2) / q1).abs() < 1e-12);
    }

    #[test]
    fn search_is_deterministic_and_bounded() {
        let g = MetricField::flat(Chart::radial(3, 401).unwrap());
        let fam = TrialFamily::default();
        let a = estimate_sobolev_quotient(&g, &fam, 15).unwrap();
        let b = estimate_sobolev_quotient(&g, &fam, 15).unwrap();
        assert_eq!(a, b);
        assert!(a.evaluations <= 15 && a.positivity_evidence);
        assert!(estimate_sobolev_quotient(&g, &fam, 0).is_err());
    }
}
