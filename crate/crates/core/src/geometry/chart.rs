//! Discretized exterior domain.
//!
//! The radial coordinate is compactified as `s = 1/r`, so the whole exterior
//! `r >= 1` maps to `s in [0, 1]`: `s = 0` is the point at infinity and
//! `s = 1` the inner boundary. The s-grid is uniform and includes both ends.
//!
//! In axisymmetric mode the polar angle uses a cell-centred grid
//! `theta_j = (j + 1/2) pi / n_theta`; the poles are cell faces, and pole
//! regularity is enforced by reflecting ghost cells across them.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartMode {
    Radial,
    Axisymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    n: usize,
    mode: ChartMode,
    s: Vec<f64>,
    theta: Vec<f64>,
    hs: f64,
    htheta: f64,
    s_weights: Vec<f64>,
    angular_weights: Vec<f64>,
    /// `sin^(n-2)` at the theta cell faces, `n_theta + 1` entries (zero at the poles).
    face_sin_power: Vec<f64>,
}

/// Area of the unit sphere `S^k`.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => sphere_area(k - 2) * 2.0 * PI / (k as f64 - 1.0),
    }
}

/// Composite Simpson weights on `m` uniform intervals of width `h`; when `m`
/// is odd the last three intervals use the 3/8 rule.
pub(crate) fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; m + 1];
    match m {
        0 => {}
        1 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
        }
        2 => {
            w[0] = h / 3.0;
            w[1] = 4.0 * h / 3.0;
            w[2] = h / 3.0;
        }
        3 => {
            for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                w[k] = 3.0 * h / 8.0 * c;
            }
        }
        _ => {
            let simpson_end = if m % 2 == 0 { m } else { m - 3 };
            for k in (0..simpson_end).step_by(2) {
                w[k] += h / 3.0;
                w[k + 1] += 4.0 * h / 3.0;
                w[k + 2] += h / 3.0;
            }
            if simpson_end < m {
                for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    w[simpson_end + k] += 3.0 * h / 8.0 * c;
                }
            }
        }
    }
    w
}

// Five-point Gauss-Legendre rule on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

fn integrate_sin_power(power: i32, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5.iter()
        .map(|&(x, w)| w * (mid + half * x).sin().powi(power))
        .sum::<f64>()
        * half
}

impl Chart {
    pub const MIN_S_NODES: usize = 6;

    pub fn radial(n: usize, ns: usize) -> Result<Arc<Chart>> {
        Self::build(n, ChartMode::Radial, ns, 1)
    }

    pub fn axisymmetric(n: usize, ns: usize, ntheta: usize) -> Result<Arc<Chart>> {
        Self::build(n, ChartMode::Axisymmetric, ns, ntheta)
    }

    pub fn new(n: usize, mode: ChartMode, ns: usize, ntheta: usize) -> Result<Arc<Chart>> {
        Self::build(n, mode, ns, ntheta)
    }

    fn build(n: usize, mode: ChartMode, ns: usize, ntheta: usize) -> Result<Arc<Chart>> {
        if n < 3 {
            return Err(Error::InvalidChart(format!("dimension {n} < 3")));
        }
        if ns < Self::MIN_S_NODES {
            return Err(Error::InvalidChart(format!(
                "{ns} radial nodes, need at least {}",
                Self::MIN_S_NODES
            )));
        }
        let hs = 1.0 / (ns - 1) as f64;
        let mut s: Vec<f64> = (0..ns).map(|i| i as f64 * hs).collect();
        s[ns - 1] = 1.0;
        let s_weights = simpson_weights(ns - 1, hs);

        let (theta, htheta, angular_weights, face_sin_power) = match mode {
            ChartMode::Radial => (Vec::new(), 0.0, vec![sphere_area(n - 1)], Vec::new()),
            ChartMode::Axisymmetric => {
                if ntheta < 2 {
                    return Err(Error::InvalidChart(format!(
                        "{ntheta} angular nodes, need at least 2"
                    )));
                }
                let h = PI / ntheta as f64;
                let theta: Vec<f64> = (0..ntheta).map(|j| (j as f64 + 0.5) * h).collect();
                let m = (n - 2) as i32;
                let azimuth = sphere_area(n - 2);
                let weights = (0..ntheta)
                    .map(|j| {
                        azimuth * integrate_sin_power(m, j as f64 * h, (j + 1) as f64 * h)
                    })
                    .collect();
                let faces = (0..=ntheta)
                    .map(|j| {
                        if j == 0 || j == ntheta {
                            0.0
                        } else {
                            (j as f64 * h).sin().powi(m)
                        }
                    })
                    .collect();
                (theta, h, weights, faces)
            }
        };

        Ok(Arc::new(Chart {
            n,
            mode,
            s,
            theta,
            hs,
            htheta,
            s_weights,
            angular_weights,
            face_sin_power,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ChartMode {
        self.mode
    }

    pub fn ns(&self) -> usize {
        self.s.len()
    }

    /// Number of angular nodes; 1 in radial mode.
    pub fn ntheta(&self) -> usize {
        match self.mode {
            ChartMode::Radial => 1,
            ChartMode::Axisymmetric => self.theta.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.ns() * self.ntheta()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.mode == ChartMode::Axisymmetric
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Polar angles of the cell centres (empty in radial mode).
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Polar angle for angular index `j`; the equator in radial mode.
    pub fn theta_at(&self, j: usize) -> f64 {
        match self.mode {
            ChartMode::Radial => 0.5 * PI,
            ChartMode::Axisymmetric => self.theta[j],
        }
    }

    /// `r = 1/s`, infinite at the `s = 0` node.
    pub fn r(&self, i: usize) -> f64 {
        1.0 / self.s[i]
    }

    pub fn hs(&self) -> f64 {
        self.hs
    }

    pub fn htheta(&self) -> f64 {
        self.htheta
    }

    /// Flattened node index, angle fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ntheta() + j
    }

    #[inline]
    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.ntheta(), k % self.ntheta())
    }

    /// Radial index of the inner boundary `r = 1`.
    pub fn boundary_row(&self) -> usize {
        self.ns() - 1
    }

    /// Quadrature weights for `int F ds` over `[0, 1]`.
    pub fn s_weights(&self) -> &[f64] {
        &self.s_weights
    }

    /// Measure on the unit sphere `S^(n-1)` carried by each angular node.
    pub fn angular_weights(&self) -> &[f64] {
        &self.angular_weights
    }

    pub(crate) fn face_sin_power(&self) -> &[f64] {
        &self.face_sin_power
    }

    /// Mean of `sin^(n-2)` over angular cell `j`.
    pub(crate) fn cell_sin_power(&self, j: usize) -> f64 {
        self.angular_weights[j] / (sphere_area(self.n - 2) * self.htheta)
    }

    /// Jacobian of the flat measure in `(s, angle)` variables,
    /// `r^(n-1) dr = s^-(n+1) ds`. Infinite at `s = 0`.
    pub fn flat_jacobian(&self, i: usize) -> f64 {
        self.s[i].powi(-(self.n as i32 + 1))
    }

    /// Integrates nodal values of an integrand (already multiplied by any
    /// Jacobian) over all angles and over `s` between nodes `lo` and `hi`.
    pub fn integrate_s_range(&self, values: &[f64], lo: usize, hi: usize) -> f64 {
        assert!(lo < hi && hi < self.ns());
        let w = simpson_weights(hi - lo, self.hs);
        let mut total = 0.0;
        for (k, i) in (lo..=hi).enumerate() {
            let mut ring = 0.0;
            for j in 0..self.ntheta() {
                ring += self.angular_weights[j] * values[self.index(i, j)];
            }
            total += w[k] * ring;
        }
        total
    }

    /// Integrates nodal integrand values over the whole chart.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.integrate_s_range(values, 0, self.ns() - 1)
    }

    /// Node values of `f(s, theta)`.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.ns() {
            for j in 0..self.ntheta() {
                out.push(f(self.s[i], self.theta_at(j)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grids() {
        assert!(Chart::radial(2, 50).is_err());
        assert!(Chart::radial(3, 4).is_err());
        assert!(Chart::axisymmetric(3, 50, 1).is_err());
    }

    #[test]
    fn node_invariants() {
        let c = Chart::axisymmetric(3, 41, 16).unwrap();
        assert_eq!(c.s()[0], 0.0);
        assert_eq!(*c.s().last().unwrap(), 1.0);
        assert!(c.s().windows(2).all(|w| w[1] > w[0]));
        assert!((1..c.ns()).all(|i| c.r(i) >= 1.0));
        assert!(c.s_weights().iter().all(|&w| w > 0.0));
        assert!(c.angular_weights().iter().all(|&w| w > 0.0));
        assert_eq!(c.len(), 41 * 16);
        assert_eq!(c.split(c.index(7, 5)), (7, 5));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn angular_weights_sum_to_sphere_area() {
        for n in 3..=5 {
            let c = Chart::axisymmetric(n, 11, 24).unwrap();
            let total: f64 = c.angular_weights().iter().sum();
            assert!((total - sphere_area(n - 1)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn shell_volume() {
        // {1 <= r <= 2} is s in [1/2, 1]
        for (n, mode) in [(3, ChartMode::Radial), (4, ChartMode::Axisymmetric)] {
            let c = Chart::new(n, mode, 201, 8).unwrap();
            let vals = c.sample(|s, _| s.powi(-(n as i32 + 1)));
            let vol = c.integrate_s_range(&vals, 100, 200);
            let exact = sphere_area(n - 1) * (2f64.powi(n as i32) - 1.0) / n as f64;
            assert!((vol - exact).abs() / exact < 1e-7, "n={n}: {vol} vs {exact}");
        }
    }

    #[test]
    fn simpson_odd_interval_count() {
        let w = simpson_weights(7, 1.0 / 7.0);
        let x: Vec<f64> = (0..8).map(|k| k as f64 / 7.0).collect();
        let integral: f64 = w.iter().zip(&x).map(|(w, x)| w * x.powi(3)).sum();
        assert!((integral - 0.25).abs() < 1e-14);
    }
}
