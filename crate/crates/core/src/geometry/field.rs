use std::sync::Arc;

use super::chart::Chart;
use crate::error::{Error, Result};

/// Nodal scalar data on a chart.
#[derive(Debug, Clone)]
pub struct ScalarField {
    chart: Arc<Chart>,
    values: Vec<f64>,
    decay: Option<f64>,
}

/// Nodal data on the `r = 1` boundary slice, one value per angular node.
#[derive(Debug, Clone)]
pub struct BoundaryField {
    chart: Arc<Chart>,
    values: Vec<f64>,
}

pub(crate) fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite(k)),
        None => Ok(()),
    }
}

impl ScalarField {
    pub fn new(chart: Arc<Chart>, values: Vec<f64>) -> Result<Self> {
        if values.len() != chart.len() {
            return Err(Error::SizeMismatch {
                expected: chart.len(),
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(ScalarField {
            chart,
            values,
            decay: None,
        })
    }

    pub fn constant(chart: Arc<Chart>, value: f64) -> Self {
        let values = vec![value; chart.len()];
        ScalarField {
            chart,
            values,
            decay: None,
        }
    }

    /// Samples `f(s, theta)`; `s = 0` is infinity.
    pub fn from_fn(chart: Arc<Chart>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = chart.sample(f);
        Self::new(chart, values)
    }

    /// Samples a function of `r` only. The `s = 0` node receives `limit`.
    pub fn from_radial(chart: Arc<Chart>, limit: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(chart, |s, _| if s == 0.0 { limit } else { f(1.0 / s) })
    }

    pub fn with_decay(mut self, delta: f64) -> Self {
        self.decay = Some(delta);
        self
    }

    pub fn decay(&self) -> Option<f64> {
        self.decay
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.chart.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.chart.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !same_chart(&self.chart, &other.chart) {
            return Err(Error::ChartMismatch);
        }
        Self::new(
            self.chart.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node index and value of the minimum (lowest index wins ties).
    pub fn argmin(&self) -> (usize, f64) {
        let mut best = (0, self.values[0]);
        for (k, &v) in self.values.iter().enumerate() {
            if v < best.1 {
                best = (k, v);
            }
        }
        best
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The `r = 1` slice.
    pub fn boundary(&self) -> BoundaryField {
        let i = self.chart.boundary_row();
        let nt = self.chart.ntheta();
        BoundaryField {
            chart: self.chart.clone(),
            values: self.values[i * nt..(i + 1) * nt].to_vec(),
        }
    }

    /// Angular average at each radial node (weighted by the sphere measure).
    pub fn angular_mean(&self) -> Vec<f64> {
        let w = self.chart.angular_weights();
        let total: f64 = w.iter().sum();
        self.values
            .chunks(self.chart.ntheta())
            .map(|row| row.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / total)
            .collect()
    }
}

impl BoundaryField {
    pub fn new(chart: Arc<Chart>, values: Vec<f64>) -> Result<Self> {
        if values.len() != chart.ntheta() {
            return Err(Error::SizeMismatch {
                expected: chart.ntheta(),
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(BoundaryField { chart, values })
    }

    pub fn constant(chart: Arc<Chart>, value: f64) -> Self {
        let values = vec![value; chart.ntheta()];
        BoundaryField { chart, values }
    }

    pub fn from_fn(chart: Arc<Chart>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..chart.ntheta()).map(|j| f(chart.theta_at(j))).collect();
        Self::new(chart, values)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.chart.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &BoundaryField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
