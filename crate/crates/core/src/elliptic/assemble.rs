//! Finite-volume style discretization of `a Delta_g u + c u = f`.
//!
//! Interior rows use the radial flux `s^(3-n) mu a u_s` with face weights
//! that are exact for radial harmonic functions of the flat metric, an
//! angular flux through the theta cell faces (no flux through the poles),
//! and centred differences for the mixed terms of non-diagonal metrics.
//! Row `s = 0` imposes the limit at infinity, row `s = 1` the boundary
//! condition. Rows are scaled so that the diagonal is positive.

use std::io::{self, BufRead, Write};

use super::{InnerBoundary, LinearProblem};
use crate::error::{Error, Result};
use crate::geometry::fd::{self, Parity};
use crate::geometry::Chart;

/// Compressed sparse row matrix with right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Lower and upper bandwidth.
    pub kl: usize,
    pub ku: usize,
}

impl SparseSystem {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(c, v)| (i, c, v)))
    }

    /// `||b - A x||_2 / ||b||_2` (absolute when `b = 0`).
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.matvec(x, &mut ax);
        let r: f64 = ax.iter().zip(&self.rhs).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        let b: f64 = self.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if b > 0.0 { r / b } else { r }
    }

    pub fn one_norm(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (_, c, v) in self.triplets() {
            col[c] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// Text dump:
    ///
    /// ```text
    /// % scalarflat sparse system v1
    /// <rows> <cols> <nnz>
    /// <row> <col> <value>      (nnz lines, 0-based, CSR order)
    /// rhs
    /// <value>                  (rows lines)
    /// ```
    pub fn write_triplets(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "% scalarflat sparse system v1")?;
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r} {c} {v}")?;
        }
        writeln!(out, "rhs")?;
        for v in &self.rhs {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`write_triplets`](Self::write_triplets).
    pub fn read_triplets(input: impl BufRead) -> Result<SparseSystem> {
        let bad = |line: usize, what: &str| Error::Io(format!("triplet dump line {line}: {what}"));
        let mut lines = input.lines().enumerate();
        let mut next = || -> Result<(usize, String)> {
            match lines.next() {
                Some((k, Ok(l))) => Ok((k + 1, l)),
                Some((k, Err(e))) => Err(bad(k + 1, &e.to_string())),
                None => Err(Error::Io("triplet dump truncated".into())),
            }
        };
        let (k, header) = next()?;
        if !header.starts_with("% scalarflat sparse system") {
            return Err(bad(k, "missing header"));
        }
        let (k, dims) = next()?;
        let d: Vec<usize> = dims
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(k, "bad dimensions")))
            .collect::<Result<_>>()?;
        let [n, _, nnz] = d[..] else { return Err(bad(k, "expected rows cols nnz")) };
        let mut rows = vec![Vec::new(); n];
        for _ in 0..nnz {
            let (k, l) = next()?;
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(bad(k, "expected row col value"));
            }
            let r: usize = t[0].parse().map_err(|_| bad(k, "row"))?;
            let c: usize = t[1].parse().map_err(|_| bad(k, "col"))?;
            let v: f64 = t[2].parse().map_err(|_| bad(k, "value"))?;
            if r >= n || c >= n {
                return Err(bad(k, "index out of range"));
            }
            rows[r].push((c, v));
        }
        let (k, marker) = next()?;
        if marker.trim() != "rhs" {
            return Err(bad(k, "expected rhs marker"));
        }
        let mut rhs = Vec::with_capacity(n);
        for _ in 0..n {
            let (k, l) = next()?;
            rhs.push(l.trim().parse().map_err(|_| bad(k, "rhs value"))?);
        }
        Ok(from_rows(rows, rhs))
    }
}

fn from_rows(rows: Vec<Vec<(usize, f64)>>, rhs: Vec<f64>) -> SparseSystem {
    let n = rows.len();
    let mut row_ptr = vec![0];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let (mut kl, mut ku) = (0, 0);
    for (i, row) in rows.into_iter().enumerate() {
        for (c, v) in row {
            kl = kl.max(i.saturating_sub(c));
            ku = ku.max(c.saturating_sub(i));
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    SparseSystem { n, row_ptr, cols, vals, rhs, kl, ku }
}

/// Accumulates one row, merging repeated columns, kept sorted.
struct RowBuilder(Vec<(usize, f64)>);

impl RowBuilder {
    fn add(&mut self, col: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        match self.0.iter_mut().find(|(c, _)| *c == col) {
            Some(e) => e.1 += v,
            None => self.0.push((col, v)),
        }
    }

    fn finish(mut self) -> Vec<(usize, f64)> {
        self.0.sort_by_key(|e| e.0);
        self.0
    }
}

/// Geometric data of the interior stencil, independent of the data fields.
pub(crate) struct StencilCoefficients {
    a: Vec<f64>,
    b: Vec<f64>,
    mu: Vec<f64>,
    mu_a: Vec<f64>,
    mu_c: Vec<f64>,
    mu_b_s: Vec<f64>,
    mu_b_t: Vec<f64>,
    mixed: bool,
}

impl StencilCoefficients {
    pub(crate) fn new(problem: &LinearProblem) -> Self {
        let chart = problem.metric.chart();
        let co = problem.metric.coefficients();
        let len = chart.len();
        let mu_b: Vec<f64> = (0..len).map(|k| co.mu[k] * co.b[k]).collect();
        let mixed = co.b.iter().any(|&b| b != 0.0);
        StencilCoefficients {
            mu_a: (0..len).map(|k| co.mu[k] * co.a[k]).collect(),
            mu_c: (0..len).map(|k| co.mu[k] * co.c[k]).collect(),
            mu_b_s: if mixed { fd::d_s(chart, &mu_b) } else { vec![0.0; len] },
            mu_b_t: if mixed { fd::d_theta(chart, &mu_b, Parity::Odd) } else { vec![0.0; len] },
            a: co.a,
            b: co.b,
            mu: co.mu,
            mixed,
        }
    }
}

/// Radial face weight: exact for `A + B s^(n-2)`.
fn face_weight(n: usize, s0: f64, s1: f64) -> f64 {
    let m = n as i32 - 2;
    m as f64 * (s1 - s0) / (s1.powi(m) - s0.powi(m))
}

pub(crate) fn check_charts(problem: &LinearProblem) -> Result<()> {
    let g = &problem.metric;
    g.check_chart(problem.c.chart())?;
    g.check_chart(problem.source.chart())?;
    match &problem.boundary {
        InnerBoundary::Dirichlet(v) => g.check_chart(v.chart()),
        InnerBoundary::Robin { gamma, h } => {
            g.check_chart(gamma.chart())?;
            g.check_chart(h.chart())
        }
    }
}

/// Assembles the sparse system of a linear problem.
pub fn assemble(problem: &LinearProblem) -> Result<SparseSystem> {
    Ok(assemble_scaled(problem)?.0)
}

/// The assembled system and the factor `1/d` each row was multiplied by.
pub(crate) fn assemble_scaled(problem: &LinearProblem) -> Result<(SparseSystem, Vec<f64>)> {
    check_charts(problem)?;
    if !(problem.a > 0.0) || !problem.a.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "operator multiplier must be positive, got {}",
            problem.a
        )));
    }
    let chart = problem.metric.chart();
    let st = StencilCoefficients::new(problem);
    let rows: Vec<Vec<(usize, f64)>> = (0..chart.len()).map(|k| matrix_row(chart, problem, &st, k)).collect();
    let mut rhs = assemble_rhs(problem);
    let mut scaled = Vec::with_capacity(rows.len());
    let mut factors = Vec::with_capacity(rows.len());
    for (k, row) in rows.into_iter().enumerate() {
        let f = 1.0 / diagonal_scale(&row, k);
        rhs[k] *= f;
        factors.push(f);
        scaled.push(row.into_iter().map(|(c, v)| (c, v * f)).collect());
    }
    Ok((from_rows(scaled, rhs), factors))
}

/// Rows are equilibrated by their diagonal (or largest entry if the
/// diagonal is not positive, leaving the sign for the pivot check).
fn diagonal_scale(row: &[(usize, f64)], k: usize) -> f64 {
    match row.iter().find(|(c, _)| *c == k) {
        Some(&(_, d)) if d > 0.0 => d,
        _ => row.iter().fold(0f64, |m, (_, v)| m.max(v.abs())).max(f64::MIN_POSITIVE),
    }
}

/// Right-hand side for the matrix of [`assemble`].
pub(crate) fn assemble_rhs_scaled(problem: &LinearProblem, factors: &[f64]) -> Vec<f64> {
    let mut rhs = assemble_rhs(problem);
    for (r, f) in rhs.iter_mut().zip(factors) {
        *r *= f;
    }
    rhs
}

fn assemble_rhs(problem: &LinearProblem) -> Vec<f64> {
    let chart = problem.metric.chart();
    let nt = chart.ntheta();
    let last = chart.boundary_row();
    let mut rhs = vec![0.0; chart.len()];
    for (k, r) in rhs.iter_mut().enumerate() {
        let (i, j) = chart.split(k);
        *r = if i == 0 {
            problem.limit
        } else if i == last {
            match &problem.boundary {
                InnerBoundary::Dirichlet(v) => v.values()[j],
                InnerBoundary::Robin { h, .. } => h.values()[j],
            }
        } else {
            let s = chart.s()[i];
            -problem.source.values()[k] / (problem.a * s * s)
        };
    }
    debug_assert_eq!(rhs.len(), chart.ns() * nt);
    rhs
}

fn matrix_row(chart: &Chart, problem: &LinearProblem, st: &StencilCoefficients, k: usize) -> Vec<(usize, f64)> {
    let (i, j) = chart.split(k);
    let nt = chart.ntheta();
    let last = chart.boundary_row();
    let mut row = RowBuilder(Vec::with_capacity(9));
    if i == 0 {
        row.add(k, 1.0);
        return row.finish();
    }
    let theta_nb = |j: usize, d: isize| -> usize {
        // even reflection across the poles
        let jj = j as isize + d;
        if jj < 0 {
            0
        } else if jj as usize >= nt {
            nt - 1
        } else {
            jj as usize
        }
    };
    if i == last {
        match &problem.boundary {
            InnerBoundary::Dirichlet(_) => row.add(k, 1.0),
            InnerBoundary::Robin { gamma, .. } => {
                let h = chart.hs();
                let sa = st.a[k].sqrt();
                row.add(k, sa * 1.5 / h + gamma.values()[j]);
                row.add(k - nt, -sa * 2.0 / h);
                row.add(k - 2 * nt, sa * 0.5 / h);
                if chart.is_axisymmetric() && st.b[k] != 0.0 {
                    let w = -st.b[k] / sa / (2.0 * chart.htheta());
                    row.add(chart.index(i, theta_nb(j, 1)), w);
                    row.add(chart.index(i, theta_nb(j, -1)), -w);
                }
            }
        }
        return row.finish();
    }

    let n = chart.n();
    let nf = n as f64;
    let s = chart.s()[i];
    let h = chart.hs();
    let mu = st.mu[k];
    // row = -(scaled operator) - c / (a s^2)
    let radial = s.powi(n as i32 - 1) / (mu * h * h);
    let wp = face_weight(n, s, chart.s()[i + 1]) * 0.5 * (st.mu_a[k] + st.mu_a[k + nt]);
    let wm = face_weight(n, chart.s()[i - 1], s) * 0.5 * (st.mu_a[k] + st.mu_a[k - nt]);
    row.add(k + nt, -radial * wp);
    row.add(k - nt, -radial * wm);
    row.add(k, radial * (wp + wm));

    if chart.is_axisymmetric() {
        let ht = chart.htheta();
        let faces = chart.face_sin_power();
        let cell = chart.cell_sin_power(j);
        let scale = 1.0 / (mu * cell * ht * ht);
        if j + 1 < nt {
            let w = faces[j + 1] * 0.5 * (st.mu_c[k] + st.mu_c[k + 1]) * scale;
            row.add(k + 1, -w);
            row.add(k, w);
        }
        if j > 0 {
            let w = faces[j] * 0.5 * (st.mu_c[k] + st.mu_c[k - 1]) * scale;
            row.add(k - 1, -w);
            row.add(k, w);
        }
        if st.mixed {
            let b = st.b[k];
            let t = chart.theta_at(j);
            let cot = t.cos() / t.sin();
            let coef_t = -s * st.mu_b_s[k] / mu + (nf - 2.0) * b;
            let coef_s = -s * st.mu_b_t[k] / mu - (nf - 2.0) * s * cot * b;
            let jp = theta_nb(j, 1);
            let jm = theta_nb(j, -1);
            // u_theta
            row.add(chart.index(i, jp), -coef_t / (2.0 * ht));
            row.add(chart.index(i, jm), coef_t / (2.0 * ht));
            // u_s
            row.add(k + nt, -coef_s / (2.0 * h));
            row.add(k - nt, coef_s / (2.0 * h));
            // -2 s b u_s_theta
            let w = 2.0 * s * b / (4.0 * h * ht);
            row.add(chart.index(i + 1, jp), w);
            row.add(chart.index(i + 1, jm), -w);
            row.add(chart.index(i - 1, jp), -w);
            row.add(chart.index(i - 1, jm), w);
        }
    }
    row.add(k, -problem.c.values()[k] / (problem.a * s * s));
    row.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryField, MetricField, ScalarField};

    #[test]
    fn dump_round_trip() {
        let c = Chart::axisymmetric(3, 8, 4).unwrap();
        let p = LinearProblem::new(MetricField::flat(c.clone()), 1.0)
            .with_dirichlet(BoundaryField::constant(c.clone(), 1.0))
            .with_source(ScalarField::from_fn(c, |s, t| s * t.cos()).unwrap());
        let sys = assemble(&p).unwrap();
        let mut buf = Vec::new();
        sys.write_triplets(&mut buf).unwrap();
        let back = SparseSystem::read_triplets(&buf[..]).unwrap();
        assert_eq!(back, sys);
        assert!(SparseSystem::read_triplets(&b"nonsense\n"[..]).is_err());
    }

    #[test]
    fn interior_pattern_is_symmetric() {
        let c = Chart::axisymmetric(3, 10, 6).unwrap();
        let sys = assemble(&LinearProblem::new(MetricField::flat(c.clone()), 1.0)).unwrap();
        let nt = c.ntheta();
        let has = |r: usize, col: usize| sys.row(r).any(|(cc, _)| cc == col);
        for i in 2..c.ns() - 2 {
            for j in 0..nt {
                let k = c.index(i, j);
                for (col, _) in sys.row(k) {
                    assert!(has(col, k), "({k}, {col})");
                }
            }
        }
        assert!(sys.kl <= 2 * nt && sys.ku <= nt + 1);
    }

    #[test]
    fn rows_have_positive_diagonal() {
        let c = Chart::axisymmetric(4, 12, 6).unwrap();
        let g = MetricField::conformal_polynomial(c.clone(), &[1.0, 0.0, 0.5]).unwrap();
        let p = LinearProblem::new(g, 2.0).with_robin(
            BoundaryField::constant(c.clone(), 1.0),
            BoundaryField::constant(c, 0.0),
        );
        let sys = assemble(&p).unwrap();
        for k in 0..sys.n {
            let d = sys.row(k).find(|(c, _)| *c == k).unwrap().1;
            assert!(d > 0.0);
        }
    }
}
