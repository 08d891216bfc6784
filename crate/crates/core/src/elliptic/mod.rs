//! Linear elliptic problems `a Delta_g u + c u = f` on the exterior domain.
//!
//! Every problem carries a limit `u -> L` at infinity (imposed exactly at
//! `s = 0`) and one condition on the inner boundary: Dirichlet data, or a
//! Robin condition `du/deta + gamma u = h` with `eta` pointing away from
//! infinity.
//!
//! The default solver is GMRES preconditioned by a banded LU factorization
//! of the assembled matrix. The factorization doubles as the discrete
//! invertibility check: a non-positive pivot is reported as
//! [`Error::DiscreteIsomorphism`].

mod assemble;
mod banded;
mod krylov;

use serde::{Deserialize, Serialize};

pub use assemble::{assemble, SparseSystem};
pub use banded::BandedLu;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryField, Chart, MetricField, ScalarField};
use krylov::{gmres, Operator, Preconditioner as Precond};

#[derive(Debug, Clone)]
pub enum InnerBoundary {
    Dirichlet(BoundaryField),
    Robin { gamma: BoundaryField, h: BoundaryField },
}

#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub metric: MetricField,
    /// Multiplier of the Laplacian, must be positive.
    pub a: f64,
    pub c: ScalarField,
    pub source: ScalarField,
    pub boundary: InnerBoundary,
    /// Value at infinity.
    pub limit: f64,
}

impl LinearProblem {
    /// `a Delta_g u = 0`, `u = 0` on the boundary, `u -> 0`.
    pub fn new(metric: MetricField, a: f64) -> Self {
        let chart = metric.chart().clone();
        LinearProblem {
            c: ScalarField::constant(chart.clone(), 0.0),
            source: ScalarField::constant(chart.clone(), 0.0),
            boundary: InnerBoundary::Dirichlet(BoundaryField::constant(chart, 0.0)),
            limit: 0.0,
            metric,
            a,
        }
    }

    pub fn with_c(mut self, c: ScalarField) -> Self {
        self.c = c;
        self
    }

    pub fn with_source(mut self, source: ScalarField) -> Self {
        self.source = source;
        self
    }

    pub fn with_dirichlet(mut self, values: BoundaryField) -> Self {
        self.boundary = InnerBoundary::Dirichlet(values);
        self
    }

    pub fn with_robin(mut self, gamma: BoundaryField, h: BoundaryField) -> Self {
        self.boundary = InnerBoundary::Robin { gamma, h };
        self
    }

    pub fn with_limit(mut self, limit: f64) -> Self {
        self.limit = limit;
        self
    }

    pub fn chart(&self) -> &std::sync::Arc<Chart> {
        self.metric.chart()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreconditionerKind {
    BandedLu,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative algebraic residual `||b - Ax|| / ||b||`.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-11,
            max_iter: 200,
            restart: 40,
            preconditioner: PreconditionerKind::BandedLu,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone)]
pub struct LinearSolveResult {
    pub solution: ScalarField,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

struct Jacobi(Vec<f64>);

impl Precond for Jacobi {
    fn apply_inverse(&self, x: &mut [f64]) {
        for (v, d) in x.iter_mut().zip(&self.0) {
            *v *= d;
        }
    }
}

impl Precond for BandedLu {
    fn apply_inverse(&self, x: &mut [f64]) {
        self.solve_in_place(x);
    }
}

impl Operator for SparseSystem {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y);
    }
}

enum Factor {
    Lu(BandedLu),
    Jacobi(Jacobi),
}

/// An assembled and factorized operator, reusable for many right-hand sides
/// that share its matrix (same metric, multiplier, `c` and Robin `gamma`).
pub struct LinearSolver {
    system: SparseSystem,
    row_factors: Vec<f64>,
    factor: Factor,
    options: SolverOptions,
}

impl LinearSolver {
    pub fn new(problem: &LinearProblem, options: SolverOptions) -> Result<Self> {
        if !(options.tol > 0.0) {
            return Err(Error::InvalidSpec(format!("tolerance must be positive, got {}", options.tol)));
        }
        let (system, row_factors) = assemble::assemble_scaled(problem)?;
        let factor = match options.preconditioner {
            PreconditionerKind::BandedLu => {
                Factor::Lu(BandedLu::factor(system.n, system.kl, system.ku, system.triplets())?)
            }
            PreconditionerKind::Jacobi => {
                let mut d = vec![0.0; system.n];
                for (r, c, v) in system.triplets() {
                    if r == c {
                        d[r] = 1.0 / v;
                    }
                }
                Factor::Jacobi(Jacobi(d))
            }
        };
        Ok(LinearSolver {
            system,
            row_factors,
            factor,
            options,
        })
    }

    pub fn system(&self) -> &SparseSystem {
        &self.system
    }

    /// Solves the problem the solver was built from.
    pub fn solve(&self, chart: &std::sync::Arc<Chart>) -> Result<LinearSolveResult> {
        self.solve_rhs(chart, &self.system.rhs)
    }

    /// Solves with the right-hand side of `problem`, which must share the
    /// matrix this solver was assembled from.
    pub fn solve_problem(&self, problem: &LinearProblem) -> Result<LinearSolveResult> {
        assemble::check_charts(problem)?;
        self.solve_rhs(problem.chart(), &assemble::assemble_rhs_scaled(problem, &self.row_factors))
    }

    fn solve_rhs(&self, chart: &std::sync::Arc<Chart>, rhs: &[f64]) -> Result<LinearSolveResult> {
        let precond: &dyn Precond = match &self.factor {
            Factor::Lu(lu) => lu,
            Factor::Jacobi(j) => j,
        };
        let mut x = vec![0.0; rhs.len()];
        let out = gmres(
            &self.system,
            precond,
            rhs,
            &mut x,
            self.options.tol,
            self.options.restart,
            self.options.max_iter,
        )?;
        Ok(LinearSolveResult {
            solution: ScalarField::new(chart.clone(), x)?,
            residual: out.residual,
            iterations: out.iterations,
            converged: true,
            history: out.history,
        })
    }

    /// Estimate of the 1-norm condition number (Hager's method); requires
    /// the LU preconditioner.
    pub fn condition_estimate(&self) -> Option<f64> {
        let Factor::Lu(lu) = &self.factor else { return None };
        let n = lu.len();
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            lu.solve_in_place(&mut y);
            let norm1: f64 = y.iter().map(|v| v.abs()).sum();
            if norm1 <= est {
                break;
            }
            est = norm1;
            let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            lu.solve_transpose_in_place(&mut z);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bj, bz), (j, v)| if v.abs() > bz { (j, v.abs()) } else { (bj, bz) });
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= zx {
                break;
            }
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        Some(est * self.system.one_norm())
    }
}

/// Assembles, factorizes and solves.
pub fn solve_linear(problem: &LinearProblem, options: &SolverOptions) -> Result<LinearSolveResult> {
    LinearSolver::new(problem, *options)?.solve(problem.chart())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(ns: usize, nt: usize, n: usize) -> MetricField {
        let c = if nt == 1 { Chart::radial(n, ns) } else { Chart::axisymmetric(n, ns, nt) };
        MetricField::flat(c.unwrap())
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = flat(21, 8, 3);
        let r = solve_linear(&LinearProblem::new(g, 1.0), &SolverOptions::default()).unwrap();
        assert!(r.solution.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn harmonic_decay_is_exact_radially() {
        for n in [3, 4, 5] {
            let g = flat(41, 6, n);
            let c = g.chart().clone();
            let p = LinearProblem::new(g, 1.0).with_dirichlet(BoundaryField::constant(c.clone(), 1.0));
            let u = solve_linear(&p, &SolverOptions::default()).unwrap().solution;
            let exact = ScalarField::from_fn(c, |s, _| s.powi(n as i32 - 2)).unwrap();
            assert!(u.max_abs_diff(&exact) < 1e-11, "n={n}: {}", u.max_abs_diff(&exact));
        }
    }

    #[test]
    fn robin_example() {
        // u = 1 + a/r with a + (1 + a) = 0
        let g = flat(201, 1, 3);
        let c = g.chart().clone();
        let p = LinearProblem::new(g, 1.0)
            .with_robin(BoundaryField::constant(c.clone(), 1.0), BoundaryField::constant(c.clone(), 0.0))
            .with_limit(1.0);
        let u = solve_linear(&p, &SolverOptions::default()).unwrap().solution;
        let exact = ScalarField::from_fn(c, |s, _| 1.0 - 0.5 * s).unwrap();
        assert!(u.max_abs_diff(&exact) < 1e-4, "{}", u.max_abs_diff(&exact));
    }

    #[test]
    fn jacobi_hits_iteration_cap() {
        let g = flat(41, 8, 3);
        let c = g.chart().clone();
        let p = LinearProblem::new(g, 1.0).with_dirichlet(BoundaryField::constant(c, 1.0));
        let opts = SolverOptions {
            max_iter: 5,
            preconditioner: PreconditionerKind::Jacobi,
            ..SolverOptions::default()
        };
        match solve_linear(&p, &opts) {
            Err(Error::LinearNonConvergence { iterations, history, .. }) => {
                assert_eq!(iterations, 5);
                assert!(!history.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn large_positive_zeroth_order_term_is_indefinite() {
        let g = flat(41, 1, 3);
        let c = g.chart().clone();
        let p = LinearProblem::new(g, 1.0).with_c(ScalarField::constant(c, 200.0));
        assert!(matches!(
            solve_linear(&p, &SolverOptions::default()),
            Err(Error::DiscreteIsomorphism { .. })
        ));
    }

    #[test]
    fn condition_estimate_is_finite() {
        let g = flat(41, 8, 3);
        let s = LinearSolver::new(&LinearProblem::new(g, 1.0), SolverOptions::default()).unwrap();
        let k = s.condition_estimate().unwrap();
        assert!(k.is_finite() && k > 1.0);
    }
}
