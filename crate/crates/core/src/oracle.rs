//! Spherically symmetric reference solutions.
//!
//! Independent of the grid solver: linear problems are solved by Chebyshev
//! collocation in `s = 1/r` with dense LU, and the nonlinear boundary
//! problem reduces to a scalar root.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition at `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialBoundary {
    Dirichlet(f64),
    /// `du/deta + gamma u = h` with `eta = -d/dr`.
    Robin { gamma: f64, h: f64 },
}

type Coefficient = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// `a Delta u + c(r) u = source(r)` on `r >= 1` with flat `Delta`, one
/// boundary condition at `r = 1` and `u -> limit`.
///
/// `c` and `source` must decay at least like `r^-4` so that the equation
/// divided by `r^-4` stays regular at infinity.
pub struct RadialProblem {
    pub n: usize,
    pub a: f64,
    pub c: Coefficient,
    pub source: Coefficient,
    pub boundary: RadialBoundary,
    pub limit: f64,
}

impl RadialProblem {
    /// `Delta u = 0`.
    pub fn laplace(n: usize, boundary: RadialBoundary, limit: f64) -> Self {
        RadialProblem {
            n,
            a: 1.0,
            c: Box::new(|_| 0.0),
            source: Box::new(|_| 0.0),
            boundary,
            limit,
        }
    }
}

/// A Chebyshev series in `x = 2s - 1` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    coefficients: Vec<f64>,
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

fn derivative_coefficients(c: &[f64]) -> Vec<f64> {
    let m = c.len();
    if m < 2 {
        return vec![0.0];
    }
    let mut d = vec![0.0; m];
    for k in (1..m).rev() {
        let next = if k + 1 < m { d[k + 1] } else { 0.0 };
        d[k - 1] = next + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(m - 1);
    d
}

impl RadialProfile {
    fn from_nodal(values: &[f64]) -> Self {
        // values at x_j = cos(pi j / N)
        let nn = values.len() - 1;
        let coefficients = (0..=nn)
            .map(|k| {
                let mut acc = 0.0;
                for (j, v) in values.iter().enumerate() {
                    let w = if j == 0 || j == nn { 0.5 } else { 1.0 };
                    acc += w * v * (std::f64::consts::PI * (j * k) as f64 / nn as f64).cos();
                }
                let scale = if k == 0 || k == nn { 1.0 } else { 2.0 };
                scale * acc / nn as f64
            })
            .collect();
        RadialProfile { coefficients }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Value at `s = 1/r`.
    pub fn eval(&self, s: f64) -> f64 {
        clenshaw(&self.coefficients, 2.0 * s - 1.0)
    }

    /// `du/ds`.
    pub fn eval_ds(&self, s: f64) -> f64 {
        2.0 * clenshaw(&derivative_coefficients(&self.coefficients), 2.0 * s - 1.0)
    }

    pub fn eval_dss(&self, s: f64) -> f64 {
        let d2 = derivative_coefficients(&derivative_coefficients(&self.coefficients));
        4.0 * clenshaw(&d2, 2.0 * s - 1.0)
    }

    pub fn at_r(&self, r: f64) -> f64 {
        self.eval(1.0 / r)
    }
}

/// Chebyshev points `cos(pi j / N)` and the differentiation matrix on them.
fn cheb(nn: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=nn)
        .map(|j| (std::f64::consts::PI * j as f64 / nn as f64).cos())
        .collect();
    let c = |j: usize| (if j == 0 || j == nn { 2.0 } else { 1.0 }) * if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::zeros(nn + 1, nn + 1);
    for i in 0..=nn {
        for j in 0..=nn {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=nn {
        let row_sum: f64 = (0..=nn).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row_sum;
    }
    (x, d)
}

fn collocate(p: &RadialProblem, nn: usize) -> Result<RadialProfile> {
    let (x, dx) = cheb(nn);
    // s = (x + 1) / 2, d/ds = 2 d/dx
    let d1 = &dx * 2.0;
    let d2 = &d1 * &d1;
    let m = nn + 1;
    let n = p.n as f64;
    let mut a = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        let s = 0.5 * (x[i] + 1.0);
        if i == m - 1 {
            // s = 0: value at infinity
            a[(i, i)] = 1.0;
            b[i] = p.limit;
        } else if i == 0 {
            // s = 1
            match p.boundary {
                RadialBoundary::Dirichlet(v) => {
                    a[(i, i)] = 1.0;
                    b[i] = v;
                }
                RadialBoundary::Robin { gamma, h } => {
                    // du/deta = -du/dr = s^2 du/ds = du/ds at s = 1
                    for j in 0..m {
                        a[(i, j)] = d1[(i, j)];
                    }
                    a[(i, i)] += gamma;
                    b[i] = h;
                }
            }
        } else {
            // a (u_ss + (3-n) u_s / s) + r^4 c u = r^4 source
            let r = 1.0 / s;
            let r4 = r.powi(4);
            for j in 0..m {
                a[(i, j)] = p.a * (d2[(i, j)] + (3.0 - n) / s * d1[(i, j)]);
            }
            a[(i, i)] += r4 * (p.c)(r);
            b[i] = r4 * (p.source)(r);
        }
    }
    let u = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::OracleNonConvergence(format!("singular collocation matrix at degree {nn}")))?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::OracleNonConvergence(format!("non-finite collocation values at degree {nn}")));
    }
    Ok(RadialProfile::from_nodal(u.as_slice()))
}

/// Doubles the collocation degree until two successive profiles agree to
/// `tol` on a fixed set of sample points.
pub fn radial_solve_linear(p: &RadialProblem, tol: f64) -> Result<RadialProfile> {
    if p.n < 3 {
        return Err(Error::InvalidSpec(format!("dimension must be at least 3, got {}", p.n)));
    }
    if !(p.a > 0.0) {
        return Err(Error::InvalidSpec("Laplacian multiplier must be positive".into()));
    }
    let samples: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
    let mut prev = collocate(p, 16)?;
    let mut nn = 32;
    while nn <= 512 {
        let next = collocate(p, nn)?;
        let diff = samples
            .iter()
            .map(|&s| (next.eval(s) - prev.eval(s)).abs())
            .fold(0.0, f64::max);
        if diff <= tol {
            return Ok(next);
        }
        prev = next;
        nn *= 2;
    }
    Err(Error::OracleNonConvergence(format!(
        "collocation did not reach tolerance {tol:e} by degree 512"
    )))
}

/// Residual of the continuous equation `a Delta u + c u - source`,
/// divided by `r^-4`, at interior sample points.
pub fn radial_residual(p: &RadialProblem, u: &RadialProfile, samples: usize) -> f64 {
    let n = p.n as f64;
    (1..samples)
        .map(|k| {
            let s = k as f64 / samples as f64;
            let r = 1.0 / s;
            let lap = u.eval_dss(s) + (3.0 - n) / s * u.eval_ds(s);
            let r4 = r.powi(4);
            (p.a * lap + r4 * ((p.c)(r) * u.eval(s) - (p.source)(r))).abs()
        })
        .fold(0.0, f64::max)
}

fn poly(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

/// `Delta_flat` of `sum c_k s^k`, divided by `s^4`.
fn poly_laplacian_over_s4(coeffs: &[f64], n: usize, s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let k = k as f64;
            c * k * (k + 2.0 - n as f64) * s.powf(k - 2.0)
        })
        .filter(|v| *v != 0.0)
        .sum()
}

/// Solution of the `lambda`-family
/// `kappa Delta_g v - lambda R v = lambda R`, `v(1) = 0`, `v -> 0`,
/// for `g = u0^(4/(n-2)) flat` with `u0` a polynomial in `s` and `u0(0) = 1`.
///
/// With `w = u0 v` the equation becomes
/// `Delta w - (1 - lambda)(Delta u0 / u0) w = -lambda Delta u0`.
#[derive(Debug, Clone)]
pub struct RadialDirichlet {
    pub n: usize,
    pub lambda: f64,
    u0: Vec<f64>,
    w: RadialProfile,
}

impl RadialDirichlet {
    pub fn phi(&self, s: f64) -> f64 {
        1.0 + self.w.eval(s) / poly(&self.u0, s)
    }
}

pub fn radial_lambda_dirichlet(u0: &[f64], n: usize, lambda: f64, tol: f64) -> Result<RadialDirichlet> {
    if u0.first() != Some(&1.0) {
        return Err(Error::InvalidSpec("conformal factor must tend to 1 at infinity".into()));
    }
    let (c0, c1) = (u0.to_vec(), u0.to_vec());
    let problem = RadialProblem {
        n,
        a: 1.0,
        c: Box::new(move |r| {
            let s = 1.0 / r;
            -(1.0 - lambda) * poly_laplacian_over_s4(&c0, n, s) * s.powi(4) / poly(&c0, s)
        }),
        source: Box::new(move |r| {
            let s = 1.0 / r;
            -lambda * poly_laplacian_over_s4(&c1, n, s) * s.powi(4)
        }),
        boundary: RadialBoundary::Dirichlet(0.0),
        limit: 0.0,
    };
    let w = radial_solve_linear(&problem, tol)?;
    Ok(RadialDirichlet {
        n,
        lambda,
        u0: u0.to_vec(),
        w,
    })
}

/// `lambda = 1`: `phi u0` is flat-harmonic, equal to `u0(1)` at `r = 1`.
pub fn radial_dirichlet_yamabe(u0: &[f64], n: usize, tol: f64) -> Result<RadialDirichlet> {
    radial_lambda_dirichlet(u0, n, 1.0, tol)
}

/// Radial solution `u = 1 + a s^(n-2)` of `du/deta = f u^beta` on the flat
/// exterior, i.e. `(n-2) a = f (1 + a)^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMeanCurvature {
    pub n: usize,
    pub a: f64,
}

impl RadialMeanCurvature {
    pub fn u(&self, s: f64) -> f64 {
        1.0 + self.a * s.powi(self.n as i32 - 2)
    }

    pub fn u_boundary(&self) -> f64 {
        1.0 + self.a
    }
}

/// Root of `(n-2) a = f (1+a)^beta` on the branch through `a = 0`
/// (`a > 0` for `f > 0`, `-1 < a < 0` for `f < 0`), or `None` when that
/// branch has no root.
pub fn radial_mean_curvature(f: f64, beta: f64, n: usize, tol: f64) -> Result<Option<RadialMeanCurvature>> {
    if n < 3 || !(beta > 0.0) || !f.is_finite() {
        return Err(Error::InvalidSpec(format!("need n >= 3, beta > 0, finite f (got {n}, {beta}, {f})")));
    }
    let m = n as f64 - 2.0;
    let big_f = |a: f64| m * a - f * (1.0 + a).powf(beta);
    let big_df = |a: f64| m - f * beta * (1.0 + a).powf(beta - 1.0);
    let root = |mut lo: f64, mut hi: f64| -> f64 {
        // F(lo) < 0 < F(hi) or the reverse; Newton steps kept inside the bracket
        let flo = big_f(lo);
        let mut a = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fa = big_f(a);
            if fa == 0.0 {
                break;
            }
            if (fa < 0.0) == (flo < 0.0) {
                lo = a;
            } else {
                hi = a;
            }
            let step = fa / big_df(a);
            let cand = a - step;
            a = if cand > lo.min(hi) && cand < lo.max(hi) && step.is_finite() { cand } else { 0.5 * (lo + hi) };
            if (hi - lo).abs() <= tol * (1.0 + a.abs()) || step.abs() <= 1e-3 * tol * (1.0 + a.abs()) {
                break;
            }
        }
        a
    };
    let a = if f == 0.0 {
        0.0
    } else if f < 0.0 {
        root(-1.0, 0.0)
    } else if beta > 1.0 {
        // g(a) = m a / (1+a)^beta peaks at a* = 1/(beta-1)
        let a_star = 1.0 / (beta - 1.0);
        let g_max = m * a_star / (1.0 + a_star).powf(beta);
        if f > g_max * (1.0 + tol) {
            return Ok(None);
        }
        if f >= g_max {
            a_star
        } else {
            root(0.0, a_star)
        }
    } else {
        let mut hi = 1.0;
        while big_f(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Ok(None);
            }
        }
        root(0.0, hi)
    };
    Ok(Some(RadialMeanCurvature { n, a }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_examples() {
        let p = RadialProblem::laplace(3, RadialBoundary::Dirichlet(1.0), 0.0);
        let u = radial_solve_linear(&p, 1e-12).unwrap();
        for r in [1.0, 1.5, 2.0, 10.0] {
            assert!((u.at_r(r) - 1.0 / r).abs() < 1e-10);
        }
        let p = RadialProblem::laplace(3, RadialBoundary::Dirichlet(2.0), 1.0);
        let u = radial_solve_linear(&p, 1e-12).unwrap();
        assert!((u.at_r(4.0) - 1.25).abs() < 1e-10);
        let p = RadialProblem::laplace(5, RadialBoundary::Dirichlet(0.0), 0.0);
        assert!(radial_solve_linear(&p, 1e-12).unwrap().eval(0.3).abs() < 1e-14);
    }

    #[test]
    fn robin_example() {
        let p = RadialProblem::laplace(3, RadialBoundary::Robin { gamma: 1.0, h: 0.0 }, 1.0);
        let u = radial_solve_linear(&p, 1e-12).unwrap();
        assert!((u.at_r(2.0) - 0.75).abs() < 1e-10);
    }

    #[test]
    fn nontrivial_coefficients_have_small_residual() {
        let p = RadialProblem {
            n: 4,
            a: 2.0,
            c: Box::new(|r| -3.0 / (r * r * r * r * (1.0 + r * r))),
            source: Box::new(|r| r.powi(-5)),
            boundary: RadialBoundary::Dirichlet(0.5),
            limit: 0.0,
        };
        let u = radial_solve_linear(&p, 1e-12).unwrap();
        assert!(radial_residual(&p, &u, 50) < 1e-8);
    }

    #[test]
    fn dirichlet_examples() {
        let d = radial_dirichlet_yamabe(&[1.0, 0.0, 1.0], 3, 1e-13).unwrap();
        for s in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let exact = (1.0 + s) / (1.0 + s * s);
            assert!((d.phi(s) - exact).abs() < 1e-11, "{s}");
        }
        let d = radial_dirichlet_yamabe(&[1.0, 0.5], 3, 1e-13).unwrap();
        assert!((d.phi(0.4) - 1.0).abs() < 1e-13);
        let d = radial_dirichlet_yamabe(&[1.0], 3, 1e-13).unwrap();
        assert!((d.phi(0.4) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn mean_curvature_roots() {
        let a = radial_mean_curvature(0.1, 3.0, 3, 1e-14).unwrap().unwrap().a;
        assert!((a - 0.1 * (1.0 + a).powi(3)).abs() < 1e-13);
        assert!((a - 0.1535).abs() < 1e-4);
        let t = radial_mean_curvature(4.0 / 27.0, 3.0, 3, 1e-14).unwrap().unwrap();
        assert!((t.a - 0.5).abs() < 1e-12);
        assert!(radial_mean_curvature(0.16, 3.0, 3, 1e-14).unwrap().is_none());
        let neg = radial_mean_curvature(-1.0, 3.0, 3, 1e-14).unwrap().unwrap();
        let b = neg.u_boundary();
        assert!((b * b * b + b - 1.0).abs() < 1e-12);
        assert!(neg.a < 0.0 && b > 0.0);
    }
}
