//! Restarted GMRES with right preconditioning.

use crate::error::{Error, Result};

pub(crate) trait Operator {
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

pub(crate) trait Preconditioner {
    fn apply_inverse(&self, x: &mut [f64]);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) struct GmresOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Solves `A x = b` to relative residual `tol`, starting from `x`.
pub(crate) fn gmres(
    a: &dyn Operator,
    m: &dyn Preconditioner,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresOutcome {
            iterations: 0,
            residual: 0.0,
            history,
        });
    }
    let restart = restart.max(1);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut iterations = 0;
    loop {
        a.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok(GmresOutcome {
                iterations,
                residual: rel,
                history,
            });
        }
        if iterations >= max_iter {
            return Err(Error::LinearNonConvergence {
                iterations,
                residual: rel,
                history,
            });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![beta];
        let mut steps = 0;
        while steps < restart && iterations < max_iter {
            let mut z = basis[steps].clone();
            m.apply_inverse(&mut z);
            a.apply(&z, &mut w);
            let mut h = vec![0.0; steps + 2];
            for (k, v) in basis.iter().enumerate() {
                h[k] = dot(&w, v);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h[k] * vi;
                }
            }
            h[steps + 1] = norm(&w);
            for (k, &(c, s)) in cs.iter().enumerate() {
                let (a0, a1) = (h[k], h[k + 1]);
                h[k] = c * a0 + s * a1;
                h[k + 1] = -s * a0 + c * a1;
            }
            let (a0, a1) = (h[steps], h[steps + 1]);
            let denom = a0.hypot(a1);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (a0 / denom, a1 / denom) };
            let next_norm = h[steps + 1];
            h[steps] = denom;
            h[steps + 1] = 0.0;
            cs.push((c, s));
            g.push(-s * g[steps]);
            g[steps] *= c;
            hess.push(h);
            if next_norm > 0.0 {
                basis.push(w.iter().map(|v| v / next_norm).collect());
            }
            steps += 1;
            iterations += 1;
            let est = g[steps].abs() / bnorm;
            if est <= tol || next_norm == 0.0 {
                break;
            }
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for j in i + 1..steps {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (yk, v) in y.iter().zip(&basis) {
            for (u, vi) in update.iter_mut().zip(v) {
                *u += yk * vi;
            }
        }
        m.apply_inverse(&mut update);
        for (xi, u) in x.iter_mut().zip(&update) {
            *xi += u;
        }
    }
}
