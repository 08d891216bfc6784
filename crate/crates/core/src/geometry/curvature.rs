//! Curvature, Laplace-Beltrami action and conformal changes.
//!
//! The boundary normal `eta` points away from infinity (towards increasing
//! `s`, i.e. into the hole), and mean curvature is the sum of the principal
//! curvatures, so the flat unit sphere has `H = -(n-1)`.

use super::chart::{Chart, ChartMode};
use super::fd::{self, Parity};
use super::field::{BoundaryField, ScalarField};
use super::metric::{FrameComponents, MetricField};
use crate::error::{Error, Result};

/// `4(n-1)/(n-2)`.
pub fn conformal_laplacian_coefficient(n: usize) -> f64 {
    let n = n as f64;
    4.0 * (n - 1.0) / (n - 2.0)
}

fn cot(t: f64) -> f64 {
    t.cos() / t.sin()
}

fn s_of(chart: &Chart, k: usize) -> f64 {
    chart.s()[chart.split(k).0]
}

fn theta_of(chart: &Chart, k: usize) -> f64 {
    chart.theta_at(chart.split(k).1)
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Derivatives in `t = ln r = -ln s`.
fn d_t(chart: &Chart, f: &[f64]) -> Vec<f64> {
    let ds = fd::d_s(chart, f);
    ds.iter().enumerate().map(|(k, d)| -s_of(chart, k) * d).collect()
}

fn d_tt(chart: &Chart, f: &[f64]) -> Vec<f64> {
    let ds = fd::d_s(chart, f);
    let dss = fd::d_ss(chart, f);
    (0..f.len())
        .map(|k| {
            let s = s_of(chart, k);
            s * s * dss[k] + s * ds[k]
        })
        .collect()
}

fn d_ttheta(chart: &Chart, f: &[f64], parity: Parity) -> Vec<f64> {
    d_t(chart, &fd::d_theta(chart, f, parity))
}

/// `Delta_g u` at every node (zero at the node at infinity).
pub fn laplace_beltrami(g: &MetricField, u: &ScalarField) -> Result<ScalarField> {
    g.check_chart(u.chart())?;
    let chart = g.chart();
    let n = chart.n() as f64;
    let co = g.coefficients();
    let v = u.values();
    let us = fd::d_s(chart, v);
    let uss = fd::d_ss(chart, v);
    let ut = fd::d_theta(chart, v, Parity::Even);
    let utt = fd::d_thth(chart, v, Parity::Even);
    let ust = fd::d_theta(chart, &us, Parity::Even);

    let mu_a = mul(&co.mu, &co.a);
    let mu_b = mul(&co.mu, &co.b);
    let mu_c = mul(&co.mu, &co.c);
    let mu_a_s = fd::d_s(chart, &mu_a);
    let mu_b_s = fd::d_s(chart, &mu_b);
    let mu_b_t = fd::d_theta(chart, &mu_b, Parity::Odd);
    let mu_c_t = fd::d_theta(chart, &mu_c, Parity::Even);

    let mut out = vec![0.0; v.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let s = s_of(chart, k);
        if s == 0.0 {
            continue;
        }
        let (a, b, c, mu) = (co.a[k], co.b[k], co.c[k], co.mu[k]);
        let ct = if chart.is_axisymmetric() { cot(theta_of(chart, k)) } else { 0.0 };
        let coef_s = (3.0 - n) * s * a + s * s * mu_a_s[k] / mu
            - s * mu_b_t[k] / mu
            - (n - 2.0) * s * ct * b;
        let coef_t = -s * mu_b_s[k] / mu + (n - 2.0) * b + mu_c_t[k] / mu + (n - 2.0) * ct * c;
        let scaled = s * s * a * uss[k] + coef_s * us[k] - 2.0 * s * b * ust[k]
            + coef_t * ut[k]
            + c * utt[k];
        *o = s * s * scaled;
    }
    ScalarField::new(chart.clone(), out)
}

/// Flat Laplacian of nodal values.
pub fn flat_laplacian(u: &ScalarField) -> Result<ScalarField> {
    laplace_beltrami(&MetricField::flat(u.chart().clone()), u)
}

/// Flat Laplacian of `sum_k c_k s^k`, exact: each term gives `k(k+2-n) s^(k+2)`.
fn poly_flat_laplacian(chart: &Chart, coeffs: &[f64]) -> Vec<f64> {
    let n = chart.n() as f64;
    chart.sample(|s, _| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let kf = k as f64;
                c * kf * (kf + 2.0 - n) * s.powi(k as i32 + 2)
            })
            .sum()
    })
}

/// Scalar curvature of the base metric (frame components, no conformal factor).
fn base_scalar_curvature(chart: &Chart, comps: &FrameComponents) -> Vec<f64> {
    let n = chart.n() as f64;
    let len = chart.len();
    let q: Vec<f64> = comps.az.iter().map(|v| v.sqrt()).collect();
    let q_t = d_t(chart, &q);
    let mut out = vec![0.0; len];

    if chart.mode() == ChartMode::Radial {
        // G = A dt^2 + q^2 dOmega_{n-1}
        let m = n - 1.0;
        let inv_sqrt_a: Vec<f64> = comps.rr.iter().map(|a| 1.0 / a.sqrt()).collect();
        let flux: Vec<f64> = mul(&q_t, &inv_sqrt_a);
        let flux_t = d_t(chart, &flux);
        let isa_t = d_t(chart, &inv_sqrt_a);
        for k in 0..len {
            let s = s_of(chart, k);
            let a = comps.rr[k];
            let lap_q = inv_sqrt_a[k] * flux_t[k];
            let r_g = -2.0 * m * lap_q / q[k] - m * (m - 1.0) * (q_t[k] * q_t[k] / a - 1.0) / (q[k] * q[k]);
            let lap_t = inv_sqrt_a[k] * isa_t[k] + m * q_t[k] / (q[k] * a);
            out[k] = s * s * (r_g - 2.0 * (n - 1.0) * lap_t - (n - 1.0) * (n - 2.0) / a);
        }
        return out;
    }

    // G = k + (q sin theta)^2 dOmega_{n-2}, k = E dt^2 + 2F dt dtheta + G dtheta^2
    let m = n - 2.0;
    let (e, f, gg) = (&comps.rr, &comps.rt, &comps.tt);
    let e_t = d_t(chart, e);
    let e_th = fd::d_theta(chart, e, Parity::Even);
    let e_thth = fd::d_thth(chart, e, Parity::Even);
    let f_t = d_t(chart, f);
    let f_th = fd::d_theta(chart, f, Parity::Odd);
    let f_tth = d_ttheta(chart, f, Parity::Odd);
    let g_t = d_t(chart, gg);
    let g_th = fd::d_theta(chart, gg, Parity::Even);
    let g_tt = d_tt(chart, gg);

    let det: Vec<f64> = (0..len).map(|k| e[k] * gg[k] - f[k] * f[k]).collect();
    let root: Vec<f64> = det.iter().map(|d| d.sqrt()).collect();
    let ktt: Vec<f64> = (0..len).map(|k| gg[k] / det[k]).collect();
    let ktth: Vec<f64> = (0..len).map(|k| -f[k] / det[k]).collect();
    let kthth: Vec<f64> = (0..len).map(|k| e[k] / det[k]).collect();

    let q_th = fd::d_theta(chart, &q, Parity::Even);
    // Delta_k q
    let flux_t: Vec<f64> = (0..len).map(|k| root[k] * (ktt[k] * q_t[k] + ktth[k] * q_th[k])).collect();
    let flux_th: Vec<f64> = (0..len).map(|k| root[k] * (ktth[k] * q_t[k] + kthth[k] * q_th[k])).collect();
    let div_q_t = d_t(chart, &flux_t);
    let div_q_th = fd::d_theta(chart, &flux_th, Parity::Odd);
    // Delta_k theta
    let th_flux_t = mul(&root, &ktth);
    let th_flux_th = mul(&root, &kthth);
    let div_th_t = d_t(chart, &th_flux_t);
    let div_th_th = fd::d_theta(chart, &th_flux_th, Parity::Even);
    // Delta_k t
    let t_flux_t = mul(&root, &ktt);
    let t_flux_th = mul(&root, &ktth);
    let div_t_t = d_t(chart, &t_flux_t);
    let div_t_th = fd::d_theta(chart, &t_flux_th, Parity::Odd);

    for k in 0..len {
        let s = s_of(chart, k);
        let ct = cot(theta_of(chart, k));
        // Brioschi
        let (ek, fk, gk) = (e[k], f[k], gg[k]);
        let a11 = -0.5 * e_thth[k] + f_tth[k] - 0.5 * g_tt[k];
        let m1 = [
            [a11, 0.5 * e_t[k], f_t[k] - 0.5 * e_th[k]],
            [f_th[k] - 0.5 * g_t[k], ek, fk],
            [0.5 * g_th[k], fk, gk],
        ];
        let m2 = [
            [0.0, 0.5 * e_th[k], 0.5 * g_t[k]],
            [0.5 * e_th[k], ek, fk],
            [0.5 * g_t[k], fk, gk],
        ];
        let gauss = (det3(&m1) - det3(&m2)) / (det[k] * det[k]);
        let r_k = 2.0 * gauss;

        let qk = q[k];
        let lap_q = (div_q_t[k] + div_q_th[k]) / root[k];
        let lap_th = (div_th_t[k] + div_th_th[k]) / root[k];
        let lap_t = (div_t_t[k] + div_t_th[k]) / root[k];
        let mixed = ktth[k] * q_t[k] + kthth[k] * q_th[k];
        let lap_w_over_w = lap_q / qk + ct * lap_th - kthth[k] + 2.0 * ct * mixed / qk;
        let grad_q2 = ktt[k] * q_t[k] * q_t[k] + 2.0 * ktth[k] * q_t[k] * q_th[k] + kthth[k] * q_th[k] * q_th[k];
        let grad_w_term = grad_q2 / (qk * qk) + 2.0 * ct * mixed / qk
            + (kthth[k] * qk * qk - 1.0) * ct * ct / (qk * qk)
            - 1.0 / (qk * qk);
        let r_g = r_k - 2.0 * m * lap_w_over_w - m * (m - 1.0) * grad_w_term;
        let lap_g_t = lap_t + m * (ktt[k] * q_t[k] / qk + ktth[k] * (q_th[k] / qk + ct));
        out[k] = s * s * (r_g - 2.0 * (n - 1.0) * lap_g_t - (n - 1.0) * (n - 2.0) * ktt[k]);
    }
    out
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Scalar curvature at every node.
///
/// For `w^(4/(n-2))` times the flat metric this is
/// `-4(n-1)/(n-2) w^(-(n+2)/(n-2)) Delta w`, with `Delta w` exact when the
/// factor is a known polynomial in `1/r`. Otherwise the curvature of the base
/// metric is computed from its frame components by finite differences.
pub fn scalar_curvature(g: &MetricField) -> Result<ScalarField> {
    let chart = g.chart();
    let n = chart.n() as f64;
    let kappa = conformal_laplacian_coefficient(chart.n());
    let w = g.factor_values();
    let p = (n + 2.0) / (n - 2.0);
    let values = if g.is_conformally_flat() {
        let lap = match g.factor_poly() {
            Some(c) => poly_flat_laplacian(chart, c),
            None => flat_laplacian(&g.conformal_factor())?.into_values(),
        };
        lap.iter().zip(w).map(|(l, w)| -kappa * w.powf(-p) * l).collect()
    } else {
        let base = g.base();
        let r_b = base_scalar_curvature(chart, &base.base_components());
        if g.has_trivial_factor() {
            r_b
        } else {
            let lap = laplace_beltrami(&base, &g.conformal_factor())?;
            (0..chart.len())
                .map(|k| w[k].powf(-p) * (-kappa * lap.values()[k] + r_b[k] * w[k]))
                .collect()
        }
    };
    ScalarField::new(chart.clone(), values)
}

/// Second-order one-sided normal derivative on the boundary,
/// `(a u_s - b u_theta) / sqrt(a)` at `s = 1`.
///
/// The same stencil is used by the Robin rows of the linear solver.
pub fn normal_derivative(g: &MetricField, u: &ScalarField) -> Result<BoundaryField> {
    g.check_chart(u.chart())?;
    let chart = g.chart();
    let co = g.coefficients();
    let i = chart.boundary_row();
    let nt = chart.ntheta();
    let h = chart.hs();
    let v = u.values();
    let row: Vec<f64> = v[i * nt..(i + 1) * nt].to_vec();
    let values = (0..nt)
        .map(|j| {
            let k = chart.index(i, j);
            let us = (3.0 * v[k] - 4.0 * v[k - nt] + v[k - 2 * nt]) / (2.0 * h);
            let ut = if chart.is_axisymmetric() { centred_theta(&row, j, chart.htheta()) } else { 0.0 };
            let sa = co.a[k].sqrt();
            sa * us - co.b[k] / sa * ut
        })
        .collect();
    BoundaryField::new(chart.clone(), values)
}

/// Second-order centred theta derivative of an even ring at cell `j`.
pub(crate) fn centred_theta(row: &[f64], j: usize, h: f64) -> f64 {
    let nt = row.len();
    let left = if j == 0 { row[0] } else { row[j - 1] };
    let right = if j + 1 == nt { row[nt - 1] } else { row[j + 1] };
    (right - left) / (2.0 * h)
}

/// Mean curvature of the inner boundary with respect to the normal pointing
/// away from infinity.
pub fn boundary_mean_curvature(g: &MetricField) -> Result<BoundaryField> {
    let chart = g.chart();
    let n = chart.n() as f64;
    let co = g.coefficients();
    let len = chart.len();
    let sqrt_a: Vec<f64> = co.a.iter().map(|a| a.sqrt()).collect();
    let radial_flux = mul(&co.mu, &sqrt_a);
    let radial_flux_s = fd::d_s(chart, &radial_flux);
    let angular_flux: Vec<f64> = (0..len).map(|k| co.mu[k] * co.b[k] / sqrt_a[k]).collect();
    let angular_flux_t = fd::d_theta(chart, &angular_flux, Parity::Odd);
    let i = chart.boundary_row();
    let values = (0..chart.ntheta())
        .map(|j| {
            let k = chart.index(i, j);
            let mut h = (1.0 - n) * sqrt_a[k] + radial_flux_s[k] / co.mu[k];
            if chart.is_axisymmetric() {
                let ct = cot(chart.theta_at(j));
                h -= angular_flux_t[k] / co.mu[k] + (n - 2.0) * ct * co.b[k] / sqrt_a[k];
            }
            h
        })
        .collect();
    BoundaryField::new(chart.clone(), values)
}

fn check_positive(u: &ScalarField) -> Result<()> {
    let (node, value) = u.argmin();
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::Positivity { node, value })
    }
}

/// Boundary mean curvature of `u^(4/(n-2)) g` predicted by the
/// transformation law `u^(-n/(n-2)) (2(n-1)/(n-2) du/deta + H u)`.
pub fn conformal_mean_curvature(g: &MetricField, u: &ScalarField) -> Result<BoundaryField> {
    check_positive(u)?;
    let n = g.n() as f64;
    let h = boundary_mean_curvature(g)?;
    let du = normal_derivative(g, u)?;
    let ub = u.boundary();
    let values = (0..ub.values().len())
        .map(|j| {
            let uj = ub.values()[j];
            uj.powf(-n / (n - 2.0)) * (2.0 * (n - 1.0) / (n - 2.0) * du.values()[j] + h.values()[j] * uj)
        })
        .collect();
    BoundaryField::new(g.chart().clone(), values)
}

/// `phi^(4/(n-2)) g`. Conformal factors compose by multiplication.
pub fn conformal_transform(g: &MetricField, phi: &ScalarField) -> Result<MetricField> {
    g.check_chart(phi.chart())?;
    check_positive(phi)?;
    let factor: Vec<f64> = g
        .factor_values()
        .iter()
        .zip(phi.values())
        .map(|(w, p)| w * p)
        .collect();
    Ok(g.with_factor(factor, None))
}

/// `phi^(4/(n-2)) g` for `phi` a polynomial in `1/r`; keeps the factor exact
/// when `g` is flat with a polynomial factor.
pub fn conformal_transform_polynomial(g: &MetricField, coefficients: &[f64]) -> Result<MetricField> {
    let phi = ScalarField::from_fn(g.chart().clone(), |s, _| super::metric::eval_poly(coefficients, s))?;
    let mut out = conformal_transform(g, &phi)?;
    if let Some(base) = g.factor_poly() {
        out = out.with_factor(out.factor_values().to_vec(), Some(poly_mul(base, coefficients)));
    }
    Ok(out)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric::{metric_from_spec, AxisymSpec, MetricSpec, Term};

    fn conformal(chart: std::sync::Arc<Chart>, c: &[f64]) -> MetricField {
        MetricField::conformal_polynomial(chart, c).unwrap()
    }

    #[test]
    fn flat_is_fixed_point() {
        for c in [Chart::radial(3, 41).unwrap(), Chart::axisymmetric(4, 41, 12).unwrap()] {
            let g = MetricField::flat(c.clone());
            assert!(scalar_curvature(&g).unwrap().values().iter().all(|&r| r == 0.0));
            let one = ScalarField::constant(c.clone(), 1.0);
            assert!(laplace_beltrami(&g, &one).unwrap().values().iter().all(|&r| r == 0.0));
            let h = boundary_mean_curvature(&g).unwrap();
            let n = c.n() as f64;
            assert!(h.values().iter().all(|&v| (v + n - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn conformal_scalar_curvature_examples() {
        let c = Chart::radial(3, 101).unwrap();
        let harmonic = scalar_curvature(&conformal(c.clone(), &[1.0, 0.5])).unwrap();
        assert!(harmonic.values().iter().all(|r| r.abs() < 1e-14));
        let r = scalar_curvature(&conformal(c.clone(), &[1.0, 0.0, 1.0])).unwrap();
        for (i, &s) in c.s().iter().enumerate() {
            let expected = -16.0 * s.powi(4) * (1.0 + s * s).powi(-5);
            assert!((r.values()[i] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn laplacian_of_inverse_square() {
        let err = |ns| {
            let c = Chart::axisymmetric(3, ns, 8).unwrap();
            let u = ScalarField::from_fn(c.clone(), |s, _| s * s).unwrap();
            let lap = flat_laplacian(&u).unwrap();
            c.s().iter()
                .enumerate()
                .map(|(i, s)| (lap.at(i, 3) - 2.0 * s.powi(4)).abs())
                .fold(0.0, f64::max)
        };
        assert!(err(41) < 1e-10, "{}", err(41));
        let c = Chart::radial(3, 41).unwrap();
        let v = ScalarField::from_fn(c, |s, _| s).unwrap();
        assert!(flat_laplacian(&v).unwrap().values().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn laplacian_with_angular_dependence() {
        // r^-2 P1(cos) = s^2 cos(theta) is harmonic for n = 3
        let err = |nt| {
            let c = Chart::axisymmetric(3, 41, nt).unwrap();
            let u = ScalarField::from_fn(c, |s, t| s * s * t.cos()).unwrap();
            let lap = flat_laplacian(&u).unwrap();
            lap.values().iter().map(|v| v.abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e2 < 1e-4 && e1 / e2 > 12.0, "{e1} {e2}");
    }

    #[test]
    fn frame_curvature_matches_conformal_formula() {
        // write (1 + s^2)^4 delta as explicit frame components
        let c = Chart::axisymmetric(3, 161, 16).unwrap();
        let w4 = |s: f64| (1.0 + s * s).powi(4);
        let comps = FrameComponents {
            rr: c.sample(|s, _| w4(s)),
            rt: vec![0.0; c.len()],
            tt: c.sample(|s, _| w4(s)),
            az: c.sample(|s, _| w4(s)),
        };
        let g = MetricField::from_components(c.clone(), comps).unwrap();
        let r = scalar_curvature(&g).unwrap();
        let exact = scalar_curvature(&conformal(c.clone(), &[1.0, 0.0, 1.0])).unwrap();
        assert!(r.max_abs_diff(&exact) < 1e-5, "{}", r.max_abs_diff(&exact));
        let rad = Chart::radial(3, 161).unwrap();
        let comps = FrameComponents {
            rr: rad.sample(|s, _| w4(s)),
            rt: vec![0.0; rad.len()],
            tt: rad.sample(|s, _| w4(s)),
            az: rad.sample(|s, _| w4(s)),
        };
        let g = MetricField::from_components(rad.clone(), comps).unwrap();
        let exact = scalar_curvature(&conformal(rad, &[1.0, 0.0, 1.0])).unwrap();
        assert!(scalar_curvature(&g).unwrap().max_abs_diff(&exact) < 1e-5);
    }

    #[test]
    fn non_diagonal_metric_is_flat_after_coordinate_change() {
        // pull back the flat metric along theta -> theta + eps s sin(theta):
        // curvature must vanish even though the frame components are not trivial
        let eps = 0.3;
        let c = Chart::axisymmetric(3, 121, 24).unwrap();
        let len = c.len();
        let mut comps = FrameComponents::flat(len);
        for k in 0..len {
            let (i, j) = c.split(k);
            let (s, t) = (c.s()[i], c.theta_at(j));
            let psi = t + eps * s * t.sin();
            // d psi = eps sin(t) ds + (1 + eps s cos t) dt, ds = -s^2 dr
            // r psi_r = -eps s sin(t)
            let r_psi_r = -eps * s * t.sin();
            let psi_t = 1.0 + eps * s * t.cos();
            comps.rr[k] = 1.0 + r_psi_r * r_psi_r;
            comps.rt[k] = r_psi_r * psi_t;
            comps.tt[k] = psi_t * psi_t;
            comps.az[k] = (psi.sin() / t.sin()).powi(2);
        }
        let g = MetricField::from_components(c.clone(), comps).unwrap();
        let r = scalar_curvature(&g).unwrap();
        let worst = r.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "max |R| = {worst}");
    }

    #[test]
    fn mean_curvature_law_matches_direct_computation() {
        let c = Chart::axisymmetric(3, 201, 8).unwrap();
        let g = MetricField::flat(c.clone());
        let u = ScalarField::from_fn(c.clone(), |s, _| 1.0 + s).unwrap();
        let predicted = conformal_mean_curvature(&g, &u).unwrap();
        let direct = boundary_mean_curvature(&conformal_transform(&g, &u).unwrap()).unwrap();
        // 2^-3 (4 * 1 - 2 * 2) = 0
        assert!(predicted.values().iter().all(|h| h.abs() < 1e-4));
        assert!(predicted.max_abs_diff(&direct) < 1e-4);
        let one = ScalarField::constant(c.clone(), 1.0);
        let h = conformal_mean_curvature(&g, &one).unwrap();
        assert!(h.values().iter().all(|v| (v + 2.0).abs() < 1e-12));
    }

    #[test]
    fn normal_derivative_orientation() {
        let c = Chart::radial(4, 201).unwrap();
        let u = ScalarField::from_fn(c.clone(), |s, _| s * s).unwrap();
        let d = normal_derivative(&MetricField::flat(c), &u).unwrap();
        assert!((d.values()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conformal_transform_checks() {
        let c = Chart::radial(3, 41).unwrap();
        let g = MetricField::flat(c.clone());
        let mut v = vec![1.0; c.len()];
        v[7] = -0.5;
        let phi = ScalarField::new(c.clone(), v).unwrap();
        assert!(matches!(conformal_transform(&g, &phi), Err(Error::Positivity { node: 7, .. })));
        let harmonic = conformal_transform_polynomial(&g, &[1.0, 0.5]).unwrap();
        assert!(scalar_curvature(&harmonic).unwrap().values().iter().all(|r| r.abs() < 1e-14));
        let axi = Chart::axisymmetric(3, 201, 8).unwrap();
        let spec = MetricSpec::Axisym(AxisymSpec {
            decay: 1.0,
            rr: vec![Term(1, 2, 0.3)],
            rt: vec![Term(2, 0, 0.1)],
            tt: vec![Term(1, 0, 0.2)],
            az: vec![Term(1, 0, 0.2)],
        });
        let g = metric_from_spec(axi.clone(), &spec).unwrap();
        let id = conformal_transform(&g, &ScalarField::constant(axi, 1.0)).unwrap();
        assert_eq!(id.components(), g.components());
    }
}
