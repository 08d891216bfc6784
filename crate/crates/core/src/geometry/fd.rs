//! Fourth-order finite differences on chart nodes.
//!
//! Along `s` the stencils are centred in the interior and one-sided at the
//! two ends. Along `theta` every node is interior: ghost cells reflect across
//! the poles with the field's parity.

use super::chart::Chart;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

pub(crate) fn diff1_line(f: &[f64], h: f64, out: &mut [f64]) {
    let m = f.len();
    debug_assert!(m >= 6);
    let c = 1.0 / (12.0 * h);
    out[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    out[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for i in 2..m - 2 {
        out[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    }
    let l = m - 1;
    out[l] = -c * (-25.0 * f[l] + 48.0 * f[l - 1] - 36.0 * f[l - 2] + 16.0 * f[l - 3] - 3.0 * f[l - 4]);
    out[l - 1] =
        -c * (-3.0 * f[l] - 10.0 * f[l - 1] + 18.0 * f[l - 2] - 6.0 * f[l - 3] + f[l - 4]);
}

pub(crate) fn diff2_line(f: &[f64], h: f64, out: &mut [f64]) {
    let m = f.len();
    debug_assert!(m >= 6);
    let c = 1.0 / (12.0 * h * h);
    let edge0 = |g: &dyn Fn(usize) -> f64| {
        c * (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4) - 10.0 * g(5))
    };
    let edge1 = |g: &dyn Fn(usize) -> f64| {
        c * (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5))
    };
    out[0] = edge0(&|k| f[k]);
    out[1] = edge1(&|k| f[k]);
    for i in 2..m - 2 {
        out[i] = c * (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]);
    }
    let l = m - 1;
    out[l] = edge0(&|k| f[l - k]);
    out[l - 1] = edge1(&|k| f[l - k]);
}

fn ghost(f: &[f64], j: isize, parity: Parity) -> f64 {
    let m = f.len() as isize;
    if j < 0 {
        parity.sign() * f[(-j - 1) as usize]
    } else if j >= m {
        parity.sign() * f[(2 * m - j - 1) as usize]
    } else {
        f[j as usize]
    }
}

pub(crate) fn diff1_angle(f: &[f64], h: f64, parity: Parity, out: &mut [f64]) {
    let c = 1.0 / (12.0 * h);
    for (j, o) in out.iter_mut().enumerate() {
        let g = |d: isize| ghost(f, j as isize + d, parity);
        *o = c * (g(-2) - 8.0 * g(-1) + 8.0 * g(1) - g(2));
    }
}

pub(crate) fn diff2_angle(f: &[f64], h: f64, parity: Parity, out: &mut [f64]) {
    let c = 1.0 / (12.0 * h * h);
    for (j, o) in out.iter_mut().enumerate() {
        let g = |d: isize| ghost(f, j as isize + d, parity);
        *o = c * (-g(-2) + 16.0 * g(-1) - 30.0 * g(0) + 16.0 * g(1) - g(2));
    }
}

/// `df/ds` at every node.
pub fn d_s(chart: &Chart, f: &[f64]) -> Vec<f64> {
    along_s(chart, f, diff1_line)
}

/// `d2f/ds2` at every node.
pub fn d_ss(chart: &Chart, f: &[f64]) -> Vec<f64> {
    along_s(chart, f, diff2_line)
}

/// `df/dtheta` at every node; identically zero on a radial chart.
pub fn d_theta(chart: &Chart, f: &[f64], parity: Parity) -> Vec<f64> {
    along_theta(chart, f, parity, diff1_angle)
}

pub fn d_thth(chart: &Chart, f: &[f64], parity: Parity) -> Vec<f64> {
    along_theta(chart, f, parity, diff2_angle)
}

fn along_s(chart: &Chart, f: &[f64], kernel: fn(&[f64], f64, &mut [f64])) -> Vec<f64> {
    let (ns, nt) = (chart.ns(), chart.ntheta());
    let mut out = vec![0.0; f.len()];
    let mut line = vec![0.0; ns];
    let mut res = vec![0.0; ns];
    for j in 0..nt {
        for i in 0..ns {
            line[i] = f[i * nt + j];
        }
        kernel(&line, chart.hs(), &mut res);
        for i in 0..ns {
            out[i * nt + j] = res[i];
        }
    }
    out
}

fn along_theta(
    chart: &Chart,
    f: &[f64],
    parity: Parity,
    kernel: fn(&[f64], f64, Parity, &mut [f64]),
) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    if !chart.is_axisymmetric() {
        return out;
    }
    let nt = chart.ntheta();
    for (row, o) in f.chunks(nt).zip(out.chunks_mut(nt)) {
        kernel(row, chart.htheta(), parity, o);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_derivatives_are_exact_on_quartics() {
        let c = Chart::radial(3, 11).unwrap();
        let f = c.sample(|s, _| 1.0 - 2.0 * s + 3.0 * s * s - s.powi(3) + 0.5 * s.powi(4));
        let df = d_s(&c, &f);
        let ddf = d_ss(&c, &f);
        for (i, &s) in c.s().iter().enumerate() {
            let e1 = -2.0 + 6.0 * s - 3.0 * s * s + 2.0 * s.powi(3);
            let e2 = 6.0 - 6.0 * s + 6.0 * s * s;
            assert!((df[i] - e1).abs() < 1e-11, "i={i}");
            assert!((ddf[i] - e2).abs() < 1e-9, "i={i}");
        }
    }

    #[test]
    fn theta_derivatives_converge_with_ghosts() {
        let err = |nt: usize| {
            let c = Chart::axisymmetric(3, 6, nt).unwrap();
            let even = c.sample(|_, t| t.cos().powi(2));
            let odd = c.sample(|_, t| t.sin() * t.cos());
            let de = d_theta(&c, &even, Parity::Even);
            let ddo = d_thth(&c, &odd, Parity::Odd);
            let mut e = 0f64;
            for (k, _) in even.iter().enumerate() {
                let t = c.theta_at(k % nt);
                e = e.max((de[k] + (2.0 * t).sin()).abs());
                e = e.max((ddo[k] + 2.0 * (2.0 * t).sin()).abs());
            }
            e
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e2 < 1e-4);
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }
}
