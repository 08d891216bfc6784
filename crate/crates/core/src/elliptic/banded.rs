//! Banded LU factorization without pivoting.
//!
//! Rows are stored densely over the band `[i - kl, i + ku]`. Without pivoting
//! the factors stay inside the band, and a non-positive pivot is read as a
//! sign that the discrete operator is singular or indefinite.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

/// Relative pivot threshold.
pub const PIVOT_EPS: f64 = 1e-13;

impl BandedLu {
    /// `entries` yields `(row, col, value)`; duplicates are summed.
    pub fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        entries: impl Iterator<Item = (usize, usize, f64)>,
    ) -> Result<BandedLu> {
        let width = kl + ku + 1;
        let mut data = vec![0.0; n * width];
        for (r, c, v) in entries {
            assert!(c + kl >= r && c <= r + ku, "entry ({r}, {c}) outside band");
            data[r * width + c + kl - r] += v;
        }
        let scale: Vec<f64> = (0..n)
            .map(|r| {
                data[r * width..(r + 1) * width]
                    .iter()
                    .fold(0f64, |m, v| m.max(v.abs()))
            })
            .collect();
        for k in 0..n {
            let pivot = data[k * width + kl];
            if !(pivot > PIVOT_EPS * scale[k]) {
                return Err(Error::DiscreteIsomorphism { row: k, pivot });
            }
            let jmax = (k + ku).min(n - 1);
            let (head, tail) = data.split_at_mut((k + 1) * width);
            let urow = &head[k * width + kl + 1..k * width + kl + 1 + (jmax - k)];
            for i in k + 1..=(k + kl).min(n - 1) {
                let row = &mut tail[(i - k - 1) * width..(i - k) * width];
                let off = k + kl - i;
                let l = row[off] / pivot;
                if l == 0.0 {
                    continue;
                }
                row[off] = l;
                for (x, u) in row[off + 1..off + 1 + (jmax - k)].iter_mut().zip(urow) {
                    *x -= l * u;
                }
            }
        }
        Ok(BandedLu { n, kl, ku, width, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c + self.kl - r]
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let lo = i.saturating_sub(self.kl);
            let mut acc = x[i];
            for j in lo..i {
                acc -= self.at(i, j) * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + self.ku).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=hi {
                acc -= self.at(i, j) * x[j];
            }
            x[i] = acc / self.at(i, i);
        }
    }

    /// Solves `A^T x = b` in place.
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        // U^T y = b
        for i in 0..n {
            x[i] /= self.at(i, i);
            let xi = x[i];
            for j in i + 1..=(i + self.ku).min(n - 1) {
                x[j] -= self.at(i, j) * xi;
            }
        }
        // L^T z = y
        for i in (0..n).rev() {
            let xi = x[i];
            for j in i.saturating_sub(self.kl)..i {
                x[j] -= self.at(i, j) * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, d: f64) -> Vec<(usize, usize, f64)> {
        let mut e = Vec::new();
        for i in 0..n {
            e.push((i, i, d));
            if i > 0 {
                e.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                e.push((i, i + 1, -1.0));
            }
        }
        e
    }

    #[test]
    fn solves_and_transposes() {
        let mut e = tridiag(6, 3.0);
        e.push((4, 2, 0.5));
        e.push((1, 3, -0.25));
        let lu = BandedLu::factor(6, 2, 2, e.clone().into_iter()).unwrap();
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let mut b = vec![0.0; 6];
        let mut bt = vec![0.0; 6];
        for &(r, c, v) in &e {
            b[r] += v * x[c];
            bt[c] += v * x[r];
        }
        lu.solve_in_place(&mut b);
        lu.solve_transpose_in_place(&mut bt);
        for i in 0..6 {
            assert!((b[i] - x[i]).abs() < 1e-14);
            assert!((bt[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_pivot_reported() {
        let e = tridiag(10, 1.0);
        assert!(matches!(
            BandedLu::factor(10, 1, 1, e.into_iter()),
            Err(Error::DiscreteIsomorphism { .. })
        ));
    }
}
