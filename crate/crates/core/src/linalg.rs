//! Banded LU factorization with partial pivoting.
//!
//! Rows are stored as windows of width `2·kl + ku + 1` so that the fill-in
//! produced by row interchanges stays inside the storage.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular at column {column}")]
    Singular { column: usize },
    #[error("entry ({row}, {col}) lies outside the band")]
    OutsideBand { row: usize, col: usize },
}

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        row * self.width + (col + self.kl - row)
    }

    #[inline]
    fn in_storage(&self, row: usize, col: usize) -> bool {
        col + self.kl >= row && col <= row + self.ku + self.kl && col < self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if self.in_storage(row, col) {
            self.data[self.slot(row, col)]
        } else {
            0.0
        }
    }

    /// Adds `value` to entry `(row, col)`.
    pub fn add(&mut self, row: usize, col: usize, value: f64) -> Result<(), LinalgError> {
        if row >= self.n || col >= self.n || col + self.kl < row || col > row + self.ku {
            return Err(LinalgError::OutsideBand { row, col });
        }
        let s = self.slot(row, col);
        self.data[s] += value;
        Ok(())
    }

    /// Replaces row `row` with zeros.
    pub fn clear_row(&mut self, row: usize) {
        let start = row * self.width;
        self.data[start..start + self.width].iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factorizes in place.
    pub fn factor(mut self) -> Result<BandedLu, LinalgError> {
        let n = self.n;
        let reach = self.kl + self.ku;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular { column: k });
            }
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[sik] = l;
                for j in k + 1..=last_col {
                    let skj = self.data[self.slot(k, j)];
                    let sij = self.slot(i, j);
                    self.data[sij] -= l * skj;
                }
            }
        }
        Ok(BandedLu { m: self, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.m;
        let n = a.n;
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    x[i] -= a.data[a.slot(i, k)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + a.kl + a.ku).min(n - 1) {
                s -= a.data[a.slot(i, j)] * x[j];
            }
            x[i] = s / a.data[a.slot(i, i)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_from(n: usize, kl: usize, ku: usize, f: impl Fn(usize, usize) -> f64) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                m.add(i, j, f(i, j)).unwrap();
            }
        }
        m
    }

    #[test]
    fn solves_system_needing_pivoting() {
        // zero diagonal forces interchanges
        let n = 40;
        let m = dense_from(n, 3, 2, |i, j| {
            if i == j {
                0.0
            } else {
                1.0 + ((3 * i + 7 * j) % 11) as f64 * 0.1
            }
        });
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = m.mul_vec(&x_true);
        let lu = m.factor().unwrap();
        let x = lu.solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_out_of_band() {
        let mut m = BandedMatrix::zeros(5, 1, 1);
        assert!(m.add(0, 3, 1.0).is_err());
    }

    #[test]
    fn singular_is_reported() {
        let m = BandedMatrix::zeros(3, 1, 1);
        assert!(matches!(m.factor(), Err(LinalgError::Singular { column: 0 })));
    }
}
