//! Symmetric banded matrices and their Cholesky factorization.
//!
//! Every implicit operator in the crate (Dirichlet Laplacian, variable
//! coefficient diffusion, the squared Laplacian of the biharmonic term) is
//! symmetric positive definite on the interior unknowns and banded under the
//! lexicographic node ordering, so a band Cholesky is all the direct solver
//! machinery required.

use crate::error::{Error, Result};

/// Symmetric band matrix storing the lower band row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    // data[i * (bw + 1) + (i - j)] = A[i][j] for i - bw <= j <= i
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        for i in 0..n {
            m.data[i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.bw).then(|| i * (self.bw + 1) + (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `value` to the symmetric pair (i, j), (j, i).
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i},{j}) outside bandwidth {}", self.bw));
        self.data[s] += value;
    }

    /// Returns a copy embedded in a wider band.
    pub fn widened(&self, bw: usize) -> Self {
        assert!(bw >= self.bw);
        let mut out = Self::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                out.add(i, j, self.get(i, j));
            }
        }
        out
    }

    /// `self + alpha * other`, widening to the larger bandwidth.
    pub fn plus_scaled(&self, alpha: f64, other: &BandMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.widened(self.bw.max(other.bw));
        for i in 0..other.n {
            for j in i.saturating_sub(other.bw)..=i {
                out.add(i, j, alpha * other.get(i, j));
            }
        }
        out
    }

    /// Matrix square `A * A` (symmetric, bandwidth doubles).
    pub fn square(&self) -> Self {
        self.mul_commuting(self)
    }

    /// Product `A * B` of two commuting symmetric band matrices, which is
    /// again symmetric. Only the lower band of the product is computed.
    pub fn mul_commuting(&self, other: &BandMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let bw = (self.bw + other.bw).min(self.n.saturating_sub(1));
        let mut out = Self::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i.saturating_sub(bw)..=i {
                let lo = i.saturating_sub(self.bw).max(j.saturating_sub(other.bw));
                let hi = (i + self.bw).min(j + other.bw).min(self.n - 1);
                let mut s = 0.0;
                for k in lo..=hi {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.add(i, j, s);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = i * (self.bw + 1);
            y[i] += self.data[row] * x[i];
            for off in 1..=self.bw.min(i) {
                let a = self.data[row + off];
                let j = i - off;
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }

    /// Band Cholesky `A = L L^T`.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.data.clone();
        let idx = |i: usize, j: usize| i * (bw + 1) + (i - j);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = l[idx(i, j)];
                for k in lo.max(j.saturating_sub(bw))..j {
                    s -= l[idx(i, k)] * l[idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { row: i, pivot: s });
                    }
                    l[idx(i, i)] = s.sqrt();
                } else {
                    l[idx(i, j)] = s / l[idx(j, j)];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }
}

/// Cholesky factor of a [`BandMatrix`].
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let (n, bw) = (self.n, self.bw);
        let idx = |i: usize, j: usize| i * (bw + 1) + (i - j);
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(bw)..i {
                s -= self.l[idx(i, j)] * x[j];
            }
            x[i] = s / self.l[idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..(i + bw + 1).min(n) {
                s -= self.l[idx(j, i)] * x[j];
            }
            x[i] = s / self.l[idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> BandMatrix {
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = tridiag(17);
        let x: Vec<f64> = (0..17).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = a.mul_vec(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn square_matches_double_application() {
        let a = tridiag(9);
        let x: Vec<f64> = (0..9).map(|i| 1.0 + i as f64).collect();
        let direct = a.mul_vec(&a.mul_vec(&x));
        let sq = a.square().mul_vec(&x);
        for (p, q) in direct.iter().zip(&sq) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_matches_triple_application() {
        let a = tridiag(12);
        let x: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let direct = a.mul_vec(&a.mul_vec(&a.mul_vec(&x)));
        let cube = a.mul_commuting(&a.square()).mul_vec(&x);
        for (p, q) in direct.iter().zip(&cube) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = tridiag(4);
        a.add(2, 2, -10.0);
        assert!(matches!(a.cholesky(), Err(Error::Factorization { row: 2, .. })));
    }
}
