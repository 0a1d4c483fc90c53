//! Symmetric positive-definite banded matrices and their Cholesky factor.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix; row `i` stores columns `i-bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Adds `v` to entry (i, j) with j ≤ i.
    #[inline]
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// In-place Cholesky factorization A = L Lᵀ.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let bw = self.bw;
        let w = bw + 1;
        for i in 0..self.n {
            let row_start = i.saturating_sub(bw);
            for j in row_start..=i {
                let k0 = row_start.max(j.saturating_sub(bw));
                let (ri, rj) = (i * w + bw - i, j * w + bw - j);
                let mut s = self.data[ri + j];
                let a = &self.data[ri + k0..ri + j];
                let b = &self.data[rj + k0..rj + j];
                s -= a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Singular {
                            what: "field stiffness matrix".into(),
                            condition: f64::INFINITY,
                        });
                    }
                    self.data[ri + i] = s.sqrt();
                } else {
                    self.data[ri + j] = s / self.data[rj + j];
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.l.n;
        let bw = self.l.bw;
        let w = bw + 1;
        let d = &self.l.data;
        for i in 0..n {
            let k0 = i.saturating_sub(bw);
            let r = i * w + bw - i;
            let s: f64 = d[r + k0..r + i].iter().zip(&x[k0..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / d[r + i];
        }
        for i in (0..n).rev() {
            let r = i * w + bw - i;
            x[i] /= d[r + i];
            let xi = x[i];
            let k0 = i.saturating_sub(bw);
            for (k, xk) in (k0..i).zip(x[k0..i].iter_mut()) {
                *xk -= d[r + k] * xi;
            }
        }
    }
}
