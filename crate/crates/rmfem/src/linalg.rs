//! Banded symmetric positive definite solver (Cholesky).

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix, column-major within the band:
/// entry (i, j) with 0 <= i - j <= bw lives at `data[j * (bw + 1) + (i - j)]`.
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        // symmetric: only the lower triangle is stored
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw);
        self.data[j * (self.bw + 1) + (i - j)] += v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * (self.bw + 1) + (i - j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * (self.bw + 1) + (i - j)] = v;
    }

    /// In-place Cholesky factorization A = L L^T.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut d = self.get(j, j);
            for k in start..j {
                let l = self.get(j, k);
                d -= l * l;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::SingularSystem(format!(
                    "non-positive pivot {d:.3e} at row {j} of {n}"
                )));
            }
            let ljj = d.sqrt();
            self.set(j, j, ljj);
            let imax = (j + bw).min(n - 1);
            for i in j + 1..=imax {
                let mut s = self.get(i, j);
                let kstart = start.max(i.saturating_sub(bw));
                for k in kstart..j {
                    s -= self.get(i, k) * self.get(j, k);
                }
                self.set(i, j, s / ljj);
            }
        }
        Ok(BandedCholesky { n, bw, data: self.data })
    }
}

pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.data[j * (self.bw + 1) + (i - j)]
    }

    #[allow(clippy::needless_range_loop)] // triangular sweeps read naturally indexed
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let mut s = y[i];
            for j in start..i {
                s -= self.l(i, j) * y[j];
            }
            y[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            let imax = (i + bw).min(n - 1);
            let mut s = y[i];
            for j in i + 1..=imax {
                s -= self.l(j, i) * y[j];
            }
            y[i] = s / self.l(i, i);
        }
        y
    }
}
