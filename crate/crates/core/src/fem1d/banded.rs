use crate::error::{Error, Result};

/// Symmetric matrix stored as its upper band: `A[i][i + d]` for `0 <= d <= kd`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBandMatrix {
    n: usize,
    kd: usize,
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, kd: usize) -> Self {
        SymBandMatrix {
            n,
            kd,
            data: vec![0.0; n * (kd + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        (c - r <= self.kd && c < self.n).then(|| r * (self.kd + 1) + (c - r))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.data[k] = v;
    }

    /// Adds `v` to the symmetric pair `(i, j)` / `(j, i)`; call once per pair.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.data[k] += v;
    }

    pub(crate) fn clear_row_col(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kd);
        let hi = (i + self.kd).min(self.n - 1);
        for j in lo..=hi {
            let k = self.slot(i, j).unwrap();
            self.data[k] = 0.0;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.kd + 1)..(i + 1) * (self.kd + 1)];
            y[i] += row[0] * x[i];
            for d in 1..=self.kd {
                let j = i + d;
                if j >= self.n {
                    break;
                }
                y[i] += row[d] * x[j];
                y[j] += row[d] * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Banded Cholesky factorization `A = U^T U`.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, kd) = (self.n, self.kd);
        let w = kd + 1;
        let mut u = self.data.clone();
        for i in 0..n {
            // u[i][i..] -= sum_k u[k][i] * u[k][i..] over rows k above i within the band
            let k0 = i.saturating_sub(kd);
            for k in k0..i {
                let uki = u[k * w + (i - k)];
                if uki == 0.0 {
                    continue;
                }
                let jmax = (k + kd).min(n - 1);
                for j in i..=jmax {
                    u[i * w + (j - i)] -= uki * u[k * w + (j - k)];
                }
            }
            let pivot = u[i * w];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: i, pivot });
            }
            let d = pivot.sqrt();
            u[i * w] = d;
            let jmax = (i + kd).min(n - 1);
            for j in (i + 1)..=jmax {
                u[i * w + (j - i)] /= d;
            }
        }
        Ok(BandCholesky { n, kd, u })
    }
}

/// Upper-triangular banded Cholesky factor, reused across right-hand sides.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    kd: usize,
    u: Vec<f64>,
}

impl BandCholesky {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kd) = (self.n, self.kd);
        let w = kd + 1;
        assert_eq!(b.len(), n);
        // U^T y = b
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(kd)..i {
                s -= self.u[k * w + (i - k)] * b[k];
            }
            b[i] = s / self.u[i * w];
        }
        // U x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            let jmax = (i + kd).min(n - 1);
            for j in (i + 1)..=jmax {
                s -= self.u[i * w + (j - i)] * b[j];
            }
            b[i] = s / self.u[i * w];
        }
    }
}
