//! Stored `psi` trajectory and the discrete convolution against the kernel.
//!
//! Snapshot `m` is `psi` at `t_m = m * dt`. The quadrature weight of
//! snapshot `m` at step `n` is `dt * g(t_{n-m})`; sums start at `m = 1`
//! unless `include_m0` is set.

use crate::error::{Error, Result};
use crate::fem1d::TriDiag;
use crate::model::{Kernel, KernelFamily};

#[derive(Debug, Clone)]
pub struct History {
    snapshots: Vec<Vec<f64>>,
    dt: f64,
    kernel: Kernel,
    include_m0: bool,
    /// `sum_{m=start}^{n} g(t_{n-m}) psi^m` for the latest `n`, exponential kernels only.
    recurrence: Option<Recurrence>,
}

#[derive(Debug, Clone)]
struct Recurrence {
    decay: f64,
    g0: f64,
    sum: Vec<f64>,
}

impl History {
    pub fn new(kernel: Kernel, dt: f64, include_m0: bool) -> Self {
        History {
            snapshots: Vec::new(),
            dt,
            kernel,
            include_m0,
            recurrence: None,
        }
    }

    /// Enables the O(1)-per-step recurrence for exponential kernels.
    /// Returns `false` (and keeps the direct sum) for other families.
    pub fn enable_exponential_fastpath(&mut self) -> bool {
        let KernelFamily::Exponential { a, b } = self.kernel.family() else {
            return false;
        };
        assert!(self.snapshots.is_empty(), "enable the fast path before pushing snapshots");
        self.recurrence = Some(Recurrence {
            decay: (-b * self.dt).exp(),
            g0: a,
            sum: Vec::new(),
        });
        true
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn first_index(&self) -> usize {
        usize::from(!self.include_m0)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshot(&self, m: usize) -> &[f64] {
        &self.snapshots[m]
    }

    pub fn push(&mut self, psi: Vec<f64>) {
        let m = self.snapshots.len();
        let include = m >= self.first_index();
        if let Some(rec) = self.recurrence.as_mut() {
            if rec.sum.is_empty() {
                rec.sum = vec![0.0; psi.len()];
            }
            for (r, v) in rec.sum.iter_mut().zip(&psi) {
                *r = rec.decay * *r + if include { rec.g0 * v } else { 0.0 };
            }
        }
        self.snapshots.push(psi);
    }

    /// `g(j dt)`.
    pub fn lag_weight(&self, j: usize) -> f64 {
        self.kernel.value(j as f64 * self.dt)
    }

    fn ensure(&self, step: usize, need: usize) -> Result<()> {
        if self.snapshots.len() < need {
            return Err(Error::HistoryTooShort {
                step,
                have: self.snapshots.len(),
                need,
            });
        }
        Ok(())
    }

    /// `sum_{m=start}^{upto} g(t_{n-m}) psi^m`, direct summation.
    fn weighted_sum(&self, n: usize, upto: usize) -> Vec<f64> {
        let dim = self.snapshots.first().map_or(0, Vec::len);
        let mut acc = vec![0.0; dim];
        for m in self.first_index()..=upto {
            let w = self.lag_weight(n - m);
            if w == 0.0 {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(&self.snapshots[m]) {
                *a += w * v;
            }
        }
        acc
    }

    /// `sum_{m=start}^{n-1} g(t_{n-m}) psi^m`: the part of the step-`n`
    /// memory term known before `psi^n` is solved for. Needs snapshots
    /// `0..n`.
    pub fn lagged_sum(&self, n: usize) -> Result<Vec<f64>> {
        self.ensure(n, n)?;
        if n == 0 {
            return Ok(vec![0.0; self.snapshots.first().map_or(0, Vec::len)]);
        }
        if let Some(rec) = &self.recurrence {
            if self.snapshots.len() == n {
                return Ok(rec.sum.iter().map(|r| rec.decay * r).collect());
            }
        }
        Ok(self.weighted_sum(n, n - 1))
    }

    /// As [`History::lagged_sum`], always by direct summation.
    pub fn lagged_sum_direct(&self, n: usize) -> Result<Vec<f64>> {
        self.ensure(n, n)?;
        if n == 0 {
            return Ok(vec![0.0; self.snapshots.first().map_or(0, Vec::len)]);
        }
        Ok(self.weighted_sum(n, n - 1))
    }

    pub(crate) fn weighted_sum_through(&self, n: usize) -> Result<Vec<f64>> {
        self.ensure(n, n + 1)?;
        Ok(self.weighted_sum(n, n))
    }
}

/// `dt * sum_{m=1}^{n} g(t_{n-m}) K psi^m`, the memory load of the `psi`
/// equation at step `n` (it enters with a minus sign).
pub fn convolution_load(hist: &History, stiffness: &TriDiag, n: usize) -> Result<Vec<f64>> {
    let dim = stiffness.dim();
    if n == 0 {
        return Ok(vec![0.0; dim]);
    }
    let sum = hist.weighted_sum_through(n)?;
    let dt = hist.dt();
    Ok(stiffness.mul_vec(&sum).into_iter().map(|v| dt * v).collect())
}

/// `dt * sum_{m=1}^{n} g(t_{n-m}) (psi^n - psi^m)^T K (psi^n - psi^m)`.
///
/// For P1 functions this is exactly `dt int sum g(t_{n-m}) (psi^n_x - psi^m_x)^2 dx`.
pub fn history_functional(
    hist: &History,
    stiffness: &TriDiag,
    psi_n: &[f64],
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    hist.ensure(n, n)?;
    let mut diff = vec![0.0; psi_n.len()];
    let mut total = 0.0;
    let upto = n.min(hist.len() - 1);
    for m in hist.first_index()..=upto {
        let w = hist.lag_weight(n - m);
        if w == 0.0 {
            continue;
        }
        for ((d, a), b) in diff.iter_mut().zip(psi_n).zip(hist.snapshot(m)) {
            *d = a - b;
        }
        total += w * stiffness.quad_form(&diff);
    }
    Ok(hist.dt() * total)
}
