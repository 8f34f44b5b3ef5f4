//! Discrete energy, the continuous initial energy, and the Lyapunov
//! functionals used as run-time diagnostics.
//!
//! The discrete energy carries no global factor 1/2 on its quadratic
//! terms but keeps 1/2 on the history term, so `E^n` is roughly twice the
//! continuous energy. All ratios and decay slopes are scale-free.

use crate::error::Result;
use crate::memory::{history_functional, History};
use crate::model::BresseParams;
use crate::stepper::{Discretization, SimState};
use crate::transform::{simpson, InitialData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub potential: f64,
    /// Half the history functional.
    pub memory: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValues {
    pub i: [f64; 6],
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    pub memory: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub lyapunov: Option<LyapunovValues>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub rows: Vec<EnergyRow>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy).collect()
    }

    pub fn has_lyapunov(&self) -> bool {
        self.rows.first().is_some_and(|r| r.lyapunov.is_some())
    }

    /// Rows with `t0 <= t <= t1` (inclusive, with a small slack for rounding).
    pub fn window(&self, t0: f64, t1: f64) -> impl Iterator<Item = &EnergyRow> {
        let eps = 1e-9 * t1.abs().max(1.0);
        self.rows
            .iter()
            .filter(move |r| r.t >= t0 - eps && r.t <= t1 + eps)
    }
}

fn add(a: &[f64], b: &[f64], c: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `E^n` for the state at step `state.n`; `hist` must hold snapshots
/// `0..=state.n`.
pub fn discrete_energy(state: &SimState, hist: &History, disc: &Discretization) -> Result<EnergyParts> {
    let BresseParams {
        rho1, rho2, k1, k2, k3, l, ..
    } = disc.params;
    let m = &disc.mats.mass;
    let k = &disc.mats.stiffness;
    let d = &disc.mats.coupling;

    let kinetic = rho1 * m.quad_form(&state.vphi) + rho1 * m.quad_form(&state.vw) + rho2 * m.quad_form(&state.vpsi);

    // ||phi_x + psi + l w||^2, with v = psi + l w
    let v = add(&state.psi, &state.w, l);
    let shear = k.quad_form(&state.phi) + 2.0 * d.bilinear(&v, &state.phi) + m.quad_form(&v);
    // ||w_x - l phi||^2
    let axial = k.quad_form(&state.w) - 2.0 * l * d.bilinear(&state.phi, &state.w) + l * l * m.quad_form(&state.phi);
    let bending = (k2 - disc.kernel.integral(state.t)) * k.quad_form(&state.psi);
    let potential = k1 * shear + k3 * axial + bending;

    let memory = if disc.kernel.is_zero() {
        0.0
    } else {
        0.5 * history_functional(hist, k, &state.psi, state.n)?
    };
    Ok(EnergyParts {
        kinetic,
        potential,
        memory,
        total: kinetic + potential + memory,
    })
}

/// `E(0)` of the continuous problem, by Simpson's rule on ten times as
/// many intervals as `elements` using exact derivatives of the profiles.
pub fn continuous_energy_init(p: &BresseParams, init: &InitialData, elements: usize) -> f64 {
    let len = p.length;
    let n = 10 * elements.max(1);
    let h = len / n as f64;
    let density: Vec<f64> = (0..=n)
        .map(|i| {
            let x = (i as f64 * h).min(len);
            let phi = init.phi0.eval(x, len);
            let psi = init.psi0.eval(x, len);
            let w = init.w0.eval(x, len);
            let shear = init.phi0.deriv(x, len) + psi + p.l * w;
            let axial = init.w0.deriv(x, len) - p.l * phi;
            let psi_x = init.psi0.deriv(x, len);
            p.rho1 * init.phi1.eval(x, len).powi(2)
                + p.rho2 * init.psi1.eval(x, len).powi(2)
                + p.rho1 * init.w1.eval(x, len).powi(2)
                + p.k2 * psi_x * psi_x
                + p.k3 * axial * axial
                + p.k1 * shear * shear
        })
        .collect();
    0.5 * simpson(&density, h)
}

/// Weights of the Lyapunov combination `L = N E + N1 I1 + N2 I2 + I3 + N4 I4 + N5 I5 + I6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights {
    pub n: f64,
    pub n1: f64,
    pub n2: f64,
    pub n4: f64,
    pub n5: f64,
}

impl LyapunovWeights {
    pub fn defaults(p: &BresseParams) -> Self {
        let n2 = 0.01;
        LyapunovWeights {
            n: 1000.0,
            n1: 200.0,
            n2,
            n4: p.k3 * n2,
            n5: 4.0 * p.k3 * n2,
        }
    }
}

/// `int_0^{x_i} v dy` by the cumulative trapezoid rule, exact for P1.
pub fn antiderivative(v: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (v[i - 1] + x);
        }
        out.push(acc);
    }
    out
}

/// The six functionals and their combination `L` at the current state.
/// `energy` is the already computed `E^n`.
pub fn lyapunov_diagnostics(
    state: &SimState,
    hist: &History,
    disc: &Discretization,
    weights: &LyapunovWeights,
    energy: f64,
) -> Result<LyapunovValues> {
    let BresseParams {
        rho1, rho2, k1, k2, k3, l, ..
    } = disc.params;
    let m = &disc.mats.mass;
    let d = &disc.mats.coupling;
    let h = disc.mesh.h();
    let dt = disc.dt;
    let n = state.n;
    let (phi, psi, w) = (&state.phi, &state.psi, &state.w);
    let (vphi, vpsi, vw) = (&state.vphi, &state.vpsi, &state.vw);

    // memory integrals: dt sum g psi^m and dt sum g (psi^n - psi^m)
    let (conv, diff) = if disc.kernel.is_zero() || n < hist.first_index() {
        (vec![0.0; psi.len()], vec![0.0; psi.len()])
    } else {
        let sum = hist.weighted_sum_through(n)?;
        let mass: f64 = (hist.first_index()..=n).map(|j| hist.lag_weight(n - j)).sum();
        let conv: Vec<f64> = sum.iter().map(|s| dt * s).collect();
        let diff: Vec<f64> = psi.iter().zip(&conv).map(|(p, c)| dt * mass * p - c).collect();
        (conv, diff)
    };

    let v = add(psi, w, l);
    // phi_x + psi + l w tested against a field u, as a vector: D phi + M v
    let shear_vec = add(&d.mul_vec(phi), &m.mul_vec(&v), 1.0);
    // w_x - l phi as a load vector: D w - l M phi
    let axial_vec = add(&d.mul_vec(w), &m.mul_vec(phi), -l);

    let phi0 = phi[0];
    let shear_integral: Vec<f64> = antiderivative(&v, h)
        .iter()
        .zip(phi)
        .map(|(a, p)| a + p - phi0)
        .collect();

    let i1 = -rho2 * m.bilinear(vpsi, &diff);
    let a_w = antiderivative(vw, h);
    let i2 = -rho1 * k3 * dot(&a_w, &axial_vec) - rho1 * k1 * m.bilinear(vphi, &shear_integral);
    let i3 = -rho1 * dot(vw, &shear_vec) - (k3 * rho1 / k1) * dot(vphi, &axial_vec);
    let i4 = -(rho1 * m.bilinear(phi, vphi) + rho2 * m.bilinear(psi, vpsi) + rho1 * m.bilinear(w, vw));
    let i5 = -rho2 * d.bilinear(&antiderivative(vpsi, h), psi);
    let i6 = rho2 * dot(vpsi, &shear_vec) + (k2 * rho1 / k1) * d.bilinear(vphi, psi)
        - (rho1 / k1) * d.bilinear(vphi, &conv);

    let lw = weights;
    let l_total = lw.n * energy + lw.n1 * i1 + lw.n2 * i2 + i3 + lw.n4 * i4 + lw.n5 * i5 + i6;
    Ok(LyapunovValues {
        i: [i1, i2, i3, i4, i5, i6],
        l: l_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem1d::build_mesh;
    use crate::model::Kernel;
    use crate::profile::Profile;

    fn params() -> BresseParams {
        BresseParams {
            rho1: 1.0,
            rho2: 1.0,
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            l: 0.0,
            length: 1.0,
        }
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let disc = Discretization::new(params(), Kernel::exponential(1.0, 3.0).unwrap(), build_mesh(1.0, 4).unwrap(), 0.1);
        let s = SimState::zeros(5);
        let mut h = History::new(disc.kernel, 0.1, false);
        h.push(s.psi.clone());
        let e = discrete_energy(&s, &h, &disc).unwrap();
        assert_eq!(e.total, 0.0);
        let lv = lyapunov_diagnostics(&s, &h, &disc, &LyapunovWeights::defaults(&disc.params), 0.0).unwrap();
        assert!(lv.i.iter().all(|v| *v == 0.0) && lv.l == 0.0);
    }

    #[test]
    fn initial_energy_closed_form() {
        let init = InitialData {
            psi0: "cos(1)".parse::<Profile>().unwrap(),
            ..InitialData::zero()
        };
        let pi2 = std::f64::consts::PI.powi(2);
        let want = 0.5 * (pi2 / 2.0 + 0.5);
        assert!((continuous_energy_init(&params(), &init, 16) - want).abs() < 1e-10);
        let scaled = continuous_energy_init(&params(), &init.scaled(3.0), 16);
        assert!((scaled - 9.0 * want).abs() < 1e-9);
    }

    #[test]
    fn antiderivative_of_linear_is_exact() {
        let h = 0.25;
        let v: Vec<f64> = (0..5).map(|i| 2.0 * i as f64 * h).collect();
        let a = antiderivative(&v, h);
        for (i, ai) in a.iter().enumerate() {
            let x = i as f64 * h;
            assert!((ai - x * x).abs() < 1e-15);
        }
    }
}
