//! Removal of the rigid modes of `psi` and `w`.
//!
//! Integrating the `psi` and `w` equations over the beam gives a closed
//! 2x2 ODE for the means `P(t) = int psi`, `W(t) = int w`. Its solution is
//! an oscillation at angular frequency `a0` plus a linear drift along the
//! energy-free direction `psi + l w = const`. Subtracting `P/L`, `W/L`
//! leaves data with zero mean that solves the same equations.

use crate::fem1d::Mesh;
use crate::model::BresseParams;
use crate::profile::Profile;

/// Means below this are treated as already zero.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// The six initial profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub phi0: Profile,
    pub phi1: Profile,
    pub psi0: Profile,
    pub psi1: Profile,
    pub w0: Profile,
    pub w1: Profile,
}

impl InitialData {
    pub fn zero() -> Self {
        InitialData {
            phi0: Profile::zero(),
            phi1: Profile::zero(),
            psi0: Profile::zero(),
            psi1: Profile::zero(),
            w0: Profile::zero(),
            w1: Profile::zero(),
        }
    }

    /// Defaults: `phi0 = bump`, `psi0 = cos(pi x/L)`, `w0 = cos(2 pi x/L)`,
    /// zero velocities.
    pub fn default_profiles() -> Self {
        InitialData {
            phi0: "bump".parse().unwrap(),
            psi0: "cos(1)".parse().unwrap(),
            w0: "cos(2)".parse().unwrap(),
            ..InitialData::zero()
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        InitialData {
            phi0: self.phi0.scaled(c),
            phi1: self.phi1.scaled(c),
            psi0: self.psi0.scaled(c),
            psi1: self.psi1.scaled(c),
            w0: self.w0.scaled(c),
            w1: self.w1.scaled(c),
        }
    }

    /// Largest endpoint value of `phi0` or `phi1`.
    pub fn dirichlet_defect(&self, length: f64) -> f64 {
        [&self.phi0, &self.phi1]
            .iter()
            .flat_map(|p| [p.eval(0.0, length), p.eval(length, length)])
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Composite Simpson rule on equally spaced samples; the last three
/// intervals use the 3/8 rule when the interval count is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let even_end = if n % 2 == 0 { n } else { n - 3 };
            let mut acc = 0.0;
            let mut i = 0;
            while i < even_end {
                acc += values[i] + 4.0 * values[i + 1] + values[i + 2];
                i += 2;
            }
            let mut total = acc * h / 3.0;
            if n % 2 == 1 {
                let v = &values[n - 3..=n];
                total += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            total
        }
    }
}

fn mesh_integral(p: &Profile, mesh: &Mesh) -> f64 {
    let len = mesh.length();
    let samples: Vec<f64> = mesh.nodes().iter().map(|&x| p.eval(x, len)).collect();
    simpson(&samples, mesh.h())
}

/// Frequency and amplitudes of the rigid-mode trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeConstants {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl ModeConstants {
    pub fn is_trivial(&self) -> bool {
        [self.a1, self.a2, self.a3, self.a4]
            .iter()
            .all(|a| a.abs() <= MEAN_TOLERANCE)
    }

    /// `int_0^L psi(x, t) dx`.
    pub fn psi_mean(&self, t: f64) -> f64 {
        let (s, c) = (self.a0 * t).sin_cos();
        self.a1 * c + self.a2 * s + self.a3 * t + self.a4
    }

    /// `int_0^L w(x, t) dx`.
    pub fn w_mean(&self, t: f64, p: &BresseParams) -> f64 {
        let (s, c) = (self.a0 * t).sin_cos();
        oscillation_ratio(p) * (self.a1 * c + self.a2 * s) - (self.a3 * t + self.a4) / p.l
    }
}

/// `(rho2 a0^2 / k1 - 1) / l`, which simplifies to `l rho2 / rho1`.
fn oscillation_ratio(p: &BresseParams) -> f64 {
    p.l * p.rho2 / p.rho1
}

pub fn compute_mode_constants(p: &BresseParams, init: &InitialData, mesh: &Mesh) -> ModeConstants {
    let a0 = (p.k1 / p.rho2 + p.l * p.l * p.k1 / p.rho1).sqrt();
    let psi0 = mesh_integral(&init.psi0, mesh);
    let psi1 = mesh_integral(&init.psi1, mesh);
    let w0 = mesh_integral(&init.w0, mesh);
    let w1 = mesh_integral(&init.w1, mesh);
    let r = p.k1 / (p.rho2 * a0 * a0);
    ModeConstants {
        a0,
        a1: r * psi0 + p.l * r * w0,
        a2: (r * psi1 + p.l * r * w1) / a0,
        a3: (1.0 - r) * psi1 - p.l * r * w1,
        // minus sign on the w0 term: required for a1 + a4 = int psi0
        a4: (1.0 - r) * psi0 - p.l * r * w0,
    }
}

/// Subtracts the rigid-mode values at `t = 0` from `psi` and `w` data.
pub fn shift_initial_data(init: &InitialData, c: &ModeConstants, p: &BresseParams) -> InitialData {
    let len = p.length;
    let ratio = oscillation_ratio(p);
    InitialData {
        phi0: init.phi0.clone(),
        phi1: init.phi1.clone(),
        psi0: init.psi0.shifted(-(c.a1 + c.a4) / len),
        psi1: init.psi1.shifted(-(c.a0 * c.a2 + c.a3) / len),
        w0: init.w0.shifted(-(c.a1 * ratio - c.a4 / p.l) / len),
        w1: init.w1.shifted(-(c.a2 * c.a0 * ratio - c.a3 / p.l) / len),
    }
}

/// Adds the rigid-mode trajectory at time `t` back onto shifted nodal
/// `psi`, `w` snapshots.
pub fn reconstruct_original(
    psi: &[f64],
    w: &[f64],
    c: &ModeConstants,
    p: &BresseParams,
    t: f64,
) -> (Vec<f64>, Vec<f64>) {
    let dpsi = c.psi_mean(t) / p.length;
    let dw = c.w_mean(t, p) / p.length;
    (
        psi.iter().map(|v| v + dpsi).collect(),
        w.iter().map(|v| v + dw).collect(),
    )
}
