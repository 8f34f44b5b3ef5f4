//! Physical parameters, relaxation kernels and the admissibility checks
//! that decide which decay regime applies.

use std::fmt;

use crate::error::{Error, Result};

/// Warning threshold for the curvature product `l * L`.
pub const CURVATURE_SMALLNESS: f64 = 0.5;

/// Default relative tolerance for wave-speed equality.
pub const DEFAULT_SPEED_TOL: f64 = 1e-9;

/// Material and geometric constants of the curved beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BresseParams {
    /// Mass density.
    pub rho1: f64,
    /// Rotational inertia density.
    pub rho2: f64,
    /// Shear stiffness.
    pub k1: f64,
    /// Bending stiffness.
    pub k2: f64,
    /// Axial stiffness.
    pub k3: f64,
    /// Curvature.
    pub l: f64,
    /// Beam length.
    pub length: f64,
}

impl BresseParams {
    fn named_fields(&self) -> [(&'static str, f64); 7] {
        [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("l", self.l),
            ("L", self.length),
        ]
    }
}

/// Parameters that passed validation, plus any soft warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams {
    pub params: BresseParams,
    pub warnings: Vec<String>,
}

/// Checks strict positivity of every constant and flags a large curvature.
pub fn validate_params(raw: BresseParams) -> Result<ValidatedParams> {
    for (name, value) in raw.named_fields() {
        // NaN fails this comparison as well
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveParameter(name));
        }
    }
    let mut warnings = Vec::new();
    let curvature = raw.l * raw.length;
    if curvature > CURVATURE_SMALLNESS {
        warnings.push(format!(
            "l*L = {curvature} exceeds {CURVATURE_SMALLNESS}; decay theorems assume small curvature"
        ));
    }
    Ok(ValidatedParams {
        params: raw,
        warnings,
    })
}

/// Wave speeds and the equal-speed flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedReport {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    /// `k1/rho1 == k2/rho2` within the relative tolerance.
    pub equal_first_pair: bool,
    /// `k1 == k3` within the relative tolerance.
    pub k1_equals_k3: bool,
}

impl SpeedReport {
    /// Both conditions of the exponential-decay regime hold.
    pub fn equal_speeds(&self) -> bool {
        self.equal_first_pair && self.k1_equals_k3
    }
}

fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

pub fn wave_speeds(p: &BresseParams, tol: f64) -> SpeedReport {
    let c1 = p.k1 / p.rho1;
    let c2 = p.k2 / p.rho2;
    SpeedReport {
        s1: c1.sqrt(),
        s2: c2.sqrt(),
        s3: (p.k3 / p.rho1).sqrt(),
        equal_first_pair: rel_eq(c1, c2, tol),
        k1_equals_k3: rel_eq(p.k1, p.k3, tol),
    }
}

/// Relaxation kernel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `g = 0`: memoryless beam.
    Zero,
    /// `g(t) = a exp(-b t)`.
    Exponential { a: f64, b: f64 },
    /// `g(t) = a / (1 + t)^q`.
    PowerLaw { a: f64, q: f64 },
}

/// A relaxation function together with its total mass `int_0^inf g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    g0_infinity: f64,
}

impl Kernel {
    pub fn zero() -> Self {
        Kernel {
            family: KernelFamily::Zero,
            g0_infinity: 0.0,
        }
    }

    pub fn exponential(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "exponential kernel needs a > 0 and b > 0 (a = {a}, b = {b})"
            )));
        }
        Ok(Kernel {
            family: KernelFamily::Exponential { a, b },
            g0_infinity: a / b,
        })
    }

    pub fn power_law(a: f64, q: f64) -> Result<Self> {
        if !(a > 0.0 && q > 1.0 && a.is_finite() && q.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "power-law kernel needs a > 0 and q > 1 (a = {a}, q = {q})"
            )));
        }
        Ok(Kernel {
            family: KernelFamily::PowerLaw { a, q },
            g0_infinity: a / (q - 1.0),
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn g0_infinity(&self) -> f64 {
        self.g0_infinity
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, KernelFamily::Zero)
    }

    /// `g(t)` for `t >= 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.value(t))
    }

    /// Unchecked evaluation; callers guarantee `t >= 0`.
    pub(crate) fn value(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self.family {
            KernelFamily::Zero => 0.0,
            KernelFamily::Exponential { a, b } => a * (-b * t).exp(),
            KernelFamily::PowerLaw { a, q } => a * (1.0 + t).powf(-q),
        }
    }

    /// `g'(t)`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        Ok(match self.family {
            KernelFamily::Zero => 0.0,
            KernelFamily::Exponential { a, b } => -a * b * (-b * t).exp(),
            KernelFamily::PowerLaw { a, q } => -a * q * (1.0 + t).powf(-q - 1.0),
        })
    }

    /// Closed-form `int_0^t g(s) ds`; `t = f64::INFINITY` gives the total mass.
    pub fn integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t.is_infinite() {
            return self.g0_infinity;
        }
        match self.family {
            KernelFamily::Zero => 0.0,
            KernelFamily::Exponential { a, b } => -(a / b) * (-b * t).exp_m1(),
            KernelFamily::PowerLaw { a, q } => {
                // a/(q-1) * (1 - (1+t)^(1-q)), written with expm1 for small t
                -(a / (q - 1.0)) * ((1.0 - q) * t.ln_1p()).exp_m1()
            }
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::Zero => write!(f, "g(t) = 0"),
            KernelFamily::Exponential { a, b } => write!(f, "g(t) = {a}*exp(-{b}*t)"),
            KernelFamily::PowerLaw { a, q } => write!(f, "g(t) = {a}/(1+t)^{q}"),
        }
    }
}

/// The rate function in `g' <= -xi g^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFunction {
    Constant(f64),
}

impl RateFunction {
    pub fn eval(&self, _t: f64) -> f64 {
        match *self {
            RateFunction::Constant(c) => c,
        }
    }

    /// `int_{t0}^{t} xi(s)^power ds`.
    pub fn integral_of_power(&self, power: f64, t0: f64, t: f64) -> f64 {
        match *self {
            RateFunction::Constant(c) => c.powf(power) * (t - t0),
        }
    }
}

impl fmt::Display for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFunction::Constant(c) => write!(f, "xi(t) = {c} (constant)"),
        }
    }
}

/// Verdicts on the kernel hypotheses for a given parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub g_at_zero: f64,
    pub g0_infinity: f64,
    /// `k2 - int_0^inf g`.
    pub residual_stiffness: f64,
    pub xi: Option<RateFunction>,
    pub p: Option<f64>,
    pub positivity_ok: bool,
    pub exponent_ok: bool,
    /// The integrability condition that unlocks the sharper polynomial
    /// envelope (`p > 1` families only).
    pub improved_rate_available: bool,
    pub notes: Vec<String>,
}

pub fn check_admissibility(g: &Kernel, p: &BresseParams) -> AdmissibilityReport {
    let g_at_zero = g.value(0.0);
    let g0_infinity = g.g0_infinity();
    let residual_stiffness = p.k2 - g0_infinity;
    let mut notes = Vec::new();

    let (xi, exponent) = match g.family() {
        KernelFamily::Zero => (None, None),
        KernelFamily::Exponential { b, .. } => (Some(RateFunction::Constant(b)), Some(1.0)),
        KernelFamily::PowerLaw { a, q } => (
            Some(RateFunction::Constant(q / a.powf(1.0 / q))),
            Some((q + 1.0) / q),
        ),
    };

    let positivity_ok = g_at_zero > 0.0 && residual_stiffness > 0.0;
    if g_at_zero <= 0.0 {
        notes.push("g(0) = 0: no memory damping, decay hypotheses do not apply".to_string());
    }
    if residual_stiffness <= 0.0 {
        notes.push(format!(
            "k2 - int g = {residual_stiffness} is not positive; the positivity condition fails, run continues"
        ));
    }

    let exponent_ok = matches!(exponent, Some(pe) if (1.0..1.5).contains(&pe));
    if let Some(pe) = exponent {
        if !exponent_ok {
            notes.push(format!("exponent p = {pe} is outside [1, 3/2); the decay-rate condition fails"));
        }
    }

    let improved_rate_available = match g.family() {
        KernelFamily::PowerLaw { q, .. } => q > 2.0,
        _ => false,
    };

    AdmissibilityReport {
        g_at_zero,
        g0_infinity,
        residual_stiffness,
        xi,
        p: exponent,
        positivity_ok,
        exponent_ok,
        improved_rate_available,
        notes,
    }
}
