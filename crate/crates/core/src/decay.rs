//! Empirical decay-rate fits and the theoretical decay envelopes.

use std::fmt;

use crate::energy::EnergyTrace;
use crate::error::{Error, Result};
use crate::model::{AdmissibilityReport, RateFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    /// `E ~ C exp(-rate t)`.
    Exponential,
    /// `E ~ C t^(-rate)`.
    Polynomial,
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayModel::Exponential => write!(f, "exponential"),
            DecayModel::Polynomial => write!(f, "polynomial"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    pub c: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Largest distance between a transformed sample and the regression line.
    pub max_abs_residual: f64,
    /// Change of the regression line across the window.
    pub line_drop: f64,
}

impl DecayFit {
    pub fn eval(&self, t: f64) -> f64 {
        match self.model {
            DecayModel::Exponential => self.c * (-self.rate * t).exp(),
            DecayModel::Polynomial => self.c * t.powf(-self.rate),
        }
    }

    /// `max_abs_residual / line_drop`; infinite when the line is flat.
    pub fn relative_residual(&self) -> f64 {
        if self.line_drop > 0.0 {
            self.max_abs_residual / self.line_drop
        } else {
            f64::INFINITY
        }
    }
}

impl fmt::Display for DecayFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} fit on [{}, {}]: C = {:.6e}, rate = {:.6e}, R^2 = {:.6}, max residual = {:.3e} ({} points)",
            self.model, self.window.0, self.window.1, self.c, self.rate, self.r_squared, self.max_abs_residual, self.points
        )
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    max_abs_residual: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut max_abs_residual: f64 = 0.0;
    for (a, b) in x.iter().zip(y) {
        let r = b - (intercept + slope * a);
        ss_res += r * r;
        ss_tot += (b - my) * (b - my);
        max_abs_residual = max_abs_residual.max(r.abs());
    }
    // a flat series has no variance to explain
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let r_squared = if ss_tot <= 1e-24 * scale {
        0.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Line {
        slope,
        intercept,
        r_squared,
        max_abs_residual,
    }
}

fn window_samples(trace: &EnergyTrace, window: (f64, f64), need_positive_t: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut t = Vec::new();
    let mut e = Vec::new();
    for row in trace.window(window.0, window.1) {
        if need_positive_t && row.t <= 0.0 {
            continue;
        }
        if !(row.energy > 0.0) {
            return Err(Error::NonPositiveEnergy {
                t: row.t,
                value: row.energy,
            });
        }
        t.push(row.t);
        e.push(row.energy);
    }
    if t.len() < 2 {
        return Err(Error::EmptyWindow(window.0, window.1));
    }
    Ok((t, e))
}

/// Least-squares line through `(t, ln E)`.
pub fn fit_exponential(trace: &EnergyTrace, window: (f64, f64)) -> Result<DecayFit> {
    let (t, e) = window_samples(trace, window, false)?;
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let line = least_squares(&t, &y);
    Ok(DecayFit {
        model: DecayModel::Exponential,
        c: line.intercept.exp(),
        rate: -line.slope,
        r_squared: line.r_squared,
        window,
        points: t.len(),
        max_abs_residual: line.max_abs_residual,
        line_drop: (line.slope * (t[t.len() - 1] - t[0])).abs(),
    })
}

/// Least-squares line through `(ln t, -ln E)`; samples at `t <= 0` are skipped.
pub fn fit_polynomial(trace: &EnergyTrace, window: (f64, f64)) -> Result<DecayFit> {
    let (t, e) = window_samples(trace, window, true)?;
    let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| -v.ln()).collect();
    let line = least_squares(&x, &y);
    Ok(DecayFit {
        model: DecayModel::Polynomial,
        c: (-line.intercept).exp(),
        rate: line.slope,
        r_squared: line.r_squared,
        window,
        points: t.len(),
        max_abs_residual: line.max_abs_residual,
        line_drop: (line.slope * (x[x.len() - 1] - x[0])).abs(),
    })
}

/// The default fit window `[T/4, T]`.
pub fn default_window(t_final: f64) -> (f64, f64) {
    (0.25 * t_final, t_final)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedCase {
    Equal,
    NonEqual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeCase {
    /// `C exp(-lambda xi (t - t0))`.
    EqualExponential,
    /// `C (1 + xi^(2p-1) (t - t0))^(-1/(2p-2))`.
    EqualPolynomial,
    /// `C (1 + xi^p (t - t0))^(-1/(p-1))`, available when the kernel
    /// passes the integrability test.
    EqualPolynomialImproved,
    /// `C (xi^(2p-1) (t - t0))^(-1/(2p-1))`.
    NonEqual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub case: EnvelopeCase,
    pub c: f64,
    pub lambda: f64,
    pub p: f64,
    pub xi: RateFunction,
    pub t0: f64,
}

impl Envelope {
    pub fn eval(&self, t: f64) -> f64 {
        let p = self.p;
        let xi = &self.xi;
        match self.case {
            EnvelopeCase::EqualExponential => self.c * (-self.lambda * xi.integral_of_power(1.0, self.t0, t)).exp(),
            EnvelopeCase::EqualPolynomial => {
                let s = xi.integral_of_power(2.0 * p - 1.0, self.t0, t).max(0.0);
                self.c * (1.0 + s).powf(-1.0 / (2.0 * p - 2.0))
            }
            EnvelopeCase::EqualPolynomialImproved => {
                let s = xi.integral_of_power(p, self.t0, t).max(0.0);
                self.c * (1.0 + s).powf(-1.0 / (p - 1.0))
            }
            EnvelopeCase::NonEqual => {
                let s = xi.integral_of_power(2.0 * p - 1.0, self.t0, t);
                if s <= 0.0 {
                    f64::INFINITY
                } else {
                    self.c * s.powf(-1.0 / (2.0 * p - 1.0))
                }
            }
        }
    }

    /// Algebraic decay order for large `t`, or `None` for the exponential case.
    pub fn algebraic_order(&self) -> Option<f64> {
        let p = self.p;
        match self.case {
            EnvelopeCase::EqualExponential => None,
            EnvelopeCase::EqualPolynomial => Some(1.0 / (2.0 * p - 2.0)),
            EnvelopeCase::EqualPolynomialImproved => Some(1.0 / (p - 1.0)),
            EnvelopeCase::NonEqual => Some(1.0 / (2.0 * p - 1.0)),
        }
    }

    pub fn with_c(&self, c: f64) -> Envelope {
        Envelope { c, ..*self }
    }
}

/// Envelope for the given speed regime; `lambda` only enters the
/// exponential branch.
pub fn theoretical_envelope(
    report: &AdmissibilityReport,
    case: SpeedCase,
    c: f64,
    t0: f64,
    lambda: f64,
) -> Result<Envelope> {
    let (Some(xi), Some(p)) = (report.xi, report.p) else {
        return Err(Error::InconsistentCase("kernel has no decay rate function".into()));
    };
    if p >= 1.5 {
        return Err(Error::InconsistentCase(format!(
            "exponent p = {p} is not below 3/2, no envelope applies"
        )));
    }
    let env_case = match case {
        SpeedCase::Equal if p == 1.0 => EnvelopeCase::EqualExponential,
        SpeedCase::Equal if report.improved_rate_available => EnvelopeCase::EqualPolynomialImproved,
        SpeedCase::Equal => EnvelopeCase::EqualPolynomial,
        SpeedCase::NonEqual => EnvelopeCase::NonEqual,
    };
    Ok(Envelope {
        case: env_case,
        c,
        lambda,
        p,
        xi,
        t0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCheck {
    pub calibration_t: f64,
    pub calibrated_c: f64,
    /// `max E^n / envelope(t_n)` over `t_n >= calibration_t`.
    pub max_ratio: f64,
    pub samples: usize,
}

impl fmt::Display for EnvelopeCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "envelope calibrated at t = {} (C = {:.6e}): max E/envelope = {:.6} over {} samples",
            self.calibration_t, self.calibrated_c, self.max_ratio, self.samples
        )
    }
}

/// Rescales `env` so it passes through the trace at the sample nearest
/// `t_mid`, then reports the largest ratio `E / envelope` from there on.
pub fn check_envelope(trace: &EnergyTrace, env: &Envelope, t_mid: f64) -> Result<EnvelopeCheck> {
    let anchor = trace
        .rows
        .iter()
        .min_by(|a, b| (a.t - t_mid).abs().total_cmp(&(b.t - t_mid).abs()))
        .ok_or(Error::EmptyWindow(t_mid, t_mid))?;
    let shape = env.with_c(1.0).eval(anchor.t);
    let calibrated = env.with_c(anchor.energy / shape);
    let mut max_ratio: f64 = 0.0;
    let mut samples = 0;
    for row in trace.rows.iter().filter(|r| r.t >= anchor.t) {
        max_ratio = max_ratio.max(row.energy / calibrated.eval(row.t));
        samples += 1;
    }
    Ok(EnvelopeCheck {
        calibration_t: anchor.t,
        calibrated_c: calibrated.c,
        max_ratio,
        samples,
    })
}
