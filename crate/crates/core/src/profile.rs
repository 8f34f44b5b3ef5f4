//! Closed-form initial profiles on `[0, L]`.
//!
//! A profile is a finite sum of terms, written in config files as e.g.
//! `bump`, `cos(1) + 0.5*cos(3)`, `2.5*sin(2) - 0.1`.
//! `sin(k)` stands for `sin(k*pi*x/L)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Sin { k: f64, amp: f64 },
    Cos { k: f64, amp: f64 },
    Const(f64),
    /// `amp * 4 x (L - x) / L^2 * sin(pi x / L)`, peak value `amp` at `L/2`.
    Bump(f64),
}

impl Term {
    fn eval(&self, x: f64, length: f64) -> f64 {
        match *self {
            Term::Sin { k, amp } => amp * (k * PI * x / length).sin(),
            Term::Cos { k, amp } => amp * (k * PI * x / length).cos(),
            Term::Const(c) => c,
            Term::Bump(amp) => {
                amp * 4.0 * x * (length - x) / (length * length) * (PI * x / length).sin()
            }
        }
    }

    fn deriv(&self, x: f64, length: f64) -> f64 {
        match *self {
            Term::Sin { k, amp } => {
                let w = k * PI / length;
                amp * w * (w * x).cos()
            }
            Term::Cos { k, amp } => {
                let w = k * PI / length;
                -amp * w * (w * x).sin()
            }
            Term::Const(_) => 0.0,
            Term::Bump(amp) => {
                let w = PI / length;
                let l2 = length * length;
                amp * 4.0 / l2
                    * ((length - 2.0 * x) * (w * x).sin() + x * (length - x) * w * (w * x).cos())
            }
        }
    }
}

/// Sum of [`Term`]s; the empty sum is the zero function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    pub terms: Vec<Term>,
}

impl Profile {
    pub fn zero() -> Self {
        Profile::default()
    }

    pub fn new(terms: Vec<Term>) -> Self {
        Profile { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| match *t {
            Term::Sin { amp, .. } | Term::Cos { amp, .. } => amp == 0.0,
            Term::Const(c) | Term::Bump(c) => c == 0.0,
        })
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x, length)).sum()
    }

    pub fn deriv(&self, x: f64, length: f64) -> f64 {
        self.terms.iter().map(|t| t.deriv(x, length)).sum()
    }

    /// Copy of `self` with a constant added.
    pub fn shifted(&self, c: f64) -> Profile {
        let mut terms = self.terms.clone();
        if c != 0.0 {
            terms.push(Term::Const(c));
        }
        Profile { terms }
    }

    pub fn scaled(&self, factor: f64) -> Profile {
        let terms = self
            .terms
            .iter()
            .map(|t| match *t {
                Term::Sin { k, amp } => Term::Sin {
                    k,
                    amp: amp * factor,
                },
                Term::Cos { k, amp } => Term::Cos {
                    k,
                    amp: amp * factor,
                },
                Term::Const(c) => Term::Const(c * factor),
                Term::Bump(a) => Term::Bump(a * factor),
            })
            .collect();
        Profile { terms }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match t {
                Term::Sin { k, amp } => write!(f, "{amp}*sin({k})")?,
                Term::Cos { k, amp } => write!(f, "{amp}*cos({k})")?,
                Term::Const(c) => write!(f, "{c}")?,
                Term::Bump(a) => write!(f, "{a}*bump")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileParseError(pub String);

impl fmt::Display for ProfileParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot parse profile: {}", self.0)
    }
}

impl std::error::Error for ProfileParseError {}

fn split_terms(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let mut prev: Option<char> = None;
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        let exponent_sign = matches!(prev, Some('e') | Some('E'))
            && cur.trim_end().chars().rev().nth(1).is_some_and(|c| c.is_ascii_digit() || c == '.');
        if (ch == '+' || ch == '-') && depth == 0 && !exponent_sign {
            let body = cur.trim().trim_start_matches(['+', '-']).trim();
            if !body.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !ch.is_whitespace() {
            prev = Some(ch);
        }
        cur.push(ch);
    }
    out.push(cur);
    out
}

fn parse_term(raw: &str) -> Result<Term, ProfileParseError> {
    let mut sign = 1.0;
    let mut body = raw.trim();
    while let Some(c) = body.chars().next() {
        match c {
            '+' => body = body[1..].trim_start(),
            '-' => {
                sign = -sign;
                body = body[1..].trim_start();
            }
            _ => break,
        }
    }
    if body.is_empty() {
        return Err(ProfileParseError(format!("empty term in `{raw}`")));
    }
    let (amp, func) = match body.split_once('*') {
        Some((a, f)) => {
            let amp: f64 = a
                .trim()
                .parse()
                .map_err(|_| ProfileParseError(format!("bad amplitude `{a}`")))?;
            (amp, Some(f.trim()))
        }
        None => match body.parse::<f64>() {
            Ok(c) => return Ok(Term::Const(sign * c)),
            Err(_) => (1.0, Some(body)),
        },
    };
    let amp = sign * amp;
    let func = func.unwrap();
    if func == "bump" {
        return Ok(Term::Bump(amp));
    }
    let arg = |name: &str| -> Result<Option<f64>, ProfileParseError> {
        match func.strip_prefix(name) {
            Some(rest) => {
                let inner = rest
                    .trim()
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| ProfileParseError(format!("expected `{name}(k)`, got `{func}`")))?;
                inner
                    .trim()
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| ProfileParseError(format!("bad wave number `{inner}`")))
            }
            None => Ok(None),
        }
    };
    if let Some(k) = arg("sin")? {
        return Ok(Term::Sin { k, amp });
    }
    if let Some(k) = arg("cos")? {
        return Ok(Term::Cos { k, amp });
    }
    Err(ProfileParseError(format!("unknown function `{func}`")))
}

impl FromStr for Profile {
    type Err = ProfileParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Err(ProfileParseError("empty profile".into()));
        }
        let terms = split_terms(s)
            .iter()
            .map(|t| parse_term(t))
            .collect::<Result<Vec<_>, _>>()?;
        // "0" and "0*sin(1)" collapse to the empty profile
        let terms = terms.into_iter().filter(|t| !Profile::new(vec![*t]).is_zero()).collect();
        Ok(Profile { terms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sums() {
        let p: Profile = "cos(1) + 0.5*cos(3) - 2*sin(2) + 0.25".parse().unwrap();
        assert_eq!(
            p.terms,
            vec![
                Term::Cos { k: 1.0, amp: 1.0 },
                Term::Cos { k: 3.0, amp: 0.5 },
                Term::Sin { k: 2.0, amp: -2.0 },
                Term::Const(0.25),
            ]
        );
        let b: Profile = "bump".parse().unwrap();
        assert_eq!(b.terms, vec![Term::Bump(1.0)]);
        let e: Profile = "1e-3*cos(2) + 2.5e+1".parse().unwrap();
        assert_eq!(e.terms, vec![Term::Cos { k: 2.0, amp: 1e-3 }, Term::Const(25.0)]);
    }

    #[test]
    fn display_round_trips() {
        let p: Profile = "-0.5*cos(3) + bump + 4 - sin(1)".parse().unwrap();
        let q: Profile = p.to_string().parse().unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn rejects_garbage() {
        assert!("tan(1)".parse::<Profile>().is_err());
        assert!("".parse::<Profile>().is_err());
        assert!("x*cos(1)".parse::<Profile>().is_err());
    }

    #[test]
    fn bump_is_dirichlet_compatible() {
        let b = Profile::new(vec![Term::Bump(1.0)]);
        assert_eq!(b.eval(0.0, 2.0), 0.0);
        assert!(b.eval(2.0, 2.0).abs() < 1e-15);
        assert!((b.eval(1.0, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p: Profile = "bump + 0.3*cos(2) - 1.5*sin(3) + 7".parse().unwrap();
        let len = 1.3;
        for i in 1..20 {
            let x = i as f64 * len / 20.0;
            let eps = 1e-6;
            let fd = (p.eval(x + eps, len) - p.eval(x - eps, len)) / (2.0 * eps);
            assert!((fd - p.deriv(x, len)).abs() < 1e-7, "x = {x}");
        }
    }
}
