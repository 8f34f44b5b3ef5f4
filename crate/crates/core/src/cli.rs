//! Configuration files, scenario presets, run orchestration and file output.
//!
//! Config files are TOML with the sections `[params]`, `[kernel]`,
//! `[mesh]`, `[time]`, `[initial]` and `[flags]`:
//!
//! ```toml
//! [params]
//! rho1 = 0.1
//! rho2 = 0.1
//! k1 = 1.0
//! k2 = 1.0
//! k3 = 1.0
//! l = 0.05
//! L = 1.0
//!
//! [kernel]
//! family = "exponential"   # or "power_law" (a, q) or "zero"
//! a = 1.0
//! b = 3.0
//!
//! [mesh]
//! elements = 42
//!
//! [time]
//! dt = 0.012
//! T = 7.4
//! ```
//!
//! `[initial]` takes profile strings (`phi0 = "bump"`, `psi0 = "cos(1)"`)
//! and defaults to the built-in profiles. `[flags]` defaults to no
//! diagnostics, direct memory sums and no field dumps.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use toml::Spanned;

use crate::decay::{self, DecayFit, DecayModel, EnvelopeCheck, SpeedCase};
use crate::energy::{EnergyTrace, LyapunovWeights};
use crate::error::Error;
use crate::fem1d::build_mesh;
use crate::model::{check_admissibility, wave_speeds, AdmissibilityReport, BresseParams, Kernel, KernelFamily, SpeedReport, DEFAULT_SPEED_TOL};
use crate::profile::Profile;
use crate::stepper::{run, FieldSnapshot, RunConfig, RunFlags, RunOutput};
use crate::transform::InitialData;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{name}`")]
    UnknownKey { line: usize, name: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: Error },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    params: RawParams,
    kernel: RawKernel,
    mesh: RawMesh,
    time: RawTime,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    flags: RawFlags,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    rho1: Spanned<f64>,
    rho2: Spanned<f64>,
    k1: Spanned<f64>,
    k2: Spanned<f64>,
    k3: Spanned<f64>,
    l: Spanned<f64>,
    #[serde(rename = "L")]
    length: Spanned<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    family: Spanned<String>,
    a: Option<Spanned<f64>>,
    b: Option<Spanned<f64>>,
    q: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    elements: Spanned<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Spanned<f64>,
    #[serde(rename = "T")]
    t_final: Spanned<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    phi0: Option<Spanned<String>>,
    phi1: Option<Spanned<String>>,
    psi0: Option<Spanned<String>>,
    psi1: Option<Spanned<String>>,
    w0: Option<Spanned<String>>,
    w1: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlags {
    include_m0: Option<bool>,
    exponential_fastpath: Option<bool>,
    diagnostics_every: Option<Spanned<i64>>,
    snapshot_every: Option<Spanned<i64>>,
    diagnostics: Option<bool>,
    weight_n: Option<f64>,
    weight_n1: Option<f64>,
    weight_n2: Option<f64>,
    weight_n4: Option<f64>,
    weight_n5: Option<f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn backticked(message: &str, prefix: &str) -> Option<String> {
    let rest = message.strip_prefix(prefix)?;
    let rest = rest.strip_prefix('`')?;
    rest.split('`').next().map(str::to_string)
}

fn classify(text: &str, err: toml::de::Error) -> ConfigError {
    let line = err.span().map_or(0, |s| line_of(text, s.start));
    let message = err.message().trim().to_string();
    if let Some(name) = backticked(&message, "unknown field ") {
        return ConfigError::UnknownKey { line, name };
    }
    if let Some(name) = backticked(&message, "missing field ") {
        return ConfigError::MissingKey(name);
    }
    ConfigError::Parse { line, message }
}

/// Parses config text; see the module docs for the format.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| classify(text, e))?;
    let line = |span: std::ops::Range<usize>| line_of(text, span.start);

    let positive = |name: &'static str, v: &Spanned<f64>| -> Result<f64, ConfigError> {
        let x = *v.get_ref();
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(ConfigError::Invalid {
                line: line(v.span()),
                source: Error::NonPositiveParameter(name),
            })
        }
    };
    let rp = &raw.params;
    let params = BresseParams {
        rho1: positive("rho1", &rp.rho1)?,
        rho2: positive("rho2", &rp.rho2)?,
        k1: positive("k1", &rp.k1)?,
        k2: positive("k2", &rp.k2)?,
        k3: positive("k3", &rp.k3)?,
        l: positive("l", &rp.l)?,
        length: positive("L", &rp.length)?,
    };

    let rk = &raw.kernel;
    let fam_line = line(rk.family.span());
    let need = |v: &Option<Spanned<f64>>, name: &str| -> Result<f64, ConfigError> {
        v.as_ref()
            .map(|s| *s.get_ref())
            .ok_or_else(|| ConfigError::MissingKey(format!("kernel.{name}")))
    };
    let kernel = match rk.family.get_ref().as_str() {
        "zero" => Ok(Kernel::zero()),
        "exponential" => Kernel::exponential(need(&rk.a, "a")?, need(&rk.b, "b")?),
        "power_law" => Kernel::power_law(need(&rk.a, "a")?, need(&rk.q, "q")?),
        other => {
            return Err(ConfigError::Parse {
                line: fam_line,
                message: format!("unknown kernel family `{other}` (expected zero, exponential or power_law)"),
            })
        }
    }
    .map_err(|source| ConfigError::Invalid { line: fam_line, source })?;

    let count = |v: &Spanned<i64>, min: i64, what: &str| -> Result<usize, ConfigError> {
        let x = *v.get_ref();
        if x < min {
            return Err(ConfigError::Parse {
                line: line(v.span()),
                message: format!("{what} must be at least {min}, got {x}"),
            });
        }
        Ok(x as usize)
    };
    let elements = count(&raw.mesh.elements, 2, "elements")?;
    let mesh = build_mesh(params.length, elements).map_err(|source| ConfigError::Invalid {
        line: line(raw.mesh.elements.span()),
        source,
    })?;

    let dt = *raw.time.dt.get_ref();
    let t_final = *raw.time.t_final.get_ref();
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ConfigError::Parse {
            line: line(raw.time.dt.span()),
            message: format!("dt must be positive, got {dt}"),
        });
    }
    if !(t_final >= dt && t_final.is_finite()) {
        return Err(ConfigError::Parse {
            line: line(raw.time.t_final.span()),
            message: format!("T must be at least dt = {dt}, got {t_final}"),
        });
    }

    let defaults = InitialData::default_profiles();
    let profile = |v: &Option<Spanned<String>>, fallback: &Profile| -> Result<Profile, ConfigError> {
        match v {
            None => Ok(fallback.clone()),
            Some(s) => s.get_ref().parse().map_err(|e: crate::profile::ProfileParseError| ConfigError::Parse {
                line: line(s.span()),
                message: e.to_string(),
            }),
        }
    };
    let ri = &raw.initial;
    let initial = InitialData {
        phi0: profile(&ri.phi0, &defaults.phi0)?,
        phi1: profile(&ri.phi1, &defaults.phi1)?,
        psi0: profile(&ri.psi0, &defaults.psi0)?,
        psi1: profile(&ri.psi1, &defaults.psi1)?,
        w0: profile(&ri.w0, &defaults.w0)?,
        w1: profile(&ri.w1, &defaults.w1)?,
    };

    let rf = &raw.flags;
    let base = LyapunovWeights::defaults(&params);
    let lyapunov = rf.diagnostics.unwrap_or(false).then(|| LyapunovWeights {
        n: rf.weight_n.unwrap_or(base.n),
        n1: rf.weight_n1.unwrap_or(base.n1),
        n2: rf.weight_n2.unwrap_or(base.n2),
        n4: rf.weight_n4.unwrap_or(base.n4),
        n5: rf.weight_n5.unwrap_or(base.n5),
    });
    let flags = RunFlags {
        include_m0: rf.include_m0.unwrap_or(false),
        exponential_fastpath: rf.exponential_fastpath.unwrap_or(false),
        diagnostics_every: match &rf.diagnostics_every {
            Some(v) => count(v, 1, "diagnostics_every")?,
            None => 1,
        },
        snapshot_every: match &rf.snapshot_every {
            Some(v) => count(v, 0, "snapshot_every")?,
            None => 0,
        },
        lyapunov,
    };

    Ok(RunConfig {
        params,
        kernel,
        mesh,
        dt,
        t_final,
        initial,
        flags,
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

/// Renders a config in the file format; parsing the result gives back
/// the same config.
pub fn format_config(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let mut s = String::new();
    let _ = writeln!(s, "[params]");
    for (k, v) in [
        ("rho1", p.rho1),
        ("rho2", p.rho2),
        ("k1", p.k1),
        ("k2", p.k2),
        ("k3", p.k3),
        ("l", p.l),
        ("L", p.length),
    ] {
        let _ = writeln!(s, "{k} = {v:?}");
    }
    let _ = writeln!(s, "\n[kernel]");
    match cfg.kernel.family() {
        KernelFamily::Zero => {
            let _ = writeln!(s, "family = \"zero\"");
        }
        KernelFamily::Exponential { a, b } => {
            let _ = writeln!(s, "family = \"exponential\"\na = {a:?}\nb = {b:?}");
        }
        KernelFamily::PowerLaw { a, q } => {
            let _ = writeln!(s, "family = \"power_law\"\na = {a:?}\nq = {q:?}");
        }
    }
    let _ = writeln!(s, "\n[mesh]\nelements = {}", cfg.mesh.elements());
    let _ = writeln!(s, "\n[time]\ndt = {:?}\nT = {:?}", cfg.dt, cfg.t_final);
    let init = &cfg.initial;
    let _ = writeln!(s, "\n[initial]");
    for (k, v) in [
        ("phi0", &init.phi0),
        ("phi1", &init.phi1),
        ("psi0", &init.psi0),
        ("psi1", &init.psi1),
        ("w0", &init.w0),
        ("w1", &init.w1),
    ] {
        let _ = writeln!(s, "{k} = \"{v}\"");
    }
    let f = &cfg.flags;
    let _ = writeln!(s, "\n[flags]");
    let _ = writeln!(s, "include_m0 = {}", f.include_m0);
    let _ = writeln!(s, "exponential_fastpath = {}", f.exponential_fastpath);
    let _ = writeln!(s, "diagnostics_every = {}", f.diagnostics_every);
    let _ = writeln!(s, "snapshot_every = {}", f.snapshot_every);
    let _ = writeln!(s, "diagnostics = {}", f.lyapunov.is_some());
    if let Some(w) = &f.lyapunov {
        let _ = writeln!(
            s,
            "weight_n = {:?}\nweight_n1 = {:?}\nweight_n2 = {:?}\nweight_n4 = {:?}\nweight_n5 = {:?}",
            w.n, w.n1, w.n2, w.n4, w.n5
        );
    }
    s
}

/// A named configuration with the decay class it is expected to show.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub cfg: RunConfig,
    pub expected_decay: DecayModel,
}

pub const PRESET_NAMES: [&str; 2] = ["equal-speed", "non-equal-speed"];

const EQUAL_SPEED_TOML: &str = include_str!("../presets/equal-speed.toml");
const NON_EQUAL_SPEED_TOML: &str = include_str!("../presets/non-equal-speed.toml");

/// Built-in scenarios, decoded from the preset files shipped with the crate.
pub fn preset(name: &str) -> Option<Scenario> {
    let (text, expected_decay) = match name {
        "equal-speed" => (EQUAL_SPEED_TOML, DecayModel::Exponential),
        "non-equal-speed" => (NON_EQUAL_SPEED_TOML, DecayModel::Polynomial),
        _ => return None,
    };
    let cfg = parse_config_str(text).expect("shipped preset must parse");
    Some(Scenario {
        name: name.to_string(),
        cfg,
        expected_decay,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub fit_window: Option<(f64, f64)>,
    pub tol_speed: f64,
    /// Force the Lyapunov diagnostics on with default weights.
    pub diagnostics: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            out_dir: out_dir.into(),
            fit_window: None,
            tol_speed: DEFAULT_SPEED_TOL,
            diagnostics: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Run(
                Error::InvalidConfig(_)
                | Error::NonPositiveParameter(_)
                | Error::InvalidKernel(_)
                | Error::TooFewElements(_),
            ) => 2,
            CliError::Run(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub output: RunOutput,
    pub speeds: SpeedReport,
    pub admissibility: AdmissibilityReport,
    pub window: (f64, f64),
    pub exponential: Result<DecayFit, Error>,
    pub polynomial: Result<DecayFit, Error>,
    pub envelope: Result<EnvelopeCheck, Error>,
    pub summary: String,
}

/// Envelope check for a trace: the speed regime picks the branch, the
/// exponent is fitted on `[t_mid, T]`, and the envelope is calibrated at
/// `t_mid`.
pub fn envelope_check(
    trace: &EnergyTrace,
    report: &AdmissibilityReport,
    speeds: &SpeedReport,
    window: (f64, f64),
) -> Result<EnvelopeCheck, Error> {
    let case = if speeds.equal_speeds() {
        SpeedCase::Equal
    } else {
        SpeedCase::NonEqual
    };
    let t_mid = 0.5 * (window.0 + window.1);
    let mut env = decay::theoretical_envelope(report, case, 1.0, 0.0, 0.0)?;
    if env.case == decay::EnvelopeCase::EqualExponential {
        let tail = decay::fit_exponential(trace, (t_mid, window.1))?;
        env.lambda = tail.rate / env.xi.eval(t_mid);
    }
    decay::check_envelope(trace, &env, t_mid)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Energy trace as CSV: fixed columns, 17 significant digits, LF endings.
pub fn format_csv(trace: &EnergyTrace) -> String {
    let lyap = trace.has_lyapunov();
    let mut s = String::from("n,t,E,mem,Ekin,Epot");
    if lyap {
        s.push_str(",I1,I2,I3,I4,I5,I6,L");
    }
    s.push('\n');
    for r in &trace.rows {
        let _ = write!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.n, r.t, r.energy, r.memory, r.kinetic, r.potential
        );
        if lyap {
            let v = r.lyapunov.expect("diagnostics recorded on every row");
            for x in v.i.iter().chain(std::iter::once(&v.l)) {
                let _ = write!(s, ",{x:.16e}");
            }
        }
        s.push('\n');
    }
    s
}

pub fn export_csv(trace: &EnergyTrace, path: &Path) -> io::Result<()> {
    fs::write(path, format_csv(trace))
}

fn format_snapshot(snap: &FieldSnapshot, nodes: &[f64]) -> String {
    let mut s = String::from("# x phi psi w\n");
    for (i, x) in nodes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{x:.16e} {:.16e} {:.16e} {:.16e}",
            snap.phi[i], snap.psi[i], snap.w[i]
        );
    }
    s
}

fn plot_script(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script; run from the output directory: gnuplot plot.gp");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set key top right\nset grid");
    let _ = writeln!(s, "\nset output 'energy.png'\nset xlabel 't'\nset ylabel 'E'");
    let _ = writeln!(s, "plot 'energy.csv' using 2:3 every ::1 with lines title 'E^n'");
    let (t0, t1) = report.window;
    let _ = writeln!(s, "\nset output 'log_energy.png'\nset ylabel 'ln E'");
    match &report.exponential {
        Ok(f) => {
            let _ = writeln!(
                s,
                "plot 'energy.csv' using 2:(log($3)) every ::1 with lines title 'ln E^n', \\\n     [{t0}:{t1}] {:.16e} - {:.16e}*x with lines dashtype 2 title 'regression'",
                f.c.ln(),
                f.rate
            );
        }
        Err(_) => {
            let _ = writeln!(s, "plot 'energy.csv' using 2:(log($3)) every ::1 with lines title 'ln E^n'");
        }
    }
    let _ = writeln!(s, "\nset output 'loglog_energy.png'\nset xlabel 'ln t'\nset ylabel '-ln E'");
    match &report.polynomial {
        Ok(f) => {
            let _ = writeln!(
                s,
                "plot 'energy.csv' using (log($2)):(-log($3)) every ::2 with lines title '-ln E^n', \\\n     [{}:{}] {:.16e} + {:.16e}*x with lines dashtype 2 title 'regression'",
                t0.ln(),
                t1.ln(),
                -f.c.ln(),
                f.rate
            );
        }
        Err(_) => {
            let _ = writeln!(s, "plot 'energy.csv' using (log($2)):(-log($3)) every ::2 with lines title '-ln E^n'");
        }
    }
    let _ = writeln!(s, "\nset datafile separator whitespace");
    let _ = writeln!(s, "set output 'cross_section.png'\nset xlabel 't'\nset ylabel 'value at x = L/2'");
    let _ = writeln!(
        s,
        "plot 'cross_section.dat' using 1:2 with lines title 'phi', '' using 1:3 with lines title 'psi', '' using 1:4 with lines title 'w'"
    );
    if !report.output.snapshots.is_empty() {
        let _ = writeln!(s, "\nset output 'surface_phi.png'\nset xlabel 'x'\nset ylabel 't'\nset hidden3d");
        let files: Vec<String> = report
            .output
            .snapshots
            .iter()
            .map(|snap| format!("'{}' using 1:({:.6}):2 with lines notitle", snapshot_name(snap.n), snap.t))
            .collect();
        let _ = writeln!(s, "splot {}", files.join(", \\\n      "));
    }
    s
}

fn snapshot_name(n: usize) -> String {
    format!("fields_{n:06}.dat")
}

fn fit_line(label: &str, fit: &Result<DecayFit, Error>) -> String {
    match fit {
        Ok(f) => format!("{label}: {f}"),
        Err(e) => format!("{label}: not available ({e})"),
    }
}

fn build_summary(name: &str, cfg: &RunConfig, report: &RunReport, expected: Option<DecayModel>) -> String {
    let out = &report.output;
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {name}");
    let _ = writeln!(s, "steps: {} (dt = {}, T = {})", out.steps, cfg.dt, cfg.t_final);
    let _ = writeln!(s, "mesh: {} elements, h = {}", cfg.mesh.elements(), cfg.mesh.h());
    let _ = writeln!(s, "kernel: {}", cfg.kernel);
    for w in &out.warnings {
        let _ = writeln!(s, "warning: {w}");
    }

    let m = &out.modes;
    let _ = writeln!(s, "\n[mode constants]");
    let _ = writeln!(
        s,
        "a0 = {:.16e}\na1 = {:.16e}\na2 = {:.16e}\na3 = {:.16e}\na4 = {:.16e}\nshift applied: {}",
        m.a0, m.a1, m.a2, m.a3, m.a4, out.shifted
    );

    let sp = &report.speeds;
    let _ = writeln!(s, "\n[wave speeds]");
    let _ = writeln!(
        s,
        "s1 = {:.12}\ns2 = {:.12}\ns3 = {:.12}\nequal first pair: {}\nk1 = k3: {}",
        sp.s1, sp.s2, sp.s3, sp.equal_first_pair, sp.k1_equals_k3
    );

    let a = &report.admissibility;
    let _ = writeln!(s, "\n[kernel admissibility]");
    let _ = writeln!(s, "g(0) = {}", a.g_at_zero);
    let _ = writeln!(s, "int_0^inf g = {}", a.g0_infinity);
    let _ = writeln!(s, "k2 - int g = {}", a.residual_stiffness);
    match (&a.xi, a.p) {
        (Some(xi), Some(p)) => {
            let _ = writeln!(s, "{xi}, p = {p}");
        }
        _ => {
            let _ = writeln!(s, "no rate function");
        }
    }
    let _ = writeln!(s, "positivity/stiffness condition: {}", a.positivity_ok);
    let _ = writeln!(s, "growth exponent condition: {}", a.exponent_ok);
    let _ = writeln!(s, "improved polynomial rate: {}", a.improved_rate_available);
    for n in &a.notes {
        let _ = writeln!(s, "note: {n}");
    }

    let _ = writeln!(s, "\n[decay fits] window [{}, {}]", report.window.0, report.window.1);
    let _ = writeln!(s, "{}", fit_line("exponential", &report.exponential));
    let _ = writeln!(s, "{}", fit_line("polynomial", &report.polynomial));
    if let Some(exp) = expected {
        let best = match (&report.exponential, &report.polynomial) {
            (Ok(e), Ok(p)) if p.r_squared > e.r_squared => Some(DecayModel::Polynomial),
            (Ok(_), Ok(_)) => Some(DecayModel::Exponential),
            _ => None,
        };
        let _ = writeln!(s, "expected decay: {exp}");
        if let Some(b) = best {
            let _ = writeln!(s, "best fit: {b}");
        }
    }

    let _ = writeln!(s, "\n[envelope]");
    match &report.envelope {
        Ok(chk) => {
            let _ = writeln!(s, "{chk}");
        }
        Err(e) => {
            let _ = writeln!(s, "not applicable: {e}");
        }
    }
    if let (Some(first), Some(last)) = (out.trace.rows.first(), out.trace.rows.last()) {
        let _ = writeln!(s, "\n[energy]\nE(0) = {:.16e}\nE(T) = {:.16e}", first.energy, last.energy);
    }
    s
}

/// Runs a configuration and writes `energy.csv`, `cross_section.dat`,
/// `fields_*.dat`, `summary.txt` and `plot.gp` into `opts.out_dir`.
pub fn run_config(
    name: &str,
    cfg: &RunConfig,
    expected: Option<DecayModel>,
    opts: &RunOptions,
) -> Result<RunReport, CliError> {
    let mut cfg = cfg.clone();
    if opts.diagnostics && cfg.flags.lyapunov.is_none() {
        cfg.flags.lyapunov = Some(LyapunovWeights::defaults(&cfg.params));
    }
    let output = run(&cfg).map_err(CliError::Run)?;

    let speeds = wave_speeds(&cfg.params, opts.tol_speed);
    let admissibility = check_admissibility(&cfg.kernel, &cfg.params);
    let window = opts.fit_window.unwrap_or_else(|| decay::default_window(cfg.t_final));
    let exponential = decay::fit_exponential(&output.trace, window);
    let polynomial = decay::fit_polynomial(&output.trace, window);
    let envelope = envelope_check(&output.trace, &admissibility, &speeds, window);
    let mut report = RunReport {
        output,
        speeds,
        admissibility,
        window,
        exponential,
        polynomial,
        envelope,
        summary: String::new(),
    };
    report.summary = build_summary(name, &cfg, &report, expected);

    let dir = &opts.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("energy.csv");
    export_csv(&report.output.trace, &csv_path).map_err(io_err(&csv_path))?;
    let nodes = cfg.mesh.nodes();
    for snap in &report.output.snapshots {
        write_file(&dir.join(snapshot_name(snap.n)), &format_snapshot(snap, nodes))?;
    }
    let mut cross = String::from("# t phi psi w (x = L/2)\n");
    for c in &report.output.cross_sections {
        let _ = writeln!(cross, "{:.16e} {:.16e} {:.16e} {:.16e}", c.t, c.phi, c.psi, c.w);
    }
    write_file(&dir.join("cross_section.dat"), &cross)?;
    write_file(&dir.join("summary.txt"), &report.summary)?;
    write_file(&dir.join("plot.gp"), &plot_script(&report))?;
    Ok(report)
}

pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    run_config(&scenario.name, &scenario.cfg, Some(scenario.expected_decay), opts)
}

/// Command-line interface of the `bresse` binary.
#[derive(Debug, Parser)]
#[command(name = "bresse", version, about = "Simulate a viscoelastic curved beam with finite memory")]
pub struct Args {
    /// Built-in scenario: equal-speed or non-equal-speed.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub scenario: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Reserved; the dynamics are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record the Lyapunov functionals in the energy trace.
    #[arg(long)]
    pub diagnostics: bool,
    /// Relative tolerance for wave-speed equality.
    #[arg(long, default_value_t = DEFAULT_SPEED_TOL)]
    pub tol_speed: f64,
    /// Fit window as `START,END`; defaults to `[T/4, T]`.
    #[arg(long, value_parser = parse_window)]
    pub fit_window: Option<(f64, f64)>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub dry_run: bool,
    /// Run one value per thread, e.g. `k1=1,2,5` or `dt=0.01,0.005`.
    #[arg(long)]
    pub sweep: Option<String>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected START,END")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if !(b > a) {
        return Err(format!("window end {b} must exceed start {a}"));
    }
    Ok((a, b))
}

/// A parsed `--sweep` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

pub fn parse_sweep(s: &str) -> Result<Sweep, CliError> {
    let (key, values) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("sweep `{s}` must look like key=v1,v2")))?;
    let key = key.trim().to_string();
    if !matches!(key.as_str(), "rho1" | "rho2" | "k1" | "k2" | "k3" | "l" | "dt") {
        return Err(CliError::Usage(format!(
            "cannot sweep `{key}` (use rho1, rho2, k1, k2, k3, l or dt)"
        )));
    }
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad sweep value: {e}")))?;
    Ok(Sweep { key, values })
}

fn apply_sweep(cfg: &RunConfig, key: &str, v: f64) -> RunConfig {
    let mut c = cfg.clone();
    let p = &mut c.params;
    match key {
        "rho1" => p.rho1 = v,
        "rho2" => p.rho2 = v,
        "k1" => p.k1 = v,
        "k2" => p.k2 = v,
        "k3" => p.k3 = v,
        "l" => p.l = v,
        "dt" => c.dt = v,
        _ => unreachable!("sweep keys are checked when parsed"),
    }
    c
}

/// Runs a sweep concurrently; returns one result per value, in order.
pub fn run_sweep(
    name: &str,
    cfg: &RunConfig,
    expected: Option<DecayModel>,
    sweep: &Sweep,
    opts: &RunOptions,
) -> Vec<Result<RunReport, CliError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = sweep
            .values
            .iter()
            .map(|&v| {
                let cfg = apply_sweep(cfg, &sweep.key, v);
                let opts = RunOptions {
                    out_dir: opts.out_dir.join(format!("{}={v}", sweep.key)),
                    ..opts.clone()
                };
                let label = format!("{name} ({}={v})", sweep.key);
                scope.spawn(move || run_config(&label, &cfg, expected, &opts))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

fn resolve(args: &Args) -> Result<(String, RunConfig, Option<DecayModel>), CliError> {
    if let Some(name) = &args.scenario {
        let sc = preset(name).ok_or_else(|| {
            CliError::Usage(format!("unknown scenario `{name}` (available: {})", PRESET_NAMES.join(", ")))
        })?;
        return Ok((sc.name, sc.cfg, Some(sc.expected_decay)));
    }
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("either --scenario or --config is required".into()))?;
    let cfg = parse_config(path)?;
    Ok((path.display().to_string(), cfg, None))
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let (name, cfg, expected) = resolve(args)?;
    if args.dry_run {
        print!("{}", format_config(&cfg));
        return Ok(());
    }
    let opts = RunOptions {
        out_dir: args.out.clone(),
        fit_window: args.fit_window,
        tol_speed: args.tol_speed,
        diagnostics: args.diagnostics,
    };
    match &args.sweep {
        None => {
            let report = run_config(&name, &cfg, expected, &opts)?;
            print!("{}", report.summary);
            Ok(())
        }
        Some(text) => {
            let sweep = parse_sweep(text)?;
            let mut first_err = None;
            for (v, res) in sweep.values.iter().zip(run_sweep(&name, &cfg, expected, &sweep, &opts)) {
                match res {
                    Ok(r) => println!("{}={v}: {}", sweep.key, fit_line("exponential", &r.exponential)),
                    Err(e) => {
                        eprintln!("{}={v}: error: {e}", sweep.key);
                        first_err.get_or_insert(e);
                    }
                }
            }
            first_err.map_or(Ok(()), Err)
        }
    }
}
