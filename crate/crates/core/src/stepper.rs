//! Implicit Euler time stepping of the coupled `(phi, psi, w)` system.
//!
//! Unknowns are interleaved per node, `[phi_0, psi_0, w_0, phi_1, ...]`,
//! so the step matrix is symmetric with half-bandwidth 5. With
//! `Phi^n = (phi^n - phi^{n-1}) / dt` substituted, the left-hand side is
//!
//! ```text
//! diag(rho1, rho2, rho1) M / dt^2 + A_el - dt g(0) K_psi
//! ```
//!
//! where `A_el` is the elastic form `k1 (S, S~) + k3 (N, N~) + k2 (psi_x, psi~_x)`
//! with `S = phi_x + psi + l w`, `N = w_x - l phi`. Only `g(0)` enters the
//! matrix, so it is factored once per run.

use crate::energy::{self, EnergyRow, EnergyTrace, LyapunovWeights};
use crate::error::{Error, Result};
use crate::fem1d::{assemble, project_initial, BandCholesky, Constrain, FemMatrices, Mesh, SymBandMatrix, TriDiag};
use crate::memory::History;
use crate::model::{validate_params, BresseParams, Kernel};
use crate::transform::{compute_mode_constants, reconstruct_original, shift_initial_data, InitialData, ModeConstants};

/// Unknowns per node.
pub const FIELDS: usize = 3;
/// Half-bandwidth of the interleaved step matrix.
pub const BANDWIDTH: usize = 2 * FIELDS - 1;

const PHI: usize = 0;
const PSI: usize = 1;
const W: usize = 2;

#[inline]
pub fn dof(node: usize, field: usize) -> usize {
    FIELDS * node + field
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFlags {
    /// Include the `m = 0` snapshot in the memory sums.
    pub include_m0: bool,
    /// Recurrence for exponential kernels instead of the direct sum.
    pub exponential_fastpath: bool,
    /// Record an energy row every this many steps (the final step is always recorded).
    pub diagnostics_every: usize,
    /// Evaluate the Lyapunov functionals with these weights.
    pub lyapunov: Option<LyapunovWeights>,
    /// Dump full fields every this many steps; 0 disables.
    pub snapshot_every: usize,
}

impl Default for RunFlags {
    fn default() -> Self {
        RunFlags {
            include_m0: false,
            exponential_fastpath: false,
            diagnostics_every: 1,
            lyapunov: None,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: BresseParams,
    pub kernel: Kernel,
    pub mesh: Mesh,
    pub dt: f64,
    pub t_final: f64,
    pub initial: InitialData,
    pub flags: RunFlags,
}

impl RunConfig {
    /// `N = round(T / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<Vec<String>> {
        let checked = validate_params(self.params)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "final time {} must be at least dt = {}",
                self.t_final, self.dt
            )));
        }
        if (self.mesh.length() - self.params.length).abs() > 1e-12 * self.params.length {
            return Err(Error::InvalidConfig(format!(
                "mesh length {} differs from beam length {}",
                self.mesh.length(),
                self.params.length
            )));
        }
        if self.flags.diagnostics_every == 0 {
            return Err(Error::InvalidConfig("diagnostics_every must be at least 1".into()));
        }
        let defect = self.initial.dirichlet_defect(self.params.length);
        if defect > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "phi0/phi1 must vanish at both ends (defect {defect:e})"
            )));
        }
        Ok(checked.warnings)
    }
}

/// Fields at step `n` with backward-difference velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub n: usize,
    pub t: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub w: Vec<f64>,
    pub vphi: Vec<f64>,
    pub vpsi: Vec<f64>,
    pub vw: Vec<f64>,
}

impl SimState {
    pub fn zeros(nodes: usize) -> Self {
        SimState {
            n: 0,
            t: 0.0,
            phi: vec![0.0; nodes],
            psi: vec![0.0; nodes],
            w: vec![0.0; nodes],
            vphi: vec![0.0; nodes],
            vpsi: vec![0.0; nodes],
            vw: vec![0.0; nodes],
        }
    }

    /// Nodal interpolants of (already zero-mean) initial data.
    pub fn from_initial(init: &InitialData, mesh: &Mesh) -> Self {
        let len = mesh.length();
        let sample = |p: &crate::profile::Profile| project_initial(|x| p.eval(x, len), mesh);
        let mut state = SimState {
            n: 0,
            t: 0.0,
            phi: sample(&init.phi0),
            psi: sample(&init.psi0),
            w: sample(&init.w0),
            vphi: sample(&init.phi1),
            vpsi: sample(&init.psi1),
            vw: sample(&init.w1),
        };
        let bc = mesh.dirichlet_nodes();
        state.phi.apply_dirichlet(&bc);
        state.vphi.apply_dirichlet(&bc);
        state
    }
}

/// Everything the discrete operators depend on.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub params: BresseParams,
    pub kernel: Kernel,
    pub mesh: Mesh,
    pub mats: FemMatrices,
    pub dt: f64,
}

impl Discretization {
    pub fn new(params: BresseParams, kernel: Kernel, mesh: Mesh, dt: f64) -> Self {
        let mats = assemble(&mesh);
        Discretization {
            params,
            kernel,
            mesh,
            mats,
            dt,
        }
    }

    /// Elastic block `(test, trial)` of the bilinear form, as a tridiagonal operator.
    pub fn elastic_block(&self, test: usize, trial: usize) -> TriDiag {
        let BresseParams { k1, k2, k3, l, .. } = self.params;
        let m = &self.mats.mass;
        let k = &self.mats.stiffness;
        let d = &self.mats.coupling;
        let dt = &self.mats.coupling_t();
        match (test, trial) {
            (PHI, PHI) => combine(&[(k1, k), (k3 * l * l, m)]),
            (PHI, PSI) => combine(&[(k1, dt)]),
            (PHI, W) => combine(&[(k1 * l, dt), (-k3 * l, d)]),
            (PSI, PHI) => combine(&[(k1, d)]),
            (PSI, PSI) => combine(&[(k1, m), (k2, k)]),
            (PSI, W) => combine(&[(k1 * l, m)]),
            (W, PHI) => combine(&[(k1 * l, d), (-k3 * l, dt)]),
            (W, PSI) => combine(&[(k1 * l, m)]),
            (W, W) => combine(&[(k1 * l * l, m), (k3, k)]),
            _ => unreachable!("field index out of range"),
        }
    }

    fn densities(&self) -> [f64; FIELDS] {
        [self.params.rho1, self.params.rho2, self.params.rho1]
    }

    /// Step matrix with Dirichlet rows of `phi` eliminated.
    pub fn step_matrix(&self) -> SymBandMatrix {
        let n = self.mesh.num_nodes();
        let inv_dt2 = 1.0 / (self.dt * self.dt);
        let memory_diag = self.dt * self.kernel.value(0.0);
        let rho = self.densities();
        let mut blocks: Vec<Vec<TriDiag>> = (0..FIELDS)
            .map(|a| (0..FIELDS).map(|b| self.elastic_block(a, b)).collect())
            .collect();
        for (f, row) in blocks.iter_mut().enumerate() {
            let mut terms = vec![(1.0, &row[f]), (rho[f] * inv_dt2, &self.mats.mass)];
            if f == PSI {
                terms.push((-memory_diag, &self.mats.stiffness));
            }
            row[f] = combine(&terms);
        }
        let mut a = SymBandMatrix::zeros(FIELDS * n, BANDWIDTH);
        for i in 0..n {
            for j in i..(i + 2).min(n) {
                for fa in 0..FIELDS {
                    for fb in 0..FIELDS {
                        let (r, c) = (dof(i, fa), dof(j, fb));
                        if c < r {
                            continue;
                        }
                        a.set(r, c, blocks[fa][fb].get(i, j));
                    }
                }
            }
        }
        a.apply_dirichlet(&self.dirichlet_dofs());
        a
    }

    pub fn dirichlet_dofs(&self) -> [usize; 2] {
        let [a, b] = self.mats.dirichlet_nodes;
        [dof(a, PHI), dof(b, PHI)]
    }

    /// Right-hand side for step `n = state.n + 1`.
    pub fn step_rhs(&self, state: &SimState, hist: &History) -> Result<Vec<f64>> {
        let n = state.n + 1;
        let nodes = self.mesh.num_nodes();
        let rho = self.densities();
        let (dt, m) = (self.dt, &self.mats.mass);
        let mut b = vec![0.0; FIELDS * nodes];
        let fields = [
            (&state.phi, &state.vphi),
            (&state.psi, &state.vpsi),
            (&state.w, &state.vw),
        ];
        for (f, (u, v)) in fields.into_iter().enumerate() {
            let combo: Vec<f64> = u
                .iter()
                .zip(v)
                .map(|(ui, vi)| rho[f] * (ui / (dt * dt) + vi / dt))
                .collect();
            for (i, val) in m.mul_vec(&combo).into_iter().enumerate() {
                b[dof(i, f)] = val;
            }
        }
        if !self.kernel.is_zero() {
            let lagged = hist.lagged_sum(n)?;
            let load = self.mats.stiffness.mul_vec(&lagged);
            for (i, val) in load.into_iter().enumerate() {
                b[dof(i, PSI)] += dt * val;
            }
        }
        b.apply_dirichlet(&self.dirichlet_dofs());
        Ok(b)
    }
}

fn combine(terms: &[(f64, &TriDiag)]) -> TriDiag {
    let n = terms[0].1.dim();
    let mut out = TriDiag::zeros(n);
    for (c, t) in terms {
        for (o, v) in out.diag.iter_mut().zip(&t.diag) {
            *o += c * v;
        }
        for (o, v) in out.lower.iter_mut().zip(&t.lower) {
            *o += c * v;
        }
        for (o, v) in out.upper.iter_mut().zip(&t.upper) {
            *o += c * v;
        }
    }
    out
}

/// A discretization with its factored step matrix.
#[derive(Debug, Clone)]
pub struct Stepper {
    disc: Discretization,
    factor: BandCholesky,
}

impl Stepper {
    pub fn new(disc: Discretization) -> Result<Self> {
        let factor = disc.step_matrix().cholesky()?;
        Ok(Stepper { disc, factor })
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    /// The linear system for step `state.n + 1`.
    pub fn assemble_step_system(&self, state: &SimState, hist: &History) -> Result<(SymBandMatrix, Vec<f64>)> {
        Ok((self.disc.step_matrix(), self.disc.step_rhs(state, hist)?))
    }

    /// Advances one step and appends `psi^n` to the history.
    pub fn step(&self, state: &SimState, hist: &mut History) -> Result<SimState> {
        let mut x = self.disc.step_rhs(state, hist)?;
        self.factor.solve_in_place(&mut x);
        let nodes = self.disc.mesh.num_nodes();
        let dt = self.disc.dt;
        let extract = |f: usize| -> Vec<f64> { (0..nodes).map(|i| x[dof(i, f)]).collect() };
        let (phi, psi, w) = (extract(PHI), extract(PSI), extract(W));
        let velocity = |new: &[f64], old: &[f64]| -> Vec<f64> {
            new.iter().zip(old).map(|(a, b)| (a - b) / dt).collect()
        };
        let next = SimState {
            n: state.n + 1,
            t: (state.n + 1) as f64 * dt,
            vphi: velocity(&phi, &state.phi),
            vpsi: velocity(&psi, &state.psi),
            vw: velocity(&w, &state.w),
            phi,
            psi,
            w,
        };
        hist.push(next.psi.clone());
        Ok(next)
    }
}

/// Full fields in the original (unshifted) variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub n: usize,
    pub t: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub w: Vec<f64>,
}

/// Values at the node nearest `L/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    pub t: f64,
    pub phi: f64,
    pub psi: f64,
    pub w: f64,
}

/// A running simulation; [`run`] drives one to completion.
#[derive(Debug, Clone)]
pub struct Simulation {
    stepper: Stepper,
    hist: History,
    state: SimState,
    modes: ModeConstants,
    shifted: bool,
    lyapunov: Option<LyapunovWeights>,
    warnings: Vec<String>,
    initial_energy: f64,
}

impl Simulation {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let warnings = cfg.validate()?;
        let modes = compute_mode_constants(&cfg.params, &cfg.initial, &cfg.mesh);
        let shifted = !modes.is_trivial();
        let data = if shifted {
            shift_initial_data(&cfg.initial, &modes, &cfg.params)
        } else {
            cfg.initial.clone()
        };
        let disc = Discretization::new(cfg.params, cfg.kernel, cfg.mesh.clone(), cfg.dt);
        let stepper = Stepper::new(disc)?;
        let mut hist = History::new(cfg.kernel, cfg.dt, cfg.flags.include_m0);
        if cfg.flags.exponential_fastpath {
            hist.enable_exponential_fastpath();
        }
        let state = SimState::from_initial(&data, &cfg.mesh);
        hist.push(state.psi.clone());
        let mut sim = Simulation {
            stepper,
            hist,
            state,
            modes,
            shifted,
            lyapunov: cfg.flags.lyapunov,
            warnings,
            initial_energy: 0.0,
        };
        sim.initial_energy = sim.energy_row()?.energy;
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn history(&self) -> &History {
        &self.hist
    }

    pub fn discretization(&self) -> &Discretization {
        self.stepper.discretization()
    }

    pub fn modes(&self) -> &ModeConstants {
        &self.modes
    }

    /// Whether the zero-mean shift was applied.
    pub fn shifted(&self) -> bool {
        self.shifted
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    pub fn energy_row(&self) -> Result<EnergyRow> {
        let disc = self.stepper.discretization();
        let parts = energy::discrete_energy(&self.state, &self.hist, disc)?;
        let lyapunov = match &self.lyapunov {
            Some(wts) => Some(energy::lyapunov_diagnostics(&self.state, &self.hist, disc, wts, parts.total)?),
            None => None,
        };
        Ok(EnergyRow {
            n: self.state.n,
            t: self.state.t,
            energy: parts.total,
            memory: parts.memory,
            kinetic: parts.kinetic,
            potential: parts.potential,
            lyapunov,
        })
    }

    /// One implicit Euler step.
    pub fn advance(&mut self) -> Result<&SimState> {
        self.state = self.stepper.step(&self.state, &mut self.hist)?;
        Ok(&self.state)
    }

    /// Energy row for the current state, aborting on non-finite or
    /// clearly negative energy.
    pub fn checked_energy_row(&self) -> Result<EnergyRow> {
        let row = self.energy_row()?;
        let bad = if !row.energy.is_finite() {
            Some("energy is not finite".to_string())
        } else if row.energy < -1e-12 * self.initial_energy.abs() {
            Some(format!("energy {:e} is negative", row.energy))
        } else {
            None
        };
        match bad {
            Some(reason) => Err(Error::NumericalAbort {
                step: row.n,
                t: row.t,
                reason: format!(
                    "{reason} (kinetic {:e}, potential {:e}, memory {:e}, E0 {:e})",
                    row.kinetic, row.potential, row.memory, self.initial_energy
                ),
            }),
            None => Ok(row),
        }
    }

    /// Current fields in the original variables.
    pub fn snapshot(&self) -> FieldSnapshot {
        let disc = self.stepper.discretization();
        let s = &self.state;
        let (psi, w) = if self.shifted {
            reconstruct_original(&s.psi, &s.w, &self.modes, &disc.params, s.t)
        } else {
            (s.psi.clone(), s.w.clone())
        };
        FieldSnapshot {
            n: s.n,
            t: s.t,
            phi: s.phi.clone(),
            psi,
            w,
        }
    }

    pub fn cross_section(&self) -> CrossSection {
        let disc = self.stepper.discretization();
        let i = disc.mesh.nearest_node(0.5 * disc.mesh.length());
        let snap = self.snapshot();
        CrossSection {
            t: snap.t,
            phi: snap.phi[i],
            psi: snap.psi[i],
            w: snap.w[i],
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: EnergyTrace,
    pub snapshots: Vec<FieldSnapshot>,
    pub cross_sections: Vec<CrossSection>,
    pub modes: ModeConstants,
    pub shifted: bool,
    pub warnings: Vec<String>,
    pub steps: usize,
    /// Final shifted state, for post-processing.
    pub final_state: SimState,
}

/// Runs `round(T/dt)` steps, recording energies, snapshots and the
/// mid-span cross section.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(cfg)?;
    let steps = cfg.steps();
    let every = cfg.flags.diagnostics_every;
    let mut trace = EnergyTrace::default();
    let mut snapshots = Vec::new();
    let mut cross_sections = vec![sim.cross_section()];
    trace.rows.push(sim.checked_energy_row()?);
    if cfg.flags.snapshot_every > 0 {
        snapshots.push(sim.snapshot());
    }
    for n in 1..=steps {
        sim.advance()?;
        if n % every == 0 || n == steps {
            trace.rows.push(sim.checked_energy_row()?);
        }
        if cfg.flags.snapshot_every > 0 && (n % cfg.flags.snapshot_every == 0 || n == steps) {
            snapshots.push(sim.snapshot());
        }
        cross_sections.push(sim.cross_section());
    }
    Ok(RunOutput {
        trace,
        snapshots,
        cross_sections,
        modes: *sim.modes(),
        shifted: sim.shifted(),
        warnings: sim.warnings().to_vec(),
        steps,
        final_state: sim.state().clone(),
    })
}
