//! Naive reference implementation shared by the integration tests.
//!
//! Everything here is deliberately independent of the library: field-blocked
//! unknowns, Dirichlet rows removed instead of pinned, dense Gauss-Legendre
//! assembly of the weak form on every step, Gaussian elimination with
//! partial pivoting, and its own kernel formulas.
#![allow(dead_code)]

#[derive(Debug, Clone, Copy)]
pub struct Phys {
    pub rho1: f64,
    pub rho2: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub l: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum G {
    Zero,
    Exp { a: f64, b: f64 },
    Pow { a: f64, q: f64 },
}

impl G {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            G::Zero => 0.0,
            G::Exp { a, b } => a * (-b * t).exp(),
            G::Pow { a, q } => a / (1.0 + t).powf(q),
        }
    }

    /// `int_0^t g`.
    pub fn cumulative(&self, t: f64) -> f64 {
        match *self {
            G::Zero => 0.0,
            G::Exp { a, b } => a / b * (1.0 - (-b * t).exp()),
            G::Pow { a, q } => a / (q - 1.0) * (1.0 - (1.0 + t).powf(1.0 - q)),
        }
    }
}

const GAUSS: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];

/// Quadrature points of element `e` as `(x, weight, [N_left, N_right], [dN_left, dN_right])`.
pub fn element_points(e: usize, h: f64) -> Vec<(f64, f64, [f64; 2], [f64; 2])> {
    let x0 = e as f64 * h;
    GAUSS
        .iter()
        .map(|&(xi, w)| {
            let x = x0 + 0.5 * h * (1.0 + xi);
            let right = (x - x0) / h;
            (x, 0.5 * h * w, [1.0 - right, right], [-1.0 / h, 1.0 / h])
        })
        .collect()
}

/// Value and slope of a nodal P1 field at a point of element `e`.
pub fn field_at(u: &[f64], e: usize, basis: [f64; 2], dbasis: [f64; 2]) -> (f64, f64) {
    (
        u[e] * basis[0] + u[e + 1] * basis[1],
        u[e] * dbasis[0] + u[e + 1] * dbasis[1],
    )
}

/// `int_0^L f(phi, phi_x, psi, psi_x, w, w_x)` for nodal fields, exact for quadratic integrands.
pub fn integrate(
    h: f64,
    fields: [&[f64]; 3],
    f: impl Fn(f64, [f64; 6]) -> f64,
) -> f64 {
    let s = fields[0].len() - 1;
    let mut total = 0.0;
    for e in 0..s {
        for (x, w, b, db) in element_points(e, h) {
            let (p, px) = field_at(fields[0], e, b, db);
            let (q, qx) = field_at(fields[1], e, b, db);
            let (r, rx) = field_at(fields[2], e, b, db);
            total += w * f(x, [p, px, q, qx, r, rx]);
        }
    }
    total
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Nodal triple `(phi, psi, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub w: Vec<f64>,
}

fn component(f: usize, lvl: &Fields) -> &[f64] {
    match f {
        0 => &lvl.phi,
        1 => &lvl.psi,
        _ => &lvl.w,
    }
}

/// Dense reference stepper holding the two most recent levels and the full `psi` history.
pub struct Oracle {
    pub p: Phys,
    pub g: G,
    pub s: usize,
    pub dt: f64,
    pub start: usize,
    pub levels: Vec<Fields>,
}

impl Oracle {
    /// `u^{-1} = u^0 - dt V^0` closes the second difference at the first step.
    pub fn new(p: Phys, g: G, s: usize, dt: f64, include_m0: bool, u0: Fields, v0: Fields) -> Self {
        let back = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(a, b)| a - dt * b).collect() };
        let before = Fields {
            phi: back(&u0.phi, &v0.phi),
            psi: back(&u0.psi, &v0.psi),
            w: back(&u0.w, &v0.w),
        };
        Oracle {
            p,
            g,
            s,
            dt,
            start: if include_m0 { 0 } else { 1 },
            levels: vec![before, u0],
        }
    }

    fn h(&self) -> f64 {
        self.p.length / self.s as f64
    }

    /// Unknown numbering: phi at interior nodes, then psi, then w at all nodes.
    fn unknowns(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..self.s {
            out.push((0, i));
        }
        for f in 1..3 {
            for i in 0..=self.s {
                out.push((f, i));
            }
        }
        out
    }

    /// Latest step index.
    pub fn n(&self) -> usize {
        self.levels.len() - 2
    }

    pub fn current(&self) -> &Fields {
        self.levels.last().unwrap()
    }

    pub fn step(&mut self) -> &Fields {
        let Phys {
            rho1,
            rho2,
            k1,
            k2,
            k3,
            l,
            ..
        } = self.p;
        let dt = self.dt;
        let h = self.h();
        let n = self.n() + 1;
        let dofs = self.unknowns();
        let nd = dofs.len();
        let g0 = self.g.at(0.0);
        let prev = &self.levels[self.levels.len() - 1];
        let prev2 = &self.levels[self.levels.len() - 2];
        let rho = [rho1, rho2, rho1];

        // memory: dt sum_{m=start}^{n-1} g(t_{n-m}) psi^m; level index of step m is m + 1
        let mut lag = vec![0.0; self.s + 1];
        for m in self.start..n {
            let wgt = self.g.at((n - m) as f64 * dt);
            for (acc, v) in lag.iter_mut().zip(&self.levels[m + 1].psi) {
                *acc += dt * wgt * v;
            }
        }

        let mut a = vec![vec![0.0; nd]; nd];
        let mut b = vec![0.0; nd];
        for e in 0..self.s {
            for (_x, wq, basis, dbasis) in element_points(e, h) {
                let local = |node: usize| -> Option<(f64, f64)> {
                    if node == e {
                        Some((basis[0], dbasis[0]))
                    } else if node == e + 1 {
                        Some((basis[1], dbasis[1]))
                    } else {
                        None
                    }
                };
                for (r, &(ft, it)) in dofs.iter().enumerate() {
                    let Some((v, vx)) = local(it) else { continue };
                    for (c, &(fu, ju)) in dofs.iter().enumerate() {
                        let Some((u, ux)) = local(ju) else { continue };
                        let (mut ph, mut phx, mut ps, mut psx, mut ww, mut wx) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                        match fu {
                            0 => (ph, phx) = (u, ux),
                            1 => (ps, psx) = (u, ux),
                            _ => (ww, wx) = (u, ux),
                        }
                        let sh = phx + ps + l * ww;
                        let ax = wx - l * ph;
                        let val = match ft {
                            0 => rho1 / (dt * dt) * ph * v + k1 * sh * vx - l * k3 * ax * v,
                            1 => rho2 / (dt * dt) * ps * v + k2 * psx * vx + k1 * sh * v - dt * g0 * psx * vx,
                            _ => rho1 / (dt * dt) * ww * v + k3 * ax * vx + k1 * l * sh * v,
                        };
                        a[r][c] += wq * val;
                    }
                    let (u1, _) = field_at(component(ft, prev), e, basis, dbasis);
                    let (u2, _) = field_at(component(ft, prev2), e, basis, dbasis);
                    let mut rhs = rho[ft] / (dt * dt) * (2.0 * u1 - u2) * v;
                    if ft == 1 {
                        let (_, lagx) = field_at(&lag, e, basis, dbasis);
                        rhs += lagx * vx;
                    }
                    b[r] += wq * rhs;
                }
            }
        }
        let x = dense_solve(a, b);
        let mut next = Fields {
            phi: vec![0.0; self.s + 1],
            psi: vec![0.0; self.s + 1],
            w: vec![0.0; self.s + 1],
        };
        for (k, &(f, i)) in dofs.iter().enumerate() {
            match f {
                0 => next.phi[i] = x[k],
                1 => next.psi[i] = x[k],
                _ => next.w[i] = x[k],
            }
        }
        self.levels.push(next);
        self.current()
    }

    /// Energy of the latest level, by quadrature.
    pub fn energy(&self) -> f64 {
        let n = self.n();
        let cur = self.current();
        let prev = &self.levels[self.levels.len() - 2];
        let dt = self.dt;
        let vel = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y) / dt).collect() };
        let history: Vec<&[f64]> = (0..=n).map(|m| self.levels[m + 1].psi.as_slice()).collect();
        energy_by_quadrature(
            self.p,
            self.g,
            dt,
            self.start,
            n,
            cur,
            &Fields {
                phi: vel(&cur.phi, &prev.phi),
                psi: vel(&cur.psi, &prev.psi),
                w: vel(&cur.w, &prev.w),
            },
            &history,
        )
    }
}

/// Energy of a state, each integral by element quadrature.
#[allow(clippy::too_many_arguments)]
pub fn energy_by_quadrature(
    p: Phys,
    g: G,
    dt: f64,
    start: usize,
    n: usize,
    u: &Fields,
    v: &Fields,
    history: &[&[f64]],
) -> f64 {
    let s = u.phi.len() - 1;
    let h = p.length / s as f64;
    let kinetic = integrate(h, [&v.phi, &v.psi, &v.w], |_, f| {
        p.rho1 * f[0] * f[0] + p.rho2 * f[2] * f[2] + p.rho1 * f[4] * f[4]
    });
    let t = n as f64 * dt;
    let potential = integrate(h, [&u.phi, &u.psi, &u.w], |_, f| {
        let sh = f[1] + f[2] + p.l * f[4];
        let ax = f[5] - p.l * f[0];
        p.k1 * sh * sh + p.k3 * ax * ax + (p.k2 - g.cumulative(t)) * f[3] * f[3]
    });
    let mut memory = 0.0;
    for (m, past) in history.iter().enumerate().take(n + 1).skip(start) {
        let diff: Vec<f64> = u.psi.iter().zip(past.iter()).map(|(a, b)| a - b).collect();
        let zero = vec![0.0; s + 1];
        memory += dt * g.at((n - m) as f64 * dt) * integrate(h, [&zero, &diff, &zero], |_, f| f[3] * f[3]);
    }
    kinetic + potential + 0.5 * memory
}

/// Simple deterministic pseudo-random numbers in `[-1, 1]`.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    pub fn vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next()).collect()
    }

    /// Random nodal fields with `phi` pinned at both ends.
    pub fn fields(&mut self, s: usize) -> Fields {
        let mut phi = self.vec(s + 1);
        phi[0] = 0.0;
        phi[s] = 0.0;
        Fields {
            phi,
            psi: self.vec(s + 1),
            w: self.vec(s + 1),
        }
    }
}
