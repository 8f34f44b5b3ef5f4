//! Uniform 1D meshes and P1 finite-element operators.
//!
//! All three operators are tridiagonal. Entries are closed forms in `h`,
//! so assembly carries no quadrature error.

mod banded;

pub use banded::{BandCholesky, SymBandMatrix};

use crate::error::{Error, Result};

/// Uniform partition `0 = x_0 < x_1 < ... < x_s = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    length: f64,
    elements: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of elements `s`.
    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn num_nodes(&self) -> usize {
        self.elements + 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Indices carrying the homogeneous Dirichlet condition for `phi`.
    pub fn dirichlet_nodes(&self) -> [usize; 2] {
        [0, self.elements]
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let i = (x / self.h).round();
        (i.max(0.0) as usize).min(self.elements)
    }
}

pub fn build_mesh(length: f64, elements: usize) -> Result<Mesh> {
    if elements < 2 {
        return Err(Error::TooFewElements(elements));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::NonPositiveParameter("L"));
    }
    let h = length / elements as f64;
    let mut nodes: Vec<f64> = (0..=elements).map(|i| i as f64 * h).collect();
    // pin the last node to L so rounding never leaves it short
    nodes[elements] = length;
    Ok(Mesh {
        length,
        elements,
        h,
        nodes,
    })
}

/// Tridiagonal matrix: `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TriDiag {
    pub fn zeros(n: usize) -> Self {
        TriDiag {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.upper[i]
        } else if i == j + 1 {
            self.lower[j]
        } else {
            0.0
        }
    }

    pub fn transpose(&self) -> TriDiag {
        TriDiag {
            lower: self.upper.clone(),
            diag: self.diag.clone(),
            upper: self.lower.clone(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// `u^T A v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = self.diag[i] * v[i];
            if i > 0 {
                row += self.lower[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                row += self.upper[i] * v[i + 1];
            }
            acc += u[i] * row;
        }
        acc
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.bilinear(v, v)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Global P1 operators on a mesh.
///
/// Row index is the test function, column index the trial function:
/// `mass[i][j] = (N_j, N_i)`, `stiffness[i][j] = (N_j', N_i')`,
/// `coupling[i][j] = (N_j', N_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FemMatrices {
    pub mass: TriDiag,
    pub stiffness: TriDiag,
    pub coupling: TriDiag,
    pub dirichlet_nodes: [usize; 2],
}

impl FemMatrices {
    /// `(u, v_x)`, the transpose of the coupling form.
    pub fn coupling_t(&self) -> TriDiag {
        self.coupling.transpose()
    }
}

pub fn element_mass(h: f64) -> [[f64; 2]; 2] {
    let c = h / 6.0;
    [[2.0 * c, c], [c, 2.0 * c]]
}

pub fn element_stiffness(h: f64) -> [[f64; 2]; 2] {
    let c = 1.0 / h;
    [[c, -c], [-c, c]]
}

pub fn element_coupling() -> [[f64; 2]; 2] {
    [[-0.5, 0.5], [-0.5, 0.5]]
}

pub fn assemble(mesh: &Mesh) -> FemMatrices {
    let n = mesh.num_nodes();
    let h = mesh.h();
    let mut mass = TriDiag::zeros(n);
    let mut stiffness = TriDiag::zeros(n);
    let mut coupling = TriDiag::zeros(n);
    let blocks = [
        (&mut mass, element_mass(h)),
        (&mut stiffness, element_stiffness(h)),
        (&mut coupling, element_coupling()),
    ];
    for (global, local) in blocks {
        for e in 0..mesh.elements() {
            global.diag[e] += local[0][0];
            global.upper[e] += local[0][1];
            global.lower[e] += local[1][0];
            global.diag[e + 1] += local[1][1];
        }
    }
    FemMatrices {
        mass,
        stiffness,
        coupling,
        dirichlet_nodes: mesh.dirichlet_nodes(),
    }
}

/// Homogeneous Dirichlet elimination.
pub trait Constrain {
    /// Zero the rows and columns of `nodes`, with unit diagonal for matrices
    /// and zero entries for vectors.
    fn apply_dirichlet(&mut self, nodes: &[usize]);
}

impl Constrain for [f64] {
    fn apply_dirichlet(&mut self, nodes: &[usize]) {
        for &i in nodes {
            self[i] = 0.0;
        }
    }
}

impl Constrain for Vec<f64> {
    fn apply_dirichlet(&mut self, nodes: &[usize]) {
        self.as_mut_slice().apply_dirichlet(nodes);
    }
}

impl Constrain for TriDiag {
    fn apply_dirichlet(&mut self, nodes: &[usize]) {
        let n = self.dim();
        for &i in nodes {
            self.diag[i] = 1.0;
            if i > 0 {
                self.lower[i - 1] = 0.0;
                self.upper[i - 1] = 0.0;
            }
            if i + 1 < n {
                self.upper[i] = 0.0;
                self.lower[i] = 0.0;
            }
        }
    }
}

impl Constrain for SymBandMatrix {
    fn apply_dirichlet(&mut self, nodes: &[usize]) {
        for &i in nodes {
            self.clear_row_col(i);
            self.set(i, i, 1.0);
        }
    }
}

/// Nodal interpolation `v_i = f(x_i)`.
pub fn project_initial<F: Fn(f64) -> f64>(f: F, mesh: &Mesh) -> Vec<f64> {
    mesh.nodes().iter().map(|&x| f(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_examples() {
        let m = build_mesh(1.0, 42).unwrap();
        assert!((m.h() - 1.0 / 42.0).abs() < 1e-17);
        assert!((m.h() - 0.024).abs() < 3e-4);
        assert_eq!(build_mesh(1.0, 2).unwrap().nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(build_mesh(2.0, 4).unwrap().h(), 0.5);
        assert_eq!(build_mesh(1.0, 1), Err(Error::TooFewElements(1)));
    }

    #[test]
    fn mesh_nodes_increase_and_end_at_length() {
        let m = build_mesh(0.7, 13).unwrap();
        assert!(m.nodes().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*m.nodes().last().unwrap(), 0.7);
        assert!((m.h() * 13.0 - 0.7).abs() <= f64::EPSILON * 0.7);
    }

    #[test]
    fn two_element_mass_diagonal() {
        let f = assemble(&build_mesh(1.0, 2).unwrap());
        let want = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0];
        for (a, b) in f.mass.diag.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((f.mass.upper[0] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn two_element_stiffness() {
        let f = assemble(&build_mesh(1.0, 2).unwrap());
        let want = [[2.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]];
        assert_eq!(f.stiffness.to_dense(), want.map(|r| r.to_vec()).to_vec());
    }

    #[test]
    fn constants_in_stiffness_kernel() {
        let f = assemble(&build_mesh(1.0, 7).unwrap());
        let k1 = f.stiffness.mul_vec(&[3.5; 8]);
        assert!(k1.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dirichlet_examples() {
        let mut id = TriDiag::zeros(3);
        id.diag = vec![1.0; 3];
        let before = id.clone();
        id.apply_dirichlet(&[0]);
        assert_eq!(id, before);

        let mut k = assemble(&build_mesh(1.0, 2).unwrap()).stiffness;
        k.apply_dirichlet(&[0, 2]);
        assert_eq!(
            k.to_dense(),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 4.0, 0.0], vec![0.0, 0.0, 1.0]]
        );

        let mut v = vec![1.0, 2.0, 3.0];
        v.apply_dirichlet(&[0, 2]);
        assert_eq!(v, vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn projection() {
        let m = build_mesh(1.0, 2).unwrap();
        assert_eq!(project_initial(|_| 0.0, &m), vec![0.0; 3]);
        assert_eq!(project_initial(|x| x, &m), vec![0.0, 0.5, 1.0]);
        let m4 = build_mesh(1.0, 4).unwrap();
        let s = project_initial(|x| (std::f64::consts::PI * x).sin(), &m4);
        assert!((s[2] - 1.0).abs() < 1e-15);
        assert!((s[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn coupling_integrates_affine_against_constant() {
        // u = x, v = 1 on [0, 2]: int u_x v = L
        let m = build_mesh(2.0, 5).unwrap();
        let f = assemble(&m);
        let u = project_initial(|x| x, &m);
        let one = vec![1.0; m.num_nodes()];
        assert!((f.coupling.bilinear(&one, &u) - 2.0).abs() < 1e-14);
        // transpose form: int u v_x with u = 1, v = x
        assert!((f.coupling_t().bilinear(&u, &one) - 2.0).abs() < 1e-14);
    }
}
