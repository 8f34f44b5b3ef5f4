use bresse_core::fem1d::{assemble, build_mesh, project_initial, Constrain, SymBandMatrix, TriDiag};
use proptest::prelude::*;

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        x[r] = (b[r] - (r + 1..n).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
    }
    x
}

fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

proptest! {
    #[test]
    fn operator_identities(len in 0.1f64..5.0, s in 2usize..40, seed in any::<u64>()) {
        let mesh = build_mesh(len, s).unwrap();
        let m = assemble(&mesh);
        let n = s + 1;
        let u: Vec<f64> = (0..n).map(|i| ((seed % 97) as f64 + i as f64 * 1.3).sin()).collect();
        // mass reproduces the length, stiffness and coupling kill constants
        prop_assert!((m.mass.bilinear(&ones(n), &ones(n)) - len).abs() < 1e-12 * len);
        prop_assert!(m.stiffness.mul_vec(&ones(n)).iter().all(|v| v.abs() < 1e-9 / mesh.h()));
        prop_assert!(m.coupling.mul_vec(&ones(n)).iter().all(|v| v.abs() < 1e-14));
        // 1^T D u = int u_x = u(L) - u(0)
        prop_assert!((m.coupling.bilinear(&ones(n), &u) - (u[s] - u[0])).abs() < 1e-12);
        // D + D^T = boundary terms
        let dt = m.coupling_t();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j && i == 0 { -1.0 } else if i == j && i == s { 1.0 } else { 0.0 };
                prop_assert!((m.coupling.get(i, j) + dt.get(i, j) - want).abs() < 1e-15);
            }
        }
        // symmetric mass and stiffness
        prop_assert_eq!(m.mass.to_dense(), m.mass.transpose().to_dense());
        prop_assert_eq!(m.stiffness.to_dense(), m.stiffness.transpose().to_dense());
    }

    #[test]
    fn mass_integrates_linear_products_exactly(len in 0.5f64..3.0, s in 2usize..20, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mesh = build_mesh(len, s).unwrap();
        let m = assemble(&mesh);
        let u = project_initial(|x| a + b * x, &mesh);
        let v = project_initial(|x| 1.0 - x, &mesh);
        // int (a + b x)(1 - x) dx over [0, len]
        let exact = a * len + (b - a) * len * len / 2.0 - b * len.powi(3) / 3.0;
        prop_assert!((m.mass.bilinear(&u, &v) - exact).abs() < 1e-12 * (1.0 + exact.abs()));
        prop_assert!((m.stiffness.bilinear(&u, &v) - (-b * len)).abs() < 1e-10 * (1.0 + b.abs() * len));
    }

    #[test]
    fn banded_cholesky_matches_dense_elimination(n in 3usize..30, kd in 1usize..6, seed in any::<u64>()) {
        let mut state = seed;
        let mut rnd = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = SymBandMatrix::zeros(n, kd);
        for i in 0..n {
            a.set(i, i, 2.0 * kd as f64 + 1.0 + rnd());
            for d in 1..=kd {
                if i + d < n {
                    a.set(i, i + d, rnd());
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let mut x = b.clone();
        a.cholesky().unwrap().solve_in_place(&mut x);
        let y = dense_solve(a.to_dense(), b);
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn dirichlet_elimination_pins_rows() {
    let mesh = build_mesh(1.0, 4).unwrap();
    let mut k: TriDiag = assemble(&mesh).stiffness;
    k.apply_dirichlet(&mesh.dirichlet_nodes());
    let d = k.to_dense();
    assert_eq!(d[0], vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(d[4], vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(d[1][0], 0.0);
    assert_eq!(d[3][4], 0.0);
    assert_eq!(d[2][2], 8.0);
}

#[test]
fn too_few_elements() {
    assert!(build_mesh(1.0, 1).is_err());
    assert!(build_mesh(1.0, 2).is_ok());
    assert_eq!(build_mesh(1.0, 42).unwrap().nodes()[42], 1.0);
}
