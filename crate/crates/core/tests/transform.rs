use bresse_core::fem1d::{build_mesh, project_initial};
use bresse_core::model::BresseParams;
use bresse_core::profile::{Profile, Term};
use bresse_core::transform::{compute_mode_constants, reconstruct_original, shift_initial_data, simpson, InitialData};
use proptest::prelude::*;

fn trig() -> impl Strategy<Value = Profile> {
    (
        prop::collection::vec((1u32..5, -2.0f64..2.0, any::<bool>()), 0..4),
        -1.5f64..1.5,
    )
        .prop_map(|(terms, c)| {
            let mut t: Vec<Term> = terms
                .into_iter()
                .map(|(k, amp, sine)| {
                    if sine {
                        Term::Sin { k: k as f64, amp }
                    } else {
                        Term::Cos { k: k as f64, amp }
                    }
                })
                .collect();
            t.push(Term::Const(c));
            Profile::new(t)
        })
}

fn params() -> impl Strategy<Value = BresseParams> {
    (0.01f64..1.0, 0.01f64..1.0, 0.5f64..5.0, 0.5f64..5.0, 0.5f64..5.0, 0.01f64..0.4).prop_map(
        |(rho1, rho2, k1, k2, k3, l)| BresseParams {
            rho1,
            rho2,
            k1,
            k2,
            k3,
            l,
            length: 1.0,
        },
    )
}

fn node_integral(p: &Profile, s: usize) -> f64 {
    let mesh = build_mesh(1.0, s).unwrap();
    let v: Vec<f64> = mesh.nodes().iter().map(|&x| p.eval(x, 1.0)).collect();
    simpson(&v, mesh.h())
}

/// RK4 for `rho2 P'' = -k1 (P + l W)`, `rho1 W'' = -k1 l (P + l W)`.
fn integrate_means(p: &BresseParams, y0: [f64; 4], t: f64, steps: usize) -> Vec<[f64; 4]> {
    let f = |y: [f64; 4]| {
        let s = y[0] + p.l * y[1];
        [y[2], y[3], -p.k1 * s / p.rho2, -p.k1 * p.l * s / p.rho1]
    };
    let h = t / steps as f64;
    let mut out = vec![y0];
    let mut y = y0;
    for _ in 0..steps {
        let add = |a: [f64; 4], b: [f64; 4], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]];
        let k1 = f(y);
        let k2 = f(add(y, k1, h / 2.0));
        let k3 = f(add(y, k2, h / 2.0));
        let k4 = f(add(y, k3, h));
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(y);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifted_data_has_zero_means(p in params(), psi0 in trig(), psi1 in trig(), w0 in trig(), w1 in trig(), s in 4usize..30) {
        let init = InitialData { psi0, psi1, w0, w1, ..InitialData::default_profiles() };
        let mesh = build_mesh(1.0, s).unwrap();
        let c = compute_mode_constants(&p, &init, &mesh);
        let sh = shift_initial_data(&init, &c, &p);
        for prof in [&sh.psi0, &sh.psi1, &sh.w0, &sh.w1] {
            prop_assert!(node_integral(prof, s).abs() < 1e-10);
        }
        // round trip at t = 0
        let psi = project_initial(|x| sh.psi0.eval(x, 1.0), &mesh);
        let w = project_initial(|x| sh.w0.eval(x, 1.0), &mesh);
        let (psi_r, w_r) = reconstruct_original(&psi, &w, &c, &p, 0.0);
        for (i, x) in mesh.nodes().iter().enumerate() {
            prop_assert!((psi_r[i] - init.psi0.eval(*x, 1.0)).abs() < 1e-12);
            prop_assert!((w_r[i] - init.w0.eval(*x, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_formula_solves_the_mean_equations(p in params(), psi0 in trig(), psi1 in trig(), w0 in trig(), w1 in trig()) {
        let s = 24;
        let init = InitialData { psi0, psi1, w0, w1, ..InitialData::zero() };
        let mesh = build_mesh(1.0, s).unwrap();
        let c = compute_mode_constants(&p, &init, &mesh);
        let y0 = [
            node_integral(&init.psi0, s),
            node_integral(&init.w0, s),
            node_integral(&init.psi1, s),
            node_integral(&init.w1, s),
        ];
        let t_final = 2.0;
        let steps = 4000;
        let traj = integrate_means(&p, y0, t_final, steps);
        let scale = y0.iter().fold(1.0f64, |m, v| m.max(v.abs())) * (1.0 + t_final);
        for (i, y) in traj.iter().enumerate().step_by(50) {
            let t = i as f64 * t_final / steps as f64;
            prop_assert!((c.psi_mean(t) - y[0]).abs() < 1e-8 * scale, "psi mean at t = {}", t);
            prop_assert!((c.w_mean(t, &p) - y[1]).abs() < 1e-8 * scale, "w mean at t = {}", t);
        }
    }
}
