use nhjump_core::dynamics::{
    evolve_master, evolve_nh, expectation, expectation_biortho, linspace, validate_density,
};
use nhjump_core::fock::{fock_space, kron};
use nhjump_core::linalg::{
    biortho_trace, completeness_residual, eig_biortho, mixed_trace, similarity_factor,
    ComplexMatrix, C64, EIG_TOL,
};
use nhjump_core::liouvillian::{
    build_composite, build_full, map_rho_to_state, map_state_to_rho, LindbladModel,
};
use nhjump_core::models::{tls_model, tls_reference, TlsParams};
use nhjump_core::perturbation::{
    correct_first_order, correct_second_order, perturbed_eigensystem, PerturbationBasis,
};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        ComplexMatrix::new(n, n, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
    })
}

fn density(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n).prop_map(|g| {
        let rho = &g * &g.adjoint();
        let tr = rho.trace();
        rho.scale(tr.inv())
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n).prop_map(|g| (&g + &g.adjoint()).scale(c(0.5, 0.0)))
}

fn model(n: usize) -> impl Strategy<Value = LindbladModel> {
    (
        hermitian(n),
        prop::collection::vec((0.05f64..0.5, matrix(n)), 1..3),
    )
        .prop_map(|(h, ch)| LindbladModel::new(h, ch).unwrap())
}

fn min_eigenvalue(rho: &ComplexMatrix) -> f64 {
    let h = ComplexMatrix::from_fn(rho.rows(), rho.cols(), |i, j| {
        0.5 * (rho[(i, j)] + rho[(j, i)].conj())
    });
    eig_biortho(&h, EIG_TOL)
        .unwrap()
        .eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_map_round_trip(h in matrix(3), rho in density(3)) {
        let es = eig_biortho(&h, EIG_TOL).unwrap();
        let back = map_state_to_rho(&map_rho_to_state(&rho, &es).unwrap(), &es).unwrap();
        prop_assert!(back.max_abs_diff(&rho) < 1e-10);
    }

    #[test]
    fn master_evolution_stays_physical(m in model(3), rho0 in density(3)) {
        let series = evolve_master(&m, &rho0, &linspace(0.0, 10.0, 11)).unwrap();
        for rho in &series.values {
            prop_assert!(rho.max_abs_diff(&rho.adjoint()) < 1e-8);
            prop_assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-8);
            prop_assert!(min_eigenvalue(rho) > -1e-8);
            prop_assert!(validate_density(rho, 3).is_ok());
        }
    }

    #[test]
    fn master_evolution_is_a_semigroup(m in model(2), rho0 in density(2), t in 0.1f64..3.0, s in 0.1f64..3.0) {
        let direct = evolve_master(&m, &rho0, &[t + s]).unwrap().values.remove(0);
        let mid = evolve_master(&m, &rho0, &[t]).unwrap().values.remove(0);
        let twice = evolve_master(&m, &mid, &[s]).unwrap().values.remove(0);
        prop_assert!(direct.max_abs_diff(&twice) < 1e-9);
    }

    #[test]
    fn nh_evolution_ignores_identity_shift(m in model(3), rho0 in density(3), re in -3.0f64..3.0, im in -1.0f64..1.0) {
        let h = &m.effective_nh_hamiltonian() + &ComplexMatrix::identity(3).scale(c(re, im));
        let shifted = LindbladModel::with_effective_hamiltonian(h, vec![]).unwrap();
        let t = linspace(0.0, 4.0, 5);
        let a = evolve_nh(&m, &rho0, &t).unwrap();
        let b = evolve_nh(&shifted, &rho0, &t).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!(x.max_abs_diff(y) < 1e-10);
        }
    }

    #[test]
    fn biorthogonal_traces(h in matrix(4), rho in density(4), obs in matrix(4)) {
        let es = eig_biortho(&h, EIG_TOL).unwrap();
        prop_assert!(es.biorthogonality_residual() < 1e-9);
        prop_assert!(completeness_residual(&es) < 1e-9);
        let direct = expectation(&obs, &rho);
        prop_assert!((expectation_biortho(&obs, &rho, &es).unwrap() - direct).norm() < 1e-10);
        prop_assert!((mixed_trace(&rho, &es).unwrap() - rho.trace()).norm() < 1e-10);
        // Σ⟨l|ρ|l⟩ = Tr(ρ (A A†)^{-1}) with A = R.
        let a = similarity_factor(&es, 1e-9).unwrap();
        let metric_inv = (&a * &a.adjoint()).inverse().unwrap();
        let expect = (&rho * &metric_inv).trace();
        prop_assert!((biortho_trace(&rho, &es).unwrap() - expect).norm() < 1e-9 * expect.norm().max(1.0));
    }

    #[test]
    fn kron_mixed_product(a in matrix(2), b in matrix(3), x in matrix(2), y in matrix(3)) {
        let lhs = &kron(&a, &b) * &kron(&x, &y);
        let rhs = kron(&(&a * &x), &(&b * &y));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn composite_sum_reproduces_liouvillian(m in model(2)) {
        let es = eig_biortho(&m.effective_nh_hamiltonian(), EIG_TOL).unwrap();
        let comp = build_composite(&m, &es).unwrap();
        let sum = &comp.free() + &comp.coupling();
        let expect = build_full(&m).composite_matrix();
        prop_assert!(sum.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn tls_engine_matches_closed_form(
        omega in 0.5f64..2.0,
        gamma_p in 0.05f64..0.5,
        gamma_x in 0.001f64..0.05,
        gamma_z in 0.01f64..0.5,
    ) {
        let p = TlsParams { omega, gamma_p, gamma_x, gamma_z };
        let comp = nhjump_core::liouvillian::composite_hamiltonian(&tls_model(&p).unwrap()).unwrap();
        let basis = PerturbationBasis::new(&comp).unwrap();
        let first = correct_first_order(&basis);
        let second = correct_second_order(&basis, &first);
        let reference = tls_reference(&p);
        let label: Vec<usize> = (0..4)
            .map(|n| {
                let col = basis.right().column(n);
                (0..4).max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm())).unwrap()
            })
            .collect();
        for n in 0..4 {
            let pn = label[n];
            prop_assert!((basis.e0()[n] - reference.e0[pn]).norm() < 1e-12);
            prop_assert!((first.e1[n] - reference.e1[pn]).norm() < 1e-12);
            prop_assert!((second.e2[n] - reference.e2[pn]).norm() < 1e-12);
            for k in 0..4 {
                prop_assert!((first.right[(k, n)] - reference.psi1[pn][label[k]]).norm() < 1e-12);
                prop_assert!(second.right[(k, n)].norm() < 1e-12);
            }
        }
    }
}

fn min_gap(h: &ComplexMatrix) -> f64 {
    let ev = h.eigenvalues().unwrap();
    let mut gap = f64::INFINITY;
    for a in 0..ev.len() {
        for b in a + 1..ev.len() {
            gap = gap.min((ev[a] - ev[b]).norm());
        }
    }
    gap
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Second-order energies of `H0 + λV` carry an `O(λ³)` error.
    #[test]
    fn richardson_ratio(h0 in matrix(5), v in matrix(5)) {
        prop_assume!(min_gap(&h0) > 0.3);
        let basis = PerturbationBasis::from_matrices(&h0, &v).unwrap();
        let first = correct_first_order(&basis);
        let second = correct_second_order(&basis, &first);
        let err = |lambda: f64| {
            let exact = (&h0 + &v.scale(c(lambda, 0.0))).eigenvalues().unwrap();
            (0..5)
                .map(|n| {
                    let e = basis.e0()[n] + first.e1[n] * lambda + second.e2[n] * lambda * lambda;
                    exact.iter().map(|z| (z - e).norm()).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(0.01) / err(0.005);
        prop_assert!((6.0..10.0).contains(&ratio), "ratio {ratio}");
    }
}

/// Density-matrix error shrinks by `2^(order+1)` when the jump term halves.
#[test]
fn tls_state_error_order() {
    let model = tls_model(&TlsParams { omega: 1.0, gamma_p: 0.1, gamma_x: 0.01, gamma_z: 0.5 }).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rho0 = nhjump_core::models::pure_state(&[c(s, 0.0), c(s, 0.0)]).unwrap();
    let err = |lambda: f64, order: usize| {
        let m = model.with_jump_scale(lambda).unwrap();
        let exact = nhjump_core::dynamics::evolve_superoperator(&build_full(&m), &rho0, &[3.0]).unwrap();
        let pert = perturbed_eigensystem(&m, order).unwrap().evolve(&rho0, &[3.0]).unwrap();
        exact.values[0].max_abs_diff(&pert.values[0])
    };
    for order in [1, 2] {
        let ratio = err(0.1, order) / err(0.05, order);
        assert!(ratio >= 0.7 * 2f64.powi(order as i32 + 1), "order {order}: {ratio}");
    }
}

#[test]
fn fermion_anticommutation() {
    let f = fock_space(3, 3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let ci = f.annihilator(i).unwrap();
            let cj = f.annihilator(j).unwrap();
            let anti = &(&ci * &cj) + &(&cj * &ci);
            assert!(anti.norm_max() < 1e-15);
        }
    }
}
