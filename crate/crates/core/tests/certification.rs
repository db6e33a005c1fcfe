use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use ebicert::certifier::{certify, check_extremality, reconstruct_q, CertTolerances, ExtremalityTolerances};
use ebicert::ebi::{
    phi_plus, reference_alice_observables, reference_bob_observables, reference_strategy, tetrahedral_povm, SQRT3,
    TETRAHEDRON,
};
use ebicert::qlin::{from_bloch, BlochCoeffs, Ket, Operator};
use ebicert::random::{random_povm, random_strategy, random_unit_vector};
use ebicert::scenario::{behavior_of, Behavior, Strategy};

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn reference_with_povm(povm: Vec<Operator>) -> Strategy {
    Strategy::new(
        phi_plus(),
        (2, 2),
        reference_alice_observables(),
        povm.try_into().unwrap(),
        reference_bob_observables(),
    )
    .unwrap()
}

/// Four random rank-one elements `|v_a⟩⟨v_a|` normalized to sum to `𝟙`.
fn rank_one_povm(r: &mut ChaCha20Rng) -> Vec<Operator> {
    let raw: Vec<Operator> = (0..4)
        .map(|_| {
            let [z, x, y] = random_unit_vector(r);
            from_bloch(&BlochCoeffs::new(1.0, z, x, y))
        })
        .collect();
    let total = raw.iter().fold(Operator::zeros(2), |acc, e| acc + e.clone());
    let inv_sqrt = total.map_spectrum(|l| 1.0 / l.sqrt()).unwrap();
    raw.iter()
        .map(|e| inv_sqrt.matmul(e).matmul(&inv_sqrt).hermitian_part())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    /// `|residual| = (4/3)|det|`, so the identity test at `tol` and the direct
    /// test at `0.75·tol` agree away from the boundary.
    fn determinant_identity_matches_direct_determinant(seed: u64, tol_exp in -9i32..-1) {
        let b = behavior_of(&random_strategy(&mut rng(seed), (2, 2))).unwrap();
        let q = reconstruct_q(&b).unwrap();
        let tol = ExtremalityTolerances { det_zero: 10f64.powi(tol_exp), ..ExtremalityTolerances::default() };
        let report = check_extremality(&q, &b, &tol).unwrap();
        for o in &report.outcomes {
            prop_assert!((o.det_identity_residual + 4.0 / 3.0 * o.det_value).abs() < 1e-12);
            let direct_zero = o.det_value.abs() < 0.75 * tol.det_zero;
            let on_boundary = (o.det_value.abs() - 0.75 * tol.det_zero).abs() < 1e-12;
            prop_assert!(on_boundary || direct_zero == o.det_ok);
        }
    }
}

proptest! {
    #[test]
    fn reference_settings_recover_any_alice_povm(seed: u64) {
        let povm = random_povm(&mut rng(seed), 2, 4);
        let q = reconstruct_q(&behavior_of(&reference_with_povm(povm.clone())).unwrap()).unwrap();
        for (qa, pa) in q.operators.iter().zip(&povm) {
            prop_assert!(qa.max_abs_diff(pa) < 1e-12);
        }
    }

    #[test]
    fn rank_one_povms_pass_the_determinant_identity(seed: u64) {
        let povm = rank_one_povm(&mut rng(seed));
        let b = behavior_of(&reference_with_povm(povm)).unwrap();
        let q = reconstruct_q(&b).unwrap();
        let report = check_extremality(&q, &b, &ExtremalityTolerances::default()).unwrap();
        for o in &report.outcomes {
            prop_assert!(o.det_identity_residual.abs() < 1e-12);
            prop_assert!(o.det_ok && o.positive_ok);
        }
        prop_assert!(report.complete);
    }

    #[test]
    fn reconstruction_is_linear(seed: u64, w in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let b1 = behavior_of(&random_strategy(&mut r, (2, 2))).unwrap();
        let b2 = behavior_of(&random_strategy(&mut r, (2, 2))).unwrap();
        let mixed = reconstruct_q(&Behavior::mixture(&[(w, &b1), (1.0 - w, &b2)])).unwrap();
        let (q1, q2) = (reconstruct_q(&b1).unwrap(), reconstruct_q(&b2).unwrap());
        for a in 0..4 {
            let expected = &(&q1.operators[a] * w) + &(&q2.operators[a] * (1.0 - w));
            prop_assert!(mixed.operators[a].max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn loosening_tolerances_never_revokes_a_pass(seed: u64, eps_exp in -14i32..-1, factor in 1.0f64..1e6) {
        let noise = behavior_of(&random_strategy(&mut rng(seed), (2, 2))).unwrap();
        let reference = behavior_of(&reference_strategy()).unwrap();
        let eps = 10f64.powi(eps_exp);
        let b = Behavior::mixture(&[(1.0 - eps, &reference), (eps, &noise)]);
        let tight = certify(&b, &CertTolerances::default()).unwrap();
        let loose = certify(&b, &CertTolerances::default().loosened(factor)).unwrap();
        prop_assert!(!tight.test1.passed || loose.test1.passed);
        prop_assert!(!tight.test2.passed || loose.test2.passed);
        prop_assert!(!tight.certified() || loose.certified());
    }

    #[test]
    fn sic_directions_for_any_frame(seed: u64) {
        let mut r = rng(seed);
        // Rotate the reference frame by a random unitary to get another
        // orthonormal triple of qubit observables.
        let u = ebicert::random::random_state(&mut r, 2);
        let v = Ket::new(vec![-u.amplitudes()[1].conj(), u.amplitudes()[0].conj()]);
        let unitary = Operator::from_fn(2, |i, j| if j == 0 { u.amplitudes()[i] } else { v.amplitudes()[i] });
        let alice = reference_alice_observables().map(|o| unitary.matmul(&o).matmul(&unitary.adjoint()));
        let povm = tetrahedral_povm(&alice).unwrap();
        let total = povm.iter().fold(Operator::zeros(2), |acc, e| acc + e.clone());
        prop_assert!(total.max_abs_diff(&Operator::identity(2)) < 1e-12);
        let dirs: Vec<[f64; 3]> = povm
            .iter()
            .map(|e| ebicert::qlin::to_bloch(e).unwrap().vector().map(|c| 4.0 * c))
            .collect();
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..3).map(|c| dirs[i][c] * dirs[j][c]).sum();
                let expected = if i == j { 1.0 } else { -1.0 / 3.0 };
                prop_assert!((dot - expected).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn alice_bases_are_mutually_unbiased() {
    let bases: Vec<Vec<Ket>> = reference_alice_observables()
        .iter()
        .map(|o| ebicert::qlin::eig_hermitian(o).unwrap().vectors)
        .collect();
    for (i, bi) in bases.iter().enumerate() {
        for bj in bases.iter().skip(i + 1) {
            for u in bi {
                for v in bj {
                    assert!((u.inner(v).norm_sqr() - 0.5).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn reference_bob_directions_form_a_tetrahedron() {
    let dirs: Vec<[f64; 3]> = reference_bob_observables()
        .iter()
        .map(|b| ebicert::qlin::to_bloch(b).unwrap().vector())
        .collect();
    for i in 0..4 {
        for j in 0..4 {
            let dot: f64 = (0..3).map(|c| dirs[i][c] * dirs[j][c]).sum();
            assert!((dot - if i == j { 1.0 } else { -1.0 / 3.0 }).abs() < 1e-12);
        }
    }
    for row in TETRAHEDRON {
        let n: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - SQRT3).abs() < 1e-15);
    }
}

#[test]
fn non_povm_family_fails_completeness() {
    // Scaling every outcome of the reference behavior makes Q sum to 0.9·𝟙.
    let reference = behavior_of(&reference_strategy()).unwrap();
    let scaled = Behavior::mixture(&[(0.9, &reference)]);
    let q = reconstruct_q(&scaled).unwrap();
    let report = check_extremality(&q, &scaled, &ExtremalityTolerances::default()).unwrap();
    assert!(!report.complete);
    assert!((report.completeness_residual - 0.1).abs() < 1e-12);
    assert!(!report.extremal);
}
