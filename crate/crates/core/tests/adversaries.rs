use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use ebicert::adversary::{
    builtin_sweep, classical_guess_prob, guess_prob, optimal_eve_measurement, partial_correlation_model,
    single_branch_attack, werner_model, TripartiteModel,
};
use ebicert::certifier::{certify, CertTolerances};
use ebicert::ebi::{ebi_value, reference_strategy, DeterministicAssignment, QUANTUM_MAX};
use ebicert::qlin::{Ket, Operator};
use ebicert::random::{random_povm, random_state};
use ebicert::scenario::behavior_of;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// A random ensemble `σ_a = p_a ρ_a` on a `dim`-level space.
fn random_ensemble(r: &mut ChaCha20Rng, dim: usize) -> Vec<Operator> {
    let weights = random_povm(r, 1, 4);
    (0..4)
        .map(|a| {
            let p = weights[a].get(0, 0).re;
            let mixed = random_povm(r, dim, 1)[0].clone();
            let pure = Operator::projector(&random_state(r, dim));
            (&(&pure * 0.5) + &(&mixed * (0.5 / dim as f64))) * p
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn guessing_value_is_bracketed(seed: u64, dim in 1usize..=5) {
        let sigmas = random_ensemble(&mut rng(seed), dim);
        let opt = optimal_eve_measurement(&sigmas).unwrap();
        let best_blind = sigmas.iter().map(|s| s.trace().re).fold(0.0, f64::max);
        prop_assert!(opt.value <= opt.upper_bound + 1e-12);
        prop_assert!(opt.value >= best_blind - 1e-12);
        prop_assert!(opt.upper_bound <= 1.0 + 1e-9);
        let total = opt.povm.iter().fold(Operator::zeros(dim), |acc, f| acc + f.clone());
        prop_assert!(total.max_abs_diff(&Operator::identity(dim)) < 1e-9);
        for f in &opt.povm {
            prop_assert!(f.min_eigenvalue().unwrap() > -1e-9);
        }
    }

    #[test]
    fn product_eavesdropper_learns_nothing(seed: u64) {
        let mut r = rng(seed);
        let eve_povm: [Operator; 4] = random_povm(&mut r, 3, 4).try_into().unwrap();
        let model = TripartiteModel::product_with(&reference_strategy(), &random_state(&mut r, 3), eve_povm).unwrap();
        prop_assert!((guess_prob(&model) - 0.25).abs() < 1e-12);
        let opt = model.optimal_guess().unwrap();
        prop_assert!((opt.value - 0.25).abs() < 1e-9 && (opt.upper_bound - 0.25).abs() < 1e-9);
    }

    #[test]
    fn werner_correlators_scale_linearly(v in 0.0f64..=1.0) {
        let s = ebi_value(&werner_model(v).unwrap().behavior().unwrap()).unwrap();
        prop_assert!((s - QUANTUM_MAX * v).abs() < 1e-9);
    }

    #[test]
    fn single_branch_attacks_are_caught(idx in 0u8..128, outcome in 1usize..=4) {
        let attack = single_branch_attack(DeterministicAssignment::from_index(idx), outcome, outcome).unwrap();
        let (g, b) = classical_guess_prob(&attack).unwrap();
        prop_assert_eq!(g, 1.0);
        prop_assert!(!certify(&b, &CertTolerances::default()).unwrap().certified());
    }
}

#[test]
fn distinguishable_states_are_guessed_perfectly() {
    let sigmas: Vec<Operator> = (0..4).map(|a| Operator::projector(&Ket::basis(4, a)) * 0.25).collect();
    let opt = optimal_eve_measurement(&sigmas).unwrap();
    assert!((opt.value - 1.0).abs() < 1e-9);
    assert!(opt.is_exact());
}

#[test]
fn identical_states_are_guessed_blindly() {
    let rho = Operator::projector(&Ket::from_real(&[0.6, 0.8]));
    let sigmas: Vec<Operator> = [0.4, 0.3, 0.2, 0.1].iter().map(|&p| &rho * p).collect();
    let opt = optimal_eve_measurement(&sigmas).unwrap();
    assert!((opt.value - 0.4).abs() < 1e-9);
    assert!((opt.upper_bound - 0.4).abs() < 1e-9);
}

#[test]
fn werner_eve_matches_bipartite_view() {
    for v in [0.0, 0.3, 1.0] {
        let model = werner_model(v).unwrap();
        let direct = behavior_of(&model.bipartite_view().unwrap()).unwrap();
        assert!(direct.statistical_distance(&model.behavior().unwrap()) < 1e-15);
    }
    let pure = werner_model(1.0).unwrap().optimal_guess().unwrap();
    assert!((pure.value - 0.25).abs() < 1e-9 && pure.is_exact());
}

#[test]
fn partial_correlation_guess_grows_with_t() {
    let guesses: Vec<f64> = [0.0, 0.25, 0.5, 1.0]
        .iter()
        .map(|&t| partial_correlation_model(t).unwrap().optimal_guess().unwrap().value)
        .collect();
    assert!((guesses[0] - 0.25).abs() < 1e-9);
    assert!(guesses.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_is_sound_and_every_row_is_exact() {
    let rows = builtin_sweep(&CertTolerances::default());
    assert!(rows.len() >= 30);
    for row in rows {
        let m = row.result.expect("sweep row");
        assert!(m.g_lower <= m.g_upper + 1e-12);
        assert!(m.g_upper - m.g_lower <= 1e-6, "{} {}", row.family, row.parameter);
        if m.certified {
            assert!(m.g_upper <= 0.25 + 1e-9);
        }
        if m.g_lower > 0.25 + 1e-9 {
            assert!(!(m.test1 && m.test2));
        }
    }
}
