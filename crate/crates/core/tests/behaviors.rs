use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use ebicert::ebi::{
    classical_max_bruteforce, ebi_value, reference_strategy, DeterministicAssignment, CLASSICAL_BOUND, QUANTUM_MAX,
};
use ebicert::qlin::{tensor, Operator};
use ebicert::random::{random_state, random_strategy};
use ebicert::scenario::{behavior_of, estimate, sample, Behavior, CountRecord, Strategy};

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn dims_strategy() -> impl proptest::strategy::Strategy<Value = (usize, usize)> {
    prop_oneof![Just((2usize, 2usize)), Just((1, 2)), Just((2, 3)), Just((3, 2))]
}

proptest! {
    #[test]
    fn quantum_behaviors_are_no_signaling(seed: u64, dims in dims_strategy()) {
        let b = behavior_of(&random_strategy(&mut rng(seed), dims)).unwrap();
        prop_assert!(b.no_signaling_violation() < 1e-10);
        b.validate(1e-10).unwrap();
    }

    #[test]
    fn povm_conditionals_sum_to_bob_expectation(seed: u64) {
        let s: Strategy = random_strategy(&mut rng(seed), (2, 2));
        let b = behavior_of(&s).unwrap();
        for l in 1..=4 {
            let summed: f64 = (1..=4).map(|a| b.cond_expect(a, l).unwrap()).sum();
            let direct = tensor(&Operator::identity(2), &s.bob_obs()[l - 1]).expectation(s.state()).re;
            prop_assert!((summed - direct).abs() < 1e-10);
            prop_assert!((b.bob_mean(l).unwrap() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn quantum_values_respect_the_quantum_maximum(seed: u64, dims in dims_strategy()) {
        let s = ebi_value(&behavior_of(&random_strategy(&mut rng(seed), dims)).unwrap()).unwrap();
        prop_assert!(s <= QUANTUM_MAX + 1e-9);
    }

    #[test]
    fn ebi_value_is_affine_under_mixing(seed: u64, w in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let b1 = behavior_of(&random_strategy(&mut r, (2, 2))).unwrap();
        let b2 = behavior_of(&random_strategy(&mut r, (2, 2))).unwrap();
        let mixed = ebi_value(&Behavior::mixture(&[(w, &b1), (1.0 - w, &b2)])).unwrap();
        let expected = w * ebi_value(&b1).unwrap() + (1.0 - w) * ebi_value(&b2).unwrap();
        prop_assert!((mixed - expected).abs() < 1e-12);
    }

    #[test]
    fn local_behaviors_respect_the_classical_bound(
        weights in proptest::collection::vec(0.0f64..1.0, 1..8),
        picks in proptest::collection::vec((0u8..128, 1usize..=4), 8),
    ) {
        let total: f64 = weights.iter().sum::<f64>().max(1e-12);
        let behaviors: Vec<Behavior> = picks
            .iter()
            .take(weights.len())
            .map(|&(idx, out)| behavior_of(&DeterministicAssignment::from_index(idx).strategy(out)).unwrap())
            .collect();
        let parts: Vec<(f64, &Behavior)> = weights.iter().map(|w| w / total).zip(&behaviors).collect();
        let s = ebi_value(&Behavior::mixture(&parts)).unwrap();
        prop_assert!(s <= CLASSICAL_BOUND + 1e-12);
    }

    #[test]
    fn product_states_respect_the_classical_bound(seed: u64) {
        let mut r = rng(seed);
        let template = random_strategy(&mut r, (2, 2));
        let product = random_state(&mut r, 2).tensor(&random_state(&mut r, 2));
        let s = Strategy::new(
            product,
            (2, 2),
            template.alice_obs().clone(),
            template.alice_povm().clone(),
            template.bob_obs().clone(),
        )
        .unwrap();
        prop_assert!(ebi_value(&behavior_of(&s).unwrap()).unwrap() <= CLASSICAL_BOUND + 1e-9);
    }

    #[test]
    fn counts_round_trip_through_text(seed in 0u64..1000, shots in 1u64..500) {
        let record = sample(&reference_strategy(), shots, seed).unwrap();
        let parsed: CountRecord = record.to_string().parse().unwrap();
        prop_assert_eq!(parsed, record);
    }
}

#[test]
fn classical_maximum_is_six() {
    assert_eq!(classical_max_bruteforce().value, 6.0);
}

#[test]
fn estimates_converge_with_shots() {
    let s = reference_strategy();
    let exact = behavior_of(&s).unwrap();
    for seed in 0..5 {
        let coarse = estimate(&sample(&s, 1_000, seed).unwrap()).unwrap();
        let fine = estimate(&sample(&s, 1_000_000, seed).unwrap()).unwrap();
        let (dc, df) = (coarse.statistical_distance(&exact), fine.statistical_distance(&exact));
        assert!(df < dc, "seed {seed}: {df} !< {dc}");
        assert!(df < 5e-3, "seed {seed}: {df}");
        assert!(fine.is_estimated());
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let s = reference_strategy();
    assert_eq!(sample(&s, 10_000, 42).unwrap(), sample(&s, 10_000, 42).unwrap());
    assert_ne!(sample(&s, 10_000, 42).unwrap(), sample(&s, 10_000, 43).unwrap());
}
