//! The elegant Bell inequality: its functional, its local bound, and the
//! qubit strategy that attains the quantum maximum `4√3`.

use crate::qlin::{from_bloch, to_bloch, BlochCoeffs, Ket, Operator};
use crate::scenario::{behavior_of, Behavior, ScenarioError, Strategy, ALICE_DICHOTOMIC, BOB_SETTINGS, POVM_OUTCOMES};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// `4√3`, the largest value reachable with quantum strategies.
pub const QUANTUM_MAX: f64 = 4.0 * SQRT3;

/// Largest value reachable with local deterministic strategies.
pub const CLASSICAL_BOUND: f64 = 6.0;

/// Coefficient of `E_{k,l}` in the functional, row `k`, column `l`.
pub const EBI_SIGNS: [[f64; BOB_SETTINGS]; ALICE_DICHOTOMIC] =
    [[1.0, 1.0, -1.0, -1.0], [1.0, -1.0, 1.0, -1.0], [1.0, -1.0, -1.0, 1.0]];

/// `S = Σ_{k,l} sign(k,l) E_{k,l}`.
pub fn ebi_value(b: &Behavior) -> Result<f64, ScenarioError> {
    let mut s = 0.0;
    for (k0, row) in EBI_SIGNS.iter().enumerate() {
        for (l0, sign) in row.iter().enumerate() {
            s += sign * b.correlator0(k0, l0)?;
        }
    }
    Ok(s)
}

/// Local ±1 outputs for every dichotomic setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeterministicAssignment {
    pub alice: [i8; ALICE_DICHOTOMIC],
    pub bob: [i8; BOB_SETTINGS],
}

impl DeterministicAssignment {
    /// The `index`-th of the 128 assignments. Bit `k` (Alice) and bit
    /// `3 + l` (Bob) set means output `-1`.
    pub fn from_index(index: u8) -> Self {
        let bit = |i: u32| if index >> i & 1 == 1 { -1 } else { 1 };
        Self {
            alice: [bit(0), bit(1), bit(2)],
            bob: [bit(3), bit(4), bit(5), bit(6)],
        }
    }

    /// A one-dimensional strategy reproducing these outputs, with `A_4`
    /// always returning `povm_outcome` (1-based).
    pub fn strategy(&self, povm_outcome: usize) -> Strategy {
        deterministic_strategy(self, povm_outcome)
    }
}

/// Builds the degenerate-observable strategy (`±𝟙` on one-dimensional
/// spaces) realizing a deterministic assignment.
pub fn deterministic_strategy(assignment: &DeterministicAssignment, povm_outcome: usize) -> Strategy {
    assert!(
        (1..=POVM_OUTCOMES).contains(&povm_outcome),
        "POVM outcome must be 1..=4"
    );
    let scalar = |v: f64| Operator::diag(&[v]);
    let alice_obs = assignment.alice.map(|x| scalar(x as f64));
    let bob_obs = assignment.bob.map(|x| scalar(x as f64));
    let povm = std::array::from_fn(|a| scalar(if a + 1 == povm_outcome { 1.0 } else { 0.0 }));
    Strategy::new(Ket::basis(1, 0), (1, 1), alice_obs, povm, bob_obs).expect("deterministic strategies are valid")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalMaximum {
    pub value: f64,
    pub argmax: DeterministicAssignment,
}

/// Exhaustive search over all 2³·2⁴ deterministic assignments, each
/// evaluated through the ordinary strategy → behavior → functional path.
pub fn classical_max_bruteforce() -> ClassicalMaximum {
    let mut best: Option<ClassicalMaximum> = None;
    for index in 0..128u8 {
        let argmax = DeterministicAssignment::from_index(index);
        let b = behavior_of(&argmax.strategy(1)).expect("deterministic behavior");
        let value = ebi_value(&b).expect("complete behavior");
        if best.is_none_or(|m| value > m.value) {
            best = Some(ClassicalMaximum { value, argmax });
        }
    }
    best.expect("non-empty enumeration")
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn phi_plus() -> Ket {
    Ket::from_real(&[1.0, 0.0, 0.0, 1.0]).normalized()
}

/// The Bob observables `(±Z ± X ± Y)/√3` of the optimal strategy.
pub fn reference_bob_observables() -> [Operator; BOB_SETTINGS] {
    let combos = [[1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]];
    combos.map(|[z, x, y]| from_bloch(&BlochCoeffs::new(0.0, z / SQRT3, x / SQRT3, y / SQRT3)))
}

/// `A_1 = Z, A_2 = X, A_3 = Y`.
pub fn reference_alice_observables() -> [Operator; ALICE_DICHOTOMIC] {
    [Operator::pauli_z(), Operator::pauli_x(), Operator::pauli_y()]
}

/// Outcome `a`'s Bloch direction is `Σ_k TETRAHEDRON[a][k] r_k / √3`, where
/// `r_k` is the Bloch vector of Alice's `k`-th observable.
pub const TETRAHEDRON: [[f64; ALICE_DICHOTOMIC]; POVM_OUTCOMES] =
    [[-1.0, -1.0, -1.0], [-1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]];

/// The four rank-one elements `(𝟙 + n_a·σ)/4` of the optimal `A_4`.
pub fn reference_alice_povm() -> [Operator; POVM_OUTCOMES] {
    tetrahedral_povm(&reference_alice_observables()).expect("orthonormal frame")
}

/// Alice's four-outcome POVM built from the frame of her three qubit
/// observables, following the same pattern as the optimal strategy.
///
/// The Bloch vectors are orthonormalized first (Gram–Schmidt on the first
/// two, the third replaced by the cross product with its original
/// orientation). Returns `None` for non-qubit or degenerate frames.
pub fn tetrahedral_povm(alice_obs: &[Operator; ALICE_DICHOTOMIC]) -> Option<[Operator; POVM_OUTCOMES]> {
    let mut r = [[0.0; 3]; 3];
    for (k, obs) in alice_obs.iter().enumerate() {
        if obs.dim() != 2 {
            return None;
        }
        r[k] = to_bloch(obs).ok()?.vector();
    }
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let unit = |a: [f64; 3]| {
        let n = dot(a, a).sqrt();
        (n > 1e-6).then(|| a.map(|x| x / n))
    };
    let e1 = unit(r[0])?;
    let p = dot(r[1], e1);
    let e2 = unit([r[1][0] - p * e1[0], r[1][1] - p * e1[1], r[1][2] - p * e1[2]])?;
    let cross = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ];
    let orientation = dot(cross, r[2]);
    if orientation.abs() < 1e-6 {
        return None;
    }
    let e3 = cross.map(|x| x * orientation.signum());
    let frame = [e1, e2, e3];
    Some(TETRAHEDRON.map(|coeffs| {
        let mut n = [0.0; 3];
        for (c, e) in coeffs.iter().zip(&frame) {
            for i in 0..3 {
                n[i] += c * e[i] / SQRT3;
            }
        }
        from_bloch(&BlochCoeffs::new(0.25, n[0] / 4.0, n[1] / 4.0, n[2] / 4.0))
    }))
}

/// `|φ₊⟩` with `A_1..A_3 = Z, X, Y`, the tetrahedral `A_4`, and Bob's
/// `(±Z ± X ± Y)/√3`.
///
/// `|φ₊⟩ = (|00⟩+|11⟩)/√2` is used as written, although this state is often
/// not what "singlet" refers to.
pub fn reference_strategy() -> Strategy {
    Strategy::new(
        phi_plus(),
        (2, 2),
        reference_alice_observables(),
        reference_alice_povm(),
        reference_bob_observables(),
    )
    .expect("reference strategy is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_attains_quantum_maximum() {
        let s = ebi_value(&behavior_of(&reference_strategy()).unwrap()).unwrap();
        assert!((s - QUANTUM_MAX).abs() < 1e-12, "S = {s}");
        assert!((QUANTUM_MAX - 6.928203).abs() < 1e-6);
    }

    #[test]
    fn uniform_behavior_scores_zero() {
        assert_eq!(ebi_value(&Behavior::uniform()).unwrap(), 0.0);
    }

    /// Oracle: direct sum over the sign matrix with products of ±1 outputs,
    /// no strategy or behavior involved.
    fn direct_score(a: &DeterministicAssignment) -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            for l in 0..4 {
                s += EBI_SIGNS[k][l] * (a.alice[k] * a.bob[l]) as f64;
            }
        }
        s
    }

    #[test]
    fn classical_bound_is_six() {
        let m = classical_max_bruteforce();
        assert_eq!(m.value, CLASSICAL_BOUND);
        assert_eq!(direct_score(&m.argmax), 6.0);
        let oracle_max = (0..128u8)
            .map(|i| direct_score(&DeterministicAssignment::from_index(i)))
            .fold(f64::MIN, f64::max);
        assert_eq!(oracle_max, 6.0);
    }

    #[test]
    fn pipeline_matches_direct_score_for_every_assignment() {
        for i in 0..128u8 {
            let a = DeterministicAssignment::from_index(i);
            let via_pipeline = ebi_value(&behavior_of(&a.strategy(2)).unwrap()).unwrap();
            assert_eq!(via_pipeline, direct_score(&a), "assignment {a:?}");
        }
    }

    #[test]
    fn all_plus_assignment_cancels() {
        let a = DeterministicAssignment::from_index(0);
        assert_eq!(a.alice, [1, 1, 1]);
        assert_eq!(ebi_value(&behavior_of(&a.strategy(1)).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn mixed_sign_assignment() {
        // a = (+,+,+), b = (+,+,-,-): rows give 4, 0, 0.
        let a = DeterministicAssignment {
            alice: [1, 1, 1],
            bob: [1, 1, -1, -1],
        };
        assert_eq!(direct_score(&a), 4.0);
        assert_eq!(ebi_value(&behavior_of(&a.strategy(1)).unwrap()).unwrap(), 4.0);
    }

    #[test]
    fn reference_povm_elements() {
        let povm = reference_alice_povm();
        let c = -1.0 / (4.0 * SQRT3);
        let g1 = to_bloch(&povm[0]).unwrap();
        assert!(g1.max_abs_diff(&BlochCoeffs::new(0.25, c, c, c)) < 1e-15);
        let total = povm.iter().fold(Operator::zeros(2), |acc, e| acc + e.clone());
        assert!(total.approx_eq(&Operator::identity(2), 1e-15));
        for e in &povm {
            assert!((e.trace().re - 0.5).abs() < 1e-15);
            // rank one: (2 A)² = 2·(2 A)... i.e. 4A² = 2A
            assert!(e.matmul(e).scale_real(2.0).approx_eq(e, 1e-15));
        }
    }

    #[test]
    fn reference_povm_matches_written_projectors() {
        let id = Operator::identity(2);
        let [z, x, y] = reference_alice_observables();
        let written = [
            &id - &((&(&z + &x) + &y) * (1.0 / SQRT3)),
            &id - &((&(&z - &x) - &y) * (1.0 / SQRT3)),
            &id + &((&(&z - &x) + &y) * (1.0 / SQRT3)),
            &id + &((&(&z + &x) - &y) * (1.0 / SQRT3)),
        ]
        .map(|m| m * 0.25);
        for (a, b) in reference_alice_povm().iter().zip(&written) {
            assert!(a.approx_eq(b, 1e-15));
        }
    }

    #[test]
    fn tetrahedral_povm_rejects_degenerate_frames() {
        let z = Operator::pauli_z();
        assert!(tetrahedral_povm(&[z.clone(), z.clone(), Operator::pauli_x()]).is_none());
        let one = Operator::diag(&[1.0]);
        assert!(tetrahedral_povm(&[one.clone(), one.clone(), one]).is_none());
    }
}
