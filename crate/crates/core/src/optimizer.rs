//! Seesaw maximization of the elegant Bell functional.
//!
//! Each round fixes the observables and takes the top eigenvector of the
//! Bell operator as the state, then fixes the state and Bob to round each of
//! Alice's observables to the spectral sign of its effective operator, then
//! does the same for Bob. No step can lower `S`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ebi::{tetrahedral_povm, EBI_SIGNS};
use crate::qlin::{eig_hermitian, partial_trace, tensor, Ket, LinalgError, Operator, Subsystem};
use crate::random::random_dichotomic;
use crate::scenario::{ScenarioError, Strategy, ALICE_DICHOTOMIC, BOB_SETTINGS, POVM_OUTCOMES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid seesaw configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeesawConfig {
    pub max_rounds: usize,
    pub convergence_eps: f64,
    pub seed: u64,
    pub local_dim: usize,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            max_rounds: 10_000,
            convergence_eps: 1e-12,
            seed: 0,
            local_dim: 2,
        }
    }
}

impl SeesawConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), OptimizerError> {
        if self.max_rounds < 1 {
            return Err(OptimizerError::InvalidConfig("max_rounds must be at least 1".into()));
        }
        if !(self.convergence_eps > 0.0 && self.convergence_eps.is_finite()) {
            return Err(OptimizerError::InvalidConfig(
                "convergence_eps must be positive and finite".into(),
            ));
        }
        if self.local_dim < 1 {
            return Err(OptimizerError::InvalidConfig("local_dim must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub s_value: f64,
    pub strategy: Strategy,
    /// `S` after every accepted round; nondecreasing.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Rounds in which the Bell operator's top eigenvalue was degenerate.
    pub degenerate_updates: usize,
}

/// `Σ_{k,l} sign(k,l) A_k ⊗ B_l`.
pub fn bell_operator(alice_obs: &[Operator; ALICE_DICHOTOMIC], bob_obs: &[Operator; BOB_SETTINGS]) -> Operator {
    let dim = alice_obs[0].dim() * bob_obs[0].dim();
    let mut h = Operator::zeros(dim);
    for (k, a) in alice_obs.iter().enumerate() {
        let c = combine(&EBI_SIGNS[k], bob_obs);
        h = h + tensor(a, &c);
    }
    h
}

fn combine(coeffs: &[f64], ops: &[Operator]) -> Operator {
    ops.iter()
        .zip(coeffs)
        .fold(Operator::zeros(ops[0].dim()), |acc, (o, &c)| acc + o * c)
}

/// `Σ sign(λ_i) |v_i⟩⟨v_i|` with `sign(0) = +1`.
fn spectral_sign(m: &Operator) -> Result<Operator, LinalgError> {
    m.map_spectrum(|l| if l >= 0.0 { 1.0 } else { -1.0 })
}

fn lexicographic_key(v: &Ket) -> Vec<(f64, f64)> {
    v.amplitudes().iter().map(|z| (z.re, z.im)).collect()
}

/// Top eigenvector; within a degenerate top eigenspace, the returned basis
/// vector (canonical phase) with the lexicographically largest amplitudes.
fn top_eigenvector(h: &Operator) -> Result<(f64, Ket, bool), LinalgError> {
    let eig = eig_hermitian(h)?;
    let top = eig.values[0];
    let tol = 1e-10 * top.abs().max(1.0);
    let candidates: Vec<&Ket> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .take_while(|(l, _)| top - **l <= tol)
        .map(|(_, v)| v)
        .collect();
    let degenerate = candidates.len() > 1;
    let best = candidates
        .into_iter()
        .max_by(|a, b| {
            lexicographic_key(a)
                .partial_cmp(&lexicographic_key(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty spectrum");
    Ok((top, best.clone(), degenerate))
}

fn random_start(cfg: &SeesawConfig) -> ([Operator; ALICE_DICHOTOMIC], [Operator; BOB_SETTINGS]) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alice = std::array::from_fn(|_| random_dichotomic(&mut rng, cfg.local_dim));
    let bob = std::array::from_fn(|_| random_dichotomic(&mut rng, cfg.local_dim));
    (alice, bob)
}

/// Seesaw from random observables drawn from `cfg.seed`.
pub fn seesaw_maximize(cfg: &SeesawConfig) -> Result<SeesawResult, OptimizerError> {
    cfg.validate()?;
    let (alice, bob) = random_start(cfg);
    seesaw_from(alice, bob, cfg)
}

/// Seesaw from the given starting observables (the state is chosen in the
/// first half-step, so no starting state is needed).
pub fn seesaw_from(
    mut alice: [Operator; ALICE_DICHOTOMIC],
    mut bob: [Operator; BOB_SETTINGS],
    cfg: &SeesawConfig,
) -> Result<SeesawResult, OptimizerError> {
    cfg.validate()?;
    let (da, db) = (alice[0].dim(), bob[0].dim());
    let id_a = Operator::identity(da);
    let id_b = Operator::identity(db);

    let mut trace: Vec<f64> = Vec::new();
    let mut state: Option<Ket> = None;
    let mut converged = false;
    let mut degenerate_updates = 0;

    for _ in 0..cfg.max_rounds {
        let (_, psi, degenerate) = top_eigenvector(&bell_operator(&alice, &bob))?;
        if degenerate {
            degenerate_updates += 1;
        }
        let rho = Operator::projector(&psi);

        let new_alice: [Operator; ALICE_DICHOTOMIC] = {
            let mut out: [Operator; ALICE_DICHOTOMIC] = std::array::from_fn(|_| Operator::zeros(da));
            for (k, slot) in out.iter_mut().enumerate() {
                let c = combine(&EBI_SIGNS[k], &bob);
                let effective = partial_trace(&tensor(&id_a, &c).matmul(&rho), Subsystem::A, (da, db))?;
                *slot = spectral_sign(&effective.hermitian_part())?;
            }
            out
        };
        let new_bob: [Operator; BOB_SETTINGS] = {
            let mut out: [Operator; BOB_SETTINGS] = std::array::from_fn(|_| Operator::zeros(db));
            for (l, slot) in out.iter_mut().enumerate() {
                let coeffs: Vec<f64> = EBI_SIGNS.iter().map(|row| row[l]).collect();
                let d = combine(&coeffs, &new_alice);
                let effective = partial_trace(&tensor(&d, &id_b).matmul(&rho), Subsystem::B, (da, db))?;
                *slot = spectral_sign(&effective.hermitian_part())?;
            }
            out
        };
        let s = bell_operator(&new_alice, &new_bob).expectation(&psi).re;

        if let Some(&prev) = trace.last() {
            if s < prev {
                // Rounding noise at a fixed point; keep the previous round.
                converged = true;
                break;
            }
        }
        let improvement = trace.last().map(|&prev| s - prev);
        trace.push(s);
        alice = new_alice;
        bob = new_bob;
        state = Some(psi);
        if improvement.is_some_and(|d| d < cfg.convergence_eps) {
            converged = true;
            break;
        }
    }

    let state = state.expect("at least one round");
    let povm = (da == 2)
        .then(|| tetrahedral_povm(&alice))
        .flatten()
        .unwrap_or_else(|| trivial_povm(da));
    let strategy = Strategy::new(state, (da, db), alice, povm, bob)?;
    Ok(SeesawResult {
        s_value: *trace.last().expect("at least one round"),
        strategy,
        trace,
        converged,
        degenerate_updates,
    })
}

/// `{𝟙, 0, 0, 0}`.
fn trivial_povm(dim: usize) -> [Operator; POVM_OUTCOMES] {
    std::array::from_fn(|a| {
        if a == 0 {
            Operator::identity(dim)
        } else {
            Operator::zeros(dim)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ebi::{
        classical_max_bruteforce, ebi_value, reference_alice_observables, reference_bob_observables, QUANTUM_MAX,
    };
    use crate::scenario::behavior_of;

    #[test]
    fn reference_bell_operator_top_eigenvalue() {
        let h = bell_operator(&reference_alice_observables(), &reference_bob_observables());
        assert!(h.is_hermitian(1e-14));
        let top = h.max_eigenvalue().unwrap();
        assert!((top - QUANTUM_MAX).abs() < 1e-10);
    }

    #[test]
    fn trivial_bob_observables() {
        let id = Operator::identity(2);
        let bob = [id.clone(), id.clone(), id.clone(), id.clone()];
        let alice = reference_alice_observables();
        let h = bell_operator(&alice, &bob);
        // Every row of the sign matrix sums to zero.
        assert!(h.approx_eq(&Operator::zeros(4), 1e-15));
        assert!(h.max_eigenvalue().unwrap() <= 6.0);
    }

    #[test]
    fn reference_is_a_fixed_point() {
        let r = seesaw_from(
            reference_alice_observables(),
            reference_bob_observables(),
            &SeesawConfig::default(),
        )
        .unwrap();
        assert!((r.trace[0] - QUANTUM_MAX).abs() < 1e-10);
        assert!(r.converged);
        assert!(r.trace.len() <= 2);
    }

    #[test]
    fn deterministic_start_stays_classical() {
        let best = classical_max_bruteforce().argmax;
        let scalar = |x: i8| Operator::identity(2) * x as f64;
        let r = seesaw_from(best.alice.map(scalar), best.bob.map(scalar), &SeesawConfig::default()).unwrap();
        assert!((r.s_value - 6.0).abs() < 1e-12, "S = {}", r.s_value);
        assert!(r.converged);
        assert!(r.degenerate_updates >= 1);
    }

    #[test]
    fn random_start_reaches_quantum_maximum_and_reports_consistently() {
        let r = seesaw_maximize(&SeesawConfig::with_seed(1)).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.s_value <= QUANTUM_MAX + 1e-8);
        let via_behavior = ebi_value(&behavior_of(&r.strategy).unwrap()).unwrap();
        assert!((via_behavior - r.s_value).abs() < 1e-10);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = seesaw_maximize(&SeesawConfig::with_seed(9)).unwrap();
        let b = seesaw_maximize(&SeesawConfig::with_seed(9)).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn config_validation() {
        let bad = SeesawConfig {
            max_rounds: 0,
            ..SeesawConfig::default()
        };
        assert!(matches!(seesaw_maximize(&bad), Err(OptimizerError::InvalidConfig(_))));
        let bad = SeesawConfig {
            convergence_eps: 0.0,
            ..SeesawConfig::default()
        };
        assert!(matches!(seesaw_maximize(&bad), Err(OptimizerError::InvalidConfig(_))));
    }
}
