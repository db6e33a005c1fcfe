//! Random states, observables and POVMs for seesaw restarts and property
//! tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::qlin::{from_bloch, BlochCoeffs, Ket, Operator, C64};
use crate::scenario::{Strategy, ALICE_DICHOTOMIC, BOB_SETTINGS, POVM_OUTCOMES};

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Ket {
    Ket::new((0..dim).map(|_| gaussian_complex(rng)).collect()).normalized()
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    Operator::from_fn(dim, |_, _| gaussian_complex(rng)).hermitian_part()
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-9 {
            return v.map(|x| x / n);
        }
    }
}

/// `n·σ` for a uniformly random unit Bloch vector `n`.
pub fn random_qubit_observable<R: Rng + ?Sized>(rng: &mut R) -> Operator {
    let [z, x, y] = random_unit_vector(rng);
    from_bloch(&BlochCoeffs::new(0.0, z, x, y))
}

/// A ±1-valued observable; traceless Bloch form for qubits, the spectral
/// sign of a random Hermitian matrix otherwise.
pub fn random_dichotomic<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    match dim {
        1 => Operator::diag(&[if rng.random::<bool>() { 1.0 } else { -1.0 }]),
        2 => random_qubit_observable(rng),
        _ => random_hermitian(rng, dim)
            .map_spectrum(|l| if l >= 0.0 { 1.0 } else { -1.0 })
            .expect("Hermitian by construction"),
    }
}

/// A random `n`-outcome POVM: Wishart elements normalized by `S^{-1/2}`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize) -> Vec<Operator> {
    let raw: Vec<Operator> = (0..n)
        .map(|_| {
            let g = Operator::from_fn(dim, |_, _| gaussian_complex(rng));
            g.matmul(&g.adjoint()).hermitian_part()
        })
        .collect();
    let total = raw.iter().fold(Operator::zeros(dim), |acc, r| acc + r.clone());
    let inv_sqrt = total
        .map_spectrum(|l| 1.0 / l.sqrt())
        .expect("Hermitian by construction");
    raw.iter()
        .map(|r| inv_sqrt.matmul(r).matmul(&inv_sqrt).hermitian_part())
        .collect()
}

pub fn random_strategy<R: Rng + ?Sized>(rng: &mut R, dims: (usize, usize)) -> Strategy {
    let (da, db) = dims;
    let alice_obs: [Operator; ALICE_DICHOTOMIC] = std::array::from_fn(|_| random_dichotomic(rng, da));
    let bob_obs: [Operator; BOB_SETTINGS] = std::array::from_fn(|_| random_dichotomic(rng, db));
    let povm: [Operator; POVM_OUTCOMES] = random_povm(rng, da, POVM_OUTCOMES).try_into().expect("four elements");
    Strategy::new(random_state(rng, da * db), dims, alice_obs, povm, bob_obs).expect("random strategies are valid")
}
