//! Bell strategies, their exact behaviors, and finite-shot estimates.
//!
//! Alice has three dichotomic settings `A_1..A_3` and one four-outcome POVM
//! `A_4`; Bob has four dichotomic settings `B_1..B_4`. Settings and POVM
//! outcomes are labelled from 1 in the public API, dichotomic outcomes are
//! `+1` / `-1`.
//!
//! Internally a dichotomic outcome index `0` means `+1` and `1` means `-1`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::qlin::{tensor, Ket, LinalgError, Operator};

pub const ALICE_DICHOTOMIC: usize = 3;
pub const BOB_SETTINGS: usize = 4;
pub const POVM_OUTCOMES: usize = 4;

/// Validation tolerance for strategies and exact behaviors.
pub const STRATEGY_TOL: f64 = 1e-10;

/// Value of a dichotomic outcome by internal index.
pub const SIGN_VALUES: [f64; 2] = [1.0, -1.0];

const COUNTS_HEADER: &str = "# ebicert counts v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },
    #[error("missing statistics for setting pair {0}")]
    MissingStatistics(String),
    #[error("count record contains no measured setting pair")]
    EmptyRecord,
    #[error("invalid count record: {0}")]
    InvalidRecord(String),
    #[error("counts line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

type Result<T> = std::result::Result<T, ScenarioError>;

fn check_index(what: &'static str, index: usize, max: usize) -> Result<usize> {
    if index == 0 || index > max {
        Err(ScenarioError::IndexOutOfRange { what, index, max })
    } else {
        Ok(index - 1)
    }
}

fn sign_index(value: i8) -> Result<usize> {
    match value {
        1 => Ok(0),
        -1 => Ok(1),
        _ => Err(ScenarioError::IndexOutOfRange {
            what: "dichotomic outcome (expected +1 or -1)",
            index: value.unsigned_abs() as usize,
            max: 1,
        }),
    }
}

/// A shared pure state together with all local measurements.
#[derive(Clone, Debug)]
pub struct Strategy {
    state: Ket,
    dims: (usize, usize),
    alice_obs: [Operator; ALICE_DICHOTOMIC],
    alice_povm: [Operator; POVM_OUTCOMES],
    bob_obs: [Operator; BOB_SETTINGS],
}

impl Strategy {
    pub fn new(
        state: Ket,
        dims: (usize, usize),
        alice_obs: [Operator; ALICE_DICHOTOMIC],
        alice_povm: [Operator; POVM_OUTCOMES],
        bob_obs: [Operator; BOB_SETTINGS],
    ) -> Result<Self> {
        let (da, db) = dims;
        if state.dim() != da * db {
            return Err(ScenarioError::InvalidStrategy(format!(
                "state has dimension {}, expected {da}×{db}",
                state.dim()
            )));
        }
        if !state.is_normalized(STRATEGY_TOL) {
            return Err(ScenarioError::InvalidStrategy(format!(
                "state norm² is {}",
                state.norm_sqr()
            )));
        }
        for (k, a) in alice_obs.iter().enumerate() {
            check_dichotomic(&format!("A_{}", k + 1), a, da)?;
        }
        for (l, b) in bob_obs.iter().enumerate() {
            check_dichotomic(&format!("B_{}", l + 1), b, db)?;
        }
        check_povm("A_4", &alice_povm, da)?;
        Ok(Self {
            state,
            dims,
            alice_obs,
            alice_povm,
            bob_obs,
        })
    }

    pub fn state(&self) -> &Ket {
        &self.state
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn alice_obs(&self) -> &[Operator; ALICE_DICHOTOMIC] {
        &self.alice_obs
    }

    pub fn alice_povm(&self) -> &[Operator; POVM_OUTCOMES] {
        &self.alice_povm
    }

    pub fn bob_obs(&self) -> &[Operator; BOB_SETTINGS] {
        &self.bob_obs
    }
}

fn check_dichotomic(name: &str, op: &Operator, dim: usize) -> Result<()> {
    if op.dim() != dim {
        return Err(ScenarioError::InvalidStrategy(format!(
            "{name} has dimension {}, expected {dim}",
            op.dim()
        )));
    }
    if !op.is_hermitian(STRATEGY_TOL) {
        return Err(ScenarioError::InvalidStrategy(format!("{name} is not Hermitian")));
    }
    let dev = op.matmul(op).max_abs_diff(&Operator::identity(dim));
    if dev > STRATEGY_TOL {
        return Err(ScenarioError::InvalidStrategy(format!(
            "{name} does not square to the identity (deviation {dev:e})"
        )));
    }
    Ok(())
}

/// Checks positivity and completeness of a POVM within [`STRATEGY_TOL`].
pub fn check_povm(name: &str, elements: &[Operator], dim: usize) -> Result<()> {
    let mut total = Operator::zeros(dim);
    for (a, e) in elements.iter().enumerate() {
        if e.dim() != dim {
            return Err(ScenarioError::InvalidStrategy(format!(
                "{name} element {} has dimension {}, expected {dim}",
                a + 1,
                e.dim()
            )));
        }
        if !e.is_hermitian(STRATEGY_TOL) {
            return Err(ScenarioError::InvalidStrategy(format!(
                "{name} element {} is not Hermitian",
                a + 1
            )));
        }
        let min = e.min_eigenvalue()?;
        if min < -STRATEGY_TOL {
            return Err(ScenarioError::InvalidStrategy(format!(
                "{name} element {} is not positive (min eigenvalue {min:e})",
                a + 1
            )));
        }
        total = total + e.clone();
    }
    let dev = total.max_abs_diff(&Operator::identity(dim));
    if dev > STRATEGY_TOL {
        return Err(ScenarioError::InvalidStrategy(format!(
            "{name} elements do not sum to the identity (deviation {dev:e})"
        )));
    }
    Ok(())
}

/// Eigenprojectors `[Π₊, Π₋]` of a dichotomic observable.
fn sign_projectors(obs: &Operator) -> [Operator; 2] {
    let id = Operator::identity(obs.dim());
    [(&id + obs) * 0.5, (&id - obs) * 0.5]
}

/// Whether a behavior was computed exactly or estimated from counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Exact,
    Estimated { shots: u64 },
}

/// `P(a,b|A_k,B_l)` for the dichotomic settings, indexed `[a][b]`.
pub type DichotomicTable = [[f64; 2]; 2];
/// `P(a,b|A_4,B_l)`, indexed `[a][b]`.
pub type PovmTable = [[f64; 2]; POVM_OUTCOMES];

/// Joint outcome probabilities for every setting pair.
///
/// A pair that was never measured is `None`; accessors touching it return
/// [`ScenarioError::MissingStatistics`].
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    dichotomic: [[Option<DichotomicTable>; BOB_SETTINGS]; ALICE_DICHOTOMIC],
    povm: [Option<PovmTable>; BOB_SETTINGS],
    origin: Origin,
}

impl Behavior {
    pub fn from_tables(
        dichotomic: [[Option<DichotomicTable>; BOB_SETTINGS]; ALICE_DICHOTOMIC],
        povm: [Option<PovmTable>; BOB_SETTINGS],
        origin: Origin,
    ) -> Self {
        Self {
            dichotomic,
            povm,
            origin,
        }
    }

    /// Every joint distribution uniform: no correlations, `P(a|A_4) = 1/4`.
    pub fn uniform() -> Self {
        Self {
            dichotomic: [[Some([[0.25; 2]; 2]); BOB_SETTINGS]; ALICE_DICHOTOMIC],
            povm: [Some([[0.125; 2]; POVM_OUTCOMES]); BOB_SETTINGS],
            origin: Origin::Exact,
        }
    }

    /// Convex combination `Σ w_i b_i`. Weights are used as given.
    ///
    /// A setting pair is present only if it is present in every component.
    pub fn mixture(components: &[(f64, &Behavior)]) -> Self {
        let mut dichotomic = [[Some([[0.0; 2]; 2]); BOB_SETTINGS]; ALICE_DICHOTOMIC];
        let mut povm = [Some([[0.0; 2]; POVM_OUTCOMES]); BOB_SETTINGS];
        let mut origin = Origin::Exact;
        for &(w, b) in components {
            if let Origin::Estimated { shots } = b.origin {
                origin = Origin::Estimated { shots };
            }
            for k in 0..ALICE_DICHOTOMIC {
                for l in 0..BOB_SETTINGS {
                    dichotomic[k][l] = match (dichotomic[k][l], b.dichotomic[k][l]) {
                        (Some(mut acc), Some(t)) => {
                            for a in 0..2 {
                                for y in 0..2 {
                                    acc[a][y] += w * t[a][y];
                                }
                            }
                            Some(acc)
                        }
                        _ => None,
                    };
                }
            }
            for l in 0..BOB_SETTINGS {
                povm[l] = match (povm[l], b.povm[l]) {
                    (Some(mut acc), Some(t)) => {
                        for a in 0..POVM_OUTCOMES {
                            for y in 0..2 {
                                acc[a][y] += w * t[a][y];
                            }
                        }
                        Some(acc)
                    }
                    _ => None,
                };
            }
        }
        Self {
            dichotomic,
            povm,
            origin,
        }
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn is_estimated(&self) -> bool {
        matches!(self.origin, Origin::Estimated { .. })
    }

    pub(crate) fn dichotomic_raw(&self, k0: usize, l0: usize) -> Result<&DichotomicTable> {
        self.dichotomic[k0][l0]
            .as_ref()
            .ok_or_else(|| ScenarioError::MissingStatistics(format!("A{} B{}", k0 + 1, l0 + 1)))
    }

    pub(crate) fn povm_raw(&self, l0: usize) -> Result<&PovmTable> {
        self.povm[l0]
            .as_ref()
            .ok_or_else(|| ScenarioError::MissingStatistics(format!("A4 B{}", l0 + 1)))
    }

    /// `P(a,b|A_k,B_l)` with `a, b ∈ {+1, -1}`.
    pub fn p_dichotomic(&self, k: usize, l: usize, a: i8, b: i8) -> Result<f64> {
        let k0 = check_index("Alice dichotomic setting", k, ALICE_DICHOTOMIC)?;
        let l0 = check_index("Bob setting", l, BOB_SETTINGS)?;
        Ok(self.dichotomic_raw(k0, l0)?[sign_index(a)?][sign_index(b)?])
    }

    /// `P(a,b|A_4,B_l)` with `a ∈ 1..=4`, `b ∈ {+1, -1}`.
    pub fn p_povm(&self, a: usize, l: usize, b: i8) -> Result<f64> {
        let a0 = check_index("POVM outcome", a, POVM_OUTCOMES)?;
        let l0 = check_index("Bob setting", l, BOB_SETTINGS)?;
        Ok(self.povm_raw(l0)?[a0][sign_index(b)?])
    }

    /// `E_{k,l} = Σ ab P(a,b|A_k,B_l)`.
    pub fn correlator(&self, k: usize, l: usize) -> Result<f64> {
        let k0 = check_index("Alice dichotomic setting", k, ALICE_DICHOTOMIC)?;
        let l0 = check_index("Bob setting", l, BOB_SETTINGS)?;
        self.correlator0(k0, l0)
    }

    pub(crate) fn correlator0(&self, k0: usize, l0: usize) -> Result<f64> {
        let t = self.dichotomic_raw(k0, l0)?;
        Ok(t[0][0] - t[0][1] - t[1][0] + t[1][1])
    }

    /// `E_{a|4,l} = Σ_b b P(a,b|A_4,B_l)`.
    pub fn cond_expect(&self, a: usize, l: usize) -> Result<f64> {
        let a0 = check_index("POVM outcome", a, POVM_OUTCOMES)?;
        let l0 = check_index("Bob setting", l, BOB_SETTINGS)?;
        self.cond_expect0(a0, l0)
    }

    pub(crate) fn cond_expect0(&self, a0: usize, l0: usize) -> Result<f64> {
        let t = self.povm_raw(l0)?;
        Ok(t[a0][0] - t[a0][1])
    }

    /// `P(a|A_4)`, pooled over every measured Bob setting.
    pub fn povm_marginal(&self, a: usize) -> Result<f64> {
        let a0 = check_index("POVM outcome", a, POVM_OUTCOMES)?;
        Ok(self.povm_marginals()?[a0])
    }

    pub fn povm_marginals(&self) -> Result<[f64; POVM_OUTCOMES]> {
        let tables: Vec<&PovmTable> = self.povm.iter().flatten().collect();
        if tables.is_empty() {
            return Err(ScenarioError::MissingStatistics("A4 with any Bob setting".into()));
        }
        let mut out = [0.0; POVM_OUTCOMES];
        for t in &tables {
            for (a, row) in t.iter().enumerate() {
                out[a] += row[0] + row[1];
            }
        }
        let n = tables.len() as f64;
        Ok(out.map(|x| x / n))
    }

    /// `P(a|A_4)` computed from the `(A_4, B_l)` table alone.
    pub fn povm_marginal_given(&self, a: usize, l: usize) -> Result<f64> {
        let a0 = check_index("POVM outcome", a, POVM_OUTCOMES)?;
        let l0 = check_index("Bob setting", l, BOB_SETTINGS)?;
        let row = self.povm_raw(l0)?[a0];
        Ok(row[0] + row[1])
    }

    /// `⟨B_l⟩` read off the `(A_4, B_l)` table.
    pub fn bob_mean(&self, l: usize) -> Result<f64> {
        let l0 = check_index("Bob setting", l, BOB_SETTINGS)?;
        let t = self.povm_raw(l0)?;
        Ok(t.iter().map(|row| row[0] - row[1]).sum())
    }

    /// Largest deviation of any local marginal across the other party's
    /// settings. Zero for every quantum behavior.
    pub fn no_signaling_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut spread = |values: &[f64]| {
            if let (Some(lo), Some(hi)) = (
                values.iter().cloned().reduce(f64::min),
                values.iter().cloned().reduce(f64::max),
            ) {
                worst = worst.max(hi - lo);
            }
        };
        // Alice's marginals across Bob's settings.
        for k in 0..ALICE_DICHOTOMIC {
            let v: Vec<f64> = self.dichotomic[k].iter().flatten().map(|t| t[0][0] + t[0][1]).collect();
            spread(&v);
        }
        for a in 0..POVM_OUTCOMES {
            let v: Vec<f64> = self.povm.iter().flatten().map(|t| t[a][0] + t[a][1]).collect();
            spread(&v);
        }
        // Bob's marginals across Alice's settings.
        for l in 0..BOB_SETTINGS {
            let mut v: Vec<f64> = (0..ALICE_DICHOTOMIC)
                .filter_map(|k| self.dichotomic[k][l])
                .map(|t| t[0][0] + t[1][0])
                .collect();
            if let Some(t) = self.povm[l] {
                v.push(t.iter().map(|row| row[0]).sum());
            }
            spread(&v);
        }
        worst
    }

    /// Checks probability ranges and normalization of every present table.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let check = |name: String, probs: &[f64]| -> Result<()> {
            if let Some(p) = probs.iter().find(|&&p| !(-tol..=1.0 + tol).contains(&p)) {
                return Err(ScenarioError::InvalidRecord(format!(
                    "{name}: probability {p} out of range"
                )));
            }
            let s: f64 = probs.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(ScenarioError::InvalidRecord(format!(
                    "{name}: probabilities sum to {s}"
                )));
            }
            Ok(())
        };
        for k in 0..ALICE_DICHOTOMIC {
            for l in 0..BOB_SETTINGS {
                if let Some(t) = self.dichotomic[k][l] {
                    check(format!("A{} B{}", k + 1, l + 1), t.as_flattened())?;
                }
            }
        }
        for l in 0..BOB_SETTINGS {
            if let Some(t) = self.povm[l] {
                check(format!("A4 B{}", l + 1), t.as_flattened())?;
            }
        }
        Ok(())
    }

    /// Largest total-variation distance between corresponding joint
    /// distributions. Pairs missing on either side are skipped.
    pub fn statistical_distance(&self, other: &Behavior) -> f64 {
        let tv = |a: &[f64], b: &[f64]| 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
        let mut worst = 0.0f64;
        for k in 0..ALICE_DICHOTOMIC {
            for l in 0..BOB_SETTINGS {
                if let (Some(x), Some(y)) = (self.dichotomic[k][l], other.dichotomic[k][l]) {
                    worst = worst.max(tv(x.as_flattened(), y.as_flattened()));
                }
            }
        }
        for l in 0..BOB_SETTINGS {
            if let (Some(x), Some(y)) = (self.povm[l], other.povm[l]) {
                worst = worst.max(tv(x.as_flattened(), y.as_flattened()));
            }
        }
        worst
    }
}

/// Born-rule behavior of a strategy.
pub fn behavior_of(s: &Strategy) -> Result<Behavior> {
    let psi = &s.state;
    let prob = |pa: &Operator, pb: &Operator| tensor(pa, pb).expectation(psi).re;
    let bob_proj: Vec<[Operator; 2]> = s.bob_obs.iter().map(sign_projectors).collect();

    let mut dichotomic = [[None; BOB_SETTINGS]; ALICE_DICHOTOMIC];
    for (k, a_obs) in s.alice_obs.iter().enumerate() {
        let alice_proj = sign_projectors(a_obs);
        for (l, bp) in bob_proj.iter().enumerate() {
            let mut t = [[0.0; 2]; 2];
            for (x, pa) in alice_proj.iter().enumerate() {
                for (y, pb) in bp.iter().enumerate() {
                    t[x][y] = prob(pa, pb);
                }
            }
            dichotomic[k][l] = Some(t);
        }
    }
    let mut povm = [None; BOB_SETTINGS];
    for (l, bp) in bob_proj.iter().enumerate() {
        let mut t = [[0.0; 2]; POVM_OUTCOMES];
        for (a, e) in s.alice_povm.iter().enumerate() {
            for (y, pb) in bp.iter().enumerate() {
                t[a][y] = prob(e, pb);
            }
        }
        povm[l] = Some(t);
    }
    Ok(Behavior {
        dichotomic,
        povm,
        origin: Origin::Exact,
    })
}

/// Integer outcome counts per setting pair.
///
/// Every measured pair holds exactly `shots` counts; unmeasured pairs are
/// `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRecord {
    shots: u64,
    dichotomic: [[Option<[[u64; 2]; 2]>; BOB_SETTINGS]; ALICE_DICHOTOMIC],
    povm: [Option<[[u64; 2]; POVM_OUTCOMES]>; BOB_SETTINGS],
}

impl CountRecord {
    pub fn new(
        shots: u64,
        dichotomic: [[Option<[[u64; 2]; 2]>; BOB_SETTINGS]; ALICE_DICHOTOMIC],
        povm: [Option<[[u64; 2]; POVM_OUTCOMES]>; BOB_SETTINGS],
    ) -> Result<Self> {
        if shots == 0 {
            return Err(ScenarioError::InvalidRecord("shot count must be positive".into()));
        }
        let r = Self {
            shots,
            dichotomic,
            povm,
        };
        for k in 0..ALICE_DICHOTOMIC {
            for l in 0..BOB_SETTINGS {
                if let Some(t) = r.dichotomic[k][l] {
                    r.check_total(&format!("A{} B{}", k + 1, l + 1), t.as_flattened())?;
                }
            }
        }
        for l in 0..BOB_SETTINGS {
            if let Some(t) = r.povm[l] {
                r.check_total(&format!("A4 B{}", l + 1), t.as_flattened())?;
            }
        }
        Ok(r)
    }

    fn check_total(&self, name: &str, counts: &[u64]) -> Result<()> {
        let total: u64 = counts.iter().sum();
        if total != self.shots {
            return Err(ScenarioError::InvalidRecord(format!(
                "{name} holds {total} counts, expected {}",
                self.shots
            )));
        }
        Ok(())
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn dichotomic_counts(&self, k: usize, l: usize) -> Option<[[u64; 2]; 2]> {
        self.dichotomic
            .get(k.wrapping_sub(1))?
            .get(l.wrapping_sub(1))
            .copied()
            .flatten()
    }

    pub fn povm_counts(&self, l: usize) -> Option<[[u64; 2]; POVM_OUTCOMES]> {
        self.povm.get(l.wrapping_sub(1)).copied().flatten()
    }
}

/// Draws `shots` counts from each `(A_k, B_l)` and `(A_4, B_l)` distribution
/// of the strategy's exact behavior.
pub fn sample(s: &Strategy, shots_per_pair: u64, seed: u64) -> Result<CountRecord> {
    sample_behavior(&behavior_of(s)?, shots_per_pair, seed)
}

/// Multinomial sampling from every present table of `b`.
///
/// Each setting pair draws from its own ChaCha stream of the same seed, so a
/// pair's counts do not depend on which other pairs are present.
pub fn sample_behavior(b: &Behavior, shots_per_pair: u64, seed: u64) -> Result<CountRecord> {
    if shots_per_pair == 0 {
        return Err(ScenarioError::InvalidRecord("shot count must be positive".into()));
    }
    let mut dichotomic = [[None; BOB_SETTINGS]; ALICE_DICHOTOMIC];
    let mut povm = [None; BOB_SETTINGS];
    for k in 0..ALICE_DICHOTOMIC {
        for l in 0..BOB_SETTINGS {
            if let Some(t) = b.dichotomic[k][l] {
                let c = multinomial(t.as_flattened(), shots_per_pair, seed, (k * BOB_SETTINGS + l) as u64);
                dichotomic[k][l] = Some([[c[0], c[1]], [c[2], c[3]]]);
            }
        }
    }
    for l in 0..BOB_SETTINGS {
        if let Some(t) = b.povm[l] {
            let c = multinomial(
                t.as_flattened(),
                shots_per_pair,
                seed,
                (ALICE_DICHOTOMIC * BOB_SETTINGS + l) as u64,
            );
            let mut table = [[0; 2]; POVM_OUTCOMES];
            for a in 0..POVM_OUTCOMES {
                table[a] = [c[2 * a], c[2 * a + 1]];
            }
            povm[l] = Some(table);
        }
    }
    CountRecord::new(shots_per_pair, dichotomic, povm)
}

fn multinomial(probs: &[f64], n: u64, seed: u64, stream: u64) -> Vec<u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let clamped: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    let mut mass: f64 = clamped.iter().sum();
    let mut remaining = n;
    let mut out = vec![0; probs.len()];
    for (i, &p) in clamped.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == clamped.len() {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = Binomial::new(remaining, q)
            .expect("valid binomial parameters")
            .sample(&mut rng);
        out[i] = x;
        remaining -= x;
        mass -= p;
    }
    out
}

/// Relative frequencies of a count record.
pub fn estimate(c: &CountRecord) -> Result<Behavior> {
    let n = c.shots as f64;
    if c.dichotomic.iter().flatten().all(Option::is_none) && c.povm.iter().all(Option::is_none) {
        return Err(ScenarioError::EmptyRecord);
    }
    let dichotomic = c
        .dichotomic
        .map(|row| row.map(|t| t.map(|t| t.map(|r| r.map(|x| x as f64 / n)))));
    let povm = c.povm.map(|t| t.map(|t| t.map(|r| r.map(|x| x as f64 / n))));
    Ok(Behavior {
        dichotomic,
        povm,
        origin: Origin::Estimated { shots: c.shots },
    })
}

fn sign_label(index: usize) -> &'static str {
    if index == 0 {
        "+1"
    } else {
        "-1"
    }
}

/// Line-oriented text form.
///
/// ```text
/// # ebicert counts v1
/// shots 1000
/// shape alice=3 povm=4 bob=4
/// A1 B1 +1 +1 412
/// ...
/// A4 B1 1 +1 130
/// ```
///
/// Each data line is `<alice setting> <bob setting> <alice outcome> <bob
/// outcome> <count>`. Alice's outcome is `+1`/`-1` for `A1..A3` and `1..4`
/// for `A4`. Setting pairs that were not measured have no lines.
impl fmt::Display for CountRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{COUNTS_HEADER}")?;
        writeln!(f, "shots {}", self.shots)?;
        writeln!(
            f,
            "shape alice={ALICE_DICHOTOMIC} povm={POVM_OUTCOMES} bob={BOB_SETTINGS}"
        )?;
        for k in 0..ALICE_DICHOTOMIC {
            for l in 0..BOB_SETTINGS {
                if let Some(t) = self.dichotomic[k][l] {
                    for (x, row) in t.iter().enumerate() {
                        for (y, count) in row.iter().enumerate() {
                            writeln!(f, "A{} B{} {} {} {count}", k + 1, l + 1, sign_label(x), sign_label(y))?;
                        }
                    }
                }
            }
        }
        for l in 0..BOB_SETTINGS {
            if let Some(t) = self.povm[l] {
                for (a, row) in t.iter().enumerate() {
                    for (y, count) in row.iter().enumerate() {
                        writeln!(f, "A4 B{} {} {} {count}", l + 1, a + 1, sign_label(y))?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for CountRecord {
    type Err = ScenarioError;

    fn from_str(text: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| ScenarioError::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        match lines.next() {
            Some((_, COUNTS_HEADER)) => {}
            Some((n, other)) => {
                return Err(parse_err(
                    n,
                    format!("expected header `{COUNTS_HEADER}`, found `{other}`"),
                ))
            }
            None => return Err(ScenarioError::EmptyRecord),
        }

        let mut shots = None;
        let mut dichotomic: [[Option<[[Option<u64>; 2]; 2]>; BOB_SETTINGS]; ALICE_DICHOTOMIC] =
            [[None; BOB_SETTINGS]; ALICE_DICHOTOMIC];
        let mut povm: [Option<[[Option<u64>; 2]; POVM_OUTCOMES]>; BOB_SETTINGS] = [None; BOB_SETTINGS];

        for (n, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["shots", v] => {
                    let v: u64 = v.parse().map_err(|_| parse_err(n, format!("bad shot count `{v}`")))?;
                    shots = Some(v);
                }
                ["shape", rest @ ..] => {
                    let expected = [
                        format!("alice={ALICE_DICHOTOMIC}"),
                        format!("povm={POVM_OUTCOMES}"),
                        format!("bob={BOB_SETTINGS}"),
                    ];
                    if rest.len() != expected.len() || rest.iter().zip(&expected).any(|(a, b)| a != b) {
                        return Err(parse_err(n, format!("unsupported shape `{}`", rest.join(" "))));
                    }
                }
                [alice, bob, a_out, b_out, count] => {
                    let l0 = parse_setting(bob, 'B', BOB_SETTINGS)
                        .ok_or_else(|| parse_err(n, format!("bad Bob setting `{bob}`")))?;
                    let y = parse_sign(b_out).ok_or_else(|| parse_err(n, format!("bad Bob outcome `{b_out}`")))?;
                    let count: u64 = count
                        .parse()
                        .map_err(|_| parse_err(n, format!("bad count `{count}`")))?;
                    let k0 = parse_setting(alice, 'A', ALICE_DICHOTOMIC + 1)
                        .ok_or_else(|| parse_err(n, format!("bad Alice setting `{alice}`")))?;
                    let slot = if k0 < ALICE_DICHOTOMIC {
                        let x =
                            parse_sign(a_out).ok_or_else(|| parse_err(n, format!("bad Alice outcome `{a_out}`")))?;
                        &mut dichotomic[k0][l0].get_or_insert([[None; 2]; 2])[x][y]
                    } else {
                        let a0 = a_out
                            .parse::<usize>()
                            .ok()
                            .filter(|a| (1..=POVM_OUTCOMES).contains(a))
                            .ok_or_else(|| parse_err(n, format!("bad POVM outcome `{a_out}`")))?
                            - 1;
                        &mut povm[l0].get_or_insert([[None; 2]; POVM_OUTCOMES])[a0][y]
                    };
                    if slot.replace(count).is_some() {
                        return Err(parse_err(n, "duplicate entry".into()));
                    }
                }
                _ => return Err(parse_err(n, format!("unrecognized line `{line}`"))),
            }
        }

        let shots = shots.ok_or_else(|| ScenarioError::InvalidRecord("missing `shots` line".into()))?;
        let fill = |o: Option<u64>| o.unwrap_or(0);
        CountRecord::new(
            shots,
            dichotomic.map(|row| row.map(|t| t.map(|t| t.map(|r| r.map(fill))))),
            povm.map(|t| t.map(|t| t.map(|r| r.map(fill)))),
        )
    }
}

fn parse_setting(field: &str, prefix: char, max: usize) -> Option<usize> {
    let idx: usize = field.strip_prefix(prefix)?.parse().ok()?;
    (1..=max).contains(&idx).then(|| idx - 1)
}

fn parse_sign(field: &str) -> Option<usize> {
    match field {
        "+1" | "1" => Some(0),
        "-1" => Some(1),
        _ => None,
    }
}
