//! Explicit eavesdropper models and Eve's probability of guessing `A_4`.
//!
//! A [`TripartiteModel`] is a pure state on Alice ⊗ Bob ⊗ Eve together with
//! everyone's measurements. Eve's guess succeeds when her four-outcome POVM
//! returns the same label as Alice's `A_4`, so for fixed Alice and Bob
//!
//! ```text
//! G(F) = Σ_a ⟨ψ| A_{a|4} ⊗ 𝟙_B ⊗ F_a |ψ⟩ = Σ_a tr(F_a σ_a),
//! σ_a = tr_AB[(A_{a|4} ⊗ 𝟙_B ⊗ 𝟙_E) |ψ⟩⟨ψ|].
//! ```
//!
//! Maximizing over `F` is a minimum-error discrimination problem on the
//! unnormalized states `σ_a`, solved by [`optimal_eve_measurement`].

use std::fmt;

use thiserror::Error;

use crate::certifier::{certify, CertTolerances};
use crate::ebi::{classical_max_bruteforce, ebi_value, phi_plus, reference_strategy, DeterministicAssignment};
use crate::qlin::{eig_hermitian, tensor, Ket, LinalgError, Operator, C64};
use crate::report::Table;
use crate::scenario::{
    behavior_of, check_povm, Behavior, ScenarioError, Strategy, ALICE_DICHOTOMIC, BOB_SETTINGS, POVM_OUTCOMES,
};

/// Largest Eve dimension used by the built-in families.
pub const MAX_EVE_DIM: usize = 8;

const EVE_MAX_ITERATIONS: usize = 500;
const EVE_CONVERGENCE: f64 = 1e-10;
/// Gap between the achieved value and the dual bound below which the
/// optimum is labelled exact.
pub const EXACT_GAP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid conditional states: {0}")]
    InvalidConditionals(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

type Result<T> = std::result::Result<T, AdversaryError>;

#[derive(Clone, Debug)]
pub struct TripartiteModel {
    state: Ket,
    dims: (usize, usize, usize),
    alice_obs: [Operator; ALICE_DICHOTOMIC],
    alice_povm: [Operator; POVM_OUTCOMES],
    bob_obs: [Operator; BOB_SETTINGS],
    eve_povm: [Operator; POVM_OUTCOMES],
}

impl TripartiteModel {
    pub fn new(
        state: Ket,
        dims: (usize, usize, usize),
        alice_obs: [Operator; ALICE_DICHOTOMIC],
        alice_povm: [Operator; POVM_OUTCOMES],
        bob_obs: [Operator; BOB_SETTINGS],
        eve_povm: [Operator; POVM_OUTCOMES],
    ) -> Result<Self> {
        let model = Self {
            state,
            dims,
            alice_obs,
            alice_povm,
            bob_obs,
            eve_povm,
        };
        model
            .bipartite_view()
            .map_err(|e| AdversaryError::InvalidModel(e.to_string()))?;
        check_povm("F", &model.eve_povm, dims.2).map_err(|e| AdversaryError::InvalidModel(e.to_string()))?;
        Ok(model)
    }

    /// Attaches a pure Eve state to a bipartite strategy.
    pub fn product_with(s: &Strategy, eve_state: &Ket, eve_povm: [Operator; POVM_OUTCOMES]) -> Result<Self> {
        let (da, db) = s.dims();
        Self::new(
            s.state().tensor(eve_state),
            (da, db, eve_state.dim()),
            s.alice_obs().clone(),
            s.alice_povm().clone(),
            s.bob_obs().clone(),
            eve_povm,
        )
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn state(&self) -> &Ket {
        &self.state
    }

    pub fn eve_povm(&self) -> &[Operator; POVM_OUTCOMES] {
        &self.eve_povm
    }

    pub fn with_eve_povm(&self, eve_povm: [Operator; POVM_OUTCOMES]) -> Result<Self> {
        Self::new(
            self.state.clone(),
            self.dims,
            self.alice_obs.clone(),
            self.alice_povm.clone(),
            self.bob_obs.clone(),
            eve_povm,
        )
    }

    /// Alice and Bob's strategy with Eve's system folded into Bob's side.
    pub fn bipartite_view(&self) -> std::result::Result<Strategy, ScenarioError> {
        let (da, db, de) = self.dims;
        let eve_id = Operator::identity(de);
        Strategy::new(
            self.state.clone(),
            (da, db * de),
            self.alice_obs.clone(),
            self.alice_povm.clone(),
            self.bob_obs.each_ref().map(|b| tensor(b, &eve_id)),
        )
    }

    /// The behavior Alice and Bob observe.
    pub fn behavior(&self) -> Result<Behavior> {
        Ok(behavior_of(&self.bipartite_view()?)?)
    }

    /// `σ_a` for each of Alice's `A_4` outcomes.
    pub fn eve_conditional_states(&self) -> [Operator; POVM_OUTCOMES] {
        let (da, db, de) = self.dims;
        let amps = self.state.amplitudes();
        self.alice_povm.each_ref().map(|e| {
            // σ[f, f'] = Σ_{x,x',y} E[x,x'] ψ(x',y,f) conj ψ(x,y,f')
            let sigma = Operator::from_fn(de, |f, g| {
                let mut acc = C64::new(0.0, 0.0);
                for x in 0..da {
                    for xp in 0..da {
                        let exx = e.get(x, xp);
                        if exx == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for y in 0..db {
                            acc += exx * amps[(xp * db + y) * de + f] * amps[(x * db + y) * de + g].conj();
                        }
                    }
                }
                acc
            });
            sigma.hermitian_part()
        })
    }

    /// Eve's best guessing probability over all her POVMs.
    pub fn optimal_guess(&self) -> Result<EveOptimum> {
        optimal_eve_measurement(&self.eve_conditional_states())
    }
}

/// `Σ_a ⟨ψ| A_{a|4} ⊗ 𝟙_B ⊗ F_a |ψ⟩` for the model's own `F`.
pub fn guess_prob(m: &TripartiteModel) -> f64 {
    m.eve_conditional_states()
        .iter()
        .zip(&m.eve_povm)
        .map(|(s, f)| f.matmul(s).trace().re)
        .sum()
}

/// A measurement achieving `value` together with a dual certificate
/// `upper_bound ≥ max_F Σ tr(F_a σ_a)`.
#[derive(Clone, Debug)]
pub struct EveOptimum {
    pub povm: Vec<Operator>,
    pub value: f64,
    pub upper_bound: f64,
    pub iterations: usize,
}

impl EveOptimum {
    pub fn gap(&self) -> f64 {
        self.upper_bound - self.value
    }

    pub fn is_exact(&self) -> bool {
        self.gap() <= EXACT_GAP
    }
}

/// Maximizes `Σ_a tr(F_a σ_a)` over POVMs `F` on Eve's space.
///
/// Starts from the pretty-good measurement and iterates the fixed-point map
/// `F_a ← Λ⁻¹ σ_a F_a σ_a Λ⁻¹`, `Λ = (Σ_a σ_a F_a σ_a)^{1/2}`, whose fixed
/// points satisfy the optimality conditions. Iteration stops once the
/// objective gains less than `1e-10` and the dual gap is within
/// [`EXACT_GAP`], or after 500 rounds. `upper_bound` is the best dual value
/// seen along the way.
pub fn optimal_eve_measurement(conditionals: &[Operator]) -> Result<EveOptimum> {
    let n = conditionals.len();
    if n == 0 {
        return Err(AdversaryError::InvalidConditionals("no conditional states".into()));
    }
    let dim = conditionals[0].dim();
    let mut total_trace = 0.0;
    for (a, s) in conditionals.iter().enumerate() {
        if s.dim() != dim {
            return Err(AdversaryError::InvalidConditionals(format!(
                "σ_{} has dimension {}, expected {dim}",
                a + 1,
                s.dim()
            )));
        }
        if !s.is_hermitian(1e-10) {
            return Err(AdversaryError::InvalidConditionals(format!(
                "σ_{} is not Hermitian",
                a + 1
            )));
        }
        let min = s.min_eigenvalue()?;
        if min < -1e-10 {
            return Err(AdversaryError::InvalidConditionals(format!(
                "σ_{} is not positive (min eigenvalue {min:e})",
                a + 1
            )));
        }
        total_trace += s.trace().re;
    }
    if (total_trace - 1.0).abs() > 1e-9 {
        return Err(AdversaryError::InvalidConditionals(format!(
            "traces sum to {total_trace}, expected 1"
        )));
    }

    let objective = |f: &[Operator]| -> f64 { f.iter().zip(conditionals).map(|(f, s)| f.matmul(s).trace().re).sum() };

    let total = conditionals.iter().fold(Operator::zeros(dim), |acc, s| acc + s.clone());
    let mut povm = sandwich_with_inverse_sqrt(&total, conditionals.to_vec())?;
    let mut value = objective(&povm);
    let mut upper_bound = dual_bound(&povm, conditionals)?;
    let mut iterations = 0;
    while iterations < EVE_MAX_ITERATIONS && upper_bound - value > EVE_CONVERGENCE {
        iterations += 1;
        let weighted: Vec<Operator> = povm
            .iter()
            .zip(conditionals)
            .map(|(f, s)| s.matmul(f).matmul(s).hermitian_part())
            .collect();
        let lambda_sq = weighted.iter().fold(Operator::zeros(dim), |acc, w| acc + w.clone());
        let candidate = sandwich_with_inverse_sqrt(&lambda_sq, weighted)?;
        let new_value = objective(&candidate);
        if new_value < value {
            break;
        }
        povm = candidate;
        let delta = new_value - value;
        value = new_value;
        upper_bound = upper_bound.min(dual_bound(&povm, conditionals)?);
        if delta < EVE_CONVERGENCE && upper_bound - value <= EXACT_GAP {
            break;
        }
    }

    // Guessing a fixed outcome is a fixed point of the iteration, so it is
    // only reachable as an explicit candidate.
    let blind = (0..n)
        .max_by(|&a, &b| conditionals[a].trace().re.total_cmp(&conditionals[b].trace().re))
        .expect("non-empty");
    let blind_povm: Vec<Operator> = (0..n)
        .map(|a| {
            if a == blind {
                Operator::identity(dim)
            } else {
                Operator::zeros(dim)
            }
        })
        .collect();
    let blind_value = objective(&blind_povm);
    upper_bound = upper_bound.min(dual_bound(&blind_povm, conditionals)?);
    if blind_value > value {
        value = blind_value;
        povm = blind_povm;
    }

    Ok(EveOptimum {
        povm,
        value,
        upper_bound: upper_bound.max(value),
        iterations,
    })
}

/// Smallest of two feasible dual values built from `Y₀ = herm(Σ_a σ_a F_a)`:
/// `Y₀ + max(0, max_a λ_max(σ_a − Y₀))·𝟙` and `Y₀ + Σ_a (σ_a − Y₀)₊`. Both
/// satisfy `Y ⪰ σ_a` for every `a`.
fn dual_bound(povm: &[Operator], conditionals: &[Operator]) -> Result<f64> {
    let dim = conditionals[0].dim();
    let y = povm
        .iter()
        .zip(conditionals)
        .fold(Operator::zeros(dim), |acc, (f, s)| acc + s.matmul(f))
        .hermitian_part();
    let mut shift = f64::MIN;
    let mut positive_parts = 0.0;
    for s in conditionals {
        let eig = eig_hermitian(&(s - &y))?;
        shift = shift.max(eig.values[0]);
        positive_parts += eig.values.iter().filter(|&&l| l > 0.0).sum::<f64>();
    }
    let base = y.trace().re;
    Ok((base + shift.max(0.0) * dim as f64).min(base + positive_parts))
}

/// `M^{-1/2} w_a M^{-1/2}` on the support of `M`, with the kernel of `M`
/// added to the first element so the result sums to the identity.
fn sandwich_with_inverse_sqrt(m: &Operator, elements: Vec<Operator>) -> Result<Vec<Operator>> {
    let dim = m.dim();
    let eig = eig_hermitian(&m.hermitian_part())?;
    let cutoff = 1e-13 * eig.values[0].abs().max(1e-300);
    let mut inv_sqrt = Operator::zeros(dim);
    let mut kernel = Operator::zeros(dim);
    for (&l, v) in eig.values.iter().zip(&eig.vectors) {
        let p = Operator::projector(v);
        if l > cutoff {
            inv_sqrt = inv_sqrt + p * (1.0 / l.sqrt());
        } else {
            kernel = kernel + p;
        }
    }
    let mut out: Vec<Operator> = elements
        .iter()
        .map(|w| inv_sqrt.matmul(w).matmul(&inv_sqrt).hermitian_part())
        .collect();
    out[0] = &out[0] + &kernel;
    Ok(out)
}

/// One branch of a classical attack: with probability `weight` the devices
/// run `strategy` and Eve guesses `guess` (1-based).
#[derive(Clone, Debug)]
pub struct AttackBranch {
    pub weight: f64,
    pub strategy: Strategy,
    pub guess: usize,
}

/// A convex mixture of strategies indexed by a hidden variable Eve knows.
#[derive(Clone, Debug)]
pub struct ClassicalAttack {
    branches: Vec<AttackBranch>,
}

impl ClassicalAttack {
    pub fn new(branches: Vec<AttackBranch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(AdversaryError::InvalidModel("attack needs at least one branch".into()));
        }
        if let Some(b) = branches.iter().find(|b| b.weight < 0.0) {
            return Err(AdversaryError::InvalidModel(format!("negative weight {}", b.weight)));
        }
        if let Some(b) = branches.iter().find(|b| !(1..=POVM_OUTCOMES).contains(&b.guess)) {
            return Err(AdversaryError::InvalidModel(format!(
                "guess {} out of range 1..=4",
                b.guess
            )));
        }
        let total: f64 = branches.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(AdversaryError::InvalidModel(format!("weights sum to {total}")));
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[AttackBranch] {
        &self.branches
    }
}

/// `G = Σ_λ p(λ) P(g(λ)|A_4, λ)` and the averaged behavior.
pub fn classical_guess_prob(att: &ClassicalAttack) -> Result<(f64, Behavior)> {
    let mut g = 0.0;
    let mut behaviors = Vec::with_capacity(att.branches.len());
    for branch in &att.branches {
        let b = behavior_of(&branch.strategy)?;
        g += branch.weight * b.povm_marginal(branch.guess)?;
        behaviors.push((branch.weight, b));
    }
    let parts: Vec<(f64, &Behavior)> = behaviors.iter().map(|(w, b)| (*w, b)).collect();
    Ok((g, Behavior::mixture(&parts)))
}

/// Computational-basis projectors grouped into four outcomes. With more than
/// four levels, level 0 is an extra "no information" level merged into the
/// first outcome and level `a` reports outcome `a`.
fn eve_basis_povm(dim: usize) -> [Operator; POVM_OUTCOMES] {
    let mut povm: [Operator; POVM_OUTCOMES] = std::array::from_fn(|_| Operator::zeros(dim));
    for level in 0..dim {
        let outcome = if dim > POVM_OUTCOMES {
            level.saturating_sub(1).min(3)
        } else {
            level.min(3)
        };
        povm[outcome] = &povm[outcome] + &Operator::projector(&Ket::basis(dim, level));
    }
    povm
}

/// Bell basis `φ₊, φ₋, ψ₊, ψ₋`.
fn bell_basis() -> [Ket; 4] {
    [
        phi_plus(),
        Ket::from_real(&[1.0, 0.0, 0.0, -1.0]).normalized(),
        Ket::from_real(&[0.0, 1.0, 1.0, 0.0]).normalized(),
        Ket::from_real(&[0.0, 1.0, -1.0, 0.0]).normalized(),
    ]
}

/// The optimal strategy on `v|φ₊⟩⟨φ₊| + (1−v)𝟙/4`, purified into a
/// four-level Eve who holds the Bell-basis label.
pub fn werner_model(v: f64) -> Result<TripartiteModel> {
    if !(0.0..=1.0).contains(&v) {
        return Err(AdversaryError::InvalidModel(format!("visibility {v} outside [0, 1]")));
    }
    let weights = [(1.0 + 3.0 * v) / 4.0, (1.0 - v) / 4.0, (1.0 - v) / 4.0, (1.0 - v) / 4.0];
    let mut state = Ket::new(vec![C64::new(0.0, 0.0); 16]);
    for (i, (bell, w)) in bell_basis().iter().zip(weights).enumerate() {
        state = state.add(&bell.tensor(&Ket::basis(4, i)).scale(C64::new(w.sqrt(), 0.0)));
    }
    let reference = reference_strategy();
    TripartiteModel::new(
        state,
        (2, 2, 4),
        reference.alice_obs().clone(),
        reference.alice_povm().clone(),
        reference.bob_obs().clone(),
        eve_basis_povm(4),
    )
}

/// With amplitude `√(1−t)` the source emits `|φ₊⟩` and Eve holds `|0⟩`;
/// otherwise it emits `|n_a⟩|n_a*⟩` aligned with Alice's element `a` and Eve
/// holds `|a⟩`. `t` tunes how much Eve learns about Alice's outcome.
pub fn partial_correlation_model(t: f64) -> Result<TripartiteModel> {
    if !(0.0..=1.0).contains(&t) {
        return Err(AdversaryError::InvalidModel(format!("correlation {t} outside [0, 1]")));
    }
    let de = POVM_OUTCOMES + 1;
    let reference = reference_strategy();
    let mut state = phi_plus()
        .tensor(&Ket::basis(de, 0))
        .scale(C64::new((1.0 - t).sqrt(), 0.0));
    for (a, element) in reference.alice_povm().iter().enumerate() {
        let top = eig_hermitian(element)?.vectors[0].clone();
        let conj = Ket::new(top.amplitudes().iter().map(|z| z.conj()).collect());
        let branch = top.tensor(&conj).tensor(&Ket::basis(de, a + 1));
        state = state.add(&branch.scale(C64::new((t / 4.0).sqrt(), 0.0)));
    }
    TripartiteModel::new(
        state,
        (2, 2, de),
        reference.alice_obs().clone(),
        reference.alice_povm().clone(),
        reference.bob_obs().clone(),
        eve_basis_povm(de),
    )
}

/// Four hidden values each fixing `A_4 = a` while the dichotomic outputs
/// follow a classical optimum (`S = 6`). Eve guesses `a` with probability
/// `accuracy` and `a + 1 (mod 4)` otherwise.
pub fn classical_attack(accuracy: f64) -> Result<ClassicalAttack> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(AdversaryError::InvalidModel(format!(
            "accuracy {accuracy} outside [0, 1]"
        )));
    }
    let best = classical_max_bruteforce().argmax;
    let mut branches = Vec::new();
    for a in 1..=POVM_OUTCOMES {
        let strategy = best.strategy(a);
        branches.push(AttackBranch {
            weight: accuracy / 4.0,
            strategy: strategy.clone(),
            guess: a,
        });
        branches.push(AttackBranch {
            weight: (1.0 - accuracy) / 4.0,
            strategy,
            guess: a % POVM_OUTCOMES + 1,
        });
    }
    ClassicalAttack::new(branches)
}

/// The perfectly informed four-value attack: `G = 1` with uniform `A_4`.
pub fn four_lambda_attack() -> ClassicalAttack {
    classical_attack(1.0).expect("valid attack")
}

/// An eavesdropper holding no information: a single deterministic strategy
/// wrapped as an attack whose guess is fixed.
pub fn single_branch_attack(
    assignment: DeterministicAssignment,
    outcome: usize,
    guess: usize,
) -> Result<ClassicalAttack> {
    ClassicalAttack::new(vec![AttackBranch {
        weight: 1.0,
        strategy: assignment.strategy(outcome),
        guess,
    }])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttackFamily {
    Werner,
    Classical,
    PartialCorrelation,
}

impl AttackFamily {
    pub const ALL: [AttackFamily; 3] = [
        AttackFamily::Werner,
        AttackFamily::Classical,
        AttackFamily::PartialCorrelation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AttackFamily::Werner => "werner",
            AttackFamily::Classical => "classical",
            AttackFamily::PartialCorrelation => "partial-correlation",
        }
    }

    /// Default parameter grid: 21 visibilities, 11 accuracies, 11 correlations.
    pub fn default_grid(&self) -> Vec<f64> {
        let steps = match self {
            AttackFamily::Werner => 20,
            AttackFamily::Classical | AttackFamily::PartialCorrelation => 10,
        };
        (0..=steps).map(|i| i as f64 / steps as f64).collect()
    }
}

impl fmt::Display for AttackFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepMeasurement {
    pub s_value: f64,
    pub uniformity_residual: f64,
    pub extremal: bool,
    pub test1: bool,
    pub test2: bool,
    pub certified: bool,
    pub g_lower: f64,
    pub g_upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub family: AttackFamily,
    pub parameter: f64,
    pub result: std::result::Result<SweepMeasurement, AdversaryError>,
}

/// Builds the model for one grid point, certifies what Alice and Bob see,
/// and computes Eve's guessing probability.
pub fn sweep_row(family: AttackFamily, parameter: f64, tol: &CertTolerances) -> SweepRow {
    let result = (|| -> Result<SweepMeasurement> {
        let (behavior, g_lower, g_upper) = match family {
            AttackFamily::Werner | AttackFamily::PartialCorrelation => {
                let model = match family {
                    AttackFamily::Werner => werner_model(parameter)?,
                    _ => partial_correlation_model(parameter)?,
                };
                let opt = model.optimal_guess()?;
                (model.behavior()?, opt.value, opt.upper_bound)
            }
            AttackFamily::Classical => {
                let (g, b) = classical_guess_prob(&classical_attack(parameter)?)?;
                (b, g, g)
            }
        };
        let verdict = certify(&behavior, &tol.for_behavior(&behavior))?;
        Ok(SweepMeasurement {
            s_value: ebi_value(&behavior)?,
            uniformity_residual: verdict.test2.uniformity_residual,
            extremal: verdict.test2.extremality.extremal,
            test1: verdict.test1.passed,
            test2: verdict.test2.passed,
            certified: verdict.certified(),
            g_lower,
            g_upper,
        })
    })();
    SweepRow {
        family,
        parameter,
        result,
    }
}

pub fn attack_sweep(family: AttackFamily, grid: &[f64], tol: &CertTolerances) -> Vec<SweepRow> {
    grid.iter().map(|&p| sweep_row(family, p, tol)).collect()
}

/// Every built-in family on its default grid.
pub fn builtin_sweep(tol: &CertTolerances) -> Vec<SweepRow> {
    AttackFamily::ALL
        .iter()
        .flat_map(|f| attack_sweep(*f, &f.default_grid(), tol))
        .collect()
}

pub const SWEEP_HEADER: [&str; 11] = [
    "family",
    "parameter",
    "S",
    "uniformity_residual",
    "extremal",
    "test1",
    "test2",
    "certified",
    "G_lower",
    "G_upper",
    "error",
];

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut table = Table::new(&SWEEP_HEADER);
    for row in rows {
        let mut cells = vec![row.family.to_string(), row.parameter.to_string()];
        match &row.result {
            Ok(m) => {
                cells.extend([
                    m.s_value.to_string(),
                    m.uniformity_residual.to_string(),
                    m.extremal.to_string(),
                    m.test1.to_string(),
                    m.test2.to_string(),
                    m.certified.to_string(),
                    m.g_lower.to_string(),
                    m.g_upper.to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                cells.extend(std::iter::repeat_n(String::new(), 8));
                cells.push(e.to_string().replace(',', ";"));
            }
        }
        table.push_row(cells);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ebi::QUANTUM_MAX;

    fn quarter_povm(dim: usize) -> [Operator; 4] {
        std::array::from_fn(|_| Operator::identity(dim) * 0.25)
    }

    #[test]
    fn reference_with_product_eve_guesses_a_quarter() {
        let eve = Ket::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let basis = [
            Operator::projector(&Ket::basis(2, 0)),
            Operator::projector(&Ket::basis(2, 1)),
            Operator::zeros(2),
            Operator::zeros(2),
        ];
        let m = TripartiteModel::product_with(&reference_strategy(), &eve, basis).unwrap();
        assert!((guess_prob(&m) - 0.25).abs() < 1e-12);
        let opt = m.optimal_guess().unwrap();
        assert!((opt.value - 0.25).abs() < 1e-12);
        assert!(opt.is_exact());
    }

    #[test]
    fn guess_prob_matches_direct_expectation() {
        let m = partial_correlation_model(0.4).unwrap();
        let (da, db, de) = m.dims();
        let reference = reference_strategy();
        let direct: f64 = reference
            .alice_povm()
            .iter()
            .zip(m.eve_povm())
            .map(|(a, f)| tensor(&tensor(a, &Operator::identity(db)), f).expectation(m.state()).re)
            .sum();
        assert_eq!(da * db * de, m.state().dim());
        assert!((guess_prob(&m) - direct).abs() < 1e-12);
    }

    #[test]
    fn classical_copy_is_guessed_perfectly() {
        let att = single_branch_attack(DeterministicAssignment::from_index(5), 3, 3).unwrap();
        let (g, _) = classical_guess_prob(&att).unwrap();
        assert_eq!(g, 1.0);

        // Same thing as a quantum model: Alice's A_4 reads a qubit Eve copies.
        let psi = Ket::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).normalized();
        let id = Operator::identity(2);
        let p0 = Operator::projector(&Ket::basis(2, 0));
        let p1 = Operator::projector(&Ket::basis(2, 1));
        let zero = Operator::zeros(2);
        let z = Operator::pauli_z();
        let m = TripartiteModel::new(
            psi,
            (2, 2, 2),
            [z.clone(), z.clone(), z.clone()],
            [p0.clone(), p1.clone(), zero.clone(), zero.clone()],
            [z.clone(), z.clone(), z.clone(), id],
            [p0, p1, zero.clone(), zero],
        )
        .unwrap();
        assert!((guess_prob(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_guessing_is_a_quarter() {
        let m = werner_model(0.3).unwrap().with_eve_povm(quarter_povm(4)).unwrap();
        assert!((guess_prob(&m) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_pure_conditionals_are_perfectly_distinguishable() {
        let sigmas: Vec<Operator> = (0..4).map(|i| Operator::projector(&Ket::basis(4, i)) * 0.25).collect();
        let opt = optimal_eve_measurement(&sigmas).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-12);
        assert!(opt.is_exact());
    }

    #[test]
    fn identical_conditionals_give_a_quarter() {
        let rho = Operator::diag(&[0.7, 0.3]);
        let sigmas: Vec<Operator> = (0..4).map(|_| &rho * 0.25).collect();
        let opt = optimal_eve_measurement(&sigmas).unwrap();
        assert!((opt.value - 0.25).abs() < 1e-12);
        assert!(opt.gap() < 1e-9);
    }

    /// Helstrom oracle: `1/2 + ‖σ₁ − σ₂‖₁ / 2`, with the trace norm computed
    /// from the eigenvalues of the difference.
    #[test]
    fn two_outcome_restriction_matches_helstrom() {
        let cases = [
            (Ket::basis(2, 0), Ket::from_real(&[1.0, 1.0]).normalized(), 0.5),
            (
                Ket::basis(2, 0),
                Ket::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]),
                0.3,
            ),
            (
                Ket::from_real(&[0.2, 0.9]).normalized(),
                Ket::from_real(&[0.9, -0.3]).normalized(),
                0.65,
            ),
        ];
        for (u, v, p) in cases {
            let s1 = Operator::projector(&u) * p;
            let s2 = Operator::projector(&v) * (1.0 - p);
            // mix in a little noise so the states are full rank
            let s1 = &(&s1 * 0.9) + &(Operator::identity(2) * (0.05 * p));
            let s2 = &(&s2 * 0.9) + &(Operator::identity(2) * (0.05 * (1.0 - p)));
            let diff = eig_hermitian(&(&s1 - &s2)).unwrap();
            let helstrom = 0.5 + 0.5 * diff.values.iter().map(|l| l.abs()).sum::<f64>();
            let opt = optimal_eve_measurement(&[s1, s2]).unwrap();
            assert!((opt.value - helstrom).abs() < 1e-7, "{} vs {helstrom}", opt.value);
            assert!(opt.upper_bound >= helstrom - 1e-12);
        }
    }

    #[test]
    fn invalid_conditionals_are_rejected() {
        let bad = vec![Operator::diag(&[0.5, -0.1]), Operator::diag(&[0.3, 0.3])];
        assert!(matches!(
            optimal_eve_measurement(&bad),
            Err(AdversaryError::InvalidConditionals(_))
        ));
        let unnormalized = vec![Operator::diag(&[0.5, 0.1])];
        assert!(matches!(
            optimal_eve_measurement(&unnormalized),
            Err(AdversaryError::InvalidConditionals(_))
        ));
        assert!(optimal_eve_measurement(&[]).is_err());
    }

    #[test]
    fn four_lambda_attack_is_caught_by_the_source_test() {
        let (g, b) = classical_guess_prob(&four_lambda_attack()).unwrap();
        assert_eq!(g, 1.0);
        for p in b.povm_marginals().unwrap() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!(ebi_value(&b).unwrap() <= 6.0 + 1e-10);
        let v = certify(&b, &CertTolerances::default()).unwrap();
        assert!(!v.test1.passed);
        assert!(!v.certified());
    }

    #[test]
    fn werner_endpoints() {
        let tol = CertTolerances::default();
        let top = sweep_row(AttackFamily::Werner, 1.0, &tol).result.unwrap();
        assert!((top.s_value - QUANTUM_MAX).abs() < 1e-12);
        assert!(top.certified);
        assert!((top.g_lower - 0.25).abs() < 1e-12 && top.g_upper <= 0.25 + 1e-9);

        let bottom = sweep_row(AttackFamily::Werner, 0.0, &tol).result.unwrap();
        assert!(bottom.s_value.abs() < 1e-12);
        assert!(!bottom.test2);
        let q = crate::certifier::reconstruct_q(&werner_model(0.0).unwrap().behavior().unwrap()).unwrap();
        for op in &q.operators {
            assert!(op.approx_eq(&(Operator::identity(2) * 0.25), 1e-12));
        }
    }

    #[test]
    fn werner_noise_leaks_information() {
        let opt = werner_model(0.5).unwrap().optimal_guess().unwrap();
        assert!(opt.value > 0.25 + 1e-3);
        assert!(opt.is_exact(), "gap {}", opt.gap());
    }

    #[test]
    fn model_validation() {
        assert!(werner_model(1.5).is_err());
        assert!(partial_correlation_model(-0.1).is_err());
        assert!(classical_attack(2.0).is_err());
        let half = Operator::identity(4) * 0.5;
        let bad = werner_model(0.5)
            .unwrap()
            .with_eve_povm([half.clone(), half.clone(), half, Operator::zeros(4)]);
        assert!(matches!(bad, Err(AdversaryError::InvalidModel(_))));
        let weights = ClassicalAttack::new(vec![AttackBranch {
            weight: 0.5,
            strategy: DeterministicAssignment::from_index(0).strategy(1),
            guess: 1,
        }]);
        assert!(matches!(weights, Err(AdversaryError::InvalidModel(_))));
    }

    #[test]
    fn sweep_errors_stay_in_their_row() {
        let rows = attack_sweep(AttackFamily::Werner, &[0.5, 7.0, 1.0], &CertTolerances::default());
        assert!(rows[0].result.is_ok());
        assert!(rows[1].result.is_err());
        assert!(rows[2].result.is_ok());
        let table = sweep_table(&rows).to_string();
        assert_eq!(table.lines().count(), 4);
        assert!(table.lines().nth(2).unwrap().contains("visibility"));
    }
}
