use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ebicert::adversary::{
    classical_attack, classical_guess_prob, partial_correlation_model, sweep_row, sweep_table, werner_model,
    AttackFamily, EveOptimum, SweepRow,
};
use ebicert::certifier::{certify, CertTolerances};
use ebicert::ebi::{classical_max_bruteforce, ebi_value, reference_strategy, DeterministicAssignment, QUANTUM_MAX};
use ebicert::optimizer::{seesaw_maximize, SeesawConfig};
use ebicert::report::{KeyValues, Table};
use ebicert::scenario::{behavior_of, estimate, sample_behavior, Behavior, CountRecord, Origin};

use crate::config::{Command, RunConfig, Source};
use crate::error::CliError;
use crate::output::Report;

/// What a run produces: a report, or a counts file for `sample`.
pub enum Output {
    Report(Report),
    Counts(Box<CountRecord>),
}

pub fn run(cfg: &RunConfig) -> Result<Output, CliError> {
    Ok(match cfg.command {
        Command::Certify => Output::Report(certify_command(cfg)?),
        Command::Sweep => Output::Report(sweep_command(cfg)),
        Command::Bruteforce => Output::Report(bruteforce_command()?),
        Command::Seesaw => Output::Report(seesaw_command(cfg)?),
        Command::Sample => {
            let shots = cfg
                .shots
                .ok_or_else(|| CliError::config("shots", "required by sample"))?;
            let (behavior, _) = exact_behavior(&cfg.source)?;
            Output::Counts(Box::new(sample_behavior(&behavior, shots, cfg.seed)?))
        }
    })
}

/// Eve's guessing probability for sources that come with an explicit model.
struct EveGuess {
    lower: f64,
    upper: f64,
}

impl From<EveOptimum> for EveGuess {
    fn from(o: EveOptimum) -> Self {
        Self {
            lower: o.value,
            upper: o.upper_bound,
        }
    }
}

fn exact_behavior(source: &Source) -> Result<(Behavior, Option<EveGuess>), CliError> {
    Ok(match source {
        Source::BuiltinReference => (behavior_of(&reference_strategy())?, None),
        Source::Werner { v } => {
            let m = werner_model(*v)?;
            (m.behavior()?, Some(m.optimal_guess()?.into()))
        }
        Source::PartialCorrelation { t } => {
            let m = partial_correlation_model(*t)?;
            (m.behavior()?, Some(m.optimal_guess()?.into()))
        }
        Source::ClassicalAttack { accuracy } => {
            let (g, b) = classical_guess_prob(&classical_attack(*accuracy)?)?;
            (b, Some(EveGuess { lower: g, upper: g }))
        }
        Source::Counts(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let record: CountRecord = text
                .parse()
                .map_err(|e| CliError::config("source", format!("{}: {e}", path.display())))?;
            (estimate(&record)?, None)
        }
    })
}

fn source_fields(kv: &mut KeyValues, source: &Source) {
    kv.push("source", source.describe());
    match source {
        Source::Werner { v } => kv.push("source.v", v),
        Source::ClassicalAttack { accuracy } => kv.push("source.attack_accuracy", accuracy),
        Source::PartialCorrelation { t } => kv.push("source.t", t),
        Source::BuiltinReference | Source::Counts(_) => {}
    }
}

fn tolerance_fields(kv: &mut KeyValues, tol: &CertTolerances) {
    kv.push("tolerances.s_tol", tol.s_tol);
    kv.push("tolerances.uniform_tol", tol.uniform_tol);
    kv.push("tolerances.det_zero", tol.extremality.det_zero);
    kv.push("tolerances.trace_min", tol.extremality.trace_min);
    kv.push("tolerances.rank_min", tol.extremality.rank_min);
}

fn behavior_fields(kv: &mut KeyValues, b: &Behavior) {
    match b.origin() {
        Origin::Exact => kv.push("behavior.origin", "exact"),
        Origin::Estimated { shots } => {
            kv.push("behavior.origin", "estimated");
            kv.push("behavior.shots", shots);
        }
    }
    kv.push("behavior.no_signaling_violation", b.no_signaling_violation());
}

fn certify_command(cfg: &RunConfig) -> Result<Report, CliError> {
    let (exact, eve) = exact_behavior(&cfg.source)?;
    let behavior = match cfg.shots {
        Some(n) => estimate(&sample_behavior(&exact, n, cfg.seed)?)?,
        None => exact,
    };
    let tol = cfg.tolerances.for_behavior(&behavior);
    let verdict = certify(&behavior, &tol)?;

    let mut kv = KeyValues::new();
    kv.push("command", cfg.command.name());
    source_fields(&mut kv, &cfg.source);
    if cfg.shots.is_some() {
        kv.push("seed", cfg.seed);
    }
    behavior_fields(&mut kv, &behavior);
    tolerance_fields(&mut kv, &tol);
    kv.push("certified", verdict.certified());
    kv.extend(verdict.report_fields());
    if let Some(g) = eve {
        kv.push("eve.g_lower", g.lower);
        kv.push("eve.g_upper", g.upper);
    }
    Ok(Report {
        fields: kv,
        table: None,
    })
}

/// Rows in grid order regardless of how many workers computed them.
fn parallel_sweep(tasks: &[(AttackFamily, f64)], tol: &CertTolerances, jobs: usize) -> Vec<SweepRow> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; tasks.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(family, p)) = tasks.get(i) else { break };
                let row = sweep_row(family, p, tol);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect()
}

fn sweep_command(cfg: &RunConfig) -> Report {
    let tasks: Vec<(AttackFamily, f64)> = AttackFamily::ALL
        .iter()
        .flat_map(|f| f.default_grid().into_iter().map(move |p| (*f, p)))
        .collect();
    let rows = parallel_sweep(&tasks, &cfg.tolerances, cfg.jobs);
    let threshold = 0.25 + 1e-9;
    let measured: Vec<_> = rows.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let certified = measured.iter().filter(|m| m.certified).count();
    let sound = measured.iter().all(|m| !m.certified || m.g_upper <= threshold);
    let detected = measured.iter().all(|m| m.g_lower <= threshold || !(m.test1 && m.test2));

    let mut kv = KeyValues::new();
    kv.push("command", cfg.command.name());
    tolerance_fields(&mut kv, &cfg.tolerances);
    kv.push("sweep.rows", rows.len());
    kv.push("sweep.errors", rows.len() - measured.len());
    kv.push("sweep.certified_rows", certified);
    kv.push("sweep.certified_implies_g_quarter", sound);
    kv.push("sweep.g_above_quarter_fails_a_test", detected);
    Report {
        fields: kv,
        table: Some(("sweep".into(), sweep_table(&rows))),
    }
}

fn signs(values: &[i8]) -> String {
    values
        .iter()
        .map(|&x| if x > 0 { "+1" } else { "-1" })
        .collect::<Vec<_>>()
        .join(" ")
}

fn bruteforce_command() -> Result<Report, CliError> {
    let best = classical_max_bruteforce();
    let mut table = Table::new(&["index", "A1", "A2", "A3", "B1", "B2", "B3", "B4", "S"]);
    let mut maximizers = 0;
    for index in 0..128u8 {
        let d = DeterministicAssignment::from_index(index);
        let s = ebi_value(&behavior_of(&d.strategy(1))?)?;
        if s == best.value {
            maximizers += 1;
        }
        let mut row = vec![index.to_string()];
        row.extend(d.alice.iter().chain(&d.bob).map(|x| x.to_string()));
        row.push(s.to_string());
        table.push_row(row);
    }
    let mut kv = KeyValues::new();
    kv.push("command", "bruteforce");
    kv.push("classical.assignments", 128);
    kv.push("classical.max", best.value);
    kv.push("classical.maximizers", maximizers);
    kv.push("classical.argmax.alice", signs(&best.argmax.alice));
    kv.push("classical.argmax.bob", signs(&best.argmax.bob));
    kv.push("quantum.max", QUANTUM_MAX);
    Ok(Report {
        fields: kv,
        table: Some(("assignments".into(), table)),
    })
}

fn seesaw_command(cfg: &RunConfig) -> Result<Report, CliError> {
    let sc = SeesawConfig {
        max_rounds: cfg.rounds,
        seed: cfg.seed,
        local_dim: cfg.local_dim,
        ..SeesawConfig::default()
    };
    let result = seesaw_maximize(&sc)?;
    let behavior = behavior_of(&result.strategy)?;
    let verdict = certify(&behavior, &cfg.tolerances)?;

    let mut kv = KeyValues::new();
    kv.push("command", "seesaw");
    kv.push("seed", cfg.seed);
    kv.push("seesaw.local_dim", cfg.local_dim);
    kv.push("seesaw.max_rounds", cfg.rounds);
    kv.push("seesaw.rounds", result.trace.len());
    kv.push("seesaw.converged", result.converged);
    kv.push("seesaw.degenerate_updates", result.degenerate_updates);
    kv.push("seesaw.s_value", result.s_value);
    kv.push("seesaw.gap_to_quantum_max", QUANTUM_MAX - result.s_value);
    tolerance_fields(&mut kv, &cfg.tolerances);
    kv.push("certified", verdict.certified());
    kv.extend(verdict.report_fields());

    let mut table = Table::new(&["round", "S"]);
    for (i, s) in result.trace.iter().enumerate() {
        table.push_row(vec![(i + 1).to_string(), s.to_string()]);
    }
    Ok(Report {
        fields: kv,
        table: Some(("trace".into(), table)),
    })
}
