//! Run configuration: a flat `key = value` file merged under command-line
//! flags, then validated into a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Parser;
use ebicert::certifier::CertTolerances;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Certify,
    Sweep,
    Bruteforce,
    Seesaw,
    Sample,
}

impl Command {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "certify" => Self::Certify,
            "sweep" => Self::Sweep,
            "bruteforce" => Self::Bruteforce,
            "seesaw" => Self::Seesaw,
            "sample" => Self::Sample,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Certify => "certify",
            Self::Sweep => "sweep",
            Self::Bruteforce => "bruteforce",
            Self::Seesaw => "seesaw",
            Self::Sample => "sample",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    BuiltinReference,
    Werner { v: f64 },
    ClassicalAttack { accuracy: f64 },
    PartialCorrelation { t: f64 },
    Counts(PathBuf),
}

impl Source {
    pub fn describe(&self) -> String {
        match self {
            Self::BuiltinReference => "builtin-reference".into(),
            Self::Werner { .. } => "werner".into(),
            Self::ClassicalAttack { .. } => "classical-attack".into(),
            Self::PartialCorrelation { .. } => "partial-correlation".into(),
            Self::Counts(p) => format!("counts:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub source: Source,
    pub shots: Option<u64>,
    pub seed: u64,
    pub tolerances: CertTolerances,
    pub jobs: usize,
    pub rounds: usize,
    pub local_dim: usize,
    pub out: Option<PathBuf>,
}

/// Command-line flags. Every flag can also be given as `key = value` in the
/// file named by `--config`, with dashes or underscores; flags win.
#[derive(Parser, Debug, Default)]
#[command(
    name = "ebicert",
    version,
    about = "Simulate and certify elegant Bell inequality experiments"
)]
pub struct Flags {
    /// certify | sweep | bruteforce | seesaw | sample
    #[arg(long)]
    pub command: Option<String>,
    /// builtin-reference | werner | classical-attack | partial-correlation | counts:FILE
    #[arg(long)]
    pub source: Option<String>,
    /// Werner visibility in [0, 1].
    #[arg(long)]
    pub v: Option<String>,
    /// Eve's accuracy for the classical attack, in [0, 1].
    #[arg(long)]
    pub attack_accuracy: Option<String>,
    /// Partial-correlation strength in [0, 1].
    #[arg(long)]
    pub t: Option<String>,
    /// Shots per setting pair; sample before certifying.
    #[arg(long)]
    pub shots: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub s_tol: Option<String>,
    #[arg(long)]
    pub uniform_tol: Option<String>,
    #[arg(long)]
    pub det_tol: Option<String>,
    #[arg(long)]
    pub rank_tol: Option<String>,
    #[arg(long)]
    pub trace_tol: Option<String>,
    /// Worker threads for sweep.
    #[arg(long)]
    pub jobs: Option<String>,
    /// Seesaw round cap.
    #[arg(long)]
    pub rounds: Option<String>,
    /// Seesaw local dimension.
    #[arg(long)]
    pub local_dim: Option<String>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<String>,
    /// Flat key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Flags {
    fn as_pairs(&self) -> [(&'static str, &Option<String>); 16] {
        [
            ("command", &self.command),
            ("source", &self.source),
            ("v", &self.v),
            ("attack-accuracy", &self.attack_accuracy),
            ("t", &self.t),
            ("shots", &self.shots),
            ("seed", &self.seed),
            ("s-tol", &self.s_tol),
            ("uniform-tol", &self.uniform_tol),
            ("det-tol", &self.det_tol),
            ("rank-tol", &self.rank_tol),
            ("trace-tol", &self.trace_tol),
            ("jobs", &self.jobs),
            ("rounds", &self.rounds),
            ("local-dim", &self.local_dim),
            ("out", &self.out),
        ]
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config("config", format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !Flags::default().as_pairs().iter().any(|(k, _)| *k == key) {
            return Err(CliError::config(&key, format!("line {}: unknown key", i + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::config(&key, format!("line {}: duplicate key", i + 1)));
        }
    }
    Ok(map)
}

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_text(&text)
}

/// File values first, flags on top.
pub fn merge(flags: &Flags) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    for (key, value) in flags.as_pairs() {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    Ok(map)
}

fn number<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    map.get(key)
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| CliError::config(key, format!("cannot parse `{s}`")))
        })
        .transpose()
}

fn unit_interval(map: &BTreeMap<String, String>, key: &str, default: Option<f64>) -> Result<f64, CliError> {
    let value = match number::<f64>(map, key)?.or(default) {
        Some(v) => v,
        None => return Err(CliError::config(key, "required by this source")),
    };
    if !(0.0..=1.0).contains(&value) {
        return Err(CliError::config(key, format!("{value} outside [0, 1]")));
    }
    Ok(value)
}

fn positive(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64, CliError> {
    let value = number::<f64>(map, key)?.unwrap_or(default);
    if !(value > 0.0 && value.is_finite()) {
        return Err(CliError::config(key, format!("{value} must be positive and finite")));
    }
    Ok(value)
}

fn bounded(map: &BTreeMap<String, String>, key: &str, default: usize, lo: usize, hi: usize) -> Result<usize, CliError> {
    let value = number::<usize>(map, key)?.unwrap_or(default);
    if !(lo..=hi).contains(&value) {
        return Err(CliError::config(key, format!("{value} outside [{lo}, {hi}]")));
    }
    Ok(value)
}

fn source(map: &BTreeMap<String, String>) -> Result<Source, CliError> {
    let raw = map.get("source").map(String::as_str).unwrap_or("builtin-reference");
    if let Some(path) = raw.strip_prefix("counts:") {
        if path.is_empty() {
            return Err(CliError::config("source", "counts source needs a file path"));
        }
        return Ok(Source::Counts(PathBuf::from(path)));
    }
    Ok(match raw {
        "builtin-reference" => Source::BuiltinReference,
        "werner" => Source::Werner {
            v: unit_interval(map, "v", None)?,
        },
        "classical-attack" => Source::ClassicalAttack {
            accuracy: unit_interval(map, "attack-accuracy", Some(1.0))?,
        },
        "partial-correlation" => Source::PartialCorrelation {
            t: unit_interval(map, "t", None)?,
        },
        other => return Err(CliError::config("source", format!("unknown source `{other}`"))),
    })
}

pub fn build(map: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let command = match map.get("command") {
        Some(c) => Command::parse(c).ok_or_else(|| CliError::config("command", format!("unknown command `{c}`")))?,
        None => return Err(CliError::config("command", "missing")),
    };
    let source = source(map)?;
    let shots = number::<u64>(map, "shots")?;
    if let Some(n) = shots {
        if n == 0 {
            return Err(CliError::config("shots", "must be at least 1"));
        }
        if matches!(source, Source::Counts(_)) {
            return Err(CliError::config("shots", "a counts source already fixes the shots"));
        }
    }
    if command == Command::Sample && shots.is_none() {
        return Err(CliError::config("shots", "required by sample"));
    }
    let defaults = CertTolerances::default();
    let mut tolerances = defaults;
    tolerances.s_tol = positive(map, "s-tol", defaults.s_tol)?;
    tolerances.uniform_tol = positive(map, "uniform-tol", defaults.uniform_tol)?;
    tolerances.extremality.det_zero = positive(map, "det-tol", defaults.extremality.det_zero)?;
    tolerances.extremality.rank_min = positive(map, "rank-tol", defaults.extremality.rank_min)?;
    tolerances.extremality.trace_min = positive(map, "trace-tol", defaults.extremality.trace_min)?;
    Ok(RunConfig {
        command,
        source,
        shots,
        seed: number::<u64>(map, "seed")?.unwrap_or(0),
        tolerances,
        jobs: bounded(map, "jobs", 1, 1, 256)?,
        rounds: bounded(map, "rounds", 10_000, 1, 1_000_000)?,
        local_dim: bounded(map, "local-dim", 2, 1, 4)?,
        out: map.get("out").map(PathBuf::from),
    })
}
