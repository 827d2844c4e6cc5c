//! Experiment orchestration behind the `qlsm` binary: config ingestion,
//! seeding, dispatch and artifact persistence.
//!
//! Every run writes `result.json` (a [`ResultRecord`]) and `summary.txt` into
//! the output directory next to its CSV/JSON artifacts. Only `summary.txt`
//! carries wall-clock time, so all CSV and JSON artifacts are bit-identical
//! across reruns of the same config and seed.

mod commands;
mod config;
mod props;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::{
    AdiabaticParams, ExperimentConfig, FadingParams, LearnParams, LsmParams, PropsParams,
    SeparationParams, SignalParams, SolveParams, TaskParams,
};

use crate::error::{QlsmError, Result};
use crate::hashing::sha256_hex;

pub const SEED_ENV: &str = "QLSM_SEED";
const DEFAULT_OUTPUT_DIR: &str = "qlsm-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Adiabatic,
    Lsm,
    Solve,
    Learn,
    Props,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Adiabatic => "adiabatic",
            Command::Lsm => "lsm",
            Command::Solve => "solve",
            Command::Learn => "learn",
            Command::Props => "props",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Env,
    Config,
}

/// Picks the seed: `--seed` over `QLSM_SEED` over the config file.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: u64) -> Result<(u64, SeedSource)> {
    if let Some(s) = flag {
        return Ok((s, SeedSource::Flag));
    }
    if let Some(raw) = env {
        let s = raw
            .trim()
            .parse::<u64>()
            .map_err(|e| QlsmError::Config(format!("{SEED_ENV}={raw:?}: {e}")))?;
        return Ok((s, SeedSource::Env));
    }
    Ok((config, SeedSource::Config))
}

/// Command-line level request, before any file is touched.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub config_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed_flag: Option<u64>,
    pub seed_env: Option<String>,
}

/// Everything a subcommand needs once inputs are resolved.
pub(crate) struct RunContext {
    pub seed: u64,
    pub config_hash: String,
    pub out_dir: PathBuf,
}

impl RunContext {
    /// `#` lines placed at the top of every CSV artifact.
    pub fn preamble(&self, command: Command) -> Vec<String> {
        vec![
            format!("qlsm {command}"),
            format!("seed = {}", self.seed),
            format!("config_hash = {}", self.config_hash),
        ]
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// JSON artifact wrapped with the run's seed and config hash.
    pub fn write_json<T: Serialize>(&self, name: &str, key: &str, value: &T) -> Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("seed".into(), self.seed.into());
        doc.insert("config_hash".into(), self.config_hash.clone().into());
        let value = serde_json::to_value(value).map_err(|e| QlsmError::Internal(e.to_string()))?;
        doc.insert(key.into(), value);
        crate::io::write_json(&self.path(name), &doc)
    }
}

/// Outcome of one invocation.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub subcommand: Command,
    pub config_hash: String,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub metrics: BTreeMap<String, f64>,
    /// Internal cross-checks; the run succeeds iff all hold.
    pub checks: BTreeMap<String, bool>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    /// Kept out of `result.json` so reruns are byte-identical.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
    /// Machine-readable description of every failed check.
    #[serde(skip)]
    pub diff: Vec<serde_json::Value>,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl ResultRecord {
    pub fn passed(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "experiment {}\nsubcommand {}\nseed {} ({:?})\nconfig_hash {}\nwall_clock_seconds {:.3}\nstatus {}\n",
            self.experiment_id,
            self.subcommand,
            self.seed,
            self.seed_source,
            self.config_hash,
            self.wall_clock_seconds,
            if self.passed() { "ok" } else { "FAILED" }
        );
        s.push_str("metrics\n");
        for (k, v) in &self.metrics {
            s.push_str(&format!("  {k} = {v}\n"));
        }
        s.push_str("checks\n");
        for (k, v) in &self.checks {
            s.push_str(&format!("  {k} = {}\n", if *v { "pass" } else { "FAIL" }));
        }
        s.push_str("artifacts\n");
        for a in &self.artifacts {
            s.push_str(&format!("  {a}\n"));
        }
        s
    }
}

/// What a subcommand hands back before the record is assembled.
#[derive(Default)]
pub(crate) struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub artifacts: Vec<String>,
    pub diff: Vec<serde_json::Value>,
}

impl Outcome {
    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn check(&mut self, key: &str, ok: bool) {
        self.checks.insert(key.to_string(), ok);
    }

    pub fn artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_string());
    }
}

/// Subcommand parameters with every input path resolved.
pub(crate) enum Resolved {
    Adiabatic(AdiabaticParams),
    Lsm(LsmParams),
    Solve(SolveParams),
    Learn(LearnParams),
    Props(PropsParams),
}

impl Resolved {
    fn input_files(&self) -> Vec<(&'static str, &Path)> {
        let mut out = Vec::new();
        match self {
            Resolved::Adiabatic(p) => out.extend(p.instance.as_deref().map(|f| ("adiabatic.instance", f))),
            Resolved::Lsm(p) => out.extend(p.signal.path.as_deref().map(|f| ("lsm.signal.path", f))),
            Resolved::Solve(p) => {
                out.extend(p.cnf.as_deref().map(|f| ("solve.cnf", f)));
                out.extend(p.truth_table.as_deref().map(|f| ("solve.truth_table", f)));
            }
            Resolved::Learn(_) | Resolved::Props(_) => {}
        }
        out
    }
}

fn resolve_section(command: Command, cfg: &ExperimentConfig, base: &Path, explicit: bool) -> Result<Resolved> {
    let missing = || config::field_error(command.name(), "missing section for this subcommand");
    Ok(match command {
        Command::Adiabatic => {
            let mut p = match (&cfg.adiabatic, explicit) {
                (Some(p), _) => p.clone(),
                (None, false) => AdiabaticParams::default(),
                (None, true) => return Err(missing()),
            };
            if let Some(f) = &p.instance {
                p.instance = Some(config::resolve_input("adiabatic.instance", f, base)?);
            }
            Resolved::Adiabatic(p)
        }
        Command::Lsm => {
            let mut p = match (&cfg.lsm, explicit) {
                (Some(p), _) => p.clone(),
                (None, false) => LsmParams::default(),
                (None, true) => return Err(missing()),
            };
            if let Some(f) = &p.signal.path {
                p.signal.path = Some(config::resolve_input("lsm.signal.path", f, base)?);
            }
            Resolved::Lsm(p)
        }
        Command::Solve => {
            let mut p = match (&cfg.solve, explicit) {
                (Some(p), _) => p.clone(),
                _ => return Err(missing()),
            };
            if let Some(f) = &p.cnf {
                p.cnf = Some(config::resolve_input("solve.cnf", f, base)?);
            }
            if let Some(f) = &p.truth_table {
                p.truth_table = Some(config::resolve_input("solve.truth_table", f, base)?);
            }
            Resolved::Solve(p)
        }
        Command::Learn => Resolved::Learn(match (&cfg.learn, explicit) {
            (Some(p), _) => p.clone(),
            (None, false) => LearnParams::default(),
            (None, true) => return Err(missing()),
        }),
        Command::Props => Resolved::Props(cfg.props.clone().unwrap_or_default()),
    })
}

/// Hash of the subcommand, seed, section as written, and the bytes of every
/// input file it names.
fn config_hash(command: Command, seed: u64, cfg: &ExperimentConfig, resolved: &Resolved) -> Result<String> {
    let section = match command {
        Command::Adiabatic => serde_json::to_value(&cfg.adiabatic),
        Command::Lsm => serde_json::to_value(&cfg.lsm),
        Command::Solve => serde_json::to_value(&cfg.solve),
        Command::Learn => serde_json::to_value(&cfg.learn),
        Command::Props => serde_json::to_value(&cfg.props),
    }
    .map_err(|e| QlsmError::Internal(e.to_string()))?;
    let mut inputs = serde_json::Map::new();
    for (field, path) in resolved.input_files() {
        let bytes = std::fs::read(path).map_err(|e| QlsmError::io(path, e))?;
        inputs.insert(field.into(), sha256_hex(&bytes).into());
    }
    let doc = serde_json::json!({
        "subcommand": command.name(),
        "seed": seed,
        "params": section,
        "inputs": inputs,
    });
    Ok(sha256_hex(doc.to_string().as_bytes()))
}

/// Loads the config, resolves every path and the seed, runs the subcommand and
/// writes `result.json`, `summary.txt` and (on failed checks) `diff.json`.
pub fn run(command: Command, inv: &Invocation) -> Result<ResultRecord> {
    let started = Instant::now();
    let (cfg, base) = match &inv.config_path {
        Some(path) => {
            let cfg = ExperimentConfig::from_file(path)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, base)
        }
        None => (ExperimentConfig::default(), PathBuf::from(".")),
    };
    let resolved = resolve_section(command, &cfg, &base, inv.config_path.is_some())?;
    let (seed, seed_source) = resolve_seed(inv.seed_flag, inv.seed_env.as_deref(), cfg.seed)?;
    let out_dir = match (&inv.out_dir, &cfg.output_dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) if dir.is_absolute() => dir.clone(),
        (None, Some(dir)) => base.join(dir),
        (None, None) => PathBuf::from(DEFAULT_OUTPUT_DIR),
    };
    let config_hash = config_hash(command, seed, &cfg, &resolved)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| QlsmError::io(&out_dir, e))?;
    let ctx = RunContext {
        seed,
        config_hash: config_hash.clone(),
        out_dir: out_dir.clone(),
    };

    let outcome = match &resolved {
        Resolved::Adiabatic(p) => commands::cmd_adiabatic(p, &ctx)?,
        Resolved::Lsm(p) => commands::cmd_lsm(p, &ctx)?,
        Resolved::Solve(p) => commands::cmd_solve(p, &ctx)?,
        Resolved::Learn(p) => commands::cmd_learn(p, &ctx)?,
        Resolved::Props(p) => props::cmd_props(p, &ctx)?,
    };

    let mut record = ResultRecord {
        experiment_id: format!("{command}-{}", &config_hash[..12]),
        subcommand: command,
        config_hash,
        seed,
        seed_source,
        metrics: outcome.metrics,
        checks: outcome.checks,
        artifacts: outcome.artifacts,
        wall_clock_seconds: 0.0,
        diff: outcome.diff,
        out_dir: out_dir.clone(),
    };
    record.artifacts.push("result.json".into());
    let diff_path = out_dir.join("diff.json");
    if record.diff.is_empty() {
        if diff_path.exists() {
            std::fs::remove_file(&diff_path).map_err(|e| QlsmError::io(&diff_path, e))?;
        }
    } else {
        record.artifacts.push("diff.json".into());
        ctx.write_json("diff.json", "failures", &record.diff)?;
    }
    record.artifacts.push("summary.txt".into());
    crate::io::write_json(&out_dir.join("result.json"), &record)?;
    record.wall_clock_seconds = started.elapsed().as_secs_f64();
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, record.summary()).map_err(|e| QlsmError::io(&summary_path, e))?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some("2"), 3).unwrap(), (1, SeedSource::Flag));
        assert_eq!(resolve_seed(None, Some("2"), 3).unwrap(), (2, SeedSource::Env));
        assert_eq!(resolve_seed(None, None, 3).unwrap(), (3, SeedSource::Config));
        assert!(resolve_seed(None, Some("x"), 3).is_err());
    }
}
