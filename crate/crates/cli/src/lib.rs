//! Config-driven experiment runner for `gowerslab-core`.

pub mod config;
pub mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

pub use config::ExperimentConfig;
pub use experiments::{run_experiment, Outcome, RunOptions, EXPERIMENTS};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// Serialised record of one experiment run.
#[derive(Debug, Serialize)]
pub struct ReportRecord<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: &'a str,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    #[serde(flatten)]
    pub outcome: &'a Outcome,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Loads a config file, or the defaults when `path` is `None`.
pub fn load_config(path: Option<&Path>) -> std::result::Result<ExperimentConfig, Vec<String>> {
    let cfg = match path {
        None => ExperimentConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| vec![format!("{}: {e}", p.display())])?;
            ExperimentConfig::from_toml(&text).map_err(|e| vec![e])?
        }
    };
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(errs)
    }
}

fn write_outcome(dir: &Path, outcome: &Outcome, hash: &str, started: u128) -> Result<()> {
    let sub = dir.join(&outcome.name);
    fs::create_dir_all(&sub).with_context(|| format!("creating {}", sub.display()))?;
    for (file, body) in &outcome.csvs {
        fs::write(sub.join(file), body).with_context(|| format!("writing {file}"))?;
    }
    let record = ReportRecord {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: hash,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outcome,
    };
    fs::write(sub.join("report.json"), serde_json::to_string_pretty(&record)?)?;
    fs::write(sub.join("summary.txt"), summary_text(std::slice::from_ref(outcome)))?;
    Ok(())
}

/// Human-readable summary of `outcomes`.
pub fn summary_text(outcomes: &[Outcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&format!("== {} [{}]\n", o.name, if o.pass { "PASS" } else { "FAIL" }));
        for line in &o.summary {
            s.push_str(&format!("   {line}\n"));
        }
    }
    s
}

fn run_all(names: &[&str], cfg: &ExperimentConfig, opts: RunOptions) -> Vec<(Outcome, u128)> {
    let one = |name: &&str| {
        let started = now_ms();
        (run_experiment(name, cfg, opts), started)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        names.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        names.iter().map(one).collect()
    }
}

/// Runs `command` (an experiment name or `full-suite`), writes artifacts
/// under `out`, and returns the outcomes in a fixed order.
pub fn execute(command: &str, cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<Vec<Outcome>> {
    let names: Vec<&str> = if command == "full-suite" {
        EXPERIMENTS.to_vec()
    } else {
        vec![command]
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let hash = cfg.hash();
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    let results = run_all(&names, cfg, opts);
    for (o, started) in &results {
        write_outcome(out, o, &hash, *started)?;
    }
    let outcomes: Vec<Outcome> = results.into_iter().map(|(o, _)| o).collect();
    let text = summary_text(&outcomes);
    fs::write(out.join("summary.txt"), &text)?;
    Ok(outcomes)
}

/// Default output directory for `command`.
pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from("results").join(command)
}
