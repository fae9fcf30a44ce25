//! Writes a preset's outcome to disk: `data/<table>.csv`, `summary.json`
//! and `manifest.json` under the run's output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::lab::config::ResolvedConfig;
use crate::lab::presets::{run_preset, Outcome, Table, Verdict};

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub name: String,
    pub preset: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub scenarios: usize,
    pub started: String,
    pub finished: String,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

fn write_table(dir: &Path, t: &Table) -> Result<String> {
    let rel = format!("data/{}.csv", t.name);
    let mut w = csv::Writer::from_path(dir.join(&rel))?;
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(rel)
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let s = serde_json::to_string_pretty(v)?;
    fs::write(path, s + "\n")?;
    Ok(())
}

/// Run the config's preset and write all artefacts. Returns the manifest
/// whether or not the verdicts passed; errors are runtime failures only.
pub fn run_experiment(cfg: &ResolvedConfig) -> Result<RunManifest> {
    let started = chrono::Utc::now().to_rfc3339();
    let outcome = run_preset(cfg)?;
    let finished = chrono::Utc::now().to_rfc3339();
    write_outcome(cfg, &outcome, started, finished)
}

pub fn write_outcome(cfg: &ResolvedConfig, outcome: &Outcome, started: String, finished: String) -> Result<RunManifest> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir.join("data"))?;
    let mut files = Vec::new();
    for t in &outcome.tables {
        if t.name.contains(['/', '\\']) {
            return Err(LabError::InvalidArgument(format!("bad table name '{}'", t.name)));
        }
        files.push(write_table(dir, t)?);
    }
    let summary = json!({
        "preset": cfg.preset,
        "config": cfg.to_json(),
        "results": Value::Object(outcome.summary.clone()),
        "verdicts": outcome.verdicts,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    files.push("summary.json".into());
    files.push("manifest.json".into());
    let manifest = RunManifest {
        name: cfg.name.clone(),
        preset: cfg.preset.clone(),
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        scenarios: cfg.scenarios,
        started,
        finished,
        files,
        verdicts: outcome.verdicts.clone(),
        passed: outcome.passed(),
        output_dir: dir.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
