//! Experiment configs. A config file is JSON; CLI flags override scalar
//! fields, and preset defaults fill whatever is left (flags > file > defaults).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::lab::presets::{find_preset, Preset};
use crate::timebase::{GridSpec, TimeGrid};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "LAB_OUTPUT_ROOT";

/// Config as written in a file. Missing fields take preset defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run name, also the output subdirectory. Defaults to the preset name.
    #[serde(default)]
    pub name: Option<String>,
    pub preset: String,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub scenarios: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Preset parameters; each preset rejects keys it does not know.
    #[serde(default)]
    pub params: Option<serde_json::Value>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Acceptance thresholds; keys must be declared by the preset.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    /// Worker threads for scenario parallelism (results do not depend on it).
    #[serde(default)]
    pub workers: Option<usize>,
}

/// Scalar overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub scenarios: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Fully resolved config handed to a preset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub name: String,
    pub preset: String,
    pub grid: Option<GridSpec>,
    pub scenarios: usize,
    pub seed: u64,
    pub params: serde_json::Value,
    pub output_dir: PathBuf,
    pub thresholds: BTreeMap<String, f64>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Minimal config for a preset.
    pub fn for_preset(preset: &str) -> Self {
        ExperimentConfig { preset: preset.into(), ..Default::default() }
    }

    pub fn resolve(&self, ov: &Overrides) -> Result<ResolvedConfig> {
        let preset: &Preset =
            find_preset(&self.preset).ok_or_else(|| LabError::Config(format!("unknown preset '{}'", self.preset)))?;
        let name = ov.name.clone().or_else(|| self.name.clone()).unwrap_or_else(|| preset.name.to_string());
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(LabError::Config(format!("invalid run name '{name}'")));
        }
        let seed = ov.seed.or(self.seed).unwrap_or(1);
        let scenarios = ov.scenarios.or(self.scenarios).unwrap_or(preset.default_scenarios);
        if seed == 0 {
            return Err(LabError::Config("seed must be positive".into()));
        }
        if scenarios == 0 {
            return Err(LabError::Config("scenario count must be positive".into()));
        }
        let workers = ov.workers.or(self.workers);
        if workers == Some(0) {
            return Err(LabError::Config("workers must be positive".into()));
        }
        let grid = self.grid.clone().or_else(|| preset.default_grid());
        if let Some(g) = &grid {
            g.build().map_err(|e| LabError::Config(format!("bad grid: {e}")))?;
        }
        let mut thresholds: BTreeMap<String, f64> =
            preset.thresholds.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for (k, v) in &self.thresholds {
            match thresholds.get_mut(k) {
                Some(slot) if v.is_finite() => *slot = *v,
                Some(_) => return Err(LabError::Config(format!("threshold '{k}' must be finite"))),
                None => {
                    return Err(LabError::Config(format!(
                        "preset '{}' has no threshold '{k}' (known: {})",
                        preset.name,
                        preset.thresholds.iter().map(|t| t.0).collect::<Vec<_>>().join(", ")
                    )))
                }
            }
        }
        let params = self.params.clone().unwrap_or(serde_json::Value::Object(Default::default()));
        if !params.is_object() {
            return Err(LabError::Config("params must be a JSON object".into()));
        }
        // parse once so that bad parameters surface as config errors
        (preset.check_params)(&params)?;
        let output_dir = match ov.output_dir.clone().or_else(|| self.output_dir.clone()) {
            Some(d) => d,
            None => std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("lab-output")).join(&name),
        };
        Ok(ResolvedConfig { name, preset: preset.name.into(), grid, scenarios, seed, params, output_dir, thresholds, workers })
    }
}

impl ResolvedConfig {
    /// SHA-256 of the resolved config without the output location and
    /// worker count, which do not affect results.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(&self.to_json()).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Everything that affects results.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "preset": self.preset,
            "grid": self.grid,
            "scenarios": self.scenarios,
            "seed": self.seed,
            "params": self.params,
            "thresholds": self.thresholds,
        })
    }

    pub fn grid(&self) -> Result<Option<TimeGrid>> {
        self.grid.as_ref().map(|g| g.build()).transpose()
    }

    pub fn threshold(&self, key: &str) -> f64 {
        *self.thresholds.get(key).unwrap_or_else(|| panic!("preset reads undeclared threshold '{key}'"))
    }

    /// Typed preset parameters (unknown keys rejected by the target type).
    pub fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.params.clone()).map_err(|e| LabError::Config(format!("bad params for '{}': {e}", self.preset)))
    }
}
