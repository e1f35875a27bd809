//! Engine configuration: JSON file, then `TABLETASK_*` environment
//! variables, then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tabletask_core::layout::{LayoutConfig, TableSpec};
use tabletask_core::relations::RelationThresholds;
use tabletask_core::scene::{load_catalog, synthetic_catalog, AssetRecord};
use tabletask_core::sim::SimConfig;
use tabletask_core::taskgen::{GenerationConfig, DEFAULT_NUM_OBJECTS, MAX_RETRIES};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    Live,
    Transcript,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "live" => Ok(BackendKind::Live),
            "transcript" => Ok(BackendKind::Transcript),
            other => Err(format!("unknown backend {other:?} (mock, live, transcript)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskgenConfig {
    pub backend: BackendKind,
    /// Replies replayed by the transcript backend.
    pub transcript: Option<PathBuf>,
    pub retries: usize,
    pub num_objects: usize,
    pub timeout_secs: u64,
    pub base_url_env: String,
    pub model_env: String,
    pub api_key_env: String,
}

impl Default for TaskgenConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Mock,
            transcript: None,
            retries: MAX_RETRIES,
            num_objects: DEFAULT_NUM_OBJECTS,
            timeout_secs: 60,
            base_url_env: "TABLETASK_LLM_BASE_URL".into(),
            model_env: "TABLETASK_LLM_MODEL".into(),
            api_key_env: "TABLETASK_LLM_API_KEY".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    /// JSON Lines asset catalog; the synthetic catalog when unset.
    pub catalog: Option<PathBuf>,
    pub catalog_seed: u64,
    pub seed: u64,
    pub table: TableSpec,
    pub thresholds: RelationThresholds,
    pub layout: LayoutConfig,
    pub sim: SimConfig,
    pub taskgen: TaskgenConfig,
}

/// Values given on the command line; `None` leaves the layered value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub catalog: Option<PathBuf>,
    pub backend: Option<BackendKind>,
    pub near_threshold: Option<f64>,
    pub touch_threshold: Option<f64>,
    pub between_angle: Option<f64>,
    pub max_attempts: Option<usize>,
    pub budget: Option<usize>,
}

fn parse_env<T: std::str::FromStr>(name: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Usage(format!("environment variable {name}={value:?}: {e}")))
}

impl EngineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Layers environment overrides looked up through `env`.
    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = env("TABLETASK_SEED") {
            self.seed = parse_env("TABLETASK_SEED", &v)?;
        }
        if let Some(v) = env("TABLETASK_CATALOG") {
            self.catalog = Some(PathBuf::from(v));
        }
        if let Some(v) = env("TABLETASK_BACKEND") {
            self.taskgen.backend = parse_env("TABLETASK_BACKEND", &v)?;
        }
        if let Some(v) = env("TABLETASK_TRANSCRIPT") {
            self.taskgen.transcript = Some(PathBuf::from(v));
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.catalog {
            self.catalog = Some(v.clone());
        }
        if let Some(v) = o.backend {
            self.taskgen.backend = v;
        }
        if let Some(v) = o.near_threshold {
            self.thresholds.xy_close = v;
        }
        if let Some(v) = o.touch_threshold {
            self.thresholds.touching = v;
        }
        if let Some(v) = o.between_angle {
            self.thresholds.between_angle_max = v;
        }
        if let Some(v) = o.max_attempts {
            self.layout.max_attempts = v;
        }
        if let Some(v) = o.budget {
            self.sim.budget = v;
        }
    }

    /// File, then process environment, then flags; validated.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Usage(format!("invalid configuration: {m}")));
        if let Err(e) = self.table.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.thresholds.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.sim.validate() {
            return bad(e);
        }
        if self.layout.max_attempts == 0 || self.layout.retry_rounds == 0 {
            return bad("layout.max_attempts and layout.retry_rounds must be positive".into());
        }
        let t = &self.taskgen;
        if t.retries > MAX_RETRIES {
            return bad(format!("taskgen.retries must be at most {MAX_RETRIES}"));
        }
        if t.num_objects == 0 {
            return bad("taskgen.num_objects must be positive".into());
        }
        if t.timeout_secs == 0 {
            return bad("taskgen.timeout_secs must be positive".into());
        }
        if t.backend == BackendKind::Transcript && t.transcript.is_none() {
            return bad("the transcript backend needs taskgen.transcript".into());
        }
        Ok(())
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            retries: self.taskgen.retries,
            table: self.table,
            layout: self.layout.clone(),
            thresholds: self.thresholds,
            sim: self.sim.clone(),
        }
    }

    pub fn catalog(&self) -> Result<Vec<AssetRecord>> {
        match &self.catalog {
            Some(p) => load_catalog(p).map_err(|e| CliError::Validation(e.to_string())),
            None => Ok(synthetic_catalog(self.catalog_seed)),
        }
    }
}
