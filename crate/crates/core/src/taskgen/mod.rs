//! Scenario generation: asset-pool sampling, prompt assembly, strict reply
//! parsing with bounded repair, and a template-driven offline generator.

mod backend;
mod mock;
mod pool;
mod prompt;
mod reply;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{eval_atom, AtomContext};
use crate::layout::{construct_layout, Layout, LayoutConfig, TableSpec};
use crate::relations::RelationThresholds;
use crate::scene::{AssetRecord, ScenarioError, TaskScenario, TaskType};
use crate::sim::{plan_demonstration, SimConfig};

pub use backend::{
    load_transcript, write_transcript, BackendError, CompletionBackend, MockBackend, RecordingBackend,
    TranscriptBackend, TranscriptRecord,
};
pub use mock::mock_generate;
pub use pool::{distractor_pairs, sample_pool, POOL_SIZE};
pub use prompt::{build_prompt, task_fragment, with_feedback};
pub use reply::{extract_block, parse_reply, sanitize};

/// Placed objects per scene when the request does not say otherwise.
pub const DEFAULT_NUM_OBJECTS: usize = 5;

/// Upper bound on repair rounds after the first attempt.
pub const MAX_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub task_type: TaskType,
    pub pool: Vec<AssetRecord>,
    pub num_objects_min: usize,
    pub seed: u64,
    /// Goal atoms per conjunction for long-horizon tasks; 2 or 3 at random
    /// when unset.
    pub horizon: Option<usize>,
}

impl GenerationRequest {
    pub fn new(task_type: TaskType, pool: Vec<AssetRecord>, seed: u64) -> Self {
        Self {
            task_type,
            pool,
            num_objects_min: DEFAULT_NUM_OBJECTS,
            seed,
            horizon: None,
        }
    }

    pub fn validate(&self) -> Result<(), TaskgenError> {
        if self.pool.is_empty() {
            return Err(TaskgenError::InvalidRequest("asset pool is empty".into()));
        }
        if self.num_objects_min == 0 || self.num_objects_min > self.pool.len() {
            return Err(TaskgenError::InvalidRequest(format!(
                "num_objects_min {} outside 1..={}",
                self.num_objects_min,
                self.pool.len()
            )));
        }
        if let Some(h) = self.horizon {
            if !(1..=3).contains(&h) {
                return Err(TaskgenError::InvalidRequest(format!("horizon {h} outside 1..=3")));
            }
        }
        Ok(())
    }

    pub fn scenario_id(&self) -> String {
        format!("{}-{:016x}", self.task_type, self.seed)
    }
}

/// Geometry and limits used to check that generated scenarios are executable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub retries: usize,
    pub table: TableSpec,
    pub layout: LayoutConfig,
    pub thresholds: RelationThresholds,
    pub sim: SimConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            retries: MAX_RETRIES,
            table: TableSpec::default(),
            layout: LayoutConfig::default(),
            thresholds: RelationThresholds::default(),
            sim: SimConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TaskgenError {
    #[error("catalog has {have} assets, {need} required")]
    CatalogTooSmall { have: usize, need: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("reply contains no JSON object")]
    NoStructuredBlock,
    #[error(transparent)]
    Reply(#[from] ScenarioError),
    #[error("not executable: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("gave up after {} attempts: {}", .diagnostics.len(), .diagnostics.join(" | "))]
    RetriesExhausted { diagnostics: Vec<String> },
}

/// Builds the initial layout the pipeline will use for `s`.
pub fn probe_layout(s: &TaskScenario, cfg: &GenerationConfig) -> Result<Layout, TaskgenError> {
    construct_layout(s, &cfg.table, s.seed, &cfg.layout, &cfg.thresholds)
        .map_err(|e| TaskgenError::Infeasible(e.to_string()))
}

/// Layout probe plus: no goal atom already holds on the initial layout, and
/// the oracle finds a demonstration.
pub fn probe_demonstration(s: &TaskScenario, cfg: &GenerationConfig) -> Result<Layout, TaskgenError> {
    let layout = probe_layout(s, cfg)?;
    let ctx = AtomContext::from_world(&layout, None, &cfg.thresholds);
    for atom in s.goals.atoms() {
        let holds = eval_atom(atom, &ctx).map_err(|e| TaskgenError::Infeasible(e.to_string()))?;
        if holds {
            return Err(TaskgenError::Infeasible(format!(
                "goal atom on {} already holds in the initial layout",
                atom.obj1_uid
            )));
        }
    }
    plan_demonstration(s, &layout, &cfg.sim, &cfg.thresholds).map_err(|e| TaskgenError::Infeasible(e.to_string()))?;
    Ok(layout)
}

/// Prompt, parse and probe, feeding each rejection back into the next
/// prompt. Transport errors end generation at once.
pub fn generate(
    req: &GenerationRequest,
    backend: &mut dyn CompletionBackend,
    cfg: &GenerationConfig,
) -> Result<TaskScenario, TaskgenError> {
    req.validate()?;
    let base = build_prompt(req);
    let mut diagnostics: Vec<String> = Vec::new();
    for _ in 0..=cfg.retries.min(MAX_RETRIES) {
        let prompt = match diagnostics.last() {
            Some(d) => with_feedback(&base, d),
            None => base.clone(),
        };
        let text = backend.complete(&prompt)?;
        let attempt = parse_reply(&text, req).and_then(|s| probe_layout(&s, cfg).map(|_| s));
        match attempt {
            Ok(s) => return Ok(s),
            Err(e) => diagnostics.push(e.to_string()),
        }
    }
    Err(TaskgenError::RetriesExhausted { diagnostics })
}
