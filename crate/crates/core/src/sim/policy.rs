use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Observation, OraclePolicy, SkillCall};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct PolicyError(pub String);

/// Chooses the next skill from an observation. An error ends the episode
/// as a skill fault.
pub trait Policy {
    fn name(&self) -> String;
    fn next_skill(&mut self, obs: &Observation) -> Result<SkillCall, PolicyError>;
}

/// Declares done immediately.
#[derive(Debug, Default, Clone)]
pub struct NullPolicy;

impl Policy for NullPolicy {
    fn name(&self) -> String {
        "null".into()
    }

    fn next_skill(&mut self, _: &Observation) -> Result<SkillCall, PolicyError> {
        Ok(SkillCall::Done)
    }
}

/// Replays a fixed skill list, then declares done.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    calls: Vec<SkillCall>,
    next: usize,
}

impl ScriptedPolicy {
    pub fn new(calls: Vec<SkillCall>) -> Self {
        Self { calls, next: 0 }
    }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn next_skill(&mut self, _: &Observation) -> Result<SkillCall, PolicyError> {
        let call = self.calls.get(self.next).cloned().unwrap_or(SkillCall::Done);
        self.next += 1;
        Ok(call)
    }
}

/// The oracle with each skill failing independently with probability
/// `failure`; a failed skill ends the episode.
pub struct NoisyPolicy {
    inner: OraclePolicy,
    failure: f64,
    rng: ChaCha8Rng,
}

impl NoisyPolicy {
    pub fn new(inner: OraclePolicy, failure: f64, seed: u64) -> Self {
        Self {
            inner,
            failure: failure.clamp(0.0, 1.0),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for NoisyPolicy {
    fn name(&self) -> String {
        format!("noisy:{}", self.failure)
    }

    fn next_skill(&mut self, obs: &Observation) -> Result<SkillCall, PolicyError> {
        let call = self.inner.next_skill(obs)?;
        if call != SkillCall::Done && self.rng.gen::<f64>() < self.failure {
            return Err(PolicyError(format!("injected failure on {}", skill_name(&call))));
        }
        Ok(call)
    }
}

pub(crate) fn skill_name(call: &SkillCall) -> &'static str {
    match call {
        SkillCall::Pick { .. } => "pick",
        SkillCall::Place(_) => "place",
        SkillCall::SetState { .. } => "set_state",
        SkillCall::Done => "done",
    }
}
