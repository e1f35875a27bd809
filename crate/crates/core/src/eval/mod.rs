//! Goal-condition checking on a final layout and the SR / SPL aggregates.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{Layout, PlacedObject};
use crate::relations::{infer_between, layout_clouds, relations_from_clouds, RelationThresholds, RelationTriple};
use crate::scene::{GoalAtom, GoalConditionSet, PointCloud, RelationLabel};

pub use report::{report, BenchmarkReport, ReportRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown object {0}")]
    UnknownUid(String),
    #[error("no episode results")]
    Empty,
    #[error("result references unknown scenario {0}")]
    DanglingScenario(String),
}

/// Everything an atom can be checked against: inferred relations, object
/// states and the clouds used for ternary relations.
#[derive(Debug, Clone)]
pub struct AtomContext {
    pub relations: BTreeSet<RelationTriple>,
    pub states: BTreeMap<String, Option<String>>,
    pub clouds: BTreeMap<String, PointCloud>,
    pub thresholds: RelationThresholds,
}

impl AtomContext {
    /// Context for a layout plus an optionally held object. A held object
    /// keeps its state but takes part in no relation.
    pub fn from_world(layout: &Layout, held: Option<&PlacedObject>, th: &RelationThresholds) -> Self {
        let clouds = layout_clouds(layout);
        let relations = relations_from_clouds(&clouds, th);
        let states = layout
            .objects
            .iter()
            .chain(held)
            .map(|o| (o.uid.clone(), o.state.clone()))
            .collect();
        Self {
            relations,
            states,
            clouds,
            thresholds: *th,
        }
    }

    fn check_uid(&self, uid: &str) -> Result<(), EvalError> {
        if self.states.contains_key(uid) {
            Ok(())
        } else {
            Err(EvalError::UnknownUid(uid.to_string()))
        }
    }
}

/// An atom holds when its state (if any) matches and its relation (if any)
/// is inferred in the context.
pub fn eval_atom(atom: &GoalAtom, ctx: &AtomContext) -> Result<bool, EvalError> {
    for uid in atom.uids() {
        ctx.check_uid(uid)?;
    }
    if let Some(state) = &atom.obj1_state {
        if ctx.states[&atom.obj1_uid].as_deref() != Some(state.as_str()) {
            return Ok(false);
        }
    }
    let (Some(rel), Some(anchor)) = (atom.relation, atom.obj2_uid.as_deref()) else {
        return Ok(true);
    };
    if rel == RelationLabel::Between {
        let Some(second) = atom.obj3_uid.as_deref() else {
            return Ok(false);
        };
        let clouds = (ctx.clouds.get(anchor), ctx.clouds.get(&atom.obj1_uid), ctx.clouds.get(second));
        return match clouds {
            (Some(a), Some(b), Some(c)) => Ok(infer_between(a, b, c, &ctx.thresholds).unwrap_or(false)),
            _ => Ok(false),
        };
    }
    Ok(ctx.relations.contains(&RelationTriple::new(&atom.obj1_uid, rel, anchor)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub atom_results: Vec<Vec<bool>>,
    pub score: f64,
    pub success: bool,
}

/// Fraction of satisfied atoms in the best disjunct.
pub fn episode_score(goals: &GoalConditionSet, ctx: &AtomContext) -> Result<Score, EvalError> {
    let mut atom_results = Vec::with_capacity(goals.disjuncts.len());
    let mut best: f64 = 0.0;
    for conj in &goals.disjuncts {
        let hits = conj.iter().map(|a| eval_atom(a, ctx)).collect::<Result<Vec<_>, _>>()?;
        if !hits.is_empty() {
            let frac = hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64;
            best = best.max(frac);
        }
        atom_results.push(hits);
    }
    let success = atom_results.iter().any(|h| !h.is_empty() && h.iter().all(|x| *x));
    Ok(Score {
        atom_results,
        score: best,
        success,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario_id: String,
    pub atom_results: Vec<Vec<bool>>,
    pub score: f64,
    pub success: bool,
    /// Shortest path length (m).
    pub l: f64,
    /// Executed effector path length (m).
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<String>,
}

impl EpisodeResult {
    /// This episode's term in the SPL sum.
    pub fn spl_term(&self) -> f64 {
        let denom = self.p.max(self.l);
        if denom == 0.0 {
            self.score
        } else {
            self.score * self.l / denom
        }
    }
}

pub fn sr(results: &[EpisodeResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(results.iter().map(|r| r.score).sum::<f64>() / results.len() as f64)
}

pub fn spl(results: &[EpisodeResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(results.iter().map(EpisodeResult::spl_term).sum::<f64>() / results.len() as f64)
}

#[cfg(test)]
mod tests;
