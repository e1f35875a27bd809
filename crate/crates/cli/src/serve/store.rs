//! Curation store: scenarios, their layouts and review records, with one
//! version token per scenario and every mutation validated before it is
//! written back to the run directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tabletask_core::eval::{episode_score, AtomContext};
use tabletask_core::layout::{construct_layout, support_base_z, Layout};
use tabletask_core::relations::{scene_relations, RelationTriple};
use tabletask_core::scene::{
    save_scenario, scenario_doc, validate_scenario, Box3, GoalAtom, ScenarioDoc, SceneGraphEdge, SceneGraphNode,
    TaskScenario, TaskType,
};
use tabletask_core::sim::plan_demonstration;
use thiserror::Error;

use crate::config::EngineConfig;
use crate::error::CliError;
use crate::run::{write_atomic, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Draft,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    /// Seconds since the Unix epoch.
    pub at: u64,
    pub kind: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationRecord {
    pub scenario_id: String,
    pub status: Status,
    pub note: String,
    pub version: u64,
    pub history: Vec<Edit>,
}

impl CurationRecord {
    fn new(id: &str) -> Self {
        Self {
            scenario_id: id.to_string(),
            status: Status::Draft,
            note: String::new(),
            version: 1,
            history: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no scenario {0}")]
    NotFound(String),
    #[error("version {given} is stale; current version is {current}")]
    Conflict { given: u64, current: u64 },
    #[error("{message}")]
    Invalid { message: String, diagnostics: Vec<String> },
    #[error("{0}")]
    Io(String),
}

impl StoreError {
    fn invalid(message: impl Into<String>) -> Self {
        StoreError::Invalid {
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub id: String,
    pub task_type: TaskType,
    pub status: Status,
    pub version: u64,
    pub instruction: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomStatus {
    pub atom: GoalAtom,
    pub satisfied: bool,
}

/// Everything the inspector shows for one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioView {
    pub id: String,
    pub status: Status,
    pub note: String,
    pub version: u64,
    pub scenario: ScenarioDoc,
    pub layout: Option<Layout>,
    pub relations: Vec<RelationTriple>,
    pub goals: Vec<Vec<AtomStatus>>,
    pub score: Option<f64>,
    pub history: Vec<Edit>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Move {
    pub uid: String,
    pub xy: [f64; 2],
    #[serde(default)]
    pub yaw: Option<f64>,
    /// New supporter; the current one when absent.
    #[serde(default)]
    pub support_uid: Option<String>,
    #[serde(default)]
    pub inside: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutEdit {
    pub version: u64,
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphEdit {
    pub version: u64,
    pub instruction: Option<String>,
    pub add_nodes: Vec<String>,
    pub remove_nodes: Vec<String>,
    pub add_edges: Vec<SceneGraphEdge>,
    pub remove_edges: Vec<SceneGraphEdge>,
    /// Initial states by uid; `null` clears.
    pub states: BTreeMap<String, Option<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolveRequest {
    pub version: u64,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusChange {
    pub version: u64,
    pub status: Status,
    #[serde(default)]
    pub note: String,
}

struct Entry {
    scenario: TaskScenario,
    layout: Option<Layout>,
    record: CurationRecord,
}

pub struct Store {
    run: RunDir,
    cfg: EngineConfig,
    entries: BTreeMap<String, Mutex<Entry>>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Repositions one object (and whatever rests on it) on `layout`.
pub fn apply_move(layout: &mut Layout, m: &Move) -> Result<(), String> {
    let obj = layout.get(&m.uid).cloned().ok_or_else(|| format!("unknown object {}", m.uid))?;
    let support = m.support_uid.clone().unwrap_or_else(|| obj.support_uid.clone());
    if support == m.uid || layout.support_chain(&support).contains(&m.uid) {
        return Err(format!("{} cannot rest on itself or on what it carries", m.uid));
    }
    let inside = m.inside.unwrap_or(if support == obj.support_uid { obj.inside } else { false });
    let yaw = m.yaw.unwrap_or(obj.bbox.yaw);
    if !(m.xy.iter().all(|v| v.is_finite()) && yaw.is_finite()) {
        return Err("pose must be finite".into());
    }
    let base = support_base_z(layout, &support, inside).ok_or_else(|| format!("unknown support {support}"))?;
    let half = obj.bbox.half_extents;
    let bbox = Box3::new([m.xy[0], m.xy[1], base + half[2]], half, yaw);
    let delta = [0, 1, 2].map(|k| bbox.center[k] - obj.bbox.center[k]);
    let carried: Vec<String> = layout
        .objects
        .iter()
        .filter(|o| layout.support_chain(&o.uid).contains(&m.uid))
        .map(|o| o.uid.clone())
        .collect();
    let o = layout.get_mut(&m.uid).expect("present");
    o.bbox = bbox;
    o.support_uid = support;
    o.inside = inside;
    for uid in carried {
        let c = layout.get_mut(&uid).expect("present");
        for (v, d) in c.bbox.center.iter_mut().zip(delta) {
            *v += d;
        }
    }
    Ok(())
}

impl Store {
    /// Loads every scenario of the run; scenarios without a layout file get
    /// one built on the spot when feasible.
    pub fn open(run: RunDir, cfg: EngineConfig) -> Result<Self, CliError> {
        let gen = cfg.generation();
        let mut entries = BTreeMap::new();
        for scenario in run.load_scenarios()? {
            let layout = match run.load_layout(&scenario.id) {
                Ok(l) => Some(l),
                Err(_) => construct_layout(&scenario, &gen.table, scenario.seed, &gen.layout, &gen.thresholds).ok(),
            };
            let path = run.curation_path(&scenario.id);
            let record = match fs::read_to_string(&path) {
                Ok(text) => serde_json::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
                Err(_) => CurationRecord::new(&scenario.id),
            };
            entries.insert(scenario.id.clone(), Mutex::new(Entry { scenario, layout, record }));
        }
        fs::create_dir_all(run.curation()).map_err(|e| CliError::io(&run.curation(), e))?;
        fs::create_dir_all(run.layouts()).map_err(|e| CliError::io(&run.layouts(), e))?;
        Ok(Self { run, cfg, entries })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn run(&self) -> &RunDir {
        &self.run
    }

    fn entry(&self, id: &str) -> Result<std::sync::MutexGuard<'_, Entry>, StoreError> {
        let m = self.entries.get(id).ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        Ok(m.lock().unwrap_or_else(|p| p.into_inner()))
    }

    pub fn summaries(&self) -> Vec<Summary> {
        self.entries
            .values()
            .map(|m| {
                let e = m.lock().unwrap_or_else(|p| p.into_inner());
                Summary {
                    id: e.scenario.id.clone(),
                    task_type: e.scenario.task_type,
                    status: e.record.status,
                    version: e.record.version,
                    instruction: e.scenario.instruction.clone(),
                }
            })
            .collect()
    }

    fn view_of(&self, e: &Entry) -> ScenarioView {
        let th = &self.cfg.thresholds;
        let (relations, goals, score) = match &e.layout {
            Some(layout) => {
                let ctx = AtomContext::from_world(layout, None, th);
                let scored = episode_score(&e.scenario.goals, &ctx).ok();
                let goals = e
                    .scenario
                    .goals
                    .disjuncts
                    .iter()
                    .enumerate()
                    .map(|(i, conj)| {
                        conj.iter()
                            .enumerate()
                            .map(|(j, atom)| AtomStatus {
                                atom: atom.clone(),
                                satisfied: scored.as_ref().is_some_and(|s| s.atom_results[i][j]),
                            })
                            .collect()
                    })
                    .collect();
                let relations = scene_relations(layout, th).into_iter().collect();
                (relations, goals, scored.map(|s| s.score))
            }
            None => {
                let goals = e
                    .scenario
                    .goals
                    .disjuncts
                    .iter()
                    .map(|conj| {
                        conj.iter()
                            .map(|atom| AtomStatus {
                                atom: atom.clone(),
                                satisfied: false,
                            })
                            .collect()
                    })
                    .collect();
                (Vec::new(), goals, None)
            }
        };
        ScenarioView {
            id: e.scenario.id.clone(),
            status: e.record.status,
            note: e.record.note.clone(),
            version: e.record.version,
            scenario: scenario_doc(&e.scenario),
            layout: e.layout.clone(),
            relations,
            goals,
            score,
            history: e.record.history.clone(),
        }
    }

    pub fn view(&self, id: &str) -> Result<ScenarioView, StoreError> {
        let e = self.entry(id)?;
        Ok(self.view_of(&e))
    }

    fn persist(&self, e: &Entry) -> Result<(), StoreError> {
        let id = &e.scenario.id;
        let io = |err: CliError| StoreError::Io(err.to_string());
        write_atomic(&self.run.scenario_path(id), &save_scenario(&e.scenario)).map_err(io)?;
        match &e.layout {
            Some(l) => write_atomic(&self.run.layout_path(id), &l.to_json()).map_err(io)?,
            None => {
                let _ = fs::remove_file(self.run.layout_path(id));
            }
        }
        let mut record = serde_json::to_string_pretty(&e.record).expect("record serializes");
        record.push('\n');
        write_atomic(&self.run.curation_path(id), &record).map_err(io)
    }

    /// Checks the token, applies `change` to a copy, persists, bumps the
    /// version. Nothing changes when `change` fails.
    fn mutate(
        &self,
        id: &str,
        version: u64,
        kind: &str,
        change: impl FnOnce(&mut Entry) -> Result<String, StoreError>,
    ) -> Result<ScenarioView, StoreError> {
        let mut guard = self.entry(id)?;
        if guard.record.version != version {
            return Err(StoreError::Conflict {
                given: version,
                current: guard.record.version,
            });
        }
        let mut next = Entry {
            scenario: guard.scenario.clone(),
            layout: guard.layout.clone(),
            record: guard.record.clone(),
        };
        if kind != "status" && next.record.status != Status::Draft {
            return Err(StoreError::invalid(format!(
                "scenario is {:?}; reopen it as draft before editing",
                next.record.status
            ).to_lowercase()));
        }
        let summary = change(&mut next)?;
        next.record.version += 1;
        next.record.history.push(Edit {
            at: now(),
            kind: kind.to_string(),
            summary,
        });
        self.persist(&next)?;
        *guard = next;
        Ok(self.view_of(&guard))
    }

    pub fn edit_layout(&self, id: &str, edit: &LayoutEdit) -> Result<ScenarioView, StoreError> {
        self.mutate(id, edit.version, "layout", |e| {
            let layout = e.layout.as_mut().ok_or_else(|| StoreError::invalid("scenario has no layout; resolve it first"))?;
            for m in &edit.moves {
                apply_move(layout, m).map_err(StoreError::invalid)?;
            }
            layout.check_invariants().map_err(StoreError::invalid)?;
            let moved: Vec<&str> = edit.moves.iter().map(|m| m.uid.as_str()).collect();
            Ok(format!("moved {}", moved.join(", ")))
        })
    }

    pub fn edit_graph(&self, id: &str, edit: &GraphEdit) -> Result<ScenarioView, StoreError> {
        let gen = self.cfg.generation();
        self.mutate(id, edit.version, "graph", |e| {
            let s = &mut e.scenario;
            let g = &mut s.scene_graph;
            if let Some(text) = &edit.instruction {
                s.instruction = text.trim().to_string();
            }
            let before: BTreeSet<String> = g.uids().map(str::to_string).collect();
            g.nodes.retain(|n| !edit.remove_nodes.contains(&n.object_uid));
            g.edges
                .retain(|x| !edit.remove_nodes.contains(&x.object_uid) && !edit.remove_nodes.contains(&x.anchor_uid));
            for uid in &edit.add_nodes {
                if !g.contains(uid) {
                    g.nodes.push(SceneGraphNode {
                        object_uid: uid.clone(),
                        state: None,
                    });
                }
            }
            for edge in &edit.remove_edges {
                let n = g.edges.len();
                g.edges.retain(|x| x != edge);
                if g.edges.len() == n {
                    return Err(StoreError::invalid(format!(
                        "no edge {} {} {}",
                        edge.object_uid, edge.relation, edge.anchor_uid
                    )));
                }
            }
            for edge in &edit.add_edges {
                if !g.edges.contains(edge) {
                    g.edges.push(edge.clone());
                }
            }
            for (uid, state) in &edit.states {
                let node = g
                    .nodes
                    .iter_mut()
                    .find(|n| &n.object_uid == uid)
                    .ok_or_else(|| StoreError::invalid(format!("no node {uid}")))?;
                node.state = state.clone();
            }
            validate_scenario(s).map_err(|err| StoreError::invalid(err.to_string()))?;

            let after: BTreeSet<String> = s.scene_graph.uids().map(str::to_string).collect();
            if before != after {
                let layout = construct_layout(s, &gen.table, s.seed, &gen.layout, &gen.thresholds)
                    .map_err(|err| StoreError::invalid(format!("no feasible layout after the edit: {err}")))?;
                e.layout = Some(layout);
            } else if let Some(layout) = e.layout.as_mut() {
                for node in &s.scene_graph.nodes {
                    if let Some(o) = layout.get_mut(&node.object_uid) {
                        o.state = node.state.clone();
                    }
                }
            }
            Ok(format!(
                "+{} -{} edges, +{} -{} nodes, {} states",
                edit.add_edges.len(),
                edit.remove_edges.len(),
                edit.add_nodes.len(),
                edit.remove_nodes.len(),
                edit.states.len()
            ))
        })
    }

    pub fn resolve(&self, id: &str, req: &ResolveRequest) -> Result<ScenarioView, StoreError> {
        let gen = self.cfg.generation();
        self.mutate(id, req.version, "resolve", |e| {
            let seed = req.seed.unwrap_or(e.scenario.seed);
            let layout = construct_layout(&e.scenario, &gen.table, seed, &gen.layout, &gen.thresholds)
                .map_err(|err| StoreError::invalid(err.to_string()))?;
            e.layout = Some(layout);
            Ok(format!("layout rebuilt with seed {seed}"))
        })
    }

    /// Reasons the current layout cannot be accepted; empty when it can.
    fn acceptance_problems(&self, e: &Entry) -> Vec<String> {
        let th = &self.cfg.thresholds;
        let Some(layout) = &e.layout else {
            return vec!["no layout".into()];
        };
        let mut problems = Vec::new();
        if let Err(err) = layout.check_invariants() {
            problems.push(err);
        }
        let rels = scene_relations(layout, th);
        for edge in &e.scenario.scene_graph.edges {
            let t = RelationTriple::new(&edge.object_uid, edge.relation, &edge.anchor_uid);
            if !rels.contains(&t) {
                problems.push(format!(
                    "edge {} {} {} does not hold",
                    edge.object_uid, edge.relation, edge.anchor_uid
                ));
            }
        }
        if let Err(err) = plan_demonstration(&e.scenario, layout, &self.cfg.sim, th) {
            problems.push(err.to_string());
        }
        problems
    }

    pub fn set_status(&self, id: &str, change: &StatusChange) -> Result<ScenarioView, StoreError> {
        self.mutate(id, change.version, "status", |e| {
            let from = e.record.status;
            let allowed = matches!(
                (from, change.status),
                (Status::Draft, Status::Accepted)
                    | (Status::Draft, Status::Rejected)
                    | (Status::Accepted, Status::Draft)
                    | (Status::Rejected, Status::Draft)
            );
            if !allowed {
                return Err(StoreError::invalid(format!(
                    "cannot go from {from:?} to {:?}; reopen as draft first",
                    change.status
                )));
            }
            if change.status == Status::Accepted {
                let problems = self.acceptance_problems(e);
                if !problems.is_empty() {
                    return Err(StoreError::Invalid {
                        message: "scenario is not executable as laid out".into(),
                        diagnostics: problems,
                    });
                }
            }
            e.record.status = change.status;
            e.record.note = change.note.clone();
            Ok(format!("{from:?} -> {:?}", change.status).to_lowercase())
        })
    }
}
