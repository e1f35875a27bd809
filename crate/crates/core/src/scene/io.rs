//! Scenario and catalog file formats.
//!
//! A scenario file is one JSON document carrying the generation schema
//! (`instruction`, `goal_conditions`, `scene_graph`) plus `id`, `task_type`,
//! `seed` and `asset_pool`. Catalogs are JSON Lines, one [`AssetRecord`] per
//! line.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::{DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize};

use super::{
    validate_scenario, AssetRecord, GoalAtom, GoalConditionSet, RelationLabel, ScenarioError,
    SceneGraph, SceneGraphEdge, SceneGraphNode, SemanticError, TaskScenario, TaskType,
};

const NONE: &str = "none";

#[derive(Deserialize)]
#[serde(untagged)]
enum Loose {
    Text(String),
    Number(serde_json::Number),
}

impl Loose {
    fn into_string(self) -> String {
        match self {
            Loose::Text(s) => s,
            Loose::Number(n) => n.to_string(),
        }
    }
}

/// Accepts strings or bare numbers (uids are sometimes emitted unquoted).
fn de_text<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    Ok(Loose::deserialize(d)?.into_string())
}

fn de_opt_text<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    Ok(Option::<Loose>::deserialize(d)?.map(Loose::into_string))
}

fn is_none_word(s: &str) -> bool {
    matches!(s.trim().to_ascii_lowercase().as_str(), "" | "none" | "null" | "n/a")
}

fn present(value: Option<String>) -> Option<String> {
    value.filter(|v| !is_none_word(v)).map(|v| v.trim().to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomDoc {
    #[serde(default, deserialize_with = "de_opt_text")]
    pub obj1: Option<String>,
    #[serde(deserialize_with = "de_text")]
    pub obj1_uid: String,
    #[serde(default, deserialize_with = "de_opt_text")]
    pub obj1_state: Option<String>,
    #[serde(default, deserialize_with = "de_opt_text")]
    pub obj2: Option<String>,
    #[serde(default, deserialize_with = "de_opt_text")]
    pub obj2_uid: Option<String>,
    #[serde(default, deserialize_with = "de_opt_text")]
    pub position: Option<String>,
    #[serde(default, deserialize_with = "de_opt_text", skip_serializing_if = "Option::is_none")]
    pub obj3: Option<String>,
    #[serde(default, deserialize_with = "de_opt_text", skip_serializing_if = "Option::is_none")]
    pub obj3_uid: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDoc {
    #[serde(default, deserialize_with = "de_opt_text")]
    pub obj1: Option<String>,
    #[serde(deserialize_with = "de_text")]
    pub obj1_uid: String,
    #[serde(deserialize_with = "de_text")]
    pub position: String,
    #[serde(default, deserialize_with = "de_opt_text")]
    pub obj2: Option<String>,
    #[serde(deserialize_with = "de_text")]
    pub obj2_uid: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDoc {
    #[serde(deserialize_with = "de_text")]
    pub obj_uid: String,
    #[serde(default, deserialize_with = "de_opt_text")]
    pub state: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneGraphDoc {
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
    pub nodes: Vec<NodeDoc>,
}

/// The structured block a generation reply must contain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplyDoc {
    pub instruction: String,
    pub goal_conditions: Vec<Vec<AtomDoc>>,
    pub scene_graph: SceneGraphDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub id: String,
    pub task_type: TaskType,
    pub seed: u64,
    pub instruction: String,
    pub goal_conditions: Vec<Vec<AtomDoc>>,
    pub scene_graph: SceneGraphDoc,
    pub asset_pool: Vec<AssetRecord>,
}

/// Deserializes with the failing field path attached to the error.
pub(crate) fn from_json_text<T: DeserializeOwned>(text: &str) -> Result<T, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(classify)?;
    de.end().map_err(|e| ScenarioError::Parse(e.to_string()))?;
    Ok(value)
}

fn classify(err: serde_path_to_error::Error<serde_json::Error>) -> ScenarioError {
    let path = err.path().to_string();
    let inner = err.into_inner();
    match inner.classify() {
        serde_json::error::Category::Data => ScenarioError::schema(path, inner.to_string()),
        _ => ScenarioError::Parse(inner.to_string()),
    }
}

fn parse_relation(text: &str, path: String) -> Result<RelationLabel, ScenarioError> {
    text.parse::<RelationLabel>()
        .map_err(|_| ScenarioError::semantic(path, SemanticError::UnknownRelation(text.to_string())))
}

fn atom_from_doc(doc: &AtomDoc, path: &str) -> Result<GoalAtom, ScenarioError> {
    let relation = present(doc.position.clone())
        .map(|p| parse_relation(&p, format!("{path}.position")))
        .transpose()?;
    Ok(GoalAtom {
        obj1_uid: doc.obj1_uid.trim().to_string(),
        obj1_state: present(doc.obj1_state.clone()),
        obj2_uid: present(doc.obj2_uid.clone()),
        relation,
        obj3_uid: present(doc.obj3_uid.clone()),
    })
}

pub(crate) fn goals_from_doc(docs: &[Vec<AtomDoc>]) -> Result<GoalConditionSet, ScenarioError> {
    let disjuncts = docs
        .iter()
        .enumerate()
        .map(|(i, conj)| {
            conj.iter()
                .enumerate()
                .map(|(j, a)| atom_from_doc(a, &format!("goal_conditions[{i}][{j}]")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GoalConditionSet { disjuncts })
}

pub(crate) fn graph_from_doc(doc: &SceneGraphDoc) -> Result<SceneGraph, ScenarioError> {
    let edges = doc
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let path = format!("scene_graph.edges[{i}]");
            if is_none_word(&e.obj2_uid) {
                return Err(ScenarioError::schema(
                    format!("{path}.obj2_uid"),
                    "edges need a second object",
                ));
            }
            Ok(SceneGraphEdge {
                object_uid: e.obj1_uid.trim().to_string(),
                relation: parse_relation(&e.position, format!("{path}.position"))?,
                anchor_uid: e.obj2_uid.trim().to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let nodes = doc
        .nodes
        .iter()
        .map(|n| SceneGraphNode {
            object_uid: n.obj_uid.trim().to_string(),
            state: present(n.state.clone()),
        })
        .collect();
    Ok(SceneGraph {
        description: doc.description.clone(),
        nodes,
        edges,
    })
}

fn name_or_none(s: &TaskScenario, uid: Option<&str>) -> String {
    uid.map_or_else(|| NONE.to_string(), |u| s.name_of(u).to_string())
}

pub(crate) fn goals_to_doc(s: &TaskScenario) -> Vec<Vec<AtomDoc>> {
    s.goals
        .disjuncts
        .iter()
        .map(|conj| {
            conj.iter()
                .map(|a| AtomDoc {
                    obj1: Some(s.name_of(&a.obj1_uid).to_string()),
                    obj1_uid: a.obj1_uid.clone(),
                    obj1_state: Some(a.obj1_state.clone().unwrap_or_else(|| NONE.into())),
                    obj2: Some(name_or_none(s, a.obj2_uid.as_deref())),
                    obj2_uid: Some(a.obj2_uid.clone().unwrap_or_else(|| NONE.into())),
                    position: Some(a.relation.map_or(NONE, RelationLabel::as_str).to_string()),
                    obj3: a.obj3_uid.as_deref().map(|u| s.name_of(u).to_string()),
                    obj3_uid: a.obj3_uid.clone(),
                })
                .collect()
        })
        .collect()
}

pub(crate) fn graph_to_doc(s: &TaskScenario) -> SceneGraphDoc {
    let g = &s.scene_graph;
    SceneGraphDoc {
        description: g.description.clone(),
        edges: g
            .edges
            .iter()
            .map(|e| EdgeDoc {
                obj1: Some(s.name_of(&e.object_uid).to_string()),
                obj1_uid: e.object_uid.clone(),
                position: e.relation.as_str().to_string(),
                obj2: Some(s.name_of(&e.anchor_uid).to_string()),
                obj2_uid: e.anchor_uid.clone(),
            })
            .collect(),
        nodes: g
            .nodes
            .iter()
            .map(|n| NodeDoc {
                obj_uid: n.object_uid.clone(),
                state: Some(n.state.clone().unwrap_or_else(|| NONE.into())),
            })
            .collect(),
    }
}

/// The reply-schema view of a scenario (what a generator is asked to emit).
pub fn reply_doc(s: &TaskScenario) -> ReplyDoc {
    ReplyDoc {
        instruction: s.instruction.clone(),
        goal_conditions: goals_to_doc(s),
        scene_graph: graph_to_doc(s),
    }
}

pub fn scenario_doc(s: &TaskScenario) -> ScenarioDoc {
    ScenarioDoc {
        id: s.id.clone(),
        task_type: s.task_type,
        seed: s.seed,
        instruction: s.instruction.clone(),
        goal_conditions: goals_to_doc(s),
        scene_graph: graph_to_doc(s),
        asset_pool: s.asset_pool.clone(),
    }
}

/// Parses and fully validates scenario text.
pub fn parse_scenario(text: &str) -> Result<TaskScenario, ScenarioError> {
    let doc: ScenarioDoc = from_json_text(text)?;
    let scenario = TaskScenario {
        id: doc.id,
        task_type: doc.task_type,
        instruction: doc.instruction,
        scene_graph: graph_from_doc(&doc.scene_graph)?,
        goals: goals_from_doc(&doc.goal_conditions)?,
        asset_pool: doc.asset_pool,
        seed: doc.seed,
    };
    validate_scenario(&scenario)?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<TaskScenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Canonical text form: pretty JSON with a trailing newline.
pub fn save_scenario(s: &TaskScenario) -> String {
    let mut text = serde_json::to_string_pretty(&scenario_doc(s)).expect("scenario serializes");
    text.push('\n');
    text
}

pub fn write_scenario(path: impl AsRef<Path>, s: &TaskScenario) -> std::io::Result<()> {
    fs::write(path, save_scenario(s))
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Vec<AssetRecord>, ScenarioError> {
    let path = path.as_ref();
    let io_err = |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AssetRecord = from_json_text(&line).map_err(|e| match e {
            ScenarioError::Schema { path, message } => {
                ScenarioError::schema(format!("line {}: {path}", i + 1), message)
            }
            ScenarioError::Parse(m) => ScenarioError::Parse(format!("line {}: {m}", i + 1)),
            other => other,
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_catalog(mut w: impl Write, catalog: &[AssetRecord]) -> std::io::Result<()> {
    for a in catalog {
        serde_json::to_writer(&mut w, a)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
