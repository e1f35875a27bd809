use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RelationLabel;

/// An annotated catalog asset. Geometry is a box proxy of `footprint` (full
/// dimensions along x, y, z in meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub uid: String,
    pub name: String,
    pub description: String,
    pub category: String,
    pub color: String,
    pub shape: String,
    pub material: String,
    pub footprint: [f64; 3],
    pub mass: f64,
    #[serde(default)]
    pub states: Vec<String>,
    #[serde(default)]
    pub tags: Vec<String>,
}

pub const TAG_CONTAINER: &str = "container";
pub const TAG_SUPPORT: &str = "support";

impl AssetRecord {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    pub fn is_container(&self) -> bool {
        self.has_tag(TAG_CONTAINER)
    }

    pub fn is_support_surface(&self) -> bool {
        self.has_tag(TAG_SUPPORT)
    }

    pub fn half_extents(&self) -> [f64; 3] {
        [self.footprint[0] / 2.0, self.footprint[1] / 2.0, self.footprint[2] / 2.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Spatial,
    Appearance,
    CommonSense,
    LongHorizon,
}

impl TaskType {
    pub const ALL: [TaskType; 4] = [
        TaskType::Spatial,
        TaskType::Appearance,
        TaskType::CommonSense,
        TaskType::LongHorizon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Spatial => "spatial",
            TaskType::Appearance => "appearance",
            TaskType::CommonSense => "common_sense",
            TaskType::LongHorizon => "long_horizon",
        }
    }

    /// Column heading used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            TaskType::Spatial => "Spatial",
            TaskType::Appearance => "Appearance",
            TaskType::CommonSense => "Common Sense",
            TaskType::LongHorizon => "Long-Horizon",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "spatial" => Ok(TaskType::Spatial),
            "appearance" => Ok(TaskType::Appearance),
            "common_sense" | "commonsense" => Ok(TaskType::CommonSense),
            "long_horizon" | "longhorizon" => Ok(TaskType::LongHorizon),
            other => Err(format!("unknown task type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraphNode {
    pub object_uid: String,
    pub state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SceneGraphEdge {
    #[serde(alias = "obj1_uid")]
    pub object_uid: String,
    #[serde(alias = "position")]
    pub relation: RelationLabel,
    #[serde(alias = "obj2_uid")]
    pub anchor_uid: String,
}

impl SceneGraphEdge {
    pub fn new(object: impl Into<String>, relation: RelationLabel, anchor: impl Into<String>) -> Self {
        Self {
            object_uid: object.into(),
            relation,
            anchor_uid: anchor.into(),
        }
    }

    /// The `(supported, supporter, relation)` reading of a support edge, if it is one.
    /// `beneath`/`out_of` edges are flipped so the supported object comes first.
    pub fn support(&self) -> Option<(&str, &str, RelationLabel)> {
        if self.relation.is_support() {
            Some((&self.object_uid, &self.anchor_uid, self.relation))
        } else if self.relation.is_inverse_support() {
            Some((&self.anchor_uid, &self.object_uid, self.relation.inverse()))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub description: String,
    pub nodes: Vec<SceneGraphNode>,
    pub edges: Vec<SceneGraphEdge>,
}

impl SceneGraph {
    pub fn node(&self, uid: &str) -> Option<&SceneGraphNode> {
        self.nodes.iter().find(|n| n.object_uid == uid)
    }

    pub fn contains(&self, uid: &str) -> bool {
        self.node(uid).is_some()
    }

    pub fn uids(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.object_uid.as_str())
    }

    /// Supporters of `uid` through on/in edges (and their inverses), sorted.
    pub fn supports_of(&self, uid: &str) -> Vec<(String, RelationLabel)> {
        let mut out: Vec<(String, RelationLabel)> = self
            .edges
            .iter()
            .filter_map(|e| e.support())
            .filter(|(obj, _, _)| *obj == uid)
            .map(|(_, sup, rel)| (sup.to_string(), rel))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn initial_states(&self) -> BTreeMap<String, Option<String>> {
        self.nodes
            .iter()
            .map(|n| (n.object_uid.clone(), n.state.clone()))
            .collect()
    }
}

/// One checkable fact: an object state, a binary relation, or both.
/// `between` uses `obj3_uid` as the second anchor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalAtom {
    pub obj1_uid: String,
    pub obj1_state: Option<String>,
    pub obj2_uid: Option<String>,
    pub relation: Option<RelationLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj3_uid: Option<String>,
}

impl GoalAtom {
    pub fn relation(object: &str, relation: RelationLabel, anchor: &str) -> Self {
        Self {
            obj1_uid: object.to_string(),
            obj1_state: None,
            obj2_uid: Some(anchor.to_string()),
            relation: Some(relation),
            obj3_uid: None,
        }
    }

    pub fn state(object: &str, state: &str) -> Self {
        Self {
            obj1_uid: object.to_string(),
            obj1_state: Some(state.to_string()),
            obj2_uid: None,
            relation: None,
            obj3_uid: None,
        }
    }

    pub fn between(object: &str, first: &str, second: &str) -> Self {
        Self {
            obj1_uid: object.to_string(),
            obj1_state: None,
            obj2_uid: Some(first.to_string()),
            relation: Some(RelationLabel::Between),
            obj3_uid: Some(second.to_string()),
        }
    }

    pub fn uids(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.obj1_uid.as_str())
            .chain(self.obj2_uid.as_deref())
            .chain(self.obj3_uid.as_deref())
    }
}

/// Goal conditions in disjunctive normal form: any fully satisfied
/// conjunction completes the task.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalConditionSet {
    pub disjuncts: Vec<Vec<GoalAtom>>,
}

impl GoalConditionSet {
    pub fn single(atoms: Vec<GoalAtom>) -> Self {
        Self { disjuncts: vec![atoms] }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GoalAtom> {
        self.disjuncts.iter().flatten()
    }

    /// Number of atoms in the first conjunction.
    pub fn horizon(&self) -> usize {
        self.disjuncts.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskScenario {
    pub id: String,
    pub task_type: TaskType,
    pub instruction: String,
    pub scene_graph: SceneGraph,
    pub goals: GoalConditionSet,
    pub asset_pool: Vec<AssetRecord>,
    pub seed: u64,
}

impl TaskScenario {
    pub fn asset(&self, uid: &str) -> Option<&AssetRecord> {
        self.asset_pool.iter().find(|a| a.uid == uid)
    }

    pub fn asset_index(&self) -> BTreeMap<&str, &AssetRecord> {
        self.asset_pool.iter().map(|a| (a.uid.as_str(), a)).collect()
    }

    pub fn name_of<'a>(&'a self, uid: &'a str) -> &'a str {
        self.asset(uid).map_or(uid, |a| a.name.as_str())
    }
}
