//! Domain types, the scenario file format, the synthetic catalog and box
//! geometry shared by the rest of the engine.

mod catalog;
mod error;
mod geometry;
mod io;
mod label;
mod types;
mod validate;

pub use catalog::{category_count, synthetic_catalog, ASSETS_PER_CATEGORY};
pub use error::{ScenarioError, SemanticError};
pub use geometry::{distance, polyline_length, sample_point_cloud, Aabb, Box3, PointCloud, Vec3};
pub use io::{
    load_catalog, load_scenario, parse_scenario, reply_doc, save_scenario, scenario_doc,
    write_catalog, write_scenario, AtomDoc, EdgeDoc, NodeDoc, ReplyDoc, ScenarioDoc, SceneGraphDoc,
};
pub(crate) use io::{from_json_text, goals_from_doc, graph_from_doc};
pub use label::{RelationLabel, UnknownRelation};
pub use types::{
    AssetRecord, GoalAtom, GoalConditionSet, SceneGraph, SceneGraphEdge, SceneGraphNode,
    TaskScenario, TaskType, TAG_CONTAINER, TAG_SUPPORT,
};
pub use validate::{support_cycle, validate_scenario, validate_scene_graph, ValidationReport, Violation};
