#![allow(dead_code)]

use tabletask_core::scene::{
    AssetRecord, GoalAtom, GoalConditionSet, RelationLabel, SceneGraph, SceneGraphEdge, SceneGraphNode,
    TaskScenario, TaskType, TAG_CONTAINER, TAG_SUPPORT,
};

pub fn asset(uid: &str, dims: [f64; 3]) -> AssetRecord {
    AssetRecord {
        uid: uid.to_string(),
        name: format!("Thing {uid}"),
        description: "A test object.".into(),
        category: "block".into(),
        color: "red".into(),
        shape: "cubic".into(),
        material: "wooden".into(),
        footprint: dims,
        mass: 0.1,
        states: vec!["open".into(), "closed".into()],
        tags: vec!["block".into()],
    }
}

pub fn plate(uid: &str) -> AssetRecord {
    let mut a = asset(uid, [0.24, 0.24, 0.02]);
    a.tags.push(TAG_SUPPORT.into());
    a
}

pub fn bowl(uid: &str) -> AssetRecord {
    let mut a = asset(uid, [0.2, 0.2, 0.11]);
    a.tags.push(TAG_CONTAINER.into());
    a
}

pub fn cube(uid: &str) -> AssetRecord {
    asset(uid, [0.06, 0.06, 0.06])
}

pub fn edge(a: &str, rel: RelationLabel, b: &str) -> SceneGraphEdge {
    SceneGraphEdge::new(a, rel, b)
}

/// A scenario over `pool` whose scene graph holds every pool asset.
pub fn scenario(pool: Vec<AssetRecord>, edges: Vec<SceneGraphEdge>, goals: Vec<Vec<GoalAtom>>) -> TaskScenario {
    let nodes = pool
        .iter()
        .map(|a| SceneGraphNode {
            object_uid: a.uid.clone(),
            state: None,
        })
        .collect();
    TaskScenario {
        id: "test".into(),
        task_type: TaskType::Spatial,
        instruction: "Arrange the objects.".into(),
        scene_graph: SceneGraph {
            description: "Test scene.".into(),
            nodes,
            edges,
        },
        goals: GoalConditionSet { disjuncts: goals },
        asset_pool: pool,
        seed: 7,
    }
}
