use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{AssetRecord, GoalAtom, RelationLabel, ScenarioError, SceneGraph, SemanticError, TaskScenario};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DanglingUid { path: String, uid: String },
    SelfEdge { path: String, uid: String },
    SupportCycle { uids: Vec<String> },
    UnknownState { path: String, uid: String, state: String },
    DuplicateNode { path: String, uid: String },
    /// `between` needs two anchors and cannot be a graph edge.
    BinaryBetween { path: String },
}

impl Violation {
    pub fn path(&self) -> &str {
        match self {
            Violation::DanglingUid { path, .. }
            | Violation::SelfEdge { path, .. }
            | Violation::UnknownState { path, .. }
            | Violation::DuplicateNode { path, .. }
            | Violation::BinaryBetween { path } => path,
            Violation::SupportCycle { .. } => "scene_graph.edges",
        }
    }

    pub fn to_semantic(&self) -> SemanticError {
        match self {
            Violation::DanglingUid { uid, .. } => SemanticError::DanglingUid(uid.clone()),
            Violation::SelfEdge { uid, .. } => SemanticError::SelfEdge(uid.clone()),
            Violation::SupportCycle { uids } => SemanticError::SupportCycle(uids.clone()),
            Violation::UnknownState { uid, state, .. } => SemanticError::UnknownState {
                uid: uid.clone(),
                state: state.clone(),
            },
            Violation::DuplicateNode { uid, .. } => SemanticError::DuplicateUid(uid.clone()),
            Violation::BinaryBetween { .. } => {
                SemanticError::Invalid("between cannot be a scene-graph edge".into())
            }
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path(), self.to_semantic())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Collects every structural problem with the graph; an empty report means
/// the graph resolves against `pool` and its on/in subgraph is acyclic.
pub fn validate_scene_graph(graph: &SceneGraph, pool: &[AssetRecord]) -> ValidationReport {
    let assets: BTreeMap<&str, &AssetRecord> = pool.iter().map(|a| (a.uid.as_str(), a)).collect();
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();

    for (i, node) in graph.nodes.iter().enumerate() {
        let path = format!("scene_graph.nodes[{i}]");
        if !seen.insert(node.object_uid.as_str()) {
            violations.push(Violation::DuplicateNode {
                path: path.clone(),
                uid: node.object_uid.clone(),
            });
        }
        match assets.get(node.object_uid.as_str()) {
            None => violations.push(Violation::DanglingUid {
                path: format!("{path}.obj_uid"),
                uid: node.object_uid.clone(),
            }),
            Some(asset) => {
                if let Some(state) = &node.state {
                    if !asset.states.contains(state) {
                        violations.push(Violation::UnknownState {
                            path: format!("{path}.state"),
                            uid: node.object_uid.clone(),
                            state: state.clone(),
                        });
                    }
                }
            }
        }
    }

    for (i, edge) in graph.edges.iter().enumerate() {
        let path = format!("scene_graph.edges[{i}]");
        if edge.object_uid == edge.anchor_uid {
            violations.push(Violation::SelfEdge {
                path: path.clone(),
                uid: edge.object_uid.clone(),
            });
        }
        if edge.relation == RelationLabel::Between {
            violations.push(Violation::BinaryBetween { path: path.clone() });
        }
        for (field, uid) in [("obj1_uid", &edge.object_uid), ("obj2_uid", &edge.anchor_uid)] {
            if !seen.contains(uid.as_str()) {
                violations.push(Violation::DanglingUid {
                    path: format!("{path}.{field}"),
                    uid: uid.clone(),
                });
            }
        }
    }

    if let Some(uids) = support_cycle(graph) {
        violations.push(Violation::SupportCycle { uids });
    }
    ValidationReport { violations }
}

/// Kahn's algorithm over supporter → supported edges. Returns the objects
/// that could not be ordered (cycle members and whatever rests on them).
pub fn support_cycle(graph: &SceneGraph) -> Option<Vec<String>> {
    let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
    let mut dependents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &graph.edges {
        if let Some((obj, sup, _)) = e.support() {
            indegree.entry(sup).or_default();
            *indegree.entry(obj).or_default() += 1;
            dependents.entry(sup).or_default().push(obj);
        }
    }
    let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
    while let Some(next) = ready.pop() {
        for dep in dependents.get(next).into_iter().flatten() {
            let d = indegree.get_mut(dep).expect("dependent registered");
            *d -= 1;
            if *d == 0 {
                ready.push(dep);
            }
        }
    }
    let stuck: Vec<String> = indegree
        .into_iter()
        .filter(|(_, d)| *d > 0)
        .map(|(k, _)| k.to_string())
        .collect();
    (!stuck.is_empty()).then_some(stuck)
}

/// Full load-time validation of a scenario.
pub fn validate_scenario(s: &TaskScenario) -> Result<(), ScenarioError> {
    let mut uids = BTreeSet::new();
    for (i, a) in s.asset_pool.iter().enumerate() {
        let path = format!("asset_pool[{i}]");
        if !uids.insert(a.uid.as_str()) {
            return Err(ScenarioError::semantic(
                format!("{path}.uid"),
                SemanticError::DuplicateUid(a.uid.clone()),
            ));
        }
        if a.footprint.iter().any(|d| d.is_nan() || *d <= 0.0) {
            return Err(ScenarioError::semantic(
                format!("{path}.footprint"),
                SemanticError::Invalid("footprint dimensions must be positive".into()),
            ));
        }
        if a.mass.is_nan() || a.mass <= 0.0 {
            return Err(ScenarioError::semantic(
                format!("{path}.mass"),
                SemanticError::Invalid("mass must be positive".into()),
            ));
        }
        let distinct: BTreeSet<&String> = a.states.iter().collect();
        if distinct.len() != a.states.len() {
            return Err(ScenarioError::semantic(
                format!("{path}.states"),
                SemanticError::Invalid("duplicate state label".into()),
            ));
        }
    }

    let report = validate_scene_graph(&s.scene_graph, &s.asset_pool);
    if let Some(v) = report.violations.first() {
        return Err(ScenarioError::semantic(v.path(), v.to_semantic()));
    }

    if s.goals.disjuncts.is_empty() {
        return Err(ScenarioError::semantic(
            "goal_conditions",
            SemanticError::Invalid("goal conditions must not be empty".into()),
        ));
    }
    for (i, conj) in s.goals.disjuncts.iter().enumerate() {
        if conj.is_empty() {
            return Err(ScenarioError::semantic(
                format!("goal_conditions[{i}]"),
                SemanticError::Invalid("empty conjunction".into()),
            ));
        }
        for (j, atom) in conj.iter().enumerate() {
            check_atom(s, atom, &format!("goal_conditions[{i}][{j}]"))?;
        }
    }

    check_not_initially_satisfied(s)
}

fn check_atom(s: &TaskScenario, atom: &GoalAtom, path: &str) -> Result<(), ScenarioError> {
    if atom.obj1_state.is_none() && atom.relation.is_none() {
        return Err(ScenarioError::semantic(
            path,
            SemanticError::Invalid("atom needs a state or a relation".into()),
        ));
    }
    if atom.relation.is_some() && atom.obj2_uid.is_none() {
        return Err(ScenarioError::semantic(
            format!("{path}.obj2_uid"),
            SemanticError::Invalid("relation requires a second object".into()),
        ));
    }
    if atom.relation == Some(RelationLabel::Between) && atom.obj3_uid.is_none() {
        return Err(ScenarioError::semantic(
            format!("{path}.obj3_uid"),
            SemanticError::Invalid("between requires a second anchor".into()),
        ));
    }
    let fields = [
        ("obj1_uid", Some(&atom.obj1_uid)),
        ("obj2_uid", atom.obj2_uid.as_ref()),
        ("obj3_uid", atom.obj3_uid.as_ref()),
    ];
    for (field, uid) in fields {
        if let Some(uid) = uid {
            if !s.scene_graph.contains(uid) {
                return Err(ScenarioError::semantic(
                    format!("{path}.{field}"),
                    SemanticError::DanglingUid(uid.clone()),
                ));
            }
        }
    }
    let distinct: BTreeSet<&str> = atom.uids().collect();
    if distinct.len() != atom.uids().count() {
        return Err(ScenarioError::semantic(
            path,
            SemanticError::SelfEdge(atom.obj1_uid.clone()),
        ));
    }
    if let Some(state) = &atom.obj1_state {
        let known = s
            .asset(&atom.obj1_uid)
            .is_some_and(|a| a.states.contains(state));
        if !known {
            return Err(ScenarioError::semantic(
                format!("{path}.obj1_state"),
                SemanticError::UnknownState {
                    uid: atom.obj1_uid.clone(),
                    state: state.clone(),
                },
            ));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Holds {
    No,
    Directly,
    Mirrored,
}

fn atom_holds_in_graph(graph: &SceneGraph, atom: &GoalAtom) -> Holds {
    if let Some(state) = &atom.obj1_state {
        let current = graph.node(&atom.obj1_uid).and_then(|n| n.state.as_ref());
        if current != Some(state) {
            return Holds::No;
        }
    }
    let (Some(rel), Some(anchor)) = (atom.relation, atom.obj2_uid.as_deref()) else {
        return Holds::Directly;
    };
    let direct = graph
        .edges
        .iter()
        .any(|e| e.object_uid == atom.obj1_uid && e.relation == rel && e.anchor_uid == anchor);
    if direct {
        return Holds::Directly;
    }
    let mirrored = graph.edges.iter().any(|e| {
        e.object_uid == anchor && e.relation == rel.inverse() && e.anchor_uid == atom.obj1_uid
    });
    if mirrored {
        Holds::Mirrored
    } else {
        Holds::No
    }
}

fn check_not_initially_satisfied(s: &TaskScenario) -> Result<(), ScenarioError> {
    for (i, conj) in s.goals.disjuncts.iter().enumerate() {
        let holds: Vec<Holds> = conj.iter().map(|a| atom_holds_in_graph(&s.scene_graph, a)).collect();
        if holds.iter().all(|h| *h != Holds::No) {
            let kind = if holds.contains(&Holds::Mirrored) {
                SemanticError::CircularTransformation
            } else {
                SemanticError::GoalSatisfiedInitially
            };
            return Err(ScenarioError::semantic(format!("goal_conditions[{i}]"), kind));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{SceneGraphEdge, SceneGraphNode};

    fn asset(uid: &str) -> AssetRecord {
        AssetRecord {
            uid: uid.into(),
            name: format!("thing {uid}"),
            description: String::new(),
            category: "block".into(),
            color: "red".into(),
            shape: "cube".into(),
            material: "wood".into(),
            footprint: [0.05; 3],
            mass: 0.1,
            states: vec!["open".into(), "closed".into()],
            tags: vec![],
        }
    }

    fn graph(uids: &[&str], edges: &[(&str, RelationLabel, &str)]) -> SceneGraph {
        SceneGraph {
            description: String::new(),
            nodes: uids
                .iter()
                .map(|u| SceneGraphNode {
                    object_uid: u.to_string(),
                    state: None,
                })
                .collect(),
            edges: edges
                .iter()
                .map(|(a, r, b)| SceneGraphEdge::new(*a, *r, *b))
                .collect(),
        }
    }

    #[test]
    fn two_cycle_is_reported() {
        let pool = vec![asset("a"), asset("b")];
        let g = graph(&["a", "b"], &[("a", RelationLabel::On, "b"), ("b", RelationLabel::On, "a")]);
        let report = validate_scene_graph(&g, &pool);
        assert!(matches!(
            report.violations.as_slice(),
            [Violation::SupportCycle { uids }] if uids == &["a", "b"]
        ));
    }

    #[test]
    fn beneath_edges_count_as_support() {
        let pool = vec![asset("a"), asset("b")];
        let g = graph(
            &["a", "b"],
            &[("a", RelationLabel::On, "b"), ("a", RelationLabel::Beneath, "b")],
        );
        assert!(!validate_scene_graph(&g, &pool).is_valid());
    }

    #[test]
    fn dangling_uid_is_reported() {
        let pool = vec![asset("a")];
        let g = graph(&["a"], &[("a", RelationLabel::Left, "ghost")]);
        let report = validate_scene_graph(&g, &pool);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DanglingUid { uid, .. } if uid == "ghost")));
    }

    #[test]
    fn self_edge_and_unknown_state() {
        let pool = vec![asset("a")];
        let mut g = graph(&["a"], &[("a", RelationLabel::Near, "a")]);
        g.nodes[0].state = Some("melted".into());
        let report = validate_scene_graph(&g, &pool);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::SelfEdge { .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::UnknownState { .. })));
    }

    #[test]
    fn valid_graph_has_empty_report() {
        let pool = vec![asset("a"), asset("b"), asset("c")];
        let g = graph(
            &["a", "b", "c"],
            &[("a", RelationLabel::On, "b"), ("c", RelationLabel::Left, "b")],
        );
        assert!(validate_scene_graph(&g, &pool).is_valid());
    }
}
