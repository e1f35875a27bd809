use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    find_placement, Constraint, Diagnostics, Layout, LayoutConfig, LayoutError, PlacementRequest, Support, TableSpec,
};
use crate::relations::RelationThresholds;
use crate::scene::{RelationLabel, SceneGraph, TaskScenario};
use crate::util::mix_seed;

/// Groups objects by support depth: level 0 rests on the table, and an
/// object sits one level above its highest supporter. Levels are sorted.
pub fn topological_levels(graph: &SceneGraph) -> Result<Vec<Vec<String>>, LayoutError> {
    let mut supporters: BTreeMap<&str, BTreeSet<&str>> = graph.uids().map(|u| (u, BTreeSet::new())).collect();
    for e in &graph.edges {
        if let Some((obj, sup, _)) = e.support() {
            if let Some(s) = supporters.get_mut(obj) {
                s.insert(sup);
            }
        }
    }
    let mut level: BTreeMap<&str, usize> = BTreeMap::new();
    while level.len() < supporters.len() {
        let mut progressed = false;
        for (&uid, sups) in &supporters {
            if level.contains_key(uid) {
                continue;
            }
            // Supporters outside the node set are ignored here; validation reports them.
            let known: Vec<&str> = sups.iter().copied().filter(|s| supporters.contains_key(s)).collect();
            if known.iter().all(|s| level.contains_key(s)) {
                let l = known.iter().map(|s| level[s] + 1).max().unwrap_or(0);
                level.insert(uid, l);
                progressed = true;
            }
        }
        if !progressed {
            let stuck = supporters
                .keys()
                .filter(|u| !level.contains_key(*u))
                .map(|u| u.to_string())
                .collect();
            return Err(LayoutError::Cycle(stuck));
        }
    }
    let depth = level.values().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); depth];
    for (uid, l) in level {
        out[l].push(uid.to_string());
    }
    Ok(out)
}

/// Placement order within one level: lexicographic, except that an object
/// related to something already placed goes before an unrelated one, so
/// relative constraints are sampled against their anchors.
pub fn order_level(level: &[String], placed: &BTreeSet<String>, constraints: &[Constraint]) -> Vec<String> {
    let mut done: BTreeSet<String> = placed.clone();
    let mut rest: Vec<&String> = level.iter().collect();
    rest.sort();
    let mut out = Vec::with_capacity(level.len());
    while !rest.is_empty() {
        let linked = rest.iter().position(|u| {
            constraints
                .iter()
                .any(|c| c.involves(u) && c.uids().any(|o| o != u.as_str() && done.contains(o)))
        });
        let next = rest.remove(linked.unwrap_or(0));
        done.insert(next.clone());
        out.push(next.clone());
    }
    out
}

fn support_of(graph: &SceneGraph, uid: &str) -> Support {
    match graph.supports_of(uid).first() {
        Some((sup, RelationLabel::In)) => Support::inside(sup),
        Some((sup, _)) => Support::on(sup),
        None => Support::table(),
    }
}

/// Places every scene-graph object on the table so that all edges hold under
/// relation inference. Edges between two unplaced objects are checked when
/// the second one is placed. Deterministic in `seed`.
pub fn construct_layout(
    scenario: &TaskScenario,
    table: &TableSpec,
    seed: u64,
    cfg: &LayoutConfig,
    th: &RelationThresholds,
) -> Result<Layout, LayoutError> {
    table.validate()?;
    th.validate()?;
    let graph = &scenario.scene_graph;
    let levels = topological_levels(graph)?;
    let constraints: Vec<Constraint> = graph
        .edges
        .iter()
        .map(|e| Constraint::pairwise(&e.object_uid, e.relation, &e.anchor_uid))
        .collect();
    let mut extents = BTreeMap::new();
    for uid in graph.uids() {
        let asset = scenario
            .asset(uid)
            .ok_or_else(|| LayoutError::UnknownAsset(uid.to_string()))?;
        extents.insert(uid, asset.half_extents());
    }
    let states = graph.initial_states();

    let mut diag = Diagnostics::default();
    let mut failed = String::new();
    for round in 0..cfg.retry_rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, round as u64));
        let mut layout = Layout::empty(*table, seed);
        let mut placed = BTreeSet::new();
        let mut ok = true;
        'levels: for level in &levels {
            for uid in order_level(level, &placed, &constraints) {
                let req = PlacementRequest {
                    uid: &uid,
                    half_extents: extents[uid.as_str()],
                    support: support_of(graph, &uid),
                    constraints: &constraints,
                };
                diag.clear();
                match find_placement(&req, &layout, th, cfg.max_attempts, &mut rng, &mut diag) {
                    Some(c) => {
                        let state = states.get(&uid).cloned().flatten();
                        layout.objects.push(c.into_placed(state));
                        placed.insert(uid);
                    }
                    None => {
                        failed = uid;
                        ok = false;
                        break 'levels;
                    }
                }
            }
        }
        if ok {
            return Ok(layout);
        }
    }
    Err(LayoutError::Infeasible {
        uid: failed,
        rounds: cfg.retry_rounds,
        diagnostics: diag,
    })
}
