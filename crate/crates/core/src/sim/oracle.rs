use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Observation, PlaceTarget, Policy, PolicyError, SimConfig, SkillCall, WorldState};
use crate::eval::{eval_atom, AtomContext};
use crate::layout::{find_placement, Constraint, Diagnostics, Layout, PlacementRequest, Support, TABLE_UID};
use crate::relations::RelationThresholds;
use crate::scene::{polyline_length, GoalAtom, RelationLabel, TaskScenario, Vec3};
use crate::util::mix_seed;

/// Poses tried per move before the oracle gives up on a goal atom.
const TARGET_TRIES: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub call: SkillCall,
    /// Grasp or place point reached by this step, if it moves the effector.
    pub waypoint: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Index of the disjunct this plan achieves.
    pub disjunct: usize,
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn waypoints(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.steps.iter().filter_map(|s| s.waypoint)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no goal disjunct is achievable: {0}")]
    Infeasible(String),
}

/// Object to move, where it should rest, and the requirement it must meet.
fn move_for(atom: &GoalAtom, rel: RelationLabel, anchor: &str) -> (String, Support, Constraint) {
    use RelationLabel::*;
    let a = atom.obj1_uid.as_str();
    match rel {
        On => (a.into(), Support::on(anchor), Constraint::pairwise(a, On, anchor)),
        In => (a.into(), Support::inside(anchor), Constraint::pairwise(a, In, anchor)),
        Beneath => (anchor.into(), Support::on(a), Constraint::pairwise(anchor, On, a)),
        OutOf => (anchor.into(), Support::inside(a), Constraint::pairwise(anchor, In, a)),
        Between => {
            let second = atom.obj3_uid.as_deref().unwrap_or_default();
            (a.into(), Support::table(), Constraint::between(a, anchor, second))
        }
        other => (a.into(), Support::table(), Constraint::pairwise(a, other, anchor)),
    }
}

fn describe(atom: &GoalAtom) -> String {
    let mut s = atom.obj1_uid.clone();
    if let Some(st) = &atom.obj1_state {
        s.push_str(&format!(" [{st}]"));
    }
    if let (Some(r), Some(b)) = (atom.relation, &atom.obj2_uid) {
        s.push_str(&format!(" {r} {b}"));
    }
    if let Some(c) = &atom.obj3_uid {
        s.push_str(&format!(" and {c}"));
    }
    s
}

struct Planner<'a> {
    scenario: &'a TaskScenario,
    cfg: &'a SimConfig,
    th: &'a RelationThresholds,
    world: WorldState,
    steps: Vec<PlanStep>,
    seed: u64,
}

impl Planner<'_> {
    fn holds(&self, atom: &GoalAtom) -> Result<bool, String> {
        let ctx = AtomContext::from_world(&self.world.layout, None, self.th);
        eval_atom(atom, &ctx).map_err(|e| e.to_string())
    }

    fn exec(&mut self, call: SkillCall, waypoint: Option<Vec3>) -> Result<(), String> {
        self.world
            .apply(self.scenario, &call, self.cfg, self.th)
            .map_err(|e| e.to_string())?;
        self.steps.push(PlanStep { call, waypoint });
        Ok(())
    }

    /// Picks `mover` and places it so that `constraints` hold.
    fn relocate(&mut self, mover: &str, supports: &[Support], constraints: &[Constraint], key: u64) -> Result<(), String> {
        let obj = self.world.layout.get(mover).ok_or_else(|| format!("{mover} is not on the table"))?;
        let grasp = obj.aabb().top_center();
        let half = obj.bbox.half_extents;
        self.exec(SkillCall::Pick { uid: mover.into() }, Some(grasp))?;

        let mut diag = Diagnostics::default();
        for support in supports {
            for attempt in 0..TARGET_TRIES {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, key * TARGET_TRIES + attempt));
                let req = PlacementRequest {
                    uid: mover,
                    half_extents: half,
                    support: support.clone(),
                    constraints,
                };
                let Some(cand) = find_placement(&req, &self.world.layout, self.th, self.cfg.placement_attempts, &mut rng, &mut diag)
                else {
                    break;
                };
                let point = cand.aabb().top_center();
                if !self.cfg.in_reach(&self.world.layout.table, point) {
                    continue;
                }
                let target = PlaceTarget {
                    support_uid: (cand.support_uid != TABLE_UID).then(|| cand.support_uid.clone()),
                    inside: cand.inside,
                    xy: Some([cand.bbox.center[0], cand.bbox.center[1]]),
                    yaw: Some(cand.bbox.yaw),
                };
                if self.exec(SkillCall::Place(target), Some(point)).is_ok() {
                    return Ok(());
                }
            }
        }
        Err(format!("no reachable pose for {mover}: {}", diag.summary()))
    }

    fn achieve(&mut self, conj: &[GoalAtom], disjunct: usize) -> Result<(), String> {
        let mut achieved: Vec<Constraint> = Vec::new();
        for (k, atom) in conj.iter().enumerate() {
            if let Some(state) = &atom.obj1_state {
                let current = self.world.layout.get(&atom.obj1_uid).and_then(|o| o.state.clone());
                if current.as_deref() != Some(state.as_str()) {
                    let call = SkillCall::SetState {
                        uid: atom.obj1_uid.clone(),
                        state: state.clone(),
                    };
                    self.exec(call, None)?;
                }
            }
            if let (Some(rel), Some(anchor)) = (atom.relation, atom.obj2_uid.as_deref()) {
                let (mover, support, constraint) = move_for(atom, rel, anchor);
                if !self.holds(atom)? {
                    let mut constraints = vec![constraint.clone()];
                    constraints.extend(achieved.iter().filter(|c| c.involves(&mover)).cloned());
                    let mut supports = vec![support];
                    // A horizontal relation to an object on a tray may also be met on the tray.
                    if !rel.is_support() && !rel.is_inverse_support() {
                        if let Some(o) = self.world.layout.get(anchor) {
                            if !o.on_table() && !o.inside {
                                supports.push(Support::on(&o.support_uid));
                            }
                        }
                    }
                    self.relocate(&mover, &supports, &constraints, (disjunct * 64 + k) as u64)?;
                }
                achieved.push(constraint);
            }
        }
        for atom in conj {
            if !self.holds(atom)? {
                return Err(format!("{} does not hold at the end", describe(atom)));
            }
        }
        Ok(())
    }
}

/// A pick/place/set-state sequence achieving the first achievable goal
/// disjunct, computed with full knowledge of the layout.
pub fn plan_demonstration(
    scenario: &TaskScenario,
    layout: &Layout,
    cfg: &SimConfig,
    th: &RelationThresholds,
) -> Result<Plan, PlanError> {
    let mut reasons = Vec::new();
    for (i, conj) in scenario.goals.disjuncts.iter().enumerate() {
        let mut planner = Planner {
            scenario,
            cfg,
            th,
            world: WorldState::new(layout.clone(), cfg),
            steps: Vec::new(),
            seed: mix_seed(scenario.seed, layout.seed),
        };
        match planner.achieve(conj, i) {
            Ok(()) => {
                return Ok(Plan {
                    disjunct: i,
                    steps: planner.steps,
                })
            }
            Err(e) => reasons.push(format!("disjunct {i}: {e}")),
        }
    }
    Err(PlanError::Infeasible(reasons.join("; ")))
}

/// Length of the straight polyline from the home pose through every grasp
/// and place point of the oracle plan.
pub fn shortest_path_length(
    scenario: &TaskScenario,
    layout: &Layout,
    cfg: &SimConfig,
    th: &RelationThresholds,
) -> Result<f64, PlanError> {
    let plan = plan_demonstration(scenario, layout, cfg, th)?;
    let mut points = vec![cfg.home(&layout.table)];
    points.extend(plan.waypoints());
    Ok(polyline_length(&points))
}

/// Replays the demonstration plan, then declares done. A scenario with no
/// achievable disjunct makes the first call fail.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    plan: Result<Plan, PlanError>,
    next: usize,
}

impl OraclePolicy {
    pub fn new(scenario: &TaskScenario, layout: &Layout, cfg: &SimConfig, th: &RelationThresholds) -> Self {
        Self::from_plan(plan_demonstration(scenario, layout, cfg, th))
    }

    pub fn from_plan(plan: Result<Plan, PlanError>) -> Self {
        Self { plan, next: 0 }
    }

    pub fn plan(&self) -> Result<&Plan, &PlanError> {
        self.plan.as_ref()
    }
}

impl Policy for OraclePolicy {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn next_skill(&mut self, _: &Observation) -> Result<SkillCall, PolicyError> {
        let plan = self.plan.as_ref().map_err(|e| PolicyError(e.to_string()))?;
        let call = plan.steps.get(self.next).map_or(SkillCall::Done, |s| s.call.clone());
        self.next += 1;
        Ok(call)
    }
}
