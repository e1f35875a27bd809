//! Kinematic tabletop episodes: pick / place / set-state skills applied to a
//! layout, with the effector path recorded for path-length metrics.

mod oracle;
mod policy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{episode_score, AtomContext, EpisodeResult};
use crate::layout::{check_placement, support_base_z, Candidate, Layout, PlacedObject, TableSpec, TABLE_UID};
use crate::relations::{scene_relations, RelationThresholds, RelationTriple};
use crate::scene::{distance, polyline_length, Box3, TaskScenario, Vec3};

pub use oracle::{plan_demonstration, shortest_path_length, OraclePolicy, Plan, PlanError, PlanStep};
pub use policy::{NoisyPolicy, NullPolicy, Policy, PolicyError, ScriptedPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Skill calls allowed per episode (`done` is free).
    pub budget: usize,
    /// Maximum distance (m) from the arm base to a grasp or place point.
    pub reach: f64,
    /// Lift (m) above the tallest object under a transfer.
    pub clearance: f64,
    /// Effector start pose relative to the arm base.
    pub home_offset: Vec3,
    /// Consecutive rejected skills after which the episode ends.
    pub max_consecutive_faults: usize,
    /// Pose samples per placement when the oracle plans a move.
    pub placement_attempts: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            budget: 60,
            reach: 0.85,
            clearance: 0.15,
            home_offset: [0.2, 0.0, 0.4],
            max_consecutive_faults: 3,
            placement_attempts: 200,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.budget == 0 {
            return Err("budget must be at least 1".into());
        }
        if self.reach.is_nan() || self.reach <= 0.0 || self.clearance.is_nan() || self.clearance < 0.0 {
            return Err("reach must be positive and clearance non-negative".into());
        }
        if self.max_consecutive_faults == 0 || self.placement_attempts == 0 {
            return Err("fault and attempt limits must be at least 1".into());
        }
        Ok(())
    }

    /// Arm base at the midpoint of the table's far long edge.
    pub fn base(&self, table: &TableSpec) -> Vec3 {
        [-table.extent_x / 2.0, 0.0, table.surface_z]
    }

    pub fn home(&self, table: &TableSpec) -> Vec3 {
        let b = self.base(table);
        [b[0] + self.home_offset[0], b[1] + self.home_offset[1], b[2] + self.home_offset[2]]
    }

    pub fn in_reach(&self, table: &TableSpec, p: Vec3) -> bool {
        distance(self.base(table), p) <= self.reach
    }
}

/// Where a held object goes. No support means the table; `xy` defaults to
/// the support's center and `yaw` to the object's current yaw.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaceTarget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_uid: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inside: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xy: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "skill", rename_all = "snake_case")]
pub enum SkillCall {
    Pick { uid: String },
    Place(PlaceTarget),
    SetState { uid: String, state: String },
    Done,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum SkillError {
    #[error("hand already holds {0}")]
    OccupiedHand(String),
    #[error("hand is empty")]
    EmptyHand,
    #[error("{uid} is blocked by {by} resting on it")]
    Blocked { uid: String, by: String },
    #[error("{0} is out of reach")]
    OutOfReach(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("{uid} has no state {state}")]
    UnknownState { uid: String, state: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Done,
    BudgetExhausted,
    SkillFault,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Done => "done",
            Termination::BudgetExhausted => "budget_exhausted",
            Termination::SkillFault => "skill_fault",
        }
    }
}

/// Mutable episode state. The held object is out of the layout and moves
/// with the effector.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub layout: Layout,
    pub held: Option<PlacedObject>,
    pub effector: Vec3,
    pub steps_used: usize,
    pub path: Vec<Vec3>,
}

impl WorldState {
    pub fn new(layout: Layout, cfg: &SimConfig) -> Self {
        let home = cfg.home(&layout.table);
        Self {
            layout,
            held: None,
            effector: home,
            steps_used: 0,
            path: vec![home],
        }
    }

    pub fn path_length(&self) -> f64 {
        polyline_length(&self.path)
    }

    fn state_of(&self, uid: &str) -> Option<&Option<String>> {
        self.layout
            .get(uid)
            .or(self.held.as_ref().filter(|h| h.uid == uid))
            .map(|o| &o.state)
    }

    /// Tallest top face among objects whose footprint meets the XY box
    /// spanned by a straight transfer from `from` to `to`.
    fn corridor_top(&self, from: Vec3, to: Vec3) -> f64 {
        let lo = [from[0].min(to[0]), from[1].min(to[1])];
        let hi = [from[0].max(to[0]), from[1].max(to[1])];
        self.layout
            .objects
            .iter()
            .map(|o| o.aabb())
            .filter(|b| b.min[0] <= hi[0] && b.max[0] >= lo[0] && b.min[1] <= hi[1] && b.max[1] >= lo[1])
            .map(|b| b.max[2])
            .fold(self.layout.table.surface_z, f64::max)
    }

    /// Lift over the corridor, then descend to `target`.
    fn transfer(&mut self, target: Vec3, cfg: &SimConfig) {
        let load = self.held.as_ref().map_or(0.0, |h| h.aabb().extent(2));
        let lift = self.corridor_top(self.effector, target).max(target[2]) + load + cfg.clearance;
        self.path.push([target[0], target[1], lift]);
        self.path.push(target);
        self.effector = target;
    }

    pub fn apply_pick(&mut self, uid: &str, cfg: &SimConfig) -> Result<(), SkillError> {
        if let Some(h) = &self.held {
            return Err(SkillError::OccupiedHand(h.uid.clone()));
        }
        let obj = self.layout.get(uid).ok_or_else(|| SkillError::UnknownObject(uid.to_string()))?;
        if let Some(on_top) = self.layout.supported_by(uid).next() {
            return Err(SkillError::Blocked {
                uid: uid.to_string(),
                by: on_top.uid.clone(),
            });
        }
        let grasp = obj.aabb().top_center();
        if !cfg.in_reach(&self.layout.table, grasp) {
            return Err(SkillError::OutOfReach(uid.to_string()));
        }
        let obj = self.layout.remove(uid).expect("present");
        self.transfer(grasp, cfg);
        self.held = Some(obj);
        Ok(())
    }

    /// The candidate pose a place target resolves to, without applying it.
    pub fn resolve_place(&self, target: &PlaceTarget) -> Result<Candidate, SkillError> {
        let held = self.held.as_ref().ok_or(SkillError::EmptyHand)?;
        let support_uid = target.support_uid.clone().unwrap_or_else(|| TABLE_UID.to_string());
        if support_uid == held.uid {
            return Err(SkillError::InvalidTarget("cannot place an object on itself".into()));
        }
        let base = support_base_z(&self.layout, &support_uid, target.inside)
            .ok_or_else(|| SkillError::UnknownObject(support_uid.clone()))?;
        let xy = match (target.xy, self.layout.aabb(&support_uid)) {
            (Some(xy), _) => xy,
            (None, Some(b)) => [b.center()[0], b.center()[1]],
            (None, None) => return Err(SkillError::InvalidTarget("table placement needs xy".into())),
        };
        let yaw = target.yaw.unwrap_or(held.bbox.yaw);
        let probe = Box3::new([xy[0], xy[1], 0.0], held.bbox.half_extents, yaw);
        let h = probe.world_half_extents();
        let bbox = Box3::new([xy[0], xy[1], base + h[2]], held.bbox.half_extents, yaw);
        let cand = Candidate {
            uid: held.uid.clone(),
            bbox,
            support_uid: support_uid.clone(),
            inside: target.inside,
        };
        if let Some(s) = self.layout.aabb(&support_uid) {
            let fb = cand.aabb();
            let fits = if target.inside {
                fb.strictly_inside(&s)
            } else {
                (0..2).all(|k| fb.min[k] >= s.min[k] - 1e-9 && fb.max[k] <= s.max[k] + 1e-9)
            };
            if !fits {
                return Err(SkillError::InvalidTarget(format!("does not fit on {support_uid}")));
            }
        }
        Ok(cand)
    }

    pub fn apply_place(
        &mut self,
        target: &PlaceTarget,
        cfg: &SimConfig,
        th: &RelationThresholds,
    ) -> Result<(), SkillError> {
        let cand = self.resolve_place(target)?;
        check_placement(&cand, &[], &self.layout, th).map_err(|r| SkillError::InvalidTarget(r.to_string()))?;
        let point = cand.aabb().top_center();
        if !cfg.in_reach(&self.layout.table, point) {
            return Err(SkillError::OutOfReach(cand.uid));
        }
        self.transfer(point, cfg);
        let held = self.held.take().expect("holding");
        self.layout.objects.push(cand.into_placed(held.state));
        Ok(())
    }

    pub fn apply_set_state(&mut self, scenario: &TaskScenario, uid: &str, state: &str) -> Result<(), SkillError> {
        if self.state_of(uid).is_none() {
            return Err(SkillError::UnknownObject(uid.to_string()));
        }
        let known = scenario.asset(uid).is_some_and(|a| a.states.iter().any(|s| s == state));
        if !known {
            return Err(SkillError::UnknownState {
                uid: uid.to_string(),
                state: state.to_string(),
            });
        }
        let obj = match self.layout.get_mut(uid) {
            Some(o) => o,
            None => self.held.as_mut().expect("held"),
        };
        obj.state = Some(state.to_string());
        Ok(())
    }

    /// Applies one non-terminal skill; counts toward the budget either way.
    pub fn apply(
        &mut self,
        scenario: &TaskScenario,
        call: &SkillCall,
        cfg: &SimConfig,
        th: &RelationThresholds,
    ) -> Result<(), SkillError> {
        self.steps_used += 1;
        match call {
            SkillCall::Pick { uid } => self.apply_pick(uid, cfg),
            SkillCall::Place(target) => self.apply_place(target, cfg, th),
            SkillCall::SetState { uid, state } => self.apply_set_state(scenario, uid, state),
            SkillCall::Done => Ok(()),
        }
    }

    pub fn observation(&self, scenario: &TaskScenario, th: &RelationThresholds, last_fault: Option<String>) -> Observation {
        Observation {
            instruction: scenario.instruction.clone(),
            table: self.layout.table,
            objects: self.layout.objects.clone(),
            held: self.held.as_ref().map(|h| h.uid.clone()),
            effector: self.effector,
            relations: scene_relations(&self.layout, th).into_iter().collect(),
            step: self.steps_used,
            last_fault,
        }
    }
}

/// What a policy sees before choosing each skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub instruction: String,
    pub table: TableSpec,
    pub objects: Vec<PlacedObject>,
    pub held: Option<String>,
    pub effector: Vec3,
    pub relations: Vec<RelationTriple>,
    pub step: usize,
    pub last_fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub call: SkillCall,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub scenario_id: String,
    pub policy: String,
    pub steps: Vec<StepRecord>,
    pub path: Vec<Vec3>,
    pub path_length: f64,
    pub steps_used: usize,
    pub termination: Termination,
    pub final_layout: Layout,
    pub held: Option<PlacedObject>,
}

impl EpisodeLog {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("episode serializes");
        s.push('\n');
        s
    }

    /// Scores the final state against the scenario's goals.
    pub fn evaluate(&self, scenario: &TaskScenario, l: f64, th: &RelationThresholds) -> EpisodeResult {
        let ctx = AtomContext::from_world(&self.final_layout, self.held.as_ref(), th);
        let (atom_results, score, success) = match episode_score(&scenario.goals, &ctx) {
            Ok(s) => (s.atom_results, s.score, s.success),
            Err(_) => (vec![], 0.0, false),
        };
        EpisodeResult {
            scenario_id: scenario.id.clone(),
            atom_results,
            score,
            success,
            l,
            p: self.path_length,
            termination: Some(self.termination.as_str().to_string()),
        }
    }
}

/// Runs `policy` from `layout` until it says done, the skill budget runs
/// out, or skills keep failing.
pub fn run_episode(
    scenario: &TaskScenario,
    layout: &Layout,
    policy: &mut dyn Policy,
    cfg: &SimConfig,
    th: &RelationThresholds,
) -> EpisodeLog {
    let mut world = WorldState::new(layout.clone(), cfg);
    let mut steps = Vec::new();
    let mut last_fault = None;
    let mut consecutive = 0;
    let termination = loop {
        if world.steps_used >= cfg.budget {
            break Termination::BudgetExhausted;
        }
        let obs = world.observation(scenario, th, last_fault.take());
        let call = match policy.next_skill(&obs) {
            Ok(c) => c,
            Err(e) => {
                steps.push(StepRecord {
                    call: SkillCall::Done,
                    fault: Some(e.to_string()),
                });
                break Termination::SkillFault;
            }
        };
        if call == SkillCall::Done {
            steps.push(StepRecord { call, fault: None });
            break Termination::Done;
        }
        let outcome = world.apply(scenario, &call, cfg, th);
        let fault = outcome.err().map(|e| e.to_string());
        steps.push(StepRecord {
            call,
            fault: fault.clone(),
        });
        match fault {
            Some(f) => {
                consecutive += 1;
                if consecutive >= cfg.max_consecutive_faults {
                    break Termination::SkillFault;
                }
                last_fault = Some(f);
            }
            None => consecutive = 0,
        }
    };
    EpisodeLog {
        scenario_id: scenario.id.clone(),
        policy: policy.name(),
        steps,
        path_length: world.path_length(),
        path: world.path,
        steps_used: world.steps_used,
        termination,
        final_layout: world.layout,
        held: world.held,
    }
}
