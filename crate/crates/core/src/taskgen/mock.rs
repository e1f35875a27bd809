use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{distractor_pairs, probe_demonstration, GenerationConfig, GenerationRequest, TaskgenError};
use crate::layout::CONTAINER_FLOOR;
use crate::scene::{
    validate_scenario, AssetRecord, GoalAtom, GoalConditionSet, RelationLabel, SceneGraph, SceneGraphEdge,
    SceneGraphNode, TaskScenario, TaskType,
};
use crate::util::mix_seed;

use RelationLabel::*;

/// Template draws tried before giving up on a request.
const VARIANTS: u64 = 64;

const DIRECTIONAL: [RelationLabel; 4] = [Left, Right, Front, Back];
const HORIZONTAL: [RelationLabel; 5] = [Left, Right, Front, Back, Near];

/// Clearance kept between a supported object and its supporter's rim.
const FIT_SLACK: f64 = 0.01;

fn phrase(rel: RelationLabel) -> &'static str {
    match rel {
        Left => "to the left of",
        Right => "to the right of",
        Front => "in front of",
        Back => "behind",
        Near => "next to",
        On => "on",
        In => "in",
        Beneath => "under",
        OutOf => "around",
        Between => "between",
    }
}

fn sorted_xy(a: &AssetRecord) -> [f64; 2] {
    let [x, y, _] = a.footprint;
    [x.min(y), x.max(y)]
}

fn is_plain(a: &AssetRecord) -> bool {
    !a.is_support_surface() && !a.is_container()
}

fn fits_on(obj: &AssetRecord, sup: &AssetRecord) -> bool {
    let (o, s) = (sorted_xy(obj), sorted_xy(sup));
    is_plain(obj) && sup.is_support_surface() && o[0] + FIT_SLACK < s[0] && o[1] + FIT_SLACK < s[1]
}

fn fits_in(obj: &AssetRecord, cont: &AssetRecord) -> bool {
    let (o, c) = (sorted_xy(obj), sorted_xy(cont));
    is_plain(obj)
        && cont.is_container()
        && o[0] + FIT_SLACK < c[0]
        && o[1] + FIT_SLACK < c[1]
        && obj.footprint[2] + CONTAINER_FLOOR + FIT_SLACK < cont.footprint[2]
}

/// A support relation the pair admits, preferring containment.
fn support_relation(obj: &AssetRecord, anchor: &AssetRecord) -> Option<RelationLabel> {
    if fits_in(obj, anchor) {
        Some(In)
    } else if fits_on(obj, anchor) {
        Some(On)
    } else {
        None
    }
}

fn goal_relation(obj: &AssetRecord, anchor: &AssetRecord, rng: &mut ChaCha8Rng) -> RelationLabel {
    match support_relation(obj, anchor) {
        Some(r) if rng.gen_bool(0.5) => r,
        _ => *DIRECTIONAL.choose(rng).expect("non-empty"),
    }
}

struct Draft<'a> {
    pool: &'a [AssetRecord],
    objects: Vec<usize>,
    edges: Vec<(usize, RelationLabel, usize)>,
    states: BTreeMap<usize, String>,
    /// Objects nothing may be put on or in initially.
    no_host: BTreeSet<usize>,
    /// Objects no further edge may attach to.
    closed: BTreeSet<usize>,
    /// Pairs that must not share an initial edge.
    apart: BTreeSet<(usize, usize)>,
    goals: Vec<GoalAtom>,
    instruction: String,
}

impl<'a> Draft<'a> {
    fn new(pool: &'a [AssetRecord]) -> Self {
        Self {
            pool,
            objects: Vec::new(),
            edges: Vec::new(),
            states: BTreeMap::new(),
            no_host: BTreeSet::new(),
            closed: BTreeSet::new(),
            apart: BTreeSet::new(),
            goals: Vec::new(),
            instruction: String::new(),
        }
    }

    fn asset(&self, i: usize) -> &'a AssetRecord {
        &self.pool[i]
    }

    fn uid(&self, i: usize) -> &'a str {
        &self.pool[i].uid
    }

    fn name(&self, i: usize) -> String {
        self.pool[i].name.to_lowercase()
    }

    fn add(&mut self, i: usize) {
        if !self.objects.contains(&i) {
            self.objects.push(i);
        }
    }

    /// Moves `mover` relative to `anchor` as a goal atom.
    fn goal(&mut self, mover: usize, rel: RelationLabel, anchor: usize) {
        self.add(mover);
        self.add(anchor);
        self.no_host.insert(mover);
        if rel.is_support() {
            self.no_host.insert(anchor);
        }
        self.apart.insert((mover.min(anchor), mover.max(anchor)));
        self.goals.push(GoalAtom::relation(self.uid(mover), rel, self.uid(anchor)));
    }

    fn unused(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.pool.len()).filter(|i| !self.objects.contains(i)).collect();
        idx.shuffle(rng);
        idx
    }

    fn fill(&mut self, n: usize, rng: &mut ChaCha8Rng) {
        for i in self.unused(rng) {
            if self.objects.len() >= n {
                break;
            }
            self.add(i);
        }
    }

    fn is_supported(&self, i: usize) -> bool {
        self.edges.iter().any(|(o, r, _)| *o == i && r.is_support())
    }

    fn hosts(&self, i: usize) -> bool {
        self.edges.iter().any(|(_, r, a)| *a == i && r.is_support())
    }

    /// Attaches every object without an edge to one that already has one.
    fn connect(&mut self, rng: &mut ChaCha8Rng) {
        let mut connected: Vec<usize> = self
            .objects
            .iter()
            .copied()
            .filter(|&i| self.edges.iter().any(|(o, _, a)| *o == i || *a == i))
            .collect();
        if connected.is_empty() {
            connected.push(self.objects[0]);
        }
        for o in self.objects.clone() {
            if connected.contains(&o) {
                continue;
            }
            let anchors: Vec<usize> = connected
                .iter()
                .copied()
                .filter(|a| !self.closed.contains(a) && !self.apart.contains(&(o.min(*a), o.max(*a))))
                .collect();
            let Some(&a) = anchors.choose(rng) else {
                continue;
            };
            let can_host = !self.no_host.contains(&a) && !self.is_supported(a) && !self.hosts(a);
            let rel = match support_relation(self.asset(o), self.asset(a)) {
                Some(r) if can_host && rng.gen_bool(0.4) => r,
                _ => *HORIZONTAL.choose(rng).expect("non-empty"),
            };
            self.edges.push((o, rel, a));
            connected.push(o);
        }
    }

    fn init_states(&mut self, rng: &mut ChaCha8Rng) {
        for &i in &self.objects {
            let states = &self.pool[i].states;
            if !states.is_empty() && !self.states.contains_key(&i) {
                let s = states.choose(rng).expect("non-empty").clone();
                self.states.insert(i, s);
            }
        }
    }

    fn description(&self) -> String {
        let mut parts: Vec<String> = self
            .edges
            .iter()
            .map(|&(o, r, a)| format!("The {} is {} the {}.", self.name(o), phrase(r), self.name(a)))
            .collect();
        for (&i, s) in &self.states {
            parts.push(format!("The {} is {s}.", self.name(i)));
        }
        parts.join(" ")
    }

    fn into_scenario(self, req: &GenerationRequest) -> TaskScenario {
        let mut nodes: Vec<SceneGraphNode> = self
            .objects
            .iter()
            .map(|&i| SceneGraphNode {
                object_uid: self.uid(i).to_string(),
                state: self.states.get(&i).cloned(),
            })
            .collect();
        nodes.sort_by(|a, b| a.object_uid.cmp(&b.object_uid));
        let edges = self
            .edges
            .iter()
            .map(|&(o, r, a)| SceneGraphEdge::new(self.uid(o), r, self.uid(a)))
            .collect();
        TaskScenario {
            id: req.scenario_id(),
            task_type: req.task_type,
            instruction: self.instruction.clone(),
            scene_graph: SceneGraph {
                description: self.description(),
                nodes,
                edges,
            },
            goals: GoalConditionSet::single(self.goals),
            asset_pool: req.pool.clone(),
            seed: req.seed,
        }
    }
}

/// Relocate one object relative to an anchor that is named only through
/// its own relation to a third object.
fn spatial(d: &mut Draft, rng: &mut ChaCha8Rng) -> Option<()> {
    let idx = d.unused(rng);
    let (z, y, x) = (*idx.first()?, *idx.get(1)?, *idx.get(2)?);
    d.add(z);
    d.add(y);
    let r1 = *DIRECTIONAL.choose(rng)?;
    d.edges.push((y, r1, z));
    d.closed.insert(z);
    let r2 = goal_relation(d.asset(x), d.asset(y), rng);
    d.goal(x, r2, y);
    d.instruction = format!(
        "Place the {} {} the object that is {} the {}.",
        d.name(x),
        phrase(r2),
        phrase(r1),
        d.name(z)
    );
    Some(())
}

/// Relocate one of two same-category objects told apart by color.
fn appearance(d: &mut Draft, rng: &mut ChaCha8Rng) -> Option<()> {
    let pairs = distractor_pairs(d.pool);
    let &(i, j) = pairs.choose(rng)?;
    let (t, other) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
    let category = d.asset(t).category.clone();
    let anchors: Vec<usize> = d.unused(rng).into_iter().filter(|&a| d.asset(a).category != category).collect();
    let &a = anchors.first()?;
    d.add(t);
    d.add(other);
    let rel = match support_relation(d.asset(t), d.asset(a)) {
        Some(r) => r,
        None => *DIRECTIONAL.choose(rng)?,
    };
    d.goal(t, rel, a);
    let (ta, oa, aa) = (d.asset(t), d.asset(other), d.asset(a));
    d.instruction = format!(
        "Put the {} {}, not the {} one, {} the {} {} {}.",
        ta.color, category, oa.color, phrase(rel), aa.color, aa.material, aa.category
    );
    Some(())
}

fn need_for(category: &str) -> &'static str {
    match category {
        "laptop" => "I need to check my email",
        "bottle" => "I'm thirsty and want a drink",
        "jar" => "I want a spoonful of what is in the jar",
        "marker" => "I need to write a note",
        "soap bottle" => "My hands are dirty",
        _ => "I need to use it",
    }
}

fn chore_for(mover: &AssetRecord, rel: RelationLabel) -> Option<&'static str> {
    let tagged = |t: &str| mover.has_tag(t);
    Some(if tagged("fruit") {
        "The fruit should be served instead of lying loose on the table."
    } else if tagged("drinkware") && rel == On {
        "Guests are arriving and the drinks should be served."
    } else if tagged("utensil") && rel == On {
        "Dinner is about to start and the table needs setting."
    } else if tagged("stationery") && rel == In {
        "The desk is cluttered and needs tidying."
    } else if tagged("toy") && rel == In {
        "Playtime is over and the toys should be put away."
    } else {
        return None;
    })
}

/// A functional pairing (fruit into a bowl, cutlery onto a plate, ...) or
/// opening something to meet a need.
fn common_sense(d: &mut Draft, rng: &mut ChaCha8Rng) -> Option<()> {
    enum Choice {
        Move(usize, RelationLabel, usize, &'static str),
        Open(usize),
    }
    let mut options = Vec::new();
    for (i, m) in d.pool.iter().enumerate() {
        if m.states.iter().any(|s| s == "open") && m.states.iter().any(|s| s == "closed") {
            options.push(Choice::Open(i));
        }
        for (j, a) in d.pool.iter().enumerate() {
            if let Some(rel) = support_relation(m, a) {
                if let Some(chore) = chore_for(m, rel) {
                    options.push(Choice::Move(i, rel, j, chore));
                }
            }
        }
    }
    match *options.choose(rng)? {
        Choice::Move(m, rel, a, chore) => {
            d.goal(m, rel, a);
            d.instruction = format!("{chore} Put the {} {} the {}.", d.name(m), phrase(rel), d.name(a));
        }
        Choice::Open(m) => {
            d.add(m);
            d.states.insert(m, "closed".into());
            d.goals.push(GoalAtom::state(d.uid(m), "open"));
            d.instruction = format!("{}. Open the {}.", need_for(&d.asset(m).category), d.name(m));
        }
    }
    Some(())
}

/// Two or three independent relocations in one conjunction.
fn long_horizon(d: &mut Draft, horizon: usize, rng: &mut ChaCha8Rng) -> Option<()> {
    let idx = d.unused(rng);
    let mut steps = Vec::new();
    for k in 0..horizon {
        let (m, a) = (*idx.get(2 * k)?, *idx.get(2 * k + 1)?);
        let rel = goal_relation(d.asset(m), d.asset(a), rng);
        d.goal(m, rel, a);
        steps.push(format!("put the {} {} the {}", d.name(m), phrase(rel), d.name(a)));
    }
    d.instruction = match steps.as_slice() {
        [one] => format!("{}{}.", one[..1].to_uppercase(), &one[1..]),
        [first, second] => format!("First {first}, then {second}."),
        [first, middle @ .., last] => format!("First {first}, then {}, and finally {last}.", middle.join(", then ")),
        [] => return None,
    };
    Some(())
}

fn draft(req: &GenerationRequest, rng: &mut ChaCha8Rng) -> Option<TaskScenario> {
    let mut d = Draft::new(&req.pool);
    match req.task_type {
        TaskType::Spatial => spatial(&mut d, rng)?,
        TaskType::Appearance => appearance(&mut d, rng)?,
        TaskType::CommonSense => common_sense(&mut d, rng)?,
        TaskType::LongHorizon => {
            let horizon = req.horizon.unwrap_or_else(|| rng.gen_range(2..=3));
            long_horizon(&mut d, horizon, rng)?
        }
    }
    let n = req.num_objects_min.max(d.objects.len()) + rng.gen_range(0..=1);
    d.fill(n.min(req.pool.len()), rng);
    d.connect(rng);
    d.init_states(rng);
    Some(d.into_scenario(req))
}

/// Template-driven scenario for the request's task type that passes
/// validation, has a feasible layout with no goal atom already holding, and
/// admits an oracle demonstration. Deterministic in the request.
pub fn mock_generate(req: &GenerationRequest, cfg: &GenerationConfig) -> Result<TaskScenario, TaskgenError> {
    req.validate()?;
    if req.task_type == TaskType::Appearance && distractor_pairs(&req.pool).is_empty() {
        return Err(TaskgenError::InvalidRequest(
            "pool has no same-category pair in different colors".into(),
        ));
    }
    let mut last = String::from("no template fits the pool");
    for variant in 0..VARIANTS {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(req.seed, variant));
        let Some(scenario) = draft(req, &mut rng) else {
            continue;
        };
        let checked = validate_scenario(&scenario)
            .map_err(TaskgenError::from)
            .and_then(|_| probe_demonstration(&scenario, cfg));
        match checked {
            Ok(_) => return Ok(scenario),
            Err(e) => last = e.to_string(),
        }
    }
    Err(TaskgenError::Infeasible(format!("no executable draft in {VARIANTS} variants; last: {last}")))
}
