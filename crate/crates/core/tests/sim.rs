mod common;

use common::*;
use tabletask_core::eval::{episode_score, AtomContext};
use tabletask_core::layout::*;
use tabletask_core::relations::{scene_relations, RelationThresholds, RelationTriple};
use tabletask_core::scene::{distance, AssetRecord, Box3, GoalAtom, RelationLabel::*, TaskScenario};
use tabletask_core::sim::*;

fn obj(uid: &str, center: [f64; 3], half: [f64; 3], support: &str) -> PlacedObject {
    PlacedObject {
        uid: uid.into(),
        bbox: Box3::new(center, half, 0.0),
        support_uid: support.into(),
        inside: false,
        state: None,
    }
}

fn layout(objects: Vec<PlacedObject>) -> Layout {
    Layout {
        table: TableSpec::default(),
        objects,
        seed: 0,
    }
}

fn th() -> RelationThresholds {
    RelationThresholds::default()
}

/// Cube at the table center, plate off to the left with a cup on it.
fn kitchen() -> (TaskScenario, Layout) {
    let mut cup = cube("cup");
    cup.states = vec![];
    let pool: Vec<AssetRecord> = vec![cube("cube"), plate("plate"), cup, asset("laptop", [0.3, 0.2, 0.02])];
    let s = scenario(pool, vec![], vec![]);
    let l = layout(vec![
        obj("cube", [0.0, 0.0, 0.03], [0.03; 3], TABLE_UID),
        obj("plate", [0.0, 0.3, 0.01], [0.12, 0.12, 0.01], TABLE_UID),
        obj("cup", [0.0, 0.3, 0.05], [0.03; 3], "plate"),
        PlacedObject {
            state: Some("closed".into()),
            ..obj("laptop", [0.0, -0.3, 0.01], [0.15, 0.1, 0.01], TABLE_UID)
        },
    ]);
    (s, l)
}

#[test]
fn pick_path_goes_through_pre_grasp() {
    let (_, l) = kitchen();
    let cfg = SimConfig::default();
    let mut w = WorldState::new(l, &cfg);
    let home = cfg.home(&w.layout.table);
    w.apply_pick("cube", &cfg).unwrap();
    assert_eq!(w.held.as_ref().unwrap().uid, "cube");
    assert!(!w.layout.contains("cube"));
    let grasp = [0.0, 0.0, 0.06];
    let pre = [0.0, 0.0, 0.06 + cfg.clearance];
    let expected = distance(home, pre) + distance(pre, grasp);
    assert!((w.path_length() - expected).abs() < 1e-12);
    assert_eq!(w.effector, grasp);
}

#[test]
fn pick_errors_are_distinguishable() {
    let (_, l) = kitchen();
    let cfg = SimConfig::default();
    let mut w = WorldState::new(l, &cfg);
    assert_eq!(
        w.apply_pick("plate", &cfg),
        Err(SkillError::Blocked {
            uid: "plate".into(),
            by: "cup".into()
        })
    );
    assert_eq!(w.apply_pick("ghost", &cfg), Err(SkillError::UnknownObject("ghost".into())));
    w.apply_pick("cube", &cfg).unwrap();
    assert_eq!(w.apply_pick("cup", &cfg), Err(SkillError::OccupiedHand("cube".into())));

    let near_reach = SimConfig {
        reach: 0.3,
        ..SimConfig::default()
    };
    let (_, l) = kitchen();
    let mut w = WorldState::new(l, &near_reach);
    assert_eq!(w.apply_pick("cube", &near_reach), Err(SkillError::OutOfReach("cube".into())));
}

#[test]
fn place_on_table_and_on_plate() {
    let (_, l) = kitchen();
    let cfg = SimConfig::default();
    let mut w = WorldState::new(l, &cfg);
    assert_eq!(w.apply_place(&PlaceTarget::default(), &cfg, &th()), Err(SkillError::EmptyHand));

    w.apply_pick("cube", &cfg).unwrap();
    let before = w.clone();
    let onto_laptop = PlaceTarget {
        xy: Some([0.0, -0.3]),
        ..PlaceTarget::default()
    };
    assert!(matches!(w.apply_place(&onto_laptop, &cfg, &th()), Err(SkillError::InvalidTarget(_))));
    assert_eq!(w, before);

    let clear = PlaceTarget {
        xy: Some([0.2, 0.0]),
        ..PlaceTarget::default()
    };
    w.apply_place(&clear, &cfg, &th()).unwrap();
    assert!(w.held.is_none());
    assert_eq!(w.layout.aabb("cube").unwrap().min[2], 0.0);

    w.apply_pick("cup", &cfg).unwrap();
    let onto_plate = PlaceTarget {
        support_uid: Some("plate".into()),
        xy: Some([0.05, 0.25]),
        ..PlaceTarget::default()
    };
    w.apply_place(&onto_plate, &cfg, &th()).unwrap();
    let cup = w.layout.aabb("cup").unwrap();
    assert!((cup.min[2] - 0.02).abs() < 1e-12);
    let rels = scene_relations(&w.layout, &th());
    assert!(rels.contains(&RelationTriple::new("cup", On, "plate")));
    w.layout.check_invariants().unwrap();
}

#[test]
fn set_state_checks_the_asset() {
    let (s, l) = kitchen();
    let cfg = SimConfig::default();
    let mut w = WorldState::new(l, &cfg);
    w.apply_set_state(&s, "laptop", "open").unwrap();
    assert_eq!(w.layout.get("laptop").unwrap().state.as_deref(), Some("open"));
    assert!(matches!(w.apply_set_state(&s, "cup", "open"), Err(SkillError::UnknownState { .. })));
}

fn score(s: &TaskScenario, log: &EpisodeLog) -> f64 {
    let ctx = AtomContext::from_world(&log.final_layout, log.held.as_ref(), &th());
    episode_score(&s.goals, &ctx).unwrap().score
}

#[test]
fn oracle_puts_cube_on_plate() {
    let (mut s, l) = kitchen();
    s.goals.disjuncts = vec![vec![GoalAtom::relation("cube", On, "plate")]];
    let cfg = SimConfig::default();
    let mut oracle = OraclePolicy::new(&s, &l, &cfg, &th());
    let plan = oracle.plan().unwrap().clone();
    assert_eq!(plan.steps.len(), 2);
    assert_eq!(plan.steps[0].call, SkillCall::Pick { uid: "cube".into() });
    let SkillCall::Place(t) = &plan.steps[1].call else { panic!() };
    assert_eq!(t.support_uid.as_deref(), Some("plate"));

    let log = run_episode(&s, &l, &mut oracle, &cfg, &th());
    assert_eq!(log.termination, Termination::Done);
    assert_eq!(score(&s, &log), 1.0);
    assert_eq!(log.steps.last().unwrap().call, SkillCall::Done);
    let l_min = shortest_path_length(&s, &l, &cfg, &th()).unwrap();
    assert!(log.path_length >= l_min);
}

#[test]
fn long_conjunction_uses_one_pick_place_pair_per_atom() {
    let (mut s, l) = kitchen();
    s.goals.disjuncts = vec![vec![
        GoalAtom::relation("cube", Left, "laptop"),
        GoalAtom::relation("cup", Front, "cube"),
        GoalAtom::relation("plate", Back, "cube"),
    ]];
    let cfg = SimConfig::default();
    let plan = plan_demonstration(&s, &l, &cfg, &th()).unwrap();
    let picks = plan.steps.iter().filter(|p| matches!(p.call, SkillCall::Pick { .. })).count();
    let places = plan.steps.iter().filter(|p| matches!(p.call, SkillCall::Place(_))).count();
    assert_eq!((picks, places), (3, 3));
    let log = run_episode(&s, &l, &mut OraclePolicy::from_plan(Ok(plan)), &cfg, &th());
    assert_eq!(score(&s, &log), 1.0);
}

#[test]
fn state_goal_is_a_single_set_state() {
    let (mut s, l) = kitchen();
    s.goals.disjuncts = vec![vec![GoalAtom::state("laptop", "open")]];
    let cfg = SimConfig::default();
    let plan = plan_demonstration(&s, &l, &cfg, &th()).unwrap();
    assert_eq!(
        plan.steps.iter().map(|p| p.call.clone()).collect::<Vec<_>>(),
        vec![SkillCall::SetState {
            uid: "laptop".into(),
            state: "open".into()
        }]
    );
    assert_eq!(shortest_path_length(&s, &l, &cfg, &th()).unwrap(), 0.0);
}

#[test]
fn oracle_skips_to_an_achievable_disjunct() {
    let (mut s, l) = kitchen();
    s.goals.disjuncts = vec![
        vec![GoalAtom::relation("laptop", On, "cube")],
        vec![GoalAtom::relation("cube", On, "plate")],
    ];
    let plan = plan_demonstration(&s, &l, &SimConfig::default(), &th()).unwrap();
    assert_eq!(plan.disjunct, 1);
}

#[test]
fn infeasible_goals_fault_the_oracle() {
    let (mut s, l) = kitchen();
    s.goals.disjuncts = vec![vec![GoalAtom::relation("laptop", In, "cube")]];
    let cfg = SimConfig::default();
    let mut oracle = OraclePolicy::new(&s, &l, &cfg, &th());
    assert!(oracle.plan().is_err());
    let log = run_episode(&s, &l, &mut oracle, &cfg, &th());
    assert_eq!(log.termination, Termination::SkillFault);
    assert!(log.steps[0].fault.as_ref().unwrap().contains("no goal disjunct"));
}

#[test]
fn null_policy_does_nothing() {
    let (mut s, l) = kitchen();
    s.goals.disjuncts = vec![vec![GoalAtom::relation("cube", On, "plate")]];
    let log = run_episode(&s, &l, &mut NullPolicy, &SimConfig::default(), &th());
    assert_eq!(log.termination, Termination::Done);
    assert_eq!(log.path_length, 0.0);
    assert_eq!(log.steps_used, 0);
    assert_eq!(score(&s, &log), 0.0);
}

#[test]
fn budget_and_fault_limits_end_episodes() {
    let (s, l) = kitchen();
    let toggle = SkillCall::SetState {
        uid: "laptop".into(),
        state: "open".into(),
    };
    let cfg = SimConfig::default();
    let log = run_episode(&s, &l, &mut ScriptedPolicy::new(vec![toggle; 100]), &cfg, &th());
    assert_eq!(log.termination, Termination::BudgetExhausted);
    assert_eq!(log.steps_used, 60);

    let bad = SkillCall::Pick { uid: "plate".into() };
    let log = run_episode(&s, &l, &mut ScriptedPolicy::new(vec![bad; 5]), &cfg, &th());
    assert_eq!(log.termination, Termination::SkillFault);
    assert_eq!(log.steps.len(), 3);
    assert_eq!(log.final_layout, l);
}

#[test]
fn illegal_skills_never_break_hold_alternation() {
    let (s, l) = kitchen();
    let cfg = SimConfig::default();
    let calls = vec![
        SkillCall::Place(PlaceTarget::default()),
        SkillCall::Pick { uid: "cube".into() },
        SkillCall::Pick { uid: "cup".into() },
        SkillCall::Place(PlaceTarget {
            xy: Some([0.25, -0.1]),
            ..PlaceTarget::default()
        }),
    ];
    let log = run_episode(&s, &l, &mut ScriptedPolicy::new(calls), &cfg, &th());
    assert_eq!(log.termination, Termination::Done);
    let faults: Vec<bool> = log.steps.iter().map(|s| s.fault.is_some()).collect();
    assert_eq!(faults, vec![true, false, true, false, false]);
    assert_eq!(log.final_layout.objects.len(), l.objects.len());
    assert!(log.held.is_none());
}

#[test]
fn episodes_are_deterministic() {
    let (mut s, l) = kitchen();
    s.goals.disjuncts = vec![vec![GoalAtom::relation("cube", Near, "plate"), GoalAtom::state("laptop", "open")]];
    let cfg = SimConfig::default();
    let a = run_episode(&s, &l, &mut OraclePolicy::new(&s, &l, &cfg, &th()), &cfg, &th());
    let b = run_episode(&s, &l, &mut OraclePolicy::new(&s, &l, &cfg, &th()), &cfg, &th());
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn shortest_path_on_collinear_points() {
    // Home, grasp and place points on one line with unit direction
    // (0.8, 0, -0.6): 0.3 m to the grasp, then 0.4 m to the place point.
    let pool = vec![
        cube("a"),
        {
            let mut p = plate("tall");
            p.footprint = [0.06, 0.06, 0.26];
            p
        },
        {
            let mut p = plate("low");
            p.footprint = [0.06, 0.06, 0.02];
            p
        },
    ];
    let mut s = scenario(pool, vec![], vec![]);
    s.goals.disjuncts = vec![vec![GoalAtom::relation("a", On, "low")]];
    let l = layout(vec![
        obj("tall", [0.0, 0.0, 0.13], [0.03, 0.03, 0.13], TABLE_UID),
        obj("a", [0.0, 0.0, 0.29], [0.03; 3], "tall"),
        obj("low", [0.32, 0.0, 0.01], [0.03, 0.03, 0.01], TABLE_UID),
    ]);
    let cfg = SimConfig {
        home_offset: [0.16, 0.0, 0.5],
        ..SimConfig::default()
    };
    let home = cfg.home(&l.table);
    assert!((distance(home, [0.0, 0.0, 0.32]) - 0.3).abs() < 1e-12);
    assert!((distance([0.0, 0.0, 0.32], [0.32, 0.0, 0.08]) - 0.4).abs() < 1e-12);
    let len = shortest_path_length(&s, &l, &cfg, &th()).unwrap();
    assert!((len - 0.7).abs() < 1e-9, "{len}");
}

#[test]
fn noisy_policy_faults_at_rate_one() {
    let (mut s, l) = kitchen();
    s.goals.disjuncts = vec![vec![GoalAtom::relation("cube", On, "plate")]];
    let cfg = SimConfig::default();
    let oracle = OraclePolicy::new(&s, &l, &cfg, &th());
    let log = run_episode(&s, &l, &mut NoisyPolicy::new(oracle.clone(), 1.0, 3), &cfg, &th());
    assert_eq!(log.termination, Termination::SkillFault);
    assert_eq!(log.steps_used, 0);
    let log = run_episode(&s, &l, &mut NoisyPolicy::new(oracle, 0.0, 3), &cfg, &th());
    assert_eq!(score(&s, &log), 1.0);
}

#[test]
fn skill_calls_round_trip_as_json() {
    let calls = vec![
        SkillCall::Pick { uid: "0001".into() },
        SkillCall::Place(PlaceTarget {
            support_uid: Some("0002".into()),
            inside: true,
            xy: None,
            yaw: Some(0.0),
        }),
        SkillCall::SetState {
            uid: "0003".into(),
            state: "open".into(),
        },
        SkillCall::Done,
    ];
    for c in calls {
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SkillCall>(&text).unwrap(), c);
    }
    let c: SkillCall = serde_json::from_str(r#"{"skill":"place","xy":[0.1,0.2]}"#).unwrap();
    assert_eq!(
        c,
        SkillCall::Place(PlaceTarget {
            xy: Some([0.1, 0.2]),
            ..PlaceTarget::default()
        })
    );
}
