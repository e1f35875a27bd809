use super::*;
use crate::layout::{TableSpec, TABLE_UID};
use crate::scene::{Box3, SceneGraph, TaskScenario, TaskType};
use proptest::prelude::*;

fn result(score: f64, l: f64, p: f64) -> EpisodeResult {
    EpisodeResult {
        scenario_id: "s".into(),
        atom_results: vec![],
        score,
        success: score == 1.0,
        l,
        p,
        termination: None,
    }
}

#[test]
fn sr_is_the_mean_score() {
    let rs = [result(1.0, 1.0, 1.0), result(0.0, 1.0, 1.0), result(0.5, 1.0, 1.0)];
    assert!((sr(&rs).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(sr(&[result(0.0, 1.0, 0.0)]).unwrap(), 0.0);
    assert_eq!(sr(&[]), Err(EvalError::Empty));
    assert_eq!(spl(&[]), Err(EvalError::Empty));
}

#[test]
fn spl_fixtures() {
    assert_eq!(spl(&[result(1.0, 0.7, 0.7)]).unwrap(), 1.0);
    assert!((spl(&[result(1.0, 0.7, 1.4)]).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(spl(&[result(0.0, 0.7, 3.0)]).unwrap(), 0.0);
    // Nothing to do and nothing done: full efficiency.
    assert_eq!(spl(&[result(1.0, 0.0, 0.0)]).unwrap(), 1.0);
    // Partial credit discounted by the path ratio.
    assert!((spl(&[result(2.0 / 3.0, 1.0, 2.0)]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

fn placed(uid: &str, center: [f64; 3], state: Option<&str>) -> PlacedObject {
    PlacedObject {
        uid: uid.into(),
        bbox: Box3::new(center, [0.03; 3], 0.0),
        support_uid: TABLE_UID.into(),
        inside: false,
        state: state.map(str::to_string),
    }
}

/// a and b side by side along y, c far away, laptop closed.
fn context() -> AtomContext {
    let layout = Layout {
        table: TableSpec::default(),
        objects: vec![
            placed("a", [0.0, 0.07, 0.03], None),
            placed("b", [0.0, 0.0, 0.03], None),
            placed("c", [0.0, -0.3, 0.03], None),
            placed("laptop", [0.2, 0.3, 0.03], Some("closed")),
        ],
        seed: 0,
    };
    AtomContext::from_world(&layout, None, &RelationThresholds::default())
}

#[test]
fn atoms_check_relations_and_states() {
    let ctx = context();
    assert!(eval_atom(&GoalAtom::relation("a", RelationLabel::Left, "b"), &ctx).unwrap());
    assert!(eval_atom(&GoalAtom::relation("b", RelationLabel::Right, "a"), &ctx).unwrap());
    assert!(!eval_atom(&GoalAtom::relation("a", RelationLabel::Near, "c"), &ctx).unwrap());
    assert!(!eval_atom(&GoalAtom::state("laptop", "open"), &ctx).unwrap());
    assert!(eval_atom(&GoalAtom::state("laptop", "closed"), &ctx).unwrap());
    assert_eq!(
        eval_atom(&GoalAtom::state("ghost", "open"), &ctx),
        Err(EvalError::UnknownUid("ghost".into()))
    );
}

#[test]
fn between_atom_routes_to_ternary_inference() {
    let ctx = context();
    // Centers at y = 0.07, 0, -0.3 are collinear.
    assert!(eval_atom(&GoalAtom::between("b", "a", "c"), &ctx).unwrap());
    assert!(!eval_atom(&GoalAtom::between("a", "b", "c"), &ctx).unwrap());
}

#[test]
fn held_objects_keep_state_but_no_relations() {
    let layout = Layout {
        table: TableSpec::default(),
        objects: vec![placed("b", [0.0, 0.0, 0.03], None)],
        seed: 0,
    };
    let held = placed("a", [0.0, 0.07, 0.03], Some("open"));
    let ctx = AtomContext::from_world(&layout, Some(&held), &RelationThresholds::default());
    assert!(eval_atom(&GoalAtom::state("a", "open"), &ctx).unwrap());
    assert!(!eval_atom(&GoalAtom::relation("a", RelationLabel::Left, "b"), &ctx).unwrap());
}

#[test]
fn partial_credit_and_disjunct_max() {
    let ctx = context();
    let yes = GoalAtom::relation("a", RelationLabel::Left, "b");
    let no = GoalAtom::state("laptop", "open");
    let s = episode_score(&GoalConditionSet::single(vec![yes.clone(), yes.clone(), no.clone()]), &ctx).unwrap();
    assert!((s.score - 2.0 / 3.0).abs() < 1e-12);
    assert!(!s.success);
    assert_eq!(s.atom_results, vec![vec![true, true, false]]);

    let goals = GoalConditionSet {
        disjuncts: vec![vec![yes.clone(), no.clone()], vec![yes.clone(), yes.clone(), no.clone()]],
    };
    let s = episode_score(&goals, &ctx).unwrap();
    assert!((s.score - 2.0 / 3.0).abs() < 1e-12);

    let s = episode_score(&GoalConditionSet::single(vec![yes.clone()]), &ctx).unwrap();
    assert_eq!((s.score, s.success), (1.0, true));
}

fn scenario(id: &str, task_type: TaskType, horizon: usize) -> TaskScenario {
    TaskScenario {
        id: id.into(),
        task_type,
        instruction: String::new(),
        scene_graph: SceneGraph::default(),
        goals: GoalConditionSet::single(vec![GoalAtom::state("x", "open"); horizon]),
        asset_pool: vec![],
        seed: 0,
    }
}

#[test]
fn report_groups_by_type_and_horizon() {
    let scenarios: Vec<TaskScenario> = TaskType::ALL
        .iter()
        .enumerate()
        .map(|(i, t)| scenario(&format!("s{i}"), *t, i % 3 + 1))
        .collect();
    let results: Vec<EpisodeResult> = (0..4)
        .map(|i| EpisodeResult {
            scenario_id: format!("s{i}"),
            ..result(if i % 2 == 0 { 1.0 } else { 0.0 }, 1.0, 2.0)
        })
        .collect();
    let rep = report(&results, &scenarios).unwrap();
    assert_eq!(rep.by_task.len(), 5);
    assert_eq!(rep.by_horizon.len(), 3);
    assert!((rep.overall().sr - 0.5).abs() < 1e-12);
    assert!((rep.overall().spl - 0.25).abs() < 1e-12);
    assert_eq!(rep.failures.get("goals_unmet"), Some(&2));
    assert!(rep.notes.is_empty());
    let text = rep.render();
    for head in ["Spatial", "Appearance", "Common Sense", "Long-Horizon", "Overall"] {
        assert!(text.contains(head), "{text}");
    }
}

#[test]
fn empty_category_is_noted() {
    let scenarios = vec![scenario("s0", TaskType::Spatial, 1)];
    let rep = report(&[EpisodeResult { scenario_id: "s0".into(), ..result(1.0, 1.0, 1.0) }], &scenarios).unwrap();
    assert_eq!(rep.by_task.len(), 2);
    assert_eq!(rep.notes.len(), 3);
    assert!(rep.task(TaskType::Appearance).is_none());
    let dangling = EpisodeResult {
        scenario_id: "zz".into(),
        ..result(1.0, 1.0, 1.0)
    };
    assert_eq!(report(&[dangling], &scenarios), Err(EvalError::DanglingScenario("zz".into())));
}

fn arb_result() -> impl Strategy<Value = EpisodeResult> {
    (0usize..=3, 1usize..=3, 0.0f64..3.0, 0.0f64..6.0).prop_map(|(k, m, l, p)| {
        let k = k.min(m);
        result(k as f64 / m as f64, l, p)
    })
}

proptest! {
    #[test]
    fn spl_never_exceeds_sr(rs in proptest::collection::vec(arb_result(), 1..40)) {
        prop_assert!(spl(&rs).unwrap() <= sr(&rs).unwrap() + 1e-12);
        for r in &rs {
            prop_assert!(r.spl_term() <= r.score);
        }
    }

    #[test]
    fn aggregates_are_permutation_invariant(rs in proptest::collection::vec(arb_result(), 1..20), rot in 0usize..20) {
        let mut shifted = rs.clone();
        shifted.rotate_left(rot % rs.len());
        shifted.reverse();
        prop_assert!((sr(&rs).unwrap() - sr(&shifted).unwrap()).abs() < 1e-12);
        prop_assert!((spl(&rs).unwrap() - spl(&shifted).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn score_is_monotone_in_satisfied_atoms(mask in proptest::collection::vec(any::<bool>(), 1..6), flip in 0usize..6) {
        let ctx = context();
        let yes = GoalAtom::relation("a", RelationLabel::Left, "b");
        let no = GoalAtom::state("laptop", "open");
        let atoms: Vec<GoalAtom> = mask.iter().map(|m| if *m { yes.clone() } else { no.clone() }).collect();
        let mut more = atoms.clone();
        more[flip % atoms.len()] = yes.clone();
        let a = episode_score(&GoalConditionSet::single(atoms), &ctx).unwrap().score;
        let b = episode_score(&GoalConditionSet::single(more), &ctx).unwrap().score;
        prop_assert!(b >= a);
    }
}
