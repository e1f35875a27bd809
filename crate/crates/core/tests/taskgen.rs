use std::collections::BTreeSet;

use proptest::prelude::*;
use tabletask_core::eval::{episode_score, eval_atom, AtomContext};
use tabletask_core::relations::scene_relations;
use tabletask_core::relations::RelationTriple;
use tabletask_core::scene::{
    parse_scenario, save_scenario, synthetic_catalog, AssetRecord, RelationLabel, ScenarioError, SemanticError,
    TaskType,
};
use tabletask_core::sim::{run_episode, shortest_path_length, OraclePolicy};
use tabletask_core::taskgen::*;

const FIXTURE: &str = include_str!("fixtures/reply_with_prose.txt");

fn catalog() -> Vec<AssetRecord> {
    synthetic_catalog(0)
}

fn request(task_type: TaskType, seed: u64) -> GenerationRequest {
    GenerationRequest::new(task_type, sample_pool(&catalog(), task_type, seed).unwrap(), seed)
}

fn fixture_request() -> GenerationRequest {
    let uids = ["0000", "0040", "0056", "0072", "0096", "0001"];
    let pool = catalog().into_iter().filter(|a| uids.contains(&a.uid.as_str())).collect();
    GenerationRequest::new(TaskType::CommonSense, pool, 11)
}

#[test]
fn pool_is_deterministic_and_sized() {
    let cat = catalog();
    let a = sample_pool(&cat, TaskType::Spatial, 3).unwrap();
    assert_eq!(a, sample_pool(&cat, TaskType::Spatial, 3).unwrap());
    assert_eq!(a.len(), POOL_SIZE);
    let uids: BTreeSet<&str> = a.iter().map(|x| x.uid.as_str()).collect();
    assert_eq!(uids.len(), POOL_SIZE);
    assert_ne!(a, sample_pool(&cat, TaskType::Spatial, 4).unwrap());
}

#[test]
fn appearance_pools_carry_a_color_distractor() {
    let cat = catalog();
    for seed in 0..50 {
        let pool = sample_pool(&cat, TaskType::Appearance, seed).unwrap();
        let found = pool.iter().enumerate().any(|(i, a)| {
            pool[i + 1..].iter().any(|b| a.category == b.category && a.color != b.color)
        });
        assert!(found, "seed {seed}");
    }
}

#[test]
fn small_catalog_is_rejected() {
    let cat: Vec<AssetRecord> = catalog().into_iter().take(40).collect();
    assert!(matches!(
        sample_pool(&cat, TaskType::Spatial, 0),
        Err(TaskgenError::CatalogTooSmall { have: 40, need: 50 })
    ));
}

#[test]
fn prompt_carries_the_task_fragment() {
    let spatial = build_prompt(&request(TaskType::Spatial, 0));
    assert!(spatial.contains("spatial reasoning ability"));
    assert!(!spatial.contains("[Task specified prompt]"));
    assert!(!spatial.contains("[Num_of_objects]"));
    assert!(spatial.contains("at least 5 objects"));

    let long = build_prompt(&request(TaskType::LongHorizon, 0));
    for t in [TaskType::Spatial, TaskType::Appearance, TaskType::CommonSense] {
        assert!(!long.contains(task_fragment(t).unwrap()));
    }
    assert!(!long.contains("[Task specified prompt]"));
    assert!(long.contains("Scene Graph:"));
}

#[test]
fn prompt_lists_each_asset_once() {
    let mut req = fixture_request();
    req.pool.retain(|a| ["0000", "0040", "0056"].contains(&a.uid.as_str()));
    req.num_objects_min = 2;
    let p = build_prompt(&req);
    assert_eq!(p.matches("- Name: ").count(), 3);
    assert_eq!(p.matches("  UID: ").count(), 3);
    assert!(p.contains("States: open, closed"));
    assert!(p.contains("States: None"));

    for seed in 0..10 {
        let req = request(TaskType::ALL[seed % 4], seed as u64);
        let p = build_prompt(&req);
        for a in &req.pool {
            assert_eq!(p.matches(&format!("UID: {}\n", a.uid)).count(), 1, "{}", a.uid);
        }
    }
}

#[test]
fn reply_with_prose_and_comments_parses() {
    let req = fixture_request();
    let s = parse_reply(FIXTURE, &req).unwrap();
    assert_eq!(s.id, req.scenario_id());
    assert_eq!(s.goals.disjuncts.len(), 2);
    assert_eq!(s.goals.disjuncts[1].len(), 2);
    assert_eq!(s.goals.disjuncts[1][1].obj1_state.as_deref(), Some("open"));
    assert_eq!(s.goals.disjuncts[1][1].relation, None);
    // "top" is read as on.
    assert_eq!(s.scene_graph.edges[0].relation, RelationLabel::On);
    assert_eq!(s.scene_graph.nodes.len(), 5);
    assert_eq!(s.asset_pool, req.pool);
}

#[test]
fn block_extraction_prefers_fences() {
    assert_eq!(extract_block("a {\"x\": 1} b"), Some("{\"x\": 1}"));
    assert_eq!(extract_block("see {x}\n```json\n{\"y\": \"}\"}\n```"), Some("{\"y\": \"}\"}"));
    assert_eq!(extract_block("{ unbalanced"), None);
    assert_eq!(extract_block("no braces at all"), None);
    assert_eq!(sanitize("{\"a\": \"//x\", // note\n\"b\": [1, 2,],}"), "{\"a\": \"//x\", \n\"b\": [1, 2]}");
}

#[test]
fn mirrored_goal_is_a_circular_transformation() {
    let req = fixture_request();
    // Goal "plate right of mug" mirrors the initial edge "mug left of plate".
    let mirrored = FIXTURE.replacen(
        "\"obj1_uid\": \"0000\",\n                \"obj1_state\": \"none\",\n                \"obj2\": \"White Ceramic Bowl\",\n                \"obj2_uid\": \"0096\",\n                \"position\": \"in\"",
        "\"obj1_uid\": \"0072\",\n                \"obj1_state\": \"none\",\n                \"obj2\": \"White Enamel Mug\",\n                \"obj2_uid\": \"0040\",\n                \"position\": \"right\"",
        1,
    );
    assert_ne!(mirrored, FIXTURE);
    let err = parse_reply(&mirrored, &req).unwrap_err();
    match err {
        TaskgenError::Reply(e) => assert_eq!(e.semantic_kind(), Some(&SemanticError::CircularTransformation)),
        other => panic!("{other}"),
    }
}

#[test]
fn reply_errors_are_classified() {
    let req = fixture_request();
    assert!(matches!(parse_reply("I cannot help with that.", &req), Err(TaskgenError::NoStructuredBlock)));
    assert!(matches!(
        parse_reply("{\"instruction\": \"x\"}", &req),
        Err(TaskgenError::Reply(ScenarioError::Schema { .. }))
    ));
    let dangling = FIXTURE.replacen("\"obj2_uid\": \"0096\"", "\"obj2_uid\": \"9999\"", 1);
    match parse_reply(&dangling, &req) {
        Err(TaskgenError::Reply(e)) => assert_eq!(e.semantic_kind(), Some(&SemanticError::DanglingUid("9999".into()))),
        other => panic!("{other:?}"),
    }
    let mut strict = fixture_request();
    strict.num_objects_min = 6;
    assert!(matches!(parse_reply(FIXTURE, &strict), Err(TaskgenError::Reply(ScenarioError::Semantic { .. }))));
}

proptest! {
    #[test]
    fn parse_reply_is_total(text in ".{0,400}") {
        let _ = parse_reply(&text, &fixture_request());
    }

    #[test]
    fn truncated_replies_never_panic(cut in 0usize..2200, noise in "[{}\\[\\]\",:/ a-z0-9]{0,20}") {
        let mut text: String = FIXTURE.chars().take(cut).collect();
        text.push_str(&noise);
        let _ = parse_reply(&text, &fixture_request());
    }
}

#[test]
fn mock_backend_generation_is_stable() {
    let cfg = GenerationConfig::default();
    let req = request(TaskType::Spatial, 21);
    let a = generate(&req, &mut MockBackend::new(&req, &cfg), &cfg).unwrap();
    let b = generate(&req, &mut MockBackend::new(&req, &cfg), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, mock_generate(&req, &cfg).unwrap());
    assert_eq!(save_scenario(&a), save_scenario(&b));
}

#[test]
fn garbage_exhausts_retries_with_every_diagnostic() {
    let cfg = GenerationConfig {
        retries: 2,
        ..GenerationConfig::default()
    };
    let req = request(TaskType::Spatial, 1);
    let mut prompts: Vec<String> = Vec::new();
    let mut backend = |p: &str| -> Result<String, BackendError> {
        prompts.push(p.to_string());
        Ok("not json".to_string())
    };
    match generate(&req, &mut backend, &cfg) {
        Err(TaskgenError::RetriesExhausted { diagnostics }) => assert_eq!(diagnostics.len(), 3),
        other => panic!("{other:?}"),
    }
    assert_eq!(prompts.len(), 3);
    assert!(!prompts[0].contains("previous reply was rejected"));
    assert!(prompts[1].contains("previous reply was rejected: reply contains no JSON object"));
}

#[test]
fn repair_round_recovers() {
    let cfg = GenerationConfig::default();
    let req = fixture_request();
    let mut replies = vec![FIXTURE.to_string(), "```json\n{\"instruction\": 3}\n```".to_string()];
    let mut backend = move |_: &str| -> Result<String, BackendError> { Ok(replies.pop().unwrap()) };
    let s = generate(&req, &mut backend, &cfg).unwrap();
    assert_eq!(s.goals.disjuncts.len(), 2);
}

#[test]
fn transport_errors_are_not_retried() {
    let cfg = GenerationConfig::default();
    let req = request(TaskType::Spatial, 1);
    let mut calls = 0;
    let mut backend = |_: &str| -> Result<String, BackendError> {
        calls += 1;
        Err(BackendError::Timeout(30))
    };
    assert!(matches!(generate(&req, &mut backend, &cfg), Err(TaskgenError::Backend(BackendError::Timeout(30)))));
    assert_eq!(calls, 1);
}

#[test]
fn recorded_transcripts_replay() {
    let cfg = GenerationConfig::default();
    let req = request(TaskType::Appearance, 8);
    let mut rec = RecordingBackend::new(MockBackend::new(&req, &cfg));
    let live = generate(&req, &mut rec, &cfg).unwrap();
    assert_eq!(rec.records().len(), 1);
    assert_eq!(rec.records()[0].prompt, build_prompt(&req));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.jsonl");
    write_transcript(std::fs::File::create(&path).unwrap(), rec.records()).unwrap();
    let mut replay = TranscriptBackend::load(&path).unwrap();
    assert_eq!(generate(&req, &mut replay, &cfg).unwrap(), live);
    assert!(matches!(replay.complete("again"), Err(BackendError::Exhausted(1))));
}

#[test]
fn long_horizon_goals_chain_several_atoms() {
    let cfg = GenerationConfig::default();
    for seed in 0..20 {
        let s = mock_generate(&request(TaskType::LongHorizon, seed), &cfg).unwrap();
        let h = s.goals.horizon();
        assert!((2..=3).contains(&h), "{h}");
    }
    for h in 1..=3 {
        let mut req = request(TaskType::LongHorizon, 5);
        req.horizon = Some(h);
        assert_eq!(mock_generate(&req, &cfg).unwrap().goals.horizon(), h);
    }
    let mut req = request(TaskType::LongHorizon, 5);
    req.horizon = Some(4);
    assert!(matches!(mock_generate(&req, &cfg), Err(TaskgenError::InvalidRequest(_))));
}

#[test]
fn spatial_instruction_names_the_anchor_by_relation() {
    let cfg = GenerationConfig::default();
    for seed in 0..20 {
        let s = mock_generate(&request(TaskType::Spatial, seed), &cfg).unwrap();
        let atom = &s.goals.disjuncts[0][0];
        let anchor = atom.obj2_uid.as_deref().unwrap();
        let anchor_name = s.asset(anchor).unwrap().name.to_lowercase();
        let text = s.instruction.to_lowercase();
        assert!(!text.contains(&anchor_name), "{text}");
        let edge = s.scene_graph.edges.iter().find(|e| e.object_uid == anchor).unwrap();
        assert!(text.contains(&s.asset(&edge.anchor_uid).unwrap().name.to_lowercase()), "{text}");
        assert!(text.contains("the object that is"), "{text}");
    }
}

#[test]
fn appearance_goal_targets_one_of_a_color_pair() {
    let cfg = GenerationConfig::default();
    for seed in 0..20 {
        let s = mock_generate(&request(TaskType::Appearance, seed), &cfg).unwrap();
        let target = s.asset(&s.goals.disjuncts[0][0].obj1_uid).unwrap();
        let twin = s
            .scene_graph
            .uids()
            .filter_map(|u| s.asset(u))
            .any(|a| a.uid != target.uid && a.category == target.category && a.color != target.color);
        assert!(twin, "{}", s.id);
        assert!(s.instruction.contains(&target.color));
    }
}

#[test]
fn mock_scenarios_reload_and_are_deterministic() {
    let cfg = GenerationConfig::default();
    for seed in 0..40 {
        let req = request(TaskType::ALL[(seed % 4) as usize], seed);
        let s = mock_generate(&req, &cfg).unwrap();
        assert!(s.scene_graph.nodes.len() >= req.num_objects_min);
        let text = save_scenario(&s);
        assert_eq!(parse_scenario(&text).unwrap(), s);
        assert_eq!(save_scenario(&mock_generate(&req, &cfg).unwrap()), text);
    }
}

#[test]
fn generated_layouts_reproduce_the_initial_edges() {
    let cfg = GenerationConfig::default();
    for seed in 0..40 {
        let s = mock_generate(&request(TaskType::ALL[(seed % 4) as usize], seed), &cfg).unwrap();
        let layout = probe_layout(&s, &cfg).unwrap();
        let rels = scene_relations(&layout, &cfg.thresholds);
        for e in &s.scene_graph.edges {
            let t = RelationTriple::new(&e.object_uid, e.relation, &e.anchor_uid);
            assert!(rels.contains(&t), "{} {t:?}", s.id);
        }
        let ctx = AtomContext::from_world(&layout, None, &cfg.thresholds);
        for a in s.goals.atoms() {
            assert!(!eval_atom(a, &ctx).unwrap());
        }
    }
}

#[test]
fn oracle_path_is_never_shorter_than_the_reference() {
    let cfg = GenerationConfig::default();
    for seed in 0..100u64 {
        let s = mock_generate(&request(TaskType::ALL[(seed % 4) as usize], seed), &cfg).unwrap();
        let layout = probe_layout(&s, &cfg).unwrap();
        let l = shortest_path_length(&s, &layout, &cfg.sim, &cfg.thresholds).unwrap();
        let mut oracle = OraclePolicy::new(&s, &layout, &cfg.sim, &cfg.thresholds);
        let log = run_episode(&s, &layout, &mut oracle, &cfg.sim, &cfg.thresholds);
        assert!(log.path_length >= l - 1e-12, "{}: p {} < l {l}", s.id, log.path_length);
        let ctx = AtomContext::from_world(&log.final_layout, log.held.as_ref(), &cfg.thresholds);
        assert_eq!(episode_score(&s.goals, &ctx).unwrap().score, 1.0, "{}", s.id);
    }
}
