//! Pipeline stages. Each reads the previous stage's artifacts from a run
//! directory and writes its own; per-item failures are reported after every
//! other item has been written.

use std::fs;

use rayon::prelude::*;
use tabletask_core::eval::{report as build_report, BenchmarkReport, EpisodeResult};
use tabletask_core::layout::Layout;
use tabletask_core::scene::{save_scenario, TaskScenario, TaskType};
use tabletask_core::sim::{run_episode, shortest_path_length};
use tabletask_core::taskgen::{
    generate as generate_one, probe_layout, sample_pool, BackendError, write_transcript, CompletionBackend, GenerationRequest, MockBackend,
    RecordingBackend, TaskgenError, TranscriptBackend, TranscriptRecord,
};
use tabletask_core::util::mix_seed;

use crate::config::{BackendKind, EngineConfig};
use crate::error::{CliError, Result};
use crate::live::LiveBackend;
use crate::policy::PolicySpec;
use crate::run::{stage_mismatch, write_atomic, RunDir};

/// Runs `f` on a pool of `jobs` threads (all cores when 0).
fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map(|pool| pool.install(f))
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))
}

/// Turns collected per-item failures into the stage's error.
fn finish(stage: &str, failures: Vec<CliError>) -> Result<()> {
    let Some(first) = failures.first() else {
        return Ok(());
    };
    let code = first.exit_code();
    let detail: Vec<String> = failures.iter().map(ToString::to_string).collect();
    let message = format!("{stage}: {} item(s) failed: {}", failures.len(), detail.join("; "));
    Err(match code {
        3 => CliError::Backend(message),
        4 => CliError::Infeasible(message),
        _ => CliError::Validation(message),
    })
}

fn taskgen_error(id: &str, e: TaskgenError) -> CliError {
    let msg = format!("{id}: {e}");
    match e {
        TaskgenError::Backend(_) | TaskgenError::RetriesExhausted { .. } => CliError::Backend(msg),
        TaskgenError::Infeasible(_) => CliError::Infeasible(msg),
        _ => CliError::Validation(msg),
    }
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub count: usize,
    /// Task types assigned round-robin; all four when empty.
    pub mix: Vec<TaskType>,
    pub jobs: usize,
    /// Where to save prompt/reply pairs, if anywhere.
    pub record: Option<std::path::PathBuf>,
}

pub fn requests(cfg: &EngineConfig, args: &GenerateArgs) -> Result<Vec<GenerationRequest>> {
    let catalog = cfg.catalog()?;
    let mix = if args.mix.is_empty() { TaskType::ALL.to_vec() } else { args.mix.clone() };
    (0..args.count)
        .map(|i| {
            let task_type = mix[i % mix.len()];
            let seed = mix_seed(cfg.seed, i as u64);
            let pool = sample_pool(&catalog, task_type, seed).map_err(|e| CliError::Validation(e.to_string()))?;
            let mut req = GenerationRequest::new(task_type, pool, seed);
            req.num_objects_min = cfg.taskgen.num_objects;
            Ok(req)
        })
        .collect()
}

enum Backend {
    Mock(MockBackend),
    Live(LiveBackend),
}

impl CompletionBackend for Backend {
    fn complete(&mut self, prompt: &str) -> Result<String, BackendError> {
        match self {
            Backend::Mock(b) => b.complete(prompt),
            Backend::Live(b) => b.complete(prompt),
        }
    }
}

fn backend_for(cfg: &EngineConfig, req: &GenerationRequest) -> Result<Backend> {
    Ok(match cfg.taskgen.backend {
        BackendKind::Mock => Backend::Mock(MockBackend::new(req, &cfg.generation())),
        BackendKind::Live => Backend::Live(
            LiveBackend::from_env(&cfg.taskgen, |k| std::env::var(k).ok())
                .map_err(|e| CliError::Backend(e.to_string()))?,
        ),
        BackendKind::Transcript => unreachable!("transcript replay is sequential"),
    })
}

/// Generates `count` scenarios into `<run>/scenarios`. Returns the ids written.
pub fn generate(cfg: &EngineConfig, run: &RunDir, args: &GenerateArgs) -> Result<Vec<String>> {
    let dir = run.scenarios();
    RunDir::prepare(&dir)?;
    let gen = cfg.generation();
    let reqs = requests(cfg, args)?;

    let outcomes: Vec<(Result<TaskScenario>, Vec<TranscriptRecord>)> = if cfg.taskgen.backend == BackendKind::Transcript {
        let path = cfg.taskgen.transcript.as_ref().expect("validated");
        let mut replay = RecordingBackend::new(TranscriptBackend::load(path).map_err(|e| CliError::Backend(e.to_string()))?);
        reqs.iter()
            .map(|req| {
                let before = replay.records().len();
                let out = generate_one(req, &mut replay, &gen).map_err(|e| taskgen_error(&req.scenario_id(), e));
                (out, replay.records()[before..].to_vec())
            })
            .collect()
    } else {
        with_jobs(args.jobs, || {
            reqs.par_iter()
                .map(|req| {
                    let mut rec = match backend_for(cfg, req) {
                        Ok(b) => RecordingBackend::new(b),
                        Err(e) => return (Err(e), Vec::new()),
                    };
                    let out = generate_one(req, &mut rec, &gen).map_err(|e| taskgen_error(&req.scenario_id(), e));
                    (out, rec.into_records())
                })
                .collect()
        })?
    };

    let mut written = Vec::new();
    let mut failures = Vec::new();
    let mut transcript = Vec::new();
    for (out, records) in outcomes {
        transcript.extend(records);
        match out {
            Ok(s) => {
                write_atomic(&run.scenario_path(&s.id), &save_scenario(&s))?;
                written.push(s.id);
            }
            Err(e) => failures.push(e),
        }
    }
    if let Some(path) = &args.record {
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        write_transcript(file, &transcript).map_err(|e| CliError::io(path, e))?;
    }
    finish("generate", failures)?;
    Ok(written)
}

/// Builds the initial layout of every scenario into `<run>/layouts`.
pub fn solve(cfg: &EngineConfig, run: &RunDir, jobs: usize) -> Result<usize> {
    let scenarios = run.load_scenarios()?;
    RunDir::prepare(&run.layouts())?;
    let gen = cfg.generation();
    let layouts: Vec<Result<Layout>> = with_jobs(jobs, || {
        scenarios
            .par_iter()
            .map(|s| {
                probe_layout(s, &gen)
                    .map_err(|e| CliError::Infeasible(format!("{}: {e}", s.id)))
            })
            .collect()
    })?;
    let mut failures = Vec::new();
    let mut n = 0;
    for (s, layout) in scenarios.iter().zip(layouts) {
        match layout {
            Ok(l) => {
                write_atomic(&run.layout_path(&s.id), &l.to_json())?;
                n += 1;
            }
            Err(e) => failures.push(e),
        }
    }
    finish("solve", failures)?;
    Ok(n)
}

/// Runs one episode per scenario under `policy` into `<run>/episodes`.
pub fn simulate(cfg: &EngineConfig, run: &RunDir, policy: &PolicySpec, jobs: usize) -> Result<usize> {
    let scenarios = run.load_scenarios()?;
    let layouts: Vec<Layout> = scenarios.iter().map(|s| run.load_layout(&s.id)).collect::<Result<_>>()?;
    RunDir::prepare(&run.episodes())?;
    let logs: Vec<Result<String>> = with_jobs(jobs, || {
        scenarios
            .par_iter()
            .zip(layouts.par_iter())
            .map(|(s, layout)| {
                let mut p = policy.build(s, layout, cfg)?;
                Ok(run_episode(s, layout, p.as_mut(), &cfg.sim, &cfg.thresholds).to_json())
            })
            .collect()
    })?;
    let mut failures = Vec::new();
    let mut n = 0;
    for (s, log) in scenarios.iter().zip(logs) {
        match log {
            Ok(text) => {
                write_atomic(&run.episode_path(&s.id), &text)?;
                n += 1;
            }
            Err(e) => failures.push(e),
        }
    }
    finish("simulate", failures)?;
    Ok(n)
}

/// Scores every episode against its scenario's goals and reference path
/// into `<run>/results.jsonl`.
pub fn evaluate(cfg: &EngineConfig, run: &RunDir, jobs: usize) -> Result<Vec<EpisodeResult>> {
    let scenarios = run.load_scenarios()?;
    if !run.episodes().is_dir() {
        return Err(stage_mismatch(&run.episodes(), "simulate"));
    }
    let mut inputs = Vec::new();
    for s in &scenarios {
        let path = run.episode_path(&s.id);
        if !path.exists() {
            return Err(stage_mismatch(&path, "simulate"));
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let log: tabletask_core::sim::EpisodeLog =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        inputs.push((s, run.load_layout(&s.id)?, log));
    }
    let scored: Vec<Result<EpisodeResult>> = with_jobs(jobs, || {
        inputs
            .par_iter()
            .map(|(s, layout, log)| {
                let l = shortest_path_length(s, layout, &cfg.sim, &cfg.thresholds)
                    .map_err(|e| CliError::Infeasible(format!("{}: {e}", s.id)))?;
                Ok(log.evaluate(s, l, &cfg.thresholds))
            })
            .collect()
    })?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for r in scored {
        match r {
            Ok(r) => results.push(r),
            Err(e) => failures.push(e),
        }
    }
    let mut text = String::new();
    for r in &results {
        text.push_str(&serde_json::to_string(r).expect("result serializes"));
        text.push('\n');
    }
    write_atomic(&run.results(), &text)?;
    finish("evaluate", failures)?;
    Ok(results)
}

pub fn load_results(run: &RunDir) -> Result<Vec<EpisodeResult>> {
    let path = run.results();
    if !path.exists() {
        return Err(stage_mismatch(&path, "evaluate"));
    }
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Aggregates `<run>/results.jsonl` into report.txt and report.json.
pub fn report(run: &RunDir) -> Result<BenchmarkReport> {
    let scenarios = run.load_scenarios()?;
    let results = load_results(run)?;
    let rep = build_report(&results, &scenarios).map_err(|e| CliError::Validation(e.to_string()))?;
    write_atomic(&run.report_text(), &rep.render())?;
    let mut json = serde_json::to_string_pretty(&rep).expect("report serializes");
    json.push('\n');
    write_atomic(&run.report_json(), &json)?;
    Ok(rep)
}
