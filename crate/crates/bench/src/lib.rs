//! Shared inputs for the benchmarks.

use tabletask_core::layout::Layout;
use tabletask_core::scene::{synthetic_catalog, TaskScenario, TaskType};
use tabletask_core::taskgen::{generate, probe_layout, sample_pool, GenerationConfig, GenerationRequest, MockBackend};
use tabletask_core::util::mix_seed;

pub fn request(task_type: TaskType, i: u64) -> GenerationRequest {
    let catalog = synthetic_catalog(0);
    let seed = mix_seed(0xbe4c, i);
    let pool = sample_pool(&catalog, task_type, seed).expect("synthetic catalog is large enough");
    GenerationRequest::new(task_type, pool, seed)
}

pub fn scenario(req: &GenerationRequest, cfg: &GenerationConfig) -> TaskScenario {
    let mut backend = MockBackend::new(req, cfg);
    generate(req, &mut backend, cfg).expect("mock scenarios are feasible")
}

/// One solved scenario per task type.
pub fn solved(cfg: &GenerationConfig) -> Vec<(TaskScenario, Layout)> {
    TaskType::ALL
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let s = scenario(&request(*t, i as u64), cfg);
            let layout = probe_layout(&s, cfg).expect("mock scenarios have layouts");
            (s, layout)
        })
        .collect()
}
