use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TaskgenError;
use crate::scene::{AssetRecord, TaskType};
use crate::util::mix_seed;

pub const POOL_SIZE: usize = 50;

const SEED_OBJECTS: usize = 5;

/// Index pairs of assets that share a category but differ in color.
pub fn distractor_pairs(pool: &[AssetRecord]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            if pool[i].category == pool[j].category && pool[i].color != pool[j].color {
                out.push((i, j));
            }
        }
    }
    out
}

/// About fifty assets: a few uniformly drawn seeds plus assets sharing a
/// tag with them, topped up uniformly. Appearance pools always contain a
/// same-category, different-color pair. Returned in catalog order.
pub fn sample_pool(catalog: &[AssetRecord], task_type: TaskType, seed: u64) -> Result<Vec<AssetRecord>, TaskgenError> {
    if catalog.len() < POOL_SIZE {
        return Err(TaskgenError::CatalogTooSmall {
            have: catalog.len(),
            need: POOL_SIZE,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, task_type as u64));
    let mut order: Vec<usize> = (0..catalog.len()).collect();
    order.shuffle(&mut rng);

    let seeds = &order[..SEED_OBJECTS];
    let seed_tags: BTreeSet<&str> = seeds
        .iter()
        .flat_map(|&i| catalog[i].tags.iter().map(String::as_str))
        .collect();
    let mut picked: Vec<usize> = seeds.to_vec();
    for &i in &order[SEED_OBJECTS..] {
        if picked.len() == POOL_SIZE {
            break;
        }
        if catalog[i].tags.iter().any(|t| seed_tags.contains(t.as_str())) {
            picked.push(i);
        }
    }
    for &i in &order[SEED_OBJECTS..] {
        if picked.len() == POOL_SIZE {
            break;
        }
        if !picked.contains(&i) {
            picked.push(i);
        }
    }

    if task_type == TaskType::Appearance {
        let current: Vec<AssetRecord> = picked.iter().map(|&i| catalog[i].clone()).collect();
        if distractor_pairs(&current).is_empty() {
            let partner = seeds.iter().find_map(|&s| {
                order.iter().copied().find(|&j| {
                    catalog[j].category == catalog[s].category && catalog[j].color != catalog[s].color
                })
            });
            if let Some(j) = partner {
                picked.pop();
                picked.push(j);
            }
        }
    }

    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| catalog[i].clone()).collect())
}
