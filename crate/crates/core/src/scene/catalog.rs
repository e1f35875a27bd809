//! Procedural asset catalog used in place of a scanned asset collection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AssetRecord, TAG_CONTAINER, TAG_SUPPORT};

struct Category {
    name: &'static str,
    dims: [f64; 3],
    mass: f64,
    colors: &'static [&'static str],
    materials: &'static [&'static str],
    shapes: &'static [&'static str],
    states: &'static [&'static str],
    tags: &'static [&'static str],
}

const CATEGORIES: &[Category] = &[
    Category { name: "apple", dims: [0.08, 0.08, 0.08], mass: 0.18, colors: &["red", "green", "yellow"], materials: &["fresh", "plastic"], shapes: &["round"], states: &[], tags: &["fruit", "food", "kitchen"] },
    Category { name: "banana", dims: [0.18, 0.05, 0.04], mass: 0.12, colors: &["yellow", "green"], materials: &["fresh", "plastic"], shapes: &["curved"], states: &[], tags: &["fruit", "food", "kitchen"] },
    Category { name: "orange", dims: [0.08, 0.08, 0.075], mass: 0.2, colors: &["orange"], materials: &["fresh", "plastic"], shapes: &["round"], states: &[], tags: &["fruit", "food", "kitchen"] },
    Category { name: "lemon", dims: [0.07, 0.06, 0.06], mass: 0.1, colors: &["yellow", "green"], materials: &["fresh", "plastic"], shapes: &["oval"], states: &[], tags: &["fruit", "food", "kitchen"] },
    Category { name: "pear", dims: [0.07, 0.07, 0.1], mass: 0.17, colors: &["green", "yellow", "brown"], materials: &["fresh", "plastic"], shapes: &["teardrop"], states: &[], tags: &["fruit", "food", "kitchen"] },
    Category { name: "mug", dims: [0.12, 0.09, 0.1], mass: 0.3, colors: &["white", "blue", "red", "black", "green"], materials: &["ceramic", "enamel", "glass"], shapes: &["cylindrical"], states: &[], tags: &["drinkware", "kitchen"] },
    Category { name: "cup", dims: [0.08, 0.08, 0.1], mass: 0.05, colors: &["white", "red", "blue", "pink"], materials: &["paper", "plastic", "glass"], shapes: &["tapered"], states: &[], tags: &["drinkware", "kitchen"] },
    Category { name: "bottle", dims: [0.07, 0.07, 0.22], mass: 0.5, colors: &["green", "blue", "clear", "brown"], materials: &["glass", "plastic"], shapes: &["cylindrical"], states: &["open", "closed"], tags: &["drinkware", "kitchen", "stateful"] },
    Category { name: "can", dims: [0.066, 0.066, 0.12], mass: 0.35, colors: &["red", "silver", "blue", "green"], materials: &["aluminum"], shapes: &["cylindrical"], states: &[], tags: &["drinkware", "food"] },
    Category { name: "plate", dims: [0.24, 0.24, 0.02], mass: 0.4, colors: &["white", "blue", "black"], materials: &["porcelain", "ceramic", "melamine"], shapes: &["round", "square"], states: &[], tags: &["kitchen", "tableware", TAG_SUPPORT] },
    Category { name: "tray", dims: [0.36, 0.26, 0.03], mass: 0.6, colors: &["brown", "black", "silver"], materials: &["wooden", "metal", "plastic"], shapes: &["rectangular"], states: &[], tags: &["kitchen", "tableware", TAG_SUPPORT] },
    Category { name: "cutting board", dims: [0.3, 0.2, 0.02], mass: 0.7, colors: &["brown", "white", "green"], materials: &["bamboo", "wooden", "plastic"], shapes: &["rectangular"], states: &[], tags: &["kitchen", TAG_SUPPORT] },
    Category { name: "bowl", dims: [0.2, 0.2, 0.11], mass: 0.35, colors: &["white", "blue", "red", "green"], materials: &["ceramic", "wooden", "glass"], shapes: &["round"], states: &[], tags: &["kitchen", "tableware", TAG_CONTAINER] },
    Category { name: "basket", dims: [0.32, 0.24, 0.16], mass: 0.5, colors: &["brown", "beige", "white"], materials: &["wicker", "plastic"], shapes: &["rectangular"], states: &[], tags: &["storage", "kitchen", TAG_CONTAINER] },
    Category { name: "storage box", dims: [0.28, 0.2, 0.15], mass: 0.45, colors: &["grey", "blue", "white", "black"], materials: &["cardboard", "plastic"], shapes: &["rectangular"], states: &[], tags: &["storage", "office", TAG_CONTAINER] },
    Category { name: "book", dims: [0.22, 0.15, 0.03], mass: 0.5, colors: &["red", "blue", "green", "black", "yellow"], materials: &["paper"], shapes: &["rectangular"], states: &[], tags: &["office", "reading"] },
    Category { name: "pen", dims: [0.14, 0.016, 0.016], mass: 0.02, colors: &["blue", "black", "red"], materials: &["plastic", "metal"], shapes: &["slender"], states: &[], tags: &["office", "stationery"] },
    Category { name: "marker", dims: [0.13, 0.022, 0.022], mass: 0.03, colors: &["black", "red", "green", "blue"], materials: &["plastic"], shapes: &["slender"], states: &["open", "closed"], tags: &["office", "stationery", "stateful"] },
    Category { name: "stapler", dims: [0.15, 0.04, 0.06], mass: 0.25, colors: &["black", "red", "grey"], materials: &["metal", "plastic"], shapes: &["elongated"], states: &[], tags: &["office", "stationery"] },
    Category { name: "laptop", dims: [0.33, 0.23, 0.025], mass: 1.4, colors: &["silver", "black", "grey"], materials: &["aluminum", "plastic"], shapes: &["flat"], states: &["open", "closed"], tags: &["electronics", "office", "stateful"] },
    Category { name: "phone", dims: [0.15, 0.075, 0.016], mass: 0.18, colors: &["black", "white", "blue"], materials: &["glass", "plastic"], shapes: &["flat"], states: &[], tags: &["electronics"] },
    Category { name: "remote control", dims: [0.17, 0.05, 0.022], mass: 0.12, colors: &["black", "grey", "white"], materials: &["plastic"], shapes: &["elongated"], states: &[], tags: &["electronics", "living room"] },
    Category { name: "spoon", dims: [0.16, 0.035, 0.02], mass: 0.04, colors: &["silver", "white", "black"], materials: &["steel", "plastic", "wooden"], shapes: &["slender"], states: &[], tags: &["utensil", "kitchen"] },
    Category { name: "fork", dims: [0.18, 0.03, 0.02], mass: 0.045, colors: &["silver", "black"], materials: &["steel", "plastic"], shapes: &["slender"], states: &[], tags: &["utensil", "kitchen"] },
    Category { name: "knife", dims: [0.2, 0.025, 0.018], mass: 0.06, colors: &["silver", "black"], materials: &["steel", "ceramic"], shapes: &["slender"], states: &[], tags: &["utensil", "kitchen"] },
    Category { name: "sponge", dims: [0.1, 0.07, 0.04], mass: 0.02, colors: &["yellow", "green", "blue", "pink"], materials: &["foam"], shapes: &["rectangular"], states: &[], tags: &["cleaning", "kitchen"] },
    Category { name: "soap bottle", dims: [0.07, 0.05, 0.18], mass: 0.4, colors: &["white", "green", "purple", "clear"], materials: &["plastic"], shapes: &["cylindrical"], states: &["open", "closed"], tags: &["cleaning", "bathroom", "stateful"] },
    Category { name: "toy block", dims: [0.05, 0.05, 0.05], mass: 0.03, colors: &["red", "blue", "green", "yellow"], materials: &["wooden", "plastic"], shapes: &["cubic"], states: &[], tags: &["toy"] },
    Category { name: "rubber duck", dims: [0.08, 0.06, 0.07], mass: 0.04, colors: &["yellow", "pink", "blue"], materials: &["rubber"], shapes: &["duck-shaped"], states: &[], tags: &["toy", "bathroom"] },
    Category { name: "jar", dims: [0.09, 0.09, 0.12], mass: 0.4, colors: &["clear", "amber", "green"], materials: &["glass"], shapes: &["cylindrical"], states: &["open", "closed"], tags: &["kitchen", "food", "stateful"] },
    Category { name: "teapot", dims: [0.2, 0.14, 0.14], mass: 0.8, colors: &["white", "blue", "black", "red"], materials: &["porcelain", "cast iron", "glass"], shapes: &["round"], states: &[], tags: &["kitchen", "drinkware"] },
];

pub const ASSETS_PER_CATEGORY: usize = 8;

fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            c.next()
                .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
                .unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn round_mm(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// A deterministic catalog of `ASSETS_PER_CATEGORY` variants for each of the
/// built-in categories. Containers are never scaled down so they keep room
/// for small contents.
pub fn synthetic_catalog(seed: u64) -> Vec<AssetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(CATEGORIES.len() * ASSETS_PER_CATEGORY);
    for cat in CATEGORIES {
        let container = cat.tags.contains(&TAG_CONTAINER);
        for k in 0..ASSETS_PER_CATEGORY {
            let uid = format!("{:04}", out.len());
            let color = cat.colors[k % cat.colors.len()];
            let material = *cat.materials.choose(&mut rng).expect("materials");
            let shape = *cat.shapes.choose(&mut rng).expect("shapes");
            let scale = if container {
                rng.gen_range(1.0..1.15)
            } else {
                rng.gen_range(0.9..1.1)
            };
            let footprint = cat.dims.map(|d| round_mm(d * scale));
            let size = if scale < 0.97 {
                "small"
            } else if scale > 1.05 {
                "large"
            } else {
                "medium-sized"
            };
            let mut tags: Vec<String> = vec![cat.name.to_string()];
            tags.extend(cat.tags.iter().map(|t| t.to_string()));
            tags.push(color.to_string());
            out.push(AssetRecord {
                uid,
                name: title_case(&format!("{color} {material} {}", cat.name)),
                description: format!("A {size} {shape} {color} {material} {}.", cat.name),
                category: cat.name.to_string(),
                color: color.to_string(),
                shape: shape.to_string(),
                material: material.to_string(),
                footprint,
                mass: round_mm(cat.mass * scale.powi(3)),
                states: cat.states.iter().map(|s| s.to_string()).collect(),
                tags,
            });
        }
    }
    out
}

pub fn category_count() -> usize {
    CATEGORIES.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn catalog_meets_size_floor() {
        let cat = synthetic_catalog(0);
        assert!(cat.len() >= 200);
        let categories: BTreeSet<&str> = cat.iter().map(|a| a.category.as_str()).collect();
        assert!(categories.len() >= 20);
        let uids: BTreeSet<&str> = cat.iter().map(|a| a.uid.as_str()).collect();
        assert_eq!(uids.len(), cat.len());
        for a in &cat {
            assert!(a.footprint.iter().all(|d| *d > 0.0) && a.mass > 0.0, "{a:?}");
            // Thin objects must stay taller than the default touching distance.
            assert!(a.footprint[2] > 0.01, "{}", a.name);
        }
    }

    #[test]
    fn catalog_is_deterministic() {
        assert_eq!(synthetic_catalog(5), synthetic_catalog(5));
        assert_ne!(synthetic_catalog(5), synthetic_catalog(6));
    }
}
