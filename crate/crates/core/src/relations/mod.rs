//! Spatial-relation inference between object point clouds, and conversion
//! of a concrete layout back into a relation set.
//!
//! Every test works on the clouds' bounding boxes: the XY gap gates all
//! relations, then containment, vertical contact and the horizontal
//! side-by-side patterns are tried in that order, with `near` as fallback.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::Layout;
use crate::scene::{sample_point_cloud, Aabb, PointCloud, RelationLabel, Vec3};
use crate::util::mix_seed;

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

/// Points sampled per object when a layout is converted to clouds.
pub const CLOUD_POINTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelationError {
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelationThresholds {
    /// Maximum XY gap (m) for two objects to be related at all.
    pub xy_close: f64,
    /// Maximum vertical gap (m) between a top and a bottom face in contact.
    pub touching: f64,
    /// Largest chain angle (rad) still read as `between`.
    pub between_angle_max: f64,
}

impl Default for RelationThresholds {
    fn default() -> Self {
        Self {
            xy_close: 0.05,
            touching: 0.01,
            between_angle_max: PI / 6.0,
        }
    }
}

impl RelationThresholds {
    pub fn validate(&self) -> Result<(), RelationError> {
        let positive = [
            ("xy_close", self.xy_close),
            ("touching", self.touching),
            ("between_angle_max", self.between_angle_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RelationError::InvalidThresholds(format!("{name} must be positive")));
            }
        }
        if self.between_angle_max >= PI / 2.0 {
            return Err(RelationError::InvalidThresholds(
                "between_angle_max must be below a right angle".into(),
            ));
        }
        Ok(())
    }

    /// Length thresholds scaled by `factor`; the angle is scale-free.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            xy_close: self.xy_close * factor,
            touching: self.touching * factor,
            between_angle_max: self.between_angle_max,
        }
    }
}

/// Labels for an ordered pair, read from each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RelationPair {
    pub forward: Option<RelationLabel>,
    pub backward: Option<RelationLabel>,
}

impl RelationPair {
    pub const NONE: RelationPair = RelationPair {
        forward: None,
        backward: None,
    };

    fn of(forward: RelationLabel) -> Self {
        Self {
            forward: Some(forward),
            backward: Some(forward.inverse()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationTriple {
    pub subject: String,
    pub relation: RelationLabel,
    pub anchor: String,
}

impl RelationTriple {
    pub fn new(subject: impl Into<String>, relation: RelationLabel, anchor: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            relation,
            anchor: anchor.into(),
        }
    }
}

fn bounds(cloud: &PointCloud) -> Result<Aabb, RelationError> {
    cloud.aabb().ok_or(RelationError::EmptyCloud)
}

/// Shortest distance between the XY projections of two boxes.
pub fn xy_distance_aabb(a: &Aabb, b: &Aabb) -> f64 {
    let gap = |axis: usize| (a.min[axis] - b.max[axis]).max(b.min[axis] - a.max[axis]).max(0.0);
    gap(X).hypot(gap(Y))
}

pub fn xy_distance(a: &PointCloud, b: &PointCloud) -> Result<f64, RelationError> {
    Ok(xy_distance_aabb(&bounds(a)?, &bounds(b)?))
}

/// `a` strictly within `b`'s box with its center below `b`'s top face.
pub fn is_inside(a: &Aabb, b: &Aabb) -> bool {
    a.strictly_inside(b) && a.center()[Z] < b.max[Z]
}

/// Footprints overlap and one box's bottom face is within `touching` of the
/// other's top face.
pub fn vertical_contact(a: &Aabb, b: &Aabb, th: &RelationThresholds) -> bool {
    a.overlaps_axis(b, X)
        && a.overlaps_axis(b, Y)
        && ((a.min[Z] - b.max[Z]).abs() <= th.touching || (b.min[Z] - a.max[Z]).abs() <= th.touching)
}

pub fn infer_pairwise_aabb(a: &Aabb, b: &Aabb, th: &RelationThresholds) -> RelationPair {
    use RelationLabel::*;
    if xy_distance_aabb(a, b) > th.xy_close {
        return RelationPair::NONE;
    }
    if is_inside(a, b) {
        return RelationPair::of(In);
    }
    if is_inside(b, a) {
        return RelationPair::of(OutOf);
    }
    let (ca, cb) = (a.center(), b.center());
    let x_overlap = a.overlaps_axis(b, X);
    let y_overlap = a.overlaps_axis(b, Y);
    if vertical_contact(a, b, th) {
        if ca[Z] > cb[Z] {
            return RelationPair::of(On);
        } else if ca[Z] < cb[Z] {
            return RelationPair::of(Beneath);
        }
    } else if y_overlap && !x_overlap {
        // Side by side along the camera axis.
        if ca[X] > cb[X] {
            return RelationPair::of(Front);
        } else if ca[X] < cb[X] {
            return RelationPair::of(Back);
        }
    } else if x_overlap && !y_overlap {
        if ca[Y] > cb[Y] {
            return RelationPair::of(Left);
        } else if ca[Y] < cb[Y] {
            return RelationPair::of(Right);
        }
    }
    RelationPair::of(Near)
}

pub fn infer_pairwise(
    a: &PointCloud,
    b: &PointCloud,
    th: &RelationThresholds,
) -> Result<RelationPair, RelationError> {
    Ok(infer_pairwise_aabb(&bounds(a)?, &bounds(b)?, th))
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Angle between the center-to-center vectors A→B and B→C, or `None` when
/// two centers coincide.
pub fn chain_angle(a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let u = sub(b, a);
    let v = sub(c, b);
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cross_norm = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
    if u == [0.0; 3] || v == [0.0; 3] {
        return None;
    }
    Some(cross_norm.atan2(dot))
}

/// Whether `b` sits between `a` and `c`.
pub fn infer_between(
    a: &PointCloud,
    b: &PointCloud,
    c: &PointCloud,
    th: &RelationThresholds,
) -> Result<bool, RelationError> {
    Ok(infer_between_aabb(&bounds(a)?, &bounds(b)?, &bounds(c)?, th))
}

pub fn infer_between_aabb(a: &Aabb, b: &Aabb, c: &Aabb, th: &RelationThresholds) -> bool {
    chain_angle(a.center(), b.center(), c.center()).is_some_and(|angle| angle <= th.between_angle_max)
}

/// Sampled surface clouds for every object in the layout, keyed by uid.
pub fn layout_clouds(layout: &Layout) -> BTreeMap<String, PointCloud> {
    layout
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let cloud = sample_point_cloud(&o.bbox, CLOUD_POINTS, mix_seed(layout.seed, i as u64));
            (o.uid.clone(), cloud)
        })
        .collect()
}

/// All relations holding in the layout, both directions of every pair. The
/// table is not an object here and never appears as an anchor.
pub fn scene_relations(layout: &Layout, th: &RelationThresholds) -> BTreeSet<RelationTriple> {
    relations_from_clouds(&layout_clouds(layout), th)
}

pub fn relations_from_clouds(
    clouds: &BTreeMap<String, PointCloud>,
    th: &RelationThresholds,
) -> BTreeSet<RelationTriple> {
    let boxes: Vec<(&String, Aabb)> = clouds
        .iter()
        .filter_map(|(uid, c)| c.aabb().map(|b| (uid, b)))
        .collect();
    let mut out = BTreeSet::new();
    for (i, (ua, a)) in boxes.iter().enumerate() {
        for (ub, b) in &boxes[i + 1..] {
            let pair = infer_pairwise_aabb(a, b, th);
            if let (Some(f), Some(r)) = (pair.forward, pair.backward) {
                out.insert(RelationTriple::new(*ua, f, *ub));
                out.insert(RelationTriple::new(*ub, r, *ua));
            }
        }
    }
    out
}
