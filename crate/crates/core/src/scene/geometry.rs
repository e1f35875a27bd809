use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

/// Axis-aligned bounding box in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_center(center: Vec3, half: Vec3) -> Self {
        Self {
            min: [center[0] - half[0], center[1] - half[1], center[2] - half[2]],
            max: [center[0] + half[0], center[1] + half[1], center[2] + half[2]],
        }
    }

    pub fn center(&self) -> Vec3 {
        [
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
            (self.min[2] + self.max[2]) / 2.0,
        ]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    /// Signed overlap length of the projections on `axis` (negative = gap).
    pub fn overlap_len(&self, other: &Aabb, axis: usize) -> f64 {
        self.max[axis].min(other.max[axis]) - self.min[axis].max(other.min[axis])
    }

    /// Projections on `axis` share an interval of positive length.
    pub fn overlaps_axis(&self, other: &Aabb, axis: usize) -> bool {
        self.overlap_len(other, axis) > 0.0
    }

    /// Positive-volume intersection, ignoring overlaps thinner than `tol`.
    pub fn interpenetrates(&self, other: &Aabb, tol: f64) -> bool {
        (0..3).all(|axis| self.overlap_len(other, axis) > tol)
    }

    /// `self` lies strictly inside `other` on every axis.
    pub fn strictly_inside(&self, other: &Aabb) -> bool {
        (0..3).all(|axis| self.min[axis] > other.min[axis] && self.max[axis] < other.max[axis])
    }

    pub fn top_center(&self) -> Vec3 {
        let c = self.center();
        [c[0], c[1], self.max[2]]
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: [
                self.min[0].min(other.min[0]),
                self.min[1].min(other.min[1]),
                self.min[2].min(other.min[2]),
            ],
            max: [
                self.max[0].max(other.max[0]),
                self.max[1].max(other.max[1]),
                self.max[2].max(other.max[2]),
            ],
        }
    }
}

/// Box proxy for an asset. `half_extents` are in the object frame; `yaw`
/// rotates about z and is snapped to quarter turns when bounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub yaw: f64,
}

impl Box3 {
    pub fn new(center: Vec3, half_extents: Vec3, yaw: f64) -> Self {
        Self {
            center,
            half_extents,
            yaw,
        }
    }

    /// Odd quarter turns swap the x and y extents.
    pub fn quarter_turns(&self) -> i64 {
        ((self.yaw / FRAC_PI_2).round() as i64).rem_euclid(4)
    }

    pub fn world_half_extents(&self) -> Vec3 {
        let [hx, hy, hz] = self.half_extents;
        if self.quarter_turns() % 2 == 1 {
            [hy, hx, hz]
        } else {
            [hx, hy, hz]
        }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_center(self.center, self.world_half_extents())
    }
}

/// A sampled object surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn aabb(&self) -> Option<Aabb> {
        let first = *self.points.first()?;
        let mut min = first;
        let mut max = first;
        for p in &self.points[1..] {
            for axis in 0..3 {
                min[axis] = min[axis].min(p[axis]);
                max[axis] = max[axis].max(p[axis]);
            }
        }
        Some(Aabb { min, max })
    }

    /// Bounding-box center of the cloud.
    pub fn center(&self) -> Option<Vec3> {
        self.aabb().map(|b| b.center())
    }

    pub fn translated(&self, by: Vec3) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| [p[0] + by[0], p[1] + by[1], p[2] + by[2]])
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
                .collect(),
        }
    }
}

/// `n` points on the surface of the box, the first eight being its corners so
/// the cloud's bounding box reproduces the box's exactly. Pure in its inputs.
pub fn sample_point_cloud(bx: &Box3, n: usize, seed: u64) -> PointCloud {
    debug_assert!(n >= 8, "point clouds need at least the eight corners");
    let n = n.max(8);
    let aabb = bx.aabb();
    let (lo, hi) = (aabb.min, aabb.max);
    let mut points = Vec::with_capacity(n);
    for corner in 0..8 {
        points.push([
            if corner & 1 == 0 { lo[0] } else { hi[0] },
            if corner & 2 == 0 { lo[1] } else { hi[1] },
            if corner & 4 == 0 { lo[2] } else { hi[2] },
        ]);
    }

    let [dx, dy, dz] = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    // Face pairs normal to x, y, z weighted by area.
    let areas = [dy * dz, dx * dz, dx * dy];
    let total: f64 = areas.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 8..n {
        let pick = rng.gen::<f64>() * total;
        let normal = if pick < areas[0] {
            0
        } else if pick < areas[0] + areas[1] {
            1
        } else {
            2
        };
        let high_side = rng.gen::<bool>();
        let mut p = [0.0; 3];
        for axis in 0..3 {
            p[axis] = if axis == normal {
                if high_side {
                    hi[axis]
                } else {
                    lo[axis]
                }
            } else {
                lo[axis] + rng.gen::<f64>() * (hi[axis] - lo[axis])
            };
        }
        points.push(p);
    }
    PointCloud { points }
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn polyline_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| distance(w[0], w[1])).sum()
}
