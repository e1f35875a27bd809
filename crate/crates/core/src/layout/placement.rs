use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Constraint, Layout, PlacedObject, COLLISION_TOL, CONTAINER_FLOOR, TABLE_UID};
use crate::relations::{infer_between_aabb, infer_pairwise_aabb, RelationThresholds};
use crate::scene::{Aabb, Box3, RelationLabel, Vec3};

/// Where an object rests: the table, the top face of an object, or the
/// floor of a container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    pub uid: String,
    pub inside: bool,
}

impl Support {
    pub fn table() -> Self {
        Self {
            uid: TABLE_UID.to_string(),
            inside: false,
        }
    }

    pub fn on(uid: &str) -> Self {
        Self {
            uid: uid.to_string(),
            inside: false,
        }
    }

    pub fn inside(uid: &str) -> Self {
        Self {
            uid: uid.to_string(),
            inside: true,
        }
    }
}

pub struct PlacementRequest<'a> {
    pub uid: &'a str,
    /// Object-frame half extents.
    pub half_extents: Vec3,
    pub support: Support,
    pub constraints: &'a [Constraint],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub uid: String,
    pub bbox: Box3,
    pub support_uid: String,
    pub inside: bool,
}

impl Candidate {
    pub fn aabb(&self) -> Aabb {
        self.bbox.aabb()
    }

    pub fn into_placed(self, state: Option<String>) -> PlacedObject {
        PlacedObject {
            uid: self.uid,
            bbox: self.bbox,
            support_uid: self.support_uid,
            inside: self.inside,
            state,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    EmptyRegion(String),
    OutOfBounds,
    Collision(String),
    Violated(String),
    UnknownSupport(String),
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::EmptyRegion(c) => write!(f, "empty feasible region ({c})"),
            Rejection::OutOfBounds => f.write_str("outside table bounds"),
            Rejection::Collision(uid) => write!(f, "collides with {uid}"),
            Rejection::Violated(c) => write!(f, "violates {c}"),
            Rejection::UnknownSupport(uid) => write!(f, "support {uid} is not placed"),
        }
    }
}

/// Rejection tallies for one failed placement.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub counts: BTreeMap<String, usize>,
}

impl Diagnostics {
    pub fn record(&mut self, r: &Rejection) {
        *self.counts.entry(r.to_string()).or_default() += 1;
    }

    pub fn clear(&mut self) {
        self.counts.clear();
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// The most frequent reasons, most common first.
    pub fn summary(&self) -> String {
        let mut v: Vec<(&String, &usize)> = self.counts.iter().collect();
        v.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        if v.is_empty() {
            return "no candidates tried".into();
        }
        v.iter()
            .take(3)
            .map(|(k, n)| format!("{k} x{n}"))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Height at which an object resting on `support_uid` has its bottom face.
pub fn support_base_z(layout: &Layout, support_uid: &str, inside: bool) -> Option<f64> {
    if support_uid == TABLE_UID {
        return Some(layout.table.surface_z);
    }
    let b = layout.aabb(support_uid)?;
    Some(if inside { b.min[2] + CONTAINER_FLOOR } else { b.max[2] })
}

/// Full check of a candidate against a partial layout: table bounds, no
/// interpenetration except with its own supports, and every constraint whose
/// other objects are already placed re-verified by relation inference.
pub fn check_placement(
    cand: &Candidate,
    constraints: &[Constraint],
    partial: &Layout,
    th: &RelationThresholds,
) -> Result<(), Rejection> {
    let bb = cand.aabb();
    if !partial.table.contains_footprint(&bb) {
        return Err(Rejection::OutOfBounds);
    }
    let mut exempt = vec![cand.support_uid.clone()];
    exempt.extend(partial.support_chain(&cand.support_uid));
    for o in &partial.objects {
        if o.uid == cand.uid || exempt.contains(&o.uid) {
            continue;
        }
        if bb.interpenetrates(&o.aabb(), COLLISION_TOL) {
            return Err(Rejection::Collision(o.uid.clone()));
        }
    }
    let lookup = |uid: &str| if uid == cand.uid { Some(bb) } else { partial.aabb(uid) };
    for c in constraints.iter().filter(|c| c.involves(&cand.uid)) {
        let holds = match c {
            Constraint::Pairwise {
                subject,
                relation,
                anchor,
            } => match (lookup(subject), lookup(anchor)) {
                (Some(s), Some(a)) => infer_pairwise_aabb(&s, &a, th).forward == Some(*relation),
                _ => true,
            },
            Constraint::Between {
                subject,
                first,
                second,
            } => match (lookup(first), lookup(subject), lookup(second)) {
                (Some(f), Some(s), Some(g)) => infer_between_aabb(&f, &s, &g, th),
                _ => true,
            },
        };
        if !holds {
            return Err(Rejection::Violated(c.to_string()));
        }
    }
    Ok(())
}

pub fn validate_placement(
    cand: &Candidate,
    constraints: &[Constraint],
    partial: &Layout,
    th: &RelationThresholds,
) -> bool {
    check_placement(cand, constraints, partial, th).is_ok()
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Rect {
    fn intersect(&mut self, lo: [f64; 2], hi: [f64; 2]) -> bool {
        for k in 0..2 {
            self.lo[k] = self.lo[k].max(lo[k]);
            self.hi[k] = self.hi[k].min(hi[k]);
            // Exact fits can come out inverted by rounding.
            if self.lo[k] > self.hi[k] && self.lo[k] - self.hi[k] <= 1e-12 {
                let mid = (self.lo[k] + self.hi[k]) / 2.0;
                self.lo[k] = mid;
                self.hi[k] = mid;
            }
        }
        self.is_nonempty()
    }

    fn is_nonempty(&self) -> bool {
        self.lo[0] <= self.hi[0] && self.lo[1] <= self.hi[1]
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|k| p[k] >= self.lo[k] && p[k] <= self.hi[k])
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        [
            self.lo[0] + rng.gen::<f64>() * (self.hi[0] - self.lo[0]),
            self.lo[1] + rng.gen::<f64>() * (self.hi[1] - self.lo[1]),
        ]
    }
}

/// Footprint-center region implied by one constraint on an anchor box, for
/// an object of world half extents `h`.
fn constraint_region(rel: RelationLabel, b: &Aabb, h: Vec3, th: &RelationThresholds) -> Option<([f64; 2], [f64; 2])> {
    use RelationLabel::*;
    let eps = (th.xy_close / 10.0).min(1e-4);
    let overlap_x = (b.min[0] - h[0] + eps, b.max[0] + h[0] - eps);
    let overlap_y = (b.min[1] - h[1] + eps, b.max[1] + h[1] - eps);
    let r = match rel {
        Left => (
            [overlap_x.0, b.max[1] + h[1] + eps],
            [overlap_x.1, b.max[1] + h[1] + th.xy_close - eps],
        ),
        Right => (
            [overlap_x.0, b.min[1] - h[1] - th.xy_close + eps],
            [overlap_x.1, b.min[1] - h[1] - eps],
        ),
        Front => (
            [b.max[0] + h[0] + eps, overlap_y.0],
            [b.max[0] + h[0] + th.xy_close - eps, overlap_y.1],
        ),
        Back => (
            [b.min[0] - h[0] - th.xy_close + eps, overlap_y.0],
            [b.min[0] - h[0] - eps, overlap_y.1],
        ),
        On => ([b.min[0] + h[0], b.min[1] + h[1]], [b.max[0] - h[0], b.max[1] - h[1]]),
        In => (
            [b.min[0] + h[0] + eps, b.min[1] + h[1] + eps],
            [b.max[0] - h[0] - eps, b.max[1] - h[1] - eps],
        ),
        Near => (
            [b.min[0] - h[0] - th.xy_close, b.min[1] - h[1] - th.xy_close],
            [b.max[0] + h[0] + th.xy_close, b.max[1] + h[1] + th.xy_close],
        ),
        // Nothing can be slid under or around an object already placed.
        Beneath | OutOf | Between => return None,
    };
    Some(r)
}

/// Diagonal offset from `b` with footprint gap in `(0, xy_close)`, which
/// leaves neither axis overlapping and so reads as `near`.
fn sample_near(b: &Aabb, h: Vec3, th: &RelationThresholds, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let d = th.xy_close * rng.gen_range(0.02..0.98);
    let theta = rng.gen_range(0.1..FRAC_PI_2 - 0.1);
    let (dx, dy) = (d * theta.cos(), d * theta.sin());
    let x = if rng.gen::<bool>() { b.max[0] + h[0] + dx } else { b.min[0] - h[0] - dx };
    let y = if rng.gen::<bool>() { b.max[1] + h[1] + dy } else { b.min[1] - h[1] - dy };
    [x, y]
}

/// A point near the segment joining two anchor centers.
fn sample_between(p: &Aabb, q: &Aabb, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let (a, b) = (p.center(), q.center());
    let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
    let t = rng.gen_range(0.3..0.7);
    let s = rng.gen_range(-0.05..0.05);
    [a[0] + t * ux - s * uy, a[1] + t * uy + s * ux]
}

/// Rejection-samples a pose for `req.uid` on its support that satisfies the
/// request's constraints against the partial layout. `None` after
/// `max_attempts` samples; reasons are tallied in `diag`.
pub fn find_placement(
    req: &PlacementRequest<'_>,
    partial: &Layout,
    th: &RelationThresholds,
    max_attempts: usize,
    rng: &mut ChaCha8Rng,
    diag: &mut Diagnostics,
) -> Option<Candidate> {
    let Some(base_z) = support_base_z(partial, &req.support.uid, req.support.inside) else {
        diag.record(&Rejection::UnknownSupport(req.support.uid.clone()));
        return None;
    };
    let constraints: Vec<Constraint> = req
        .constraints
        .iter()
        .filter(|c| c.involves(req.uid))
        .map(|c| c.oriented_to(req.uid))
        .collect();
    let support_box = partial.aabb(&req.support.uid);

    for _ in 0..max_attempts {
        let yaw = if rng.gen::<bool>() { 0.0 } else { FRAC_PI_2 };
        let bbox = Box3::new([0.0; 3], req.half_extents, yaw);
        let h = bbox.world_half_extents();

        let (tlo, thi) = partial.table.usable_xy();
        let mut rect = Rect {
            lo: [tlo[0] + h[0], tlo[1] + h[1]],
            hi: [thi[0] - h[0], thi[1] - h[1]],
        };
        if !rect.is_nonempty() {
            diag.record(&Rejection::EmptyRegion("table".into()));
            continue;
        }
        if let Some(sb) = &support_box {
            let rel = if req.support.inside { RelationLabel::In } else { RelationLabel::On };
            let (lo, hi) = constraint_region(rel, sb, h, th).expect("support region");
            if !rect.intersect(lo, hi) {
                diag.record(&Rejection::EmptyRegion(format!("{} {rel} {}", req.uid, req.support.uid)));
                continue;
            }
        }

        let mut near_anchor = None;
        let mut between_anchors = None;
        let mut empty = None;
        for c in &constraints {
            match c {
                Constraint::Pairwise { relation, anchor, .. } => {
                    let Some(b) = partial.aabb(anchor) else { continue };
                    let ok = match constraint_region(*relation, &b, h, th) {
                        Some((lo, hi)) => rect.intersect(lo, hi),
                        None => false,
                    };
                    if !ok {
                        empty = Some(c);
                        break;
                    }
                    if *relation == RelationLabel::Near && near_anchor.is_none() {
                        near_anchor = Some(b);
                    }
                }
                Constraint::Between { first, second, .. } => {
                    if let (Some(p), Some(q)) = (partial.aabb(first), partial.aabb(second)) {
                        between_anchors.get_or_insert((p, q));
                    }
                }
            }
        }
        if let Some(c) = empty {
            diag.record(&Rejection::EmptyRegion(c.to_string()));
            continue;
        }

        let xy = if let Some(b) = near_anchor {
            sample_near(&b, h, th, rng)
        } else if let Some((p, q)) = between_anchors {
            sample_between(&p, &q, rng)
        } else {
            rect.sample(rng)
        };
        if !rect.contains(xy) {
            diag.record(&Rejection::EmptyRegion("sampled outside region".into()));
            continue;
        }

        let cand = Candidate {
            uid: req.uid.to_string(),
            bbox: Box3::new([xy[0], xy[1], base_z + h[2]], req.half_extents, yaw),
            support_uid: req.support.uid.clone(),
            inside: req.support.inside,
        };
        match check_placement(&cand, &constraints, partial, th) {
            Ok(()) => return Some(cand),
            Err(r) => diag.record(&r),
        }
    }
    None
}
