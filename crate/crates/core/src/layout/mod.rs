//! Concrete realization of a scene graph: every object gets a box pose on a
//! bounded table so that all graph edges re-verify under relation inference.

mod construct;
mod placement;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relations::RelationError;
use crate::scene::{Aabb, Box3, RelationLabel};

pub use construct::{construct_layout, order_level, topological_levels};
pub use placement::{
    check_placement, find_placement, support_base_z, validate_placement, Candidate, Diagnostics,
    PlacementRequest, Rejection, Support,
};

/// Support id used for objects resting directly on the table.
pub const TABLE_UID: &str = "table";

/// Height of a container's interior floor above its bottom face.
pub const CONTAINER_FLOOR: f64 = 0.01;

/// Interpenetration depth below which two boxes count as touching.
pub const COLLISION_TOL: f64 = 1e-9;

/// Rectangular table centered at the origin; x points toward the camera and
/// y to its left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableSpec {
    pub extent_x: f64,
    pub extent_y: f64,
    pub surface_z: f64,
    pub margin: f64,
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            extent_x: 0.8,
            extent_y: 1.2,
            surface_z: 0.0,
            margin: 0.05,
        }
    }
}

impl TableSpec {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let ok = self.margin > 0.0
            && self.extent_x > 2.0 * self.margin
            && self.extent_y > 2.0 * self.margin
            && self.surface_z.is_finite();
        if ok {
            Ok(())
        } else {
            Err(LayoutError::InvalidTable(*self))
        }
    }

    /// XY rectangle available to footprints, as (min, max).
    pub fn usable_xy(&self) -> ([f64; 2], [f64; 2]) {
        let hx = self.extent_x / 2.0 - self.margin;
        let hy = self.extent_y / 2.0 - self.margin;
        ([-hx, -hy], [hx, hy])
    }

    pub fn contains_footprint(&self, b: &Aabb) -> bool {
        let (lo, hi) = self.usable_xy();
        let eps = 1e-9;
        b.min[0] >= lo[0] - eps && b.min[1] >= lo[1] - eps && b.max[0] <= hi[0] + eps && b.max[1] <= hi[1] + eps
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub uid: String,
    #[serde(flatten)]
    pub bbox: Box3,
    /// `"table"` or the uid of the supporting object.
    pub support_uid: String,
    /// Resting on the container floor rather than on the support's top face.
    #[serde(default, skip_serializing_if = "is_false")]
    pub inside: bool,
    pub state: Option<String>,
}

impl PlacedObject {
    pub fn aabb(&self) -> Aabb {
        self.bbox.aabb()
    }

    pub fn on_table(&self) -> bool {
        self.support_uid == TABLE_UID
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub table: TableSpec,
    pub objects: Vec<PlacedObject>,
    pub seed: u64,
}

impl Layout {
    pub fn empty(table: TableSpec, seed: u64) -> Self {
        Self {
            table,
            objects: Vec::new(),
            seed,
        }
    }

    pub fn get(&self, uid: &str) -> Option<&PlacedObject> {
        self.objects.iter().find(|o| o.uid == uid)
    }

    pub fn get_mut(&mut self, uid: &str) -> Option<&mut PlacedObject> {
        self.objects.iter_mut().find(|o| o.uid == uid)
    }

    pub fn contains(&self, uid: &str) -> bool {
        self.get(uid).is_some()
    }

    pub fn aabb(&self, uid: &str) -> Option<Aabb> {
        self.get(uid).map(PlacedObject::aabb)
    }

    pub fn remove(&mut self, uid: &str) -> Option<PlacedObject> {
        let i = self.objects.iter().position(|o| o.uid == uid)?;
        Some(self.objects.remove(i))
    }

    /// Objects resting directly on `uid`.
    pub fn supported_by<'a>(&'a self, uid: &'a str) -> impl Iterator<Item = &'a PlacedObject> + 'a {
        self.objects.iter().filter(move |o| o.support_uid == uid)
    }

    /// Uids from `uid`'s direct support down to the table, nearest first.
    pub fn support_chain(&self, uid: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = self.get(uid).map(|o| o.support_uid.clone());
        while let Some(s) = cur {
            if s == TABLE_UID || out.contains(&s) {
                break;
            }
            cur = self.get(&s).map(|o| o.support_uid.clone());
            out.push(s);
        }
        out
    }

    /// Checks support contact, table bounds and pairwise interpenetration.
    pub fn check_invariants(&self) -> Result<(), String> {
        for o in &self.objects {
            let b = o.aabb();
            let base = support_base_z(self, &o.support_uid, o.inside)
                .ok_or_else(|| format!("{}: unknown support {}", o.uid, o.support_uid))?;
            if (b.min[2] - base).abs() > 1e-6 {
                return Err(format!("{}: bottom {} not resting at {}", o.uid, b.min[2], base));
            }
            if !self.table.contains_footprint(&b) {
                return Err(format!("{}: outside the table", o.uid));
            }
        }
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                let related = self.support_chain(&a.uid).contains(&b.uid)
                    || self.support_chain(&b.uid).contains(&a.uid);
                if !related && a.aabb().interpenetrates(&b.aabb(), COLLISION_TOL) {
                    return Err(format!("{} and {} interpenetrate", a.uid, b.uid));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("layout serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn load_layout(path: impl AsRef<Path>) -> Result<Layout, LayoutError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LayoutError::Io(format!("{}: {e}", path.display())))?;
    Layout::from_json(&text).map_err(|e| LayoutError::Io(format!("{}: {e}", path.display())))
}

pub fn save_layout(path: impl AsRef<Path>, layout: &Layout) -> std::io::Result<()> {
    std::fs::write(path, layout.to_json())
}

/// A relational requirement on an object, oriented with the object first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Constraint {
    Pairwise {
        subject: String,
        relation: RelationLabel,
        anchor: String,
    },
    Between {
        subject: String,
        first: String,
        second: String,
    },
}

impl Constraint {
    pub fn pairwise(subject: &str, relation: RelationLabel, anchor: &str) -> Self {
        Constraint::Pairwise {
            subject: subject.to_string(),
            relation,
            anchor: anchor.to_string(),
        }
    }

    pub fn between(subject: &str, first: &str, second: &str) -> Self {
        Constraint::Between {
            subject: subject.to_string(),
            first: first.to_string(),
            second: second.to_string(),
        }
    }

    pub fn involves(&self, uid: &str) -> bool {
        self.uids().any(|u| u == uid)
    }

    pub fn uids(&self) -> impl Iterator<Item = &str> {
        let (a, b, c) = match self {
            Constraint::Pairwise { subject, anchor, .. } => (subject, anchor, None),
            Constraint::Between {
                subject,
                first,
                second,
            } => (subject, first, Some(second)),
        };
        [Some(a.as_str()), Some(b.as_str()), c.map(String::as_str)].into_iter().flatten()
    }

    /// The same requirement restated with `uid` as the subject.
    pub fn oriented_to(&self, uid: &str) -> Self {
        match self {
            Constraint::Pairwise {
                subject,
                relation,
                anchor,
            } if anchor == uid => Constraint::pairwise(anchor, relation.inverse(), subject),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Pairwise {
                subject,
                relation,
                anchor,
            } => write!(f, "{subject} {relation} {anchor}"),
            Constraint::Between {
                subject,
                first,
                second,
            } => write!(f, "{subject} between {first} and {second}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    /// Candidate samples per object per round.
    pub max_attempts: usize,
    /// Full-scene restarts, each with a fresh derived seed.
    pub retry_rounds: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            max_attempts: 200,
            retry_rounds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("support cycle among {0:?}")]
    Cycle(Vec<String>),
    #[error("no asset record for {0}")]
    UnknownAsset(String),
    #[error("invalid table {0:?}")]
    InvalidTable(TableSpec),
    #[error("infeasible after {rounds} rounds; last failure placing {uid}: {}", .diagnostics.summary())]
    Infeasible {
        uid: String,
        rounds: usize,
        diagnostics: Diagnostics,
    },
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error("{0}")]
    Io(String),
}
