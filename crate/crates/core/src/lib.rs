//! Task-oriented scene graphs for tabletop manipulation: scenario model and
//! validation, spatial-relation inference, constraint-based layout
//! construction, a kinematic skill simulator, goal-condition scoring, and
//! scenario generation from language-model replies.

pub mod eval;
pub mod layout;
pub mod relations;
pub mod scene;
pub mod sim;
pub mod taskgen;
pub mod util;
