//! RRT-Connect over compound rigid-body configuration spaces: 6-dim mating
//! queries and the 6M-dim whole-assembly baseline, with attempted-state
//! accounting against a hard cap.

pub mod kdtree;
pub mod rrt;
pub mod scene;

pub use rrt::{check_motion, rrt_connect, ConfigSpace, CoordKind, PlanOutcome, PlanResult, RRTParams};
pub use scene::{plan_full_assembly, plan_mating, MatingQuery};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}
