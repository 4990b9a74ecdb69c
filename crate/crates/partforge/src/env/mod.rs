//! The assembly MDP: connection tensor, rigid-group state, action validation
//! against the ground-truth assembly with symmetry substitution,
//! reorientation, and the step function (object-centric branch plus the
//! abstract-gripper full branch).

pub mod expert;
pub mod state;
pub mod step;
pub mod trajectory;

pub use expert::{scripted_episode, Rollout};
pub use state::{reset, AssemblyState, ConnectionTensor, POSE_CONSISTENCY_TOL};
pub use step::{ActionCaps, ActionFull, ActionOC, Failure, SelectionCheck, Setting, StepResult};
pub use trajectory::{pose_row, read_trajectory, write_trajectory, TrajectoryRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("placement failed after {0} attempts")]
    PlacementFailed(usize),
}
