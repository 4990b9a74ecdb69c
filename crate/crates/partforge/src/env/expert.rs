//! Scripted expert: assembles a chair by greedily taking ground-truth-valid
//! actions, sweeping reorientation ids until a step succeeds. Used for
//! sanity rollouts, trajectory export, and as a feasibility oracle.

use crate::planner::RRTParams;

use super::state::AssemblyState;
use super::step::ActionOC;
use super::trajectory::{pose_row, TrajectoryRecord};

#[derive(Debug)]
pub struct Rollout {
    pub total_reward: f64,
    pub steps: Vec<(ActionOC, f64)>,
    pub records: Vec<TrajectoryRecord>,
    pub assembled: bool,
}

/// Candidate (u, v, k, l) selections that pass ground-truth verification,
/// singleton movers first so hubs accumulate parts before group merges.
fn candidates(state: &AssemblyState) -> Vec<ActionOC> {
    let m = state.part_count();
    let mut out = Vec::new();
    for u in 0..m {
        for v in 0..m {
            if u == v {
                continue;
            }
            for k in 0..state.chair.parts[u].connections.len() {
                for l in 0..state.chair.parts[v].connections.len() {
                    if state.verify_selection(u, v, k, l).valid {
                        out.push(ActionOC { u, v, k, l, w: 0 });
                    }
                }
            }
        }
    }
    out.sort_by_key(|a| {
        (
            state.groups.members(a.u).len(),
            usize::MAX - state.groups.members(a.v).len(),
            a.u,
            a.v,
            a.k,
            a.l,
        )
    });
    out
}

/// Run one scripted episode from the given state. Deterministic given the
/// state and planner params. Returns early with `assembled: false` if no
/// candidate action succeeds under any reorientation.
pub fn scripted_episode<'a>(start: AssemblyState<'a>, params: &RRTParams, episode: usize) -> Rollout {
    let mut state = start;
    let mut rollout = Rollout {
        total_reward: 0.0,
        steps: Vec::new(),
        records: Vec::new(),
        assembled: false,
    };
    let mut t = 0;
    loop {
        let mut advanced = false;
        for cand in candidates(&state) {
            for w in 0..6 {
                let action = ActionOC { w, ..cand };
                let result = state.step_oc(&action, params);
                if result.reward >= 1.0 {
                    rollout.total_reward += result.reward;
                    rollout.steps.push((action, result.reward));
                    rollout.records.push(TrajectoryRecord {
                        episode,
                        t,
                        action: vec![action.u, action.v, action.k, action.l, action.w],
                        reward: result.reward,
                        done: result.done,
                        failure: result.failure.as_str().to_string(),
                        poses: result.next_state.current_poses.iter().map(pose_row).collect(),
                    });
                    t += 1;
                    let done = result.done;
                    state = result.next_state;
                    if done {
                        rollout.assembled = state.is_fully_assembled();
                        return rollout;
                    }
                    advanced = true;
                    break;
                }
            }
            if advanced {
                break;
            }
        }
        if !advanced {
            return rollout;
        }
    }
}
