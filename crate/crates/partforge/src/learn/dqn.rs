//! Single-task expert training: masked epsilon-greedy Double-DQN over the
//! object-centric assembly environment.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assets::ChairAsset;
use crate::env::{reset, ActionCaps, AssemblyState, Setting};
use crate::planner::RRTParams;

use super::ae::{encode_part, AEModel};
use super::encoding::{build_state_encoding, EncodingCaps};
use super::nn::Adam;
use super::qnet::{ddqn_update, q_forward, select_action, QNet, ReplayBuffer, Transition, TARGET_SYNC};
use super::LearnError;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub budget: usize,
    pub gamma: f32,
    pub lr: f32,
    pub batch: usize,
    pub replay_capacity: usize,
    /// Environment steps before updates begin.
    pub warmup: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub epsilon_final: f64,
    pub action_caps: ActionCaps,
    pub encoding_caps: EncodingCaps,
    pub hidden: Vec<usize>,
    pub planner: RRTParams,
    /// Stop as soon as a greedy eval reaches 100% success.
    pub early_stop: bool,
    /// Which action-space variant the environment exposes.
    pub setting: Setting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            budget: 40_000,
            gamma: 0.95,
            lr: 1e-4,
            batch: 64,
            replay_capacity: 50_000,
            warmup: 500,
            eval_every: 1000,
            eval_episodes: 20,
            epsilon_final: 0.05,
            action_caps: ActionCaps { p: 8, k: 6, w: 6 },
            encoding_caps: EncodingCaps { parts: 20, connections: 10 },
            hidden: vec![1024, 512],
            planner: RRTParams { max_states: 5000, seed: 0x9157, ..Default::default() },
            early_stop: true,
            setting: Setting::ObjectCentric,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainLogRow {
    pub step: usize,
    pub loss: f32,
    pub epsilon: f64,
    pub eval_success: f64,
}

pub struct TrainOutcome {
    /// Best checkpoint by greedy eval success.
    pub net: QNet,
    pub best_success: f64,
    pub final_success: f64,
    pub steps_used: usize,
    pub log: Vec<TrainLogRow>,
}

/// Per-part frozen features at the episode's initial poses.
fn episode_features(ae: &AEModel, state: &AssemblyState) -> Vec<Array1<f32>> {
    (0..state.part_count())
        .map(|i| encode_part(ae, &state.chair.parts[i], &state.current_poses[i]))
        .collect()
}

/// Linearly annealed epsilon: 1.0 at step 0 down to `final_eps` at half the
/// budget, constant after.
pub fn epsilon_at(step: usize, budget: usize, final_eps: f64) -> f64 {
    let half = (budget / 2).max(1);
    if step >= half {
        final_eps
    } else {
        1.0 - (1.0 - final_eps) * step as f64 / half as f64
    }
}

/// Run `episodes` greedy episodes; returns the assembled fraction.
pub fn greedy_eval(
    chair: &ChairAsset,
    ae: &AEModel,
    net: &QNet,
    cfg: &TrainConfig,
    episodes: usize,
    seed_base: u64,
) -> f64 {
    let mut ok = 0usize;
    for e in 0..episodes {
        let Ok(mut state) = reset(chair, seed_base + e as u64) else { continue };
        let features = episode_features(ae, &state);
        loop {
            let mask = state.valid_action_mask(&cfg.action_caps);
            let Ok(enc) = build_state_encoding(&state, &features, &cfg.encoding_caps) else {
                break;
            };
            let q = q_forward(net, &enc);
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let Ok(idx) = select_action(&q, &mask, 0.0, &mut rng) else { break };
            let result = state.step_flat(idx, &cfg.action_caps, &cfg.planner, cfg.setting);
            let done = result.done;
            state = result.next_state;
            if done {
                break;
            }
        }
        if state.is_fully_assembled() {
            ok += 1;
        }
    }
    ok as f64 / episodes as f64
}

/// Train one expert on one chair. Deterministic per seed.
pub fn train_single(
    chair: &ChairAsset,
    ae: &AEModel,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome, LearnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = QNet::with_hidden(cfg.action_caps, cfg.encoding_caps, &cfg.hidden, &mut rng);
    let mut target = net.clone();
    let mut opt = Adam::new(&net.mlp, cfg.lr);
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);
    let mut log = Vec::new();
    let mut best_success = -1.0f64;
    let mut best_net = net.clone();
    let mut updates = 0usize;
    let mut last_loss = 0.0f32;

    let mut step = 0usize;
    let mut episode = 0u64;
    'outer: while step < cfg.budget {
        let mut state = reset(chair, seed ^ (episode.wrapping_mul(0x9E37)))
            .map_err(|e| LearnError::Io(e.to_string()))?;
        episode += 1;
        let features = episode_features(ae, &state);
        loop {
            let eps = epsilon_at(step, cfg.budget, cfg.epsilon_final);
            let mask = state.valid_action_mask(&cfg.action_caps);
            let enc = build_state_encoding(&state, &features, &cfg.encoding_caps)?;
            let q = q_forward(&net, &enc);
            let idx = match select_action(&q, &mask, eps, &mut rng) {
                Ok(idx) => idx,
                // dead end without full assembly: start a fresh episode
                Err(LearnError::NoValidAction) => continue 'outer,
                Err(e) => return Err(e),
            };
            let result = state.step_flat(idx, &cfg.action_caps, &cfg.planner, cfg.setting);
            let next_state = result.next_state;
            let next_enc = build_state_encoding(&next_state, &features, &cfg.encoding_caps)?;
            let next_mask = next_state.valid_action_mask(&cfg.action_caps);
            buffer.push(Transition {
                encoding: enc,
                action: idx,
                reward: result.reward as f32,
                next_encoding: next_enc,
                next_mask,
                done: result.done,
            });
            step += 1;
            if buffer.len() >= cfg.warmup.max(cfg.batch) {
                let batch = buffer.sample(cfg.batch, &mut rng);
                last_loss = ddqn_update(&mut net, &target, &mut opt, &batch, cfg.gamma)?;
                updates += 1;
                if updates % TARGET_SYNC == 0 {
                    target = net.clone();
                }
            }
            if step % cfg.eval_every == 0 {
                let success = greedy_eval(chair, ae, &net, cfg, cfg.eval_episodes, 1_000_000);
                log.push(TrainLogRow {
                    step,
                    loss: last_loss,
                    epsilon: eps,
                    eval_success: success,
                });
                if success > best_success {
                    best_success = success;
                    best_net = net.clone();
                }
                if cfg.early_stop && success >= 1.0 {
                    break 'outer;
                }
            }
            if result.done || step >= cfg.budget {
                continue 'outer;
            }
            state = next_state;
        }
    }
    // final eval of the last weights; keep the better of last and best
    let final_success = greedy_eval(chair, ae, &net, cfg, cfg.eval_episodes, 2_000_000);
    if final_success > best_success {
        best_success = final_success;
        best_net = net;
    }
    Ok(TrainOutcome {
        net: best_net,
        best_success,
        final_success,
        steps_used: step,
        log,
    })
}
