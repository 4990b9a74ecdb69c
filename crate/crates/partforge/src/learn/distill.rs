//! Multi-task distillation: imitate expert Q vectors collected along
//! successful greedy rollouts, with noisy-cloud augmentation.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assets::ChairAsset;
use crate::env::reset;

use super::ae::{part_cloud, AEModel};
use super::dqn::TrainConfig;
use super::encoding::build_state_encoding;
use super::nn::Adam;
use super::qnet::{q_forward, select_action, QNet};
use super::LearnError;

/// Default imitation-loss weight on the argmax term.
pub const LAMBDA: f32 = 50.0;

/// Gaussian noise scale on normalized clouds during augmentation.
pub const AUGMENT_SIGMA: f64 = 0.01;

/// Augmented copies per visited state.
pub const AUGMENT_COPIES: usize = 4;

#[derive(Debug, Clone)]
pub struct DistillRecord {
    pub encoding: Array1<f32>,
    pub expert_q: Array1<f32>,
    pub expert_argmax: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ExpertDataset {
    pub records: Vec<DistillRecord>,
}

fn argmax(q: &Array1<f32>) -> usize {
    let mut best = 0;
    for i in 1..q.len() {
        if q[i] > q[best] {
            best = i;
        }
    }
    best
}

/// Combined imitation loss: L1 is the Euclidean norm of the Q-vector error;
/// L2 penalizes the gap between the predicted max and the predicted value
/// at the expert's argmax; L = L1 + lambda * L2.
pub fn distill_loss(q_pred: &Array1<f32>, q_expert: &Array1<f32>, lambda: f32) -> (f32, f32, f32) {
    assert_eq!(q_pred.len(), q_expert.len());
    let l1 = (q_pred - q_expert).mapv(|d| d * d).sum().sqrt();
    let l2 = q_pred[argmax(q_pred)] - q_pred[argmax(q_expert)];
    (l1, l2, l1 + lambda * l2)
}

/// Gradient of the combined loss with respect to the prediction.
fn distill_grad(q_pred: &Array1<f32>, q_expert: &Array1<f32>, lambda: f32) -> Array1<f32> {
    let diff = q_pred - q_expert;
    let norm = diff.mapv(|d| d * d).sum().sqrt();
    let mut g = if norm > 1e-12 { diff / norm } else { Array1::zeros(q_pred.len()) };
    let ap = argmax(q_pred);
    let ae = argmax(q_expert);
    if ap != ae {
        g[ap] += lambda;
        g[ae] -= lambda;
    }
    g
}

/// Collect (state encoding, expert Q vector) pairs along greedy rollouts of
/// one expert, keeping only episodes that fully assemble. Each visited state
/// additionally contributes `AUGMENT_COPIES` re-encodings whose part
/// features come from noise-perturbed clouds.
pub fn build_expert_dataset(
    chair: &ChairAsset,
    ae: &AEModel,
    expert: &QNet,
    cfg: &TrainConfig,
    episodes: usize,
    seed: u64,
) -> ExpertDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = ExpertDataset::default();
    for e in 0..episodes {
        let Ok(mut state) = reset(chair, seed.wrapping_add(e as u64)) else { continue };
        let clouds: Vec<Array2<f32>> = (0..state.part_count())
            .map(|i| part_cloud(&state.chair.parts[i], &state.current_poses[i]))
            .collect();
        let features: Vec<Array1<f32>> = clouds.iter().map(|c| ae.encode(c)).collect();
        let mut visited = Vec::new();
        loop {
            let mask = state.valid_action_mask(&cfg.action_caps);
            let Ok(enc) = build_state_encoding(&state, &features, &cfg.encoding_caps) else {
                break;
            };
            let q = q_forward(expert, &enc);
            visited.push((state.clone(), enc, q.clone()));
            let mut pick_rng = ChaCha8Rng::seed_from_u64(0);
            let Ok(idx) = select_action(&q, &mask, 0.0, &mut pick_rng) else { break };
            let result = state.step_flat(idx, &cfg.action_caps, &cfg.planner, cfg.setting);
            let done = result.done;
            state = result.next_state;
            if done {
                break;
            }
        }
        if !state.is_fully_assembled() {
            continue;
        }
        for (s, enc, q) in visited {
            let am = argmax(&q);
            data.records.push(DistillRecord {
                encoding: enc,
                expert_q: q.clone(),
                expert_argmax: am,
            });
            for _ in 0..AUGMENT_COPIES {
                let noisy_features: Vec<Array1<f32>> = clouds
                    .iter()
                    .map(|c| {
                        let noisy = c.mapv(|v| {
                            v + (AUGMENT_SIGMA
                                * normal_sample(&mut rng)) as f32
                        });
                        ae.encode(&noisy)
                    })
                    .collect();
                if let Ok(enc) = build_state_encoding(&s, &noisy_features, &cfg.encoding_caps) {
                    data.records.push(DistillRecord {
                        encoding: enc,
                        expert_q: q.clone(),
                        expert_argmax: am,
                    });
                }
            }
        }
    }
    data
}

fn normal_sample(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12f64..1.0);
    let u2: f64 = rng.gen_range(0.0f64..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone)]
pub struct DistillConfig {
    pub epochs: usize,
    pub lr: f32,
    pub batch: usize,
    /// Weight on the argmax term; 0 trains with L1 only.
    pub lambda: f32,
    /// Fraction of records held out for the agreement report.
    pub holdout: f64,
    pub hidden: Vec<usize>,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self { epochs: 30, lr: 1e-3, batch: 64, lambda: LAMBDA, holdout: 0.1, hidden: vec![1024, 512] }
    }
}

#[derive(Debug, Clone)]
pub struct DistillReport {
    pub final_loss: f32,
    pub held_in_agreement: f64,
    pub held_out_agreement: f64,
    pub train_records: usize,
    pub holdout_records: usize,
}

/// Argmax agreement of the net with expert annotations over records.
pub fn argmax_agreement(net: &QNet, records: &[&DistillRecord]) -> f64 {
    if records.is_empty() {
        return 1.0;
    }
    let hits = records
        .iter()
        .filter(|r| argmax(&q_forward(net, &r.encoding)) == r.expert_argmax)
        .count();
    hits as f64 / records.len() as f64
}

/// Train a multi-task net on pooled expert datasets by minimizing the
/// combined imitation loss.
pub fn distill_train(
    datasets: &[ExpertDataset],
    action_caps: crate::env::ActionCaps,
    encoding_caps: super::encoding::EncodingCaps,
    cfg: &DistillConfig,
    seed: u64,
) -> Result<(QNet, DistillReport), LearnError> {
    let all: Vec<&DistillRecord> = datasets.iter().flat_map(|d| d.records.iter()).collect();
    assert!(!all.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..all.len()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let n_hold = ((all.len() as f64) * cfg.holdout).round() as usize;
    let (hold_idx, train_idx) = order.split_at(n_hold);
    let train: Vec<&DistillRecord> = train_idx.iter().map(|&i| all[i]).collect();
    let hold: Vec<&DistillRecord> = hold_idx.iter().map(|&i| all[i]).collect();

    let mut net = QNet::with_hidden(action_caps, encoding_caps, &cfg.hidden, &mut rng);
    let mut opt = Adam::new(&net.mlp, cfg.lr);
    let dim = net.mlp.input_dim();
    let mut final_loss = 0.0f32;
    let mut idx: Vec<usize> = (0..train.len()).collect();
    for _ in 0..cfg.epochs {
        idx.shuffle(&mut rng);
        for chunk in idx.chunks(cfg.batch) {
            let mut x = Array2::zeros((chunk.len(), dim));
            for (row, &i) in chunk.iter().enumerate() {
                x.row_mut(row).assign(&train[i].encoding);
            }
            let (q, cache) = net.mlp.forward_cached(&x);
            let mut grad = Array2::zeros(q.raw_dim());
            let mut loss = 0.0f32;
            for (row, &i) in chunk.iter().enumerate() {
                let pred = q.row(row).to_owned();
                let (_, _, l) = distill_loss(&pred, &train[i].expert_q, cfg.lambda);
                loss += l;
                let g = distill_grad(&pred, &train[i].expert_q, cfg.lambda);
                grad.row_mut(row).assign(&(g / chunk.len() as f32));
            }
            loss /= chunk.len() as f32;
            if !loss.is_finite() {
                return Err(LearnError::Diverged);
            }
            final_loss = loss;
            let (grads, _) = net.mlp.backward(&cache, &grad);
            opt.step(&mut net.mlp, &grads);
        }
    }
    let report = DistillReport {
        final_loss,
        held_in_agreement: argmax_agreement(&net, &train),
        held_out_agreement: argmax_agreement(&net, &hold),
        train_records: train.len(),
        holdout_records: hold.len(),
    };
    Ok((net, report))
}
