//! Flat Q-network over the padded action space, masked action selection,
//! the replay buffer, and the Double-DQN update.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::ActionCaps;

use super::encoding::{encoding_len, EncodingCaps};
use super::nn::{Adam, Mlp};
use super::LearnError;

/// Hard target-network sync period, in updates.
pub const TARGET_SYNC: usize = 1000;

#[derive(Debug, Clone)]
pub struct QNet {
    pub mlp: Mlp,
    pub action_caps: ActionCaps,
    pub encoding_caps: EncodingCaps,
}

impl QNet {
    pub fn new(action_caps: ActionCaps, encoding_caps: EncodingCaps, rng: &mut ChaCha8Rng) -> Self {
        let sizes = [
            encoding_len(&encoding_caps),
            1024,
            512,
            action_caps.flat_len(),
        ];
        Self { mlp: Mlp::new(&sizes, rng), action_caps, encoding_caps }
    }

    /// Like [`QNet::new`] but with custom hidden widths, for small-scale runs.
    pub fn with_hidden(
        action_caps: ActionCaps,
        encoding_caps: EncodingCaps,
        hidden: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut sizes = vec![encoding_len(&encoding_caps)];
        sizes.extend_from_slice(hidden);
        sizes.push(action_caps.flat_len());
        Self { mlp: Mlp::new(&sizes, rng), action_caps, encoding_caps }
    }
}

/// Deterministic forward pass for one encoding.
pub fn q_forward(net: &QNet, encoding: &Array1<f32>) -> Array1<f32> {
    net.mlp
        .forward(&encoding.clone().insert_axis(Axis(0)))
        .index_axis_move(Axis(0), 0)
}

/// Masked epsilon-greedy: with probability epsilon a uniform valid action,
/// otherwise the masked argmax with lowest-index tie-breaking.
pub fn select_action(
    q: &Array1<f32>,
    mask: &[bool],
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<usize, LearnError> {
    assert_eq!(q.len(), mask.len());
    let valid: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if valid.is_empty() {
        return Err(LearnError::NoValidAction);
    }
    if epsilon > 0.0 && rng.gen_range(0.0..1.0) < epsilon {
        return Ok(valid[rng.gen_range(0..valid.len())]);
    }
    let mut best = valid[0];
    for &i in &valid[1..] {
        if q[i] > q[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub encoding: Array1<f32>,
    pub action: usize,
    pub reward: f32,
    pub next_encoding: Array1<f32>,
    pub next_mask: Vec<bool>,
    pub done: bool,
}

/// Fixed-capacity ring buffer with uniform sampling.
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    at: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { items: Vec::with_capacity(capacity.min(4096)), capacity, at: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.at] = t;
            self.at = (self.at + 1) % self.capacity;
        }
    }

    pub fn sample<'a>(&'a self, batch: usize, rng: &mut ChaCha8Rng) -> Vec<&'a Transition> {
        (0..batch)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

/// One Double-DQN update: targets use the online argmax over the next
/// state's valid actions, evaluated by the target network; MSE on the
/// chosen-action entries; one Adam step.
pub fn ddqn_update(
    net: &mut QNet,
    target: &QNet,
    opt: &mut Adam,
    batch: &[&Transition],
    gamma: f32,
) -> Result<f32, LearnError> {
    assert!(!batch.is_empty());
    let n = batch.len();
    let dim = batch[0].encoding.len();
    let mut states = Array2::zeros((n, dim));
    let mut next_states = Array2::zeros((n, dim));
    for (i, t) in batch.iter().enumerate() {
        states.row_mut(i).assign(&t.encoding);
        next_states.row_mut(i).assign(&t.next_encoding);
    }
    let next_online = net.mlp.forward(&next_states);
    let next_target = target.mlp.forward(&next_states);
    let mut ys = vec![0.0f32; n];
    for (i, t) in batch.iter().enumerate() {
        ys[i] = if t.done {
            t.reward
        } else {
            // argmax over valid next actions according to the online net
            let mut a_star = None;
            for (a, &ok) in t.next_mask.iter().enumerate() {
                if !ok {
                    continue;
                }
                match a_star {
                    None => a_star = Some(a),
                    Some(b) if next_online[[i, a]] > next_online[[i, b]] => a_star = Some(a),
                    _ => {}
                }
            }
            match a_star {
                Some(a) => t.reward + gamma * next_target[[i, a]],
                None => t.reward,
            }
        };
    }
    let (q, cache) = net.mlp.forward_cached(&states);
    let mut loss = 0.0f32;
    let mut grad = Array2::zeros(q.raw_dim());
    for (i, t) in batch.iter().enumerate() {
        let d = q[[i, t.action]] - ys[i];
        loss += d * d;
        grad[[i, t.action]] = 2.0 * d / n as f32;
    }
    loss /= n as f32;
    if !loss.is_finite() {
        return Err(LearnError::Diverged);
    }
    let (grads, _) = net.mlp.backward(&cache, &grad);
    opt.step(&mut net.mlp, &grads);
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small_caps() -> (ActionCaps, EncodingCaps) {
        (
            ActionCaps { p: 2, k: 2, w: 2 },
            EncodingCaps { parts: 2, connections: 2 },
        )
    }

    #[test]
    fn output_length_matches_caps() {
        let (ac, ec) = small_caps();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = QNet::with_hidden(ac, ec, &[16], &mut rng);
        assert_eq!(net.mlp.output_dim(), ac.flat_len());
        assert_eq!(net.mlp.input_dim(), encoding_len(&ec));
        let q = q_forward(&net, &Array1::zeros(net.mlp.input_dim()));
        assert_eq!(q.len(), ac.flat_len());
    }

    #[test]
    fn select_action_greedy_and_masked() {
        let q = Array1::from_vec(vec![0.1, 5.0, 3.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // global max is masked out; ties break to the lowest index
        let mask = [true, false, true, true];
        assert_eq!(select_action(&q, &mask, 0.0, &mut rng).unwrap(), 2);
        let mask = [false, false, false, false];
        assert!(matches!(
            select_action(&q, &mask, 0.0, &mut rng),
            Err(LearnError::NoValidAction)
        ));
    }

    #[test]
    fn select_action_uniform_at_epsilon_one() {
        let q = Array1::zeros(4);
        let mask = [true, false, true, true];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[select_action(&q, &mask, 1.0, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[1], 0);
        // chi-squared over the 3 valid cells against uniform; df=2,
        // critical value at p=0.01 is 9.21
        let expect = n as f64 / 3.0;
        let chi2: f64 = [0, 2, 3]
            .iter()
            .map(|&i| {
                let d = counts[i] as f64 - expect;
                d * d / expect
            })
            .sum();
        assert!(chi2 < 9.21, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn ddqn_targets_terminal_and_bootstrap() {
        let (ac, ec) = small_caps();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = QNet::with_hidden(ac, ec, &[8], &mut rng);
        let target = net.clone();
        let dim = net.mlp.input_dim();
        let nact = ac.flat_len();
        let term = Transition {
            encoding: Array1::zeros(dim),
            action: 0,
            reward: 5.0,
            next_encoding: Array1::zeros(dim),
            next_mask: vec![false; nact],
            done: true,
        };
        // with zeroed weights Q == 0 everywhere, so MSE loss = (0 - 5)^2
        let zeros = vec![0.0; net.mlp.flatten().len()];
        net.mlp.unflatten(&zeros);
        let mut opt = Adam::new(&net.mlp, 0.0);
        let loss = ddqn_update(&mut net, &target, &mut opt, &[&term], 0.95).unwrap();
        assert!((loss - 25.0).abs() < 1e-5);
        // non-terminal: y = r + gamma * Q_target(s', a*), a* from online net
        let tr = Transition {
            encoding: Array1::zeros(dim),
            action: 1,
            reward: 1.0,
            next_encoding: Array1::from_elem(dim, 0.1),
            next_mask: {
                let mut m = vec![false; nact];
                m[2] = true;
                m[5] = true;
                m
            },
            done: false,
        };
        let mut rng2 = ChaCha8Rng::seed_from_u64(9);
        let mut net2 = QNet::with_hidden(ac, ec, &[8], &mut rng2);
        let target2 = QNet::with_hidden(ac, ec, &[8], &mut rng2);
        let next_online = q_forward(&net2, &tr.next_encoding);
        let a_star = if next_online[2] >= next_online[5] { 2 } else { 5 };
        let y = 1.0 + 0.95 * q_forward(&target2, &tr.next_encoding)[a_star];
        let q0 = q_forward(&net2, &tr.encoding)[1];
        let mut opt2 = Adam::new(&net2.mlp, 0.0);
        let loss = ddqn_update(&mut net2, &target2, &mut opt2, &[&tr], 0.95).unwrap();
        assert!((loss - (q0 - y) * (q0 - y)).abs() < 1e-4, "loss {loss}");
    }

    #[test]
    fn replay_buffer_fifo_eviction() {
        let mut buf = ReplayBuffer::new(3);
        let mk = |r: f32| Transition {
            encoding: Array1::zeros(1),
            action: 0,
            reward: r,
            next_encoding: Array1::zeros(1),
            next_mask: vec![true],
            done: false,
        };
        for r in 0..5 {
            buf.push(mk(r as f32));
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f32> = buf.items.iter().map(|t| t.reward).collect();
        // oldest (0, 1) evicted
        assert!(rewards.contains(&2.0) && rewards.contains(&3.0) && rewards.contains(&4.0));
    }
}
