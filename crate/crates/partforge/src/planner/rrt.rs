//! Bidirectional RRT-Connect with a connect heuristic and a validity-check
//! budget ("attempted states").

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::normalize_angle;

use super::kdtree::KdTree;
use super::PlannerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordKind {
    Translation,
    Angle,
}

/// A configuration space: per-coordinate bounds and kinds plus a pure
/// collision-validity predicate. Dimension is a multiple of 6 (SE(3) blocks).
pub struct ConfigSpace<'a> {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kinds: Vec<CoordKind>,
    pub validity: Box<dyn Fn(&[f64]) -> bool + Sync + 'a>,
}

impl<'a> ConfigSpace<'a> {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_valid(&self, q: &[f64]) -> bool {
        (self.validity)(q)
    }
}

#[derive(Debug, Clone)]
pub struct RRTParams {
    /// Max translation motion per extension, meters.
    pub step_translation: f64,
    /// Max rotation motion per extension, radians.
    pub step_rotation: f64,
    /// Probability of steering straight at the opposite tree's root.
    pub goal_bias: f64,
    /// Hard cap on validity-checked extension configurations.
    pub max_states: usize,
    pub resolution_translation: f64,
    pub resolution_rotation: f64,
    pub seed: u64,
}

impl Default for RRTParams {
    fn default() -> Self {
        Self {
            step_translation: 0.05,
            step_rotation: 0.2,
            goal_bias: 0.05,
            max_states: 100_000,
            resolution_translation: 0.005,
            resolution_rotation: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanResult {
    Path(Vec<Vec<f64>>),
    NoPath,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub result: PlanResult,
    pub states_attempted: usize,
}

impl PlanOutcome {
    pub fn path(&self) -> Option<&[Vec<f64>]> {
        match &self.result {
            PlanResult::Path(p) => Some(p),
            PlanResult::NoPath => None,
        }
    }
}

/// Wrapped per-coordinate difference `b - a`.
fn coord_delta(kind: CoordKind, a: f64, b: f64) -> f64 {
    match kind {
        CoordKind::Translation => b - a,
        CoordKind::Angle => normalize_angle(b - a),
    }
}

/// SE(3)-block distance: sum over blocks of translation norm plus 0.3 times
/// the wrapped Euler-delta norm.
pub fn config_distance(kinds: &[CoordKind], a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for block in (0..a.len()).step_by(6) {
        let mut t2 = 0.0;
        let mut r2 = 0.0;
        for i in block..block + 6 {
            let d = coord_delta(kinds[i], a[i], b[i]);
            if kinds[i] == CoordKind::Translation {
                t2 += d * d;
            } else {
                r2 += d * d;
            }
        }
        total += t2.sqrt() + 0.3 * r2.sqrt();
    }
    total
}

/// Embedding for kd-tree lookups: translations kept, angles mapped to a
/// weighted (cos, sin) pair so wrap-around needs no special casing.
fn embed(kinds: &[CoordKind], q: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(q.len() * 2);
    for (k, &v) in kinds.iter().zip(q) {
        match k {
            CoordKind::Translation => out.push(v),
            CoordKind::Angle => {
                out.push(0.3 * v.cos());
                out.push(0.3 * v.sin());
            }
        }
    }
    out
}

/// Interpolate `s` of the way from `a` to `b` (angles along the short arc).
pub fn interpolate(kinds: &[CoordKind], a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    kinds
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&k, (&x, &y))| match k {
            CoordKind::Translation => x + s * (y - x),
            CoordKind::Angle => normalize_angle(x + s * normalize_angle(y - x)),
        })
        .collect()
}

/// Straight-line motion validity at the given resolution, endpoints included.
/// Pure check, does not consume planner budget.
pub fn check_motion(space: &ConfigSpace, a: &[f64], b: &[f64], res_t: f64, res_r: f64) -> bool {
    let steps = motion_steps(&space.kinds, a, b, res_t, res_r);
    for k in 0..=steps {
        let q = interpolate(&space.kinds, a, b, k as f64 / steps as f64);
        if !space.is_valid(&q) {
            return false;
        }
    }
    true
}

fn motion_steps(kinds: &[CoordKind], a: &[f64], b: &[f64], res_t: f64, res_r: f64) -> usize {
    let mut max_t = 0.0f64;
    let mut max_r = 0.0f64;
    for (i, &k) in kinds.iter().enumerate() {
        let d = coord_delta(k, a[i], b[i]).abs();
        match k {
            CoordKind::Translation => max_t = max_t.max(d),
            CoordKind::Angle => max_r = max_r.max(d),
        }
    }
    ((max_t / res_t).max(max_r / res_r).ceil() as usize).max(1)
}

struct Tree {
    configs: Vec<Vec<f64>>,
    parents: Vec<Option<usize>>,
    index: KdTree,
}

impl Tree {
    fn new(root: Vec<f64>, kinds: &[CoordKind]) -> Self {
        let mut index = KdTree::new(embed(kinds, &root).len());
        index.insert(embed(kinds, &root), 0);
        Self {
            configs: vec![root],
            parents: vec![None],
            index,
        }
    }

    fn add(&mut self, config: Vec<f64>, parent: usize, kinds: &[CoordKind]) -> usize {
        let id = self.configs.len();
        self.index.insert(embed(kinds, &config), id);
        self.configs.push(config);
        self.parents.push(Some(parent));
        id
    }

    fn path_to_root(&self, mut node: usize) -> Vec<Vec<f64>> {
        let mut path = vec![self.configs[node].clone()];
        while let Some(p) = self.parents[node] {
            path.push(self.configs[p].clone());
            node = p;
        }
        path
    }
}

enum ExtendResult {
    Reached(usize),
    Advanced(usize),
    Trapped,
    Budget,
}

struct Budget {
    used: usize,
    cap: usize,
}

impl Budget {
    fn check(&mut self, space: &ConfigSpace, q: &[f64]) -> Option<bool> {
        if self.used >= self.cap {
            return None;
        }
        self.used += 1;
        Some(space.is_valid(q))
    }
}

/// One extension step of at most `step_*` toward `target`. Every validity
/// evaluation, including intermediate motion configurations, consumes budget.
fn extend(
    space: &ConfigSpace,
    tree: &mut Tree,
    target: &[f64],
    params: &RRTParams,
    budget: &mut Budget,
) -> ExtendResult {
    let kinds = &space.kinds;
    let near_id = tree.index.nearest(&embed(kinds, target)).expect("tree nonempty");
    let near = tree.configs[near_id].clone();

    let mut max_t = 0.0f64;
    let mut max_r = 0.0f64;
    for block in (0..near.len()).step_by(6) {
        let mut t2 = 0.0;
        let mut r2 = 0.0;
        for i in block..block + 6 {
            let d = coord_delta(kinds[i], near[i], target[i]);
            if kinds[i] == CoordKind::Translation {
                t2 += d * d;
            } else {
                r2 += d * d;
            }
        }
        max_t = max_t.max(t2.sqrt());
        max_r = max_r.max(r2.sqrt());
    }
    if max_t < 1e-12 && max_r < 1e-12 {
        return ExtendResult::Reached(near_id);
    }
    let mut s = 1.0f64;
    if max_t > params.step_translation {
        s = s.min(params.step_translation / max_t);
    }
    if max_r > params.step_rotation {
        s = s.min(params.step_rotation / max_r);
    }
    let new = interpolate(kinds, &near, target, s);

    let steps = motion_steps(kinds, &near, &new, params.resolution_translation, params.resolution_rotation);
    for k in 1..=steps {
        let q = interpolate(kinds, &near, &new, k as f64 / steps as f64);
        match budget.check(space, &q) {
            None => return ExtendResult::Budget,
            Some(false) => return ExtendResult::Trapped,
            Some(true) => {}
        }
    }
    let id = tree.add(new, near_id, kinds);
    if (s - 1.0).abs() < 1e-12 {
        ExtendResult::Reached(id)
    } else {
        ExtendResult::Advanced(id)
    }
}

/// Bidirectional RRT-Connect. Deterministic per `(query, params, seed)`.
pub fn rrt_connect(
    space: &ConfigSpace,
    start: &[f64],
    goal: &[f64],
    params: &RRTParams,
) -> Result<PlanOutcome, PlannerError> {
    if !space.is_valid(start) {
        return Err(PlannerError::InvalidQuery("start configuration invalid".into()));
    }
    if !space.is_valid(goal) {
        return Err(PlannerError::InvalidQuery("goal configuration invalid".into()));
    }
    if config_distance(&space.kinds, start, goal) < 1e-12 {
        return Ok(PlanOutcome {
            result: PlanResult::Path(vec![start.to_vec()]),
            states_attempted: 0,
        });
    }

    let kinds = &space.kinds;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tree_a = Tree::new(start.to_vec(), kinds);
    let mut tree_b = Tree::new(goal.to_vec(), kinds);
    // trees swap roles each iteration; `a_is_start` tracks orientation
    let mut a_is_start = true;
    let mut budget = Budget { used: 0, cap: params.max_states };

    while budget.used < params.max_states {
        let sample: Vec<f64> = if rng.gen_bool(params.goal_bias) {
            tree_b.configs[0].clone()
        } else {
            (0..space.dim())
                .map(|i| match kinds[i] {
                    CoordKind::Translation => rng.gen_range(space.lower[i]..=space.upper[i]),
                    CoordKind::Angle => rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                })
                .collect()
        };

        let extended = extend(space, &mut tree_a, &sample, params, &mut budget);
        let new_id = match extended {
            ExtendResult::Reached(id) | ExtendResult::Advanced(id) => id,
            ExtendResult::Trapped => {
                std::mem::swap(&mut tree_a, &mut tree_b);
                a_is_start = !a_is_start;
                continue;
            }
            ExtendResult::Budget => break,
        };
        let new_config = tree_a.configs[new_id].clone();

        // connect: greedily grow the other tree toward the new node
        let mut connected: Option<usize> = None;
        loop {
            match extend(space, &mut tree_b, &new_config, params, &mut budget) {
                ExtendResult::Reached(id) => {
                    connected = Some(id);
                    break;
                }
                ExtendResult::Advanced(_) => continue,
                ExtendResult::Trapped => break,
                ExtendResult::Budget => break,
            }
        }
        if let Some(meet_b) = connected {
            let mut path_a = tree_a.path_to_root(new_id);
            path_a.reverse();
            let path_b = tree_b.path_to_root(meet_b);
            // both now run root_a .. meeting point .. root_b
            let mut full = path_a;
            // meeting configs coincide; skip the duplicate
            full.extend(path_b.into_iter().skip(1));
            if !a_is_start {
                full.reverse();
            }
            return Ok(PlanOutcome {
                result: PlanResult::Path(full),
                states_attempted: budget.used,
            });
        }
        std::mem::swap(&mut tree_a, &mut tree_b);
        a_is_start = !a_is_start;
    }

    Ok(PlanOutcome {
        result: PlanResult::NoPath,
        states_attempted: budget.used,
    })
}
