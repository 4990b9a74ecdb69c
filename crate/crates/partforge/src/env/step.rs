//! Action validation, reorientation, grasp feasibility, and the step
//! function in its object-centric and abstract-gripper variants.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::geom::{compose, hulls_collide, invert, ConvexHull, PosedHull, Pose6D, TriMesh};
use crate::planner::{plan_mating, MatingQuery, RRTParams};

use super::state::AssemblyState;

/// Gripper box dimensions (meters): width x finger span x length along the
/// approach axis.
pub const GRIPPER_DIMS: [f64; 3] = [0.04, 0.02, 0.06];

/// Sweep start distance along the approach direction, meters.
pub const GRIPPER_SWEEP: f64 = 0.3;

/// Hand-off height for the abstract-gripper branch, meters.
pub const HANDOFF_HEIGHT: f64 = 0.5;

/// Search radius when a reoriented group must be nudged clear, meters.
pub const REORIENT_SEARCH_RADIUS: f64 = 1.0;

/// Object-centric action: select parts u and v, connections k on u and l
/// on v, and a reorientation id for v's group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionOC {
    pub u: usize,
    pub v: usize,
    pub k: usize,
    pub l: usize,
    pub w: usize,
}

/// Full-setting action: grasp choices replace the reorientation id. Each
/// grasp id in {0..7} is region (0..1) x approach direction (0..3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionFull {
    pub u: usize,
    pub v: usize,
    pub k: usize,
    pub l: usize,
    pub g_a: usize,
    pub g_b: usize,
}

/// Which action-space variant the environment exposes. The full setting
/// replaces the reorientation id with a pair of grasp choices packed into
/// the same slot: w = g_a * 8 + g_b, so its w cap is 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    ObjectCentric,
    Full,
}

impl Setting {
    /// The w-axis width this setting needs in [`ActionCaps`].
    pub fn w_cap(&self) -> usize {
        match self {
            Setting::ObjectCentric => 6,
            Setting::Full => 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    None,
    InvalidSelection,
    NoMatingPath,
    GraspInfeasible,
}

impl Failure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Failure::None => "none",
            Failure::InvalidSelection => "invalid_selection",
            Failure::NoMatingPath => "no_mating_path",
            Failure::GraspInfeasible => "grasp_infeasible",
        }
    }
}

#[derive(Debug)]
pub struct StepResult<'a> {
    pub next_state: AssemblyState<'a>,
    pub reward: f64,
    pub done: bool,
    pub failure: Failure,
    /// Attempted states consumed by this step's mating query (0 when the
    /// step failed before planning).
    pub states_attempted: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionCheck {
    pub valid: bool,
    pub substituted_u: Option<usize>,
}

/// Padded action-space caps: parts, connections per part, reorientations.
#[derive(Debug, Clone, Copy)]
pub struct ActionCaps {
    pub p: usize,
    pub k: usize,
    pub w: usize,
}

impl ActionCaps {
    pub fn flat_len(&self) -> usize {
        self.p * self.p * self.k * self.k * self.w
    }

    pub fn flat_index(&self, u: usize, v: usize, k: usize, l: usize, w: usize) -> usize {
        ((((u * self.p) + v) * self.k + k) * self.k + l) * self.w + w
    }

    pub fn unflatten(&self, idx: usize) -> ActionOC {
        let w = idx % self.w;
        let rest = idx / self.w;
        let l = rest % self.k;
        let rest = rest / self.k;
        let k = rest % self.k;
        let rest = rest / self.k;
        let v = rest % self.p;
        let u = rest / self.p;
        ActionOC { u, v, k, l, w }
    }
}

fn gt_mate_of(state: &AssemblyState, part: usize, conn: usize) -> Option<(usize, usize)> {
    for &((a, ka), (b, lb)) in &state.chair.gt_adjacency {
        if (a, ka) == (part, conn) {
            return Some((b, lb));
        }
        if (b, lb) == (part, conn) {
            return Some((a, ka));
        }
    }
    None
}

impl<'a> AssemblyState<'a> {
    /// Validate an (u, v, k, l) selection against the ground-truth assembly
    /// with symmetry substitution: connection l on v must be mated in the
    /// ground truth to some part u' equivalent to u, whose connection k is
    /// in turn mated back to v.
    pub fn verify_selection(&self, u: usize, v: usize, k: usize, l: usize) -> SelectionCheck {
        let invalid = SelectionCheck { valid: false, substituted_u: None };
        let m = self.part_count();
        if u >= m || v >= m || u == v || self.groups.same(u, v) {
            return invalid;
        }
        if k >= self.chair.parts[u].connections.len()
            || l >= self.chair.parts[v].connections.len()
        {
            return invalid;
        }
        if self.slot_used(u, k) || self.slot_used(v, l) {
            return invalid;
        }
        let Some((u_sub, _)) = gt_mate_of(self, v, l) else { return invalid };
        let Some((v_check, _)) = gt_mate_of(self, u_sub, k) else { return invalid };
        let valid = self.equivalence_set(u).contains(&u_sub) && v_check == v;
        SelectionCheck { valid, substituted_u: valid.then_some(u_sub) }
    }

    /// Target pose for the moving part: where `u_sub` sits relative to `v`
    /// in the assembled chair, carried to v's current pose.
    pub fn mating_target_pose(&self, u_sub: usize, v: usize) -> Pose6D {
        let rel = compose(
            &invert(&self.chair.gt_poses[v]),
            &self.chair.gt_poses[u_sub],
        );
        compose(&self.current_poses[v], &rel)
    }

    /// Rigidly move the listed parts by `delta` applied on the left.
    fn transform_parts(&mut self, parts: &[usize], delta: &Pose6D) {
        for &i in parts {
            self.current_poses[i] = compose(delta, &self.current_poses[i]);
        }
    }

    /// Translate the listed parts so their min-z becomes exactly `z`.
    fn snap_to_height(&mut self, parts: &[usize], z: f64) {
        let dz = z - self.min_z(parts);
        let shift = Pose6D::from_translation(Vector3::new(0.0, 0.0, dz));
        self.transform_parts(parts, &shift);
    }

    /// Reorient v's group so its canonical up axis (the assembled-pose +z of
    /// the group's lowest-id part) points along the w-th axis direction,
    /// preserve the group's xy centroid, and snap it onto the ground. If
    /// the reoriented group collides with another group it is nudged to the
    /// nearest collision-free xy within 1 m; returns false when none exists.
    pub fn apply_reorientation(&mut self, v: usize, w: usize) -> bool {
        let members = self.groups.members(v);
        let anchor = members[0];
        let r_now = self.current_poses[anchor].rotation_matrix();
        let r_gt = self.chair.gt_poses[anchor].rotation_matrix();
        let r_new = reorientation_rotation(w) * r_gt;
        let delta_r = r_new * r_now.transpose();
        let c = self.centroid(&members);
        // rotate about the centroid: p -> c + dR (p - c)
        let delta = Pose6D::from_matrix(&delta_r, c - delta_r * c);
        self.transform_parts(&members, &delta);
        self.snap_to_height(&members, 0.0);
        if !self.group_collides(&members) {
            return true;
        }
        // spiral out from the current xy looking for a clear spot
        for ring in 1..=10 {
            let r = REORIENT_SEARCH_RADIUS * ring as f64 / 10.0;
            for step in 0..16 {
                let a = std::f64::consts::TAU * step as f64 / 16.0;
                let shift = Pose6D::from_translation(Vector3::new(r * a.cos(), r * a.sin(), 0.0));
                self.transform_parts(&members, &shift);
                if !self.group_collides(&members) {
                    return true;
                }
                self.transform_parts(&members, &invert(&shift));
            }
        }
        false
    }

    /// Mask over the flat padded action space: true exactly for in-range
    /// (u, v, k, l) with distinct groups and unused connection slots; the w
    /// component is unconstrained.
    pub fn valid_action_mask(&self, caps: &ActionCaps) -> Vec<bool> {
        let mut mask = vec![false; caps.flat_len()];
        let m = self.part_count().min(caps.p);
        for u in 0..m {
            for v in 0..m {
                if u == v || self.groups.same(u, v) {
                    continue;
                }
                let ku = self.chair.parts[u].connections.len().min(caps.k);
                let kv = self.chair.parts[v].connections.len().min(caps.k);
                for k in 0..ku {
                    if self.slot_used(u, k) {
                        continue;
                    }
                    for l in 0..kv {
                        if self.slot_used(v, l) {
                            continue;
                        }
                        for w in 0..caps.w {
                            mask[caps.flat_index(u, v, k, l, w)] = true;
                        }
                    }
                }
            }
        }
        mask
    }

    /// Finish a step once u's group has been moved to its mating pose:
    /// merge the groups, record the tensor entry, use up the slots, settle
    /// the merged group on the ground, and compute the reward.
    fn finalize_merge(
        mut self,
        a_u: usize,
        a_v: usize,
        k: usize,
        l: usize,
        states_attempted: usize,
    ) -> StepResult<'a> {
        self.groups.union(a_u, a_v);
        self.used_slots.push((a_u, k));
        self.used_slots.push((a_v, l));
        let members = self.groups.members(a_u);
        self.snap_to_height(&members, 0.0);
        let rel = compose(&invert(&self.current_poses[a_u]), &self.current_poses[a_v]);
        self.tensor.connect(a_u, a_v, &rel);
        if self.group_collides(&members) {
            // settling dropped the merged group onto another one
            return self.fail(Failure::NoMatingPath, states_attempted);
        }
        self.step_count += 1;
        let done = self.is_fully_assembled();
        StepResult {
            reward: if done { 5.0 } else { 1.0 },
            done,
            failure: Failure::None,
            next_state: self,
            states_attempted,
        }
    }

    fn fail(mut self, failure: Failure, states_attempted: usize) -> StepResult<'a> {
        self.step_count += 1;
        StepResult { next_state: self, reward: 0.0, done: true, failure, states_attempted }
    }

    /// Plan u's group from its current pose to the mating target among all
    /// other parts; on success apply the final pose. Returns whether a path
    /// was found, with the attempted-state count either way.
    fn plan_and_apply_mating(
        &mut self,
        u: usize,
        target: &Pose6D,
        params: &RRTParams,
    ) -> (bool, usize) {
        let members = self.groups.members(u);
        let inv_u = invert(&self.current_poses[u]);
        let moving: Vec<(&ConvexHull, Pose6D)> = members
            .iter()
            .map(|&i| (&self.chair.parts[i].hull, compose(&inv_u, &self.current_poses[i])))
            .collect();
        let obstacles: Vec<(&ConvexHull, Pose6D)> = (0..self.part_count())
            .filter(|i| !members.contains(i))
            .map(|i| (&self.chair.parts[i].hull, self.current_poses[i]))
            .collect();
        let query = MatingQuery {
            moving,
            obstacles,
            start: self.current_poses[u],
            goal: *target,
        };
        let outcome = plan_mating(&query, params);
        if outcome.path().is_none() {
            return (false, outcome.states_attempted);
        }
        let delta = compose(target, &inv_u);
        self.transform_parts(&members, &delta);
        (true, outcome.states_attempted)
    }

    /// Object-centric step: verify the selection, reorient v's group, plan
    /// a mating motion for u's group, then merge.
    pub fn step_oc(&self, a: &ActionOC, params: &RRTParams) -> StepResult<'a> {
        let mut s = self.clone();
        let check = s.verify_selection(a.u, a.v, a.k, a.l);
        let Some(u_sub) = check.substituted_u else {
            return s.fail(Failure::InvalidSelection, 0);
        };
        if a.w > 5 || !s.apply_reorientation(a.v, a.w) {
            return s.fail(Failure::NoMatingPath, 0);
        }
        let target = s.mating_target_pose(u_sub, a.v);
        let (ok, states) = s.plan_and_apply_mating(a.u, &target, params);
        if !ok {
            return s.fail(Failure::NoMatingPath, states);
        }
        s.finalize_merge(a.u, a.v, a.k, a.l, states)
    }

    /// Step from a flat padded action index under either setting; the full
    /// setting unpacks w into grasp choices (g_a, g_b) = (w / 8, w % 8).
    pub fn step_flat(
        &self,
        idx: usize,
        caps: &ActionCaps,
        params: &RRTParams,
        setting: Setting,
    ) -> StepResult<'a> {
        let a = caps.unflatten(idx);
        match setting {
            Setting::ObjectCentric => self.step_oc(&a, params),
            Setting::Full => self.step_full_abstract(
                &ActionFull { u: a.u, v: a.v, k: a.k, l: a.l, g_a: a.w / 8, g_b: a.w % 8 },
                params,
            ),
        }
    }

    /// True when the abstract gripper can reach grasp choice `g` on `part`:
    /// the gripper box swept from 0.3 m along the approach direction down to
    /// the grasp region touches no other part and never dips underground.
    pub fn grasp_feasible(&self, part: usize, g: usize) -> bool {
        if g >= 8 {
            return false;
        }
        let region = &self.chair.parts[part].grasp_regions[g / 4];
        let pose = &self.current_poses[part];
        let dir = pose.rotate(&region.approach_dirs[g % 4]);
        let center = Point3::from(pose.rotate(&region.center) + pose.translation());
        // stop with the gripper tip at the region boundary along the axis
        let h_axis = {
            let local_dir = region.approach_dirs[g % 4];
            (region.half_extents.x * local_dir.x).abs()
                + (region.half_extents.y * local_dir.y).abs()
                + (region.half_extents.z * local_dir.z).abs()
        };
        let end = center + dir * (h_axis + GRIPPER_DIMS[2] / 2.0);
        let start = center + dir * GRIPPER_SWEEP;
        let Some(sweep) = gripper_sweep_hull(&start, &end, &dir) else {
            return false;
        };
        let posed = PosedHull::new(&sweep, &Pose6D::identity());
        if sweep.vertices.iter().any(|p| p.z < -1e-6) {
            return false;
        }
        for j in 0..self.part_count() {
            if j == part {
                continue;
            }
            let pj = PosedHull::new(&self.chair.parts[j].hull, &self.current_poses[j]);
            if hulls_collide(&posed, &pj) {
                return false;
            }
        }
        true
    }

    /// Abstract-gripper step: grasp feasibility for both parts replaces the
    /// explicit reorientation, v's group is lifted to the hand-off height,
    /// and the merged group settles back onto the ground.
    pub fn step_full_abstract(&self, a: &ActionFull, params: &RRTParams) -> StepResult<'a> {
        let mut s = self.clone();
        let check = s.verify_selection(a.u, a.v, a.k, a.l);
        let Some(u_sub) = check.substituted_u else {
            return s.fail(Failure::InvalidSelection, 0);
        };
        if !s.grasp_feasible(a.u, a.g_a) || !s.grasp_feasible(a.v, a.g_b) {
            return s.fail(Failure::GraspInfeasible, 0);
        }
        let v_members = s.groups.members(a.v);
        s.snap_to_height(&v_members, HANDOFF_HEIGHT);
        if s.group_collides(&v_members) {
            return s.fail(Failure::GraspInfeasible, 0);
        }
        let target = s.mating_target_pose(u_sub, a.v);
        let (ok, states) = s.plan_and_apply_mating(a.u, &target, params);
        if !ok {
            return s.fail(Failure::NoMatingPath, states);
        }
        s.finalize_merge(a.u, a.v, a.k, a.l, states)
    }
}

/// Rotation mapping canonical +z to the w-th axis direction
/// (+x, -x, +y, -y, +z, -z).
pub fn reorientation_rotation(w: usize) -> Matrix3<f64> {
    let half = std::f64::consts::FRAC_PI_2;
    let euler = match w {
        0 => Vector3::new(0.0, half, 0.0),
        1 => Vector3::new(0.0, -half, 0.0),
        2 => Vector3::new(-half, 0.0, 0.0),
        3 => Vector3::new(half, 0.0, 0.0),
        4 => Vector3::zeros(),
        5 => Vector3::new(std::f64::consts::PI, 0.0, 0.0),
        _ => panic!("reorientation id {w} out of range"),
    };
    Pose6D::new(Vector3::zeros(), euler).rotation_matrix()
}

/// Exact swept volume of the gripper box moving on a straight segment:
/// the convex hull of its corners at both endpoints. The box's long axis
/// is aligned with the approach direction.
pub fn gripper_sweep_hull(
    start: &Point3<f64>,
    end: &Point3<f64>,
    dir: &Vector3<f64>,
) -> Option<ConvexHull> {
    use nalgebra::Rotation3;
    let rot = Rotation3::rotation_between(&Vector3::z(), dir)
        .map(|r| r.into_inner())
        .unwrap_or_else(|| {
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)) // z -> -z
        });
    let h = Vector3::new(GRIPPER_DIMS[0], GRIPPER_DIMS[1], GRIPPER_DIMS[2]) / 2.0;
    let mut verts = Vec::with_capacity(16);
    for center in [start, end] {
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    let local = Vector3::new(sx * h.x, sy * h.y, sz * h.z);
                    verts.push(center + rot * local);
                }
            }
        }
    }
    let dummy_tris = vec![[0usize, 1, 2]];
    ConvexHull::from_mesh(&TriMesh::new(verts, dummy_tris)).ok()
}
