//! Assembly state: per-part poses, the dense connection tensor, and the
//! union-find over rigid groups, plus the seeded scattered reset.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assets::ChairAsset;
use crate::geom::{compose, hulls_collide, invert, min_distance_hulls, PosedHull, Pose6D};

use super::EnvError;

/// Tolerance for rigid-group pose consistency and the tensor's
/// mutual-inverse invariant.
pub const POSE_CONSISTENCY_TOL: f64 = 1e-6;

/// Minimum pairwise gap between scattered parts at reset, meters.
pub const RESET_MIN_GAP: f64 = 0.05;

/// Side length of the square scatter region, meters.
pub const RESET_REGION: f64 = 4.0;

/// Rejection-sampling attempts per part before reset gives up.
pub const RESET_MAX_ATTEMPTS: usize = 1000;

/// Dense M x M x 6 tensor of pairwise relative transforms. An all-zero
/// entry means "not connected"; a nonzero entry at (u, v) is the pose of
/// part v expressed in part u's frame, and (v, u) holds its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionTensor {
    m: usize,
    data: Vec<f64>,
}

impl ConnectionTensor {
    pub fn zeros(m: usize) -> Self {
        Self { m, data: vec![0.0; m * m * 6] }
    }

    pub fn part_count(&self) -> usize {
        self.m
    }

    fn offset(&self, u: usize, v: usize) -> usize {
        (u * self.m + v) * 6
    }

    pub fn entry(&self, u: usize, v: usize) -> [f64; 6] {
        let o = self.offset(u, v);
        self.data[o..o + 6].try_into().unwrap()
    }

    pub fn is_connected(&self, u: usize, v: usize) -> bool {
        let o = self.offset(u, v);
        self.data[o..o + 6].iter().any(|x| *x != 0.0)
    }

    /// Record a connection: stores `rel` (pose of v in u's frame) at (u, v)
    /// and its inverse at (v, u).
    pub fn connect(&mut self, u: usize, v: usize, rel: &Pose6D) {
        let inv = invert(rel);
        let o = self.offset(u, v);
        self.data[o..o + 6].copy_from_slice(&[rel.tx, rel.ty, rel.tz, rel.rx, rel.ry, rel.rz]);
        let o = self.offset(v, u);
        self.data[o..o + 6].copy_from_slice(&[inv.tx, inv.ty, inv.tz, inv.rx, inv.ry, inv.rz]);
    }

    pub fn relative_pose(&self, u: usize, v: usize) -> Option<Pose6D> {
        if !self.is_connected(u, v) {
            return None;
        }
        let e = self.entry(u, v);
        Some(Pose6D { tx: e[0], ty: e[1], tz: e[2], rx: e[3], ry: e[4], rz: e[5] })
    }

    /// Connected pairs with u < v.
    pub fn nonzero_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.m {
            for v in (u + 1)..self.m {
                if self.is_connected(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Union-find over part ids.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb.max(ra)] = rb.min(ra);
        }
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn group_count(&self) -> usize {
        (0..self.parent.len()).filter(|&i| self.find(i) == i).count()
    }

    pub fn members(&self, x: usize) -> Vec<usize> {
        let r = self.find(x);
        (0..self.parent.len()).filter(|&i| self.find(i) == r).collect()
    }
}

/// MDP state over one chair: current poses, connection tensor, rigid
/// groups, and used connection slots.
#[derive(Debug, Clone)]
pub struct AssemblyState<'a> {
    pub chair: &'a ChairAsset,
    pub current_poses: Vec<Pose6D>,
    pub tensor: ConnectionTensor,
    pub groups: UnionFind,
    /// Connection slots already consumed by a merge, as (part, connection).
    pub used_slots: Vec<(usize, usize)>,
    pub step_count: usize,
}

impl<'a> AssemblyState<'a> {
    pub fn part_count(&self) -> usize {
        self.chair.part_count()
    }

    pub fn slot_used(&self, part: usize, conn: usize) -> bool {
        self.used_slots.contains(&(part, conn))
    }

    /// All parts sharing `u`'s equivalence class, including `u`.
    pub fn equivalence_set(&self, u: usize) -> Vec<usize> {
        let class = self.chair.parts[u].equivalence_class;
        self.chair
            .parts
            .iter()
            .filter(|p| p.equivalence_class == class)
            .map(|p| p.id)
            .collect()
    }

    /// Smallest signed z over the hull vertices of the given parts.
    pub fn min_z(&self, parts: &[usize]) -> f64 {
        parts
            .iter()
            .flat_map(|&i| {
                let rot = self.current_poses[i].rotation_matrix();
                let t = self.current_poses[i].translation();
                self.chair.parts[i]
                    .hull
                    .vertices
                    .iter()
                    .map(move |v| (rot * v.coords + t).z)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Centroid of the part translations of the given parts.
    pub fn centroid(&self, parts: &[usize]) -> Vector3<f64> {
        let mut c = Vector3::zeros();
        for &i in parts {
            c += self.current_poses[i].translation();
        }
        c / parts.len() as f64
    }

    /// True when the given parts, at their current poses, touch any part
    /// outside their own group.
    pub fn group_collides(&self, parts: &[usize]) -> bool {
        let root = self.groups.find(parts[0]);
        for &i in parts {
            let pi = PosedHull::new(&self.chair.parts[i].hull, &self.current_poses[i]);
            for j in 0..self.part_count() {
                if self.groups.find(j) == root {
                    continue;
                }
                let pj = PosedHull::new(&self.chair.parts[j].hull, &self.current_poses[j]);
                if hulls_collide(&pi, &pj) {
                    return true;
                }
            }
        }
        false
    }

    /// True iff there is a single rigid group and the multiset of mated
    /// equivalence-class pairs matches the ground truth. The class-level
    /// comparison makes symmetry substitutions (a leg standing in for
    /// another leg) count as assembled.
    pub fn is_fully_assembled(&self) -> bool {
        if self.groups.group_count() != 1 {
            return false;
        }
        let class_pair = |u: usize, v: usize| {
            let (a, b) = (
                self.chair.parts[u].equivalence_class,
                self.chair.parts[v].equivalence_class,
            );
            (a.min(b), a.max(b))
        };
        let mut want: Vec<(usize, usize)> = self
            .chair
            .adjacent_parts()
            .iter()
            .map(|&(u, v)| class_pair(u, v))
            .collect();
        let mut have: Vec<(usize, usize)> = self
            .tensor
            .nonzero_pairs()
            .iter()
            .map(|&(u, v)| class_pair(u, v))
            .collect();
        want.sort_unstable();
        have.sort_unstable();
        want == have
    }

    /// Debug-check the state invariants: tensor entries consistent with the
    /// current rigid-group poses, mutual-inverse tensor symmetry, no
    /// intergroup penetration, all parts above ground.
    pub fn check_invariants(&self) -> Result<(), String> {
        let m = self.part_count();
        for u in 0..m {
            for v in 0..m {
                if u == v {
                    if self.tensor.is_connected(u, v) {
                        return Err(format!("diagonal tensor entry at {u}"));
                    }
                    continue;
                }
                if self.tensor.is_connected(u, v) != self.tensor.is_connected(v, u) {
                    return Err(format!("asymmetric connectivity at ({u},{v})"));
                }
                let Some(rel) = self.tensor.relative_pose(u, v) else { continue };
                let inv = self.tensor.relative_pose(v, u).unwrap();
                let id = compose(&rel, &inv);
                let err = id.translation().norm() + id.euler().norm();
                if err > POSE_CONSISTENCY_TOL {
                    return Err(format!("tensor not mutually inverse at ({u},{v}): {err}"));
                }
                if !self.groups.same(u, v) {
                    return Err(format!("tensor entry across groups at ({u},{v})"));
                }
                let want = compose(&invert(&self.current_poses[u]), &self.current_poses[v]);
                let diff = compose(&invert(&want), &rel);
                let err = diff.translation().norm() + diff.euler().norm();
                if err > POSE_CONSISTENCY_TOL {
                    return Err(format!("group poses drifted from tensor at ({u},{v}): {err}"));
                }
            }
        }
        for i in 0..m {
            if self.min_z(&[i]) < -1e-6 {
                return Err(format!("part {i} below ground"));
            }
            for j in (i + 1)..m {
                if self.groups.same(i, j) {
                    continue;
                }
                let (d, _, _) = min_distance_hulls(
                    &self.chair.parts[i].hull,
                    &self.current_poses[i],
                    &self.chair.parts[j].hull,
                    &self.current_poses[j],
                );
                if d <= 0.0 {
                    return Err(format!("groups of {i} and {j} interpenetrate"));
                }
            }
        }
        Ok(())
    }
}

/// Rotation that lays the largest-area hull face of the part flat on the
/// ground (face normal pointing to -z).
fn stable_face_rotation(chair: &ChairAsset, part: usize) -> Matrix3<f64> {
    let hull = &chair.parts[part].hull;
    let mut best_area = -1.0;
    let mut best_normal = Vector3::z();
    for face in &hull.faces {
        let [a, b, c] = [
            hull.vertices[face.indices[0]],
            hull.vertices[face.indices[1]],
            hull.vertices[face.indices[2]],
        ];
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        if area > best_area {
            best_area = area;
            best_normal = face.normal;
        }
    }
    rotation_between(&best_normal, &Vector3::new(0.0, 0.0, -1.0))
}

/// Minimal rotation carrying unit vector `a` onto unit vector `b`.
fn rotation_between(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    use nalgebra::{Rotation3, Unit};
    Rotation3::rotation_between(a, b)
        .unwrap_or_else(|| {
            // antiparallel: rotate pi about any axis orthogonal to a
            let axis = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            let ortho = Unit::new_normalize(a.cross(&axis));
            Rotation3::from_axis_angle(&ortho, std::f64::consts::PI)
        })
        .into_inner()
}

/// Scatter the chair's parts on the ground: each part rests on a stable
/// hull face with a random yaw at a random xy in a 4 m x 4 m region,
/// pairwise hull gaps at least 50 mm. Deterministic per seed.
pub fn reset(chair: &ChairAsset, seed: u64) -> Result<AssemblyState<'_>, EnvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = chair.part_count();
    let mut poses: Vec<Pose6D> = Vec::with_capacity(m);
    for i in 0..m {
        let align = stable_face_rotation(chair, i);
        let mut placed = false;
        for _ in 0..RESET_MAX_ATTEMPTS {
            let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let x = rng.gen_range(-RESET_REGION / 2.0..RESET_REGION / 2.0);
            let y = rng.gen_range(-RESET_REGION / 2.0..RESET_REGION / 2.0);
            let rot = Pose6D::new(Vector3::zeros(), Vector3::new(0.0, 0.0, yaw)).rotation_matrix()
                * align;
            let min_z = chair.parts[i]
                .hull
                .vertices
                .iter()
                .map(|v| (rot * v.coords).z)
                .fold(f64::INFINITY, f64::min);
            let pose = Pose6D::from_matrix(&rot, Vector3::new(x, y, -min_z));
            let clear = poses.iter().enumerate().all(|(j, pj)| {
                min_distance_hulls(&chair.parts[i].hull, &pose, &chair.parts[j].hull, pj).0
                    >= RESET_MIN_GAP
            });
            if clear {
                poses.push(pose);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(EnvError::PlacementFailed(RESET_MAX_ATTEMPTS));
        }
    }
    Ok(AssemblyState {
        chair,
        current_poses: poses,
        tensor: ConnectionTensor::zeros(m),
        groups: UnionFind::new(m),
        used_slots: Vec::new(),
        step_count: 0,
    })
}
