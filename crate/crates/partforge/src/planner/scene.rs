//! Scene-level planning queries: a 6-dim mating query moving one rigid
//! group among posed obstacles, and the 6M-dim whole-assembly baseline.

use nalgebra::Point3;

use crate::assets::ChairAsset;
use crate::geom::{
    aabbs_overlap, compose, hulls_collide, ConvexHull, PosedHull, Pose6D, CONTACT_TOLERANCE,
};

use super::rrt::{rrt_connect, ConfigSpace, CoordKind, PlanOutcome, RRTParams};
use super::PlannerError;

/// Ground penetration tolerance (meters below z = 0).
pub const GROUND_TOLERANCE: f64 = 1e-6;

pub fn pose_to_config(p: &Pose6D) -> Vec<f64> {
    vec![p.tx, p.ty, p.tz, p.rx, p.ry, p.rz]
}

pub fn config_to_pose(q: &[f64]) -> Pose6D {
    Pose6D {
        tx: q[0],
        ty: q[1],
        tz: q[2],
        rx: q[3],
        ry: q[4],
        rz: q[5],
    }
}

fn se3_kinds(blocks: usize) -> Vec<CoordKind> {
    (0..blocks * 6)
        .map(|i| if i % 6 < 3 { CoordKind::Translation } else { CoordKind::Angle })
        .collect()
}

fn min_z(hull: &ConvexHull, pose: &Pose6D) -> f64 {
    let rot = pose.rotation_matrix();
    let t = pose.translation();
    hull.vertices
        .iter()
        .map(|v| (rot * v.coords + t).z)
        .fold(f64::INFINITY, f64::min)
}

/// A mating query: move a rigid group (hulls with local offsets relative to
/// the group anchor) from `start` to `goal` without touching obstacles or
/// dipping below the ground plane.
pub struct MatingQuery<'a> {
    /// Hulls of the moving group with their poses relative to the anchor.
    pub moving: Vec<(&'a ConvexHull, Pose6D)>,
    /// Stationary hulls at world poses.
    pub obstacles: Vec<(&'a ConvexHull, Pose6D)>,
    pub start: Pose6D,
    pub goal: Pose6D,
}

impl MatingQuery<'_> {
    /// True when the moving group at anchor pose `anchor` is collision-free.
    pub fn group_free(&self, anchor: &Pose6D) -> bool {
        for (hull, local) in &self.moving {
            let world = compose(anchor, local);
            if min_z(hull, &world) < -GROUND_TOLERANCE {
                return false;
            }
            let posed = PosedHull::new(hull, &world);
            let bb = posed.aabb();
            for (ob, ob_pose) in &self.obstacles {
                let ob_posed = PosedHull::new(ob, ob_pose);
                if !aabbs_overlap(&bb, &ob_posed.aabb(), CONTACT_TOLERANCE) {
                    continue;
                }
                if hulls_collide(&posed, &ob_posed) {
                    return false;
                }
            }
        }
        true
    }
}

/// Plan a collision-free mating motion in the 6-dim anchor-pose space.
pub fn plan_mating(query: &MatingQuery, params: &RRTParams) -> PlanOutcome {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: &Pose6D| {
        for i in 0..3 {
            lo[i] = lo[i].min(p.translation()[i]);
            hi[i] = hi[i].max(p.translation()[i]);
        }
    };
    grow(&query.start);
    grow(&query.goal);
    for (hull, pose) in &query.obstacles {
        let bb = PosedHull::new(hull, pose).aabb();
        for i in 0..3 {
            lo[i] = lo[i].min(bb.0[i]);
            hi[i] = hi[i].max(bb.1[i]);
        }
    }
    let margin = 1.0;
    let space = ConfigSpace {
        lower: vec![lo.x - margin, lo.y - margin, (lo.z - margin).max(-0.5), -std::f64::consts::PI, -std::f64::consts::PI, -std::f64::consts::PI],
        upper: vec![hi.x + margin, hi.y + margin, hi.z + margin, std::f64::consts::PI, std::f64::consts::PI, std::f64::consts::PI],
        kinds: se3_kinds(1),
        validity: Box::new(|q: &[f64]| query.group_free(&config_to_pose(q))),
    };
    match rrt_connect(&space, &pose_to_config(&query.start), &pose_to_config(&query.goal), params) {
        Ok(outcome) => outcome,
        Err(PlannerError::InvalidQuery(_)) => PlanOutcome {
            result: super::rrt::PlanResult::NoPath,
            states_attempted: 0,
        },
    }
}

/// Whole-assembly baseline: one query in the 6M-dim product space moving all
/// parts from `init_poses` to the ground-aligned assembled configuration.
/// Returns the outcome together with the goal poses used.
pub fn plan_full_assembly(
    chair: &ChairAsset,
    init_poses: &[Pose6D],
    params: &RRTParams,
) -> (PlanOutcome, Vec<Pose6D>) {
    let m = chair.part_count();
    assert_eq!(init_poses.len(), m);
    let goal_poses = ground_aligned_goal(chair, init_poses);

    let hulls: Vec<&ConvexHull> = chair.parts.iter().map(|p| &p.hull).collect();
    let validity = |q: &[f64]| -> bool {
        let poses: Vec<Pose6D> = (0..m).map(|i| config_to_pose(&q[i * 6..(i + 1) * 6])).collect();
        let posed: Vec<PosedHull> = hulls
            .iter()
            .zip(&poses)
            .map(|(h, p)| PosedHull::new(h, p))
            .collect();
        for (h, p) in hulls.iter().zip(&poses) {
            if min_z(h, p) < -GROUND_TOLERANCE {
                return false;
            }
        }
        let boxes: Vec<_> = posed.iter().map(|p| p.aabb()).collect();
        for i in 0..m {
            for j in (i + 1)..m {
                if !aabbs_overlap(&boxes[i], &boxes[j], CONTACT_TOLERANCE) {
                    continue;
                }
                if hulls_collide(&posed[i], &posed[j]) {
                    return false;
                }
            }
        }
        true
    };

    // workspace bounds from everything we know about the query
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in init_poses.iter().chain(&goal_poses) {
        for i in 0..3 {
            lo[i] = lo[i].min(p.translation()[i]);
            hi[i] = hi[i].max(p.translation()[i]);
        }
    }
    let margin = 0.8;
    let mut lower = Vec::with_capacity(m * 6);
    let mut upper = Vec::with_capacity(m * 6);
    for _ in 0..m {
        for i in 0..3 {
            let l = if i == 2 { (lo[i] - margin).max(-0.2) } else { lo[i] - margin };
            lower.push(l);
            upper.push(hi[i] + margin);
        }
        for _ in 0..3 {
            lower.push(-std::f64::consts::PI);
            upper.push(std::f64::consts::PI);
        }
    }
    let space = ConfigSpace {
        lower,
        upper,
        kinds: se3_kinds(m),
        validity: Box::new(validity),
    };
    let start: Vec<f64> = init_poses.iter().flat_map(|p| pose_to_config(p)).collect();
    let goal: Vec<f64> = goal_poses.iter().flat_map(|p| pose_to_config(p)).collect();
    let outcome = match rrt_connect(&space, &start, &goal, params) {
        Ok(outcome) => outcome,
        Err(PlannerError::InvalidQuery(_)) => PlanOutcome {
            result: super::rrt::PlanResult::NoPath,
            states_attempted: 0,
        },
    };
    (outcome, goal_poses)
}

/// Translate the ground-truth assembly so it rests on the ground at the
/// xy centroid of the initial part positions.
pub fn ground_aligned_goal(chair: &ChairAsset, init_poses: &[Pose6D]) -> Vec<Pose6D> {
    let m = chair.part_count();
    let mut cx = 0.0;
    let mut cy = 0.0;
    for p in init_poses {
        cx += p.tx;
        cy += p.ty;
    }
    cx /= m as f64;
    cy /= m as f64;
    let mut gx = 0.0;
    let mut gy = 0.0;
    for p in &chair.gt_poses {
        gx += p.tx;
        gy += p.ty;
    }
    gx /= m as f64;
    gy /= m as f64;
    let mz = chair
        .parts
        .iter()
        .zip(&chair.gt_poses)
        .map(|(part, pose)| min_z(&part.hull, pose))
        .fold(f64::INFINITY, f64::min);
    chair
        .gt_poses
        .iter()
        .map(|p| Pose6D {
            tx: p.tx + cx - gx,
            ty: p.ty + cy - gy,
            tz: p.tz - mz,
            ..*p
        })
        .collect()
}
