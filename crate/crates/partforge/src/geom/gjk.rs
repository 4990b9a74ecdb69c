//! GJK distance and intersection queries between posed convex hulls.

use nalgebra::{Matrix3, Point3, Vector3};

use super::hull::ConvexHull;
use super::pose::Pose6D;

/// Contact tolerance separating "touching" from "separated" (meters).
pub const CONTACT_TOLERANCE: f64 = 1e-6;

const MAX_ITERATIONS: usize = 128;

/// A convex hull placed at a rigid pose, with cached rotation.
#[derive(Clone)]
pub struct PosedHull<'a> {
    pub hull: &'a ConvexHull,
    rot: Matrix3<f64>,
    trans: Vector3<f64>,
}

impl<'a> PosedHull<'a> {
    pub fn new(hull: &'a ConvexHull, pose: &Pose6D) -> Self {
        Self {
            hull,
            rot: pose.rotation_matrix(),
            trans: pose.translation(),
        }
    }

    fn support(&self, dir: &Vector3<f64>) -> Point3<f64> {
        let local_dir = self.rot.transpose() * dir;
        let local = self.hull.support(&local_dir);
        Point3::from(self.rot * local.coords + self.trans)
    }

    pub fn aabb(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.hull.vertices {
            let w = self.rot * v.coords + self.trans;
            for i in 0..3 {
                lo[i] = lo[i].min(w[i]);
                hi[i] = hi[i].max(w[i]);
            }
        }
        (lo, hi)
    }
}

pub fn aabbs_overlap(a: &(Point3<f64>, Point3<f64>), b: &(Point3<f64>, Point3<f64>), margin: f64) -> bool {
    (0..3).all(|i| a.0[i] <= b.1[i] + margin && b.0[i] <= a.1[i] + margin)
}

#[derive(Clone, Copy, Debug)]
struct SupportPoint {
    w: Vector3<f64>,
    a: Point3<f64>,
    b: Point3<f64>,
}

/// Minimum distance between two posed hulls plus witness points.
/// Returns 0 with coincident witnesses when the hulls intersect.
pub fn hull_distance(a: &PosedHull, b: &PosedHull) -> (f64, Point3<f64>, Point3<f64>) {
    let support = |dir: &Vector3<f64>| -> SupportPoint {
        let pa = a.support(dir);
        let pb = b.support(&-dir);
        SupportPoint { w: pa - pb, a: pa, b: pb }
    };

    let mut dir = b.trans - a.trans;
    if dir.norm_squared() < 1e-18 {
        dir = Vector3::x();
    }
    let mut simplex = vec![support(&dir)];

    for _ in 0..MAX_ITERATIONS {
        let (v, weighted) = closest_to_origin(&simplex);
        simplex = weighted.iter().map(|&(sp, _)| sp).collect();
        let lambdas: Vec<f64> = weighted.iter().map(|&(_, l)| l).collect();
        let vv = v.norm_squared();
        if vv < 1e-24 {
            let w = witness(&simplex, &lambdas);
            return (0.0, w.0, w.1);
        }
        let new = support(&(-v));
        // no meaningful progress toward the origin: converged
        if vv - v.dot(&new.w) <= 1e-12 * vv.max(1e-12) {
            let w = witness(&simplex, &lambdas);
            return (v.norm(), w.0, w.1);
        }
        if simplex.iter().any(|s| (s.w - new.w).norm_squared() < 1e-24) {
            let w = witness(&simplex, &lambdas);
            return (v.norm(), w.0, w.1);
        }
        simplex.push(new);
    }
    let (v, weighted) = closest_to_origin(&simplex);
    let simplex: Vec<SupportPoint> = weighted.iter().map(|&(sp, _)| sp).collect();
    let lambdas: Vec<f64> = weighted.iter().map(|&(_, l)| l).collect();
    let w = witness(&simplex, &lambdas);
    (v.norm(), w.0, w.1)
}

pub fn hulls_collide(a: &PosedHull, b: &PosedHull) -> bool {
    if !aabbs_overlap(&a.aabb(), &b.aabb(), CONTACT_TOLERANCE) {
        return false;
    }
    hull_distance(a, b).0 <= CONTACT_TOLERANCE
}

fn witness(simplex: &[SupportPoint], lambdas: &[f64]) -> (Point3<f64>, Point3<f64>) {
    let mut pa = Vector3::zeros();
    let mut pb = Vector3::zeros();
    for (sp, &l) in simplex.iter().zip(lambdas) {
        pa += l * sp.a.coords;
        pb += l * sp.b.coords;
    }
    (Point3::from(pa), Point3::from(pb))
}

/// Closest point to the origin on the simplex; returns the point and the
/// retained support points with their barycentric weights.
fn closest_to_origin(simplex: &[SupportPoint]) -> (Vector3<f64>, Vec<(SupportPoint, f64)>) {
    match simplex.len() {
        1 => (simplex[0].w, vec![(simplex[0], 1.0)]),
        2 => {
            let (p, l) = closest_on_segment(&simplex[0].w, &simplex[1].w);
            (p, prune(simplex, &l))
        }
        3 => {
            let (p, l) = closest_on_triangle(&simplex[0].w, &simplex[1].w, &simplex[2].w);
            (p, prune(simplex, &l))
        }
        4 => closest_on_tetrahedron(simplex),
        _ => unreachable!("simplex size bounded by 4"),
    }
}

fn prune(simplex: &[SupportPoint], lambdas: &[f64]) -> Vec<(SupportPoint, f64)> {
    let kept: Vec<(SupportPoint, f64)> = simplex
        .iter()
        .zip(lambdas)
        .filter(|&(_, &l)| l > 0.0)
        .map(|(&sp, &l)| (sp, l))
        .collect();
    if kept.is_empty() {
        vec![(simplex[0], 1.0)]
    } else {
        kept
    }
}

fn closest_on_segment(a: &Vector3<f64>, b: &Vector3<f64>) -> (Vector3<f64>, [f64; 2]) {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom < 1e-30 {
        return (*a, [1.0, 0.0]);
    }
    let t = (-a.dot(&ab) / denom).clamp(0.0, 1.0);
    (a + t * ab, [1.0 - t, t])
}

fn closest_on_triangle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> (Vector3<f64>, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = -a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = -b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + v * ab, [1.0 - v, v, 0.0]);
    }
    let cp = -c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + w * ac, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + w * (c - b), [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

fn closest_on_tetrahedron(simplex: &[SupportPoint]) -> (Vector3<f64>, Vec<(SupportPoint, f64)>) {
    let pts: Vec<Vector3<f64>> = simplex.iter().map(|s| s.w).collect();
    // a (nearly) flat tetrahedron cannot contain the origin; the face
    // side tests below are pure noise then, so handle it by scanning faces
    let m = Matrix3::from_columns(&[pts[1] - pts[0], pts[2] - pts[0], pts[3] - pts[0]]);
    let det = m.determinant();
    let scale = pts.iter().map(|p| p.norm()).fold(1e-9, f64::max);
    let degenerate = det.abs() < 1e-12 * scale * scale * scale;
    let faces: [[usize; 4]; 4] = [
        [0, 1, 2, 3],
        [0, 1, 3, 2],
        [0, 2, 3, 1],
        [1, 2, 3, 0],
    ];
    let mut inside = !degenerate;
    let mut best: Option<(f64, Vector3<f64>, [usize; 3], [f64; 3])> = None;
    for [i, j, k, l] in faces {
        let outside = degenerate || {
            let n = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
            let side_origin = n.dot(&(-pts[i]));
            let side_opposite = n.dot(&(pts[l] - pts[i]));
            side_origin * side_opposite < 0.0
        };
        if outside {
            inside = false;
            let (p, lam) = closest_on_triangle(&pts[i], &pts[j], &pts[k]);
            let d = p.norm_squared();
            if best.as_ref().map_or(true, |&(bd, ..)| d < bd) {
                best = Some((d, p, [i, j, k], lam));
            }
        }
    }
    if inside {
        // origin contained; solve barycentric coordinates for the witness
        let lam = m.try_inverse().map(|inv| inv * (-pts[0]));
        let (l1, l2, l3) = match lam {
            Some(x) => (x[0], x[1], x[2]),
            None => (0.25, 0.25, 0.25),
        };
        let l0 = 1.0 - l1 - l2 - l3;
        let weighted = vec![
            (simplex[0], l0),
            (simplex[1], l1),
            (simplex[2], l2),
            (simplex[3], l3),
        ];
        return (Vector3::zeros(), weighted);
    }
    let (_, p, idx, lam) = best.unwrap();
    let weighted: Vec<(SupportPoint, f64)> = idx
        .iter()
        .zip(lam.iter())
        .filter(|&(_, &l)| l > 0.0)
        .map(|(&i, &l)| (simplex[i], l))
        .collect();
    (p, weighted)
}
