//! Rigid transforms, triangle meshes, convex collision/distance queries and
//! point-cloud sampling.

pub mod gjk;
pub mod hull;
pub mod mesh;
pub mod obj;
pub mod pose;

pub use gjk::{aabbs_overlap, hull_distance, hulls_collide, PosedHull, CONTACT_TOLERANCE};
pub use hull::ConvexHull;
pub use mesh::{sample_point_cloud, transform_points, PointCloud, TriMesh};
pub use pose::{compose, invert, normalize_angle, Pose6D};

use nalgebra::Point3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Convex hull of a mesh's vertices. Errors on coplanar or collinear input.
pub fn convex_hull(mesh: &TriMesh) -> Result<ConvexHull, GeomError> {
    ConvexHull::from_mesh(mesh)
}

/// Minimum surface gap between two posed meshes (convex-hull proxies),
/// with the witness point pair. Zero when touching or penetrating.
///
/// Symmetric by construction: operands are canonically ordered before the
/// query so `min_distance(a, b)` and `min_distance(b, a)` are bit-equal.
pub fn min_distance(
    a: &TriMesh,
    pa: &Pose6D,
    b: &TriMesh,
    pb: &Pose6D,
) -> Result<(f64, Point3<f64>, Point3<f64>), GeomError> {
    let ha = convex_hull(a)?;
    let hb = convex_hull(b)?;
    let (d, wa, wb) = min_distance_hulls(&ha, pa, &hb, pb);
    Ok((d, wa, wb))
}

fn pose_key(p: &Pose6D) -> [f64; 6] {
    [p.tx, p.ty, p.tz, p.rx, p.ry, p.rz]
}

pub fn min_distance_hulls(
    ha: &ConvexHull,
    pa: &Pose6D,
    hb: &ConvexHull,
    pb: &Pose6D,
) -> (f64, Point3<f64>, Point3<f64>) {
    let swap = pose_key(pb) < pose_key(pa);
    let (h1, p1, h2, p2) = if swap { (hb, pb, ha, pa) } else { (ha, pa, hb, pb) };
    let (d, w1, w2) = hull_distance(&PosedHull::new(h1, p1), &PosedHull::new(h2, p2));
    if swap {
        (d, w2, w1)
    } else {
        (d, w1, w2)
    }
}

/// Boolean overlap test on hull proxies. Consistent with `min_distance`:
/// true exactly when the gap is at most [`CONTACT_TOLERANCE`].
pub fn collide(a: &TriMesh, pa: &Pose6D, b: &TriMesh, pb: &Pose6D) -> Result<bool, GeomError> {
    let d = min_distance(a, pa, b, pb)?.0;
    Ok(d <= CONTACT_TOLERANCE)
}
