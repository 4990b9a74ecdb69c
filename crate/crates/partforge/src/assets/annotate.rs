//! Annotation pipeline: connection detection by the 5 mm rule, 9-dim
//! descriptors, grasp regions and geometric equivalence classes.

use nalgebra::{Matrix3, Vector3};

use crate::geom::{
    invert, min_distance_hulls, sample_point_cloud, ConvexHull, PointCloud, Pose6D, TriMesh,
};

use super::{
    AssetError, ChairAsset, ConnectionPoint, GraspRegion, Part, CONNECT_THRESHOLD,
    MAX_CONNECTIONS,
};

/// Fixed seed for the equivalence-class sampling clouds.
const EQUIV_SEED: u64 = 0xC0FFEE;
const EQUIV_POINTS: usize = 512;
const EQUIV_CHAMFER_TOL: f64 = 1e-6;

/// Build a fully annotated chair from COM-local meshes and assembled poses.
pub fn annotate_chair(
    id: u64,
    meshes: Vec<TriMesh>,
    gt_poses: Vec<Pose6D>,
) -> Result<ChairAsset, AssetError> {
    assert_eq!(meshes.len(), gt_poses.len());
    let hulls: Vec<ConvexHull> = meshes
        .iter()
        .map(ConvexHull::from_mesh)
        .collect::<Result<_, _>>()?;
    let (connections, gt_adjacency) = detect_connections_impl(&hulls, &gt_poses)?;
    let classes = equivalence_classes_impl(&meshes);
    let parts = meshes
        .into_iter()
        .enumerate()
        .map(|(i, mesh)| {
            let grasp_regions = generate_grasp_regions(&mesh);
            Part {
                id: i,
                hull: hulls[i].clone(),
                mesh,
                connections: connections[i].clone(),
                grasp_regions,
                equivalence_class: classes[i],
            }
        })
        .collect();
    Ok(ChairAsset {
        id,
        parts,
        gt_poses,
        gt_adjacency,
    })
}

/// Re-run connection detection on an existing chair, replacing annotations.
pub fn detect_connections(chair: &mut ChairAsset) -> Result<(), AssetError> {
    let hulls: Vec<ConvexHull> = chair.parts.iter().map(|p| p.hull.clone()).collect();
    let (connections, adjacency) = detect_connections_impl(&hulls, &chair.gt_poses)?;
    for (part, conns) in chair.parts.iter_mut().zip(connections) {
        part.connections = conns;
    }
    chair.gt_adjacency = adjacency;
    Ok(())
}

type Adjacency = Vec<((usize, usize), (usize, usize))>;

fn detect_connections_impl(
    hulls: &[ConvexHull],
    gt_poses: &[Pose6D],
) -> Result<(Vec<Vec<ConnectionPoint>>, Adjacency), AssetError> {
    let n = hulls.len();
    let mut connections: Vec<Vec<ConnectionPoint>> = vec![Vec::new(); n];
    let mut adjacency = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let (d, wu, wv) = min_distance_hulls(&hulls[u], &gt_poses[u], &hulls[v], &gt_poses[v]);
            if d >= CONNECT_THRESHOLD {
                continue;
            }
            let inv_u = invert(&gt_poses[u]);
            let inv_v = invert(&gt_poses[v]);
            let pos_u = inv_u.apply(&wu).coords;
            let pos_v = inv_v.apply(&wv).coords;
            // normal points from own witness toward the mate's witness
            let world_n = if d > 1e-9 {
                (wv - wu).normalize()
            } else {
                // coincident witnesses: fall back to the contact-face normal,
                // preferring the face oriented toward the mate when the
                // witness sits on an edge or vertex
                let toward_v = gt_poses[v].translation() - gt_poses[u].translation();
                let local_pref = inv_u.rotate(&toward_v);
                hulls[u]
                    .supporting_face_normal_toward(&inv_u.apply(&wu), 1e-7, &local_pref)
                    .map(|local_n| gt_poses[u].rotate(&local_n))
                    .unwrap_or_else(Vector3::z)
            };
            let n_u = inv_u.rotate(&world_n);
            let n_v = inv_v.rotate(&-world_n);
            let k = connections[u].len();
            let l = connections[v].len();
            connections[u].push(ConnectionPoint {
                position: pos_u,
                normal: n_u,
                tangent: tangent_for(&n_u),
                mate_part: v,
                mate_connection: l,
            });
            connections[v].push(ConnectionPoint {
                position: pos_v,
                normal: n_v,
                tangent: tangent_for(&n_v),
                mate_part: u,
                mate_connection: k,
            });
            adjacency.push(((u, k), (v, l)));
        }
    }
    for (part, conns) in connections.iter().enumerate() {
        if conns.len() > MAX_CONNECTIONS {
            return Err(AssetError::TooManyConnections {
                part,
                count: conns.len(),
            });
        }
    }
    Ok((connections, adjacency))
}

/// Deterministic tangent: project the first standard basis vector with
/// `|e . n| < 0.9` onto the plane orthogonal to the normal.
pub fn tangent_for(normal: &Vector3<f64>) -> Vector3<f64> {
    let basis = [Vector3::x(), Vector3::y(), Vector3::z()];
    let e = basis
        .into_iter()
        .find(|e| e.dot(normal).abs() < 0.9)
        .unwrap_or_else(Vector3::y);
    (e - e.dot(normal) * normal).normalize()
}

/// Label geometrically equivalent parts: two parts share a class iff the
/// minimum over the 24 axis-aligned rotations of the symmetric Chamfer
/// distance between their sampled clouds is under 1e-6 m^2.
pub fn compute_equivalence_classes(chair: &ChairAsset) -> Vec<usize> {
    let meshes: Vec<TriMesh> = chair.parts.iter().map(|p| p.mesh.clone()).collect();
    equivalence_classes_impl(&meshes)
}

fn equivalence_classes_impl(meshes: &[TriMesh]) -> Vec<usize> {
    let n = meshes.len();
    let clouds: Vec<PointCloud> = meshes
        .iter()
        .map(|m| sample_point_cloud(m, EQUIV_POINTS, EQUIV_SEED))
        .collect();
    let mut class = (0..n).collect::<Vec<_>>();
    for i in 0..n {
        for j in (i + 1)..n {
            if class[j] != j {
                continue; // already grouped
            }
            if meshes_equivalent(&meshes[i], &meshes[j], &clouds[i], &clouds[j]) {
                class[j] = class[i];
            }
        }
    }
    // compact labels
    let mut labels = std::collections::BTreeMap::new();
    class
        .iter()
        .map(|&c| {
            let next = labels.len();
            *labels.entry(c).or_insert(next)
        })
        .collect()
}

fn meshes_equivalent(a: &TriMesh, b: &TriMesh, ca: &PointCloud, cb: &PointCloud) -> bool {
    // cheap invariant prefilter before the rotation sweep
    if (a.surface_area() - b.surface_area()).abs() > 1e-4 {
        return false;
    }
    let (va, _) = a.volume_centroid();
    let (vb, _) = b.volume_centroid();
    if (va - vb).abs() > 1e-6 {
        return false;
    }
    min_rotation_chamfer(ca, cb) < EQUIV_CHAMFER_TOL
}

/// Minimum over the 24 axis-aligned rotations of the symmetric Chamfer
/// distance, with early exit once any rotation is under tolerance.
pub fn min_rotation_chamfer(a: &PointCloud, b: &PointCloud) -> f64 {
    let mut best = f64::INFINITY;
    for rot in axis_aligned_rotations() {
        let rotated = PointCloud {
            points: a.points.iter().map(|p| (rot * p.coords).into()).collect(),
        };
        let d = chamfer_points(&rotated, b);
        best = best.min(d);
        if best < EQUIV_CHAMFER_TOL {
            return best;
        }
    }
    best
}

fn chamfer_points(a: &PointCloud, b: &PointCloud) -> f64 {
    let one_way = |from: &PointCloud, to: &PointCloud| -> f64 {
        let mut acc = 0.0;
        for p in &from.points {
            let mut best = f64::INFINITY;
            for q in &to.points {
                let d = (p - q).norm_squared();
                if d < best {
                    best = d;
                }
            }
            acc += best;
        }
        acc / from.points.len() as f64
    };
    one_way(a, b) + one_way(b, a)
}

/// The 24 rotation matrices of the cube group (signed permutations, det +1).
pub fn axis_aligned_rotations() -> Vec<Matrix3<f64>> {
    let mut out = Vec::with_capacity(24);
    let axes: [Vector3<f64>; 6] = [
        Vector3::x(),
        Vector3::y(),
        Vector3::z(),
        -Vector3::x(),
        -Vector3::y(),
        -Vector3::z(),
    ];
    for &c0 in &axes {
        for &c1 in &axes {
            if c0.dot(&c1).abs() > 0.5 {
                continue;
            }
            let c2 = c0.cross(&c1);
            out.push(Matrix3::from_columns(&[c0, c1, c2]));
        }
    }
    debug_assert_eq!(out.len(), 24);
    out
}

/// Two grasp regions at the extremal thirds of the part's longest principal
/// axis, each with the 4 axis directions orthogonal to it.
pub fn generate_grasp_regions(mesh: &TriMesh) -> [GraspRegion; 2] {
    let (lo, hi) = mesh.aabb();
    let extent = hi - lo;
    let mut major = 0;
    for i in 1..3 {
        if extent[i] > extent[major] {
            major = i;
        }
    }
    let (o1, o2) = match major {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut approach = [Vector3::zeros(); 4];
    let unit = |axis: usize, sign: f64| {
        let mut v = Vector3::zeros();
        v[axis] = sign;
        v
    };
    approach[0] = unit(o1, 1.0);
    approach[1] = unit(o1, -1.0);
    approach[2] = unit(o2, 1.0);
    approach[3] = unit(o2, -1.0);

    let center = (lo.coords + hi.coords) / 2.0;
    let l = extent[major];
    let mut half = extent / 2.0;
    half[major] = l / 6.0;
    let make = |sign: f64| {
        let mut c = center;
        c[major] += sign * l / 3.0;
        GraspRegion {
            center: c,
            half_extents: half,
            approach_dirs: approach,
        }
    };
    [make(-1.0), make(1.0)]
}
