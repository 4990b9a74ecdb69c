//! Incremental 3D convex hull used as the collision proxy for every part.

use nalgebra::{Point3, Vector3};

use super::mesh::TriMesh;
use super::GeomError;

#[derive(Debug, Clone)]
pub struct HullFace {
    pub indices: [usize; 3],
    /// Outward unit normal; face plane is `normal . x = offset`.
    pub normal: Vector3<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct ConvexHull {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<HullFace>,
}

impl ConvexHull {
    /// Build the convex hull of a mesh's vertex set.
    pub fn from_mesh(mesh: &TriMesh) -> Result<Self, GeomError> {
        Self::from_points(&mesh.vertices)
    }

    pub fn from_points(input: &[Point3<f64>]) -> Result<Self, GeomError> {
        // dedup
        let mut points: Vec<Point3<f64>> = Vec::new();
        for p in input {
            if !points.iter().any(|q| (p - q).norm() < 1e-12) {
                points.push(*p);
            }
        }
        if points.len() < 4 {
            return Err(GeomError::DegenerateGeometry(
                "convex hull needs at least 4 distinct points".into(),
            ));
        }
        let scale = points
            .iter()
            .map(|p| p.coords.norm())
            .fold(0.0f64, f64::max)
            .max(1e-6);
        let eps = 1e-10 * scale;

        let (t0, t1, t2, t3) = initial_tetrahedron(&points, eps)?;
        let interior = Point3::from(
            (points[t0].coords + points[t1].coords + points[t2].coords + points[t3].coords) / 4.0,
        );

        let mut faces: Vec<[usize; 3]> = vec![
            [t0, t1, t2],
            [t0, t1, t3],
            [t0, t2, t3],
            [t1, t2, t3],
        ];
        for f in &mut faces {
            orient_outward(f, &points, &interior);
        }

        let mut used = [t0, t1, t2, t3].to_vec();
        for (pi, p) in points.iter().enumerate() {
            if used.contains(&pi) {
                continue;
            }
            let visible: Vec<usize> = (0..faces.len())
                .filter(|&fi| signed_distance(&faces[fi], &points, p) > eps)
                .collect();
            if visible.is_empty() {
                continue;
            }
            // horizon = boundary edges of the visible region
            let mut edge_count: std::collections::HashMap<(usize, usize), i32> =
                std::collections::HashMap::new();
            for &fi in &visible {
                let [a, b, c] = faces[fi];
                for (x, y) in [(a, b), (b, c), (c, a)] {
                    let key = if x < y { (x, y) } else { (y, x) };
                    *edge_count.entry(key).or_insert(0) += 1;
                }
            }
            let horizon: Vec<(usize, usize)> = edge_count
                .into_iter()
                .filter(|&(_, n)| n == 1)
                .map(|(e, _)| e)
                .collect();
            let mut keep: Vec<[usize; 3]> = (0..faces.len())
                .filter(|fi| !visible.contains(fi))
                .map(|fi| faces[fi])
                .collect();
            for (a, b) in horizon {
                let mut f = [a, b, pi];
                orient_outward(&mut f, &points, &interior);
                keep.push(f);
            }
            faces = keep;
            used.push(pi);
        }

        // remap to the vertices actually on the hull
        let mut on_hull: Vec<usize> = faces.iter().flatten().copied().collect();
        on_hull.sort_unstable();
        on_hull.dedup();
        let remap: std::collections::HashMap<usize, usize> =
            on_hull.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let vertices: Vec<Point3<f64>> = on_hull.iter().map(|&v| points[v]).collect();
        let faces = faces
            .into_iter()
            .map(|[a, b, c]| {
                let indices = [remap[&a], remap[&b], remap[&c]];
                let n = face_normal(&vertices[indices[0]], &vertices[indices[1]], &vertices[indices[2]]);
                HullFace {
                    indices,
                    offset: n.dot(&vertices[indices[0]].coords),
                    normal: n,
                }
            })
            .collect();
        Ok(Self { vertices, faces })
    }

    /// True when the point is inside or on the hull within `tol`.
    pub fn contains(&self, p: &Point3<f64>, tol: f64) -> bool {
        self.faces
            .iter()
            .all(|f| f.normal.dot(&p.coords) <= f.offset + tol)
    }

    /// Outward normal of a face whose plane passes through `p` (local frame), if any.
    pub fn supporting_face_normal(&self, p: &Point3<f64>, tol: f64) -> Option<Vector3<f64>> {
        self.faces
            .iter()
            .find(|f| (f.normal.dot(&p.coords) - f.offset).abs() <= tol)
            .map(|f| f.normal)
    }

    /// Like [`Self::supporting_face_normal`], but when `p` lies on an edge or
    /// vertex (several supporting faces) returns the normal best aligned
    /// with `preferred`.
    pub fn supporting_face_normal_toward(
        &self,
        p: &Point3<f64>,
        tol: f64,
        preferred: &Vector3<f64>,
    ) -> Option<Vector3<f64>> {
        self.faces
            .iter()
            .filter(|f| (f.normal.dot(&p.coords) - f.offset).abs() <= tol)
            .max_by(|a, b| {
                a.normal
                    .dot(preferred)
                    .partial_cmp(&b.normal.dot(preferred))
                    .unwrap()
            })
            .map(|f| f.normal)
    }

    /// Furthest hull vertex along `dir` (local frame). Returns the point.
    pub fn support(&self, dir: &Vector3<f64>) -> Point3<f64> {
        let mut best = self.vertices[0];
        let mut best_d = best.coords.dot(dir);
        for v in &self.vertices[1..] {
            let d = v.coords.dot(dir);
            if d > best_d {
                best_d = d;
                best = *v;
            }
        }
        best
    }

    pub fn aabb(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }
}

fn face_normal(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Vector3<f64> {
    (b - a).cross(&(c - a)).normalize()
}

fn signed_distance(f: &[usize; 3], points: &[Point3<f64>], p: &Point3<f64>) -> f64 {
    let n = face_normal(&points[f[0]], &points[f[1]], &points[f[2]]);
    n.dot(&(p - points[f[0]]))
}

fn orient_outward(f: &mut [usize; 3], points: &[Point3<f64>], interior: &Point3<f64>) {
    if signed_distance(f, points, interior) > 0.0 {
        f.swap(1, 2);
    }
}

fn initial_tetrahedron(points: &[Point3<f64>], eps: f64) -> Result<(usize, usize, usize, usize), GeomError> {
    // most distant pair among axis extremes
    let mut extremes = Vec::new();
    for axis in 0..3 {
        let lo = (0..points.len())
            .min_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]))
            .unwrap();
        let hi = (0..points.len())
            .max_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]))
            .unwrap();
        extremes.push(lo);
        extremes.push(hi);
    }
    let mut best = (0, 1, 0.0);
    for &i in &extremes {
        for &j in &extremes {
            let d = (points[i] - points[j]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, d) = best;
    if d < eps {
        return Err(GeomError::DegenerateGeometry("all points coincident".into()));
    }
    let dir = (points[j] - points[i]).normalize();
    let k = (0..points.len())
        .max_by(|&a, &b| {
            let da = ((points[a] - points[i]) - (points[a] - points[i]).dot(&dir) * dir).norm();
            let db = ((points[b] - points[i]) - (points[b] - points[i]).dot(&dir) * dir).norm();
            da.total_cmp(&db)
        })
        .unwrap();
    let off_line = ((points[k] - points[i]) - (points[k] - points[i]).dot(&dir) * dir).norm();
    if off_line < eps {
        return Err(GeomError::DegenerateGeometry("points are collinear".into()));
    }
    let n = (points[j] - points[i]).cross(&(points[k] - points[i])).normalize();
    let l = (0..points.len())
        .max_by(|&a, &b| {
            let da = n.dot(&(points[a] - points[i])).abs();
            let db = n.dot(&(points[b] - points[i])).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    if n.dot(&(points[l] - points[i])).abs() < eps {
        return Err(GeomError::DegenerateGeometry("points are coplanar".into()));
    }
    Ok((i, j, k, l))
}
