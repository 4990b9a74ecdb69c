//! Triangle meshes, point clouds and surface sampling.

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pose::Pose6D;
use super::GeomError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

/// An `m x 3` set of points in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Self {
        Self { vertices, triangles }
    }

    /// Axis-aligned box centered at `center` with full side lengths `size`.
    pub fn cuboid(center: Point3<f64>, size: Vector3<f64>) -> Self {
        let h = size / 2.0;
        let c = center.coords;
        let corners: Vec<Point3<f64>> = (0..8)
            .map(|i| {
                let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
                let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
                let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
                Point3::from(c + Vector3::new(sx * h.x, sy * h.y, sz * h.z))
            })
            .collect();
        // 12 triangles, outward winding
        let tris = vec![
            [0, 2, 1], [1, 2, 3], // -z
            [4, 5, 6], [5, 7, 6], // +z
            [0, 1, 4], [1, 5, 4], // -y
            [2, 6, 3], [3, 6, 7], // +y
            [0, 4, 2], [2, 4, 6], // -x
            [1, 3, 5], [3, 7, 5], // +x
        ];
        Self::new(corners, tris)
    }

    /// Closed cylinder along +z, tessellated with `segments` side facets.
    pub fn cylinder(center: Point3<f64>, radius: f64, height: f64, segments: usize) -> Self {
        let mut vertices = Vec::with_capacity(2 * segments + 2);
        let c = center.coords;
        let hz = height / 2.0;
        for ring in 0..2 {
            let z = if ring == 0 { -hz } else { hz };
            for s in 0..segments {
                let a = std::f64::consts::TAU * s as f64 / segments as f64;
                vertices.push(Point3::from(
                    c + Vector3::new(radius * a.cos(), radius * a.sin(), z),
                ));
            }
        }
        let bot_center = vertices.len();
        vertices.push(Point3::from(c + Vector3::new(0.0, 0.0, -hz)));
        let top_center = vertices.len();
        vertices.push(Point3::from(c + Vector3::new(0.0, 0.0, hz)));

        let mut triangles = Vec::new();
        for s in 0..segments {
            let n = (s + 1) % segments;
            // side quad
            triangles.push([s, n, segments + s]);
            triangles.push([n, segments + n, segments + s]);
            // caps
            triangles.push([bot_center, n, s]);
            triangles.push([top_center, segments + s, segments + n]);
        }
        Self::new(vertices, triangles)
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let ab = self.vertices[b] - self.vertices[a];
        let ac = self.vertices[c] - self.vertices[a];
        ab.cross(&ac).norm() / 2.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
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

    /// Signed volume and volume-weighted centroid via the divergence theorem.
    /// Requires a watertight mesh with outward winding.
    pub fn volume_centroid(&self) -> (f64, Point3<f64>) {
        let mut volume = 0.0;
        let mut centroid = Vector3::zeros();
        for &[a, b, c] in &self.triangles {
            let (pa, pb, pc) = (self.vertices[a].coords, self.vertices[b].coords, self.vertices[c].coords);
            let v = pa.dot(&pb.cross(&pc)) / 6.0;
            volume += v;
            centroid += (pa + pb + pc) / 4.0 * v;
        }
        if volume.abs() < 1e-15 {
            return (0.0, Point3::origin());
        }
        (volume, Point3::from(centroid / volume))
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= self.vertices.len()) {
                return Err(GeomError::DegenerateGeometry(format!(
                    "triangle {i} references missing vertex"
                )));
            }
            if self.triangle_area(i) <= 1e-12 {
                return Err(GeomError::DegenerateGeometry(format!(
                    "triangle {i} has zero area"
                )));
            }
        }
        Ok(())
    }

    /// Translate every vertex so the volume centroid sits at the origin.
    /// Returns the recorded offset (the old centroid).
    pub fn recenter_to_com(&self) -> Result<(TriMesh, Vector3<f64>), GeomError> {
        let (volume, centroid) = self.volume_centroid();
        if volume.abs() < 1e-12 {
            return Err(GeomError::DegenerateGeometry("zero volume mesh".into()));
        }
        let offset = centroid.coords;
        let vertices = self
            .vertices
            .iter()
            .map(|v| Point3::from(v.coords - offset))
            .collect();
        Ok((TriMesh::new(vertices, self.triangles.clone()), offset))
    }
}

/// Apply a rigid transform to every point of a cloud.
pub fn transform_points(p: &Pose6D, cloud: &PointCloud) -> PointCloud {
    let r = p.rotation_matrix();
    let t = p.translation();
    PointCloud {
        points: cloud.points.iter().map(|q| Point3::from(r * q.coords + t)).collect(),
    }
}

/// Sample `m` points area-uniformly over the mesh surface. Deterministic per seed.
pub fn sample_point_cloud(mesh: &TriMesh, m: usize, seed: u64) -> PointCloud {
    assert!(m >= 1, "need at least one sample");
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        acc += mesh.triangle_area(t);
        cumulative.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(m);
    for _ in 0..m {
        let target = rng.gen_range(0.0..total);
        let idx = cumulative.partition_point(|&c| c < target).min(mesh.triangles.len() - 1);
        let [a, b, c] = mesh.triangles[idx];
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let su = u.sqrt();
        let (w0, w1, w2) = (1.0 - su, su * (1.0 - v), su * v);
        let p = mesh.vertices[a].coords * w0 + mesh.vertices[b].coords * w1 + mesh.vertices[c].coords * w2;
        points.push(Point3::from(p));
    }
    PointCloud { points }
}
