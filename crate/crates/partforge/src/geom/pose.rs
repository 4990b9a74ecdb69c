//! Rigid transforms as 3D translation + intrinsic XYZ Euler angles.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

/// Normalize an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = a % two_pi;
    if a <= -std::f64::consts::PI {
        a += two_pi;
    } else if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

/// A 6D pose: translation in meters plus intrinsic XYZ Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose6D {
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl Default for Pose6D {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose6D {
    pub fn identity() -> Self {
        Self {
            tx: 0.0,
            ty: 0.0,
            tz: 0.0,
            rx: 0.0,
            ry: 0.0,
            rz: 0.0,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            tx: t.x,
            ty: t.y,
            tz: t.z,
            rx: 0.0,
            ry: 0.0,
            rz: 0.0,
        }
    }

    pub fn new(t: Vector3<f64>, r: Vector3<f64>) -> Self {
        Self {
            tx: t.x,
            ty: t.y,
            tz: t.z,
            rx: normalize_angle(r.x),
            ry: normalize_angle(r.y),
            rz: normalize_angle(r.z),
        }
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.tx, self.ty, self.tz)
    }

    pub fn euler(&self) -> Vector3<f64> {
        Vector3::new(self.rx, self.ry, self.rz)
    }

    pub fn is_finite(&self) -> bool {
        [self.tx, self.ty, self.tz, self.rx, self.ry, self.rz]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Rotation matrix `Rx(rx) * Ry(ry) * Rz(rz)`.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let (sa, ca) = self.rx.sin_cos();
        let (sb, cb) = self.ry.sin_cos();
        let (sc, cc) = self.rz.sin_cos();
        Matrix3::new(
            cb * cc,
            -cb * sc,
            sb,
            sa * sb * cc + ca * sc,
            -sa * sb * sc + ca * cc,
            -sa * cb,
            -ca * sb * cc + sa * sc,
            ca * sb * sc + sa * cc,
            ca * cb,
        )
    }

    /// Recover intrinsic XYZ Euler angles from a rotation matrix.
    pub fn from_matrix(r: &Matrix3<f64>, t: Vector3<f64>) -> Self {
        let sb = r[(0, 2)].clamp(-1.0, 1.0);
        let b = sb.asin();
        let cb = b.cos();
        let (a, c) = if cb.abs() > 1e-9 {
            (
                (-r[(1, 2)]).atan2(r[(2, 2)]),
                (-r[(0, 1)]).atan2(r[(0, 0)]),
            )
        } else if sb > 0.0 {
            // b = pi/2: only a+c observable, put it all in a
            (r[(1, 0)].atan2(r[(1, 1)]), 0.0)
        } else {
            (-r[(1, 0)].atan2(r[(1, 1)]), 0.0)
        };
        Self::new(t, Vector3::new(a, b, c))
    }

    /// Apply to a point: `R p + t`.
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation_matrix() * p.coords + self.translation())
    }

    /// Rotate a direction vector (no translation).
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * v
    }
}

/// Composition: `compose(a, b)` applies `b` first, then `a`.
pub fn compose(a: &Pose6D, b: &Pose6D) -> Pose6D {
    let ra = a.rotation_matrix();
    let rb = b.rotation_matrix();
    let r = ra * rb;
    let t = ra * b.translation() + a.translation();
    Pose6D::from_matrix(&r, t)
}

/// Inverse pose: `compose(p, invert(p))` is the identity.
pub fn invert(p: &Pose6D) -> Pose6D {
    let r = p.rotation_matrix().transpose();
    let t = -(r * p.translation());
    Pose6D::from_matrix(&r, t)
}
