//! Rotations between the array frame and the steered (primed) frame.
//!
//! The steered frame is obtained by rotating about `z` by the azimuth angle and
//! then about `x` by the elevation angle. A point expressed in array coordinates
//! maps to primed coordinates through `p' = R · p` with
//! `R = rot_x(elevation) · rot_z(azimuth)`. The primed `y'` axis is the steering
//! direction.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::GeometryError;

/// A point or direction in three dimensions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        self.scale(rhs)
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub const fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3::from_rows([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Mat3::from_rows(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// General inverse by cofactors. `None` when singular.
    pub fn inverse(&self) -> Option<Mat3> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = adj[i][j] / det;
            }
        }
        Some(Mat3::from_rows(out))
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        worst
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        self.mul_mat(&rhs)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.mul_vec(rhs)
    }
}

/// Azimuth and elevation of a steering command, in radians.
///
/// Both angles lie strictly inside (−π/2, π/2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteeringAngles {
    azimuth: f64,
    elevation: f64,
}

impl SteeringAngles {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self, GeometryError> {
        for (name, value) in [("azimuth", azimuth), ("elevation", elevation)] {
            if !value.is_finite() || value.abs() >= FRAC_PI_2 {
                return Err(GeometryError::AngleOutOfRange { name, value });
            }
        }
        Ok(Self { azimuth, elevation })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self, GeometryError> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    pub fn unsteered() -> Self {
        Self { azimuth: 0.0, elevation: 0.0 }
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    /// Steering direction in array coordinates: the primed `y'` axis, `Rᵀ·ŷ`.
    pub fn direction(&self) -> Vec3 {
        from_primed(&steering_rotation(*self), Vec3::new(0.0, 1.0, 0.0))
    }

    /// Inverse of [`SteeringAngles::direction`] for a direction with positive `y`.
    pub fn from_direction(dir: Vec3) -> Result<Self, GeometryError> {
        let u = dir.normalized().ok_or(GeometryError::ZeroDirection)?;
        let elevation = (-u.z).clamp(-1.0, 1.0).asin();
        let azimuth = (-u.x).atan2(u.y);
        Self::new(azimuth, elevation)
    }
}

/// Rotation of the coordinate system about the `x` axis.
pub fn rot_x(theta_el: f64) -> Mat3 {
    let (s, c) = theta_el.sin_cos();
    Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
}

/// Rotation of the coordinate system about the `z` axis.
pub fn rot_z(theta_az: f64) -> Mat3 {
    let (s, c) = theta_az.sin_cos();
    Mat3::from_rows([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
}

/// `rot_x(elevation) · rot_z(azimuth)`.
pub fn steering_rotation(angles: SteeringAngles) -> Mat3 {
    rot_x(angles.elevation) * rot_z(angles.azimuth)
}

/// Array coordinates to primed coordinates.
pub fn to_primed(r: &Mat3, p: Vec3) -> Vec3 {
    r.mul_vec(p)
}

/// Primed coordinates back to array coordinates (`Rᵀ·p'`).
pub fn from_primed(r: &Mat3, p_primed: Vec3) -> Vec3 {
    r.transpose().mul_vec(p_primed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_vec_close(a: Vec3, b: Vec3, tol: f64) {
        assert!(
            (a - b).norm() <= tol,
            "{a:?} vs {b:?} differ by {}",
            (a - b).norm()
        );
    }

    fn orthonormal_error(r: &Mat3) -> f64 {
        r.transpose().mul_mat(r).max_abs_diff(&Mat3::IDENTITY)
    }

    #[test]
    fn rot_x_examples() {
        assert_eq!(rot_x(0.0), Mat3::IDENTITY);
        assert_vec_close(
            rot_x(FRAC_PI_2) * Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            1e-15,
        );
        let t = 0.7;
        assert!((rot_x(t) * rot_x(-t)).max_abs_diff(&Mat3::IDENTITY) <= 1e-12);
    }

    #[test]
    fn rot_z_examples() {
        assert_eq!(rot_z(0.0), Mat3::IDENTITY);
        assert_vec_close(
            rot_z(FRAC_PI_2) * Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            1e-15,
        );
        let r = rot_z(0.3);
        assert!(orthonormal_error(&r) <= 1e-12);
        assert!((r.determinant() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn steering_rotation_examples() {
        let r = steering_rotation(SteeringAngles::unsteered());
        assert_eq!(r, Mat3::IDENTITY);

        let a = SteeringAngles::from_degrees(20.0, 0.0).unwrap();
        assert!(steering_rotation(a).max_abs_diff(&rot_z(20f64.to_radians())) <= 1e-15);

        let a = SteeringAngles::from_degrees(30.0, 0.0).unwrap();
        let (xa, za) = (0.37, -1.2);
        let p = to_primed(&steering_rotation(a), Vec3::new(xa, 0.0, za));
        assert!((p.y + xa * 30f64.to_radians().sin()).abs() <= 1e-15);
    }

    #[test]
    fn composition_order_matters() {
        let t = 20f64.to_radians();
        let a = SteeringAngles::new(t, t).unwrap();
        let ours = steering_rotation(a);
        let other = rot_z(t) * rot_x(t);
        assert!(ours.max_abs_diff(&other) > 1e-3);
    }

    #[test]
    fn primed_round_trip() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(to_primed(&Mat3::IDENTITY, p), p);
        assert_eq!(from_primed(&Mat3::IDENTITY, p), p);
        let r = steering_rotation(SteeringAngles::from_degrees(-35.0, 12.0).unwrap());
        assert_vec_close(from_primed(&r, to_primed(&r, p)), p, 1e-12);
        let inv = r.inverse().unwrap();
        assert!(inv.max_abs_diff(&r.transpose()) <= 1e-12);
    }

    #[test]
    fn angle_bounds_rejected() {
        assert!(SteeringAngles::from_degrees(90.0, 0.0).is_err());
        assert!(SteeringAngles::from_degrees(0.0, -90.0).is_err());
        assert!(SteeringAngles::new(f64::NAN, 0.0).is_err());
        assert!(SteeringAngles::from_degrees(89.9, -89.9).is_ok());
    }

    #[test]
    fn direction_matches_primed_axis() {
        let a = SteeringAngles::from_degrees(20.0, 10.0).unwrap();
        let d = a.direction();
        let r = steering_rotation(a);
        assert_vec_close(to_primed(&r, d), Vec3::new(0.0, 1.0, 0.0), 1e-15);
        let back = SteeringAngles::from_direction(d).unwrap();
        assert!((back.azimuth() - a.azimuth()).abs() < 1e-14);
        assert!((back.elevation() - a.elevation()).abs() < 1e-14);
    }

    fn angle() -> impl Strategy<Value = f64> {
        -1.5f64..1.5
    }

    proptest! {
        #[test]
        fn rotation_is_proper_orthonormal(az in angle(), el in angle()) {
            let r = steering_rotation(SteeringAngles::new(az, el).unwrap());
            prop_assert!(orthonormal_error(&r) <= 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn rotation_preserves_norm(
            az in angle(), el in angle(),
            x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0,
        ) {
            let r = steering_rotation(SteeringAngles::new(az, el).unwrap());
            let p = Vec3::new(x, y, z);
            let q = to_primed(&r, p);
            prop_assert!((q.norm() - p.norm()).abs() <= 1e-12);
            prop_assert!((from_primed(&r, q) - p).norm() <= 1e-12);
        }
    }
}
