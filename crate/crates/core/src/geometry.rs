//! SE(3) arithmetic and the pinhole camera model.
//!
//! Twists are stored as `(rho, phi)`, translation first. Increments act on
//! template points from the left (`p -> exp(delta) * p`), and the tracker
//! folds them back into the pose as `T <- T * exp(delta)^-1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Quaternion, SMatrix, UnitQuaternion, Vector2, Vector3, Vector6};
use thiserror::Error;

use crate::scalar::Real;

/// Depth below which a point is considered to be behind or on the camera plane.
pub const EPSILON_Z: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point depth {0} is not in front of the camera")]
    NonPositiveDepth(f64),
    #[error("invalid depth {0}")]
    InvalidDepth(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("cannot parse pose: {0}")]
    PoseParse(String),
}

/// Skew-symmetric cross-product matrix of `v`.
pub fn hat<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Inverse of [`hat`].
pub fn vee<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Lie-algebra coordinates of a rigid motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist<T: Real> {
    /// Translational part, meters.
    pub rho: Vector3<T>,
    /// Rotational part (axis times angle), radians.
    pub phi: Vector3<T>,
}

impl<T: Real> Twist<T> {
    pub fn new(rho: Vector3<T>, phi: Vector3<T>) -> Self {
        Self { rho, phi }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    pub fn from_vector(v: &Vector6<T>) -> Self {
        Self::new(
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
        )
    }

    pub fn to_vector(&self) -> Vector6<T> {
        Vector6::new(
            self.rho.x, self.rho.y, self.rho.z, self.phi.x, self.phi.y, self.phi.z,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|c| c.is_finite())
    }

    /// Exponential map onto SE(3), with the full left-Jacobian coupling of
    /// translation.
    pub fn exp(&self) -> Pose<T> {
        let one = T::one();
        let theta2 = self.phi.norm_squared();
        let theta = theta2.sqrt();
        // R = I + a W + b W^2,  V = I + b W + c W^2
        let (a, b, c) = if theta < T::lit(T::SMALL_ANGLE) {
            (
                one - theta2 / T::lit(6.0),
                T::lit(0.5) - theta2 / T::lit(24.0),
                T::lit(1.0 / 6.0) - theta2 / T::lit(120.0),
            )
        } else {
            let s = theta.sin();
            let half = (theta * T::lit(0.5)).sin() / theta;
            let c = if theta < T::lit(1e-2) {
                T::lit(1.0 / 6.0) - theta2 / T::lit(120.0) + theta2 * theta2 / T::lit(5040.0)
            } else {
                (theta - s) / (theta2 * theta)
            };
            (s / theta, T::lit(2.0) * half * half, c)
        };
        let w = hat(&self.phi);
        let w2 = w * w;
        let eye = Matrix3::identity();
        let rotation = eye + w * a + w2 * b;
        let v = eye + w * b + w2 * c;
        Pose {
            rotation,
            translation: v * self.rho,
        }
    }
}

impl<T: Real> Default for Twist<T> {
    fn default() -> Self {
        Self::zero()
    }
}

/// Rigid transform `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    pub rotation: Matrix3<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> Default for Pose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Pose<T> {
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<T>) -> Self {
        Self::new(Matrix3::identity(), t)
    }

    pub fn from_quaternion(q: &UnitQuaternion<T>, t: Vector3<T>) -> Self {
        Self::new(q.to_rotation_matrix().into_inner(), t)
    }

    pub fn quaternion(&self) -> UnitQuaternion<T> {
        UnitQuaternion::from_matrix(&self.rotation)
    }

    /// `self * other`, i.e. apply `other` first.
    pub fn compose(&self, other: &Pose<T>) -> Pose<T> {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose<T> {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    /// Rotation angle in `[0, pi]`.
    pub fn rotation_angle(&self) -> T {
        let cos = ((self.rotation.trace() - T::one()) * T::lit(0.5))
            .clamp(-T::one(), T::one());
        cos.acos()
    }

    /// Largest deviation of `R^T R` from the identity.
    pub fn orthonormality_error(&self) -> T {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax()
    }

    pub fn is_valid(&self, tol: T) -> bool {
        self.rotation.iter().all(|c| c.is_finite())
            && self.translation.iter().all(|c| c.is_finite())
            && self.orthonormality_error() < tol
            && (self.rotation.determinant() - T::one()).abs() < tol
    }

    /// Logarithm map; the returned rotation part has norm at most pi.
    pub fn log(&self) -> Twist<T> {
        let r = &self.rotation;
        let one = T::one();
        let half = T::lit(0.5);
        let cos = ((r.trace() - one) * half).clamp(-one, one);
        let axis2sin = Vector3::new(
            r[(2, 1)] - r[(1, 2)],
            r[(0, 2)] - r[(2, 0)],
            r[(1, 0)] - r[(0, 1)],
        );
        let sin = axis2sin.norm() * half;
        let theta = sin.atan2(cos);
        let theta2 = theta * theta;

        let phi = if theta < T::lit(T::SMALL_ANGLE) {
            axis2sin * (half * (one + theta2 / T::lit(6.0)))
        } else if cos < T::lit(-0.99) {
            // near pi: (R + R^T)/2 - cos I = (1 - cos) a a^T
            let sym = (r + r.transpose()) * half - Matrix3::identity() * cos;
            let k = (0..3)
                .max_by(|&i, &j| {
                    sym[(i, i)]
                        .partial_cmp(&sym[(j, j)])
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(0);
            let scale = (sym[(k, k)] * (one - cos)).sqrt();
            let mut axis: Vector3<T> = sym.column(k) / scale;
            if axis.dot(&axis2sin) < T::zero() {
                axis = -axis;
            }
            axis.normalize() * theta
        } else {
            axis2sin * (theta / (T::lit(2.0) * sin))
        };

        // V^-1 = I - W/2 + d W^2
        let d = if theta < T::lit(1e-2) {
            T::lit(1.0 / 12.0) + theta2 / T::lit(720.0) + theta2 * theta2 / T::lit(30240.0)
        } else {
            let h = theta * half;
            (one - h * h.cos() / h.sin()) / theta2
        };
        let w = hat(&phi);
        let v_inv = Matrix3::identity() - w * half + w * w * d;
        Twist::new(v_inv * self.translation, phi)
    }

    pub fn cast_f64(&self) -> Pose<f64> {
        Pose::new(
            self.rotation.map(|c| c.as_f64()),
            self.translation.map(|c| c.as_f64()),
        )
    }

    pub fn from_f64(p: &Pose<f64>) -> Self {
        Pose::new(p.rotation.map(T::lit), p.translation.map(T::lit))
    }

    /// Single-line text form `tx ty tz qx qy qz qw`.
    pub fn to_tum(&self) -> String {
        let q = self.quaternion();
        let t = self.translation;
        format!(
            "{:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}",
            t.x.as_f64(),
            t.y.as_f64(),
            t.z.as_f64(),
            q.i.as_f64(),
            q.j.as_f64(),
            q.k.as_f64(),
            q.w.as_f64()
        )
    }

    /// Parses seven whitespace separated values `tx ty tz qx qy qz qw`.
    pub fn parse_tum_fields(fields: &[&str]) -> Result<Self, GeometryError> {
        if fields.len() != 7 {
            return Err(GeometryError::PoseParse(format!(
                "expected 7 values, found {}",
                fields.len()
            )));
        }
        let mut v = [0.0f64; 7];
        for (slot, f) in v.iter_mut().zip(fields) {
            *slot = f
                .parse::<f64>()
                .map_err(|e| GeometryError::PoseParse(format!("{f:?}: {e}")))?;
            if !slot.is_finite() {
                return Err(GeometryError::PoseParse(format!("non-finite value {f:?}")));
            }
        }
        let q = Quaternion::new(v[6], v[3], v[4], v[5]);
        if q.norm() < 1e-12 {
            return Err(GeometryError::PoseParse("zero quaternion".into()));
        }
        let q = UnitQuaternion::from_quaternion(q);
        Ok(Pose::from_f64(&Pose::from_quaternion(
            &q,
            Vector3::new(v[0], v[1], v[2]),
        )))
    }
}

impl<T: Real> std::ops::Mul for Pose<T> {
    type Output = Pose<T>;
    fn mul(self, rhs: Pose<T>) -> Pose<T> {
        self.compose(&rhs)
    }
}

impl<T: Real> fmt::Display for Pose<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tum())
    }
}

impl<T: Real> FromStr for Pose<T> {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        Self::parse_tum_fields(&fields)
    }
}

/// Pinhole camera with pixel-center coordinates (pixel `i` spans `[i-0.5, i+0.5]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self, GeometryError> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.fx <= T::zero() || self.fy <= T::zero() {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive and finite (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        let w = T::lit(self.width as f64);
        let h = T::lit(self.height as f64);
        if self.cx < T::zero() || self.cx >= w || self.cy < T::zero() || self.cy >= h {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} grid",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Intrinsics after integer box-downsampling by `factor` (pixel-center convention).
    pub fn downscaled(&self, factor: usize) -> Result<Self, GeometryError> {
        let f = T::lit(factor as f64);
        let half = T::lit(0.5);
        Self::new(
            self.fx / f,
            self.fy / f,
            (self.cx + half) / f - half,
            (self.cy + half) / f - half,
            self.width / factor,
            self.height / factor,
        )
    }

    pub fn project(&self, p: &Vector3<T>) -> Result<Vector2<T>, GeometryError> {
        if !(p.z > T::lit(EPSILON_Z)) {
            return Err(GeometryError::NonPositiveDepth(p.z.as_f64()));
        }
        Ok(Vector2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    pub fn backproject(&self, u: &Vector2<T>, depth: T) -> Result<Vector3<T>, GeometryError> {
        if !depth.is_finite() || depth <= T::zero() {
            return Err(GeometryError::InvalidDepth(depth.as_f64()));
        }
        Ok(Vector3::new(
            (u.x - self.cx) * depth / self.fx,
            (u.y - self.cy) * depth / self.fy,
            depth,
        ))
    }

    /// Derivative of `project(exp(delta) * p)` with respect to `delta` at zero.
    pub fn warp_jacobian(&self, p: &Vector3<T>) -> Result<SMatrix<T, 2, 6>, GeometryError> {
        if !(p.z > T::lit(EPSILON_Z)) {
            return Err(GeometryError::NonPositiveDepth(p.z.as_f64()));
        }
        let inv_z = T::one() / p.z;
        let inv_z2 = inv_z * inv_z;
        let zero = T::zero();
        let d_proj = SMatrix::<T, 2, 3>::new(
            self.fx * inv_z,
            zero,
            -self.fx * p.x * inv_z2,
            zero,
            self.fy * inv_z,
            -self.fy * p.y * inv_z2,
        );
        let mut d_point = SMatrix::<T, 3, 6>::zeros();
        d_point
            .fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&Matrix3::identity());
        d_point.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-hat(p)));
        Ok(d_proj * d_point)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn k() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(100.0, 100.0, 80.0, 60.0, 160, 120).unwrap()
    }

    fn random_twist(rng: &mut ChaCha8Rng, max_angle: f64) -> Twist<f64> {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalize();
        let angle = rng.random_range(0.0..max_angle);
        let rho = Vector3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        Twist::new(rho, axis * angle)
    }

    #[test]
    fn zero_twist_is_identity() {
        let p = Twist::<f64>::zero().exp();
        assert_eq!(p, Pose::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let p = Twist::new(Vector3::zeros(), Vector3::new(0.0, 0.0, PI / 2.0)).exp();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(p.rotation, expected, epsilon = 1e-15);
    }

    #[test]
    fn exp_rotation_matches_quaternion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let xi = random_twist(&mut rng, 3.0);
            let q = UnitQuaternion::from_scaled_axis(xi.phi);
            let r = q.to_rotation_matrix().into_inner();
            assert_relative_eq!(xi.exp().rotation, r, epsilon = 1e-12);
            let back = xi.exp().log();
            assert!((back.to_vector() - xi.to_vector()).amax() < 1e-9);
        }
    }

    #[test]
    fn log_of_known_twist() {
        let xi = Twist::new(Vector3::new(0.1, 0.2, 0.3), Vector3::new(0.01, 0.02, 0.03));
        let back = xi.exp().log();
        assert!((back.to_vector() - xi.to_vector()).amax() < 1e-10);
        assert_eq!(Pose::<f64>::identity().log(), Twist::zero());
    }

    #[test]
    fn log_at_pi() {
        // quaternion for pi about x is (w=0, x=1)
        let q = UnitQuaternion::from_quaternion(Quaternion::new(0.0, 1.0, 0.0, 0.0));
        let pose = Pose::from_quaternion(&q, Vector3::new(0.3, -0.2, 0.1));
        let xi = pose.log();
        assert_relative_eq!(xi.phi, Vector3::new(PI, 0.0, 0.0), epsilon = 1e-12);
        assert!(xi.rho.iter().all(|c| c.is_finite()));
        let again = xi.exp();
        assert_relative_eq!(again.rotation, pose.rotation, epsilon = 1e-12);
        assert_relative_eq!(again.translation, pose.translation, epsilon = 1e-12);

        // just below pi, arbitrary axis
        let axis = Vector3::new(0.3, -0.5, 0.8).normalize();
        let xi = Twist::new(Vector3::new(1.0, 2.0, 3.0), axis * (PI - 1e-7));
        assert!((xi.exp().log().to_vector() - xi.to_vector()).amax() < 1e-9);
    }

    #[test]
    fn tiny_angles_round_trip() {
        for &angle in &[0.0, 1e-12, 1e-9, 5e-9, 2e-8, 1e-6, 1e-3, 9e-3, 1.1e-2] {
            let xi = Twist::new(
                Vector3::new(0.5, -0.25, 1.0),
                Vector3::new(1.0, 2.0, -1.0).normalize() * angle,
            );
            let back = xi.exp().log();
            assert!((back.to_vector() - xi.to_vector()).amax() < 1e-12, "angle {angle}");
        }
    }

    #[test]
    fn group_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_twist(&mut rng, 3.0).exp();
        let b = random_twist(&mut rng, 3.0).exp();
        let c = random_twist(&mut rng, 3.0).exp();
        let id = Pose::identity();
        assert_eq!(id.compose(&a), a);
        let lhs = a.compose(&b).compose(&c);
        let rhs = a.compose(&b.compose(&c));
        assert_relative_eq!(lhs.rotation, rhs.rotation, epsilon = 1e-12);
        assert_relative_eq!(lhs.translation, rhs.translation, epsilon = 1e-12);
        let e = a.compose(&a.inverse());
        assert_relative_eq!(e.rotation, Matrix3::identity(), epsilon = 1e-12);
        assert!(e.translation.norm() < 1e-12);
        for _ in 0..100 {
            let p = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            assert_eq!(id.transform_point(&p), p);
            let seq = a.transform_point(&b.transform_point(&p));
            assert_relative_eq!(a.compose(&b).transform_point(&p), seq, epsilon = 1e-12);
        }
    }

    #[test]
    fn composition_drift_stays_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut acc = Pose::<f64>::identity();
        for _ in 0..1000 {
            acc = acc.compose(&random_twist(&mut rng, 0.5).exp());
        }
        assert!(acc.is_valid(1e-9), "drift {}", acc.orthonormality_error());
    }

    #[test]
    fn projection_examples() {
        let k = k();
        assert_eq!(k.project(&Vector3::new(0.0, 0.0, 2.0)).unwrap(), Vector2::new(80.0, 60.0));
        assert_eq!(k.project(&Vector3::new(1.0, 0.0, 2.0)).unwrap(), Vector2::new(130.0, 60.0));
        assert_eq!(
            k.backproject(&Vector2::new(80.0, 60.0), 2.0).unwrap(),
            Vector3::new(0.0, 0.0, 2.0)
        );
        assert_eq!(
            k.backproject(&Vector2::new(130.0, 60.0), 2.0).unwrap(),
            Vector3::new(1.0, 0.0, 2.0)
        );
        assert!(matches!(
            k.project(&Vector3::new(1.0, 0.0, 0.0)),
            Err(GeometryError::NonPositiveDepth(_))
        ));
        assert!(matches!(
            k.backproject(&Vector2::new(1.0, 1.0), 0.0),
            Err(GeometryError::InvalidDepth(_))
        ));
        assert!(k.backproject(&Vector2::new(1.0, 1.0), f64::NAN).is_err());
    }

    #[test]
    fn project_backproject_round_trip() {
        let k = k();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let u = Vector2::new(rng.random_range(0.0..159.0), rng.random_range(0.0..119.0));
            let d = rng.random_range(0.1..10.0);
            let back = k.project(&k.backproject(&u, d).unwrap()).unwrap();
            assert!((back - u).amax() < 1e-9);
        }
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, -0.1, 1.0, 4, 4).is_err());
        let k = CameraIntrinsics::new(517.3, 516.5, 318.6, 255.3, 640, 480).unwrap();
        let half = k.downscaled(2).unwrap();
        assert_eq!((half.width, half.height), (320, 240));
        assert_relative_eq!(half.fx, 517.3 / 2.0);
        assert_relative_eq!(half.cx, (318.6 + 0.5) / 2.0 - 0.5);
    }

    #[test]
    fn warp_jacobian_on_axis() {
        let k = CameraIntrinsics::new(1.0, 1.0, 0.5, 0.5, 2, 2).unwrap();
        let j = k.warp_jacobian(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(j.fixed_view::<2, 3>(0, 0).clone_owned(), SMatrix::<f64, 2, 3>::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0));
        assert!(k.warp_jacobian(&Vector3::new(0.0, 0.0, -1.0)).is_err());
        assert!(k.warp_jacobian(&Vector3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn warp_jacobian_matches_finite_differences() {
        let k = k();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for _ in 0..200 {
            let u = Vector2::new(rng.random_range(5.0..155.0), rng.random_range(5.0..115.0));
            let p = k.backproject(&u, rng.random_range(0.5..5.0)).unwrap();
            let j = k.warp_jacobian(&p).unwrap();
            for col in 0..6 {
                let mut d = Vector6::zeros();
                d[col] = h;
                let plus = k.project(&Twist::from_vector(&d).exp().transform_point(&p)).unwrap();
                let minus = k.project(&Twist::from_vector(&(-d)).exp().transform_point(&p)).unwrap();
                let fd = (plus - minus) / (2.0 * h);
                for row in 0..2 {
                    let err = (fd[row] - j[(row, col)]).abs();
                    let scale = j[(row, col)].abs().max(1.0);
                    assert!(err / scale < 1e-5, "({row},{col}) fd {} vs {}", fd[row], j[(row, col)]);
                }
            }
        }
    }

    #[test]
    fn pose_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_twist(&mut rng, 3.0).exp();
        let back: Pose<f64> = p.to_tum().parse().unwrap();
        assert_relative_eq!(back.rotation, p.rotation, epsilon = 1e-7);
        assert_relative_eq!(back.translation, p.translation, epsilon = 1e-7);
        assert!("1 2 3".parse::<Pose<f64>>().is_err());
        assert!("0 0 0 0 0 0 0".parse::<Pose<f64>>().is_err());
    }

    #[test]
    fn single_precision_works() {
        let xi = Twist::<f32>::new(Vector3::new(0.1, 0.2, 0.3), Vector3::new(0.2, -0.1, 0.05));
        let back = xi.exp().log();
        assert!((back.to_vector() - xi.to_vector()).amax() < 1e-5);
    }
}
