//! Quaternion and small fixed-size linear-algebra helpers.
//!
//! Quaternions are scalar-first (`[w, x, y, z]`) and follow the Hamilton
//! product. An attitude quaternion maps body-frame vectors into the world
//! frame through [`rotate`].

use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3, Vector4};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec6 = nalgebra::SVector<f64, 6>;
pub type Mat6 = SMatrix<f64, 6, 6>;

/// Drift in `|q|` beyond which [`Quat::renormalized`] rescales.
pub const RENORM_TOLERANCE: f64 = 1e-9;

/// Scalar-first quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Pure quaternion `[0, v]`.
    pub fn pure(v: &Vec3) -> Self {
        Self::new(0.0, v.x, v.y, v.z)
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self::new(c, s * a.x, s * a.y, s * a.z)
    }

    /// Exponential map of a rotation vector (axis times angle).
    pub fn from_rotation_vector(theta: &Vec3) -> Self {
        let angle = theta.norm();
        if angle < 1e-12 {
            // second-order series keeps the map smooth at the origin
            let h = 0.5 * theta;
            return Self::new(1.0 - 0.125 * angle * angle, h.x, h.y, h.z).normalized();
        }
        Self::from_axis_angle(theta, angle)
    }

    /// Z-Y-X (yaw, pitch, roll) Euler angles.
    pub fn from_euler_zyx(roll: f64, pitch: f64, yaw: f64) -> Self {
        let qz = Self::from_axis_angle(&Vec3::z(), yaw);
        let qy = Self::from_axis_angle(&Vec3::y(), pitch);
        let qx = Self::from_axis_angle(&Vec3::x(), roll);
        qz * qy * qx
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn vector_part(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn inverse(&self) -> Self {
        let n2 = self.norm_squared();
        let c = self.conjugate();
        Self::new(c.w / n2, c.x / n2, c.y / n2, c.z / n2)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    /// Rescales to unit norm only when the drift exceeds [`RENORM_TOLERANCE`].
    pub fn renormalized(&self) -> Self {
        if (self.norm() - 1.0).abs() > RENORM_TOLERANCE {
            self.normalized()
        } else {
            *self
        }
    }

    /// Representative of `±q` with non-negative scalar part.
    pub fn canonical(&self) -> Self {
        if self.w < 0.0 {
            -*self
        } else {
            *self
        }
    }

    pub fn dot(&self, other: &Quat) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Body-to-world rotation matrix of a unit quaternion.
    pub fn to_rotation_matrix(&self) -> Mat3 {
        let Quat { w, x, y, z } = *self;
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Matrix `L(a)` with `a ⊗ b = L(a)·b`.
    pub fn left_matrix(&self) -> Matrix4<f64> {
        let Quat { w, x, y, z } = *self;
        Matrix4::new(w, -x, -y, -z, x, w, -z, y, y, z, w, -x, z, -y, x, w)
    }

    /// Matrix `R(b)` with `a ⊗ b = R(b)·a`.
    pub fn right_matrix(&self) -> Matrix4<f64> {
        let Quat { w, x, y, z } = *self;
        Matrix4::new(w, -x, -y, -z, x, w, z, -y, y, -z, w, x, z, y, -x, w)
    }
}

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        Quat::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, rhs: Quat) -> Quat {
        quat_mul(&self, &rhs)
    }
}

/// Hamilton product `a ⊗ b`.
pub fn quat_mul(a: &Quat, b: &Quat) -> Quat {
    Quat::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

/// Vector part of `q ⊗ [0, v] ⊗ q⁻¹`.
pub fn rotate(v: &Vec3, q: &Quat) -> Vec3 {
    (*q * Quat::pure(v) * q.inverse()).vector_part()
}

/// Vector part of `q ⊗ q_ref⁻¹`, taken on the `w ≥ 0` representative.
pub fn quat_error(q: &Quat, q_ref: &Quat) -> Vec3 {
    // vector part of q ⊗ q_ref* written so that q = ±q_ref cancels exactly
    let (a, b) = (q.vector_part(), q_ref.vector_part());
    let w = q.w * q_ref.w + a.dot(&b);
    let v = q_ref.w * a - q.w * b - a.cross(&b);
    if w < 0.0 { -v } else { v }
}

/// Cross-product matrix: `skew(v)·u = v × u`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Stacks two 3-vectors.
pub fn stack6(a: &Vec3, b: &Vec3) -> Vec6 {
    Vec6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

/// Splits a 6-vector into its two halves.
pub fn split6(v: &Vec6) -> (Vec3, Vec3) {
    (v.fixed_rows::<3>(0).into_owned(), v.fixed_rows::<3>(3).into_owned())
}

/// Rotation angle (radians, in `[0, π]`) between two unit quaternions.
pub fn geodesic_angle(a: &Quat, b: &Quat) -> f64 {
    2.0 * a.dot(b).abs().min(1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn unit_quat() -> impl Strategy<Value = Quat> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
            .prop_map(|(w, x, y, z)| Quat::new(w, x, y, z).normalized())
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn assert_quat_eq(a: &Quat, b: &Quat, eps: f64) {
        assert_relative_eq!(a.to_vector(), b.to_vector(), epsilon = eps);
    }

    #[test]
    fn identity_rotation() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_relative_eq!(rotate(&v, &Quat::IDENTITY), v, epsilon = 1e-15);
    }

    #[test]
    fn quarter_turn_about_z() {
        let q = Quat::new(FRAC_PI_4.cos(), 0.0, 0.0, FRAC_PI_4.sin());
        assert_relative_eq!(rotate(&Vec3::x(), &q), Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn i_squared_is_minus_one() {
        let i = Quat::new(0.0, 1.0, 0.0, 0.0);
        assert_eq!(quat_mul(&i, &i), Quat::new(-1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn quat_error_about_x() {
        for theta in [-2.5, -0.3, 0.0, 0.7, 3.0] {
            let q = Quat::from_axis_angle(&Vec3::x(), theta);
            let e = quat_error(&q, &Quat::IDENTITY);
            assert_relative_eq!(e, Vec3::new((theta / 2.0).sin(), 0.0, 0.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn skew_examples() {
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
        assert_eq!(skew(&Vec3::x()) * Vec3::y(), Vec3::z());
    }

    #[test]
    fn rotation_matrix_matches_rotate() {
        let q = Quat::new(0.3, -0.5, 0.7, 0.1).normalized();
        let v = Vec3::new(0.2, -1.0, 4.0);
        assert_relative_eq!(q.to_rotation_matrix() * v, rotate(&v, &q), epsilon = 1e-14);
    }

    #[test]
    fn left_right_matrices() {
        let a = Quat::new(0.3, -0.5, 0.7, 0.1);
        let b = Quat::new(-1.2, 0.4, 0.2, 0.9);
        let ab = (a * b).to_vector();
        assert_relative_eq!(a.left_matrix() * b.to_vector(), ab, epsilon = 1e-14);
        assert_relative_eq!(b.right_matrix() * a.to_vector(), ab, epsilon = 1e-14);
    }

    #[test]
    fn renormalize_is_tolerance_triggered() {
        let q = Quat::new(1.0 + 1e-11, 0.0, 0.0, 0.0);
        assert_eq!(q.renormalized(), q);
        let q = Quat::new(1.0 + 1e-6, 0.0, 0.0, 0.0);
        assert_relative_eq!(q.renormalized().norm(), 1.0, epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rotate_preserves_norm(v in vec3(), q in unit_quat()) {
            prop_assert!((rotate(&v, &q).norm() - v.norm()).abs() < 1e-9);
        }

        #[test]
        fn rotate_inverse_round_trip(v in vec3(), q in unit_quat()) {
            let back = rotate(&rotate(&v, &q), &q.inverse());
            prop_assert!((back - v).norm() < 1e-9);
        }

        #[test]
        fn quat_mul_associative(a in unit_quat(), b in unit_quat(), c in unit_quat()) {
            let l = (a * b) * c;
            let r = a * (b * c);
            prop_assert!((l.to_vector() - r.to_vector()).norm() < 1e-12);
        }

        #[test]
        fn quat_mul_identity_and_cancellation(b in unit_quat(), c in unit_quat()) {
            assert_quat_eq(&(Quat::IDENTITY * b), &b, 1e-15);
            let a = b.inverse() * c;
            assert_quat_eq(&(b * a), &c, 1e-12);
        }

        #[test]
        fn quat_error_zero_on_self(q in unit_quat()) {
            prop_assert_eq!(quat_error(&q, &q).norm(), 0.0);
            prop_assert_eq!(quat_error(&(-q), &q).norm(), 0.0);
        }

        #[test]
        fn quat_error_double_cover(q in unit_quat(), r in unit_quat()) {
            prop_assert!((quat_error(&(-q), &r) - quat_error(&q, &r)).norm() < 1e-15);
        }

        #[test]
        fn quat_error_magnitude_is_sine_half_angle(q in unit_quat(), r in unit_quat()) {
            // axis-angle oracle: the relative rotation r⁻¹q has angle θ = 2·acos|⟨q, r⟩|
            let theta = 2.0 * q.dot(&r).abs().min(1.0).acos();
            prop_assert!((quat_error(&q, &r).norm() - (theta / 2.0).sin()).abs() < 1e-9);
        }

        #[test]
        fn skew_is_cross_product(v in vec3(), u in vec3()) {
            let s = skew(&v);
            prop_assert!((s * u - v.cross(&u)).norm() < 1e-12);
            prop_assert_eq!(s.transpose(), -s);
        }
    }
}
