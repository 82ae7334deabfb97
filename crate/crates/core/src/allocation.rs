//! Actuator effectiveness of the six-arm tiltrotor and pseudo-inverse
//! control allocation.
//!
//! Each arm `i` sits at azimuth `γ_i` and tilts its rotor by `α_i` about the
//! outward arm axis. Substituting `U = (μΩ²sin α, μΩ²cos α)` per arm turns the
//! nonlinear effectiveness model into the linear map `wrench = M_c·U`, which
//! is inverted in the least-squares sense with the Moore–Penrose inverse.

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{stack6, Vec3, Vec6};

pub const ROTORS: usize = 6;
pub type AllocationMatrix = SMatrix<f64, 6, 12>;
pub type AllocationPinv = SMatrix<f64, 12, 6>;
pub type SubstitutedInput = SVector<f64, 12>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActuatorGeometry {
    /// Arm azimuths in the body XY plane (rad).
    pub azimuths: [f64; ROTORS],
    pub arm_length: f64,
    /// Thrust coefficient μ (N·s²).
    pub thrust_coeff: f64,
    /// Drag-torque coefficient k (N·m·s²).
    pub drag_coeff: f64,
    /// Rotor spin directions, ±1.
    pub spin: [f64; ROTORS],
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for ActuatorGeometry {
    fn default() -> Self {
        let mu = 8.5e-6;
        Self {
            azimuths: std::array::from_fn(|i| i as f64 * PI / 3.0),
            arm_length: 0.3,
            thrust_coeff: mu,
            drag_coeff: 0.016 * mu,
            spin: [1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
            omega_min: 0.0,
            omega_max: 1500.0,
        }
    }
}

impl ActuatorGeometry {
    pub fn validate(&self) -> Result<()> {
        let ok = self.arm_length > 0.0
            && self.thrust_coeff > 0.0
            && self.drag_coeff > 0.0
            && self.omega_min >= 0.0
            && self.omega_max > self.omega_min
            && self.spin.iter().all(|s| *s == 1.0 || *s == -1.0)
            && self.azimuths.iter().all(|a| a.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid actuator geometry: {self:?}")))
        }
    }

    /// Rotor hub position in the body frame.
    pub fn rotor_position(&self, i: usize) -> Vec3 {
        let g = self.azimuths[i];
        self.arm_length * Vec3::new(g.cos(), g.sin(), 0.0)
    }

    pub fn arm_axis(&self, i: usize) -> Vec3 {
        let g = self.azimuths[i];
        Vec3::new(g.cos(), g.sin(), 0.0)
    }

    /// Thrust direction of rotor `i`: `[0, 0, −1]` rotated by `α` about the arm axis.
    pub fn thrust_direction(&self, i: usize, alpha: f64) -> Vec3 {
        let (s, c) = alpha.sin_cos();
        let down = -Vec3::z();
        // Rodrigues with axis ⟂ down
        c * down + s * self.arm_axis(i).cross(&down)
    }

    /// Wrench of a single rotor, evaluated from its speed and tilt directly.
    pub fn rotor_wrench(&self, i: usize, omega: f64, alpha: f64) -> Vec6 {
        let d = self.thrust_direction(i, alpha);
        let w2 = omega * omega;
        let f = self.thrust_coeff * w2 * d;
        let tau = self.rotor_position(i).cross(&f) + self.spin[i] * self.drag_coeff * w2 * d;
        stack6(&f, &tau)
    }

    /// Forward actuator model: total body wrench of a command.
    pub fn wrench(&self, cmd: &ActuatorCommand) -> Vec6 {
        (0..ROTORS).map(|i| self.rotor_wrench(i, cmd.omega[i], cmd.alpha[i])).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorCommand {
    /// Rotor speeds (rad/s).
    pub omega: [f64; ROTORS],
    /// Tilt angles (rad) in `(−π, π]`.
    pub alpha: [f64; ROTORS],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub command: ActuatorCommand,
    /// At least one rotor speed was clamped to its bounds.
    pub saturated: bool,
}

/// `M_c`, the force-allocation matrix `B` and their pseudo-inverses.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMatrices {
    geometry: ActuatorGeometry,
    mc: AllocationMatrix,
    mc_pinv: AllocationPinv,
}

impl AllocationMatrices {
    pub fn geometry(&self) -> &ActuatorGeometry {
        &self.geometry
    }

    pub fn mc(&self) -> &AllocationMatrix {
        &self.mc
    }

    pub fn mc_pinv(&self) -> &AllocationPinv {
        &self.mc_pinv
    }

    /// `B` coincides with `M_c`.
    pub fn b(&self) -> &AllocationMatrix {
        &self.mc
    }

    pub fn b_pinv(&self) -> &AllocationPinv {
        &self.mc_pinv
    }
}

/// Builds `M_c` with columns in newtons per unit of `U = (μΩ²s, μΩ²c)`.
pub fn build_matrices(geom: &ActuatorGeometry) -> Result<AllocationMatrices> {
    geom.validate()?;
    let ratio = geom.drag_coeff / geom.thrust_coeff;
    let mut mc = AllocationMatrix::zeros();
    for i in 0..ROTORS {
        let p = geom.rotor_position(i);
        let down = -Vec3::z();
        let tangential = geom.arm_axis(i).cross(&down);
        for (col, dir) in [(2 * i, tangential), (2 * i + 1, down)] {
            let tau = p.cross(&dir) + geom.spin[i] * ratio * dir;
            mc.fixed_view_mut::<6, 1>(0, col).copy_from(&stack6(&dir, &tau));
        }
    }
    let svd = mc.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1.0);
    let rank = svd.rank(tol);
    if rank < 6 {
        return Err(Error::DegenerateGeometry { rank });
    }
    let mc_pinv = svd
        .pseudo_inverse(tol)
        .map_err(|e| Error::InvalidConfig(format!("pseudo-inverse failed: {e}")))?;
    Ok(AllocationMatrices { geometry: geom.clone(), mc, mc_pinv })
}

/// `U = M_c†·wrench`.
pub fn substituted_input(wrench: &Vec6, mats: &AllocationMatrices) -> SubstitutedInput {
    mats.mc_pinv * wrench
}

/// Rotor speed and tilt from one arm's `(Ω²s, Ω²c)` pair, both scaled by μ:
/// `Ω = (√(u_s² + u_c²)/μ)^{1/2}`, `α = atan2(u_s, u_c)`.
pub fn rotor_command(us: f64, uc: f64, mu: f64) -> (f64, f64) {
    let omega = (us.hypot(uc) / mu).sqrt();
    (omega, tilt_angle(us, uc))
}

/// `atan2(s, c)` wrapped to `(−π, π]`, with `atan2(0, 0) := 0`.
pub fn tilt_angle(us: f64, uc: f64) -> f64 {
    if us == 0.0 && uc == 0.0 {
        return 0.0;
    }
    let a = us.atan2(uc);
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

fn finish(mut omega: [f64; ROTORS], alpha: [f64; ROTORS], geom: &ActuatorGeometry) -> Allocation {
    let mut saturated = false;
    for w in omega.iter_mut() {
        let c = w.clamp(geom.omega_min, geom.omega_max);
        saturated |= c != *w;
        *w = c;
    }
    Allocation { command: ActuatorCommand { omega, alpha }, saturated }
}

/// Least-squares allocation of a body wrench to rotor speeds and tilts.
pub fn allocate(wrench: &Vec6, mats: &AllocationMatrices) -> Allocation {
    let u = substituted_input(wrench, mats);
    let geom = &mats.geometry;
    let mut omega = [0.0; ROTORS];
    let mut alpha = [0.0; ROTORS];
    for i in 0..ROTORS {
        (omega[i], alpha[i]) = rotor_command(u[2 * i], u[2 * i + 1], geom.thrust_coeff);
    }
    finish(omega, alpha, geom)
}

/// Allocation with the square root in place of the fourth root. Speeds are
/// computed in units of `speed_scale` (1 gives the literal formula
/// `Ω = √((Ω²s)² + (Ω²c)²)`; `Ω_max` mimics normalized motor outputs).
pub fn allocate_mismatched_scaled(
    wrench: &Vec6,
    mats: &AllocationMatrices,
    speed_scale: f64,
) -> Allocation {
    let u = substituted_input(wrench, mats);
    let geom = &mats.geometry;
    let unit = geom.thrust_coeff * speed_scale * speed_scale;
    let mut omega = [0.0; ROTORS];
    let mut alpha = [0.0; ROTORS];
    for i in 0..ROTORS {
        let (us, uc) = (u[2 * i], u[2 * i + 1]);
        omega[i] = speed_scale * us.hypot(uc) / unit;
        alpha[i] = tilt_angle(us, uc);
    }
    finish(omega, alpha, geom)
}

pub fn allocate_mismatched(wrench: &Vec6, mats: &AllocationMatrices) -> Allocation {
    allocate_mismatched_scaled(wrench, mats, 1.0)
}

/// Per-rotor quantity `F_j = y_{2j−1}² + y_{2j}²` with `y = B†·wrench`.
pub fn rotor_thrust_vector(wrench: &Vec6, mats: &AllocationMatrices) -> Vec6 {
    let y = mats.b_pinv() * wrench;
    Vec6::from_fn(|j, _| y[2 * j].powi(2) + y[2 * j + 1].powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mats() -> AllocationMatrices {
        build_matrices(&ActuatorGeometry::default()).unwrap()
    }

    fn hover() -> Vec6 {
        Vec6::new(0.0, 0.0, -4.0 * 9.81, 0.0, 0.0, 0.0)
    }

    #[test]
    fn symmetric_hover_cancels_torque() {
        let geom = ActuatorGeometry::default();
        let omega = 800.0;
        let cmd = ActuatorCommand { omega: [omega; ROTORS], alpha: [0.0; ROTORS] };
        let w = geom.wrench(&cmd);
        let expected = Vec6::new(0.0, 0.0, -6.0 * geom.thrust_coeff * omega * omega, 0.0, 0.0, 0.0);
        assert_relative_eq!(w, expected, epsilon = 1e-12);
    }

    #[test]
    fn single_rotor_columns_match_forward_formula() {
        let geom = ActuatorGeometry::default();
        let m = build_matrices(&geom).unwrap();
        for i in 0..ROTORS {
            let (omega, alpha) = (900.0, 0.37 - 0.2 * i as f64);
            let mut u = SubstitutedInput::zeros();
            let w2 = geom.thrust_coeff * omega * omega;
            u[2 * i] = w2 * alpha.sin();
            u[2 * i + 1] = w2 * alpha.cos();
            assert_relative_eq!(m.mc() * u, geom.rotor_wrench(i, omega, alpha), epsilon = 1e-10);
        }
    }

    #[test]
    fn eq18_arithmetic() {
        let (omega, alpha) = rotor_command(3.0, 4.0, 1.0);
        assert_relative_eq!(omega, 5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(alpha, 0.643_501_108_793_284_4, epsilon = 1e-15);
    }

    #[test]
    fn mismatched_arithmetic() {
        let mut geom = ActuatorGeometry::default();
        geom.thrust_coeff = 1.0;
        geom.omega_max = 1e9;
        let m = build_matrices(&geom).unwrap();
        // build a wrench whose U has (3, 4) on arm 0 and zeros elsewhere
        let mut u = SubstitutedInput::zeros();
        u[0] = 3.0;
        u[1] = 4.0;
        let w = m.mc() * u;
        let u_back = substituted_input(&w, &m);
        let exact = allocate_mismatched(&w, &m);
        let correct = allocate(&w, &m);
        assert_relative_eq!(exact.command.omega[0], u_back[0].hypot(u_back[1]), epsilon = 1e-12);
        assert_relative_eq!(correct.command.omega[0], u_back[0].hypot(u_back[1]).sqrt(), epsilon = 1e-12);
        assert_eq!(exact.command.alpha, correct.command.alpha);
    }

    #[test]
    fn zero_wrench_gives_zero_command() {
        let m = mats();
        for a in [allocate(&Vec6::zeros(), &m), allocate_mismatched(&Vec6::zeros(), &m)] {
            assert_eq!(a.command.omega, [0.0; ROTORS]);
            assert_eq!(a.command.alpha, [0.0; ROTORS]);
            assert!(!a.saturated);
        }
        assert_eq!(rotor_thrust_vector(&Vec6::zeros(), &m), Vec6::zeros());
    }

    #[test]
    fn hover_allocation_is_symmetric() {
        let m = mats();
        let a = allocate(&hover(), &m);
        for i in 0..ROTORS {
            assert!(a.command.alpha[i].abs() < 1e-9);
            assert_relative_eq!(a.command.omega[i], a.command.omega[0], epsilon = 1e-9);
        }
        // least-squares oracle: equal thrust mg/6 per rotor
        let mu = m.geometry().thrust_coeff;
        assert_relative_eq!(a.command.omega[0], (4.0 * 9.81 / 6.0 / mu).sqrt(), epsilon = 1e-9);
        let f = rotor_thrust_vector(&hover(), &m);
        for j in 0..ROTORS {
            assert_relative_eq!(f[j], f[0], epsilon = 1e-9);
        }
        assert_relative_eq!(f[0], (4.0 * 9.81 / 6.0f64).powi(2), epsilon = 1e-9);
    }

    #[test]
    fn pseudo_inverse_is_right_inverse() {
        let m = mats();
        let prod = m.mc() * m.mc_pinv();
        assert_relative_eq!(prod, SMatrix::<f64, 6, 6>::identity(), epsilon = 1e-9);
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let mut geom = ActuatorGeometry::default();
        geom.azimuths = [0.0; ROTORS];
        assert!(matches!(build_matrices(&geom), Err(Error::DegenerateGeometry { .. })));
        let bad = ActuatorGeometry { thrust_coeff: 0.0, ..ActuatorGeometry::default() };
        assert!(build_matrices(&bad).is_err());
    }

    #[test]
    fn rebuilt_matrices_follow_geometry() {
        let a = mats();
        let geom = ActuatorGeometry { arm_length: 0.4, ..ActuatorGeometry::default() };
        let b = build_matrices(&geom).unwrap();
        assert_ne!(a.mc(), b.mc());
        assert_ne!(a.mc_pinv(), b.mc_pinv());
    }

    #[test]
    fn saturation_is_flagged_and_clamped() {
        let m = mats();
        let a = allocate(&(hover() * 20.0), &m);
        assert!(a.saturated);
        assert!(a.command.omega.iter().all(|w| *w <= m.geometry().omega_max));
    }

    #[test]
    fn yaw_mirror_symmetry_of_thrust_vector() {
        // reflecting through the vertical plane at 30° maps arm i to arm
        // (1 − i) mod 6 and reverses every spin; forces reflect with S, torques
        // (pseudovectors) with −S, which flips the yaw torque
        let m = mats();
        let phi = PI / 6.0;
        let n = Vec3::new(-phi.sin(), phi.cos(), 0.0);
        let s = crate::math::Mat3::identity() - 2.0 * n * n.transpose();
        let w = Vec6::new(1.5, 2.0, -38.0, 0.3, -0.2, 0.15);
        let (f, t) = crate::math::split6(&w);
        let mirrored = stack6(&(s * f), &(-(s * t)));
        assert_relative_eq!(mirrored[5], -w[5], epsilon = 1e-15);
        let fw = rotor_thrust_vector(&w, &m);
        let fm = rotor_thrust_vector(&mirrored, &m);
        for i in 0..ROTORS {
            assert_relative_eq!(fw[i], fm[(ROTORS + 1 - i) % ROTORS], epsilon = 1e-9);
        }
    }

    fn feasible_wrench() -> impl Strategy<Value = Vec6> {
        (
            -10.0..10.0f64,
            -10.0..10.0f64,
            -60.0..-20.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            -0.5..0.5f64,
        )
            .prop_map(|(a, b, c, d, e, f)| Vec6::new(a, b, c, d, e, f))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn random_commands_match_forward_model(
            omega in proptest::array::uniform6(0.0..1400.0f64),
            alpha in proptest::array::uniform6(-3.0..3.0f64),
        ) {
            let geom = ActuatorGeometry::default();
            let m = build_matrices(&geom).unwrap();
            let u = SubstitutedInput::from_fn(|r, _| {
                let i = r / 2;
                let w2 = geom.thrust_coeff * omega[i] * omega[i];
                if r % 2 == 0 { w2 * alpha[i].sin() } else { w2 * alpha[i].cos() }
            });
            let direct = geom.wrench(&ActuatorCommand { omega, alpha });
            prop_assert!((m.mc() * u - direct).norm() < 1e-10);
        }

        #[test]
        fn allocation_round_trip(w in feasible_wrench()) {
            let m = mats();
            let a = allocate(&w, &m);
            prop_assert!(!a.saturated);
            let back = m.geometry().wrench(&a.command);
            prop_assert!((back - w).norm() <= 1e-6 * w.norm());
        }

        #[test]
        fn thrust_vector_is_homogeneous(w in feasible_wrench(), c in 0.1..5.0f64) {
            let m = mats();
            let f = rotor_thrust_vector(&w, &m);
            let fc = rotor_thrust_vector(&(c * w), &m);
            prop_assert!((fc - c * c * f).norm() <= 1e-9 * fc.norm().max(1.0));
        }
    }
}
