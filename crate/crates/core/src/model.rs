//! Rigid-body vehicle model, the perturbed "true plant" variants and the
//! fixed-step RK4 integrator.
//!
//! The state carries the actuator wrench alongside the kinematic states, so
//! the same [`VehicleState`] serves as the 19-component optimal-control state
//! (`[p, q, v, ω, f_a, τ_a]`) and as the plant state (where the wrench is
//! simply held constant between control updates).

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{rotate, skew, split6, stack6, Mat3, Quat, Vec3, Vec6};

/// Dimension of the stacked state vector.
pub const STATE_DIM: usize = 19;
pub type StateVector = SVector<f64, STATE_DIM>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub mass: f64,
    pub inertia: Mat3,
    inertia_inv: Mat3,
    /// Center-of-mass offset in the body frame.
    pub com_offset: Vec3,
    /// Gravity in the NED world frame.
    pub gravity: Vec3,
}

impl VehicleParams {
    pub fn new(mass: f64, inertia: Mat3, com_offset: Vec3, gravity: Vec3) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParams(format!("mass must be positive, got {mass}")));
        }
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * inertia.abs().max() {
            return Err(Error::InvalidParams("inertia must be symmetric".into()));
        }
        let chol = inertia
            .cholesky()
            .ok_or_else(|| Error::InvalidParams("inertia must be positive definite".into()))?;
        if !com_offset.iter().chain(gravity.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("non-finite com offset or gravity".into()));
        }
        Ok(Self { mass, inertia, inertia_inv: chol.inverse(), com_offset, gravity })
    }

    /// Hexacopter-class defaults: 4 kg, diag(0.08, 0.08, 0.14) kg·m², no com offset.
    pub fn nominal() -> Self {
        Self::new(
            4.0,
            Mat3::from_diagonal(&Vec3::new(0.08, 0.08, 0.14)),
            Vec3::zeros(),
            Vec3::new(0.0, 0.0, 9.81),
        )
        .expect("nominal parameters are valid")
    }

    pub fn inertia_inv(&self) -> &Mat3 {
        &self.inertia_inv
    }

    /// Fails when the center of mass lies outside the rotor arms.
    pub fn check_com_within(&self, arm_length: f64) -> Result<()> {
        if self.com_offset.norm() >= arm_length {
            return Err(Error::InvalidParams(format!(
                "|d_com| = {} must be smaller than the arm length {arm_length}",
                self.com_offset.norm()
            )));
        }
        Ok(())
    }

    /// Parameters with a perturbation's mass, inertia and com deltas applied.
    pub fn perturbed(&self, pert: &PlantPerturbation) -> Result<Self> {
        Self::new(
            self.mass + pert.mass_delta,
            self.inertia * pert.inertia_scale,
            self.com_offset + pert.com_shift,
            self.gravity,
        )
    }

    /// Body wrench that holds the vehicle still at attitude `q`.
    pub fn hover_wrench(&self, q: &Quat) -> Vec6 {
        let f = rotate(&(-self.mass * self.gravity), &q.inverse());
        stack6(&f, &self.com_offset.cross(&f))
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self::nominal()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    /// Position, world NED.
    pub p: Vec3,
    pub q: Quat,
    /// Linear velocity, world frame.
    pub v: Vec3,
    /// Angular velocity, body FRD.
    pub omega: Vec3,
    /// Actuator force, body frame.
    pub force: Vec3,
    /// Actuator torque, body frame.
    pub torque: Vec3,
}

impl VehicleState {
    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.p);
        x.fixed_rows_mut::<4>(3).copy_from(&self.q.to_vector());
        x.fixed_rows_mut::<3>(7).copy_from(&self.v);
        x.fixed_rows_mut::<3>(10).copy_from(&self.omega);
        x.fixed_rows_mut::<3>(13).copy_from(&self.force);
        x.fixed_rows_mut::<3>(16).copy_from(&self.torque);
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            p: x.fixed_rows::<3>(0).into_owned(),
            q: Quat::from_vector(&x.fixed_rows::<4>(3).into_owned()),
            v: x.fixed_rows::<3>(7).into_owned(),
            omega: x.fixed_rows::<3>(10).into_owned(),
            force: x.fixed_rows::<3>(13).into_owned(),
            torque: x.fixed_rows::<3>(16).into_owned(),
        }
    }

    pub fn wrench(&self) -> Vec6 {
        stack6(&self.force, &self.torque)
    }

    pub fn with_wrench(mut self, wrench: &Vec6) -> Self {
        (self.force, self.torque) = split6(wrench);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Time derivative of the actuator wrench (the optimal-control input).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WrenchRate {
    pub force_rate: Vec3,
    pub torque_rate: Vec3,
}

impl WrenchRate {
    pub const ZERO: WrenchRate = WrenchRate {
        force_rate: Vec3::new(0.0, 0.0, 0.0),
        torque_rate: Vec3::new(0.0, 0.0, 0.0),
    };

    pub fn from_vector(u: &Vec6) -> Self {
        let (force_rate, torque_rate) = split6(u);
        Self { force_rate, torque_rate }
    }

    pub fn to_vector(&self) -> Vec6 {
        stack6(&self.force_rate, &self.torque_rate)
    }
}

/// Time derivative of a [`VehicleState`], same layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub p_dot: Vec3,
    pub q_dot: Quat,
    pub v_dot: Vec3,
    pub omega_dot: Vec3,
    pub force_dot: Vec3,
    pub torque_dot: Vec3,
}

impl StateDerivative {
    pub fn to_vector(&self) -> StateVector {
        VehicleState {
            p: self.p_dot,
            q: self.q_dot,
            v: self.v_dot,
            omega: self.omega_dot,
            force: self.force_dot,
            torque: self.torque_dot,
        }
        .to_vector()
    }
}

/// Experiment plant groups of increasing model mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
    C,
    D,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::A, Group::B, Group::C, Group::D];
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Group::A),
            "B" => Ok(Group::B),
            "C" => Ok(Group::C),
            "D" => Ok(Group::D),
            other => Err(Error::InvalidConfig(format!("unknown group {other:?}"))),
        }
    }
}

/// Difference between the nominal model and the simulated plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantPerturbation {
    pub mass_delta: f64,
    pub inertia_scale: f64,
    pub com_shift: Vec3,
    /// Nonlinear wrench distortion `0.95(f + sin f)`, `0.9(τ + sin τ)`.
    pub wrench_distortion: bool,
    /// Plant-side rotor-speed extraction with exponent ½ instead of ¼.
    pub allocation_mismatch: bool,
}

impl PlantPerturbation {
    pub const NONE: PlantPerturbation = PlantPerturbation {
        mass_delta: 0.0,
        inertia_scale: 1.0,
        com_shift: Vec3::new(0.0, 0.0, 0.0),
        wrench_distortion: false,
        allocation_mismatch: false,
    };

    /// Default center-of-mass shift for groups B–D: `[1, 1, 1]` cm, norm √3 cm.
    pub fn default_com_shift() -> Vec3 {
        Vec3::new(0.01, 0.01, 0.01)
    }

    pub fn for_group(group: Group, com_shift: Vec3) -> Self {
        match group {
            Group::A => Self::NONE,
            Group::B => Self {
                mass_delta: -0.5,
                inertia_scale: 0.5,
                com_shift,
                ..Self::NONE
            },
            Group::C => Self { mass_delta: 0.5, inertia_scale: 2.0, com_shift, ..Self::NONE },
            Group::D => Self {
                wrench_distortion: true,
                ..Self::for_group(Group::C, com_shift)
            },
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::NONE
    }
}

impl Default for PlantPerturbation {
    fn default() -> Self {
        Self::NONE
    }
}

/// `½ q ⊗ [0, ω]`.
pub fn quaternion_rate(q: &Quat, omega: &Vec3) -> Quat {
    let d = *q * Quat::pure(omega);
    Quat::new(0.5 * d.w, 0.5 * d.x, 0.5 * d.y, 0.5 * d.z)
}

/// Rigid-body dynamics driven by a body wrench `(force, torque)` that is not
/// necessarily the one stored in the state.
pub(crate) fn rigid_body_rates(
    x: &VehicleState,
    force: &Vec3,
    torque: &Vec3,
    params: &VehicleParams,
) -> (Vec3, Vec3) {
    let v_dot = params.gravity + rotate(force, &x.q) / params.mass;
    let j_omega = params.inertia * x.omega;
    let omega_dot = params.inertia_inv()
        * (torque - params.com_offset.cross(force) - x.omega.cross(&j_omega));
    (v_dot, omega_dot)
}

/// Nominal 19-state dynamics with an additive body wrench (zero for the
/// plain nominal model, an estimated disturbance for the EKF variant).
pub fn dynamics_with_disturbance(
    x: &VehicleState,
    u: &WrenchRate,
    params: &VehicleParams,
    disturbance: &Vec6,
) -> StateDerivative {
    let (df, dt) = split6(disturbance);
    let (v_dot, omega_dot) = rigid_body_rates(x, &(x.force + df), &(x.torque + dt), params);
    StateDerivative {
        p_dot: x.v,
        q_dot: quaternion_rate(&x.q, &x.omega),
        v_dot,
        omega_dot,
        force_dot: u.force_rate,
        torque_dot: u.torque_rate,
    }
}

/// Nominal model: `[v; ½q⊗[0,ω]; g + R f/m; J⁻¹(τ − d×f − ω×Jω); ḟ; τ̇]`.
pub fn dynamics_nominal(x: &VehicleState, u: &WrenchRate, params: &VehicleParams) -> StateDerivative {
    let (v_dot, omega_dot) = rigid_body_rates(x, &x.force, &x.torque, params);
    StateDerivative {
        p_dot: x.v,
        q_dot: quaternion_rate(&x.q, &x.omega),
        v_dot,
        omega_dot,
        force_dot: u.force_rate,
        torque_dot: u.torque_rate,
    }
}

/// The simulated "true" plant. `nominal` is the controller's model; the
/// perturbation is applied on top of it.
pub fn dynamics_plant(
    x: &VehicleState,
    u: &WrenchRate,
    nominal: &VehicleParams,
    pert: &PlantPerturbation,
) -> StateDerivative {
    if pert.is_identity() {
        return dynamics_nominal(x, u, nominal);
    }
    // validated when the experiment is configured
    let params = nominal.perturbed(pert).expect("perturbed parameters must stay valid");
    plant_with_params(x, u, &params, pert.wrench_distortion)
}

/// Plant dynamics for already-perturbed parameters.
pub fn plant_with_params(
    x: &VehicleState,
    u: &WrenchRate,
    params: &VehicleParams,
    wrench_distortion: bool,
) -> StateDerivative {
    if !wrench_distortion {
        return dynamics_nominal(x, u, params);
    }
    let f = x.force;
    let tau = x.torque;
    let f_eff = 0.95 * (f + f.map(f64::sin));
    let v_dot = params.gravity + rotate(&f_eff, &x.q) / params.mass;
    let big_t = 0.9 * (tau + tau.map(f64::sin))
        - 0.95 * params.com_offset.cross(&f)
        - x.omega.cross(&(params.inertia * x.omega));
    StateDerivative {
        p_dot: x.v,
        q_dot: quaternion_rate(&x.q, &x.omega),
        v_dot,
        omega_dot: params.inertia_inv() * big_t,
        force_dot: u.force_rate,
        torque_dot: u.torque_rate,
    }
}

fn axpy(x: &VehicleState, h: f64, k: &StateDerivative) -> VehicleState {
    VehicleState {
        p: x.p + h * k.p_dot,
        q: Quat::new(
            x.q.w + h * k.q_dot.w,
            x.q.x + h * k.q_dot.x,
            x.q.y + h * k.q_dot.y,
            x.q.z + h * k.q_dot.z,
        ),
        v: x.v + h * k.v_dot,
        omega: x.omega + h * k.omega_dot,
        force: x.force + h * k.force_dot,
        torque: x.torque + h * k.torque_dot,
    }
}

/// Classical RK4 step with the input held over the step. The attitude
/// quaternion is normalized afterwards.
pub fn rk4_step<F>(x: &VehicleState, u: &WrenchRate, dt: f64, deriv: F) -> VehicleState
where
    F: Fn(&VehicleState, &WrenchRate) -> StateDerivative,
{
    debug_assert!(dt > 0.0);
    let k1 = deriv(x, u);
    let k2 = deriv(&axpy(x, 0.5 * dt, &k1), u);
    let k3 = deriv(&axpy(x, 0.5 * dt, &k2), u);
    let k4 = deriv(&axpy(x, dt, &k3), u);
    let sum = k1.to_vector() + 2.0 * k2.to_vector() + 2.0 * k3.to_vector() + k4.to_vector();
    let mut next = VehicleState::from_vector(&(x.to_vector() + (dt / 6.0) * sum));
    next.q = next.q.normalized();
    next
}

/// Standard product form of `J⁻¹(τ − d×f − ω×Jω)` for the skew convention,
/// used to cross-check the Jacobians.
pub fn angular_acceleration(
    omega: &Vec3,
    force: &Vec3,
    torque: &Vec3,
    params: &VehicleParams,
) -> Vec3 {
    params.inertia_inv()
        * (torque - skew(&params.com_offset) * force - skew(omega) * (params.inertia * omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn hover_state(params: &VehicleParams) -> VehicleState {
        VehicleState {
            force: Vec3::new(0.0, 0.0, -params.mass * 9.81),
            ..Default::default()
        }
    }

    fn random_state(seed: &[f64; 19]) -> VehicleState {
        let mut x = VehicleState::from_vector(&StateVector::from_column_slice(seed));
        x.q = x.q.normalized();
        x
    }

    #[test]
    fn hover_is_equilibrium() {
        let params = VehicleParams::nominal();
        let d = dynamics_nominal(&hover_state(&params), &WrenchRate::ZERO, &params);
        assert_relative_eq!(d.to_vector(), StateVector::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn euler_equation_reduction() {
        let params = VehicleParams::nominal();
        let x = VehicleState { torque: Vec3::new(0.1, 0.0, 0.0), ..Default::default() };
        let d = dynamics_nominal(&x, &WrenchRate::ZERO, &params);
        assert_relative_eq!(d.omega_dot, params.inertia_inv() * Vec3::new(0.1, 0.0, 0.0));
        assert_relative_eq!(d.omega_dot.x, 1.25, epsilon = 1e-12);
    }

    #[test]
    fn gyroscopic_term_matches_cross_product_oracle() {
        let params = VehicleParams::new(
            3.0,
            Mat3::new(0.1, 0.01, 0.0, 0.01, 0.2, 0.02, 0.0, 0.02, 0.3),
            Vec3::zeros(),
            Vec3::new(0.0, 0.0, 9.81),
        )
        .unwrap();
        let x = VehicleState { omega: Vec3::new(1.3, -0.7, 2.1), ..Default::default() };
        let d = dynamics_nominal(&x, &WrenchRate::ZERO, &params);
        // term by term: L = Jω, ω×L by components
        let (w, j) = (x.omega, params.inertia);
        let l = Vec3::new(
            j[(0, 0)] * w.x + j[(0, 1)] * w.y + j[(0, 2)] * w.z,
            j[(1, 0)] * w.x + j[(1, 1)] * w.y + j[(1, 2)] * w.z,
            j[(2, 0)] * w.x + j[(2, 1)] * w.y + j[(2, 2)] * w.z,
        );
        let cross = Vec3::new(w.y * l.z - w.z * l.y, w.z * l.x - w.x * l.z, w.x * l.y - w.y * l.x);
        let expected = -(j.try_inverse().unwrap() * cross);
        assert_relative_eq!(d.omega_dot, expected, epsilon = 1e-12);
    }

    #[test]
    fn quaternion_row_matches_kinematics() {
        let params = VehicleParams::nominal();
        let x = VehicleState {
            q: Quat::new(0.9, 0.1, -0.3, 0.2).normalized(),
            omega: Vec3::new(0.4, -1.0, 0.25),
            ..Default::default()
        };
        let d = dynamics_nominal(&x, &WrenchRate::ZERO, &params);
        let expected = 0.5 * x.q.left_matrix() * Quat::pure(&x.omega).to_vector();
        assert_relative_eq!(d.q_dot.to_vector(), expected, epsilon = 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        let j = Mat3::identity();
        let g = Vec3::new(0.0, 0.0, 9.81);
        assert!(VehicleParams::new(0.0, j, Vec3::zeros(), g).is_err());
        assert!(VehicleParams::new(1.0, -j, Vec3::zeros(), g).is_err());
        let asym = Mat3::new(1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(VehicleParams::new(1.0, asym, Vec3::zeros(), g).is_err());
        let p = VehicleParams::new(1.0, j, Vec3::new(0.5, 0.0, 0.0), g).unwrap();
        assert!(p.check_com_within(0.3).is_err());
        assert!(p.check_com_within(0.6).is_ok());
    }

    #[test]
    fn group_parameter_deltas() {
        let s = PlantPerturbation::default_com_shift();
        assert_relative_eq!(s.norm(), 3f64.sqrt() * 0.01, epsilon = 1e-15);
        let b = PlantPerturbation::for_group(Group::B, s);
        assert_eq!((b.mass_delta, b.inertia_scale, b.wrench_distortion), (-0.5, 0.5, false));
        let c = PlantPerturbation::for_group(Group::C, s);
        assert_eq!((c.mass_delta, c.inertia_scale, c.wrench_distortion), (0.5, 2.0, false));
        let d = PlantPerturbation::for_group(Group::D, s);
        assert_eq!((d.mass_delta, d.inertia_scale, d.wrench_distortion), (0.5, 2.0, true));
        assert_eq!(d.com_shift, s);
        assert!(PlantPerturbation::for_group(Group::A, s).is_identity());
    }

    #[test]
    fn group_d_zero_wrench_is_free_fall() {
        let params = VehicleParams::nominal();
        let pert = PlantPerturbation::for_group(Group::D, PlantPerturbation::default_com_shift());
        let d = dynamics_plant(&VehicleState::default(), &WrenchRate::ZERO, &params, &pert);
        assert_eq!(d.v_dot, params.gravity);
        assert_eq!(d.omega_dot, Vec3::zeros());
    }

    #[test]
    fn group_d_vertical_distortion() {
        let params = VehicleParams::nominal();
        let pert = PlantPerturbation::for_group(Group::D, PlantPerturbation::default_com_shift());
        let x = VehicleState { force: Vec3::new(0.0, 0.0, -40.0), ..Default::default() };
        let d = dynamics_plant(&x, &WrenchRate::ZERO, &params, &pert);
        let m_pert = 4.5;
        let expected = 9.81 + 0.95 * (-40.0 + (-40.0f64).sin()) / m_pert;
        assert_relative_eq!(d.v_dot.z, expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 9.81 - 8.601746111656752, epsilon = 1e-12);
    }

    #[test]
    fn rk4_zero_derivative_is_identity() {
        let x = random_state(&[
            1.0, 2.0, 3.0, 0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0,
            5.0, 6.0,
        ]);
        let zero = |_: &VehicleState, _: &WrenchRate| StateDerivative {
            p_dot: Vec3::zeros(),
            q_dot: Quat::new(0.0, 0.0, 0.0, 0.0),
            v_dot: Vec3::zeros(),
            omega_dot: Vec3::zeros(),
            force_dot: Vec3::zeros(),
            torque_dot: Vec3::zeros(),
        };
        assert_eq!(rk4_step(&x, &WrenchRate::ZERO, 0.01, zero), x);
    }

    #[test]
    fn rk4_exact_under_constant_acceleration() {
        let params = VehicleParams::nominal();
        let x = VehicleState {
            v: Vec3::new(1.0, -2.0, 0.5),
            force: Vec3::new(2.0, 0.0, -10.0),
            ..Default::default()
        };
        let dt = 0.01;
        let a = params.gravity + x.force / params.mass;
        let next = rk4_step(&x, &WrenchRate::ZERO, dt, |s, u| dynamics_nominal(s, u, &params));
        assert_relative_eq!(next.p, x.v * dt + 0.5 * a * dt * dt, epsilon = 1e-15);
        assert_relative_eq!(next.v, x.v + a * dt, epsilon = 1e-15);
    }

    #[test]
    fn rk4_torque_free_energy_conservation() {
        let params = VehicleParams::new(
            1.0,
            Mat3::from_diagonal(&Vec3::new(0.05, 0.08, 0.14)),
            Vec3::zeros(),
            Vec3::zeros(),
        )
        .unwrap();
        let mut x = VehicleState { omega: Vec3::new(1.0, 0.2, -0.5), ..Default::default() };
        let energy = |s: &VehicleState| 0.5 * s.omega.dot(&(params.inertia * s.omega));
        let e0 = energy(&x);
        for _ in 0..10_000 {
            x = rk4_step(&x, &WrenchRate::ZERO, 1e-3, |s, u| dynamics_nominal(s, u, &params));
        }
        assert!(((energy(&x) - e0) / e0).abs() < 1e-6);
    }

    #[test]
    fn hover_wrench_holds_still() {
        let params = VehicleParams::new(
            4.0,
            Mat3::from_diagonal(&Vec3::new(0.08, 0.08, 0.14)),
            Vec3::new(0.01, -0.02, 0.005),
            Vec3::new(0.0, 0.0, 9.81),
        )
        .unwrap();
        let q = Quat::from_euler_zyx(0.4, -0.2, 1.0);
        let x = VehicleState { q, ..Default::default() }.with_wrench(&params.hover_wrench(&q));
        let d = dynamics_nominal(&x, &WrenchRate::ZERO, &params);
        assert_relative_eq!(d.v_dot, Vec3::zeros(), epsilon = 1e-12);
        assert_relative_eq!(d.omega_dot, Vec3::zeros(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn group_a_is_bitwise_nominal(vals in proptest::collection::vec(-5.0..5.0f64, 25)) {
            let params = VehicleParams::nominal();
            let x = random_state(vals[..19].try_into().unwrap());
            let u = WrenchRate::from_vector(&Vec6::from_column_slice(&vals[19..]));
            let pert = PlantPerturbation::for_group(Group::A, PlantPerturbation::default_com_shift());
            prop_assert_eq!(
                dynamics_plant(&x, &u, &params, &pert),
                dynamics_nominal(&x, &u, &params)
            );
        }

        #[test]
        fn angular_acceleration_forms_agree(vals in proptest::collection::vec(-5.0..5.0f64, 12)) {
            let params = VehicleParams::new(
                4.0,
                Mat3::from_diagonal(&Vec3::new(0.08, 0.09, 0.14)),
                Vec3::new(0.01, 0.02, -0.01),
                Vec3::new(0.0, 0.0, 9.81),
            ).unwrap();
            let mut x = VehicleState::default();
            x.omega = Vec3::from_column_slice(&vals[0..3]);
            x.force = Vec3::from_column_slice(&vals[3..6]);
            x.torque = Vec3::from_column_slice(&vals[6..9]);
            let d = dynamics_nominal(&x, &WrenchRate::ZERO, &params);
            let oracle = angular_acceleration(&x.omega, &x.force, &x.torque, &params);
            prop_assert!((d.omega_dot - oracle).norm() < 1e-10);
        }

        #[test]
        fn quaternion_norm_after_rk4(vals in proptest::collection::vec(-3.0..3.0f64, 25)) {
            let params = VehicleParams::nominal();
            let x = random_state(vals[..19].try_into().unwrap());
            let u = WrenchRate::from_vector(&Vec6::from_column_slice(&vals[19..]));
            let next = rk4_step(&x, &u, 0.01, |s, u| dynamics_nominal(s, u, &params));
            prop_assert!((next.q.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn linear_momentum_constant_without_forces(vals in proptest::collection::vec(-3.0..3.0f64, 19)) {
            let params = VehicleParams::new(
                2.0, Mat3::identity() * 0.1, Vec3::zeros(), Vec3::zeros()).unwrap();
            let mut x = random_state(vals[..19].try_into().unwrap());
            x.force = Vec3::zeros();
            let next = rk4_step(&x, &WrenchRate::ZERO, 0.01, |s, u| dynamics_nominal(s, u, &params));
            prop_assert!((params.mass * (next.v - x.v)).norm() < 1e-12);
        }
    }
}
