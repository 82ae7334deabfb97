//! Disturbance-wrench EKF and the estimate-augmented OCP.
//!
//! The filter carries position, attitude, velocity and body rate together
//! with a body-frame disturbance force and torque. The attitude enters the
//! covariance through a 3-dimensional rotation-vector error
//! `q = q̂ ⊗ exp(δθ/2)`, giving an 18-dimensional error state
//! `[δp, δθ, δv, δω, δf, δτ]`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{skew, stack6, Mat3, Quat, Vec3, Vec6};
use crate::model::{quaternion_rate, rigid_body_rates, VehicleParams, VehicleState};
use crate::nmpc::{
    solve_ocp, ConstraintSet, OcpModel, OcpSolution, OcpWeights, ReferenceWindow, SolverConfig, Trajectory,
};

pub const ERROR_STATE_DIM: usize = 18;
pub type Covariance = SMatrix<f64, ERROR_STATE_DIM, ERROR_STATE_DIM>;
type ErrorState = SVector<f64, ERROR_STATE_DIM>;
type Innovation = SVector<f64, 12>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EkfConfig {
    /// Observation standard deviations: position (m), attitude (rad),
    /// velocity (m/s), body rate (rad/s).
    pub obs_position: f64,
    pub obs_attitude: f64,
    pub obs_velocity: f64,
    pub obs_rate: f64,
    /// Continuous process-noise densities (per √s) for each error block.
    pub proc_position: f64,
    pub proc_attitude: f64,
    pub proc_velocity: f64,
    pub proc_rate: f64,
    pub proc_force: f64,
    pub proc_torque: f64,
    /// Initial standard deviation of the disturbance estimates.
    pub init_force: f64,
    pub init_torque: f64,
    /// Prediction step between measurement updates (s).
    pub update_period: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            obs_position: 0.01,
            obs_attitude: 0.5_f64.to_radians(),
            obs_velocity: 0.02,
            obs_rate: 0.01,
            proc_position: 1e-3,
            proc_attitude: 1e-3,
            proc_velocity: 0.1,
            proc_rate: 0.1,
            proc_force: 1.0,
            proc_torque: 0.1,
            init_force: 10.0,
            init_torque: 1.0,
            update_period: 0.01,
        }
    }
}

impl EkfConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.obs_position,
            self.obs_attitude,
            self.obs_velocity,
            self.obs_rate,
            self.proc_position,
            self.proc_attitude,
            self.proc_velocity,
            self.proc_rate,
            self.proc_force,
            self.proc_torque,
            self.init_force,
            self.init_torque,
        ];
        if all.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig("EKF standard deviations must be finite and non-negative".into()));
        }
        if !(self.update_period > 0.0) {
            return Err(Error::InvalidConfig("EKF update period must be positive".into()));
        }
        Ok(())
    }

    fn process_density(&self) -> ErrorState {
        let blocks = [
            self.proc_position,
            self.proc_attitude,
            self.proc_velocity,
            self.proc_rate,
            self.proc_force,
            self.proc_torque,
        ];
        ErrorState::from_fn(|i, _| blocks[i / 3].powi(2))
    }

    fn observation_variance(&self) -> Innovation {
        let blocks = [self.obs_position, self.obs_attitude, self.obs_velocity, self.obs_rate];
        Innovation::from_fn(|i, _| blocks[i / 3].powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfState {
    pub p: Vec3,
    pub q: Quat,
    pub v: Vec3,
    pub omega: Vec3,
    /// Disturbance force, body frame.
    pub force: Vec3,
    /// Disturbance torque, body frame.
    pub torque: Vec3,
    pub covariance: Covariance,
}

impl EkfState {
    /// Starts at the measured kinematics with zero disturbance estimate.
    pub fn new(x: &VehicleState, cfg: &EkfConfig) -> Self {
        let blocks = [
            cfg.obs_position,
            cfg.obs_attitude,
            cfg.obs_velocity,
            cfg.obs_rate,
            cfg.init_force,
            cfg.init_torque,
        ];
        Self {
            p: x.p,
            q: x.q,
            v: x.v,
            omega: x.omega,
            force: Vec3::zeros(),
            torque: Vec3::zeros(),
            covariance: Covariance::from_diagonal(&ErrorState::from_fn(|i, _| blocks[i / 3].powi(2))),
        }
    }

    pub fn disturbance(&self) -> Vec6 {
        stack6(&self.force, &self.torque)
    }

    fn as_vehicle(&self, wrench: &Vec6) -> VehicleState {
        VehicleState {
            p: self.p,
            q: self.q,
            v: self.v,
            omega: self.omega,
            force: wrench.fixed_rows::<3>(0).into_owned(),
            torque: wrench.fixed_rows::<3>(3).into_owned(),
        }
    }
}

/// Kinematic part of an observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub p: Vec3,
    pub q: Quat,
    pub v: Vec3,
    pub omega: Vec3,
}

impl From<&VehicleState> for Observation {
    fn from(x: &VehicleState) -> Self {
        Self { p: x.p, q: x.q, v: x.v, omega: x.omega }
    }
}

struct Rates {
    p: Vec3,
    q: Quat,
    v: Vec3,
    omega: Vec3,
    force: Vec3,
}

fn nominal_rates(s: &EkfState, wrench: &Vec6, params: &VehicleParams) -> Rates {
    let x = s.as_vehicle(wrench);
    let (v_dot, omega_dot) = rigid_body_rates(&x, &(x.force + s.force), &(x.torque + s.torque), params);
    Rates {
        p: s.v,
        q: quaternion_rate(&s.q, &s.omega),
        v: v_dot,
        omega: omega_dot,
        force: -s.omega.cross(&s.force),
    }
}

fn advance(s: &EkfState, k: &Rates, h: f64) -> EkfState {
    EkfState {
        p: s.p + h * k.p,
        q: Quat::new(s.q.w + h * k.q.w, s.q.x + h * k.q.x, s.q.y + h * k.q.y, s.q.z + h * k.q.z),
        v: s.v + h * k.v,
        omega: s.omega + h * k.omega,
        force: s.force + h * k.force,
        torque: s.torque,
        covariance: s.covariance,
    }
}

/// Continuous error-state Jacobian at the current estimate.
pub fn error_jacobian(s: &EkfState, wrench: &Vec6, params: &VehicleParams) -> Covariance {
    let f_total = wrench.fixed_rows::<3>(0).into_owned() + s.force;
    let r = s.q.to_rotation_matrix();
    let jinv = params.inertia_inv();
    let j = params.inertia;
    let id = Mat3::identity();
    let mut f = Covariance::zeros();
    f.fixed_view_mut::<3, 3>(0, 6).copy_from(&id);
    f.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-skew(&s.omega)));
    f.fixed_view_mut::<3, 3>(3, 9).copy_from(&id);
    f.fixed_view_mut::<3, 3>(6, 3).copy_from(&(-r * skew(&f_total) / params.mass));
    f.fixed_view_mut::<3, 3>(6, 12).copy_from(&(r / params.mass));
    f.fixed_view_mut::<3, 3>(9, 9)
        .copy_from(&(-jinv * (skew(&s.omega) * j - skew(&(j * s.omega)))));
    f.fixed_view_mut::<3, 3>(9, 12).copy_from(&(-jinv * skew(&params.com_offset)));
    f.fixed_view_mut::<3, 3>(9, 15).copy_from(jinv);
    f.fixed_view_mut::<3, 3>(12, 9).copy_from(&skew(&s.force));
    f.fixed_view_mut::<3, 3>(12, 12).copy_from(&(-skew(&s.omega)));
    f
}

/// Propagates the estimate over `dt` under the applied actuator wrench
/// `[f_a; τ_a]` with one RK4 step and `Φ = exp(F dt)`.
pub fn ekf_predict(s: &EkfState, wrench: &Vec6, cfg: &EkfConfig, params: &VehicleParams, dt: f64) -> EkfState {
    let phi = (error_jacobian(s, wrench, params) * dt).exp();
    let qd = Covariance::from_diagonal(&(cfg.process_density() * dt));

    let k1 = nominal_rates(s, wrench, params);
    let k2 = nominal_rates(&advance(s, &k1, 0.5 * dt), wrench, params);
    let k3 = nominal_rates(&advance(s, &k2, 0.5 * dt), wrench, params);
    let k4 = nominal_rates(&advance(s, &k3, dt), wrench, params);
    let w = dt / 6.0;
    let comb = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| w * (a + 2.0 * b + 2.0 * c + d);
    let q = Quat::from_vector(
        &(s.q.to_vector()
            + w * (k1.q.to_vector() + 2.0 * k2.q.to_vector() + 2.0 * k3.q.to_vector() + k4.q.to_vector())),
    )
    .normalized();
    let p = phi * s.covariance * phi.transpose() + qd;
    EkfState {
        p: s.p + comb(k1.p, k2.p, k3.p, k4.p),
        q,
        v: s.v + comb(k1.v, k2.v, k3.v, k4.v),
        omega: s.omega + comb(k1.omega, k2.omega, k3.omega, k4.omega),
        force: s.force + comb(k1.force, k2.force, k3.force, k4.force),
        torque: s.torque,
        covariance: 0.5 * (p + p.transpose()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStatus {
    Applied,
    /// The innovation or gain was not finite; the estimate is unchanged.
    Skipped,
}

/// Measurement update with the kinematic states observed directly.
pub fn ekf_update(s: &EkfState, z: &Observation, cfg: &EkfConfig) -> (EkfState, UpdateStatus) {
    let mut y = Innovation::zeros();
    y.fixed_rows_mut::<3>(0).copy_from(&(z.p - s.p));
    let dq = (s.q.inverse() * z.q).canonical();
    y.fixed_rows_mut::<3>(3).copy_from(&(2.0 * dq.vector_part()));
    y.fixed_rows_mut::<3>(6).copy_from(&(z.v - s.v));
    y.fixed_rows_mut::<3>(9).copy_from(&(z.omega - s.omega));
    if y.iter().any(|v| !v.is_finite()) {
        return (*s, UpdateStatus::Skipped);
    }

    let p = &s.covariance;
    let r = SMatrix::<f64, 12, 12>::from_diagonal(&cfg.observation_variance());
    let pht = p.fixed_columns::<12>(0).into_owned();
    let innov_cov = pht.fixed_rows::<12>(0).into_owned() + r;
    let Some(chol) = innov_cov.cholesky() else {
        return (*s, UpdateStatus::Skipped);
    };
    let gain = chol.solve(&pht.transpose()).transpose();
    let dx = gain * y;
    if dx.iter().any(|v| !v.is_finite()) {
        return (*s, UpdateStatus::Skipped);
    }

    let mut ikh = Covariance::identity();
    ikh.fixed_columns_mut::<12>(0).zip_apply(&gain, |a, k| *a -= k);
    let joseph = ikh * p * ikh.transpose() + gain * r * gain.transpose();

    let block = |i: usize| dx.fixed_rows::<3>(3 * i).into_owned();
    let next = EkfState {
        p: s.p + block(0),
        q: (s.q * Quat::from_rotation_vector(&block(1))).normalized(),
        v: s.v + block(2),
        omega: s.omega + block(3),
        force: s.force + block(4),
        torque: s.torque + block(5),
        covariance: 0.5 * (joseph + joseph.transpose()),
    };
    (next, UpdateStatus::Applied)
}

/// Filter plus the model it runs on.
#[derive(Debug, Clone)]
pub struct DisturbanceEkf {
    pub config: EkfConfig,
    pub params: VehicleParams,
    pub state: EkfState,
}

impl DisturbanceEkf {
    pub fn new(config: EkfConfig, params: VehicleParams, x0: &VehicleState) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, params, state: EkfState::new(x0, &config) })
    }

    pub fn predict(&mut self, wrench: &Vec6) {
        self.state = ekf_predict(&self.state, wrench, &self.config, &self.params, self.config.update_period);
    }

    pub fn update(&mut self, z: &Observation) -> UpdateStatus {
        let (next, status) = ekf_update(&self.state, z, &self.config);
        self.state = next;
        status
    }
}

/// The OCP with the estimated wrench added to the actuator wrench in the
/// prediction model.
#[allow(clippy::too_many_arguments)]
pub fn solve_ocp_ekf(
    x0: &VehicleState,
    refs: &ReferenceWindow,
    f_ekf: &Vec3,
    tau_ekf: &Vec3,
    weights: &OcpWeights,
    constraints: &ConstraintSet,
    cfg: &SolverConfig,
    model: &OcpModel,
    guess: Option<&Trajectory>,
) -> Result<OcpSolution> {
    let mut m = model.clone();
    m.disturbance = stack6(f_ekf, tau_ekf);
    solve_ocp(x0, refs, weights, constraints, cfg, &m, guess)
}
