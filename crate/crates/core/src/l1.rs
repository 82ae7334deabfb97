//! L1 adaptive augmentation of the NMPC wrench command.
//!
//! The measured rates `z = [v; ω]` are compared against a state predictor
//! driven by the nominal model. The mismatch is turned into a
//! piecewise-constant estimate `σ̂` of the matched body-wrench uncertainty,
//! low-pass filtered, and subtracted from the command.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{rotate, skew, split6, stack6, Mat6, Vec6};
use crate::model::{dynamics_nominal, rk4_step, VehicleParams, VehicleState, WrenchRate};

/// How the predictor's nominal term `𝒜` is taken over one sample period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorIntegration {
    /// `𝒜` evaluated at the sample and held.
    Euler,
    /// Average of `𝒜` over the period, from one RK4 step of the nominal
    /// model under the applied wrench. Removes the truncation error that
    /// the adaptive law would otherwise report as uncertainty.
    Propagated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Config {
    /// Diagonal of the Hurwitz predictor matrix `A` (1/s, all negative).
    pub adaptive_gain: Vec6,
    /// Control period `T_s` in seconds.
    pub sample_time: f64,
    /// Per-axis low-pass cutoff in rad/s. Zero freezes the compensation.
    pub cutoff: Vec6,
    pub predictor: PredictorIntegration,
}

impl Default for L1Config {
    fn default() -> Self {
        Self {
            adaptive_gain: Vec6::from_element(-2.0),
            sample_time: 0.01,
            cutoff: Vec6::new(40.0, 40.0, 40.0, 60.0, 60.0, 60.0),
            predictor: PredictorIntegration::Propagated,
        }
    }
}

impl L1Config {
    pub fn validate(&self) -> Result<()> {
        if self.adaptive_gain.iter().any(|a| !(*a < 0.0) || !a.is_finite()) {
            return Err(Error::InvalidConfig("adaptive gain diagonal must be negative".into()));
        }
        if !(self.sample_time > 0.0) || !self.sample_time.is_finite() {
            return Err(Error::InvalidConfig("L1 sample time must be positive".into()));
        }
        if self.cutoff.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidConfig("LPF cutoffs must be non-negative".into()));
        }
        Ok(())
    }
}

/// Adaptive law with the per-axis factors precomputed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Law {
    config: L1Config,
    /// `(e^{aT_s} − 1)⁻¹ a e^{aT_s}` per axis.
    gain: Vec6,
    /// `1 − e^{−ω_c T_s}` per axis.
    beta: Vec6,
}

impl L1Law {
    pub fn new(config: L1Config) -> Result<Self> {
        config.validate()?;
        let ts = config.sample_time;
        let gain = config.adaptive_gain.map(|a| {
            let e = (a * ts).exp();
            a * e / (e - 1.0)
        });
        let beta = config.cutoff.map(|wc| 1.0 - (-wc * ts).exp());
        Ok(Self { config, gain, beta })
    }

    pub fn config(&self) -> &L1Config {
        &self.config
    }

    pub fn gain(&self) -> &Vec6 {
        &self.gain
    }

    pub fn beta(&self) -> &Vec6 {
        &self.beta
    }
}

/// `ℬ = [[R/m, 0], [−J⁻¹[d]×, J⁻¹]]`: how a body wrench enters `[v̇; ω̇]`.
pub fn b_matrix(x: &VehicleState, params: &VehicleParams) -> Mat6 {
    let r = x.q.to_rotation_matrix();
    let jinv = params.inertia_inv();
    let mut b = Mat6::zeros();
    b.fixed_view_mut::<3, 3>(0, 0).copy_from(&(r / params.mass));
    b.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-jinv * skew(&params.com_offset)));
    b.fixed_view_mut::<3, 3>(3, 3).copy_from(jinv);
    b
}

/// Closed-form `ℬ⁻¹ = [[mRᵀ, 0], [m[d]×Rᵀ, J]]`.
pub fn b_matrix_inverse(x: &VehicleState, params: &VehicleParams) -> Mat6 {
    let rt = x.q.to_rotation_matrix().transpose();
    let mut b = Mat6::zeros();
    b.fixed_view_mut::<3, 3>(0, 0).copy_from(&(params.mass * rt));
    b.fixed_view_mut::<3, 3>(3, 0).copy_from(&(params.mass * skew(&params.com_offset) * rt));
    b.fixed_view_mut::<3, 3>(3, 3).copy_from(&params.inertia);
    b
}

/// Nominal `[v̇; ω̇]` (the predictor's `𝒜`) under body wrench `wrench`.
pub fn ideal_dynamics(x: &VehicleState, wrench: &Vec6, params: &VehicleParams) -> Vec6 {
    let (f, tau) = split6(wrench);
    let v_dot = params.gravity + rotate(&f, &x.q) / params.mass;
    let omega_dot = params.inertia_inv()
        * (tau - params.com_offset.cross(&f) - x.omega.cross(&(params.inertia * x.omega)));
    stack6(&v_dot, &omega_dot)
}

/// Mean `[v̇; ω̇]` of the nominal model over `ts` starting at `x` with the
/// body wrench held at `wrench`.
pub fn propagated_rates(x: &VehicleState, wrench: &Vec6, params: &VehicleParams, ts: f64) -> Vec6 {
    let next = rk4_step(&x.with_wrench(wrench), &WrenchRate::ZERO, ts, |s, u| dynamics_nominal(s, u, params));
    (measured_rates(&next) - measured_rates(x)) / ts
}

/// Piecewise-constant adaptive law `σ̂ = −ℬ⁻¹(e^{AT_s} − I)⁻¹ A e^{AT_s} z̃`.
pub fn adapt(z_tilde: &Vec6, b_inv: &Mat6, law: &L1Law) -> Vec6 {
    -(b_inv * law.gain.component_mul(z_tilde))
}

/// Measured rates `z = [v; ω]`.
pub fn measured_rates(x: &VehicleState) -> Vec6 {
    stack6(&x.v, &x.omega)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1State {
    /// Predicted `[v; ω]`.
    pub z_hat: Vec6,
    pub sigma_hat: Vec6,
    pub u_l1: Vec6,
    /// Wrench accumulated from the OCP's wrench rates.
    pub u_mpc: Vec6,
    filter: Vec6,
}

impl L1State {
    /// Predictor seeded with the measured rates and an accumulated MPC
    /// wrench of `u_mpc` (zero in the textbook initialization).
    pub fn new(x: &VehicleState, u_mpc: Vec6) -> Self {
        Self {
            z_hat: measured_rates(x),
            sigma_hat: Vec6::zeros(),
            u_l1: Vec6::zeros(),
            u_mpc,
            filter: Vec6::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.z_hat.iter().chain(self.sigma_hat.iter()).chain(self.u_l1.iter()).chain(self.u_mpc.iter())
            .all(|v| v.is_finite())
    }
}

/// First-order filter `y ← y + β(σ̂ − y)`; returns `u_L1 = −y`.
pub fn lpf_step(sigma_hat: &Vec6, state: &mut L1State, law: &L1Law) -> Vec6 {
    state.filter += law.beta.component_mul(&(sigma_hat - state.filter));
    state.u_l1 = -state.filter;
    state.u_l1
}

/// Explicit-Euler predictor update
/// `ẑ ← ẑ + T_s(𝒜 + ℬ(u_L1 + σ̂) + A z̃)`.
pub fn predictor_step(
    z_hat: &Vec6,
    ideal: &Vec6,
    b: &Mat6,
    u_l1: &Vec6,
    sigma_hat: &Vec6,
    z_tilde: &Vec6,
    law: &L1Law,
) -> Vec6 {
    let rate = ideal + b * (u_l1 + sigma_hat) + law.config.adaptive_gain.component_mul(z_tilde);
    z_hat + law.config.sample_time * rate
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Output {
    /// Wrench handed to the allocator, `u_L1 + u_mpc`.
    pub wrench: Vec6,
    pub sigma_hat: Vec6,
    pub u_l1: Vec6,
    pub u_mpc: Vec6,
}

/// One control period of the augmentation: accumulate the OCP wrench
/// rate, adapt, filter, emit, then propagate the predictor.
pub fn l1_step(
    x: &VehicleState,
    u_ocp: &Vec6,
    state: &mut L1State,
    law: &L1Law,
    params: &VehicleParams,
) -> Result<L1Output> {
    if !x.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let ts = law.config.sample_time;
    state.u_mpc += u_ocp * ts;

    let b = b_matrix(x, params);
    let b_inv = b_matrix_inverse(x, params);
    let z_tilde = state.z_hat - measured_rates(x);

    let sigma_hat = adapt(&z_tilde, &b_inv, law);
    state.sigma_hat = sigma_hat;
    let u_l1 = lpf_step(&sigma_hat, state, law);
    let out = L1Output { wrench: u_l1 + state.u_mpc, sigma_hat, u_l1, u_mpc: state.u_mpc };

    let ideal = match law.config.predictor {
        PredictorIntegration::Euler => ideal_dynamics(x, &state.u_mpc, params),
        PredictorIntegration::Propagated => propagated_rates(x, &out.wrench, params, ts) - b * u_l1,
    };

    state.z_hat = predictor_step(&state.z_hat, &ideal, &b, &u_l1, &sigma_hat, &z_tilde, law);
    if !state.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(out)
}

/// Stateful wrapper owning the law, the filter state and the model.
#[derive(Debug, Clone)]
pub struct L1Adaptive {
    pub law: L1Law,
    pub state: L1State,
    pub params: VehicleParams,
}

impl L1Adaptive {
    pub fn new(config: L1Config, params: VehicleParams, x0: &VehicleState, u_mpc0: Vec6) -> Result<Self> {
        Ok(Self { law: L1Law::new(config)?, state: L1State::new(x0, u_mpc0), params })
    }

    pub fn step(&mut self, x: &VehicleState, u_ocp: &Vec6) -> Result<L1Output> {
        l1_step(x, u_ocp, &mut self.state, &self.law, &self.params)
    }
}
