//! Cascaded PID controller producing a body wrench, and the supervisor that
//! hands control to it when the optimal controller fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{rotate, stack6, Vec3, Vec6};
use crate::model::{VehicleParams, VehicleState};
use crate::nmpc::RefPoint;

/// Per-axis gains for the position → velocity → acceleration chain and the
/// attitude → rate → angular-acceleration chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PidGains {
    pub position_p: [f64; 3],
    pub velocity_p: [f64; 3],
    pub velocity_i: [f64; 3],
    pub velocity_d: [f64; 3],
    pub attitude_p: [f64; 3],
    pub rate_p: [f64; 3],
    pub rate_i: [f64; 3],
    pub rate_d: [f64; 3],
    /// Norm limit on the acceleration setpoint (m/s²).
    pub max_accel: f64,
    /// Norm limit on the angular-acceleration setpoint (rad/s²).
    pub max_angular_accel: f64,
    /// Integrator clamp, per axis, in setpoint units.
    pub integrator_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            position_p: [1.5; 3],
            velocity_p: [5.0; 3],
            velocity_i: [0.5; 3],
            velocity_d: [0.0; 3],
            attitude_p: [6.0; 3],
            rate_p: [20.0; 3],
            rate_i: [0.5; 3],
            rate_d: [0.0; 3],
            max_accel: 15.0,
            max_angular_accel: 60.0,
            integrator_limit: 5.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        let arrays = [
            self.position_p,
            self.velocity_p,
            self.velocity_i,
            self.velocity_d,
            self.attitude_p,
            self.rate_p,
            self.rate_i,
            self.rate_d,
        ];
        let scalars = [self.max_accel, self.max_angular_accel, self.integrator_limit];
        if arrays.iter().flatten().chain(scalars.iter()).any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidConfig("PID gains and limits must be finite and non-negative".into()));
        }
        Ok(())
    }
}

fn clamp_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max { v * (max / n) } else { v }
}

fn diag(g: &[f64; 3], v: &Vec3) -> Vec3 {
    Vec3::from(*g).component_mul(v)
}

/// Body-rate setpoint from the attitude error, `2·sign(w)·vec(q⁻¹⊗q_ref)`
/// scaled per axis, plus the reference rate.
pub fn rate_setpoint(x: &VehicleState, r: &RefPoint, gains: &PidGains) -> Vec3 {
    let e = x.q.inverse() * r.q;
    let sign = if e.w < 0.0 { -1.0 } else { 1.0 };
    diag(&gains.attitude_p, &(2.0 * sign * e.vector_part())) + r.omega
}

/// Wrench realizing the acceleration setpoints:
/// `f = m(R⁻¹(v̇_sp − g) + ω × R⁻¹v)`, `τ = Jω̇_sp + d×f + ω×Jω`.
pub fn setpoint_wrench(x: &VehicleState, v_dot_sp: &Vec3, omega_dot_sp: &Vec3, params: &VehicleParams) -> Vec6 {
    let qi = x.q.inverse();
    let f = params.mass * (rotate(&(v_dot_sp - params.gravity), &qi) + x.omega.cross(&rotate(&x.v, &qi)));
    let tau = params.inertia * omega_dot_sp
        + params.com_offset.cross(&f)
        + x.omega.cross(&(params.inertia * x.omega));
    stack6(&f, &tau)
}

/// Proportional-only evaluation of the cascade (no integrator or derivative
/// history).
pub fn pid_wrench(x: &VehicleState, r: &RefPoint, gains: &PidGains, params: &VehicleParams) -> Vec6 {
    let v_sp = r.v + diag(&gains.position_p, &(r.p - x.p));
    let v_dot_sp = clamp_norm(r.accel + diag(&gains.velocity_p, &(v_sp - x.v)), gains.max_accel);
    let omega_sp = rate_setpoint(x, r, gains);
    let omega_dot_sp = clamp_norm(diag(&gains.rate_p, &(omega_sp - x.omega)), gains.max_angular_accel);
    setpoint_wrench(x, &v_dot_sp, &omega_dot_sp, params)
}

/// Stateful cascade with integrators and derivative-on-error terms.
#[derive(Debug, Clone)]
pub struct PidController {
    pub gains: PidGains,
    pub params: VehicleParams,
    dt: f64,
    vel_integral: Vec3,
    rate_integral: Vec3,
    prev_vel_error: Option<Vec3>,
    prev_rate_error: Option<Vec3>,
}

impl PidController {
    pub fn new(gains: PidGains, params: VehicleParams, dt: f64) -> Result<Self> {
        gains.validate()?;
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig("PID period must be positive".into()));
        }
        Ok(Self {
            gains,
            params,
            dt,
            vel_integral: Vec3::zeros(),
            rate_integral: Vec3::zeros(),
            prev_vel_error: None,
            prev_rate_error: None,
        })
    }

    pub fn reset(&mut self) {
        self.vel_integral = Vec3::zeros();
        self.rate_integral = Vec3::zeros();
        self.prev_vel_error = None;
        self.prev_rate_error = None;
    }

    pub fn step(&mut self, x: &VehicleState, r: &RefPoint) -> Vec6 {
        let g = &self.gains;
        let lim = g.integrator_limit;

        let v_sp = r.v + diag(&g.position_p, &(r.p - x.p));
        let ev = v_sp - x.v;
        self.vel_integral = (self.vel_integral + diag(&g.velocity_i, &ev) * self.dt).map(|v| v.clamp(-lim, lim));
        let dv = self.prev_vel_error.map_or(Vec3::zeros(), |p| (ev - p) / self.dt);
        self.prev_vel_error = Some(ev);
        let v_dot_sp = clamp_norm(
            r.accel + diag(&g.velocity_p, &ev) + self.vel_integral + diag(&g.velocity_d, &dv),
            g.max_accel,
        );

        let ew = rate_setpoint(x, r, g) - x.omega;
        self.rate_integral = (self.rate_integral + diag(&g.rate_i, &ew) * self.dt).map(|v| v.clamp(-lim, lim));
        let dw = self.prev_rate_error.map_or(Vec3::zeros(), |p| (ew - p) / self.dt);
        self.prev_rate_error = Some(ew);
        let omega_dot_sp = clamp_norm(
            diag(&g.rate_p, &ew) + self.rate_integral + diag(&g.rate_d, &dw),
            g.max_angular_accel,
        );
        setpoint_wrench(x, &v_dot_sp, &omega_dot_sp, &self.params)
    }
}

/// Region in which the optimal controller is trusted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackupPolicy {
    /// Consecutive successful solves needed before handing control back.
    pub recover_after: usize,
    pub max_position_error: f64,
    pub max_speed: f64,
    pub max_rate: f64,
}

impl Default for BackupPolicy {
    fn default() -> Self {
        Self { recover_after: 10, max_position_error: 2.0, max_speed: 10.0, max_rate: 10.0 }
    }
}

impl BackupPolicy {
    pub fn state_valid(&self, x: &VehicleState, r: &RefPoint) -> bool {
        x.is_finite()
            && (x.p - r.p).norm() <= self.max_position_error
            && x.v.norm() <= self.max_speed
            && x.omega.norm() <= self.max_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveController {
    Primary,
    Backup,
}

/// Switches to the backup on a solver failure or an out-of-envelope state
/// and back after a run of successful solves.
#[derive(Debug, Clone, Default)]
pub struct BackupSupervisor {
    pub policy: BackupPolicy,
    engaged: bool,
    streak: usize,
    engagements: usize,
}

impl BackupSupervisor {
    pub fn new(policy: BackupPolicy) -> Self {
        Self { policy, ..Self::default() }
    }

    pub fn observe(&mut self, solve_ok: bool, state_valid: bool) -> ActiveController {
        let healthy = solve_ok && state_valid;
        if !healthy {
            if !self.engaged {
                self.engagements += 1;
            }
            self.engaged = true;
            self.streak = 0;
        } else if self.engaged {
            self.streak += 1;
            if self.streak >= self.policy.recover_after {
                self.engaged = false;
                self.streak = 0;
            }
        }
        self.active()
    }

    pub fn active(&self) -> ActiveController {
        if self.engaged { ActiveController::Backup } else { ActiveController::Primary }
    }

    pub fn engagements(&self) -> usize {
        self.engagements
    }
}
