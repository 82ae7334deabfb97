//! Periodic 6-DOF reference: a lemniscate in XY, a sinusoid in Z, and
//! sinusoidal roll, pitch and yaw profiles.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Quat, Vec3};
use crate::nmpc::{RefPoint, ReferenceWindow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectorySpec {
    /// Time for one lap (s).
    pub period: f64,
    /// Lap center in world NED.
    pub center: [f64; 3],
    /// X and Y lemniscate half-widths and Z sinusoid amplitude (m).
    pub position_amplitude: [f64; 3],
    /// Roll, pitch and yaw amplitudes (degrees).
    pub attitude_amplitude_deg: [f64; 3],
    /// Phase of the Z, roll, pitch and yaw sinusoids (rad).
    pub phase: [f64; 4],
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            period: 15.0,
            center: [0.0, 0.0, -2.0],
            position_amplitude: [2.0, 2.0, 0.5],
            attitude_amplitude_deg: [60.0, 60.0, 45.0],
            phase: [0.0, 0.0, TAU / 4.0, 0.0],
        }
    }
}

/// `a·sin(kωt + φ)` and its first two time derivatives.
fn harmonic(a: f64, k: f64, w: f64, phi: f64, t: f64) -> (f64, f64, f64) {
    let arg = k * w * t + phi;
    let kw = k * w;
    (a * arg.sin(), a * kw * arg.cos(), -a * kw * kw * arg.sin())
}

impl TrajectorySpec {
    pub fn with_period(mut self, period: f64) -> Self {
        self.period = period;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::InvalidConfig(format!("trajectory period must be positive, got {}", self.period)));
        }
        if self.attitude_amplitude_deg.iter().any(|a| !(a.abs() < 90.0)) {
            return Err(Error::InvalidConfig("attitude amplitudes must stay below 90 degrees".into()));
        }
        let finite = self.center.iter().chain(&self.position_amplitude).chain(&self.phase).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("non-finite trajectory parameters".into()));
        }
        Ok(())
    }

    /// Reference pose, velocities and acceleration at time `t`.
    pub fn reference(&self, t: f64) -> RefPoint {
        let w = TAU / self.period;
        let [ax, ay, az] = self.position_amplitude;
        let [pz, pr, pp, py] = self.phase;

        let x = harmonic(ax, 1.0, w, 0.0, t);
        let y = harmonic(0.5 * ay, 2.0, w, 0.0, t);
        let z = harmonic(az, 1.0, w, pz, t);
        let c = Vec3::from(self.center);
        let p = c + Vec3::new(x.0, y.0, z.0);
        let v = Vec3::new(x.1, y.1, z.1);
        let accel = Vec3::new(x.2, y.2, z.2);

        let [ar, ap, ayaw] = self.attitude_amplitude_deg.map(f64::to_radians);
        let (roll, droll, _) = harmonic(ar, 1.0, w, pr, t);
        let (pitch, dpitch, _) = harmonic(ap, 1.0, w, pp, t);
        let (yaw, dyaw, _) = harmonic(ayaw, 1.0, w, py, t);
        let q = Quat::from_euler_zyx(roll, pitch, yaw);
        // body rates from Z-Y-X Euler rates
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let omega = Vec3::new(
            droll - dyaw * sp,
            dpitch * cr + dyaw * cp * sr,
            -dpitch * sr + dyaw * cp * cr,
        );
        RefPoint { p, q, v, omega, accel }
    }

    /// References at `t, t + h, …, t + N·h`.
    pub fn window(&self, t: f64, interval: f64, stages: usize) -> ReferenceWindow {
        ReferenceWindow((0..=stages).map(|k| self.reference(t + k as f64 * interval)).collect())
    }
}
