//! TOML experiment configuration. Every table and key is optional; missing
//! values fall back to the defaults below.
//!
//! ```toml
//! [vehicle]
//! mass = 4.0
//! inertia = [[0.08, 0.0, 0.0], [0.0, 0.08, 0.0], [0.0, 0.0, 0.14]]
//!
//! [plant]
//! com_shift = [0.01, 0.01, 0.01]
//! actuation = "allocated"
//!
//! [l1]
//! adaptive_gain = [-2.0, -2.0, -2.0, -2.0, -2.0, -2.0]
//! predictor = "propagated"
//!
//! [sweep]
//! groups = ["B", "C", "D"]
//! periods = [15.0, 20.0, 30.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocation::{build_matrices, ActuatorGeometry, AllocationMatrices};
use crate::ekf::EkfConfig;
use crate::error::{Error, Result};
use crate::l1::{L1Config, PredictorIntegration};
use crate::math::{Mat3, Vec3, Vec6};
use crate::model::{Group, PlantPerturbation, VehicleParams};
use crate::nmpc::{ConstraintSet, OcpWeights, SolverConfig};
use crate::pid::{BackupPolicy, PidGains};

use super::trajectory::TrajectorySpec;
use super::ControllerKind;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub vehicle: VehicleConfig,
    pub geometry: ActuatorGeometry,
    pub plant: PlantConfig,
    pub weights: WeightsConfig,
    pub constraints: ConstraintsConfig,
    pub solver: SolverSettings,
    pub l1: L1Settings,
    pub ekf: EkfConfig,
    pub pid: PidGains,
    pub backup: BackupPolicy,
    pub trajectory: TrajectorySpec,
    pub run: RunConfig,
    pub sweep: SweepConfig,
}

/// Nominal model known to the controllers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleConfig {
    pub mass: f64,
    pub inertia: [[f64; 3]; 3],
    pub com_offset: [f64; 3],
    pub gravity: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            mass: 4.0,
            inertia: [[0.08, 0.0, 0.0], [0.0, 0.08, 0.0], [0.0, 0.0, 0.14]],
            com_offset: [0.0; 3],
            gravity: 9.81,
        }
    }
}

/// How the commanded wrench reaches the plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actuation {
    /// Wrench applied as commanded.
    Direct,
    /// Allocation to rotor speeds and tilts, then the forward rotor model.
    Allocated,
    /// As `Allocated` but with the square-root speed extraction on the plant side.
    Mismatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// Center-of-mass shift applied in groups B to D (m).
    pub com_shift: [f64; 3],
    pub actuation: Actuation,
    /// Speed unit of the mismatched allocation (rad/s).
    pub mismatch_speed_scale: f64,
    /// A run fails once the position norm exceeds this bound (m).
    pub divergence_bound: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            com_shift: [0.01; 3],
            actuation: Actuation::Allocated,
            mismatch_speed_scale: 1000.0,
            divergence_bound: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsConfig {
    pub position: f64,
    pub attitude: f64,
    pub velocity: f64,
    pub angular_velocity: f64,
    pub wrench: f64,
    pub control: f64,
    pub terminal_scale: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self {
            position: 40.0,
            attitude: 40.0,
            velocity: 4.0,
            angular_velocity: 4.0,
            wrench: 1e-3,
            control: 1e-4,
            terminal_scale: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintsConfig {
    /// Symmetric bound on the wrench rate `[ḟ; τ̇]`.
    pub wrench_rate_max: [f64; 6],
    pub velocity_max: f64,
    pub rate_max: f64,
    pub rotor_thrust_min: f64,
    pub rotor_thrust_max: f64,
}

impl Default for ConstraintsConfig {
    fn default() -> Self {
        let c = ConstraintSet::default();
        Self {
            wrench_rate_max: c.u_ub.into(),
            velocity_max: c.velocity_ub.x,
            rate_max: c.omega_ub.x,
            rotor_thrust_min: c.thrust_lb,
            rotor_thrust_max: c.thrust_ub,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub horizon: f64,
    pub stages: usize,
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    pub penalty_weight: f64,
    pub warm_start: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            horizon: s.horizon,
            stages: s.stages,
            max_iterations: s.max_iterations,
            kkt_tolerance: s.kkt_tolerance,
            penalty_weight: s.penalty_weight,
            warm_start: s.warm_start,
        }
    }
}

/// Sample time is the control period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L1Settings {
    pub adaptive_gain: [f64; 6],
    pub cutoff: [f64; 6],
    pub predictor: PredictorIntegration,
}

impl Default for L1Settings {
    fn default() -> Self {
        let c = L1Config::default();
        Self { adaptive_gain: c.adaptive_gain.into(), cutoff: c.cutoff.into(), predictor: c.predictor }
    }
}

/// Gaussian measurement noise seen by the controllers (standard deviations).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementNoise {
    pub position: f64,
    pub attitude: f64,
    pub velocity: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub control_rate: f64,
    /// Plant integration steps per control step.
    pub plant_substeps: usize,
    pub seed: u64,
    /// Samples before this time are excluded from the metrics (s).
    pub settle_time: f64,
    /// Write measured solve times to the CSV. Off keeps the output
    /// byte-identical between runs.
    pub csv_timing: bool,
    pub noise: MeasurementNoise,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            control_rate: 100.0,
            plant_substeps: 10,
            seed: 0,
            settle_time: 0.0,
            csv_timing: false,
            noise: MeasurementNoise::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub groups: Vec<Group>,
    pub controllers: Vec<ControllerKind>,
    pub periods: Vec<f64>,
    /// Run length per cell; one trajectory period when absent.
    pub duration: Option<f64>,
    /// Write one time-series CSV per cell next to the summary.
    pub write_runs: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            groups: Group::ALL.to_vec(),
            controllers: vec![ControllerKind::Nominal, ControllerKind::L1, ControllerKind::Ekf],
            periods: vec![15.0, 20.0, 30.0],
            duration: None,
            write_runs: true,
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        self.geometry.validate()?;
        params.check_com_within(self.geometry.arm_length)?;
        for g in Group::ALL {
            params.perturbed(&self.perturbation(g))?.check_com_within(self.geometry.arm_length)?;
        }
        self.weights().validate()?;
        self.constraints().validate()?;
        self.solver().validate()?;
        self.l1().validate()?;
        self.ekf.validate()?;
        self.pid.validate()?;
        self.trajectory.validate()?;
        let r = &self.run;
        if !(r.control_rate > 0.0) || r.plant_substeps == 0 || !(r.settle_time >= 0.0) {
            return Err(Error::InvalidConfig("control rate and substeps must be positive".into()));
        }
        let n = &r.noise;
        if [n.position, n.attitude, n.velocity, n.rate].iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidConfig("noise levels must be non-negative".into()));
        }
        if !(self.plant.divergence_bound > 0.0) || !(self.plant.mismatch_speed_scale > 0.0) {
            return Err(Error::InvalidConfig("divergence bound and speed scale must be positive".into()));
        }
        if self.sweep.periods.iter().any(|p| !(*p > 0.0)) || self.sweep.duration.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::InvalidConfig("sweep periods and duration must be positive".into()));
        }
        Ok(())
    }

    pub fn control_period(&self) -> f64 {
        1.0 / self.run.control_rate
    }

    pub fn params(&self) -> Result<VehicleParams> {
        let v = &self.vehicle;
        VehicleParams::new(
            v.mass,
            Mat3::from_fn(|r, c| v.inertia[r][c]),
            Vec3::from(v.com_offset),
            Vec3::new(0.0, 0.0, v.gravity),
        )
    }

    pub fn allocation(&self) -> Result<AllocationMatrices> {
        build_matrices(&self.geometry)
    }

    pub fn perturbation(&self, group: Group) -> PlantPerturbation {
        PlantPerturbation::for_group(group, Vec3::from(self.plant.com_shift))
    }

    pub fn weights(&self) -> OcpWeights {
        let w = &self.weights;
        OcpWeights::from_blocks(
            w.position,
            w.attitude,
            w.velocity,
            w.angular_velocity,
            w.wrench,
            w.control,
            w.terminal_scale,
        )
    }

    pub fn constraints(&self) -> ConstraintSet {
        let c = &self.constraints;
        let u = Vec6::from(c.wrench_rate_max);
        ConstraintSet {
            u_lb: -u,
            u_ub: u,
            velocity_lb: Vec3::from_element(-c.velocity_max),
            velocity_ub: Vec3::from_element(c.velocity_max),
            omega_lb: Vec3::from_element(-c.rate_max),
            omega_ub: Vec3::from_element(c.rate_max),
            thrust_lb: c.rotor_thrust_min,
            thrust_ub: c.rotor_thrust_max,
        }
    }

    /// Solver settings with the warm start shifted by one control period.
    pub fn solver(&self) -> SolverConfig {
        let s = &self.solver;
        let mut cfg = SolverConfig {
            horizon: s.horizon,
            stages: s.stages,
            max_iterations: s.max_iterations,
            kkt_tolerance: s.kkt_tolerance,
            penalty_weight: s.penalty_weight,
            warm_start: s.warm_start,
            warm_start_shift: 1.0,
        };
        if s.stages > 0 && s.horizon > 0.0 {
            cfg.warm_start_shift = self.control_period() / cfg.interval();
        }
        cfg
    }

    pub fn l1(&self) -> L1Config {
        L1Config {
            adaptive_gain: Vec6::from(self.l1.adaptive_gain),
            sample_time: self.control_period(),
            cutoff: Vec6::from(self.l1.cutoff),
            predictor: self.l1.predictor,
        }
    }

    pub fn ekf(&self) -> EkfConfig {
        EkfConfig { update_period: self.control_period(), ..self.ekf }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::from_toml_str("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.weights(), OcpWeights::default());
        assert_eq!(cfg.constraints(), ConstraintSet::default());
        assert_eq!(cfg.l1(), L1Config::default());
        assert!((cfg.solver().warm_start_shift - 0.2).abs() < 1e-12);
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let text = toml::to_string(&Config::default()).unwrap();
        assert_eq!(Config::from_toml_str(&text).unwrap(), Config::default());
    }

    #[test]
    fn partial_override() {
        let cfg = Config::from_toml_str(
            "[vehicle]\nmass = 5.0\n[plant]\nactuation = \"direct\"\n[sweep]\ngroups = [\"D\"]\ncontrollers = [\"l1\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.params().unwrap().mass, 5.0);
        assert_eq!(cfg.plant.actuation, Actuation::Direct);
        assert_eq!(cfg.sweep.groups, vec![Group::D]);
        assert_eq!(cfg.sweep.controllers, vec![ControllerKind::L1]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_toml_str("[vehicle]\nmass = -1.0\n").is_err());
        assert!(Config::from_toml_str("[l1]\nadaptive_gain = [1.0, -1.0, -1.0, -1.0, -1.0, -1.0]\n").is_err());
        assert!(Config::from_toml_str("[plant]\ncom_shift = [0.5, 0.0, 0.0]\n").is_err());
        assert!(Config::from_toml_str("[vehicle]\nunknown = 1\n").is_err());
    }
}
