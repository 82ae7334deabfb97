//! Closed-loop experiments: reference trajectory, plant groups A–D, the four
//! controllers, metrics and CSV output.

pub mod config;
pub mod metrics;
pub mod sim;
pub mod sweep;
pub mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Group;

pub use config::{Actuation, Config};
pub use metrics::{mean_and_sem, reduction_percent, rmse, RunMetrics};
pub use sim::{run_experiment, write_csv, Record, RunOutcome};
pub use sweep::{run_sweep, summarize, CellResult, SummaryRow, SweepCell, SweepOutput};
pub use trajectory::TrajectorySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Nominal,
    L1,
    Ekf,
    Pid,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] =
        [ControllerKind::Nominal, ControllerKind::L1, ControllerKind::Ekf, ControllerKind::Pid];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Nominal => "nominal",
            ControllerKind::L1 => "l1",
            ControllerKind::Ekf => "ekf",
            ControllerKind::Pid => "pid",
        }
    }

    pub fn uses_ocp(self) -> bool {
        self != ControllerKind::Pid
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nominal" | "nominal-mpc" => Ok(ControllerKind::Nominal),
            "l1" | "l1-mpc" => Ok(ControllerKind::L1),
            "ekf" | "ekf-mpc" => Ok(ControllerKind::Ekf),
            "pid" => Ok(ControllerKind::Pid),
            other => Err(Error::InvalidConfig(format!("unknown controller {other:?}"))),
        }
    }
}

/// One closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub group: Group,
    pub controller: ControllerKind,
    /// Trajectory period (s).
    pub period: f64,
    /// Run length (s).
    pub duration: f64,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(group: Group, controller: ControllerKind, period: f64, duration: f64) -> Self {
        Self { group, controller, period, duration, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "period and duration must be positive, got {} and {}",
                self.period, self.duration
            )));
        }
        Ok(())
    }

    /// File stem such as `D_l1_T15`.
    pub fn label(&self) -> String {
        format!("{}_{}_T{}", self.group, self.controller, self.period)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controller_names_round_trip() {
        for c in ControllerKind::ALL {
            assert_eq!(c.name().parse::<ControllerKind>().unwrap(), c);
        }
        assert_eq!("l1-mpc".parse::<ControllerKind>().unwrap(), ControllerKind::L1);
        assert!("lqr".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ExperimentSpec::new(Group::A, ControllerKind::Pid, 15.0, 0.0).validate().is_err());
        assert!(ExperimentSpec::new(Group::A, ControllerKind::Pid, 15.0, 1.0).validate().is_ok());
        assert_eq!(ExperimentSpec::new(Group::D, ControllerKind::L1, 15.0, 1.0).label(), "D_l1_T15");
    }
}
