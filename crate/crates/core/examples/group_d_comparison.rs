//! Nominal, L1 and EKF NMPC on the most mismatched plant, one trajectory period.

use omnihex::harness::{reduction_percent, run_experiment, Config, ControllerKind, ExperimentSpec};
use omnihex::model::Group;

fn main() -> omnihex::Result<()> {
    let cfg = Config::default();
    let period = cfg.trajectory.period;
    let mut nominal = None;
    for controller in [ControllerKind::Nominal, ControllerKind::L1, ControllerKind::Ekf] {
        let out = run_experiment(&ExperimentSpec::new(Group::D, controller, period, period), &cfg)?;
        let m = &out.metrics;
        let base = *nominal.get_or_insert(m.position_rmse);
        println!(
            "{:<8} position {:.4} m  attitude {:.4}  mean z error {:+.4} m  reduction {:5.1}%  solve {:.2} ms",
            controller.name(),
            m.position_rmse,
            m.attitude_rmse,
            m.mean_z_error,
            reduction_percent(m.position_rmse, base),
            m.mean_solve_ms
        );
    }
    Ok(())
}
