//! Receding-horizon NMPC recovering hover from a 1 m offset on the nominal model.

use omnihex::harness::Config;
use omnihex::math::{Quat, Vec3};
use omnihex::model::{dynamics_nominal, rk4_step, VehicleState};
use omnihex::nmpc::{NmpcSolver, OcpModel, RefPoint, ReferenceWindow};

fn main() -> omnihex::Result<()> {
    let cfg = Config::default();
    let params = cfg.params()?;
    let solver_cfg = cfg.solver();
    let stages = solver_cfg.stages;
    let mut mpc = NmpcSolver::new(
        cfg.weights(),
        cfg.constraints(),
        solver_cfg,
        OcpModel::new(params, cfg.allocation()?),
    )?;

    let target = RefPoint::hover(Vec3::new(0.0, 0.0, -2.0));
    let refs = ReferenceWindow::constant(target, stages);
    let mut x = VehicleState { p: Vec3::new(1.0, 0.0, -2.0), ..VehicleState::default() }
        .with_wrench(&params.hover_wrench(&Quat::IDENTITY));

    let ts = cfg.control_period();
    for k in 0..300 {
        let sol = mpc.solve(&x, &refs)?;
        x = rk4_step(&x, &sol.u0, ts, |s, u| dynamics_nominal(s, u, &params));
        if k % 50 == 0 {
            let d = &sol.diagnostics;
            println!(
                "t {:4.2} s  x {:+.4} m  status {:?}  iters {}  {:.2} ms",
                k as f64 * ts,
                x.p.x,
                d.status,
                d.iterations,
                d.solve_time.as_secs_f64() * 1e3
            );
        }
    }
    println!("final position error {:.2e} m", (x.p - target.p).norm());
    Ok(())
}
