//! Backup cascaded PID answering a 1 m position step.

use omnihex::math::{Quat, Vec3};
use omnihex::model::{dynamics_nominal, rk4_step, VehicleParams, VehicleState, WrenchRate};
use omnihex::nmpc::RefPoint;
use omnihex::pid::{PidController, PidGains};

fn main() -> omnihex::Result<()> {
    let params = VehicleParams::nominal();
    let dt = 0.01;
    let mut pid = PidController::new(PidGains::default(), params, dt)?;
    let r = RefPoint::hover(Vec3::new(1.0, 0.0, -2.0));
    let mut x = VehicleState { p: Vec3::new(0.0, 0.0, -2.0), ..VehicleState::default() }
        .with_wrench(&params.hover_wrench(&Quat::IDENTITY));

    for k in 0..=500 {
        let w = pid.step(&x, &r);
        x = rk4_step(&x.with_wrench(&w), &WrenchRate::ZERO, dt, |s, u| dynamics_nominal(s, u, &params));
        if k % 50 == 0 {
            println!("t {:4.2} s  x {:.4} m  vx {:+.3} m/s", k as f64 * dt, x.p.x, x.v.x);
        }
    }
    Ok(())
}
