//! The L1 augmentation cancelling a constant force it was not told about.
//! The OCP is left out: the commanded wrench is hover plus `u_L1`, so a
//! small residual force remains and the vehicle slowly drifts.

use omnihex::l1::{L1Adaptive, L1Config};
use omnihex::math::{Quat, Vec6};
use omnihex::model::{dynamics_with_disturbance, rk4_step, VehicleParams, VehicleState, WrenchRate};

fn main() -> omnihex::Result<()> {
    let params = VehicleParams::nominal();
    let cfg = L1Config::default();
    let ts = cfg.sample_time;
    let hover = params.hover_wrench(&Quat::IDENTITY);
    let disturbance = Vec6::new(3.0, -2.0, 5.0, 0.0, 0.0, 0.0);

    let mut x = VehicleState::default().with_wrench(&hover);
    let mut l1 = L1Adaptive::new(cfg, params, &x, hover)?;
    let mut last = None;
    for k in 0..=200 {
        let out = l1.step(&x, &Vec6::zeros())?;
        x = x.with_wrench(&out.wrench);
        for _ in 0..10 {
            x = rk4_step(&x, &WrenchRate::ZERO, ts / 10.0, |s, u| dynamics_with_disturbance(s, u, &params, &disturbance));
        }
        if k % 25 == 0 {
            println!(
                "t {:4.2} s  sigma_hat fz {:+.3}  u_L1 fz {:+.3}  |v| {:.4} m/s",
                k as f64 * ts,
                out.sigma_hat[2],
                out.u_l1[2],
                x.v.norm()
            );
        }
        last = Some(out);
    }
    let u = last.unwrap().u_l1;
    // the sampled law settles at -exp(A Ts) d, leaving 1 - exp(A Ts) of d uncancelled
    let a = l1.law.config().adaptive_gain[2];
    println!("u_L1 force {:+.3?}, expected {:+.3?}", u.fixed_rows::<3>(0).as_slice(), (-(a * ts).exp() * disturbance).fixed_rows::<3>(0).as_slice());
    Ok(())
}
