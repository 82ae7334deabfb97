//! Error-state EKF estimating a constant body wrench from noisy state samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use omnihex::ekf::{DisturbanceEkf, EkfConfig, Observation};
use omnihex::math::{Quat, Vec3, Vec6};
use omnihex::model::{dynamics_with_disturbance, rk4_step, VehicleParams, VehicleState, WrenchRate};

fn main() -> omnihex::Result<()> {
    let params = VehicleParams::nominal();
    let cfg = EkfConfig::default();
    let dt = cfg.update_period;
    let truth = Vec6::new(2.0, 0.0, -4.0, 0.0, 0.0, 0.0);
    // cancel gravity only, so the disturbance moves the vehicle
    let wrench = params.hover_wrench(&Quat::IDENTITY);

    let mut x = VehicleState::default().with_wrench(&wrench);
    let mut ekf = DisturbanceEkf::new(cfg, params, &x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 0.005).unwrap();
    let mut jitter = || Vec3::from_fn(|_, _| noise.sample(&mut rng));

    for k in 1..=300 {
        x = rk4_step(&x, &WrenchRate::ZERO, dt, |s, u| dynamics_with_disturbance(s, u, &params, &truth));
        ekf.predict(&wrench);
        let mut z = Observation::from(&x);
        z.p += jitter();
        z.v += jitter();
        ekf.update(&z);
        if k % 50 == 0 {
            let d = ekf.state.disturbance();
            println!(
                "t {:4.2} s  force {:+.2} {:+.2} {:+.2}  force sd {:.3}",
                k as f64 * dt,
                d[0],
                d[1],
                d[2],
                ekf.state.covariance[(12, 12)].sqrt()
            );
        }
    }
    println!("true force {:?}", truth.fixed_rows::<3>(0).as_slice());
    Ok(())
}
