//! Wrench to rotor speeds and tilt angles, and back.

use omnihex::allocation::{allocate, build_matrices, ActuatorGeometry};
use omnihex::math::{Quat, Vec6};
use omnihex::model::VehicleParams;

fn main() -> omnihex::Result<()> {
    let mats = build_matrices(&ActuatorGeometry::default())?;
    let hover = VehicleParams::nominal().hover_wrench(&Quat::IDENTITY);

    // a sideways push and a yaw torque on top of hover; tilting rotors
    // produce lateral force without rolling the body
    for extra in [Vec6::zeros(), Vec6::new(8.0, 0.0, 0.0, 0.0, 0.0, 0.0), Vec6::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0)] {
        let w = hover + extra;
        let a = allocate(&w, &mats);
        let back = mats.geometry().wrench(&a.command);
        println!("wrench   {:?}", w.as_slice());
        println!("  speeds {:.1?}", a.command.omega);
        println!("  tilts  {:.3?} rad", a.command.alpha);
        println!("  round trip error {:.2e}, saturated {}", (back - w).norm(), a.saturated);
    }

    let a = allocate(&(hover * 50.0), &mats);
    println!("50x hover saturates: {}", a.saturated);
    Ok(())
}
