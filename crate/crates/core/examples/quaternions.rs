//! Quaternion conventions: Hamilton product, scalar first, body-to-world.

use omnihex::math::{geodesic_angle, quat_error, rotate, Quat, Vec3};

fn main() {
    let yaw = Quat::from_euler_zyx(0.0, 0.0, std::f64::consts::FRAC_PI_2);
    let body_x = Vec3::x();
    println!("body x axis after 90 deg yaw: {:?}", rotate(&body_x, &yaw).map(|c| (c * 1e12).round() / 1e12));

    let roll = Quat::from_axis_angle(&Vec3::x(), 0.3);
    let composed = yaw * roll;
    println!("yaw * roll = {composed:?}");
    println!("norm after product: {:.15}", composed.norm());

    // error is expressed in the body frame and vanishes for q and -q
    println!("error(roll, identity) = {:?}", quat_error(&roll, &Quat::IDENTITY));
    println!("error(q, -q) = {:?}", quat_error(&composed, &-composed));
    println!("geodesic angle yaw->roll: {:.4} rad", geodesic_angle(&yaw, &roll));
}
