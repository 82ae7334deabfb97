//! Flight-control laboratory for an overactuated tiltrotor hexacopter:
//! quaternion rigid-body model, control allocation, NMPC with an L1
//! adaptive augmentation, an EKF disturbance-estimating variant, a PID
//! backup and a closed-loop experiment harness.

// `!(x > 0.0)` style checks reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod ekf;
pub mod error;
pub mod harness;
pub mod l1;
pub mod math;
pub mod model;
pub mod nmpc;
pub mod pid;

pub use error::{Error, Result};
