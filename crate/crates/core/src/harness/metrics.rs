//! Tracking-error statistics.

use nalgebra::SVector;
use serde::Serialize;

use crate::error::{Error, Result};

/// `sqrt(mean ‖e‖²)`.
pub fn rmse<const D: usize>(errors: &[SVector<f64, D>]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("rmse of an empty sequence"));
    }
    let sum: f64 = errors.iter().map(|e| e.norm_squared()).sum();
    Ok((sum / errors.len() as f64).sqrt())
}

/// `100·(1 − adaptive/nominal)`.
pub fn reduction_percent(adaptive: f64, nominal: f64) -> f64 {
    100.0 * (1.0 - adaptive / nominal)
}

/// Mean and standard error of the mean.
pub fn mean_and_sem(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("mean of an empty sequence"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Ok((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunMetrics {
    pub position_rmse: f64,
    /// RMSE of the norm of the attitude error vector.
    pub attitude_rmse: f64,
    pub axis_rmse: [f64; 3],
    /// Mean of `p_ref,z − p_z`.
    pub mean_z_error: f64,
    pub z_error_sem: f64,
    pub mean_solve_ms: f64,
    pub max_solve_ms: f64,
    /// Control steps with a saturated allocation.
    pub saturated_steps: usize,
    pub solver_failures: usize,
    pub backup_engagements: usize,
    pub backup_steps: usize,
    pub control_steps: usize,
    pub plant_steps: usize,
    pub failed: bool,
}
