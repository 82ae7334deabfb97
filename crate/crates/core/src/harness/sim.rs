//! Fixed-step closed loop: one controller call per control period, the
//! perturbed plant integrated at `plant_substeps` RK4 steps in between.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::allocation::{allocate, allocate_mismatched_scaled, AllocationMatrices};
use crate::ekf::{DisturbanceEkf, Observation, UpdateStatus};
use crate::error::Result;
use crate::l1::{L1Adaptive, L1State};
use crate::math::{quat_error, Quat, Vec3, Vec6};
use crate::model::{plant_with_params, rk4_step, VehicleState, WrenchRate};
use crate::nmpc::{NmpcSolver, OcpModel, RefPoint, SolverStatus};
use crate::pid::{ActiveController, BackupSupervisor, PidController};

use super::config::{Actuation, Config, MeasurementNoise};
use super::metrics::{mean_and_sem, rmse, RunMetrics};
use super::{ControllerKind, ExperimentSpec};

pub const FLAG_BACKUP: u8 = 1;
pub const FLAG_SATURATED: u8 = 2;
pub const FLAG_SOLVE_FAILED: u8 = 4;
pub const FLAG_NOT_CONVERGED: u8 = 8;
pub const FLAG_EKF_SKIPPED: u8 = 16;

/// Logged once per control step, at the start of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub state: VehicleState,
    pub reference: RefPoint,
    /// Wrench applied to the plant over the step (after actuation).
    pub wrench: Vec6,
    /// `u_L1` for the L1 controller, `[f_EKF; τ_EKF]` for the EKF one.
    pub estimate: Option<Vec6>,
    /// Unfiltered L1 estimate `σ̂`.
    pub sigma_hat: Option<Vec6>,
    pub solve_ms: Option<f64>,
    pub flags: u8,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: ExperimentSpec,
    pub metrics: RunMetrics,
    pub records: Vec<Record>,
    pub failure: Option<String>,
}

impl RunOutcome {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

fn actuate(w: &Vec6, cfg: &Config, alloc: &AllocationMatrices) -> (Vec6, bool) {
    let a = match cfg.plant.actuation {
        Actuation::Direct => return (*w, false),
        Actuation::Allocated => allocate(w, alloc),
        Actuation::Mismatched => allocate_mismatched_scaled(w, alloc, cfg.plant.mismatch_speed_scale),
    };
    (alloc.geometry().wrench(&a.command), a.saturated)
}

fn measure(x: &VehicleState, noise: &MeasurementNoise, rng: &mut ChaCha8Rng) -> VehicleState {
    if noise.position == 0.0 && noise.attitude == 0.0 && noise.velocity == 0.0 && noise.rate == 0.0 {
        return *x;
    }
    let mut draw = |s: f64| Vec3::from_fn(|_, _| s * rng.sample::<f64, _>(StandardNormal));
    let dp = draw(noise.position);
    let dth = draw(noise.attitude);
    let dv = draw(noise.velocity);
    let dw = draw(noise.rate);
    VehicleState {
        p: x.p + dp,
        q: (x.q * Quat::from_rotation_vector(&dth)).normalized(),
        v: x.v + dv,
        omega: x.omega + dw,
        ..*x
    }
}

fn start_state(r: &RefPoint) -> VehicleState {
    VehicleState { p: r.p, q: r.q, v: r.v, omega: r.omega, ..VehicleState::default() }
}

/// Runs one experiment. Configuration errors are returned as `Err`; a
/// diverging plant or a failing controller ends the run early and is
/// reported through [`RunOutcome::failure`] with partial metrics.
pub fn run_experiment(spec: &ExperimentSpec, cfg: &Config) -> Result<RunOutcome> {
    spec.validate()?;
    cfg.validate()?;
    let ts = cfg.control_period();
    let substeps = cfg.run.plant_substeps;
    let dt = ts / substeps as f64;
    let steps = (spec.duration / ts).round() as usize;

    let nominal = cfg.params()?;
    let alloc = cfg.allocation()?;
    let pert = cfg.perturbation(spec.group);
    let plant = nominal.perturbed(&pert)?;
    let traj = cfg.trajectory.with_period(spec.period);
    traj.validate()?;
    let solver_cfg = cfg.solver();
    let (interval, stages) = (solver_cfg.interval(), solver_cfg.stages);

    let r0 = traj.reference(0.0);
    let w_hover = nominal.hover_wrench(&r0.q);
    let mut x = start_state(&r0);
    let (w0, _) = actuate(&w_hover, cfg, &alloc);
    x = x.with_wrench(&w0);

    let mut mpc = NmpcSolver::new(cfg.weights(), cfg.constraints(), solver_cfg, OcpModel::new(nominal, alloc.clone()))?;
    let mut u_mpc = w_hover;
    let mut l1 = L1Adaptive::new(cfg.l1(), nominal, &x, w_hover)?;
    let mut ekf = DisturbanceEkf::new(cfg.ekf(), nominal, &x)?;
    let mut pid = PidController::new(cfg.pid, nominal, ts)?;
    let mut supervisor = BackupSupervisor::new(cfg.backup);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut records = Vec::with_capacity(steps);
    let mut metrics = RunMetrics::default();
    let mut solve_ms = Vec::new();
    let mut failure = None;

    for k in 0..steps {
        let t = k as f64 * ts;
        let meas = measure(&x, &cfg.run.noise, &mut rng);
        let refs = traj.window(t, interval, stages);
        let r = refs.0[0];
        let mut flags = 0u8;
        let mut estimate = None;
        let mut sigma_hat = None;
        let mut step_ms = None;

        if spec.controller == ControllerKind::Ekf {
            if ekf.update(&Observation::from(&meas)) == UpdateStatus::Skipped {
                flags |= FLAG_EKF_SKIPPED;
            }
            let d = ekf.state.disturbance();
            mpc.set_disturbance(d);
            estimate = Some(d);
        }

        let command = if spec.controller.uses_ocp() {
            let base = if spec.controller == ControllerKind::L1 { l1.state.u_mpc } else { u_mpc };
            let result = mpc.solve(&meas.with_wrench(&base), &refs);
            let u_ocp = match &result {
                Ok(sol) => {
                    let ms = sol.diagnostics.solve_time.as_secs_f64() * 1e3;
                    solve_ms.push(ms);
                    step_ms = Some(ms);
                    if sol.diagnostics.status != SolverStatus::Converged {
                        flags |= FLAG_NOT_CONVERGED;
                    }
                    sol.u0.to_vector()
                }
                Err(_) => {
                    flags |= FLAG_SOLVE_FAILED;
                    metrics.solver_failures += 1;
                    Vec6::zeros()
                }
            };
            let was_backup = supervisor.active() == ActiveController::Backup;
            let mode = supervisor.observe(result.is_ok(), cfg.backup.state_valid(&meas, &r));
            match mode {
                ActiveController::Primary => match spec.controller {
                    ControllerKind::L1 => match l1.step(&meas, &u_ocp) {
                        Ok(out) => {
                            estimate = Some(out.u_l1);
                            sigma_hat = Some(out.sigma_hat);
                            out.wrench
                        }
                        Err(e) => {
                            failure = Some(format!("adaptive law failed at t = {t:.2} s: {e}"));
                            break;
                        }
                    },
                    _ => {
                        u_mpc += u_ocp * ts;
                        u_mpc
                    }
                },
                ActiveController::Backup => {
                    if !was_backup {
                        pid.reset();
                    }
                    flags |= FLAG_BACKUP;
                    metrics.backup_steps += 1;
                    let w = pid.step(&meas, &r);
                    // hand over without a jump once the primary resumes
                    u_mpc = w;
                    l1.state = L1State::new(&meas, w);
                    mpc.reset();
                    w
                }
            }
        } else {
            pid.step(&meas, &r)
        };

        if spec.controller == ControllerKind::Ekf {
            ekf.predict(&command);
        }
        let (applied, saturated) = actuate(&command, cfg, &alloc);
        if saturated {
            flags |= FLAG_SATURATED;
            metrics.saturated_steps += 1;
        }
        records.push(Record {
            t,
            state: x,
            reference: r,
            wrench: applied,
            estimate,
            sigma_hat,
            solve_ms: step_ms,
            flags,
        });
        metrics.control_steps += 1;

        x = x.with_wrench(&applied);
        for _ in 0..substeps {
            x = rk4_step(&x, &WrenchRate::ZERO, dt, |s, u| {
                plant_with_params(s, u, &plant, pert.wrench_distortion)
            });
            metrics.plant_steps += 1;
        }
        if !x.is_finite() || x.p.norm() > cfg.plant.divergence_bound {
            failure = Some(format!("plant diverged at t = {:.2} s", t + ts));
            break;
        }
    }
    assert_eq!(metrics.plant_steps, metrics.control_steps * substeps, "one controller call per {substeps} plant steps");

    metrics.backup_engagements = supervisor.engagements();
    if !solve_ms.is_empty() {
        metrics.mean_solve_ms = solve_ms.iter().sum::<f64>() / solve_ms.len() as f64;
        metrics.max_solve_ms = solve_ms.iter().cloned().fold(0.0, f64::max);
    }
    let window: Vec<&Record> = records.iter().filter(|r| r.t >= cfg.run.settle_time).collect();
    if !window.is_empty() {
        let pos: Vec<Vec3> = window.iter().map(|r| r.reference.p - r.state.p).collect();
        let att: Vec<Vec3> = window.iter().map(|r| quat_error(&r.state.q, &r.reference.q)).collect();
        metrics.position_rmse = rmse(&pos)?;
        metrics.attitude_rmse = rmse(&att)?;
        for axis in 0..3 {
            let e: Vec<nalgebra::Vector1<f64>> = pos.iter().map(|p| nalgebra::Vector1::new(p[axis])).collect();
            metrics.axis_rmse[axis] = rmse(&e)?;
        }
        let z: Vec<f64> = pos.iter().map(|p| p.z).collect();
        (metrics.mean_z_error, metrics.z_error_sem) = mean_and_sem(&z)?;
    }
    metrics.failed = failure.is_some();
    Ok(RunOutcome { spec: *spec, metrics, records, failure })
}

/// CSV column names for a controller.
pub fn csv_header(controller: ControllerKind) -> Vec<String> {
    let mut h: Vec<String> = [
        "t", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz", "px_ref", "py_ref",
        "pz_ref", "qw_ref", "qx_ref", "qy_ref", "qz_ref", "fx", "fy", "fz", "tx", "ty", "tz",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let prefix = match controller {
        ControllerKind::L1 => Some("u_l1"),
        ControllerKind::Ekf => Some("ekf"),
        _ => None,
    };
    if let Some(p) = prefix {
        h.extend(["fx", "fy", "fz", "tx", "ty", "tz"].iter().map(|s| format!("{p}_{s}")));
    }
    h.push("solve_ms".into());
    h.push("flags".into());
    h
}

/// Writes the time series. Solve times are included only with `timing`.
pub fn write_csv<W: Write>(out: W, outcome: &RunOutcome, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header = csv_header(outcome.spec.controller);
    w.write_record(&header)?;
    let with_estimate = header.len() > 29;
    for rec in &outcome.records {
        let s = &rec.state;
        let r = &rec.reference;
        let mut row: Vec<f64> = vec![rec.t];
        row.extend(s.p.iter());
        row.extend([s.q.w, s.q.x, s.q.y, s.q.z]);
        row.extend(s.v.iter());
        row.extend(s.omega.iter());
        row.extend(r.p.iter());
        row.extend([r.q.w, r.q.x, r.q.y, r.q.z]);
        row.extend(rec.wrench.iter());
        if with_estimate {
            row.extend(rec.estimate.unwrap_or_else(Vec6::zeros).iter());
        }
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(match (timing, rec.solve_ms) {
            (true, Some(ms)) => format!("{ms:.4}"),
            _ => String::new(),
        });
        fields.push(rec.flags.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Group;

    fn quick(controller: ControllerKind, group: Group) -> RunOutcome {
        let spec = ExperimentSpec::new(group, controller, 15.0, 0.5);
        run_experiment(&spec, &Config::default()).unwrap()
    }

    #[test]
    fn step_counts_match_rates() {
        let out = quick(ControllerKind::Pid, Group::A);
        assert!(!out.failed());
        assert_eq!(out.metrics.control_steps, 50);
        assert_eq!(out.metrics.plant_steps, 500);
        assert_eq!(out.records.len(), 50);
        assert!((out.records[49].t - 0.49).abs() < 1e-12);
    }

    #[test]
    fn header_layout() {
        assert_eq!(csv_header(ControllerKind::Nominal).len(), 29);
        assert_eq!(csv_header(ControllerKind::L1).len(), 35);
        assert_eq!(csv_header(ControllerKind::Ekf)[27], "ekf_fx");
    }

    #[test]
    fn csv_rows_match_records() {
        let out = quick(ControllerKind::L1, Group::B);
        let mut buf = Vec::new();
        write_csv(&mut buf, &out, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), out.records.len() + 1);
        assert!(lines.iter().all(|l| l.split(',').count() == 35));
    }

    #[test]
    fn divergence_is_reported() {
        let mut cfg = Config::default();
        cfg.plant.divergence_bound = 2.05;
        let spec = ExperimentSpec::new(Group::A, ControllerKind::Pid, 15.0, 5.0);
        let out = run_experiment(&spec, &cfg).unwrap();
        assert!(out.failed());
        assert!(out.metrics.failed);
        assert!(out.records.len() < 500);
    }
}
