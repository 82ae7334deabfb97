//! Receding-horizon optimal control of the 19-state wrench-rate model.
//!
//! The problem is transcribed by direct multiple shooting with RK4 intervals
//! of length `T/N` and solved by Gauss-Newton SQP. Each subproblem is
//! condensed onto the controls and solved as a box-constrained QP, so the
//! wrench-rate bounds hold exactly. Velocity, body-rate and rotor-thrust
//! limits enter the cost as a quadratic penalty on their violation.

pub mod discretize;
mod qp;

use std::time::{Duration, Instant};

use nalgebra::{DVector, SMatrix, SVector};

use crate::allocation::AllocationMatrices;
use crate::error::{Error, Result};
use crate::math::{quat_error, Quat, Vec3, Vec6};
use crate::model::{StateVector, VehicleParams, VehicleState, WrenchRate, STATE_DIM};
use discretize::{normalize_quaternion, shooting_map, shooting_step, Mat19};
pub use qp::{solve_box_qp, BoxQpStatus};
use qp::LinearizedOcp;

pub const ERROR_DIM: usize = 18;
pub type ErrorVector = SVector<f64, ERROR_DIM>;
type ErrorJacobian = SMatrix<f64, ERROR_DIM, STATE_DIM>;
type HJacobian = SMatrix<f64, 12, STATE_DIM>;

/// Diagonal weights of the stage error `e`, the terminal error and the
/// control. The cost is `Σ eᵀQe + uᵀRu + e_NᵀQ_N e_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcpWeights {
    pub stage: ErrorVector,
    pub terminal: ErrorVector,
    pub control: Vec6,
}

impl OcpWeights {
    /// Uniform per-block weights. The terminal weight scales the tracking
    /// blocks by `terminal_scale` and keeps the wrench block.
    pub fn from_blocks(
        position: f64,
        attitude: f64,
        velocity: f64,
        angular_velocity: f64,
        wrench: f64,
        control: f64,
        terminal_scale: f64,
    ) -> Self {
        let mut stage = ErrorVector::zeros();
        for (block, w) in [position, attitude, velocity, angular_velocity, wrench, wrench]
            .into_iter()
            .enumerate()
        {
            stage.fixed_rows_mut::<3>(3 * block).fill(w);
        }
        let mut terminal = stage;
        terminal.fixed_rows_mut::<12>(0).scale_mut(terminal_scale);
        Self { stage, terminal, control: Vec6::from_element(control) }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.stage.iter().chain(self.terminal.iter()).chain(self.control.iter())
            .all(|w| w.is_finite() && *w >= 0.0);
        if !ok {
            return Err(Error::InvalidConfig("OCP weights must be finite and non-negative".into()));
        }
        if self.control.iter().any(|w| *w <= 0.0) {
            return Err(Error::InvalidConfig("control weights must be positive".into()));
        }
        Ok(())
    }
}

impl Default for OcpWeights {
    fn default() -> Self {
        Self::from_blocks(40.0, 40.0, 4.0, 4.0, 1e-3, 1e-4, 10.0)
    }
}

/// Hard bounds on the wrench rate and soft bounds on world velocity, body
/// rate and the per-rotor quantity `F_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    pub u_lb: Vec6,
    pub u_ub: Vec6,
    pub velocity_lb: Vec3,
    pub velocity_ub: Vec3,
    pub omega_lb: Vec3,
    pub omega_ub: Vec3,
    pub thrust_lb: f64,
    pub thrust_ub: f64,
}

impl ConstraintSet {
    pub fn validate(&self) -> Result<()> {
        let pairs = self.u_lb.iter().zip(self.u_ub.iter())
            .chain(self.velocity_lb.iter().zip(self.velocity_ub.iter()))
            .chain(self.omega_lb.iter().zip(self.omega_ub.iter()))
            .chain(std::iter::once((&self.thrust_lb, &self.thrust_ub)));
        for (lb, ub) in pairs {
            if lb.is_nan() || ub.is_nan() || lb > ub {
                return Err(Error::InvalidConfig(format!("constraint bounds out of order: {lb} > {ub}")));
            }
        }
        Ok(())
    }

    fn h_bounds(&self) -> (SVector<f64, 12>, SVector<f64, 12>) {
        let mut lb = SVector::<f64, 12>::zeros();
        let mut ub = SVector::<f64, 12>::zeros();
        lb.fixed_rows_mut::<3>(0).copy_from(&self.velocity_lb);
        ub.fixed_rows_mut::<3>(0).copy_from(&self.velocity_ub);
        lb.fixed_rows_mut::<3>(3).copy_from(&self.omega_lb);
        ub.fixed_rows_mut::<3>(3).copy_from(&self.omega_ub);
        lb.fixed_rows_mut::<6>(6).fill(self.thrust_lb);
        ub.fixed_rows_mut::<6>(6).fill(self.thrust_ub);
        (lb, ub)
    }
}

impl Default for ConstraintSet {
    fn default() -> Self {
        let u = Vec6::new(100.0, 100.0, 100.0, 20.0, 20.0, 20.0);
        Self {
            u_lb: -u,
            u_ub: u,
            velocity_lb: Vec3::from_element(-5.0),
            velocity_ub: Vec3::from_element(5.0),
            omega_lb: Vec3::from_element(-3.0),
            omega_ub: Vec3::from_element(3.0),
            thrust_lb: 0.0,
            thrust_ub: 400.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Prediction horizon in seconds.
    pub horizon: f64,
    pub stages: usize,
    /// One iteration gives the real-time-iteration scheme.
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    /// Weight `ρ` of the soft-constraint penalty `ρ‖h − clamp(h)‖²`.
    pub penalty_weight: f64,
    pub warm_start: bool,
    /// How many shooting intervals the previous solution is shifted by
    /// between calls. The closed loop uses `control period / (T/N)`.
    pub warm_start_shift: f64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stages < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 stages, got {}", self.stages)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.penalty_weight >= 0.0) || !(self.kkt_tolerance > 0.0) {
            return Err(Error::InvalidConfig("penalty weight and KKT tolerance must be positive".into()));
        }
        if !(self.warm_start_shift >= 0.0) {
            return Err(Error::InvalidConfig("warm-start shift must be non-negative".into()));
        }
        Ok(())
    }

    pub fn interval(&self) -> f64 {
        self.horizon / self.stages as f64
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            stages: 20,
            max_iterations: 3,
            kkt_tolerance: 1e-6,
            penalty_weight: 100.0,
            warm_start: true,
            warm_start_shift: 1.0,
        }
    }
}

/// One reference sample. `accel` is only used as a feedforward by the PID.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RefPoint {
    pub p: Vec3,
    pub q: Quat,
    pub v: Vec3,
    pub omega: Vec3,
    pub accel: Vec3,
}

impl RefPoint {
    pub fn hover(p: Vec3) -> Self {
        Self { p, ..Self::default() }
    }
}

/// References at the `N + 1` shooting nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceWindow(pub Vec<RefPoint>);

impl ReferenceWindow {
    pub fn constant(point: RefPoint, stages: usize) -> Self {
        Self(vec![point; stages + 1])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Prediction model used inside the OCP: nominal parameters, an additive
/// body wrench (zero unless an estimator supplies one) and the allocation
/// matrices for the rotor-thrust constraint.
#[derive(Debug, Clone)]
pub struct OcpModel {
    pub params: VehicleParams,
    pub disturbance: Vec6,
    pub allocation: AllocationMatrices,
}

impl OcpModel {
    pub fn new(params: VehicleParams, allocation: AllocationMatrices) -> Self {
        Self { params, disturbance: Vec6::zeros(), allocation }
    }
}

/// `[p_ref − p, quat_error(q, q_ref), v_ref − v, ω_ref − ω, f_a, τ_a]`.
pub fn stage_error(x: &VehicleState, r: &RefPoint) -> ErrorVector {
    let mut e = ErrorVector::zeros();
    e.fixed_rows_mut::<3>(0).copy_from(&(r.p - x.p));
    e.fixed_rows_mut::<3>(3).copy_from(&quat_error(&x.q, &r.q));
    e.fixed_rows_mut::<3>(6).copy_from(&(r.v - x.v));
    e.fixed_rows_mut::<3>(9).copy_from(&(r.omega - x.omega));
    e.fixed_rows_mut::<3>(12).copy_from(&x.force);
    e.fixed_rows_mut::<3>(15).copy_from(&x.torque);
    e
}

fn stage_error_jacobian(x: &VehicleState, r: &RefPoint) -> ErrorJacobian {
    let mut j = ErrorJacobian::zeros();
    let rinv = r.q.inverse();
    let sign = if (x.q * rinv).w < 0.0 { -1.0 } else { 1.0 };
    let dq = sign * rinv.right_matrix();
    j.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    j.fixed_view_mut::<3, 3>(0, 0).neg_mut();
    j.fixed_view_mut::<3, 4>(3, 3).copy_from(&dq.fixed_view::<3, 4>(1, 0));
    for (row, col) in [(6, 7), (9, 10)] {
        j.fixed_view_mut::<3, 3>(row, col).fill_with_identity();
        j.fixed_view_mut::<3, 3>(row, col).neg_mut();
    }
    j.fixed_view_mut::<6, 6>(12, 13).fill_with_identity();
    j
}

/// Soft-constrained quantities `h = [v, ω, F]` and their Jacobian.
fn h_function(x: &VehicleState, alloc: &AllocationMatrices) -> (SVector<f64, 12>, HJacobian) {
    let mut h = SVector::<f64, 12>::zeros();
    let mut jac = HJacobian::zeros();
    h.fixed_rows_mut::<3>(0).copy_from(&x.v);
    h.fixed_rows_mut::<3>(3).copy_from(&x.omega);
    jac.fixed_view_mut::<3, 3>(0, 7).fill_with_identity();
    jac.fixed_view_mut::<3, 3>(3, 10).fill_with_identity();
    let pinv = alloc.b_pinv();
    let y = pinv * x.wrench();
    for j in 0..6 {
        let (a, b) = (y[2 * j], y[2 * j + 1]);
        h[6 + j] = a * a + b * b;
        let row = 2.0 * a * pinv.row(2 * j) + 2.0 * b * pinv.row(2 * j + 1);
        jac.fixed_view_mut::<1, 6>(6 + j, 13).copy_from(&row);
    }
    (h, jac)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    pub status: SolverStatus,
    /// KKT residual at the last linearization.
    pub kkt: f64,
    pub iterations: usize,
    pub solve_time: Duration,
    /// Objective (including penalty) of the returned iterate.
    pub cost: f64,
    /// `cost + μ Σ‖defect‖₁` of the returned iterate and of the initial
    /// guess, both at the final penalty parameter `μ`.
    pub merit: f64,
    pub initial_merit: f64,
    /// Largest soft-constraint violation along the returned trajectory.
    pub h_violation: f64,
}

impl SolveDiagnostics {
    pub fn degraded(&self) -> bool {
        self.status != SolverStatus::Converged
    }
}

/// Multiple-shooting trajectory: `N + 1` states and `N` controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<StateVector>,
    pub controls: Vec<Vec6>,
}

impl Trajectory {
    /// Zero controls, every node at `x0`.
    pub fn cold_start(x0: &VehicleState, stages: usize) -> Self {
        Self { states: vec![x0.to_vector(); stages + 1], controls: vec![Vec6::zeros(); stages] }
    }

    pub fn stages(&self) -> usize {
        self.controls.len()
    }
}

/// Shifts by exactly one stage and duplicates the tail.
pub fn shift_warm_start(prev: &Trajectory) -> Trajectory {
    shift_warm_start_by(prev, 1.0)
}

/// Shifts by a (possibly fractional) number of stages, interpolating
/// linearly between nodes and holding the last node past the end.
pub fn shift_warm_start_by(prev: &Trajectory, shift: f64) -> Trajectory {
    fn sample<const D: usize>(seq: &[SVector<f64, D>], t: f64) -> SVector<f64, D> {
        let last = seq.len() - 1;
        if t >= last as f64 {
            return seq[last];
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        if frac == 0.0 {
            seq[i]
        } else {
            seq[i] * (1.0 - frac) + seq[i + 1] * frac
        }
    }
    let states = (0..prev.states.len())
        .map(|k| {
            let mut x = sample(&prev.states, k as f64 + shift);
            normalize_quaternion(&mut x);
            x
        })
        .collect();
    let controls = (0..prev.controls.len()).map(|k| sample(&prev.controls, k as f64 + shift)).collect();
    Trajectory { states, controls }
}

#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub u0: WrenchRate,
    pub trajectory: Trajectory,
    pub diagnostics: SolveDiagnostics,
}

struct Problem<'a> {
    refs: &'a [RefPoint],
    weights: &'a OcpWeights,
    cfg: &'a SolverConfig,
    model: &'a OcpModel,
    h_lb: SVector<f64, 12>,
    h_ub: SVector<f64, 12>,
}

impl Problem<'_> {
    fn node_weight(&self, k: usize) -> &ErrorVector {
        if k == self.cfg.stages { &self.weights.terminal } else { &self.weights.stage }
    }

    fn violation(&self, h: &SVector<f64, 12>) -> SVector<f64, 12> {
        SVector::from_fn(|i, _| h[i] - h[i].clamp(self.h_lb[i], self.h_ub[i]))
    }

    fn node_cost(&self, k: usize, x: &StateVector) -> f64 {
        let s = VehicleState::from_vector(x);
        let e = stage_error(&s, &self.refs[k]);
        let (h, _) = h_function(&s, &self.model.allocation);
        e.component_mul(&e).dot(self.node_weight(k))
            + self.cfg.penalty_weight * self.violation(&h).norm_squared()
    }

    /// Objective over the decision variables (the fixed initial node adds a
    /// constant and is left out).
    fn cost(&self, traj: &Trajectory) -> f64 {
        let nodes: f64 = (1..=self.cfg.stages).map(|k| self.node_cost(k, &traj.states[k])).sum();
        let controls: f64 = traj.controls.iter().map(|u| u.component_mul(u).dot(&self.weights.control)).sum();
        nodes + controls
    }

    fn defects(&self, traj: &Trajectory) -> Vec<StateVector> {
        let h = self.cfg.interval();
        (0..self.cfg.stages)
            .map(|k| {
                shooting_map(&traj.states[k], &traj.controls[k], h, &self.model.params, &self.model.disturbance)
                    - traj.states[k + 1]
            })
            .collect()
    }

    fn max_violation(&self, traj: &Trajectory) -> f64 {
        traj.states[1..]
            .iter()
            .map(|x| {
                let (h, _) = h_function(&VehicleState::from_vector(x), &self.model.allocation);
                self.violation(&h).amax()
            })
            .fold(0.0, f64::max)
    }

    fn linearize(&self, traj: &Trajectory) -> LinearizedOcp {
        let n = self.cfg.stages;
        let dt = self.cfg.interval();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut defect = Vec::with_capacity(n);
        for k in 0..n {
            let (next, ak, bk) =
                shooting_step(&traj.states[k], &traj.controls[k], dt, &self.model.params, &self.model.disturbance);
            a.push(ak);
            b.push(bk);
            defect.push(next - traj.states[k + 1]);
        }
        let mut hess = vec![Mat19::zeros(); n + 1];
        let mut grad = vec![StateVector::zeros(); n + 1];
        let rho = self.cfg.penalty_weight;
        for k in 1..=n {
            let s = VehicleState::from_vector(&traj.states[k]);
            let e = stage_error(&s, &self.refs[k]);
            let je = stage_error_jacobian(&s, &self.refs[k]);
            let w = self.node_weight(k);
            let wje = SMatrix::<f64, ERROR_DIM, STATE_DIM>::from_fn(|r, c| w[r] * je[(r, c)]);
            let mut hk = 2.0 * je.transpose() * wje;
            let mut gk = 2.0 * wje.transpose() * e;
            let (h, mut jh) = h_function(&s, &self.model.allocation);
            let viol = self.violation(&h);
            for i in 0..12 {
                if viol[i] == 0.0 {
                    jh.row_mut(i).fill(0.0);
                }
            }
            hk += 2.0 * rho * jh.transpose() * jh;
            gk += 2.0 * rho * jh.transpose() * viol;
            hess[k] = hk;
            grad[k] = gk;
        }
        let r_hess = 2.0 * self.weights.control;
        let r_grad = traj.controls.iter().map(|u| r_hess.component_mul(u)).collect();
        LinearizedOcp { a, b, defect, hess, grad, r_hess, r_grad }
    }
}

fn l1_norm_sum(v: &[StateVector]) -> f64 {
    v.iter().map(|d| d.lp_norm(1)).sum()
}

fn trajectory_is_finite(traj: &Trajectory) -> bool {
    traj.states.iter().all(|x| x.iter().all(|v| v.is_finite()))
        && traj.controls.iter().all(|u| u.iter().all(|v| v.is_finite()))
}

/// Gauss-Newton SQP on the multiple-shooting problem starting from `guess`
/// (cold start when `None`). Node 0 is pinned to `x0`.
pub fn solve_ocp(
    x0: &VehicleState,
    refs: &ReferenceWindow,
    weights: &OcpWeights,
    constraints: &ConstraintSet,
    cfg: &SolverConfig,
    model: &OcpModel,
    guess: Option<&Trajectory>,
) -> Result<OcpSolution> {
    const ARMIJO: f64 = 1e-4;
    const BACKTRACK: f64 = 0.5;
    const MAX_BACKTRACKS: usize = 8;

    let start = Instant::now();
    let n = cfg.stages;
    if refs.len() != n + 1 {
        return Err(Error::InvalidConfig(format!(
            "reference window has {} points, expected {}",
            refs.len(),
            n + 1
        )));
    }
    if !x0.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let (h_lb, h_ub) = constraints.h_bounds();
    let prob = Problem { refs: &refs.0, weights, cfg, model, h_lb, h_ub };

    let mut traj = match guess {
        Some(g) if g.stages() == n => g.clone(),
        _ => Trajectory::cold_start(x0, n),
    };
    traj.states[0] = x0.to_vector();
    for u in traj.controls.iter_mut() {
        *u = u.zip_zip_map(&constraints.u_lb, &constraints.u_ub, |v, lo, hi| v.clamp(lo, hi));
    }
    if !trajectory_is_finite(&traj) {
        return Err(Error::NonFiniteIterate);
    }

    let mut cost = prob.cost(&traj);
    let mut defects = prob.defects(&traj);
    let (initial_cost, initial_infeas) = (cost, l1_norm_sum(&defects));
    let mut mu = 0.0_f64;
    let mut status = SolverStatus::MaxIterations;
    let mut kkt = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..cfg.max_iterations {
        let lin = prob.linearize(&traj);
        let (h, g) = lin.condense();
        let lo = DVector::from_fn(6 * n, |i, _| constraints.u_lb[i % 6] - traj.controls[i / 6][i % 6]);
        let hi = DVector::from_fn(6 * n, |i, _| constraints.u_ub[i % 6] - traj.controls[i / 6][i % 6]);

        let projected = (0..6 * n)
            .map(|i| {
                if (lo[i] >= 0.0 && g[i] > 0.0) || (hi[i] <= 0.0 && g[i] < 0.0) { 0.0 } else { g[i].abs() }
            })
            .fold(0.0, f64::max);
        let defect_inf = lin.defect.iter().map(|d| d.amax()).fold(0.0, f64::max);
        kkt = projected.max(defect_inf);
        if !kkt.is_finite() {
            return Err(Error::NonFiniteIterate);
        }
        if kkt <= cfg.kkt_tolerance {
            status = SolverStatus::Converged;
            break;
        }
        iterations += 1;

        let (du, _) = solve_box_qp(&h, &g, &lo, &hi, &DVector::zeros(6 * n));
        let dx = lin.rollout(&du);
        let lambda = lin.multipliers(&dx);
        let lam_inf = lambda.iter().map(|l| l.amax()).fold(0.0, f64::max);
        mu = mu.max(1.1 * lam_inf);

        let infeas = l1_norm_sum(&defects);
        let merit0 = cost + mu * infeas;
        let slope = (1..=n).map(|k| lin.grad[k].dot(&dx[k])).sum::<f64>()
            + (0..n).map(|k| lin.r_grad[k].dot(&du.fixed_rows::<6>(6 * k))).sum::<f64>()
            - mu * infeas;

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let mut cand = traj.clone();
            for k in 0..n {
                let step = du.fixed_rows::<6>(6 * k) * alpha;
                cand.controls[k] = (cand.controls[k] + step)
                    .zip_zip_map(&constraints.u_lb, &constraints.u_ub, |v, lo, hi| v.clamp(lo, hi));
                cand.states[k + 1] += alpha * dx[k + 1];
                normalize_quaternion(&mut cand.states[k + 1]);
            }
            if !trajectory_is_finite(&cand) {
                return Err(Error::NonFiniteIterate);
            }
            let cand_cost = prob.cost(&cand);
            let cand_defects = prob.defects(&cand);
            let merit = cand_cost + mu * l1_norm_sum(&cand_defects);
            if !merit.is_finite() {
                return Err(Error::NonFiniteIterate);
            }
            if merit <= merit0 + ARMIJO * alpha * slope.min(0.0) {
                accepted = Some((cand, cand_cost, cand_defects));
                break;
            }
            alpha *= BACKTRACK;
        }
        match accepted {
            Some((cand, c, d)) => {
                traj = cand;
                cost = c;
                defects = d;
            }
            None => {
                status = SolverStatus::LineSearchFailed;
                break;
            }
        }
    }

    let u0 = WrenchRate::from_vector(&traj.controls[0]);
    let diagnostics = SolveDiagnostics {
        status,
        kkt,
        iterations,
        solve_time: start.elapsed(),
        cost,
        merit: cost + mu * l1_norm_sum(&defects),
        initial_merit: initial_cost + mu * initial_infeas,
        h_violation: prob.max_violation(&traj),
    };
    Ok(OcpSolution { u0, trajectory: traj, diagnostics })
}

/// Stateful receding-horizon controller holding the warm start.
#[derive(Debug, Clone)]
pub struct NmpcSolver {
    pub weights: OcpWeights,
    pub constraints: ConstraintSet,
    pub config: SolverConfig,
    pub model: OcpModel,
    previous: Option<Trajectory>,
}

impl NmpcSolver {
    pub fn new(
        weights: OcpWeights,
        constraints: ConstraintSet,
        config: SolverConfig,
        model: OcpModel,
    ) -> Result<Self> {
        weights.validate()?;
        constraints.validate()?;
        config.validate()?;
        Ok(Self { weights, constraints, config, model, previous: None })
    }

    /// Additive body wrench used by the prediction model.
    pub fn set_disturbance(&mut self, wrench: Vec6) {
        self.model.disturbance = wrench;
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub fn solve(&mut self, x0: &VehicleState, refs: &ReferenceWindow) -> Result<OcpSolution> {
        let guess = if self.config.warm_start {
            self.previous.as_ref().map(|p| shift_warm_start_by(p, self.config.warm_start_shift))
        } else {
            None
        };
        let result = solve_ocp(
            x0,
            refs,
            &self.weights,
            &self.constraints,
            &self.config,
            &self.model,
            guess.as_ref(),
        );
        match &result {
            Ok(sol) => self.previous = Some(sol.trajectory.clone()),
            Err(_) => self.previous = None,
        }
        result
    }
}
