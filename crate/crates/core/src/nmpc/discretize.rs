//! Continuous-time Jacobians of the 19-state model and the RK4 shooting map
//! with its exact first-order sensitivities.

use nalgebra::{Matrix3x4, Matrix4, SMatrix};

use crate::math::{skew, split6, Mat3, Quat, Vec3, Vec6};
use crate::model::{dynamics_with_disturbance, StateVector, VehicleParams, VehicleState, WrenchRate};

pub type Mat19 = SMatrix<f64, 19, 19>;
pub type Mat19x6 = SMatrix<f64, 19, 6>;

const P: usize = 0;
const Q: usize = 3;
const V: usize = 7;
const W: usize = 10;
const F: usize = 13;
const T: usize = 16;

/// Derivative of `R(q/|q|)·v` with respect to the (not necessarily unit) `q`.
pub fn rotate_jacobian(q: &Quat, v: &Vec3) -> Matrix3x4<f64> {
    let n = q.norm();
    let qn = q.normalized();
    let (w, u) = (qn.w, qn.vector_part());
    // R(q)v = (w² − u·u)v + 2(u·v)u + 2w(u×v) for unit q
    let dw = 2.0 * w * v + 2.0 * u.cross(v);
    let du = -2.0 * v * u.transpose() + 2.0 * u.dot(v) * Mat3::identity() + 2.0 * u * v.transpose()
        - 2.0 * w * skew(v);
    let mut d = Matrix3x4::zeros();
    d.fixed_view_mut::<3, 1>(0, 0).copy_from(&dw);
    d.fixed_view_mut::<3, 3>(0, 1).copy_from(&du);
    let qv = qn.to_vector();
    let proj = (Matrix4::identity() - qv * qv.transpose()) / n;
    d * proj
}

/// `∂f/∂x` of the nominal dynamics with an additive body wrench.
pub fn state_jacobian(x: &VehicleState, params: &VehicleParams, disturbance: &Vec6) -> Mat19 {
    let (df, _) = split6(disturbance);
    let force = x.force + df;
    let jinv = params.inertia_inv();
    let mut a = Mat19::zeros();
    a.fixed_view_mut::<3, 3>(P, V).copy_from(&Mat3::identity());

    a.fixed_view_mut::<4, 4>(Q, Q).copy_from(&(0.5 * Quat::pure(&x.omega).right_matrix()));
    let lq = x.q.left_matrix();
    a.fixed_view_mut::<4, 3>(Q, W).copy_from(&(0.5 * lq.fixed_view::<4, 3>(0, 1)));

    a.fixed_view_mut::<3, 4>(V, Q)
        .copy_from(&(rotate_jacobian(&x.q, &force) / params.mass));
    let r = x.q.normalized().to_rotation_matrix();
    a.fixed_view_mut::<3, 3>(V, F).copy_from(&(r / params.mass));

    let j = params.inertia;
    let d_omega = jinv * (skew(&(j * x.omega)) - skew(&x.omega) * j);
    a.fixed_view_mut::<3, 3>(W, W).copy_from(&d_omega);
    a.fixed_view_mut::<3, 3>(W, F).copy_from(&(-jinv * skew(&params.com_offset)));
    a.fixed_view_mut::<3, 3>(W, T).copy_from(jinv);
    a
}

fn input_jacobian() -> Mat19x6 {
    let mut b = Mat19x6::zeros();
    b.fixed_view_mut::<6, 6>(F, 0).fill_with_identity();
    b
}

fn eval(x: &StateVector, u: &Vec6, params: &VehicleParams, dist: &Vec6) -> (StateVector, Mat19) {
    let s = VehicleState::from_vector(x);
    let d = dynamics_with_disturbance(&s, &WrenchRate::from_vector(u), params, dist);
    (d.to_vector(), state_jacobian(&s, params, dist))
}

/// One RK4 step of length `h` followed by quaternion normalization, with
/// the exact Jacobians of that map.
pub fn shooting_step(
    x: &StateVector,
    u: &Vec6,
    h: f64,
    params: &VehicleParams,
    dist: &Vec6,
) -> (StateVector, Mat19, Mat19x6) {
    let bc = input_jacobian();
    let id = Mat19::identity();

    let (k1, j1) = eval(x, u, params, dist);
    let dk1x = j1;
    let dk1u = bc;

    let (k2, j2) = eval(&(x + 0.5 * h * k1), u, params, dist);
    let dk2x = j2 * (id + 0.5 * h * dk1x);
    let dk2u = j2 * (0.5 * h * dk1u) + bc;

    let (k3, j3) = eval(&(x + 0.5 * h * k2), u, params, dist);
    let dk3x = j3 * (id + 0.5 * h * dk2x);
    let dk3u = j3 * (0.5 * h * dk2u) + bc;

    let (k4, j4) = eval(&(x + h * k3), u, params, dist);
    let dk4x = j4 * (id + h * dk3x);
    let dk4u = j4 * (h * dk3u) + bc;

    let mut next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let mut a = id + (h / 6.0) * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x);
    let mut b = (h / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);

    let q = next.fixed_rows::<4>(Q).into_owned();
    let n = q.norm();
    let qn = q / n;
    let proj = (Matrix4::identity() - qn * qn.transpose()) / n;
    next.fixed_rows_mut::<4>(Q).copy_from(&qn);
    let aq = proj * a.fixed_rows::<4>(Q);
    a.fixed_rows_mut::<4>(Q).copy_from(&aq);
    let bq = proj * b.fixed_rows::<4>(Q);
    b.fixed_rows_mut::<4>(Q).copy_from(&bq);
    (next, a, b)
}

/// The shooting map alone.
pub fn shooting_map(x: &StateVector, u: &Vec6, h: f64, params: &VehicleParams, dist: &Vec6) -> StateVector {
    let f = |s: &StateVector| {
        let st = VehicleState::from_vector(s);
        dynamics_with_disturbance(&st, &WrenchRate::from_vector(u), params, dist).to_vector()
    };
    let k1 = f(x);
    let k2 = f(&(x + 0.5 * h * k1));
    let k3 = f(&(x + 0.5 * h * k2));
    let k4 = f(&(x + h * k3));
    let mut next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    normalize_quaternion(&mut next);
    next
}

pub fn normalize_quaternion(x: &mut StateVector) {
    let q = x.fixed_rows::<4>(Q).into_owned();
    let n = q.norm();
    if n > 0.0 {
        x.fixed_rows_mut::<4>(Q).copy_from(&(q / n));
    }
}
