//! Condensing of the multiple-shooting QP subproblem and a projected-Newton
//! solver for the resulting box-constrained dense QP.

use nalgebra::{DMatrix, DVector};

use super::discretize::{Mat19, Mat19x6};
use crate::math::Vec6;
use crate::model::StateVector;

/// Gauss-Newton QP around a shooting trajectory. Node 0 is fixed; stage
/// quantities at index `k` refer to shooting interval `k`, node quantities
/// (`hess`, `grad`) to node `k` (entry 0 unused).
#[derive(Debug, Clone)]
pub(crate) struct LinearizedOcp {
    pub a: Vec<Mat19>,
    pub b: Vec<Mat19x6>,
    /// Shooting defects `Φ(x_k, u_k) − x_{k+1}`.
    pub defect: Vec<StateVector>,
    pub hess: Vec<Mat19>,
    pub grad: Vec<StateVector>,
    /// Control Hessian and gradient per stage (diagonal Hessian).
    pub r_hess: Vec6,
    pub r_grad: Vec<Vec6>,
}

impl LinearizedOcp {
    pub fn stages(&self) -> usize {
        self.a.len()
    }

    /// Affine part of the state trajectory at `δu = 0`.
    fn free_response(&self) -> Vec<StateVector> {
        let n = self.stages();
        let mut c = vec![StateVector::zeros(); n + 1];
        for k in 0..n {
            c[k + 1] = self.a[k] * c[k] + self.defect[k];
        }
        c
    }

    /// Dense reduced Hessian and gradient in the stacked `δu`.
    pub fn condense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.stages();
        let dim = 6 * n;
        let c = self.free_response();

        // P_k = W_k + A_kᵀ P_{k+1} A_k,  p_k = w_k + W_k c_k + A_kᵀ p_{k+1}
        let mut pm = vec![Mat19::zeros(); n + 1];
        let mut pv = vec![StateVector::zeros(); n + 1];
        pm[n] = self.hess[n];
        pv[n] = self.grad[n] + self.hess[n] * c[n];
        for k in (1..n).rev() {
            pm[k] = self.hess[k] + self.a[k].transpose() * pm[k + 1] * self.a[k];
            pv[k] = self.grad[k] + self.hess[k] * c[k] + self.a[k].transpose() * pv[k + 1];
        }

        let mut h = DMatrix::zeros(dim, dim);
        let mut g = DVector::zeros(dim);
        for j in 0..n {
            let gj = self.r_grad[j] + self.b[j].transpose() * pv[j + 1];
            g.fixed_rows_mut::<6>(6 * j).copy_from(&gj);

            let mut s: Mat19x6 = pm[j + 1] * self.b[j];
            let mut hjj = self.b[j].transpose() * s;
            for d in 0..6 {
                hjj[(d, d)] += self.r_hess[d];
            }
            h.fixed_view_mut::<6, 6>(6 * j, 6 * j).copy_from(&hjj);
            for i in (0..j).rev() {
                s = self.a[i + 1].transpose() * s;
                let hij = self.b[i].transpose() * s;
                h.fixed_view_mut::<6, 6>(6 * i, 6 * j).copy_from(&hij);
                h.fixed_view_mut::<6, 6>(6 * j, 6 * i).copy_from(&hij.transpose());
            }
        }
        (h, g)
    }

    /// State increments produced by a control increment.
    pub fn rollout(&self, du: &DVector<f64>) -> Vec<StateVector> {
        let n = self.stages();
        let mut dx = vec![StateVector::zeros(); n + 1];
        for k in 0..n {
            let duk = du.fixed_rows::<6>(6 * k).into_owned();
            dx[k + 1] = self.a[k] * dx[k] + self.b[k] * duk + self.defect[k];
        }
        dx
    }

    /// Multipliers of the dynamics constraints at the QP solution.
    pub fn multipliers(&self, dx: &[StateVector]) -> Vec<StateVector> {
        let n = self.stages();
        let mut lam = vec![StateVector::zeros(); n + 1];
        lam[n] = self.hess[n] * dx[n] + self.grad[n];
        for k in (1..n).rev() {
            lam[k] = self.hess[k] * dx[k] + self.grad[k] + self.a[k].transpose() * lam[k + 1];
        }
        lam
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxQpStatus {
    Converged,
    AllClamped,
    MaxIterations,
    NoDescent,
    LineSearchFailed,
    Indefinite,
}

/// Minimizes `½xᵀHx + gᵀx` over `lo ≤ x ≤ hi` by projected Newton steps on
/// the free variables with an Armijo search along the projection arc.
pub fn solve_box_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    x0: &DVector<f64>,
) -> (DVector<f64>, BoxQpStatus) {
    const MAX_ITER: usize = 100;
    const MIN_GRAD: f64 = 1e-11;
    const MIN_REL_IMPROVE: f64 = 1e-14;
    const ARMIJO: f64 = 0.1;
    const STEP_DEC: f64 = 0.6;
    const MIN_STEP: f64 = 1e-22;

    let n = g.len();
    let clamp = |x: &DVector<f64>| DVector::from_fn(n, |i, _| x[i].clamp(lo[i], hi[i]));
    let value = |x: &DVector<f64>| 0.5 * x.dot(&(h * x)) + g.dot(x);

    let mut x = clamp(x0);
    let mut val = value(&x);
    let mut status = BoxQpStatus::MaxIterations;
    let mut old_val = f64::INFINITY;

    for _ in 0..MAX_ITER {
        if (old_val - val).abs() <= MIN_REL_IMPROVE * val.abs().max(1.0) && old_val.is_finite() {
            status = BoxQpStatus::Converged;
            break;
        }
        old_val = val;

        let grad = g + h * &x;
        let clamped: Vec<bool> = (0..n)
            .map(|i| (x[i] <= lo[i] && grad[i] > 0.0) || (x[i] >= hi[i] && grad[i] < 0.0))
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| !clamped[i]).collect();
        if free.is_empty() {
            status = BoxQpStatus::AllClamped;
            break;
        }
        let grad_free_norm = free.iter().map(|&i| grad[i] * grad[i]).sum::<f64>().sqrt();
        if grad_free_norm < MIN_GRAD {
            status = BoxQpStatus::Converged;
            break;
        }

        // Newton target on the free set with clamped variables held fixed
        let m = free.len();
        let hff = DMatrix::from_fn(m, m, |r, c| h[(free[r], free[c])]);
        let Some(chol) = hff.cholesky() else {
            status = BoxQpStatus::Indefinite;
            break;
        };
        let rhs = DVector::from_fn(m, |r, _| grad[free[r]]);
        let step_free = chol.solve(&rhs);
        let mut search = DVector::zeros(n);
        for (r, &i) in free.iter().enumerate() {
            search[i] = -step_free[r];
        }

        let sdotg = search.dot(&grad);
        if sdotg >= 0.0 {
            status = BoxQpStatus::NoDescent;
            break;
        }

        let mut step = 1.0;
        let mut candidate = clamp(&(&x + &search * step));
        let mut cand_val = value(&candidate);
        while (cand_val - val) / (step * sdotg) < ARMIJO {
            step *= STEP_DEC;
            if step < MIN_STEP {
                break;
            }
            candidate = clamp(&(&x + &search * step));
            cand_val = value(&candidate);
        }
        if step < MIN_STEP {
            status = BoxQpStatus::LineSearchFailed;
            break;
        }
        x = candidate;
        val = cand_val;
    }
    (x, status)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &m * m.transpose() + DMatrix::identity(n, n) * 0.5
    }

    /// Enumerates all 3ⁿ active-set patterns and keeps the best KKT point.
    fn brute_force_box_qp(
        h: &DMatrix<f64>,
        g: &DVector<f64>,
        lo: &DVector<f64>,
        hi: &DVector<f64>,
    ) -> DVector<f64> {
        let n = g.len();
        let mut best = None::<(f64, DVector<f64>)>;
        for code in 0..3usize.pow(n as u32) {
            let mut pattern = vec![0u8; n];
            let mut c = code;
            for p in pattern.iter_mut() {
                *p = (c % 3) as u8;
                c /= 3;
            }
            let mut x = DVector::zeros(n);
            let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 0).collect();
            for i in 0..n {
                x[i] = match pattern[i] {
                    1 => lo[i],
                    2 => hi[i],
                    _ => 0.0,
                };
            }
            if !free.is_empty() {
                let m = free.len();
                let hff = DMatrix::from_fn(m, m, |r, c| h[(free[r], free[c])]);
                let rhs = DVector::from_fn(m, |r, _| {
                    -(g[free[r]]
                        + (0..n).filter(|j| pattern[*j] != 0).map(|j| h[(free[r], j)] * x[j]).sum::<f64>())
                });
                let sol = hff.lu().solve(&rhs).unwrap();
                for (r, &i) in free.iter().enumerate() {
                    x[i] = sol[r];
                }
            }
            if (0..n).any(|i| x[i] < lo[i] - 1e-12 || x[i] > hi[i] + 1e-12) {
                continue;
            }
            let v = 0.5 * x.dot(&(h * &x)) + g.dot(&x);
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, x));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn unconstrained_matches_linear_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_spd(&mut rng, 12);
        let g = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        let lo = DVector::from_element(12, -1e6);
        let hi = DVector::from_element(12, 1e6);
        let (x, status) = solve_box_qp(&h, &g, &lo, &hi, &DVector::zeros(12));
        let exact = h.clone().lu().solve(&(-&g)).unwrap();
        assert_relative_eq!(x, exact, epsilon = 1e-10);
        assert_eq!(status, BoxQpStatus::Converged);
    }

    #[test]
    fn matches_active_set_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = 5;
            let h = random_spd(&mut rng, n);
            let g = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
            let lo = DVector::from_fn(n, |_, _| rng.random_range(-1.0..0.0));
            let hi = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
            let (x, _) = solve_box_qp(&h, &g, &lo, &hi, &DVector::zeros(n));
            let oracle = brute_force_box_qp(&h, &g, &lo, &hi);
            assert_relative_eq!(x, oracle, epsilon = 1e-8);
        }
    }
}
