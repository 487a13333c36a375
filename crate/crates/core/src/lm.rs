//! Small dense Levenberg-Marquardt solver with central-difference Jacobians.

use nalgebra::{DMatrix, DVector};

pub(crate) struct LmOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub cost_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            initial_damping: 1e-3,
            cost_tolerance: 1e-24,
        }
    }
}

/// Minimizes the squared norm of `residual` starting from `x0`.
/// Returns the refined parameters and the final residual norm.
pub(crate) fn minimize<F>(residual: &F, x0: &[f64], opts: &LmOptions) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_damping;

    for _ in 0..opts.max_iterations {
        if cost < opts.cost_tolerance {
            break;
        }
        // Central-difference Jacobian.
        let m = r.len();
        let mut jac = DMatrix::zeros(m, n);
        for k in 0..n {
            let h = 1e-6 * (1.0 + x[k].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let rp = residual(&xp);
            let rm = residual(&xm);
            for i in 0..m {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jt = jac.transpose();
        let grad = &jt * &r;
        if grad.amax() < 1e-16 {
            break;
        }
        let hess = &jt * &jac;

        let mut stepped = false;
        for _ in 0..25 {
            let mut damped = hess.clone();
            for k in 0..n {
                damped[(k, k)] += lambda;
            }
            let Some(delta) = damped.lu().solve(&(-&grad)) else {
                lambda *= 5.0;
                continue;
            };
            let mut trial = x.clone();
            for k in 0..n {
                trial[k] += delta[k];
            }
            let r_trial = residual(&trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial < cost {
                x = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-14);
                stepped = true;
                break;
            }
            lambda *= 5.0;
        }
        if !stepped {
            break;
        }
    }
    (x, cost.sqrt())
}
