//! Quasi-Newton minimizer used by the ML fit.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the gradient max-norm falls below this.
    pub grad_tol: f64,
    /// Stop when `|f_prev - f| / |f|` falls below this (twice in a row).
    pub rel_f_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            grad_tol: 1e-6,
            rel_f_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `objective`, which returns `None` outside the admissible region.
///
/// Inverse-Hessian BFGS with an Armijo backtracking line search. The inverse
/// Hessian is reset to a scaled identity whenever the curvature condition
/// fails or the search direction stops descending.
pub fn minimize<F>(objective: F, x0: &[f64], opts: BfgsOptions) -> BfgsResult
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut f, g0) = objective(x.as_slice()).expect("starting point must be admissible");
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut small_steps = 0;

    for iter in 0..opts.max_iter {
        if g.amax() < opts.grad_tol {
            return finish(x, f, g, iter, true);
        }
        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 || !slope.is_finite() {
            h = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = g.dot(&dir);
        }

        let mut step = 1.0;
        // Keep the first trial step moderate in parameter space.
        let max_move = dir.amax();
        if max_move > 2.0 {
            step = 2.0 / max_move;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &dir * step;
            if let Some((ft, gt)) = objective(trial.as_slice()) {
                if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                    accepted = Some((trial, ft, DVector::from_vec(gt)));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // No progress along this direction; fall back to steepest descent once.
            if h != DMatrix::identity(n, n) {
                h = DMatrix::identity(n, n);
                continue;
            }
            return finish(x, f, g, iter, false);
        };

        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if iter == 0 {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s (Hy)' + (Hy) s') + (rho^2 y'Hy + rho) s s'
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
        } else {
            h = DMatrix::identity(n, n);
        }

        let rel = (f - f_new).abs() / f_new.abs().max(f64::MIN_POSITIVE);
        x = x_new;
        f = f_new;
        g = g_new;
        if rel < opts.rel_f_tol {
            small_steps += 1;
            if small_steps >= 2 {
                return finish(x, f, g, iter + 1, true);
            }
        } else {
            small_steps = 0;
        }
    }
    let iters = opts.max_iter;
    let converged = g.amax() < opts.grad_tol;
    finish(x, f, g, iters, converged)
}

fn finish(x: DVector<f64>, f: f64, g: DVector<f64>, iterations: usize, converged: bool) -> BfgsResult {
    BfgsResult {
        x: x.as_slice().to_vec(),
        f,
        grad: g.as_slice().to_vec(),
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Some((v, g))
        };
        let r = minimize(f, &[-1.2, 1.0], BfgsOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn respects_inadmissible_region() {
        // minimum of x - ln x at x = 1; undefined for x <= 0
        let f = |x: &[f64]| (x[0] > 0.0).then(|| (x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]]));
        let r = minimize(f, &[5.0], BfgsOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6);
    }
}
