//! Dense BFGS with a backtracking Armijo line search.
//!
//! Objectives may return `+inf` outside their admissible region; the line
//! search simply backtracks until it re-enters it.

use nalgebra::{DMatrix, DVector};

pub trait Objective {
    fn value(&mut self, x: &DVector<f64>) -> f64;
    fn value_and_gradient(&mut self, x: &DVector<f64>) -> (f64, DVector<f64>);
}

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when `‖g‖_∞ < grad_tol · max(1, |f|)`.
    pub grad_tol: f64,
    /// Stop when an accepted step has `‖Δx‖_∞ < step_tol`.
    pub step_tol: f64,
    /// Largest allowed `‖Δx‖_∞` for the first trial of each line search.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-6, step_tol: 1e-10, max_step: 0.5 }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl BfgsResult {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.amax()
    }
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

pub fn minimize<O: Objective>(obj: &mut O, x0: DVector<f64>, opts: &BfgsOptions) -> BfgsResult {
    let k = x0.len();
    let (mut f, mut g) = obj.value_and_gradient(&x0);
    let mut x = x0;
    if k == 0 || !f.is_finite() {
        return BfgsResult { x, value: f, gradient: g, iterations: 0, converged: k == 0 };
    }
    let small_grad = |g: &DVector<f64>, f: f64| g.amax() < opts.grad_tol * f.abs().max(1.0);
    let mut h = DMatrix::<f64>::identity(k, k);
    let mut fresh = true;
    for iter in 0..opts.max_iter {
        if small_grad(&g, f) {
            return BfgsResult { x, value: f, gradient: g, iterations: iter, converged: true };
        }
        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            // Curvature information went bad: fall back to steepest descent.
            h.fill_with_identity();
            dir = -g.clone();
            slope = g.dot(&dir);
            fresh = true;
        }
        let mut step = 1.0;
        let dmax = dir.amax();
        if dmax * step > opts.max_step {
            step = opts.max_step / dmax;
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &x + &dir * step;
            let ft = obj.value(&trial);
            if ft.is_finite() && ft <= f + ARMIJO_C1 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, _)) = accepted else {
            if fresh {
                // Steepest descent cannot make progress either: numerical floor.
                return BfgsResult { x, value: f, gradient: g, iterations: iter, converged: false };
            }
            h.fill_with_identity();
            fresh = true;
            continue;
        };
        let (f_new, g_new) = obj.value_and_gradient(&x_new);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        let step_norm = s.amax();
        x = x_new;
        f = f_new;
        g = g_new;
        if step_norm < opts.step_tol {
            return BfgsResult { x, value: f, gradient: g, iterations: iter + 1, converged: true };
        }
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                // Rescale the initial inverse Hessian guess.
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H <- (I - ρ s y') H (I - ρ y s') + ρ s s'
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
    }
    let converged = small_grad(&g, f);
    BfgsResult { x, value: f, gradient: g, iterations: opts.max_iter, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn value(&mut self, x: &DVector<f64>) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn value_and_gradient(&mut self, x: &DVector<f64>) -> (f64, DVector<f64>) {
            let g0 = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
            let g1 = 200.0 * (x[1] - x[0] * x[0]);
            (self.value(x), DVector::from_vec(vec![g0, g1]))
        }
    }

    /// Quadratic with a barrier: +inf whenever x[0] >= 1.
    struct Barrier;

    impl Objective for Barrier {
        fn value(&mut self, x: &DVector<f64>) -> f64 {
            if x[0] >= 1.0 {
                f64::INFINITY
            } else {
                (x[0] - 0.9).powi(2) + (x[1] + 0.3).powi(2)
            }
        }
        fn value_and_gradient(&mut self, x: &DVector<f64>) -> (f64, DVector<f64>) {
            (self.value(x), DVector::from_vec(vec![2.0 * (x[0] - 0.9), 2.0 * (x[1] + 0.3)]))
        }
    }

    #[test]
    fn rosenbrock_minimum() {
        let opts = BfgsOptions { max_step: 10.0, ..Default::default() };
        let r = minimize(&mut Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn respects_infinite_barrier() {
        let r = minimize(&mut Barrier, DVector::from_vec(vec![0.0, 0.0]), &BfgsOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 0.9).abs() < 1e-6);
        assert!((r.x[1] + 0.3).abs() < 1e-6);
    }

    #[test]
    fn empty_problem_is_trivially_converged() {
        struct Empty;
        impl Objective for Empty {
            fn value(&mut self, _: &DVector<f64>) -> f64 {
                1.0
            }
            fn value_and_gradient(&mut self, _: &DVector<f64>) -> (f64, DVector<f64>) {
                (1.0, DVector::zeros(0))
            }
        }
        let r = minimize(&mut Empty, DVector::zeros(0), &BfgsOptions::default());
        assert!(r.converged);
    }
}
