use serde::{Deserialize, Serialize};

use super::{OptimizerReport, ParameterVector, Termination};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfgsOptions {
    pub gtol: f64,
    pub ftol: f64,
    pub max_iterations: usize,
    /// Central-difference step.
    pub fd_step: f64,
    /// Sufficient-decrease constant of the Wolfe conditions.
    pub c1: f64,
    /// Curvature constant of the strong Wolfe conditions.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-6,
            ftol: 1e-10,
            max_iterations: 500,
            fd_step: 1e-5,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 30,
        }
    }
}

impl BfgsOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gtol >= 0.0) || !(self.ftol >= 0.0) {
            return Err(Error::invalid("tolerance", "gtol and ftol must be non-negative"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::invalid("fd_step", "must be positive"));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::invalid("c1/c2", "need 0 < c1 < c2 < 1"));
        }
        Ok(())
    }
}

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h`.
pub fn finite_difference_gradient<F>(cost: &mut F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::invalid("h", "must be positive"));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let up = cost(&probe);
        probe[k] = x[k] - h;
        let down = cost(&probe);
        probe[k] = x[k];
        let g = (up - down) / (2.0 * h);
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("gradient component {k}")));
        }
        grad.push(g);
    }
    Ok(grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cost wrapper that counts evaluations.
struct Tracked<'a, F> {
    cost: &'a mut F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Tracked<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        (self.cost)(x)
    }

    fn grad(&mut self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        let mut counted = |p: &[f64]| self.eval(p);
        finite_difference_gradient(&mut counted, x, h)
    }
}

struct LinePoint {
    alpha: f64,
    cost: f64,
    grad: Vec<f64>,
}

enum LineSearch {
    Accepted(LinePoint),
    Failed,
    NonFinite,
}

/// Strong-Wolfe line search with bracketing and interpolating zoom.
fn line_search<F: FnMut(&[f64]) -> f64>(
    f: &mut Tracked<'_, F>,
    x: &[f64],
    dir: &[f64],
    f0: f64,
    dphi0: f64,
    opts: &BfgsOptions,
) -> Result<LineSearch> {
    let point = |alpha: f64| along(x, dir, alpha);
    let armijo = |alpha: f64, phi: f64| phi <= f0 + opts.c1 * alpha * dphi0;

    let mut prev = (0.0, f0, dphi0);
    let mut alpha = 1.0;
    for i in 0..opts.max_line_search {
        let xa = point(alpha);
        let phi = f.eval(&xa);
        if !phi.is_finite() {
            return Ok(LineSearch::NonFinite);
        }
        if !armijo(alpha, phi) || (i > 0 && phi >= prev.1) {
            return zoom(f, x, dir, prev, (alpha, phi), f0, dphi0, opts);
        }
        let Ok(grad) = f.grad(&xa, opts.fd_step) else {
            return Ok(LineSearch::NonFinite);
        };
        let dphi = dot(&grad, dir);
        if dphi.abs() <= -opts.c2 * dphi0 {
            return Ok(LineSearch::Accepted(LinePoint { alpha, cost: phi, grad }));
        }
        if dphi >= 0.0 {
            return zoom(f, x, dir, (alpha, phi, dphi), (prev.0, prev.1), f0, dphi0, opts);
        }
        prev = (alpha, phi, dphi);
        alpha *= 2.0;
    }
    Ok(LineSearch::Failed)
}

/// `lo` carries `(alpha, phi, dphi)`; `hi` only needs `(alpha, phi)`.
#[allow(clippy::too_many_arguments)]
fn zoom<F: FnMut(&[f64]) -> f64>(
    f: &mut Tracked<'_, F>,
    x: &[f64],
    dir: &[f64],
    mut lo: (f64, f64, f64),
    hi: (f64, f64),
    f0: f64,
    dphi0: f64,
    opts: &BfgsOptions,
) -> Result<LineSearch> {
    let point = |alpha: f64| along(x, dir, alpha);
    let mut hi = hi;
    for _ in 0..opts.max_line_search {
        let (a_lo, p_lo, d_lo) = lo;
        let (a_hi, p_hi) = hi;
        let width = a_hi - a_lo;
        // minimizer of the quadratic through (a_lo, p_lo, d_lo) and (a_hi, p_hi)
        let denom = 2.0 * (p_hi - p_lo - d_lo * width);
        let mut alpha = a_lo - d_lo * width * width / denom;
        let (left, right) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
        let margin = 1e-3 * (right - left);
        if !alpha.is_finite() || alpha <= left + margin || alpha >= right - margin {
            alpha = 0.5 * (a_lo + a_hi);
        }
        if (right - left).abs() < 1e-14 * left.abs().max(1.0) {
            return Ok(LineSearch::Failed);
        }
        let xa = point(alpha);
        let phi = f.eval(&xa);
        if !phi.is_finite() {
            return Ok(LineSearch::NonFinite);
        }
        if phi > f0 + opts.c1 * alpha * dphi0 || phi >= p_lo {
            hi = (alpha, phi);
        } else {
            let Ok(grad) = f.grad(&xa, opts.fd_step) else {
            return Ok(LineSearch::NonFinite);
        };
            let dphi = dot(&grad, dir);
            if dphi.abs() <= -opts.c2 * dphi0 {
                return Ok(LineSearch::Accepted(LinePoint { alpha, cost: phi, grad }));
            }
            if dphi * (a_hi - a_lo) >= 0.0 {
                hi = (a_lo, p_lo);
            }
            lo = (alpha, phi, dphi);
        }
    }
    // Settle for the best Armijo point found when the curvature test never passes.
    if lo.0 > 0.0 {
        let xa = point(lo.0);
        let Ok(grad) = f.grad(&xa, opts.fd_step) else {
            return Ok(LineSearch::NonFinite);
        };
        return Ok(LineSearch::Accepted(LinePoint {
            alpha: lo.0,
            cost: lo.1,
            grad,
        }));
    }
    Ok(LineSearch::Failed)
}

fn along(x: &[f64], dir: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().zip(dir).map(|(xi, di)| xi + alpha * di).collect()
}

/// Quasi-Newton minimization with an inverse-Hessian BFGS update, strong
/// Wolfe line search and central finite-difference gradients.
fn reset_identity(h: &mut [f64], n: usize) {
    h.iter_mut().enumerate().for_each(|(k, v)| *v = if k % (n + 1) == 0 { 1.0 } else { 0.0 });
}

pub fn bfgs_minimize<F>(mut cost: F, x0: &ParameterVector, options: &BfgsOptions) -> Result<OptimizerReport>
where
    F: FnMut(&[f64]) -> f64,
{
    options.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::invalid("x0", "empty parameter vector"));
    }
    let mut f = Tracked {
        cost: &mut cost,
        evaluations: 0,
    };
    let mut x = x0.as_slice().to_vec();
    let mut fx = f.eval(&x);
    if !fx.is_finite() {
        return Err(Error::NonFinite(format!("cost at x0 is {fx}")));
    }
    let mut g = f.grad(&x, options.fd_step)?;
    let mut h_inv = vec![0.0; n * n];
    reset_identity(&mut h_inv, n);
    let mut history = vec![fx];
    let mut iterations = 0;
    let mut first_update = true;

    let termination = loop {
        if norm(&g) < options.gtol {
            break Termination::GradientTolerance;
        }
        if iterations >= options.max_iterations {
            break Termination::MaxIterations;
        }
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h_inv[i * n..(i + 1) * n], &g)).collect();
        let mut dphi0 = dot(&g, &dir);
        if !(dphi0 < 0.0) {
            // lost positive definiteness: restart from steepest descent
            reset_identity(&mut h_inv, n);
            first_update = true;
            dir = g.iter().map(|v| -v).collect();
            dphi0 = dot(&g, &dir);
        }
        let step = match line_search(&mut f, &x, &dir, fx, dphi0, options)? {
            LineSearch::Accepted(p) => p,
            // a stale curvature model gets one steepest-descent retry
            LineSearch::Failed if !first_update => {
                reset_identity(&mut h_inv, n);
                first_update = true;
                continue;
            }
            LineSearch::Failed => break Termination::LineSearchFailed,
            LineSearch::NonFinite => break Termination::NonFiniteCost,
        };
        iterations += 1;
        let s: Vec<f64> = dir.iter().map(|d| step.alpha * d).collect();
        let y: Vec<f64> = step.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        let change = fx - step.cost;
        fx = step.cost;
        g = step.grad;
        history.push(fx);

        let sy = dot(&s, &y);
        if sy > 1e-14 * norm(&s) * norm(&y) {
            if first_update {
                let scale = sy / dot(&y, &y);
                for i in 0..n {
                    h_inv[i * n + i] = scale;
                }
                first_update = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h_inv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            // H <- H - rho (H y s^T + s y^T H) + (rho^2 y^T H y + rho) s s^T
            for i in 0..n {
                for j in 0..n {
                    h_inv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        if change.abs() < options.ftol {
            break Termination::CostTolerance;
        }
    };

    let converged = matches!(termination, Termination::GradientTolerance | Termination::CostTolerance);
    Ok(OptimizerReport {
        best_params: ParameterVector::new(x)?,
        best_cost: fx,
        cost_history: history,
        evaluations: f.evaluations,
        iterations,
        converged,
        termination,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pv(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn fd_gradient_examples() {
        let mut sq = |x: &[f64]| x[0] * x[0];
        let g = finite_difference_gradient(&mut sq, &[3.0], 1e-5).unwrap();
        assert_abs_diff_eq!(g[0], 6.0, epsilon = 1e-6);

        let c = [1.5, -2.0, 0.25];
        let mut lin = |x: &[f64]| dot(&c, x);
        let g = finite_difference_gradient(&mut lin, &[0.3, 0.1, -4.0], 1e-3).unwrap();
        for (gi, ci) in g.iter().zip(c) {
            assert_abs_diff_eq!(*gi, ci, epsilon = 1e-10);
        }
        assert!(finite_difference_gradient(&mut lin, &[0.0; 3], 0.0).is_err());
        let mut bad = |_: &[f64]| f64::NAN;
        assert!(finite_difference_gradient(&mut bad, &[0.0], 1e-3).is_err());
    }

    #[test]
    fn sphere() {
        let r = bfgs_minimize(|x: &[f64]| x[0] * x[0] + x[1] * x[1], &pv(&[3.0, -4.0]), &BfgsOptions::default()).unwrap();
        assert!(r.best_cost < 1e-12, "{}", r.best_cost);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = BfgsOptions {
            gtol: 1e-9,
            ftol: 0.0,
            ..BfgsOptions::default()
        };
        let r = bfgs_minimize(rosen, &pv(&[-1.2, 1.0]), &opts).unwrap();
        let x = r.best_params.as_slice();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn history_is_monotone() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(4) + (x[1] + 2.0).powi(2) + 0.3 * x[0] * x[1];
        let r = bfgs_minimize(f, &pv(&[4.0, 4.0]), &BfgsOptions::default()).unwrap();
        assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.best_cost, *r.cost_history.last().unwrap());
        assert_eq!(r.best_cost, r.cost_history.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn quadratic_termination_with_exact_line_search() {
        for dim in 1..=6 {
            let diag: Vec<f64> = (0..dim).map(|k| 1.0 + 2.5 * k as f64).collect();
            let f = |x: &[f64]| 0.5 * x.iter().zip(&diag).map(|(v, d)| d * v * v).sum::<f64>();
            let x0: Vec<f64> = (0..dim).map(|k| 1.0 - 0.3 * k as f64).collect();
            let opts = BfgsOptions {
                c1: 1e-9,
                c2: 1e-6,
                gtol: 1e-8,
                ftol: 0.0,
                ..BfgsOptions::default()
            };
            let r = bfgs_minimize(f, &pv(&x0), &opts).unwrap();
            assert!(r.iterations <= dim, "dim {dim}: {} iterations", r.iterations);
            assert!(r.best_cost < 1e-14);
        }
    }

    #[test]
    fn non_finite_mid_run_keeps_best_iterate() {
        // finite only for x > -1; the first trial step jumps into the NaN region
        let f = |x: &[f64]| if x[0] < -1.0 { f64::NAN } else { (x[0] + 3.0).powi(2) };
        let r = bfgs_minimize(f, &pv(&[0.0]), &BfgsOptions::default()).unwrap();
        assert!(!r.converged);
        assert_eq!(r.termination, Termination::NonFiniteCost);
        assert!(r.best_cost.is_finite());
        assert!(bfgs_minimize(|_: &[f64]| f64::INFINITY, &pv(&[0.0]), &BfgsOptions::default()).is_err());
    }
}
