//! Accelerated gradient descent with backtracking and adaptive restart.

use crate::error::{Error, Result};

/// A smooth objective over a node vector; only `free` entries of the
/// gradient are read.
pub(crate) trait Objective {
    fn eval(&self, u: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Stop {
    /// Relative decrease of the objective between accepted iterates.
    pub rel_decrease: f64,
    /// Bound on the largest free gradient entry.
    pub grad_tol: f64,
    pub max_iters: usize,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Outcome {
    pub iterations: usize,
    pub converged: bool,
    pub start_value: f64,
    pub value: f64,
}

fn grad_max(g: &[f64], free: &[usize]) -> f64 {
    free.iter().fold(0.0, |m, &j| m.max(g[j].abs()))
}

/// Minimize `obj` over the `free` entries of `u`, keeping the others fixed.
/// `lip` carries the curvature estimate between calls. The objective never
/// increases between accepted iterates.
pub(crate) fn minimize<O: Objective>(obj: &O, u: &mut [f64], free: &[usize], lip: &mut f64, stop: Stop) -> Result<Outcome> {
    let n = u.len();
    let mut gx = vec![0.0; n];
    let mut fx = obj.eval(u, &mut gx);
    if !fx.is_finite() {
        return Err(Error::Solver("objective is not finite at the initial guess".into()));
    }
    let start_value = fx;
    if grad_max(&gx, free) <= stop.grad_tol {
        return Ok(Outcome { iterations: 0, converged: true, start_value, value: fx });
    }
    let mut y = u.to_vec();
    let mut gy = gx.clone();
    let mut xn = u.to_vec();
    let mut gn = vec![0.0; n];
    let mut t = 1.0f64;
    let mut at_x = true;
    let mut l = lip.max(1e-12);

    for it in 1..=stop.max_iters {
        let mut fnew;
        let mut tries = 0;
        loop {
            for &j in free {
                xn[j] = y[j] - gy[j] / l;
            }
            fnew = obj.eval(&xn, &mut gn);
            if !fnew.is_finite() {
                return Err(Error::Solver(format!("objective became non-finite at iteration {it}")));
            }
            let (mut num, mut den) = (0.0, 0.0);
            for &j in free {
                let d = xn[j] - y[j];
                num += (gn[j] - gy[j]) * d;
                den += d * d;
            }
            if den == 0.0 || num <= l * den {
                break;
            }
            l = (2.0 * l).max(num / den);
            tries += 1;
            if tries > 60 {
                return Err(Error::Solver("step-size search failed".into()));
            }
        }

        if fnew > fx + 1e-13 * fx.abs() {
            if at_x {
                // No descent from the current iterate: rounding floor reached.
                *lip = l;
                let ok = grad_max(&gx, free) <= stop.grad_tol;
                return Ok(Outcome { iterations: it, converged: ok, start_value, value: fx });
            }
            y.copy_from_slice(u);
            gy.copy_from_slice(&gx);
            t = 1.0;
            at_x = true;
            continue;
        }

        let rel = (fx - fnew) / fnew.abs().max(f64::MIN_POSITIVE);
        let mut dir = 0.0;
        for &j in free {
            dir += gy[j] * (xn[j] - u[j]);
        }
        let mut t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mut beta = (t - 1.0) / t_next;
        if dir > 0.0 {
            t_next = 1.0;
            beta = 0.0;
        }
        for &j in free {
            y[j] = xn[j] + beta * (xn[j] - u[j]);
        }
        u.copy_from_slice(&xn);
        std::mem::swap(&mut gx, &mut gn);
        fx = fnew;
        t = t_next;

        if rel < stop.rel_decrease && grad_max(&gx, free) <= stop.grad_tol {
            *lip = l;
            return Ok(Outcome { iterations: it, converged: true, start_value, value: fx });
        }
        if beta == 0.0 {
            gy.copy_from_slice(&gx);
            at_x = true;
        } else {
            obj.eval(&y, &mut gy);
            at_x = false;
        }
        if it % 16 == 0 {
            l *= 0.7;
        }
    }
    *lip = l;
    Ok(Outcome { iterations: stop.max_iters, converged: false, start_value, value: fx })
}
