//! Proximal maps of `mu * F` and the resolvent of `F^p`.
//!
//! The resolvent `J = argmin (1/2 lambda)|eta - xi|^2 + F(eta)^p` coincides
//! with `prox_{mu F}(xi)` for the unique `mu` solving
//! `mu = lambda p F(J)^{p-1}`, so it reduces to a monotone scalar equation.

use super::{check_p, hull, Anisotropy, NormKind, MAX_DIM};
use crate::error::{invalid, Error, Result};
use crate::numeric::{self, norm2, pow};

/// Tolerances for resolvent solves together with the Yosida parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxConfig {
    /// Relative residual of the scalar optimality equation.
    pub tolerance: f64,
    pub max_iters: usize,
    pub lambda: f64,
}

impl ProxConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        Self { tolerance: 1e-10, max_iters: 10_000, lambda }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("prox tolerance must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("Yosida parameter lambda must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("prox max_iters must be at least 1"));
        }
        Ok(self)
    }
}

/// Root of `t + a t^q = b` on `[0, b]` for `a >= 0`, `q > 0`, `b >= 0`,
/// by safeguarded Newton from the first-order guess `b - a b^q`.
pub(crate) fn power_root(a: f64, q: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return b;
    }
    if q == 0.5 {
        // Quadratic in sqrt(t).
        let s = 2.0 * b / (a + (a * a + 4.0 * b).sqrt());
        return s * s;
    }
    if q == 1.0 {
        return b / (1.0 + a);
    }
    let (mut lo, mut hi) = (0.0, b);
    let mut t = b - a * b.powf(q);
    if !(t > 0.0) {
        t = 0.5 * b;
    }
    for _ in 0..200 {
        let tq1 = t.powf(q - 1.0);
        let ft = t + a * t * tq1 - b;
        if ft == 0.0 {
            return t;
        }
        if ft < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t - ft / (1.0 + a * q * tq1);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * b || hi - lo <= 4.0 * f64::EPSILON * b {
            return next;
        }
        t = next;
    }
    t
}

/// Resolvent of `|.|_1^p`: returns `t = |J|_1` and the soft threshold `mu`
/// with `J = soft_mu(xi)`. With `k` active coordinates, `t` solves
/// `t + k lp t^{p-1} = S_k`.
fn l1_threshold(xi: &[f64], lp: f64, p: f64) -> (f64, f64) {
    let n = xi.len();
    let mut a = [0.0; MAX_DIM];
    for i in 0..n {
        a[i] = xi[i].abs();
    }
    a[..n].sort_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    for k in 0..n {
        cum += a[k];
        let tk = power_root((k + 1) as f64 * lp, p - 1.0, cum);
        let mk = lp * pow(tk, p - 1.0);
        let next = if k + 1 < n { a[k + 1] } else { 0.0 };
        if (mk < a[k] && mk >= next) || k + 1 == n {
            return (tk, mk);
        }
    }
    (0.0, 0.0)
}

/// Resolvent of `(|.|_1 + eps |.|_2)^p`. The prox of `mu F` is the Euclidean
/// shrink of the soft threshold, so the scalar equation `mu = lp F(J)^{p-1}`
/// is solved by bracketed Newton, starting from the pure `l1` threshold.
fn regularized_l1_resolvent(eps: f64, xi: &[f64], lp: f64, p: f64, fxi: f64, out: &mut [f64]) -> (f64, f64) {
    let n = xi.len();
    let q = p - 1.0;
    let top = lp * pow(fxi, q);
    let (mut lo, mut hi) = (0.0, top);
    let mut mu = l1_threshold(xi, lp, p).1.clamp(0.0, top);
    let mut resid = f64::INFINITY;
    let mut converged = false;
    for _ in 0..100 {
        // |s|_2, |s|_1 and the active count for s = soft_mu(xi).
        let (mut b, mut a2, mut k) = (0.0, 0.0, 0.0);
        for x in xi {
            let d = x.abs() - mu;
            if d > 0.0 {
                b += d;
                a2 += d * d;
                k += 1.0;
            }
        }
        let a = a2.sqrt();
        let (fj, dfj) = if a <= mu * eps {
            (0.0, 0.0)
        } else {
            let (da, db) = (-b / a, -k);
            let fj = (a - mu * eps) * (b / a + eps);
            (fj, (da - eps) * (b / a + eps) + (a - mu * eps) * (db * a - b * da) / (a * a))
        };
        let fq1 = if fj > 0.0 { pow(fj, q - 1.0) } else { 0.0 };
        let phi = mu - lp * fj * fq1;
        resid = phi.abs() / top;
        if phi == 0.0 {
            converged = true;
            break;
        }
        if phi < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let mut next = mu - phi / (1.0 - lp * q * fq1 * dfj);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - mu).abs() <= 4.0 * f64::EPSILON * top;
        mu = next;
        if done || hi - lo <= 4.0 * f64::EPSILON * top {
            converged = true;
            break;
        }
    }
    let mut s = [0.0; MAX_DIM];
    let mut a2 = 0.0;
    for i in 0..n {
        s[i] = xi[i].signum() * (xi[i].abs() - mu).max(0.0);
        a2 += s[i] * s[i];
    }
    let a = a2.sqrt();
    let scale = if a > mu * eps { 1.0 - mu * eps / a } else { 0.0 };
    for i in 0..n {
        out[i] = scale * s[i];
    }
    let t = out.iter().map(|v| v.abs()).sum::<f64>() + eps * norm2(out);
    (t, if converged { 0.0 } else { resid })
}

impl Anisotropy {
    /// `prox_{mu F}(x)` written into `out`.
    pub(crate) fn prox_norm(&self, mu: f64, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        if mu <= 0.0 {
            out.copy_from_slice(x);
            return;
        }
        match &self.kind {
            NormKind::Euclidean => {
                let nx = norm2(x);
                let s = if nx > mu { 1.0 - mu / nx } else { 0.0 };
                for i in 0..n {
                    out[i] = s * x[i];
                }
            }
            NormKind::L1 => {
                for i in 0..n {
                    out[i] = x[i].signum() * (x[i].abs() - mu).max(0.0);
                }
            }
            NormKind::Linf => {
                // x minus its projection onto the l1 ball of radius mu.
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                if l1 <= mu {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                let mut a = [0.0; MAX_DIM];
                for i in 0..n {
                    a[i] = x[i].abs();
                }
                a[..n].sort_by(|p, q| q.total_cmp(p));
                let (mut cum, mut theta) = (0.0, 0.0);
                for k in 0..n {
                    cum += a[k];
                    let t = (cum - mu) / (k + 1) as f64;
                    if a[k] > t {
                        theta = t;
                    }
                }
                for i in 0..n {
                    let proj = x[i].signum() * (x[i].abs() - theta).max(0.0);
                    out[i] = x[i] - proj;
                }
            }
            NormKind::WeightedL2(w) => {
                if self.polar_raw(x) <= mu {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                // J_i = nu x_i / (w_i + nu) with sum w_i x_i^2 / (w_i + nu)^2 = mu^2.
                let h = |nu: f64| -> (f64, f64) {
                    let (mut v, mut d) = (-mu * mu, 0.0);
                    for i in 0..n {
                        let s = w[i] + nu;
                        v += w[i] * x[i] * x[i] / (s * s);
                        d -= 2.0 * w[i] * x[i] * x[i] / (s * s * s);
                    }
                    (v, d)
                };
                // h is convex and decreasing, so Newton from the left is monotone.
                let mut nu = 0.0;
                for _ in 0..100 {
                    let (v, d) = h(nu);
                    let step = v / d;
                    nu -= step;
                    if step.abs() <= 1e-16 * nu.abs().max(1e-300) {
                        break;
                    }
                }
                for i in 0..n {
                    out[i] = nu * x[i] / (w[i] + nu);
                }
            }
            NormKind::Regularized { base, eps } => {
                let mut tmp = [0.0; MAX_DIM];
                base.prox_norm(mu, x, &mut tmp[..n]);
                let nt = norm2(&tmp[..n]);
                let s = if nt > mu * eps { 1.0 - mu * eps / nt } else { 0.0 };
                for i in 0..n {
                    out[i] = s * tmp[i];
                }
            }
            NormKind::SupportSampled(pts) => {
                let mut ball = Vec::with_capacity(2 * pts.len());
                for v in pts {
                    ball.push([mu * v[0], mu * v[1], mu * v[2]]);
                    ball.push([-mu * v[0], -mu * v[1], -mu * v[2]]);
                }
                let proj = hull::project(&ball, n, x);
                for i in 0..n {
                    out[i] = x[i] - proj[i];
                }
            }
        }
    }

    /// Resolvent of `F^p` with parameter `lambda`, written into `out`.
    /// Returns `F(out)` and the relative residual of the scalar equation.
    pub(crate) fn resolvent_into(
        &self,
        p: f64,
        lambda: f64,
        xi: &[f64],
        out: &mut [f64],
        max_iters: usize,
    ) -> (f64, f64) {
        let n = self.dim;
        let fxi = self.f(xi);
        if fxi == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return (0.0, 0.0);
        }
        let lp = lambda * p;
        match &self.kind {
            NormKind::Euclidean => {
                let t = power_root(lp, p - 1.0, fxi);
                for i in 0..n {
                    out[i] = xi[i] * (t / fxi);
                }
                return (t, 0.0);
            }
            NormKind::L1 => {
                let (t, mu) = l1_threshold(xi, lp, p);
                for i in 0..n {
                    out[i] = xi[i].signum() * (xi[i].abs() - mu).max(0.0);
                }
                return (t, 0.0);
            }
            NormKind::Regularized { base, eps } if matches!(base.kind, NormKind::L1) => {
                return regularized_l1_resolvent(*eps, xi, lp, p, fxi, out);
            }
            _ => {}
        }
        let mut buf = [0.0; MAX_DIM];
        let mut phi = |mu: f64| {
            self.prox_norm(mu, xi, &mut buf[..n]);
            mu - lp * pow(self.f(&buf[..n]), p - 1.0)
        };
        // |xi - prox_{mu F}(xi)| <= C mu, hence F(J) >= F(xi) - C^2 mu on the bracket.
        let hi = lp * pow(fxi, p - 1.0);
        let lo = lp * pow((fxi - self.upper * self.upper * hi).max(0.0), p - 1.0);
        let (flo, fhi) = (phi(lo), phi(hi));
        let cap = max_iters.min(500);
        let (mu, its) = numeric::illinois(&mut phi, lo, hi, flo.min(0.0), fhi, 4.0 * f64::EPSILON * hi, 4.0 * f64::EPSILON * hi, cap);
        self.prox_norm(mu, xi, out);
        let t = self.f(out);
        // A root bracketed to rounding level is converged even when F(J)^(p-1)
        // amplifies that rounding, as it does for p near 1 and tiny F(J).
        let resid = if its < cap { 0.0 } else { (mu - lp * pow(t, p - 1.0)).abs() / hi };
        (t, resid)
    }

    fn resolvent_checked(&self, p: f64, cfg: &ProxConfig, xi: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check(xi)?;
        check_p(p)?;
        let cfg = cfg.validated()?;
        let mut out = vec![0.0; self.dim];
        let (t, resid) = self.resolvent_into(p, cfg.lambda, xi, &mut out, cfg.max_iters);
        if !(resid <= cfg.tolerance) {
            return Err(Error::ResolventNotConverged { iterations: cfg.max_iters, residual: resid });
        }
        Ok((out, t))
    }

    /// `J_{p,lambda}(xi)`, the minimizer of `(1/2 lambda)|eta - xi|^2 + F(eta)^p`.
    pub fn resolvent_p(&self, p: f64, cfg: &ProxConfig, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.resolvent_checked(p, cfg, xi)?.0)
    }

    /// Moreau-Yosida envelope `(F^p)_lambda(xi)`.
    pub fn moreau_yosida_p(&self, p: f64, cfg: &ProxConfig, xi: &[f64]) -> Result<f64> {
        let (j, t) = self.resolvent_checked(p, cfg, xi)?;
        let d2: f64 = j.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(d2 / (2.0 * cfg.lambda) + t.powf(p))
    }

    /// Yosida gradient `(xi - J_{p,lambda}(xi)) / lambda`, the gradient of the envelope.
    pub fn yosida_grad_p(&self, p: f64, cfg: &ProxConfig, xi: &[f64]) -> Result<Vec<f64>> {
        let (j, _) = self.resolvent_checked(p, cfg, xi)?;
        Ok(xi.iter().zip(&j).map(|(x, y)| (x - y) / cfg.lambda).collect())
    }

    /// Envelope value and gradient in one resolvent solve. Also returns
    /// `F(J)`, which the dual extraction needs.
    pub(crate) fn envelope(&self, p: f64, lambda: f64, xi: &[f64], grad: &mut [f64]) -> (f64, f64) {
        let n = self.dim;
        let mut j = [0.0; MAX_DIM];
        let (t, _) = self.resolvent_into(p, lambda, xi, &mut j[..n], 500);
        let mut d2 = 0.0;
        for i in 0..n {
            let d = xi[i] - j[i];
            d2 += d * d;
            grad[i] = d / lambda;
        }
        (d2 / (2.0 * lambda) + pow(t, p), t)
    }
}
