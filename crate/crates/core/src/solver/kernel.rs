//! Per-cell energy densities and their gradients.

use crate::anisotropy::{power_root, Anisotropy, NormKind};
use crate::numeric::pow;

#[derive(Clone, Debug)]
enum Fast {
    Euclidean,
    L1,
    Generic,
}

/// Smoothed density `g -> (F^p)_lambda(g) + mu |g|^p` for one stage.
#[derive(Clone, Debug)]
pub(crate) struct Density {
    norm: Anisotropy,
    fast: Fast,
    p: f64,
    lambda: f64,
    mu: f64,
}

impl Density {
    pub(crate) fn new(norm: Anisotropy, p: f64, lambda: f64, mu: f64) -> Self {
        let fast = match norm.kind() {
            NormKind::Euclidean => Fast::Euclidean,
            NormKind::L1 => Fast::L1,
            _ => Fast::Generic,
        };
        Self { norm, fast, p, lambda, mu }
    }

    /// Value at `g`; writes the gradient into `grad`.
    #[inline]
    pub(crate) fn eval(&self, g: [f64; 2], grad: &mut [f64; 2]) -> f64 {
        self.eval_full(g, grad).0
    }

    /// Value at `g` and `F(J)` for the resolvent `J` at `g`; writes the
    /// gradient into `grad`.
    #[inline]
    pub(crate) fn eval_full(&self, g: [f64; 2], grad: &mut [f64; 2]) -> (f64, f64) {
        let (p, lambda) = (self.p, self.lambda);
        let q = p - 1.0;
        let lp = lambda * p;
        let (mut value, fj) = match self.fast {
            Fast::Euclidean => {
                let r = g[0].hypot(g[1]);
                if r == 0.0 {
                    *grad = [0.0, 0.0];
                    (0.0, 0.0)
                } else {
                    let t = power_root(lp, q, r);
                    let s = (r - t) / (lambda * r);
                    *grad = [s * g[0], s * g[1]];
                    ((r - t) * (r - t) / (2.0 * lambda) + t * pow(t, q), t)
                }
            }
            Fast::L1 => {
                let (a0, a1) = (g[0].abs(), g[1].abs());
                let (big, small) = if a0 >= a1 { (a0, a1) } else { (a1, a0) };
                if big == 0.0 {
                    *grad = [0.0, 0.0];
                    (0.0, 0.0)
                } else {
                    // One active coordinate if the threshold exceeds the smaller one.
                    let t1 = power_root(lp, q, big);
                    let m1 = lp * pow(t1, q);
                    let (t, m) = if m1 >= small {
                        (t1, m1)
                    } else {
                        let t2 = power_root(2.0 * lp, q, big + small);
                        (t2, lp * pow(t2, q))
                    };
                    let d0 = g[0].signum() * a0.min(m);
                    let d1 = g[1].signum() * a1.min(m);
                    *grad = [d0 / lambda, d1 / lambda];
                    ((d0 * d0 + d1 * d1) / (2.0 * lambda) + t * pow(t, q), t)
                }
            }
            Fast::Generic => self.norm.envelope(p, lambda, &g, grad),
        };
        if self.mu > 0.0 {
            let r = g[0].hypot(g[1]);
            if r > 0.0 {
                let rq = pow(r, q);
                let s = self.mu * p * rq / r;
                grad[0] += s * g[0];
                grad[1] += s * g[1];
                value += self.mu * rq * r;
            }
        }
        (value, fj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::ProxConfig;

    #[test]
    fn fast_paths_match_generic_calculus() {
        let kinds = [
            Anisotropy::euclidean(2).unwrap(),
            Anisotropy::l1(2).unwrap(),
            Anisotropy::linf(2).unwrap(),
            Anisotropy::l1(2).unwrap().regularize(0.05).unwrap(),
        ];
        let pts = [[1.0, 0.0], [0.3, -0.7], [-2.0, 0.01], [1e-3, 2e-3], [0.0, 0.0], [0.5, 0.5]];
        for a in kinds {
            for (p, lambda) in [(1.5, 0.1), (1.5, 1e-3), (2.5, 0.05)] {
                let d = Density::new(a.clone(), p, lambda, 0.0);
                let cfg = ProxConfig::new(lambda).unwrap();
                for g in pts {
                    let mut grad = [0.0; 2];
                    let v = d.eval(g, &mut grad);
                    let want = a.moreau_yosida_p(p, &cfg, &g).unwrap();
                    let wg = a.yosida_grad_p(p, &cfg, &g).unwrap();
                    assert!((v - want).abs() <= 1e-12 * (1.0 + want), "{a} {g:?}: {v} vs {want}");
                    assert!((grad[0] - wg[0]).abs() <= 1e-9 * (1.0 + wg[0].abs()), "{a} {g:?}");
                    assert!((grad[1] - wg[1]).abs() <= 1e-9 * (1.0 + wg[1].abs()), "{a} {g:?}");
                }
            }
        }
    }

    #[test]
    fn p_laplacian_term() {
        let d = Density::new(Anisotropy::euclidean(2).unwrap(), 1.5, 0.1, 0.2);
        let d0 = Density::new(Anisotropy::euclidean(2).unwrap(), 1.5, 0.1, 0.0);
        let g = [3.0, 4.0];
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        let v = d.eval(g, &mut a) - d0.eval(g, &mut b);
        assert!((v - 0.2 * 5f64.powf(1.5)).abs() < 1e-12);
        assert!((a[0] - b[0] - 0.2 * 1.5 * 5f64.sqrt() * 0.6).abs() < 1e-12);
    }
}
