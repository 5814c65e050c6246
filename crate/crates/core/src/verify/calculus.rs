//! Seeded property suite for the anisotropy calculus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Report;
use crate::anisotropy::{sampled_dual, Anisotropy, ProxConfig};
use crate::error::Result;

/// One norm of every kind: the closed-form kinds in two and three
/// dimensions, a weighted norm, a regularized crystalline norm and a
/// support-sampled hexagonal norm.
pub fn default_kinds() -> Result<Vec<Anisotropy>> {
    let hex: Vec<Vec<f64>> = (0..3)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / 3.0;
            vec![t.cos(), t.sin()]
        })
        .collect();
    Ok(vec![
        Anisotropy::euclidean(2)?,
        Anisotropy::l1(2)?,
        Anisotropy::linf(2)?,
        Anisotropy::weighted_l2(&[1.0, 4.0])?,
        Anisotropy::l1(2)?.regularize(0.1)?,
        Anisotropy::support_sampled(&hex)?,
        Anisotropy::euclidean(3)?,
        Anisotropy::l1(3)?,
        Anisotropy::linf(3)?,
    ])
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let r = (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp();
    v.iter().map(|x| x * r / n).collect()
}

fn loc(x: &[f64]) -> [f64; 2] {
    [x[0], x[1]]
}

/// Running worst violation of one property.
struct Worst {
    value: f64,
    at: [f64; 2],
}

impl Worst {
    fn new() -> Self {
        Self { value: 0.0, at: [0.0, 0.0] }
    }

    fn see(&mut self, v: f64, x: &[f64]) {
        if !(v <= self.value) {
            self.value = if v.is_nan() { f64::INFINITY } else { v };
            self.at = loc(x);
        }
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Run every calculus property at `points` seeded random points per norm.
pub fn calculus_properties(kinds: &[Anisotropy], points: usize, seed: u64) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    for (idx, a) in kinds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let n = a.dim();
        let (c, cc) = (a.equiv_lower(), a.equiv_upper());
        let name = |prop: &str| format!("{prop}[{a}, {n}-d]");

        let mut homog = Worst::new();
        let mut even = Worst::new();
        let mut bipolar = Worst::new();
        let mut sub_dot = Worst::new();
        let mut sub_polar = Worst::new();
        let mut sub_len = Worst::new();
        let mut env_upper = Worst::new();
        let mut env_lower = Worst::new();
        let mut grad_bound = Worst::new();
        let mut grad_dot = Worst::new();
        let mut fd = Worst::new();
        let mut monotone = Worst::new();

        for _ in 0..points {
            let xi = random_point(&mut rng, n, 0.1, 10.0);
            let fx = a.eval(&xi)?;

            let t = (rng.gen_range(-3.0..3.0f64)).exp();
            let scaled: Vec<f64> = xi.iter().map(|v| t * v).collect();
            let fs = a.eval(&scaled)?;
            homog.see((fs - t * fx).abs() / fs, &xi);
            let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
            even.see((a.eval(&neg)? - fx).abs() / fx, &xi);

            let ffo = sampled_dual(n, |d| a.polar_raw(d), &xi);
            bipolar.see((ffo - fx).abs() / fx, &xi);

            let d = a.subgrad(&xi)?;
            let dz: f64 = d.iter().zip(&xi).map(|(u, v)| u * v).sum();
            sub_dot.see((dz - fx).abs() / fx, &xi);
            sub_polar.see(a.polar(&d)? - 1.0, &xi);
            sub_len.see(norm2(&d) - cc, &xi);

            let p = rng.gen_range(1.1..3.0);
            let lambda = (rng.gen_range(-3.0..0.0f64) * std::f64::consts::LN_10).exp();
            let cfg = ProxConfig::new(lambda)?;
            let env = a.moreau_yosida_p(p, &cfg, &xi)?;
            env_upper.see((env - fx.powf(p)) / fx.powf(p), &xi);
            let g = a.yosida_grad_p(p, &cfg, &xi)?;
            let gn = norm2(&g);
            let xn = norm2(&xi);
            grad_bound.see(gn / (p * cc.powf(p) * xn.powf(p - 1.0)) - 1.0, &xi);
            let gx: f64 = g.iter().zip(&xi).map(|(u, v)| u * v).sum();
            grad_dot.see((env - gx) / env.max(1e-300), &xi);

            // Lower bound above K_lambda, for 1 < p < 2.
            let pl = rng.gen_range(1.1..1.9);
            let k = a.k_lambda(pl, lambda)?;
            let big = random_point(&mut rng, n, k.max(1e-3), (100.0 * k).max(10.0));
            if norm2(&big) >= k {
                let e = a.moreau_yosida_p(pl, &cfg, &big)?;
                let floor = 0.5 * c.powf(pl) * norm2(&big).powf(pl);
                env_lower.see((floor - e) / floor, &big);
            }

            // Central differences of the envelope.
            let step = 1e-6 * lambda.min(1.0) * xn.max(1.0);
            let mut err = 0.0f64;
            for j in 0..n {
                let mut up = xi.clone();
                let mut dn = xi.clone();
                up[j] += step;
                dn[j] -= step;
                let der = (a.moreau_yosida_p(p, &cfg, &up)? - a.moreau_yosida_p(p, &cfg, &dn)?) / (2.0 * step);
                err = err.max((der - g[j]).abs());
            }
            fd.see(err / gn.max(1e-12), &xi);

            let eta = random_point(&mut rng, n, 0.1, 10.0);
            let ge = a.yosida_grad_p(p, &cfg, &eta)?;
            let m: f64 = (0..n).map(|j| (g[j] - ge[j]) * (xi[j] - eta[j])).sum();
            monotone.see(-m / (gn * norm2(&ge)).max(1e-300), &xi);
        }

        out.push(Report::bound(name("homogeneity"), homog.value, homog.at, 1e-12));
        out.push(Report::bound(name("evenness"), even.value, even.at, 1e-12));
        out.push(Report::bound(name("bipolarity"), bipolar.value, bipolar.at, 1e-6));
        out.push(Report::bound(name("subgradient_pairing"), sub_dot.value, sub_dot.at, 1e-12));
        out.push(Report::bound(name("subgradient_polar"), sub_polar.value, sub_polar.at, 1e-8));
        out.push(Report::bound(name("subgradient_length"), sub_len.value, sub_len.at, 1e-12));
        out.push(Report::bound(name("envelope_upper"), env_upper.value, env_upper.at, 1e-12));
        out.push(Report::bound(name("envelope_lower"), env_lower.value, env_lower.at, 0.0));
        out.push(Report::bound(name("yosida_gradient_bound"), grad_bound.value, grad_bound.at, 1e-12));
        out.push(Report::bound(name("yosida_gradient_pairing"), grad_dot.value, grad_dot.at, 1e-12));
        out.push(Report::bound(name("finite_differences"), fd.value, fd.at, 1e-4));
        out.push(Report::bound(name("yosida_monotone"), monotone.value, monotone.at, 1e-12));
    }
    Ok(out)
}
