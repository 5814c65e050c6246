//! Calculus for even norms `F` on R^N (N = 2 or 3).
//!
//! Besides evaluation of `F` and its polar `F°`, this module provides the
//! minimal section of the subdifferential, the resolvent (proximal map) of
//! `F^p`, its Moreau-Yosida envelope and the Yosida gradient, and the
//! strictly convex approximants `F + eps * |.|`.
//!
//! All closed-form kinds are exact. The resolvent of `F^p` is reduced to a
//! scalar root problem on the proximal parameter of `F` itself, so it never
//! needs a general-purpose optimizer except for support-sampled norms.

mod hull;
mod prox;

use std::fmt;
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};
use crate::numeric::{self, dot, norm2};

pub(crate) use prox::power_root;
pub use prox::ProxConfig;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// The family an [`Anisotropy`] belongs to.
#[derive(Clone, Debug, PartialEq)]
pub enum NormKind {
    Euclidean,
    /// `sum |x_i|`; the Wulff shape is the cube.
    L1,
    /// `max |x_i|`; the Wulff shape is the cross-polytope.
    Linf,
    /// `sqrt(sum w_i x_i^2)` with positive weights.
    WeightedL2(Vec<f64>),
    /// `base + eps * |.|_2`.
    Regularized { base: Box<Anisotropy>, eps: f64 },
    /// Support function of the symmetric hull of finitely many points:
    /// `F(x) = max_j |v_j . x|`. Always crystalline.
    SupportSampled(Vec<[f64; MAX_DIM]>),
}

/// An even norm on R^N together with its equivalence constants
/// `c |x| <= F(x) <= C |x|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Anisotropy {
    kind: NormKind,
    dim: usize,
    lower: f64,
    upper: f64,
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(invalid(format!("dimension must be 2 or 3, got {dim}")))
    }
}

impl Anisotropy {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { kind: NormKind::Euclidean, dim, lower: 1.0, upper: 1.0 })
    }

    pub fn l1(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { kind: NormKind::L1, dim, lower: 1.0, upper: (dim as f64).sqrt() })
    }

    pub fn linf(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { kind: NormKind::Linf, dim, lower: 1.0 / (dim as f64).sqrt(), upper: 1.0 })
    }

    pub fn weighted_l2(weights: &[f64]) -> Result<Self> {
        check_dim(weights.len())?;
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("weighted-l2 weights must be positive and finite"));
        }
        let min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = weights.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            kind: NormKind::WeightedL2(weights.to_vec()),
            dim: weights.len(),
            lower: min.sqrt(),
            upper: max.sqrt(),
        })
    }

    /// Crystalline norm whose unit dual ball is the symmetric convex hull of
    /// `points`. The equivalence constants are estimated on the sampled
    /// unit sphere and widened by 1%.
    pub fn support_sampled(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(|v| v.len()).ok_or_else(|| invalid("no support points"))?;
        check_dim(dim)?;
        let mut pts = Vec::with_capacity(points.len());
        for v in points {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("support points must be finite"));
            }
            let mut a = [0.0; MAX_DIM];
            a[..dim].copy_from_slice(v);
            pts.push(a);
        }
        let mut out = Self { kind: NormKind::SupportSampled(pts), dim, lower: 1.0, upper: 1.0 };
        let dirs = sample_directions(dim);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for d in dirs {
            let f = out.f(&d[..dim]);
            lo = lo.min(f);
            hi = hi.max(f);
        }
        if lo <= 1e-12 * hi.max(1e-300) {
            return Err(invalid("support points do not span the space; not a norm"));
        }
        out.lower = 0.99 * lo;
        out.upper = 1.01 * hi;
        Ok(out)
    }

    /// Strictly convex approximant `F + eps * |.|` with constants `(c + eps, C + eps)`.
    pub fn regularize(&self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(invalid(format!("regularization eps must be positive, got {eps}")));
        }
        Ok(Self {
            kind: NormKind::Regularized { base: Box::new(self.clone()), eps },
            dim: self.dim,
            lower: self.lower + eps,
            upper: self.upper + eps,
        })
    }

    /// Parse a config name: `euclidean`, `l1`, `linf`, `weighted-l2(w1,w2[,w3])`
    /// or `regularized(<base>,eps)`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let s = spec.trim();
        match s {
            "euclidean" => return Self::euclidean(dim),
            "l1" => return Self::l1(dim),
            "linf" => return Self::linf(dim),
            _ => {}
        }
        let bad = || Error::Parse(format!("unknown anisotropy `{spec}`"));
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?;
        match head.trim() {
            "weighted-l2" => {
                let w = inner
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                if w.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: w.len() });
                }
                Self::weighted_l2(&w)
            }
            "regularized" => {
                let (base, eps) = inner.rsplit_once(',').ok_or_else(bad)?;
                let eps: f64 = eps.trim().parse().map_err(|_| bad())?;
                Self::parse(base, dim)?.regularize(eps)
            }
            _ => Err(bad()),
        }
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lower equivalence constant `c`.
    pub fn equiv_lower(&self) -> f64 {
        self.lower
    }

    /// Upper equivalence constant `C`.
    pub fn equiv_upper(&self) -> f64 {
        self.upper
    }

    pub fn is_strictly_convex(&self) -> bool {
        match &self.kind {
            NormKind::Euclidean | NormKind::WeightedL2(_) | NormKind::Regularized { .. } => true,
            NormKind::L1 | NormKind::Linf | NormKind::SupportSampled(_) => false,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim, got: x.len() })
        }
    }

    /// `F(xi)`.
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        self.check(xi)?;
        Ok(self.f(xi))
    }

    /// `F°(x) = sup { x . y : F(y) <= 1 }`.
    pub fn polar(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.polar_raw(x))
    }

    /// Least-norm element of `∂F(zeta)`; zero at the origin.
    pub fn subgrad(&self, zeta: &[f64]) -> Result<Vec<f64>> {
        self.check(zeta)?;
        let mut out = vec![0.0; self.dim];
        self.subgrad_raw(zeta, &mut out);
        Ok(out)
    }

    /// `p F^{p-1}(xi) * subgrad(xi)`, an element of `∂(F^p)(xi)`.
    pub fn subgrad_p(&self, p: f64, xi: &[f64]) -> Result<Vec<f64>> {
        check_p(p)?;
        let mut d = self.subgrad(xi)?;
        let f = self.f(xi);
        let w = if f > 0.0 { p * f.powf(p - 1.0) } else { 0.0 };
        d.iter_mut().for_each(|v| *v *= w);
        Ok(d)
    }

    /// The constant `K_lambda` above which the Moreau envelope of `F^p`
    /// dominates `(c^p / 2) |xi|^p`, for `1 < p < 2`.
    pub fn k_lambda(&self, p: f64, lambda: f64) -> Result<f64> {
        if !(p > 1.0 && p < 2.0) {
            return Err(invalid(format!("K_lambda needs 1 < p < 2, got {p}")));
        }
        if !(lambda > 0.0) {
            return Err(invalid("lambda must be positive"));
        }
        let q = 1.0 - 2f64.powf(-1.0 / p);
        Ok((lambda * self.lower.powf(p) / (q * q)).powf(1.0 / (2.0 - p)))
    }

    /// Volume of the unit Wulff shape `{F° < 1}`.
    pub fn wulff_volume(&self) -> Result<f64> {
        use std::f64::consts::PI;
        let n = self.dim;
        let exact = match (&self.kind, n) {
            (NormKind::Euclidean, 2) => Some(PI),
            (NormKind::Euclidean, 3) => Some(4.0 * PI / 3.0),
            (NormKind::L1, _) => Some(2f64.powi(n as i32)),
            (NormKind::Linf, 2) => Some(2.0),
            (NormKind::Linf, 3) => Some(4.0 / 3.0),
            (NormKind::WeightedL2(w), _) => {
                let ball = if n == 2 { PI } else { 4.0 * PI / 3.0 };
                Some(ball * w.iter().map(|x| x.sqrt()).product::<f64>())
            }
            _ => None,
        };
        if let Some(v) = exact {
            return Ok(v);
        }
        if n == 2 {
            // Area in polar coordinates: (1/2) * integral of rho(theta)^2.
            numeric::adaptive_simpson(
                |t| {
                    let rho = 1.0 / self.polar_raw(&[t.cos(), t.sin()]);
                    0.5 * rho * rho
                },
                0.0,
                std::f64::consts::TAU,
                1e-10,
            )
        } else {
            // Equal-weight cubature of (1/3) rho^3 on a Fibonacci lattice.
            let m = 200_000;
            let dirs = numeric::fibonacci_sphere(m);
            let s: f64 = dirs.iter().map(|d| self.polar_raw(d).powi(-3)).sum();
            Ok(4.0 * PI / m as f64 * s / 3.0)
        }
    }

    pub(crate) fn f(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean => norm2(xi),
            NormKind::L1 => xi.iter().map(|x| x.abs()).sum(),
            NormKind::Linf => xi.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::WeightedL2(w) => xi.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt(),
            NormKind::Regularized { base, eps } => base.f(xi) + eps * norm2(xi),
            NormKind::SupportSampled(pts) => {
                pts.iter().fold(0.0, |m, v| m.max(dot(&v[..self.dim], xi).abs()))
            }
        }
    }

    pub(crate) fn polar_raw(&self, x: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean => norm2(x),
            NormKind::L1 => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormKind::Linf => x.iter().map(|v| v.abs()).sum(),
            NormKind::WeightedL2(w) => x.iter().zip(w).map(|(v, w)| v * v / w).sum::<f64>().sqrt(),
            NormKind::Regularized { base, eps } => regularized_polar(base, *eps, x),
            NormKind::SupportSampled(_) => sampled_dual(self.dim, |d| self.f(d), x),
        }
    }

    pub(crate) fn subgrad_raw(&self, zeta: &[f64], out: &mut [f64]) {
        let zero = [0.0; MAX_DIM];
        self.subgrad_shifted(zeta, &zero[..self.dim], out);
    }

    /// Least-norm element of `∂F(zeta) + shift`, minus `shift`; `shift` is
    /// always a nonnegative multiple of `zeta`.
    fn subgrad_shifted(&self, zeta: &[f64], shift: &[f64], out: &mut [f64]) {
        let n = self.dim;
        let nz = norm2(zeta);
        if nz == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        match &self.kind {
            NormKind::Euclidean => {
                for i in 0..n {
                    out[i] = zeta[i] / nz;
                }
            }
            NormKind::WeightedL2(w) => {
                let f = self.f(zeta);
                for i in 0..n {
                    out[i] = w[i] * zeta[i] / f;
                }
            }
            NormKind::L1 => {
                for i in 0..n {
                    out[i] = if zeta[i] > 0.0 {
                        1.0
                    } else if zeta[i] < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
            }
            NormKind::Linf => {
                let m = self.f(zeta);
                let active: usize = zeta.iter().filter(|v| v.abs() >= m * (1.0 - 1e-12)).count();
                for i in 0..n {
                    out[i] = if zeta[i].abs() >= m * (1.0 - 1e-12) {
                        zeta[i].signum() / active as f64
                    } else {
                        0.0
                    };
                }
            }
            NormKind::Regularized { base, eps } => {
                let mut s = [0.0; MAX_DIM];
                for i in 0..n {
                    s[i] = shift[i] + eps * zeta[i] / nz;
                }
                base.subgrad_shifted(zeta, &s[..n], out);
                for i in 0..n {
                    out[i] += eps * zeta[i] / nz;
                }
            }
            NormKind::SupportSampled(pts) => {
                let f = self.f(zeta);
                let mut face: Vec<[f64; MAX_DIM]> = Vec::new();
                for v in pts {
                    let d = dot(&v[..n], zeta);
                    if d.abs() >= f * (1.0 - 1e-10) {
                        let s = d.signum();
                        face.push([s * v[0], s * v[1], s * v[2]]);
                    }
                }
                let mut target = [0.0; MAX_DIM];
                for i in 0..n {
                    target[i] = -shift[i];
                }
                let p = hull::project(&face, n, &target[..n]);
                out.copy_from_slice(&p[..n]);
            }
        }
    }
}

impl fmt::Display for Anisotropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NormKind::Euclidean => write!(f, "euclidean"),
            NormKind::L1 => write!(f, "l1"),
            NormKind::Linf => write!(f, "linf"),
            NormKind::WeightedL2(w) => {
                let w: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "weighted-l2({})", w.join(","))
            }
            NormKind::Regularized { base, eps } => write!(f, "regularized({base},{eps})"),
            NormKind::SupportSampled(p) => write!(f, "support-sampled({} points)", p.len()),
        }
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("exponent p must satisfy p > 1, got {p}")))
    }
}

/// Polar of `base + eps |.|` at `x`: the smallest `t` with
/// `dist(x, t * W_1(base)) <= eps * t`, where the distance equals
/// `|prox_{t base}(x)|` by the Moreau decomposition.
fn regularized_polar(base: &Anisotropy, eps: f64, x: &[f64]) -> f64 {
    let n = base.dim;
    let nx = norm2(x);
    if nx == 0.0 {
        return 0.0;
    }
    let mut buf = [0.0; MAX_DIM];
    let mut g = |t: f64| {
        base.prox_norm(t, x, &mut buf[..n]);
        eps * t - norm2(&buf[..n])
    };
    let hi = nx / eps;
    let (glo, ghi) = (g(0.0), g(hi));
    let (t, _) = numeric::illinois(&mut g, 0.0, hi, glo, ghi, 1e-15 * hi, 0.0, 400);
    t
}

fn sample_directions(dim: usize) -> &'static [[f64; MAX_DIM]] {
    static PLANE: OnceLock<Vec<[f64; MAX_DIM]>> = OnceLock::new();
    static SPHERE: OnceLock<Vec<[f64; MAX_DIM]>> = OnceLock::new();
    if dim == 2 {
        PLANE.get_or_init(|| numeric::golden_angle_directions(4096))
    } else {
        SPHERE.get_or_init(|| numeric::fibonacci_sphere(16384))
    }
}

/// Dual gauge of a positively homogeneous, positive function by support
/// maximization: `sup_d (x . d) / f(d)`. Directions are taken on the plane
/// tangent to the unit sphere at `x / |x|`, where `x . d` is constant, so
/// the supremum becomes the minimum of the convex function `f` over that
/// plane. It is found by golden-section search, nested once in 3-D, which
/// stays exact at the kinks of crystalline `f`.
pub fn sampled_dual<F: Fn(&[f64]) -> f64>(dim: usize, f: F, x: &[f64]) -> f64 {
    let nx = norm2(x);
    if nx == 0.0 {
        return 0.0;
    }
    let mut c = [0.0; 3];
    for i in 0..dim {
        c[i] = x[i] / nx;
    }
    // The minimizer d satisfies |d| <= f(c) / min f on the sphere; a coarse
    // sample of that minimum is widened by a factor of 4.
    let dirs = sample_directions(dim);
    let fmin = dirs.iter().step_by(dirs.len() / 256).fold(f64::INFINITY, |m, d| m.min(f(&d[..dim])));
    let b = 4.0 * f(&c[..dim]) / fmin;
    let at = |s: f64, t: f64, u: &[f64; 3], v: &[f64; 3]| {
        let mut d = [0.0; 3];
        for i in 0..3 {
            d[i] = c[i] + s * u[i] + t * v[i];
        }
        f(&d[..dim])
    };
    let best = if dim == 2 {
        let u = [-c[1], c[0], 0.0];
        -numeric::golden_max(|s| -at(s, 0.0, &u, &u), -b, b, 100).1
    } else {
        let (u, v) = tangent_frame(&c);
        let inner = |s: f64| numeric::golden_max(|t| -at(s, t, &u, &v), -b, b, 80).1;
        -numeric::golden_max(inner, -b, b, 80).1
    };
    nx / best
}

fn tangent_frame(d: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let mut u = [
        a[1] * d[2] - a[2] * d[1],
        a[2] * d[0] - a[0] * d[2],
        a[0] * d[1] - a[1] * d[0],
    ];
    let nu = norm2(&u);
    u.iter_mut().for_each(|t| *t /= nu);
    let v = [
        d[1] * u[2] - d[2] * u[1],
        d[2] * u[0] - d[0] * u[2],
        d[0] * u[1] - d[1] * u[0],
    ];
    (u, v)
}

#[cfg(test)]
mod tests;
