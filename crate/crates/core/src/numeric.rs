//! Small scalar numerics shared by the geometry and calculus modules.

use crate::error::{Error, Result};

pub(crate) const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653; // pi * (3 - sqrt(5))

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x^e` with square-root shortcuts for the half-integer exponents of the
/// default `p = 3/2`.
#[inline]
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    if e == 0.5 {
        x.sqrt()
    } else if e == -0.5 {
        1.0 / x.sqrt()
    } else if e == 1.5 {
        x * x.sqrt()
    } else if e == 1.0 {
        x
    } else {
        x.powf(e)
    }
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Root of a continuous function on a sign-changing bracket `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)`, by the Illinois variant of regula falsi with a
/// bisection fallback. Returns the root and the number of evaluations.
pub(crate) fn illinois<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    mut fhi: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> (f64, usize) {
    if flo == 0.0 {
        return (lo, 0);
    }
    if fhi == 0.0 {
        return (hi, 0);
    }
    let mut side = 0i8;
    let mut x = 0.5 * (lo + hi);
    for it in 1..=max_iter {
        let denom = fhi - flo;
        x = if denom != 0.0 { hi - fhi * (hi - lo) / denom } else { 0.5 * (lo + hi) };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() <= ftol {
            return (x, it);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= xtol {
            return (0.5 * (lo + hi), it);
        }
    }
    (x, max_iter)
}

/// Maximize a unimodal function on `[a, b]` by golden-section search.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if !diff.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand near [{a}, {b}]")));
    }
    if diff.abs() <= 15.0 * tol || depth == 0 {
        if depth == 0 && diff.abs() > 15.0 * tol * 1e3 {
            return Err(Error::Quadrature(format!("recursion limit reached on [{a}, {b}]")));
        }
        return Ok(left + right + diff / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Adaptive Simpson quadrature with a relative tolerance.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    // Coarse pass to fix an absolute scale for the relative tolerance.
    let n = 64;
    let step = (b - a) / n as f64;
    let mut scale = 0.0;
    let mut pieces = Vec::with_capacity(n);
    for i in 0..n {
        let x0 = a + step * i as f64;
        let x1 = if i + 1 == n { b } else { x0 + step };
        let f0 = f(x0);
        let fm = f(0.5 * (x0 + x1));
        let f1 = f(x1);
        let s = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        scale += s.abs();
        pieces.push((x0, x1, f0, fm, f1, s));
    }
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE) / n as f64;
    let mut total = 0.0;
    for (x0, x1, f0, fm, f1, s) in pieces {
        total += simpson_rec(&mut f, x0, x1, f0, fm, f1, s, tol, 40)?;
    }
    Ok(total)
}

/// `n` unit directions in the plane on the golden-angle sequence.
pub(crate) fn golden_angle_directions(n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|k| {
            let t = (k as f64 * GOLDEN_ANGLE) % std::f64::consts::TAU;
            [t.cos(), t.sin(), 0.0]
        })
        .collect()
}

/// `n` near-uniform unit directions on the sphere (Fibonacci lattice).
pub(crate) fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let t = k as f64 * GOLDEN_ANGLE;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}
