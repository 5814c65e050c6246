//! Wulff shapes, radial barriers and the exactly solvable Wulff annulus.

mod condition;
mod domain;

pub use condition::{check_wulff_condition, WulffCondition};
pub use domain::{AnnulusProblem, BoundarySample, DomainSpec};

use crate::anisotropy::Anisotropy;
use crate::error::{invalid, Error, Result};
use crate::numeric;

/// Default number of boundary samples for geometric predicates.
pub const BOUNDARY_SAMPLES: usize = 4096;

/// `F°(x) < r`.
pub fn wulff_contains(a: &Anisotropy, r: f64, x: &[f64]) -> Result<bool> {
    Ok(a.polar(x)? < r)
}

/// Inscribed and circumscribed Wulff radii of a domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusBounds {
    /// `W_{r1} ⊆ Ω` up to sampling.
    pub r1: f64,
    /// `Ω ⊆ W_{r2}` up to sampling.
    pub r2: f64,
    /// Half the largest `F°` gap between consecutive samples; `r1` and `r2`
    /// are already widened by it.
    pub tolerance: f64,
}

/// Extremes of `F°` over sampled boundary points, widened by the sampling
/// tolerance so that the inclusions hold for the continuous boundary.
pub fn radius_bounds(a: &Anisotropy, d: &DomainSpec) -> Result<RadiusBounds> {
    radius_bounds_sampled(a, d, BOUNDARY_SAMPLES)
}

pub fn radius_bounds_sampled(a: &Anisotropy, d: &DomainSpec, m: usize) -> Result<RadiusBounds> {
    if a.dim() != 2 {
        return Err(invalid("radius bounds are planar; the anisotropy must be 2-D"));
    }
    let s = d.boundary_samples(m);
    if s.is_empty() {
        return Err(Error::DegenerateDomain("no boundary samples".into()));
    }
    let (mut lo, mut hi, mut tol) = (f64::INFINITY, 0.0f64, 0.0f64);
    for (k, b) in s.iter().enumerate() {
        let v = a.polar_raw(&b.point);
        lo = lo.min(v);
        hi = hi.max(v);
        let q = s[(k + 1) % s.len()].point;
        tol = tol.max(0.5 * a.polar_raw(&[q[0] - b.point[0], q[1] - b.point[1]]));
    }
    if !(lo > tol) {
        return Err(Error::DegenerateDomain("the origin is not inside the domain".into()));
    }
    Ok(RadiusBounds { r1: lo - tol, r2: hi + tol, tolerance: tol })
}

fn alpha(a: &Anisotropy, p: f64) -> Result<f64> {
    let n = a.dim() as f64;
    if !(p > 1.0 && p < n) {
        return Err(invalid(format!("radial laws need 1 < p < {n}, got {p}")));
    }
    Ok((p - n) / (p - 1.0))
}

fn radii(r: f64, big_r: f64) -> Result<()> {
    if r > 0.0 && r < big_r && big_r.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("need 0 < r < R, got r = {r}, R = {big_r}")))
    }
}

/// The radial solution `v_{r,R}` on the Wulff annulus, as a function of
/// `t = F°(x)`.
pub fn barrier_profile(alpha: f64, r: f64, big_r: f64, t: f64) -> f64 {
    let ra = big_r.powf(alpha);
    (t.powf(alpha) - ra) / (r.powf(alpha) - ra)
}

/// `v_{r,R}(x)`: 1 on `∂W_r`, 0 on `∂W_R`.
pub fn barrier_v(a: &Anisotropy, p: f64, r: f64, big_r: f64, x: &[f64]) -> Result<f64> {
    let al = alpha(a, p)?;
    radii(r, big_r)?;
    Ok(barrier_profile(al, r, big_r, a.polar(x)?))
}

/// `(F°(x) / r)^alpha`, the exterior capacitary potential of `W̄_r`.
pub fn radial_potential(a: &Anisotropy, p: f64, r: f64, x: &[f64]) -> Result<f64> {
    let al = alpha(a, p)?;
    if !(r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let t = a.polar(x)?;
    if t == 0.0 {
        return Err(invalid("the radial potential is singular at the origin"));
    }
    Ok((t / r).powf(al))
}

/// Closed form `N |W_1| |alpha|^{p-1} |r^alpha - R^alpha|^{1-p}` of the
/// Wulff annulus capacity; `R = inf` is allowed.
pub fn annulus_capacity_closed_form(a: &Anisotropy, p: f64, r: f64, big_r: f64) -> Result<f64> {
    let al = alpha(a, p)?;
    if !(r > 0.0 && big_r > r) {
        return Err(invalid(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    let n = a.dim() as f64;
    let ra = if big_r.is_infinite() { 0.0 } else { big_r.powf(al) };
    Ok(n * a.wulff_volume()? * al.abs().powf(p - 1.0) * (r.powf(al) - ra).abs().powf(1.0 - p))
}

/// Capacity of `W̄_r` relative to `W_R` by adaptive quadrature of the
/// layer-cake integral `N |W_1| ∫_r^R |v'(t)|^p t^{N-1} dt`.
pub fn annulus_capacity_exact(a: &Anisotropy, p: f64, r: f64, big_r: f64) -> Result<f64> {
    let al = alpha(a, p)?;
    radii(r, big_r)?;
    let n = a.dim() as f64;
    let k = al / (r.powf(al) - big_r.powf(al));
    // Substituting t = e^s flattens the integrand for wide annuli.
    let integral = numeric::adaptive_simpson(
        |s| {
            let t = s.exp();
            (k * t.powf(al - 1.0)).abs().powf(p) * t.powf(n)
        },
        r.ln(),
        big_r.ln(),
        1e-10,
    )?;
    Ok(n * a.wulff_volume()? * integral)
}

/// Lipschitz constant `L_1` of the inner barrier `eta`:
/// `(|N - p| / (p - 1)) r^{(1-N)/(p-1)} / ((r^alpha - R0^alpha) c)`.
pub fn lipschitz_bound_l1(a: &Anisotropy, p: f64, r: f64, r0: f64) -> Result<f64> {
    let al = alpha(a, p)?;
    radii(r, r0)?;
    let n = a.dim() as f64;
    Ok(((n - p).abs() / (p - 1.0)) * r.powf((1.0 - n) / (p - 1.0))
        / ((r.powf(al) - r0.powf(al)) * a.equiv_lower()))
}
