//! Sampled test of the uniform interior Wulff-ball condition: every boundary
//! point `x` is touched from inside by a translate `y + W̄_r ⊆ Ω̄`.

use rayon::prelude::*;

use super::DomainSpec;
use crate::anisotropy::Anisotropy;
use crate::error::{invalid, Result};
use crate::numeric;

/// Outcome of [`check_wulff_condition`].
#[derive(Clone, Debug, PartialEq)]
pub struct WulffCondition {
    pub pass: bool,
    /// First failing boundary point in sampling order.
    pub witness: Option<[f64; 2]>,
    /// Every failing boundary sample.
    pub failures: Vec<[f64; 2]>,
    /// Largest over boundary samples of the smallest achievable excess.
    pub worst_excess: f64,
    pub tolerance: f64,
    pub samples: usize,
}

const SHAPE_POINTS: usize = 128;
const SCAN_ANGLES: usize = 180;

/// Check the condition at `m` boundary samples; a sample passes when some
/// translate leaves `Ω̄` by at most `tol`.
///
/// Touching translates are `y = x - r b` with `F°(b) = 1`, so the search
/// runs over the unit Wulff boundary: two analytic candidates (the normal
/// direction and the radial direction) are tried first, then an angular
/// scan with golden-section refinement around the best angles.
pub fn check_wulff_condition(
    a: &Anisotropy,
    d: &DomainSpec,
    r: f64,
    m: usize,
    tol: f64,
) -> Result<WulffCondition> {
    if !(r > 0.0) {
        return Err(invalid("Wulff radius must be positive"));
    }
    if a.dim() != 2 {
        return Err(invalid("the Wulff condition check is planar"));
    }
    let unit_pt = |phi: f64| {
        let u = [phi.cos(), phi.sin()];
        let s = 1.0 / a.polar_raw(&u);
        [s * u[0], s * u[1]]
    };
    let shape: Vec<[f64; 2]> = (0..SHAPE_POINTS)
        .map(|k| unit_pt(std::f64::consts::TAU * k as f64 / SHAPE_POINTS as f64))
        .collect();
    let excess = |y: [f64; 2]| {
        shape.iter().fold(0.0f64, |m, b| m.max(d.excess([y[0] + r * b[0], y[1] + r * b[1]])))
    };
    let at_angle = |x: [f64; 2], phi: f64| {
        let b = unit_pt(phi);
        excess([x[0] - r * b[0], x[1] - r * b[1]])
    };

    let samples = d.boundary_samples(m);
    let best: Vec<f64> = samples
        .par_iter()
        .map(|s| {
            let x = s.point;
            let mut best = f64::INFINITY;
            let mut cands = Vec::with_capacity(2);
            let delta = a.subgrad(&s.normal).expect("planar normal");
            cands.push(delta[1].atan2(delta[0]));
            cands.push(x[1].atan2(x[0]));
            for phi in cands {
                best = best.min(at_angle(x, phi));
                if best <= tol {
                    return best;
                }
            }
            let step = std::f64::consts::TAU / SCAN_ANGLES as f64;
            let mut scan: Vec<(f64, f64)> =
                (0..SCAN_ANGLES).map(|k| (at_angle(x, k as f64 * step), k as f64 * step)).collect();
            scan.sort_by(|p, q| p.0.total_cmp(&q.0));
            for &(v, phi) in scan.iter().take(4) {
                best = best.min(v);
                if best <= tol {
                    return best;
                }
                let (_, neg) = numeric::golden_max(|t| -at_angle(x, t), phi - step, phi + step, 60);
                best = best.min(-neg);
                if best <= tol {
                    return best;
                }
            }
            best
        })
        .collect();

    let failures: Vec<[f64; 2]> =
        samples.iter().zip(&best).filter(|(_, v)| **v > tol).map(|(s, _)| s.point).collect();
    Ok(WulffCondition {
        pass: failures.is_empty(),
        witness: failures.first().copied(),
        worst_excess: best.iter().cloned().fold(0.0, f64::max),
        failures,
        tolerance: tol,
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wulff_shape_satisfies_its_own_condition() {
        let l1 = Anisotropy::l1(2).unwrap();
        let d = DomainSpec::wulff(&l1, 1.0).unwrap();
        let c = check_wulff_condition(&l1, &d, 1.0, 512, 1e-9).unwrap();
        assert!(c.pass, "{:?}", c.witness);
        let e = Anisotropy::euclidean(2).unwrap();
        let c = check_wulff_condition(&e, &DomainSpec::disk(1.0).unwrap(), 1.0, 512, 1e-9).unwrap();
        assert!(c.pass);
        let c = check_wulff_condition(&e, &DomainSpec::disk(1.0).unwrap(), 0.5, 512, 1e-9).unwrap();
        assert!(c.pass);
    }

    #[test]
    fn too_large_radius_fails() {
        let e = Anisotropy::euclidean(2).unwrap();
        let c = check_wulff_condition(&e, &DomainSpec::disk(1.0).unwrap(), 1.1, 64, 1e-9).unwrap();
        assert!(!c.pass && c.failures.len() == c.samples);
    }

    #[test]
    fn disk_under_l1_fails_on_the_axes() {
        // An axis-aligned square inside the unit disk cannot reach (1, 0).
        let l1 = Anisotropy::l1(2).unwrap();
        let c = check_wulff_condition(&l1, &DomainSpec::disk(1.0).unwrap(), 0.5f64.sqrt(), 256, 1e-9).unwrap();
        assert!(!c.pass);
        assert_eq!(c.witness, Some([1.0, 0.0]));
        // The diagonal points are touched by the inscribed square.
        let diag = [0.5f64.sqrt(), 0.5f64.sqrt()];
        assert!(c.failures.iter().all(|f| (f[0] - diag[0]).hypot(f[1] - diag[1]) > 1e-3));
    }

    #[test]
    fn l_shape_fails_at_reentrant_corner() {
        let l1 = Anisotropy::l1(2).unwrap();
        let d = DomainSpec::polygon(vec![[-0.5, -0.5], [1.5, -0.5], [1.5, 0.5], [0.5, 0.5], [0.5, 1.5], [-0.5, 1.5]])
            .unwrap();
        let ok = check_wulff_condition(&l1, &d, 0.5, 256, 1e-9).unwrap();
        assert!(ok.pass, "{:?}", ok.witness);
        let bad = check_wulff_condition(&l1, &d, 0.6, 256, 1e-9).unwrap();
        assert!(!bad.pass);
        assert!(bad.failures.contains(&[0.5, 0.5]));
    }
}
