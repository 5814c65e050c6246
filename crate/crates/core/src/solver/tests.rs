use super::*;
use crate::wulff::{barrier_profile, DomainSpec};

fn euclid_problem() -> AnnulusProblem {
    let e = Anisotropy::euclidean(2).unwrap();
    AnnulusProblem::new(DomainSpec::disk(1.0).unwrap(), e, 1.5, 2.0).unwrap()
}

#[test]
fn stage_list_shape() {
    let s = Schedule::default();
    let st = s.stage_params(true);
    assert_eq!(st.len(), 9);
    assert!(st.iter().all(|p| p.eps == 0.0));
    let last = st.last().unwrap();
    assert_eq!((last.mu, last.eps), (0.0, 0.0));
    assert!((last.lambda - 0.1 / 128.0).abs() < 1e-15);
    let st = s.stage_params(false);
    assert!((st[3].eps - 0.0125).abs() < 1e-15);
}

#[test]
fn euclidean_disk_matches_radial_profile() {
    let pb = euclid_problem();
    let res = solve_annulus(&pb, 1.0 / 32.0, &Schedule::default()).unwrap();
    assert!(res.converged);
    let alpha = pb.alpha();
    let mut err = 0.0f64;
    for &k in res.grid.interior_nodes() {
        let x = res.grid.coords(k);
        err = err.max((res.u.values[k] - barrier_profile(alpha, 1.0, 2.0, x[0].hypot(x[1]))).abs());
    }
    assert!(err < 0.05, "{err}");
    assert!(res.residuals.dual_feasibility < 1e-9);
}
