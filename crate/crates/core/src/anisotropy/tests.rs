use super::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

fn all_kinds() -> Vec<Anisotropy> {
    vec![
        Anisotropy::euclidean(2).unwrap(),
        Anisotropy::l1(2).unwrap(),
        Anisotropy::linf(2).unwrap(),
        Anisotropy::weighted_l2(&[1.0, 4.0]).unwrap(),
        Anisotropy::l1(2).unwrap().regularize(0.5).unwrap(),
        Anisotropy::support_sampled(&[vec![1.0, 0.0], vec![0.5, 1.0], vec![-0.5, 1.0]]).unwrap(),
        Anisotropy::l1(3).unwrap(),
        Anisotropy::linf(3).unwrap().regularize(0.2).unwrap(),
    ]
}

#[test]
fn evaluation_examples() {
    let l1 = Anisotropy::l1(2).unwrap();
    assert_eq!(l1.eval(&[1.0, -2.0]).unwrap(), 3.0);
    assert_eq!(l1.polar(&[1.0, -2.0]).unwrap(), 2.0);
    let e = Anisotropy::euclidean(2).unwrap();
    assert_eq!(e.eval(&[3.0, 4.0]).unwrap(), 5.0);
    assert_eq!(e.polar(&[3.0, 4.0]).unwrap(), 5.0);
    let r = l1.regularize(0.5).unwrap();
    assert_eq!(r.eval(&[1.0, 0.0]).unwrap(), 1.5);
    assert_eq!((r.equiv_lower(), r.equiv_upper()), (1.5, 2f64.sqrt() + 0.5));
    let r1 = l1.regularize(1.0).unwrap();
    assert!(close(r1.polar(&[1.0, 0.0]).unwrap(), 0.5, 1e-12));
}

#[test]
fn dimension_mismatch_is_reported() {
    let e = Anisotropy::euclidean(2).unwrap();
    assert!(matches!(e.eval(&[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { expected: 2, got: 3 })));
    assert!(Anisotropy::euclidean(4).is_err());
}

#[test]
fn parse_names() {
    assert_eq!(Anisotropy::parse("l1", 2).unwrap(), Anisotropy::l1(2).unwrap());
    let w = Anisotropy::parse("weighted-l2(1,4)", 2).unwrap();
    assert_eq!(w.to_string(), "weighted-l2(1,4)");
    let r = Anisotropy::parse("regularized(l1,0.5)", 2).unwrap();
    assert_eq!(r.to_string(), "regularized(l1,0.5)");
    let nested = Anisotropy::parse("regularized(weighted-l2(1,2),0.1)", 2).unwrap();
    assert!(nested.is_strictly_convex());
    assert!(Anisotropy::parse("l3", 2).is_err());
    assert!(Anisotropy::parse("weighted-l2(1)", 2).is_err());
}

#[test]
fn minimal_section_examples() {
    let l1 = Anisotropy::l1(2).unwrap();
    assert_eq!(l1.subgrad(&[1.0, -2.0]).unwrap(), vec![1.0, -1.0]);
    assert_eq!(l1.subgrad(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    for a in all_kinds() {
        let z = vec![0.0; a.dim()];
        assert_eq!(a.subgrad(&z).unwrap(), z);
    }
    let linf = Anisotropy::linf(2).unwrap();
    assert_eq!(linf.subgrad(&[1.0, -1.0]).unwrap(), vec![0.5, -0.5]);
    // Regularized l1 on an axis: base segment plus eps e_1 has least norm at (1 + eps, 0).
    let r = l1.regularize(0.5).unwrap();
    let d = r.subgrad(&[2.0, 0.0]).unwrap();
    assert!(close(d[0], 1.5, 1e-14) && d[1] == 0.0);
}

#[test]
fn subgrad_p_examples() {
    let e = Anisotropy::euclidean(2).unwrap();
    assert_eq!(e.subgrad_p(2.0, &[3.0, 4.0]).unwrap(), vec![6.0, 8.0]);
    let l1 = Anisotropy::l1(2).unwrap();
    assert_eq!(l1.subgrad_p(2.0, &[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
    assert_eq!(l1.subgrad_p(1.5, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    assert!(l1.subgrad_p(1.0, &[1.0, 0.0]).is_err());
}

#[test]
fn resolvent_and_envelope_closed_forms() {
    let e = Anisotropy::euclidean(2).unwrap();
    let cfg = ProxConfig::new(0.5).unwrap();
    let j = e.resolvent_p(2.0, &cfg, &[2.0, 0.0]).unwrap();
    assert!(close(j[0], 1.0, 1e-14) && j[1] == 0.0);
    let g = e.yosida_grad_p(2.0, &cfg, &[2.0, 0.0]).unwrap();
    assert!(close(g[0], 2.0, 1e-14) && g[1] == 0.0);
    assert!(close(e.moreau_yosida_p(2.0, &cfg, &[1.0, 0.0]).unwrap(), 0.5, 1e-14));
    for a in all_kinds() {
        let z = vec![0.0; a.dim()];
        assert_eq!(a.moreau_yosida_p(1.5, &cfg, &z).unwrap(), 0.0);
        assert_eq!(a.resolvent_p(1.5, &cfg, &z).unwrap(), z);
    }
}

/// Brute-force minimization of the resolvent objective on a fine 2-D grid.
fn brute_resolvent(a: &Anisotropy, p: f64, lambda: f64, xi: [f64; 2]) -> ([f64; 2], f64) {
    let obj = |e: [f64; 2]| {
        let d = (e[0] - xi[0]).powi(2) + (e[1] - xi[1]).powi(2);
        d / (2.0 * lambda) + a.eval(&e).unwrap().powf(p)
    };
    let (mut c, mut w) = ([xi[0] / 2.0, xi[1] / 2.0], 2.0 * xi[0].abs().max(xi[1].abs()));
    let mut best = (c, obj(c));
    for _ in 0..30 {
        for i in -20..=20 {
            for k in -20..=20 {
                let e = [c[0] + w * i as f64 / 20.0, c[1] + w * k as f64 / 20.0];
                let v = obj(e);
                if v < best.1 {
                    best = (e, v);
                }
            }
        }
        c = best.0;
        w *= 0.3;
    }
    best
}

#[test]
fn resolvent_matches_brute_force() {
    let cases = [
        (Anisotropy::l1(2).unwrap(), 2.0, 0.1, [1.0, 1.0]),
        (Anisotropy::l1(2).unwrap(), 1.5, 0.1, [1.0, 1.0]),
        (Anisotropy::l1(2).unwrap(), 1.5, 0.3, [1.0, 0.2]),
        (Anisotropy::linf(2).unwrap(), 1.5, 0.2, [1.0, 0.7]),
        (Anisotropy::weighted_l2(&[1.0, 4.0]).unwrap(), 1.7, 0.2, [0.4, -0.9]),
        (Anisotropy::l1(2).unwrap().regularize(0.3).unwrap(), 1.5, 0.2, [0.8, 0.1]),
        (Anisotropy::l1(2).unwrap().regularize(0.05).unwrap(), 1.5, 0.05, [0.9, -0.7]),
        (Anisotropy::l1(2).unwrap().regularize(0.05).unwrap(), 2.5, 0.3, [-0.3, 1.1]),
        (Anisotropy::l1(2).unwrap().regularize(0.2).unwrap(), 1.2, 0.4, [0.05, 0.02]),
        (all_kinds()[5].clone(), 1.5, 0.2, [0.8, 0.3]),
    ];
    for (a, p, lambda, xi) in cases {
        let cfg = ProxConfig::new(lambda).unwrap();
        let j = a.resolvent_p(p, &cfg, &xi).unwrap();
        let v = a.moreau_yosida_p(p, &cfg, &xi).unwrap();
        let (bj, bv) = brute_resolvent(&a, p, lambda, xi);
        assert!(v <= bv + 1e-12, "{a}: {v} vs brute {bv}");
        assert!(close(v, bv, 1e-9), "{a}: {v} vs brute {bv}");
        assert!((j[0] - bj[0]).abs() < 1e-5 && (j[1] - bj[1]).abs() < 1e-5, "{a}: {j:?} vs {bj:?}");
        assert!(v <= a.eval(&xi).unwrap().powf(p));
    }
    let l1 = Anisotropy::l1(2).unwrap();
    let j = l1.resolvent_p(1.5, &ProxConfig::new(0.1).unwrap(), &[1.0, 1.0]).unwrap();
    assert!(j.iter().all(|c| (0.0..=1.0).contains(c)));
}

#[test]
fn yosida_gradient_tends_to_minimal_section() {
    let l1 = Anisotropy::l1(2).unwrap();
    let xi = [1.0, -2.0];
    let target = l1.subgrad_p(1.5, &xi).unwrap();
    let mut prev = f64::INFINITY;
    for k in 1..8 {
        let cfg = ProxConfig::new(10f64.powi(-k)).unwrap();
        let g = l1.yosida_grad_p(1.5, &cfg, &xi).unwrap();
        let err = ((g[0] - target[0]).powi(2) + (g[1] - target[1]).powi(2)).sqrt();
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 1e-5);
}

#[test]
fn k_lambda_examples() {
    let e = Anisotropy::euclidean(2).unwrap();
    let k = e.k_lambda(1.5, 0.01).unwrap();
    assert!((k - 0.005_333_4).abs() < 1e-6, "{k}");
    let q = 1.0 - 2f64.powf(-2.0 / 3.0);
    assert!(close(e.k_lambda(1.5, 1.0).unwrap(), (1.0 / (q * q)).powi(2), 1e-12));
    assert!(e.k_lambda(1.5, 1e-12).unwrap() < 1e-20);
    assert!(e.k_lambda(2.0, 0.1).is_err());
}

#[test]
fn wulff_volumes() {
    use std::f64::consts::PI;
    assert_eq!(Anisotropy::l1(2).unwrap().wulff_volume().unwrap(), 4.0);
    assert_eq!(Anisotropy::linf(2).unwrap().wulff_volume().unwrap(), 2.0);
    assert_eq!(Anisotropy::euclidean(2).unwrap().wulff_volume().unwrap(), PI);
    // Wulff shape of l1 + eps|.| is the square grown by an eps-disk.
    let eps = 0.25;
    let v = Anisotropy::l1(2).unwrap().regularize(eps).unwrap().wulff_volume().unwrap();
    let want = 4.0 + 8.0 * eps + PI * eps * eps;
    assert!(close(v, want, 1e-8), "{v} vs {want}");
    // These support points give max(|x+y|, |x-y|) = |x| + |y|.
    let s = Anisotropy::support_sampled(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    assert!(close(s.wulff_volume().unwrap(), 4.0, 1e-8));
    let v3 = Anisotropy::euclidean(3).unwrap().regularize(0.5).unwrap().wulff_volume().unwrap();
    assert!(close(v3, 4.0 * PI / 3.0 * 1.5f64.powi(3), 1e-4), "{v3}");
}

#[test]
fn sampled_polar_matches_closed_forms() {
    let s = Anisotropy::support_sampled(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    let l1 = Anisotropy::l1(2).unwrap();
    for x in [[1.0, 0.3], [-0.2, 0.9], [0.5, 0.5]] {
        assert!(close(s.eval(&x).unwrap(), l1.eval(&x).unwrap(), 1e-14));
        assert!(close(s.polar(&x).unwrap(), l1.polar(&x).unwrap(), 1e-10));
    }
    let e3 = Anisotropy::euclidean(3).unwrap();
    let x = [0.3, -0.4, 1.2];
    assert!(close(sampled_dual(3, |d| e3.f(d), &x), norm2(&x), 1e-10));
}
