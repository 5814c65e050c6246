//! End-to-end acceptance suite. Each criterion prints one `PASS` or `FAIL`
//! line with its measured values; the process exits non-zero if any fails.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::time::Instant;

use anisocap::capacity::{capacity_sweep, check_sandwich, HPolicy, SANDWICH_C_TOL};
use anisocap::grid::NodeClass;
use anisocap::solver::{solve_annulus, Schedule, SolveResult};
use anisocap::verify::{
    calculus_properties, check_p1_example, comparison_test, default_kinds, lipschitz_check, p1_perimeter_b1,
    uniqueness_test, P1Set, Report,
};
use anisocap::wulff::{annulus_capacity_exact, barrier_v, AnnulusProblem, DomainSpec};
use anisocap::{Anisotropy, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Every converged solve is collected here for the Euler-Lagrange criterion.
#[derive(Default)]
struct Solves(Vec<(String, SolveResult)>);

impl Solves {
    fn keep(&mut self, label: impl Into<String>, r: &SolveResult) {
        if r.converged {
            self.0.push((label.into(), r.clone()));
        }
    }
}

fn wulff_problem(a: &Anisotropy) -> Result<AnnulusProblem> {
    AnnulusProblem::new(DomainSpec::wulff(a, 1.0)?, a.clone(), 1.5, 2.0)
}

/// Largest deviation from the exact barrier `v_{1,2}` over the unknowns.
fn max_error(a: &Anisotropy, res: &SolveResult) -> Result<f64> {
    let g = &res.grid;
    let mut worst = 0.0f64;
    for &k in g.interior_nodes() {
        let x = g.coords(k);
        worst = worst.max((res.u.values[k] - barrier_v(a, 1.5, 1.0, 2.0, &x)?).abs());
    }
    Ok(worst)
}

fn exact_euclidean(solves: &mut Solves) -> Result<Outcome> {
    let e = Anisotropy::euclidean(2)?;
    let pb = wulff_problem(&e)?;
    let oracle = 2.0 * SQRT_2 * PI;
    let quad = annulus_capacity_exact(&e, 1.5, 1.0, 2.0)?;
    let mut logs = Vec::new();
    let mut pts = Vec::new();
    let mut slow = 0.0f64;
    let mut cap = 0.0;
    for n in [32.0, 64.0, 128.0] {
        let h = 1.0 / n;
        let t = Instant::now();
        let res = solve_annulus(&pb, h, &Schedule::default())?;
        let secs = t.elapsed().as_secs_f64();
        slow = slow.max(secs);
        let err = max_error(&e, &res)?;
        logs.push(format!("h=1/{n}: err={err:.3e} err/h={:.3} cap={:.5} t={secs:.1}s", err / h, res.energy));
        pts.push((h.ln(), err.ln()));
        cap = res.energy;
        if !res.converged {
            return Ok(Outcome::new(false, format!("h = 1/{n} did not converge")));
        }
        solves.keep(format!("euclidean W_1 h=1/{n}"), &res);
    }
    let rate = slope(&pts);
    let rel = (cap / oracle - 1.0).abs();
    let pass = rate >= 0.8 && rel <= 0.02 && slow <= 120.0 && (quad / oracle - 1.0).abs() < 1e-8;
    Ok(Outcome::new(
        pass,
        format!("{}; rate={rate:.3}; cap rel err {rel:.2e} vs 2*sqrt(2)*pi (quadrature {quad:.8})", logs.join("; ")),
    ))
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn exact_crystalline(pb: &AnnulusProblem, res: &SolveResult) -> Result<Outcome> {
    let oracle = 8.0 * SQRT_2;
    let err = max_error(&pb.anisotropy, res)?;
    let rel = (res.energy / oracle - 1.0).abs();
    Ok(Outcome::new(
        res.converged && err <= 0.05 && rel <= 0.02,
        format!("max err {err:.3e} (<= 0.05); cap {:.5} rel err {rel:.2e} vs 8*sqrt(2)", res.energy),
    ))
}

fn sandwich(solves: &mut Solves) -> Result<Outcome> {
    let pb = AnnulusProblem::new(DomainSpec::disk(1.0)?, Anisotropy::l1(2)?, 1.5, 2.0)?;
    let res = solve_annulus(&pb, 1.0 / 64.0, &Schedule::default())?;
    solves.keep("l1 disk h=1/64", &res);
    let good = check_sandwich(&pb, &res, 1.0 / SQRT_2, 1.0, SANDWICH_C_TOL)?;
    let bad = check_sandwich(&pb, &res, 0.9, 1.0, SANDWICH_C_TOL)?;
    Ok(Outcome::new(
        res.converged && good.pass && !bad.pass,
        format!(
            "r1=1/sqrt(2): worst {:.3e} <= {:.3e}; negative control r1=0.9: worst {:.3e}, pass={}",
            good.worst_value, good.tolerance, bad.worst_value, bad.pass
        ),
    ))
}

fn sweep(solves: &mut Solves) -> Result<Outcome> {
    let e = Anisotropy::euclidean(2)?;
    let dom = DomainSpec::wulff(&e, 1.0)?;
    let curve = capacity_sweep(&dom, &e, 1.5, &[2.0, 4.0, 8.0], HPolicy::default(), &Schedule::default(), 11)?;
    for en in &curve.entries {
        solves.keep(format!("sweep R={}", en.outer_radius), &en.result);
    }
    let field = curve.field_monotonicity();
    let rel = (curve.cap_infinity / TAU - 1.0).abs();
    let caps: Vec<String> = curve.entries.iter().map(|en| format!("{:.5}", en.capacity)).collect();
    Ok(Outcome::new(
        field.pass && curve.capacity_monotone() && rel <= 0.03,
        format!(
            "caps [{}]; worst field decrease {:.1e}; Cap_inf {:.5} rel err {rel:.2e} vs 2*pi",
            caps.join(", "),
            field.worst_value,
            curve.cap_infinity
        ),
    ))
}

fn euler_lagrange(solves: &Solves) -> Outcome {
    let mut fails = Vec::new();
    let mut worst = [0.0f64; 3];
    for (label, r) in &solves.0 {
        let s = &r.residuals;
        let h = r.grid.h();
        let ratios = [s.dual_feasibility / 1e-8, s.alignment / (1e-3 * s.alignment_scale), s.weak_div / (10.0 * h * s.flux_scale)];
        for (w, q) in worst.iter_mut().zip(ratios) {
            *w = w.max(q);
        }
        if ratios.iter().any(|&q| !(q <= 1.0)) {
            fails.push(label.clone());
        }
    }
    Outcome::new(
        fails.is_empty() && !solves.0.is_empty(),
        format!(
            "{} converged solves; worst residual/tolerance: dual {:.2e}, alignment {:.2e}, weak div {:.2e}{}",
            solves.0.len(),
            worst[0],
            worst[1],
            worst[2],
            if fails.is_empty() { String::new() } else { format!("; failing: {}", fails.join(", ")) }
        ),
    )
}

fn calculus() -> Result<Outcome> {
    let t = Instant::now();
    let reps = calculus_properties(&default_kinds()?, 1000, 2024)?;
    let secs = t.elapsed().as_secs_f64();
    let failed: Vec<&str> = reps.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    Ok(Outcome::new(
        failed.is_empty() && secs <= 10.0,
        format!("{} checks, {} failed {:?}; {secs:.2}s", reps.len(), failed.len(), failed),
    ))
}

fn comparison_and_uniqueness() -> Result<Outcome> {
    let l1 = Anisotropy::l1(2)?;
    let pb = wulff_problem(&l1)?;
    let sched = Schedule { tolerance: 1e-7, ..Schedule::default() };
    let h = 1.0 / 16.0;
    let phi2 = |c: NodeClass, _| if c == NodeClass::DirichletInner { 1.0 } else { 0.0 };
    let phi1 = |c: NodeClass, _| if c == NodeClass::DirichletInner { 0.8 } else { 0.0 };
    let cmp = comparison_test(&pb, 0.05, h, phi1, phi2, &sched)?;
    let uniq = uniqueness_test(&pb, 0.05, h, &sched, 5)?;
    Ok(Outcome::new(
        cmp.pass && uniq.iter().all(|r| r.pass),
        format!(
            "max(u1 - u2) = {:.3e} (<= 1e-6); warm starts differ by {:.3e} (<= 1e-5), energies by {:.1e} (<= 1e-8)",
            cmp.worst_value, uniq[0].worst_value, uniq[1].worst_value
        ),
    ))
}

fn lipschitz(pb: &AnnulusProblem, res: &SolveResult) -> Result<Outcome> {
    let rep = lipschitz_check(pb, res, 1.0)?;
    Ok(Outcome::new(
        rep.pass && rep.checked,
        format!("discrete {:.4} <= bound {:.4} ({})", rep.worst_value, rep.tolerance, rep.note.unwrap_or_default()),
    ))
}

fn p1_example() -> Result<Outcome> {
    let mut all: Vec<Report> = Vec::new();
    let mut cs = Vec::new();
    for set in [P1Set::E1, P1Set::E2] {
        for n in [64.0, 128.0] {
            let h = 1.0 / n;
            let reps = check_p1_example(set, h)?;
            let wd = reps.iter().find(|r| r.check == "p1_weak_divergence").map_or(f64::NAN, |r| r.worst_value);
            cs.push(format!("{set} h=1/{n}: c={:.2e}", wd / h));
            all.extend(reps);
        }
    }
    let per = p1_perimeter_b1(1 << 16);
    let failed: Vec<&str> = all.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    Ok(Outcome::new(
        failed.is_empty() && (per - 8.0).abs() <= 0.01,
        format!("{}; Per_1(B_1) = {per:.6}; failed {:?}", cs.join(", "), failed),
    ))
}

fn report(n: usize, name: &str, out: Result<Outcome>, secs: f64, ok: &mut bool) {
    let out = out.unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
    *ok &= out.pass;
    println!("criterion {n} [{}] {name}: {} ({secs:.1}s)", if out.pass { "PASS" } else { "FAIL" }, out.detail);
}

/// Run a criterion on a solve shared between criteria, failing it if the
/// solve itself failed.
fn shared(res: &std::result::Result<SolveResult, String>, f: impl FnOnce(&SolveResult) -> Result<Outcome>) -> Result<Outcome> {
    match res {
        Ok(r) => f(r),
        Err(e) => Ok(Outcome::new(false, format!("solve failed: {e}"))),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn main() {
    let mut ok = true;
    let mut solves = Solves::default();

    let (o, s) = timed(|| exact_euclidean(&mut solves));
    report(1, "exact solution, euclidean", o, s, &mut ok);

    let l1 = Anisotropy::l1(2).expect("l1 norm");
    let pb = wulff_problem(&l1).expect("l1 problem");
    let (crystal, s_solve) = timed(|| solve_annulus(&pb, 1.0 / 64.0, &Schedule::default()).map_err(|e| e.to_string()));
    if let Ok(r) = &crystal {
        solves.keep("l1 W_1 h=1/64", r);
    }
    let (o, s) = timed(|| shared(&crystal, |r| exact_crystalline(&pb, r)));
    report(2, "exact solution, crystalline", o, s + s_solve, &mut ok);

    let (o, s) = timed(|| sandwich(&mut solves));
    report(3, "barrier sandwich", o, s, &mut ok);

    let (o, s) = timed(|| sweep(&mut solves));
    report(4, "monotone R-sweep", o, s, &mut ok);

    let (o, s) = timed(|| Ok(euler_lagrange(&solves)));
    report(5, "Euler-Lagrange certificate", o, s, &mut ok);

    let (o, s) = timed(calculus);
    report(6, "anisotropy calculus", o, s, &mut ok);

    let (o, s) = timed(comparison_and_uniqueness);
    report(7, "comparison and uniqueness", o, s, &mut ok);

    let (o, s) = timed(|| shared(&crystal, |r| lipschitz(&pb, r)));
    report(8, "Lipschitz bound", o, s, &mut ok);

    let (o, s) = timed(p1_example);
    report(9, "one-homogeneous example", o, s, &mut ok);

    if !ok {
        std::process::exit(1);
    }
}
