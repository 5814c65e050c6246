//! Command execution and artifact emission.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anisocap::capacity::{capacity_sweep, check_sandwich, relative_capacity, HPolicy};
use anisocap::solver::{certify, solve_annulus, Schedule, SolveResult};
use anisocap::verify::{calculus_properties, check_p1_example, default_kinds, lipschitz_check, P1Set, Report};
use anisocap::wulff::{radius_bounds, AnnulusProblem, DomainSpec};
use anisocap::Anisotropy;
use serde_json::{json, Value};

use crate::config::{ConfigError, Settings};
use crate::Failure;

pub const SCHEDULE_KEYS: &[&str] = &[
    "lambda0",
    "mu0",
    "eps0",
    "stages",
    "lambda_floor",
    "tolerance",
    "stage_tolerance",
    "max_iters",
    "coarse_to_fine",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Solve,
    Capacity,
    Sweep,
    VerifyBarriers,
    VerifyLipschitz,
    VerifyP1,
    CalculusProps,
}

struct Ctx {
    out: PathBuf,
    seed: u64,
    timing: bool,
}

impl Ctx {
    fn file(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn write_json(&self, name: &str, v: &impl serde::Serialize) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Solver(e.to_string()))?;
        let mut f = self.file(name)?;
        writeln!(f, "{text}")?;
        f.flush()?;
        Ok(())
    }

    fn time(&self, t: f64) -> f64 {
        if self.timing {
            t
        } else {
            0.0
        }
    }
}

fn schedule(s: &Settings) -> Result<Schedule, Failure> {
    let d = Schedule::default();
    let sched = Schedule {
        lambda0: s.real("lambda0")?.unwrap_or(d.lambda0),
        mu0: s.real("mu0")?.unwrap_or(d.mu0),
        eps0: s.real("eps0")?.unwrap_or(d.eps0),
        stages: s.get_or("stages", d.stages)?,
        lambda_floor: s.real("lambda_floor")?.unwrap_or(d.lambda_floor),
        tolerance: s.real("tolerance")?.unwrap_or(d.tolerance),
        stage_tolerance: s.real("stage_tolerance")?.unwrap_or(d.stage_tolerance),
        max_iters: s.get_or("max_iters", d.max_iters)?,
        coarse_to_fine: s.boolean("coarse_to_fine", d.coarse_to_fine)?,
    };
    sched.validate()?;
    Ok(sched)
}

fn anisotropy(s: &Settings) -> Result<Anisotropy, Failure> {
    Ok(Anisotropy::parse(s.raw("aniso").unwrap_or("euclidean"), 2)?)
}

fn domain(s: &Settings, a: &Anisotropy) -> Result<DomainSpec, Failure> {
    Ok(DomainSpec::parse(s.raw("domain").unwrap_or("wulff(1)"), a)?)
}

fn exponent(s: &Settings) -> Result<f64, Failure> {
    Ok(s.real("p")?.unwrap_or(1.5))
}

fn spacing(s: &Settings) -> Result<f64, Failure> {
    Ok(s.real("h")?.unwrap_or(1.0 / 64.0))
}

fn single_radius(s: &Settings) -> Result<f64, Failure> {
    match s.reals("R")?.as_deref() {
        None => Ok(2.0),
        Some([r]) => Ok(*r),
        Some(_) => Err(ConfigError("this command takes a single outer radius R".into()).into()),
    }
}

/// The condenser problem. Capacity semantics need `1 < p < 2`; plain
/// solves accept any `p > 1`.
fn problem(s: &Settings, capacity: bool) -> Result<AnnulusProblem, Failure> {
    let a = anisotropy(s)?;
    let d = domain(s, &a)?;
    let (p, r) = (exponent(s)?, single_radius(s)?);
    Ok(if capacity { AnnulusProblem::new(d, a, p, r)? } else { AnnulusProblem::dirichlet(d, a, p, r)? })
}

fn reports_json(reports: &[Report]) -> Value {
    serde_json::to_value(reports).unwrap_or(Value::Null)
}

/// Exit with status 1 unless every report passed or is out of scope.
fn require(reports: &[Report]) -> Result<(), Failure> {
    let failed: Vec<&str> = reports.iter().filter(|r| !r.acceptable()).map(|r| r.check.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join(", ")))
    }
}

fn solve_summary(ctx: &Ctx, pb: &AnnulusProblem, res: &SolveResult) -> Value {
    let r = &res.residuals;
    json!({
        "aniso": pb.anisotropy.to_string(),
        "domain": pb.domain.to_string(),
        "p": pb.p,
        "R": pb.outer_radius,
        "h": res.grid.h(),
        "energy": res.energy,
        "residual_dual_feasibility": r.dual_feasibility,
        "residual_alignment": r.alignment,
        "residual_alignment_scale": r.alignment_scale,
        "residual_weak_div": r.weak_div,
        "residual_flux_scale": r.flux_scale,
        "energy_gap": r.energy_gap,
        "iterations": res.iterations,
        "converged": res.converged,
        "final_lambda": res.final_lambda,
        "wall_time_s": ctx.time(res.wall_time),
    })
}

/// `u` along the ray `{x >= 0, y = 0}` as two whitespace-separated columns.
fn write_profile(ctx: &Ctx, res: &SolveResult) -> Result<(), Failure> {
    let g = &res.grid;
    let mut f = ctx.file("profile.dat")?;
    writeln!(f, "# x u")?;
    let start = g.node_at([0.0, 0.0]).ok_or_else(|| Failure::Solver("origin is not a grid node".into()))?;
    for k in start..start + (g.nx() - start % g.nx()) {
        writeln!(f, "{} {}", g.coords(k)[0], res.u.values[k])?;
    }
    f.flush()?;
    Ok(())
}

fn solve_and_certify(ctx: &Ctx, pb: &AnnulusProblem, h: f64, sched: &Schedule) -> Result<SolveResult, Failure> {
    let mut res = solve_annulus(pb, h, sched)?;
    res.residuals = certify(pb, &res, ctx.seed)?;
    Ok(res)
}

fn not_converged(res: &SolveResult) -> Result<(), Failure> {
    if res.converged {
        Ok(())
    } else {
        Err(Failure::Solver(format!("final stage did not converge within {} iterations", res.iterations)))
    }
}

fn cmd_solve(ctx: &Ctx, s: &Settings) -> Result<(), Failure> {
    let pb = problem(s, false)?;
    let res = solve_and_certify(ctx, &pb, spacing(s)?, &schedule(s)?)?;
    res.grid.write_scalar_csv(&res.u, ctx.file("u.csv")?)?;
    res.grid.write_vector_csv(&res.direction, ctx.file("z.csv")?)?;
    res.grid.write_vector_csv(&res.flux, ctx.file("flux.csv")?)?;
    write_profile(ctx, &res)?;
    ctx.write_json("summary.json", &solve_summary(ctx, &pb, &res))?;
    println!("energy {:.10e}  iterations {}  converged {}", res.energy, res.iterations, res.converged);
    not_converged(&res)
}

fn cmd_capacity(ctx: &Ctx, s: &Settings) -> Result<(), Failure> {
    let pb = problem(s, true)?;
    let (cap, mut res) = relative_capacity(&pb, spacing(s)?, &schedule(s)?)?;
    res.residuals = certify(&pb, &res, ctx.seed)?;
    let mut summary = solve_summary(ctx, &pb, &res);
    summary["capacity"] = json!(cap);
    res.grid.write_scalar_csv(&res.u, ctx.file("u.csv")?)?;
    write_profile(ctx, &res)?;
    ctx.write_json("summary.json", &summary)?;
    println!("capacity {cap:.10e}");
    not_converged(&res)
}

fn cmd_sweep(ctx: &Ctx, s: &Settings) -> Result<(), Failure> {
    let a = anisotropy(s)?;
    let d = domain(s, &a)?;
    let p = exponent(s)?;
    let radii = s.reals("R")?.unwrap_or_else(|| vec![2.0, 4.0, 8.0]);
    let policy = match s.real("h")? {
        Some(h) => HPolicy::Fixed(h),
        None => {
            let HPolicy::Scaled { per_r1, max_nodes } = HPolicy::default() else { unreachable!() };
            HPolicy::Scaled {
                per_r1: s.real("per_r1")?.unwrap_or(per_r1),
                max_nodes: s.get_or("max_nodes", max_nodes)?,
            }
        }
    };
    let curve = capacity_sweep(&d, &a, p, &radii, policy, &schedule(s)?, ctx.seed)?;
    curve.write_csv(ctx.file("curve.csv")?, ctx.timing)?;
    let mut f = ctx.file("summary.json")?;
    writeln!(f, "{}", curve.summary_json(ctx.timing)?)?;
    f.flush()?;
    let mono = Report::bound(
        "capacity_monotone_in_R",
        if curve.capacity_monotone() { 0.0 } else { 1.0 },
        [0.0, 0.0],
        0.0,
    );
    let reports = vec![mono, curve.field_monotonicity()];
    ctx.write_json("report.json", &reports_json(&reports))?;
    println!("cap_infinity {:.10e}  alpha {}", curve.cap_infinity, curve.alpha);
    require(&reports)?;
    for e in &curve.entries {
        not_converged(&e.result)?;
    }
    Ok(())
}

fn cmd_barriers(ctx: &Ctx, s: &Settings) -> Result<(), Failure> {
    let pb = problem(s, true)?;
    let rb = radius_bounds(&pb.anisotropy, &pb.domain)?;
    let r1 = s.real("r1")?.unwrap_or(rb.r1);
    let r2 = s.real("r2")?.unwrap_or(rb.r2);
    let c_tol = s.real("c_tol")?.unwrap_or(anisocap::capacity::SANDWICH_C_TOL);
    let res = solve_and_certify(ctx, &pb, spacing(s)?, &schedule(s)?)?;
    let report = check_sandwich(&pb, &res, r1, r2, c_tol)?;
    ctx.write_json("summary.json", &solve_summary(ctx, &pb, &res))?;
    ctx.write_json("report.json", &reports_json(std::slice::from_ref(&report)))?;
    println!("barrier_sandwich worst {:.6e} tolerance {:.6e}", report.worst_value, report.tolerance);
    require(&[report])
}

fn cmd_lipschitz(ctx: &Ctx, s: &Settings) -> Result<(), Failure> {
    let pb = problem(s, true)?;
    let r = match s.real("r")? {
        Some(r) => r,
        None => radius_bounds(&pb.anisotropy, &pb.domain)?.r1,
    };
    let res = solve_and_certify(ctx, &pb, spacing(s)?, &schedule(s)?)?;
    let report = lipschitz_check(&pb, &res, r)?;
    ctx.write_json("summary.json", &solve_summary(ctx, &pb, &res))?;
    ctx.write_json("report.json", &reports_json(std::slice::from_ref(&report)))?;
    println!("lipschitz {:.6}  bound {:.6}", report.worst_value, report.tolerance);
    // An uncertified bound is a failure here: the check was asked for.
    if !report.checked {
        return Err(Failure::Check(report.note.unwrap_or_default()));
    }
    require(&[report])
}

fn cmd_p1(ctx: &Ctx, s: &Settings) -> Result<(), Failure> {
    let set: P1Set = s.raw("set").unwrap_or("E2").parse()?;
    let reports = check_p1_example(set, spacing(s)?)?;
    ctx.write_json("report.json", &reports_json(&reports))?;
    for r in &reports {
        println!("{:<24} {}", r.check, if !r.checked { "unchecked" } else if r.pass { "pass" } else { "FAIL" });
    }
    require(&reports)
}

fn cmd_calculus(ctx: &Ctx, s: &Settings) -> Result<(), Failure> {
    let points = s.get_or("points", 1000usize)?;
    if points == 0 {
        return Err(ConfigError("points must be positive".into()).into());
    }
    let reports = calculus_properties(&default_kinds()?, points, ctx.seed)?;
    ctx.write_json("report.json", &reports_json(&reports))?;
    let failed = reports.iter().filter(|r| !r.acceptable()).count();
    println!("{} checks, {} failed", reports.len(), failed);
    require(&reports)
}

fn init_threads(s: &Settings) -> Result<(), Failure> {
    if let Some(n) = s.get::<usize>("threads")? {
        if n == 0 {
            return Err(ConfigError("threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

pub fn run(task: Task, s: &Settings) -> Result<(), Failure> {
    init_threads(s)?;
    let out = Path::new(s.raw("out").unwrap_or(".")).to_path_buf();
    let ctx = Ctx { out, seed: s.get_or("seed", 0u64)?, timing: s.boolean("timing", true)? };
    // Validate everything that does not need a solve before touching disk.
    if matches!(task, Task::Solve | Task::Capacity | Task::Sweep | Task::VerifyBarriers | Task::VerifyLipschitz) {
        schedule(s)?;
    }
    fs::create_dir_all(&ctx.out)?;
    match task {
        Task::Solve => cmd_solve(&ctx, s),
        Task::Capacity => cmd_capacity(&ctx, s),
        Task::Sweep => cmd_sweep(&ctx, s),
        Task::VerifyBarriers => cmd_barriers(&ctx, s),
        Task::VerifyLipschitz => cmd_lipschitz(&ctx, s),
        Task::VerifyP1 => cmd_p1(&ctx, s),
        Task::CalculusProps => cmd_calculus(&ctx, s),
    }
}
