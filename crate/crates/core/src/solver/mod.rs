//! Discrete minimization of the anisotropic p-energy on a masked grid.
//!
//! The energy `h^2 sum F^p(grad u)` is replaced, stage by stage, by the
//! smooth density `(F_eps^p)_lambda + mu |.|^p` with all three parameters
//! halved between stages. A final stage keeps only the Moreau-Yosida
//! smoothing at its smallest level. Each stage is minimized by accelerated
//! gradient descent with backtracking and adaptive restart, warm-started from
//! the previous one. Unless an initial guess is supplied, the problem is
//! first solved on coarser grids and the result is interpolated upwards.
//!
//! The dual field is the Yosida gradient `G` of the final stage. It
//! satisfies the discrete Euler-Lagrange equation `-div G = 0` up to the
//! stopping tolerance, and its normalized direction has polar norm 1.

mod agd;
mod kernel;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::anisotropy::Anisotropy;
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, NodeClass, ScalarField, VectorField};
use crate::wulff::{radius_bounds, AnnulusProblem};
use agd::{minimize, Objective, Stop};
use kernel::Density;

/// Coarse grids are only used while they keep this many unknowns.
const MIN_COARSE_NODES: usize = 400;
/// Number of random directions probed by [`certify`].
const GAP_DIRECTIONS: usize = 20;

/// Continuation schedule and stopping rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub lambda0: f64,
    pub mu0: f64,
    /// Starting strict-convexity perturbation; only used for norms that are
    /// not strictly convex.
    pub eps0: f64,
    /// Number of smoothing stages before the final one.
    pub stages: usize,
    /// Smallest Moreau-Yosida parameter ever used.
    pub lambda_floor: f64,
    /// Stopping tolerance of the final stage: relative energy decrease below
    /// `tolerance` and `max |div G| <= tolerance / h`.
    pub tolerance: f64,
    /// The same for intermediate stages.
    pub stage_tolerance: f64,
    /// Iteration cap per stage.
    pub max_iters: usize,
    /// Start from interpolated coarse-grid solutions.
    pub coarse_to_fine: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            lambda0: 0.1,
            mu0: 0.1,
            eps0: 0.1,
            stages: 8,
            lambda_floor: 1e-4,
            tolerance: 1e-4,
            stage_tolerance: 1e-3,
            max_iters: 50_000,
            coarse_to_fine: true,
        }
    }
}

/// Parameters of one stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StageParams {
    pub lambda: f64,
    pub mu: f64,
    pub eps: f64,
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("schedule: {name} must be positive, got {v}")))
            }
        };
        pos(self.lambda0, "lambda0")?;
        pos(self.lambda_floor, "lambda_floor")?;
        pos(self.tolerance, "tolerance")?;
        pos(self.stage_tolerance, "stage_tolerance")?;
        if !(self.mu0 >= 0.0 && self.mu0.is_finite() && self.eps0 >= 0.0 && self.eps0.is_finite()) {
            return Err(invalid("schedule: mu0 and eps0 must be non-negative"));
        }
        if self.max_iters == 0 {
            return Err(invalid("schedule: max_iters must be at least 1"));
        }
        Ok(())
    }

    /// The stage list. The last entry is the final stage: `mu = eps = 0` at
    /// the smallest smoothing level of the sequence.
    pub fn stage_params(&self, strictly_convex: bool) -> Vec<StageParams> {
        let lam = |k: usize| (self.lambda0 * 0.5f64.powi(k as i32)).max(self.lambda_floor);
        let mut out: Vec<StageParams> = (0..self.stages)
            .map(|k| {
                let half = 0.5f64.powi(k as i32);
                StageParams {
                    lambda: lam(k),
                    mu: self.mu0 * half,
                    eps: if strictly_convex { 0.0 } else { self.eps0 * half },
                    tolerance: self.stage_tolerance,
                    max_iters: self.max_iters,
                }
            })
            .collect();
        out.push(StageParams { lambda: lam(self.stages.max(1) - 1), mu: 0.0, eps: 0.0, tolerance: self.tolerance, max_iters: self.max_iters });
        out
    }
}

/// Record of one minimized stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageLog {
    pub h: f64,
    pub lambda: f64,
    pub mu: f64,
    pub eps: f64,
    pub iterations: usize,
    pub objective_start: f64,
    pub objective_end: f64,
    pub converged: bool,
    pub wall_time: f64,
}

/// Optimality residuals of a discrete solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// `max(0, max F°(z) - 1)` for the normalized direction field `z`.
    pub dual_feasibility: f64,
    /// Mean over cells of `|z . grad u - F(grad u)|`.
    pub alignment: f64,
    /// Mean over cells of `F(grad u)`, the natural scale of `alignment`.
    pub alignment_scale: f64,
    /// Largest weak residual of `-div flux = 0` at interior nodes.
    pub weak_div: f64,
    /// Largest Euclidean length of the flux.
    pub flux_scale: f64,
    /// Largest energy decrease found along random line searches.
    pub energy_gap: Option<f64>,
}

/// Discrete minimizer together with its dual certificate.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub grid: Grid,
    pub u: ScalarField,
    /// Yosida gradient of the final stage: the discrete flux `p F^(p-1) dF`.
    pub flux: VectorField,
    /// Normalized flux direction, with `F°` equal to 1 where `grad u != 0`.
    pub direction: VectorField,
    /// `h^2 sum F^p(grad u)`.
    pub energy: f64,
    pub residuals: Residuals,
    /// Total optimizer iterations over all levels and stages.
    pub iterations: usize,
    pub wall_time: f64,
    pub converged: bool,
    pub stages: Vec<StageLog>,
    /// Moreau-Yosida parameter of the final stage.
    pub final_lambda: f64,
}

struct StageObjective<'a> {
    grid: &'a Grid,
    density: Density,
}

impl Objective for StageObjective<'_> {
    fn eval(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|v| *v = 0.0);
        let h = self.grid.h();
        let inv = 1.0 / h;
        let nx = self.grid.nx();
        let mut sum = 0.0;
        let mut d = [0.0; 2];
        for &c in self.grid.cells() {
            let g = [(u[c + 1] - u[c]) * inv, (u[c + nx] - u[c]) * inv];
            sum += self.density.eval(g, &mut d);
            grad[c] -= h * (d[0] + d[1]);
            grad[c + 1] += h * d[0];
            grad[c + nx] += h * d[1];
        }
        h * h * sum
    }
}

fn check_problem(problem: &AnnulusProblem) -> Result<()> {
    if problem.anisotropy.dim() != 2 {
        return Err(invalid("the solver is planar; the anisotropy must be 2-D"));
    }
    crate::anisotropy::check_p(problem.p)
}

/// Build the grid for `problem` at spacing `h` and minimize on it.
pub fn solve_annulus(problem: &AnnulusProblem, h: f64, schedule: &Schedule) -> Result<SolveResult> {
    let grid = Grid::build(problem, h)?;
    solve_on_grid(problem, grid, schedule, None)
}

/// Minimize on a prepared grid, honoring its Dirichlet data. `init` must
/// live on `grid`; its boundary values are replaced by the grid's.
pub fn solve_on_grid(
    problem: &AnnulusProblem,
    grid: Grid,
    schedule: &Schedule,
    init: Option<&ScalarField>,
) -> Result<SolveResult> {
    check_problem(problem)?;
    schedule.validate()?;
    let start = Instant::now();
    let params = schedule.stage_params(problem.anisotropy.is_strictly_convex());
    let mut logs = Vec::new();
    let mut lip = 1.0;

    let mut u = match init {
        Some(f) => {
            grid.check_scalar(f)?;
            let mut v = f.values.clone();
            impose_boundary(&grid, &mut v);
            run_stages(problem, &grid, &params, &mut v, &mut lip, &mut logs)?;
            v
        }
        None if schedule.coarse_to_fine => cascade(problem, &grid, &params, &mut lip, &mut logs)?,
        None => {
            let mut v = default_guess(problem, &grid)?;
            run_stages(problem, &grid, &params, &mut v, &mut lip, &mut logs)?;
            v
        }
    };
    impose_boundary(&grid, &mut u);

    let last = *params.last().expect("schedule has a final stage");
    let u = grid.wrap_scalar(u);
    let (flux, direction) = extract_dual(&grid, &u, &problem.anisotropy, problem.p, last.lambda)?;
    let residuals = residuals(&grid, &u, &flux, &direction, &problem.anisotropy, None)?;
    let energy = grid.energy(&u, &problem.anisotropy, problem.p)?;
    let iterations = logs.iter().map(|l| l.iterations).sum();
    let converged = logs.last().is_some_and(|l| l.converged);
    Ok(SolveResult {
        grid,
        u,
        flux,
        direction,
        energy,
        residuals,
        iterations,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        stages: logs,
        final_lambda: last.lambda,
    })
}

fn impose_boundary(grid: &Grid, u: &mut [f64]) {
    let b = grid.boundary_values();
    for (k, v) in u.iter_mut().enumerate() {
        if grid.class(k) != NodeClass::Interior {
            *v = b[k];
        }
    }
}

/// Linear profile in `F°` between the inner and outer data.
fn default_guess(problem: &AnnulusProblem, grid: &Grid) -> Result<Vec<f64>> {
    let rb = radius_bounds(&problem.anisotropy, &problem.domain)?;
    let big_r = problem.outer_radius;
    let guess = grid.admissible_from_fn(|x| {
        ((big_r - problem.anisotropy.polar_raw(&x)) / (big_r - rb.r1)).clamp(0.0, 1.0)
    });
    Ok(guess.values)
}

fn coarser(problem: &AnnulusProblem, fine: &Grid) -> Option<Grid> {
    let mut g = Grid::build(problem, 2.0 * fine.h()).ok()?;
    if g.interior_nodes().len() < MIN_COARSE_NODES {
        return None;
    }
    let b = fine.boundary_values();
    g.set_boundary_values(|_, x| b[fine.nearest_node(x)]);
    Some(g)
}

/// Full schedule on the coarsest grid, then the final stage on each finer one.
fn cascade(
    problem: &AnnulusProblem,
    grid: &Grid,
    params: &[StageParams],
    lip: &mut f64,
    logs: &mut Vec<StageLog>,
) -> Result<Vec<f64>> {
    let Some(coarse) = coarser(problem, grid) else {
        let mut v = default_guess(problem, grid)?;
        run_stages(problem, grid, params, &mut v, lip, logs)?;
        return Ok(v);
    };
    let uc = cascade(problem, &coarse, params, lip, logs)?;
    let mut v = vec![0.0; grid.node_count()];
    for &k in grid.interior_nodes() {
        v[k] = coarse.interpolate_raw(&uc, grid.coords(k));
    }
    impose_boundary(grid, &mut v);
    run_stages(problem, grid, &params[params.len() - 1..], &mut v, lip, logs)?;
    Ok(v)
}

fn run_stages(
    problem: &AnnulusProblem,
    grid: &Grid,
    params: &[StageParams],
    u: &mut [f64],
    lip: &mut f64,
    logs: &mut Vec<StageLog>,
) -> Result<()> {
    for sp in params {
        let norm = if sp.eps > 0.0 { problem.anisotropy.regularize(sp.eps)? } else { problem.anisotropy.clone() };
        let obj = StageObjective { grid, density: Density::new(norm, problem.p, sp.lambda, sp.mu) };
        let stop = Stop { rel_decrease: sp.tolerance, grad_tol: sp.tolerance * grid.h(), max_iters: sp.max_iters };
        let t0 = Instant::now();
        let out = minimize(&obj, u, grid.interior_nodes(), lip, stop)?;
        logs.push(StageLog {
            h: grid.h(),
            lambda: sp.lambda,
            mu: sp.mu,
            eps: sp.eps,
            iterations: out.iterations,
            objective_start: out.start_value,
            objective_end: out.value,
            converged: out.converged,
            wall_time: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(())
}

/// Flux and normalized direction field of `u` for smoothing level `lambda`.
///
/// The flux is the Yosida gradient `G = grad (F^p)_lambda (grad u)` on each
/// active cell. With `J` the resolvent of `F^p` at `grad u`, `G` lies in
/// `p F(J)^(p-1) dF(J)`, so the direction `G / (p F(J)^(p-1))` has polar
/// norm exactly 1 and deviates from `dF(grad u)` only through `lambda`. It is
/// set to zero where the gradient vanishes.
pub fn extract_dual(
    grid: &Grid,
    u: &ScalarField,
    a: &Anisotropy,
    p: f64,
    lambda: f64,
) -> Result<(VectorField, VectorField)> {
    grid.check_scalar(u)?;
    if a.dim() != 2 {
        return Err(invalid("the solver is planar; the anisotropy must be 2-D"));
    }
    crate::anisotropy::check_p(p)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let density = Density::new(a.clone(), p, lambda, 0.0);
    let n = grid.node_count();
    let (mut fx, mut fy) = (vec![0.0; n], vec![0.0; n]);
    let (mut dx, mut dy) = (vec![0.0; n], vec![0.0; n]);
    let (v, nx, inv) = (&u.values, grid.nx(), 1.0 / grid.h());
    let tiny = 1e-12 * inv;
    let mut d = [0.0; 2];
    for &c in grid.cells() {
        let g = [(v[c + 1] - v[c]) * inv, (v[c + nx] - v[c]) * inv];
        let (_, fj) = density.eval_full(g, &mut d);
        fx[c] = d[0];
        fy[c] = d[1];
        if g[0].hypot(g[1]) > tiny && fj > 0.0 {
            let s = 1.0 / (p * fj.powf(p - 1.0));
            dx[c] = d[0] * s;
            dy[c] = d[1] * s;
        }
    }
    Ok((grid.wrap_vector(fx, fy), grid.wrap_vector(dx, dy)))
}

fn residuals(
    grid: &Grid,
    u: &ScalarField,
    flux: &VectorField,
    direction: &VectorField,
    a: &Anisotropy,
    energy_gap: Option<f64>,
) -> Result<Residuals> {
    let (v, nx, inv) = (&u.values, grid.nx(), 1.0 / grid.h());
    let (mut feas, mut align, mut scale) = (0.0f64, 0.0, 0.0);
    for &c in grid.cells() {
        let g = [(v[c + 1] - v[c]) * inv, (v[c + nx] - v[c]) * inv];
        let z = [direction.x[c], direction.y[c]];
        feas = feas.max(a.polar_raw(&z) - 1.0);
        let fg = a.f(&g);
        align += (z[0] * g[0] + z[1] * g[1] - fg).abs();
        scale += fg;
    }
    let m = grid.cells().len() as f64;
    let weak_div = grid.weak_div_residual(flux, &grid.scalar_zeros())?;
    Ok(Residuals {
        dual_feasibility: feas.max(0.0),
        alignment: align / m,
        alignment_scale: scale / m,
        weak_div,
        flux_scale: flux.max_norm(),
        energy_gap,
    })
}

/// Recompute all residuals of `result`, including the energy gap along
/// `20` seeded random directions.
pub fn certify(problem: &AnnulusProblem, result: &SolveResult, seed: u64) -> Result<Residuals> {
    check_problem(problem)?;
    let grid = &result.grid;
    let gap = energy_gap(grid, &result.u, &problem.anisotropy, problem.p, seed)?;
    residuals(grid, &result.u, &result.flux, &result.direction, &problem.anisotropy, Some(gap))
}

/// Largest decrease `E(u) - min_t E(u + t d)` over seeded random directions
/// `d` supported on interior nodes. Half of the directions are nodal noise,
/// half are smooth trigonometric modes.
pub fn energy_gap(grid: &Grid, u: &ScalarField, a: &Anisotropy, p: f64, seed: u64) -> Result<f64> {
    grid.check_scalar(u)?;
    let e0 = grid.energy(u, a, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, inv) = (grid.nx(), 1.0 / grid.h());
    let cells = grid.cells();
    let v = &u.values;
    let g0: Vec<[f64; 2]> = cells.iter().map(|&c| [(v[c + 1] - v[c]) * inv, (v[c + nx] - v[c]) * inv]).collect();
    let mut worst = 0.0f64;
    for k in 0..GAP_DIRECTIONS {
        let d = if k % 2 == 0 {
            grid.admissible_from_fn(|_| rng.gen_range(-1.0..1.0))
        } else {
            let modes: Vec<[f64; 4]> = (0..4)
                .map(|_| {
                    [rng.gen_range(-1.0..1.0), rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(0.0..6.3)]
                })
                .collect();
            grid.admissible_from_fn(|x| modes.iter().map(|m| m[0] * (m[1] * x[0] + m[2] * x[1] + m[3]).sin()).sum())
        };
        let mut dv = d.values;
        for (j, val) in dv.iter_mut().enumerate() {
            if grid.class(j) != NodeClass::Interior {
                *val = 0.0;
            }
        }
        let gd: Vec<[f64; 2]> = cells.iter().map(|&c| [(dv[c + 1] - dv[c]) * inv, (dv[c + nx] - dv[c]) * inv]).collect();
        let h2 = grid.h() * grid.h();
        let e = |t: f64| -> f64 {
            h2 * g0.iter().zip(&gd).map(|(a0, b)| a.f(&[a0[0] + t * b[0], a0[1] + t * b[1]]).powf(p)).sum::<f64>()
        };
        let (_, neg) = crate::numeric::golden_max(|t| -e(t), -0.05, 0.05, 60);
        worst = worst.max(e0 + neg);
    }
    if !worst.is_finite() {
        return Err(Error::Solver("energy is not finite along a probe direction".into()));
    }
    Ok(worst.max(0.0))
}

#[cfg(test)]
mod tests;
