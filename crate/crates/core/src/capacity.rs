//! Relative capacities, sweeps in the outer radius and extrapolation to the
//! exterior capacity.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::anisotropy::Anisotropy;
use crate::error::{invalid, Error, Result};
use crate::solver::{certify, solve_annulus, Schedule, SolveResult};
use crate::verify::Report;
use crate::wulff::{barrier_profile, radius_bounds, AnnulusProblem, DomainSpec};

/// Slack allowed when checking that `u_R` grows with `R`.
pub const FIELD_MONOTONICITY_SLACK: f64 = 1e-6;

/// Default sandwich tolerance factor: violations up to `5h` are accepted.
pub const SANDWICH_C_TOL: f64 = 5.0;

/// Grid spacing for each sweep entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum HPolicy {
    /// The same spacing for every entry.
    Fixed(f64),
    /// `h = per_r1 * r1`, coarsened so the grid of `W_R` has at most
    /// `max_nodes` nodes.
    Scaled { per_r1: f64, max_nodes: usize },
}

impl Default for HPolicy {
    fn default() -> Self {
        Self::Scaled { per_r1: 1.0 / 32.0, max_nodes: 4_000_000 }
    }
}

impl HPolicy {
    /// Spacing for the condenser of `problem`.
    pub fn spacing(&self, problem: &AnnulusProblem) -> Result<f64> {
        match *self {
            Self::Fixed(h) => {
                if h > 0.0 && h.is_finite() {
                    Ok(h)
                } else {
                    Err(invalid(format!("grid spacing must be positive, got {h}")))
                }
            }
            Self::Scaled { per_r1, max_nodes } => {
                if !(per_r1 > 0.0) || max_nodes == 0 {
                    return Err(invalid("h policy needs per_r1 > 0 and max_nodes > 0"));
                }
                let a = &problem.anisotropy;
                let rb = radius_bounds(a, &problem.domain)?;
                let big_r = problem.outer_radius;
                let area = 4.0 * big_r * big_r * a.f(&[1.0, 0.0]) * a.f(&[0.0, 1.0]);
                Ok((per_r1 * rb.r1).max((area / max_nodes as f64).sqrt()))
            }
        }
    }
}

/// Energy of the discrete minimizer, which equals `Cap(Ω̄; W_R)` up to
/// discretization error.
pub fn relative_capacity(problem: &AnnulusProblem, h: f64, schedule: &Schedule) -> Result<(f64, SolveResult)> {
    let result = solve_annulus(problem, h, schedule)?;
    Ok((result.energy, result))
}

/// One solve in a sweep.
#[derive(Debug)]
pub struct CapacityEntry {
    pub outer_radius: f64,
    pub capacity: f64,
    pub h: f64,
    pub problem: AnnulusProblem,
    /// Solve result with certified residuals, energy gap included.
    pub result: SolveResult,
}

impl CapacityEntry {
    pub fn energy_gap(&self) -> f64 {
        self.result.residuals.energy_gap.unwrap_or(f64::NAN)
    }
}

#[derive(Debug)]
pub struct CapacityCurve {
    pub entries: Vec<CapacityEntry>,
    /// Extrapolated exterior capacity.
    pub cap_infinity: f64,
    /// Exponent `(p - N)/(p - 1)` of the fit.
    pub alpha: f64,
    /// Slope of `Cap^(1/(1-p))` against `R^alpha`.
    pub fit_slope: f64,
    /// `max(u_R - u_R')` over shared nodes, for consecutive radii `R < R'`.
    pub field_increments: Vec<f64>,
}

#[derive(Serialize)]
struct EntrySummary {
    #[serde(rename = "R")]
    outer_radius: f64,
    capacity: f64,
    energy_gap: f64,
    wall_time_s: f64,
    h: f64,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct CurveSummary {
    cap_infinity: f64,
    alpha: f64,
    fit_slope: f64,
    field_increments: Vec<f64>,
    entries: Vec<EntrySummary>,
}

impl CapacityCurve {
    /// Capacities strictly positive and non-increasing in `R`.
    pub fn capacity_monotone(&self) -> bool {
        self.entries.iter().all(|e| e.capacity > 0.0)
            && self.entries.windows(2).all(|w| w[1].capacity <= w[0].capacity)
    }

    /// Largest decrease of the potential from one radius to the next.
    pub fn field_monotonicity(&self) -> Report {
        let worst = self.field_increments.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Report::bound("field_monotone_in_R", worst.max(0.0), [0.0, 0.0], FIELD_MONOTONICITY_SLACK)
    }

    /// Rows `R,capacity,energy_gap,wall_time_s`.
    pub fn write_csv<W: Write>(&self, mut out: W, timing: bool) -> Result<()> {
        writeln!(out, "R,capacity,energy_gap,wall_time_s")?;
        for e in &self.entries {
            let t = if timing { e.result.wall_time } else { 0.0 };
            writeln!(out, "{},{:.10e},{:.6e},{:.3}", e.outer_radius, e.capacity, e.energy_gap(), t)?;
        }
        Ok(())
    }

    /// JSON summary with `cap_infinity`, `alpha` and `entries`.
    pub fn summary_json(&self, timing: bool) -> Result<String> {
        let s = CurveSummary {
            cap_infinity: self.cap_infinity,
            alpha: self.alpha,
            fit_slope: self.fit_slope,
            field_increments: self.field_increments.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EntrySummary {
                    outer_radius: e.outer_radius,
                    capacity: e.capacity,
                    energy_gap: e.energy_gap(),
                    wall_time_s: if timing { e.result.wall_time } else { 0.0 },
                    h: e.h,
                    iterations: e.result.iterations,
                    converged: e.result.converged,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&s).map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

/// Least-squares fit of `Cap^(1/(1-p)) = A + B R^alpha` over the last three
/// entries, the form of the exact Wulff annulus law. Returns
/// `(A^(1-p), B)`.
pub fn extrapolate(radii: &[f64], caps: &[f64], p: f64, alpha: f64) -> Result<(f64, f64)> {
    if radii.len() != caps.len() || radii.len() < 3 {
        return Err(invalid("extrapolation needs at least 3 capacity values"));
    }
    let k = radii.len() - 3;
    let xs: Vec<f64> = radii[k..].iter().map(|r| r.powf(alpha)).collect();
    let ys: Vec<f64> = caps[k..].iter().map(|c| c.powf(1.0 / (1.0 - p))).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("extrapolation needs distinct radii"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !(intercept > 0.0) {
        return Err(Error::Solver(format!("capacity extrapolation failed: intercept {intercept:.3e} is not positive")));
    }
    Ok((intercept.powf(1.0 - p), slope))
}

/// Solve the condenser problem for every radius in `radii` (increasing,
/// beyond the circumscribed radius of the domain) concurrently, then
/// extrapolate to `R = inf` and record how `u_R` changes with `R`.
pub fn capacity_sweep(
    domain: &DomainSpec,
    a: &Anisotropy,
    p: f64,
    radii: &[f64],
    policy: HPolicy,
    schedule: &Schedule,
    seed: u64,
) -> Result<CapacityCurve> {
    if radii.len() < 3 {
        return Err(invalid("a sweep needs at least 3 radii for the extrapolation"));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("sweep radii must be strictly increasing"));
    }
    let problems = radii
        .iter()
        .map(|&r| AnnulusProblem::new(domain.clone(), a.clone(), p, r))
        .collect::<Result<Vec<_>>>()?;
    let entries = problems
        .into_par_iter()
        .map(|problem| -> Result<CapacityEntry> {
            let h = policy.spacing(&problem)?;
            let (capacity, mut result) = relative_capacity(&problem, h, schedule)?;
            result.residuals = certify(&problem, &result, seed)?;
            Ok(CapacityEntry { outer_radius: problem.outer_radius, capacity, h, problem, result })
        })
        .collect::<Result<Vec<_>>>()?;

    let field_increments = entries.windows(2).map(|w| field_increment(&w[0].result, &w[1].result)).collect();
    let alpha = entries[0].problem.alpha();
    let caps: Vec<f64> = entries.iter().map(|e| e.capacity).collect();
    let (cap_infinity, fit_slope) = extrapolate(radii, &caps, p, alpha)?;
    Ok(CapacityCurve { entries, cap_infinity, alpha, fit_slope, field_increments })
}

/// `max(u_small - u_big)` over nodes of the smaller problem that coincide
/// with nodes of the larger one.
fn field_increment(small: &SolveResult, big: &SolveResult) -> f64 {
    let (gs, gb) = (&small.grid, &big.grid);
    let tol = 1e-9 * gs.h().min(gb.h());
    let mut worst = f64::NEG_INFINITY;
    for k in 0..gs.node_count() {
        let x = gs.coords(k);
        if let Some(j) = gb.node_at(x) {
            let y = gb.coords(j);
            if (x[0] - y[0]).abs() <= tol && (x[1] - y[1]).abs() <= tol {
                worst = worst.max(small.u.values[k] - big.u.values[j]);
            }
        }
    }
    worst
}

/// Nodewise check of `v_{r1,R} - c h <= u <= v_{r2,R} + c h`, with both
/// barriers clipped to `[0, 1]`. The report carries the worst violation
/// and the number of violating nodes.
pub fn check_sandwich(problem: &AnnulusProblem, result: &SolveResult, r1: f64, r2: f64, c_tol: f64) -> Result<Report> {
    let big_r = problem.outer_radius;
    if !(r1 > 0.0 && r1 <= r2 && r2 < big_r) {
        return Err(invalid(format!("need 0 < r1 <= r2 < R, got r1 = {r1}, r2 = {r2}, R = {big_r}")));
    }
    let a = &problem.anisotropy;
    let alpha = problem.alpha();
    let grid = &result.grid;
    let tol = c_tol * grid.h();
    let mut worst = (f64::NEG_INFINITY, [0.0, 0.0]);
    let mut violations = 0usize;
    for k in 0..grid.node_count() {
        let x = grid.coords(k);
        let t = a.polar_raw(&x);
        let u = result.u.values[k];
        let (lower, upper) = if t == 0.0 {
            (1.0, 1.0)
        } else {
            (
                barrier_profile(alpha, r1, big_r, t).clamp(0.0, 1.0),
                barrier_profile(alpha, r2, big_r, t).clamp(0.0, 1.0),
            )
        };
        let excess = (lower - u).max(u - upper);
        if excess > tol {
            violations += 1;
        }
        if excess > worst.0 {
            worst = (excess, x);
        }
    }
    Ok(Report::bound("barrier_sandwich", worst.0, worst.1, tol)
        .with_note(format!("r1 = {r1}, r2 = {r2}, c_tol = {c_tol}, {violations} violating nodes")))
}
