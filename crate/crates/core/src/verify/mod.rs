//! Standalone certifiers with structured reports: comparison and uniqueness
//! tests, discrete Lipschitz bounds, the one-homogeneous example and the
//! anisotropy calculus property suite.

mod calculus;
mod p1;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::{Grid, NodeClass};
use crate::solver::{solve_on_grid, Schedule, SolveResult};
use crate::wulff::{check_wulff_condition, lipschitz_bound_l1, radius_bounds, AnnulusProblem, BOUNDARY_SAMPLES};

pub use calculus::{calculus_properties, default_kinds};
pub use p1::{check_p1_example, p1_field, p1_perimeter_b1, P1Set};

/// Outcome of one check. A failed or skipped condition is always reported,
/// never dropped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub pass: bool,
    pub worst_value: f64,
    pub worst_location: [f64; 2],
    pub tolerance: f64,
    /// False when the condition is out of scope and was not evaluated.
    #[serde(skip_serializing_if = "is_true")]
    pub checked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn is_true(b: &bool) -> bool {
    *b
}

impl Report {
    /// A check that passes when `worst_value <= tolerance`.
    pub fn bound(check: impl Into<String>, worst_value: f64, worst_location: [f64; 2], tolerance: f64) -> Self {
        Self {
            check: check.into(),
            pass: worst_value <= tolerance,
            worst_value,
            worst_location,
            tolerance,
            checked: true,
            note: None,
        }
    }

    /// A condition that could not be evaluated.
    pub fn unchecked(check: impl Into<String>, note: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            pass: false,
            worst_value: 0.0,
            worst_location: [0.0, 0.0],
            tolerance: 0.0,
            checked: false,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Passed, or out of scope.
    pub fn acceptable(&self) -> bool {
        self.pass || !self.checked
    }
}

/// Largest difference quotient `|u(x) - u(y)| / |x - y|` over horizontal,
/// vertical and diagonal node pairs with at least one interior node.
pub fn discrete_lipschitz(grid: &Grid, u: &crate::grid::ScalarField) -> Result<(f64, [f64; 2])> {
    grid.check_scalar(u)?;
    let (nx, h) = (grid.nx(), grid.h());
    let (_, ny) = grid.shape();
    let v = &u.values;
    let mut worst = (0.0, [0.0, 0.0]);
    let steps: [(isize, isize, f64); 4] = [(1, 0, h), (0, 1, h), (1, 1, h * 2f64.sqrt()), (-1, 1, h * 2f64.sqrt())];
    for &k in grid.interior_nodes() {
        let (i, j) = ((k % nx) as isize, (k / nx) as isize);
        for &(di, dj, len) in &steps {
            for s in [-1isize, 1] {
                let (ii, jj) = (i + s * di, j + s * dj);
                if ii < 0 || jj < 0 || ii >= nx as isize || jj >= ny as isize {
                    continue;
                }
                let kk = jj as usize * nx + ii as usize;
                let q = (v[k] - v[kk]).abs() / len;
                if q > worst.0 {
                    let (a, b) = (grid.coords(k), grid.coords(kk));
                    worst = (q, [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                }
            }
        }
    }
    Ok(worst)
}

/// Compare the discrete Lipschitz constant of a solution with the barrier
/// bound `(C/c) max(L1, L2) + 5h`, where `L1` comes from the inner barrier
/// at radius `r` with `R0 = r + (R - r2)/2` and `L2` from the outer barrier
/// between `r2` and `R`. The bound is only certified when the interior
/// Wulff condition holds at radius `r`.
pub fn lipschitz_check(problem: &AnnulusProblem, result: &SolveResult, r: f64) -> Result<Report> {
    let a = &problem.anisotropy;
    let (p, big_r) = (problem.p, problem.outer_radius);
    let rb = radius_bounds(a, &problem.domain)?;
    let (lip, at) = discrete_lipschitz(&result.grid, &result.u)?;
    let h = result.grid.h();
    let cond = check_wulff_condition(a, &problem.domain, r, BOUNDARY_SAMPLES / 4, 1e-6 * rb.r2)?;
    let r0 = r + 0.5 * (big_r - rb.r2);
    let l1 = lipschitz_bound_l1(a, p, r, r0)?;
    let l2 = lipschitz_bound_l1(a, p, rb.r2, big_r)?;
    let bound = a.equiv_upper() / a.equiv_lower() * l1.max(l2) + 5.0 * h;
    let report = Report::bound("lipschitz", lip, at, bound)
        .with_note(format!("L1 = {l1:.6}, L2 = {l2:.6}, R0 = {r0:.6}, r = {r}"));
    if cond.pass {
        Ok(report)
    } else {
        let w = cond.witness.unwrap_or([0.0, 0.0]);
        Ok(Report {
            pass: false,
            checked: false,
            note: Some(format!(
                "Wulff condition with r = {r} fails near ({:.4}, {:.4}); bound not certified, discrete constant {lip:.6}",
                w[0], w[1]
            )),
            ..report
        })
    }
}

fn strict_problem(problem: &AnnulusProblem, eps: f64) -> Result<AnnulusProblem> {
    let mut pb = problem.clone();
    if eps > 0.0 {
        pb.anisotropy = problem.anisotropy.regularize(eps)?;
    }
    if !pb.anisotropy.is_strictly_convex() {
        return Err(invalid("comparison tests need a strictly convex norm; pass eps > 0"));
    }
    Ok(pb)
}

/// Solve with Dirichlet data `phi1 <= phi2` and report `max(u1 - u2)`,
/// which must not exceed `1e-6`. The norm is replaced by `F + eps |.|`
/// when `eps > 0`.
pub fn comparison_test<F1, F2>(
    problem: &AnnulusProblem,
    eps: f64,
    h: f64,
    phi1: F1,
    phi2: F2,
    schedule: &Schedule,
) -> Result<Report>
where
    F1: Fn(NodeClass, [f64; 2]) -> f64,
    F2: Fn(NodeClass, [f64; 2]) -> f64,
{
    let pb = strict_problem(problem, eps)?;
    let mut g1 = Grid::build(&pb, h)?;
    let mut g2 = g1.clone();
    g1.set_boundary_values(phi1);
    g2.set_boundary_values(phi2);
    let (b1, b2) = (g1.boundary_values(), g2.boundary_values());
    for k in 0..g1.node_count() {
        if g1.class(k) != NodeClass::Interior && b1[k] > b2[k] {
            return Err(invalid(format!("boundary data are not ordered at {:?}", g1.coords(k))));
        }
    }
    let r1 = solve_on_grid(&pb, g1, schedule, None)?;
    let r2 = solve_on_grid(&pb, g2, schedule, None)?;
    let mut worst = (f64::NEG_INFINITY, [0.0, 0.0]);
    for (k, (a, b)) in r1.u.values.iter().zip(&r2.u.values).enumerate() {
        if a - b > worst.0 {
            worst = (a - b, r1.grid.coords(k));
        }
    }
    Ok(Report::bound("comparison", worst.0, worst.1, 1e-6))
}

/// Solve twice from seeded random initial guesses and report the largest
/// nodal difference (tolerance `1e-5`) and the energy difference
/// (tolerance `1e-8`).
pub fn uniqueness_test(
    problem: &AnnulusProblem,
    eps: f64,
    h: f64,
    schedule: &Schedule,
    seed: u64,
) -> Result<Vec<Report>> {
    use rand::{Rng, SeedableRng};
    let pb = strict_problem(problem, eps)?;
    let grid = Grid::build(&pb, h)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let solve = |rng: &mut rand_chacha::ChaCha8Rng| {
        let init = grid.admissible_from_fn(|_| rng.gen_range(0.0..1.0));
        solve_on_grid(&pb, grid.clone(), schedule, Some(&init))
    };
    let a = solve(&mut rng)?;
    let b = solve(&mut rng)?;
    let mut worst = (0.0, [0.0, 0.0]);
    for (k, (x, y)) in a.u.values.iter().zip(&b.u.values).enumerate() {
        if (x - y).abs() > worst.0 {
            worst = ((x - y).abs(), a.grid.coords(k));
        }
    }
    Ok(vec![
        Report::bound("uniqueness_field", worst.0, worst.1, 1e-5),
        Report::bound("uniqueness_energy", (a.energy - b.energy).abs(), [0.0, 0.0], 1e-8),
    ])
}
