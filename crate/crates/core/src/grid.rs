//! Masked Cartesian grids over the condenser `W_R \ Ω̄`.
//!
//! Nodes sit at `(i h, j h)`. Gradients are forward differences on the cell
//! anchored at a node; the divergence is the exact negative adjoint of the
//! gradient for the inner product `<a, b>_h = h^2 sum a b`.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::anisotropy::Anisotropy;
use crate::error::{invalid, Error, Result};
use crate::wulff::{radius_bounds, AnnulusProblem};

/// Classification of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    /// Inside `W_R \ Ω̄`; carries an unknown.
    Interior,
    /// In `Ω̄`; pinned to the inner boundary value.
    DirichletInner,
    /// Outside `W_R` (`F° >= R`); pinned to the outer boundary value.
    DirichletOuter,
}


static NEXT_GRID_ID: AtomicU64 = AtomicU64::new(1);

/// A masked grid with its active cells and Dirichlet data.
#[derive(Clone, Debug)]
pub struct Grid {
    id: u64,
    h: f64,
    nx: usize,
    ny: usize,
    /// Index offset of the origin: node `(i, j)` sits at `((i - ox) h, (j - oy) h)`.
    ox: usize,
    oy: usize,
    class: Vec<NodeClass>,
    interior: Vec<usize>,
    /// Anchor node of each active cell, in row-major order.
    cells: Vec<usize>,
    boundary: Vec<f64>,
}

/// Node values on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid_id: u64,
    pub values: Vec<f64>,
}

/// Per-cell vectors on a [`Grid`], stored at the anchor node; zero away
/// from active cells.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid_id: u64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Grid {
    /// Grid covering `W_R` for the given problem, with boundary values 1 on
    /// `Ω̄` and 0 outside `W_R`.
    pub fn build(problem: &AnnulusProblem, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("grid spacing must be positive, got {h}")));
        }
        let a = &problem.anisotropy;
        let big_r = problem.outer_radius;
        let rb = radius_bounds(a, &problem.domain)?;
        if !(h < (big_r - rb.r2) / 8.0 && h < rb.r1 / 8.0) {
            return Err(Error::UnresolvedGeometry(format!(
                "h = {h} does not resolve the condenser: need h < (R - r2)/8 = {:.6} and h < r1/8 = {:.6}",
                (big_r - rb.r2) / 8.0,
                rb.r1 / 8.0
            )));
        }
        let half = |e: [f64; 2]| ((big_r * a.f(&e)) / h).ceil() as usize + 2;
        let (hx, hy) = (half([1.0, 0.0]), half([0.0, 1.0]));
        let (nx, ny) = (2 * hx + 1, 2 * hy + 1);
        let mut class = Vec::with_capacity(nx * ny);
        let tol_in = 1e-12 * h;
        for j in 0..ny {
            for i in 0..nx {
                let x = [(i as f64 - hx as f64) * h, (j as f64 - hy as f64) * h];
                let c = if problem.domain.contains_closed(x, tol_in) {
                    NodeClass::DirichletInner
                } else if a.polar_raw(&x) >= big_r * (1.0 - 1e-12) {
                    NodeClass::DirichletOuter
                } else {
                    NodeClass::Interior
                };
                class.push(c);
            }
        }
        Self::from_classes(h, nx, ny, hx, hy, class)
    }

    fn from_classes(h: f64, nx: usize, ny: usize, ox: usize, oy: usize, class: Vec<NodeClass>) -> Result<Self> {
        let interior: Vec<usize> =
            (0..nx * ny).filter(|&k| class[k] == NodeClass::Interior).collect();
        if interior.is_empty() {
            return Err(Error::UnresolvedGeometry("no interior nodes".into()));
        }
        let mut cells = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let touches = |kk: usize| class[kk] == NodeClass::Interior;
                let active = touches(k)
                    || (i + 1 < nx && touches(k + 1))
                    || (j + 1 < ny && touches(k + nx));
                if active {
                    if i + 1 >= nx || j + 1 >= ny {
                        return Err(Error::UnresolvedGeometry("interior node on the grid edge".into()));
                    }
                    cells.push(k);
                }
            }
        }
        for &k in &interior {
            let (i, j) = (k % nx, k / nx);
            if i == 0 || j == 0 || i + 1 >= nx || j + 1 >= ny {
                return Err(Error::UnresolvedGeometry("interior node on the grid edge".into()));
            }
        }
        let boundary = class
            .iter()
            .map(|c| if *c == NodeClass::DirichletInner { 1.0 } else { 0.0 })
            .collect();
        Ok(Self {
            id: NEXT_GRID_ID.fetch_add(1, Ordering::Relaxed),
            h,
            nx,
            ny,
            ox,
            oy,
            class,
            interior,
            cells,
            boundary,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Nodes per axis.
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn class(&self, node: usize) -> NodeClass {
        self.class[node]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Anchor nodes of the active cells (cells touching an interior node).
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let (i, j) = (node % self.nx, node / self.nx);
        [(i as f64 - self.ox as f64) * self.h, (j as f64 - self.oy as f64) * self.h]
    }

    /// Node nearest to `x`, if it lies on the grid.
    pub fn node_at(&self, x: [f64; 2]) -> Option<usize> {
        let i = (x[0] / self.h).round() + self.ox as f64;
        let j = (x[1] / self.h).round() + self.oy as f64;
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some(j as usize * self.nx + i as usize)
    }

    /// Node nearest to `x`, clamped to the grid.
    pub(crate) fn nearest_node(&self, x: [f64; 2]) -> usize {
        let i = ((x[0] / self.h).round() + self.ox as f64).clamp(0.0, (self.nx - 1) as f64);
        let j = ((x[1] / self.h).round() + self.oy as f64).clamp(0.0, (self.ny - 1) as f64);
        j as usize * self.nx + i as usize
    }

    /// Dirichlet values at every node (ignored at interior nodes).
    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary
    }

    /// Replace the Dirichlet data; `f` receives the node class and position.
    pub fn set_boundary_values<F: Fn(NodeClass, [f64; 2]) -> f64>(&mut self, f: F) {
        for k in 0..self.class.len() {
            self.boundary[k] = match self.class[k] {
                NodeClass::Interior => 0.0,
                c => f(c, self.coords(k)),
            };
        }
    }

    pub fn scalar_zeros(&self) -> ScalarField {
        ScalarField { grid_id: self.id, values: vec![0.0; self.node_count()] }
    }

    pub fn vector_zeros(&self) -> VectorField {
        let n = self.node_count();
        VectorField { grid_id: self.id, x: vec![0.0; n], y: vec![0.0; n] }
    }

    /// Field sampled from `f` at every node.
    pub fn scalar_from_fn<F: FnMut([f64; 2]) -> f64>(&self, mut f: F) -> ScalarField {
        let values = (0..self.node_count()).map(|k| f(self.coords(k))).collect();
        ScalarField { grid_id: self.id, values }
    }

    /// Field with the Dirichlet data on boundary nodes and `f` at interior nodes.
    pub fn admissible_from_fn<F: FnMut([f64; 2]) -> f64>(&self, mut f: F) -> ScalarField {
        let values = (0..self.node_count())
            .map(|k| if self.class[k] == NodeClass::Interior { f(self.coords(k)) } else { self.boundary[k] })
            .collect();
        ScalarField { grid_id: self.id, values }
    }

    /// Staggered sampling of a vector field on active cells: the `x`
    /// component at the midpoint of the cell's horizontal edge, the `y`
    /// component at the midpoint of its vertical edge.
    pub fn vector_from_fn<F: Fn([f64; 2]) -> [f64; 2]>(&self, f: F) -> VectorField {
        let mut z = self.vector_zeros();
        let hh = 0.5 * self.h;
        for &c in &self.cells {
            let x = self.coords(c);
            z.x[c] = f([x[0] + hh, x[1]])[0];
            z.y[c] = f([x[0], x[1] + hh])[1];
        }
        z
    }

    pub fn check_scalar(&self, u: &ScalarField) -> Result<()> {
        if u.grid_id == self.id && u.values.len() == self.node_count() {
            Ok(())
        } else {
            Err(invalid("scalar field belongs to a different grid"))
        }
    }

    pub fn check_vector(&self, z: &VectorField) -> Result<()> {
        if z.grid_id == self.id && z.x.len() == self.node_count() && z.y.len() == self.node_count() {
            Ok(())
        } else {
            Err(invalid("vector field belongs to a different grid"))
        }
    }

    pub(crate) fn wrap_scalar(&self, values: Vec<f64>) -> ScalarField {
        debug_assert_eq!(values.len(), self.node_count());
        ScalarField { grid_id: self.id, values }
    }

    pub(crate) fn wrap_vector(&self, x: Vec<f64>, y: Vec<f64>) -> VectorField {
        VectorField { grid_id: self.id, x, y }
    }

    /// Forward-difference gradient on every active cell.
    pub fn gradient(&self, u: &ScalarField) -> Result<VectorField> {
        self.check_scalar(u)?;
        let mut z = self.vector_zeros();
        let (u, nx, inv) = (&u.values, self.nx, 1.0 / self.h);
        for &c in &self.cells {
            z.x[c] = (u[c + 1] - u[c]) * inv;
            z.y[c] = (u[c + nx] - u[c]) * inv;
        }
        Ok(z)
    }

    /// Negative adjoint of [`Grid::gradient`], evaluated at every node that
    /// touches an active cell.
    pub fn divergence(&self, z: &VectorField) -> Result<ScalarField> {
        self.check_vector(z)?;
        let mut out = vec![0.0; self.node_count()];
        divergence_raw(self, &z.x, &z.y, &mut out);
        Ok(self.wrap_scalar(out))
    }

    /// Discrete energy `h^2 sum_cells F^p(grad u)`.
    pub fn energy(&self, u: &ScalarField, a: &Anisotropy, p: f64) -> Result<f64> {
        self.check_scalar(u)?;
        crate::anisotropy::check_p(p)?;
        if a.dim() != 2 {
            return Err(invalid("grids are planar; the anisotropy must be 2-D"));
        }
        let (v, nx, inv) = (&u.values, self.nx, 1.0 / self.h);
        let s: f64 = self
            .cells
            .iter()
            .map(|&c| a.f(&[(v[c + 1] - v[c]) * inv, (v[c + nx] - v[c]) * inv]).powf(p))
            .sum();
        Ok(self.h * self.h * s)
    }

    /// Largest weak residual of `-div z = data` over hat test functions at
    /// interior nodes, normalized by their `L^1` mass:
    /// `max_j |<data, w_j>_h - <z, grad w_j>_h| / |w_j|_1`.
    pub fn weak_div_residual(&self, z: &VectorField, data: &ScalarField) -> Result<f64> {
        Ok(self.weak_div_residual_at(z, data)?.0)
    }

    /// As [`Grid::weak_div_residual`], also returning the worst node.
    pub fn weak_div_residual_at(&self, z: &VectorField, data: &ScalarField) -> Result<(f64, usize)> {
        self.check_vector(z)?;
        self.check_scalar(data)?;
        let mut div = vec![0.0; self.node_count()];
        divergence_raw(self, &z.x, &z.y, &mut div);
        let mut worst = (0.0, self.interior[0]);
        for &j in &self.interior {
            let r = (data.values[j] + div[j]).abs();
            if r > worst.0 {
                worst = (r, j);
            }
        }
        Ok(worst)
    }

    /// Bilinear interpolation of node values; points off the grid take the
    /// nearest edge value.
    pub fn interpolate(&self, u: &ScalarField, x: [f64; 2]) -> Result<f64> {
        self.check_scalar(u)?;
        Ok(self.interpolate_raw(&u.values, x))
    }

    pub(crate) fn interpolate_raw(&self, u: &[f64], x: [f64; 2]) -> f64 {
        let fx = (x[0] / self.h + self.ox as f64).clamp(0.0, (self.nx - 1) as f64);
        let fy = (x[1] / self.h + self.oy as f64).clamp(0.0, (self.ny - 1) as f64);
        let (i, j) = ((fx.floor() as usize).min(self.nx - 2), (fy.floor() as usize).min(self.ny - 2));
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let k = j * self.nx + i;
        let nx = self.nx;
        (1.0 - ty) * ((1.0 - tx) * u[k] + tx * u[k + 1]) + ty * ((1.0 - tx) * u[k + nx] + tx * u[k + nx + 1])
    }

    /// CSV dump with header `x,y,value`, one row per node in row-major order.
    pub fn write_scalar_csv<W: Write>(&self, u: &ScalarField, mut out: W) -> Result<()> {
        self.check_scalar(u)?;
        writeln!(out, "x,y,value")?;
        for (k, v) in u.values.iter().enumerate() {
            let x = self.coords(k);
            writeln!(out, "{},{},{}", x[0], x[1], v)?;
        }
        Ok(())
    }

    /// CSV dump with header `x,y,zx,zy`, one row per node in row-major order.
    pub fn write_vector_csv<W: Write>(&self, z: &VectorField, mut out: W) -> Result<()> {
        self.check_vector(z)?;
        writeln!(out, "x,y,zx,zy")?;
        for k in 0..self.node_count() {
            let x = self.coords(k);
            writeln!(out, "{},{},{},{}", x[0], x[1], z.x[k], z.y[k])?;
        }
        Ok(())
    }
}

/// `div z` at every node; cells outside the active set contribute zero.
pub(crate) fn divergence_raw(g: &Grid, zx: &[f64], zy: &[f64], out: &mut [f64]) {
    let inv = 1.0 / g.h;
    let nx = g.nx;
    out.iter_mut().for_each(|v| *v = 0.0);
    for &c in &g.cells {
        // div_j = (z_x(j) - z_x(j - e_x)) / h + (z_y(j) - z_y(j - e_y)) / h.
        out[c] += (zx[c] + zy[c]) * inv;
        out[c + 1] -= zx[c] * inv;
        out[c + nx] -= zy[c] * inv;
    }
}

impl ScalarField {
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl VectorField {
    /// Largest Euclidean length over all cells.
    pub fn max_norm(&self) -> f64 {
        self.x.iter().zip(&self.y).fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wulff::DomainSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk_problem() -> AnnulusProblem {
        let e = Anisotropy::euclidean(2).unwrap();
        AnnulusProblem::new(DomainSpec::disk(1.0).unwrap(), e, 1.5, 2.0).unwrap()
    }

    #[test]
    fn interior_count_matches_area() {
        let h = 1.0 / 32.0;
        let g = Grid::build(&disk_problem(), h).unwrap();
        let want = 3.0 * std::f64::consts::PI / (h * h);
        let got = g.interior_nodes().len() as f64;
        // Boundary layers of both circles contribute O(perimeter / h) nodes.
        assert!((got - want).abs() < 6.0 * std::f64::consts::PI / h, "{got} vs {want}");
    }

    #[test]
    fn classification_is_consistent() {
        let l1 = Anisotropy::l1(2).unwrap();
        let prob = AnnulusProblem::new(DomainSpec::wulff(&l1, 1.0).unwrap(), l1.clone(), 1.5, 2.0).unwrap();
        let g = Grid::build(&prob, 1.0 / 32.0).unwrap();
        for k in 0..g.node_count() {
            let x = g.coords(k);
            let t = x[0].abs().max(x[1].abs());
            let want = if t <= 1.0 {
                NodeClass::DirichletInner
            } else if t >= 2.0 {
                NodeClass::DirichletOuter
            } else {
                NodeClass::Interior
            };
            assert_eq!(g.class(k), want, "{x:?}");
        }
        assert_eq!(g.node_at([1.0, 0.5]).map(|k| g.coords(k)), Some([1.0, 0.5]));
    }

    #[test]
    fn unresolved_geometry_is_rejected() {
        assert!(matches!(Grid::build(&disk_problem(), 0.2), Err(Error::UnresolvedGeometry(_))));
    }

    #[test]
    fn affine_and_constant_gradients() {
        let g = Grid::build(&disk_problem(), 1.0 / 16.0).unwrap();
        let u = g.scalar_from_fn(|x| 3.0 * x[0] - 2.0 * x[1] + 0.5);
        let z = g.gradient(&u).unwrap();
        for &c in g.cells() {
            assert!((z.x[c] - 3.0).abs() < 1e-12 && (z.y[c] + 2.0).abs() < 1e-12);
        }
        let z = g.gradient(&g.scalar_from_fn(|_| 7.0)).unwrap();
        assert_eq!(z.max_norm(), 0.0);
    }

    #[test]
    fn divergence_is_negative_adjoint() {
        let g = Grid::build(&disk_problem(), 1.0 / 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut z = g.vector_zeros();
            for &c in g.cells() {
                z.x[c] = rng.gen_range(-1.0..1.0);
                z.y[c] = rng.gen_range(-1.0..1.0);
            }
            let mut w = g.scalar_zeros();
            for &k in g.interior_nodes() {
                w.values[k] = rng.gen_range(-1.0..1.0);
            }
            let d = g.divergence(&z).unwrap();
            let gw = g.gradient(&w).unwrap();
            let lhs: f64 = d.values.iter().zip(&w.values).map(|(a, b)| a * b).sum();
            let rhs: f64 = -g.cells().iter().map(|&c| z.x[c] * gw.x[c] + z.y[c] * gw.y[c]).sum::<f64>();
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn weak_residuals() {
        let g = Grid::build(&disk_problem(), 1.0 / 16.0).unwrap();
        let zero = g.scalar_zeros();
        let z = g.vector_from_fn(|_| [0.3, -1.2]);
        assert!(g.weak_div_residual(&z, &zero).unwrap() < 1e-12);
        // x / |x|^2 is divergence free away from the origin; residual is O(h).
        let field = |x: [f64; 2]| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            [x[0] / r2, x[1] / r2]
        };
        let mut res = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let g = Grid::build(&disk_problem(), h).unwrap();
            res.push(g.weak_div_residual(&g.vector_from_fn(field), &g.scalar_zeros()).unwrap());
        }
        assert!(res[1] < 0.6 * res[0] && res[2] < 0.6 * res[1], "{res:?}");
    }

    #[test]
    fn energy_of_sampled_barrier_approaches_oracle() {
        let e = Anisotropy::euclidean(2).unwrap();
        let prob = AnnulusProblem::new(DomainSpec::wulff(&e, 1.0).unwrap(), e.clone(), 1.5, 2.0).unwrap();
        let want = crate::wulff::annulus_capacity_exact(&e, 1.5, 1.0, 2.0).unwrap();
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let g = Grid::build(&prob, h).unwrap();
            let u = g.admissible_from_fn(|x| crate::wulff::barrier_profile(-1.0, 1.0, 2.0, x[0].hypot(x[1])));
            errs.push((g.energy(&u, &e, 1.5).unwrap() - want).abs() / want);
        }
        assert!(errs[2] < 0.02 && errs[2] < errs[0], "{errs:?}");
    }

    #[test]
    fn energy_is_convex_in_u() {
        let e = Anisotropy::l1(2).unwrap();
        let g = Grid::build(&disk_problem(), 1.0 / 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u1 = g.admissible_from_fn(|_| rng.gen_range(0.0..1.0));
            let u2 = g.admissible_from_fn(|_| 0.0);
            let mid = g.wrap_scalar(u1.values.iter().zip(&u2.values).map(|(a, b)| 0.5 * (a + b)).collect());
            let (e1, e2, em) =
                (g.energy(&u1, &e, 1.5).unwrap(), g.energy(&u2, &e, 1.5).unwrap(), g.energy(&mid, &e, 1.5).unwrap());
            assert!(em <= 0.5 * (e1 + e2) + 1e-12);
        }
    }

    #[test]
    fn csv_dump_format() {
        let g = Grid::build(&disk_problem(), 1.0 / 16.0).unwrap();
        let mut buf = Vec::new();
        g.write_scalar_csv(&g.scalar_zeros(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,value\n"));
        assert_eq!(text.lines().count(), g.node_count() + 1);
        let other = Grid::build(&disk_problem(), 1.0 / 16.0).unwrap();
        assert!(other.gradient(&g.scalar_zeros()).is_err());
    }
}
