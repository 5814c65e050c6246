//! Planar obstacle domains and the annulus problem posed around them.

use std::fmt;
use std::path::Path;

use crate::anisotropy::Anisotropy;
use crate::error::{invalid, Error, Result};

/// A point of `∂Ω` with its outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    pub point: [f64; 2],
    pub normal: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Disk(f64),
    Ellipse(f64, f64),
    Wulff(f64, Anisotropy),
    /// Counterclockwise vertex list.
    Polygon(Vec<[f64; 2]>),
}

/// Open, bounded obstacle `Ω ⊂ R^2` containing the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    shape: Shape,
    label: String,
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(format!("{what} must be positive, got {v}")))
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl DomainSpec {
    pub fn disk(radius: f64) -> Result<Self> {
        positive(radius, "disk radius")?;
        Ok(Self { shape: Shape::Disk(radius), label: format!("disk({})", fmt_num(radius)) })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        positive(a, "ellipse semi-axis")?;
        positive(b, "ellipse semi-axis")?;
        Ok(Self { shape: Shape::Ellipse(a, b), label: format!("ellipse({},{})", fmt_num(a), fmt_num(b)) })
    }

    /// The Wulff shape `W_r = {F° < r}` of `norm`.
    pub fn wulff(norm: &Anisotropy, r: f64) -> Result<Self> {
        positive(r, "Wulff radius")?;
        if norm.dim() != 2 {
            return Err(invalid("domains are planar; the anisotropy must be 2-D"));
        }
        Ok(Self { shape: Shape::Wulff(r, norm.clone()), label: format!("wulff({})", fmt_num(r)) })
    }

    /// Simple polygon from counterclockwise vertices; must contain the origin.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegenerateDomain("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateDomain("polygon vertices must be finite".into()));
        }
        let area2: f64 = (0..vertices.len())
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        if area2 <= 0.0 {
            return Err(Error::DegenerateDomain("polygon vertices must be counterclockwise".into()));
        }
        let d = Self { shape: Shape::Polygon(vertices), label: "polygon".into() };
        if !d.contains([0.0, 0.0]) {
            return Err(Error::DegenerateDomain("the origin must lie inside the polygon".into()));
        }
        Ok(d)
    }

    /// Read a polygon from a text file with one `x y` pair per line.
    pub fn polygon_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut verts = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("{}:{}: expected `x y`", path.display(), k + 1)))?;
            if nums.len() != 2 {
                return Err(Error::Parse(format!("{}:{}: expected `x y`", path.display(), k + 1)));
            }
            verts.push([nums[0], nums[1]]);
        }
        let mut d = Self::polygon(verts)?;
        d.label = format!("polygon({})", path.display());
        Ok(d)
    }

    /// Parse `disk(r)`, `ellipse(a,b)`, `wulff(r)` or `polygon(path)`.
    pub fn parse(spec: &str, norm: &Anisotropy) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown domain `{spec}`"));
        let s = spec.trim();
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?.trim();
        let nums = || -> Result<Vec<f64>> {
            inner.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect()
        };
        match head.trim() {
            "disk" => match nums()?[..] {
                [r] => Self::disk(r),
                _ => Err(bad()),
            },
            "ellipse" => match nums()?[..] {
                [a, b] => Self::ellipse(a, b),
                _ => Err(bad()),
            },
            "wulff" => match nums()?[..] {
                [r] => Self::wulff(norm, r),
                _ => Err(bad()),
            },
            "polygon" => Self::polygon_file(Path::new(inner)),
            _ => Err(bad()),
        }
    }

    /// Membership in the open set `Ω`.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        match &self.shape {
            Shape::Disk(r) => x[0].hypot(x[1]) < *r,
            Shape::Ellipse(a, b) => (x[0] / a).powi(2) + (x[1] / b).powi(2) < 1.0,
            Shape::Wulff(r, f) => f.polar_raw(&x) < *r,
            Shape::Polygon(v) => winding_inside(v, x) && polygon_distance(v, x) > 0.0,
        }
    }

    /// Membership in the closure of `Ω`, inflated by `tol`.
    pub fn contains_closed(&self, x: [f64; 2], tol: f64) -> bool {
        self.excess(x) <= tol
    }

    /// How far `x` lies outside `Ω̄`; zero for points of the closure. Exact
    /// Euclidean distance for disks and polygons, a first-order equivalent
    /// for the other shapes.
    pub fn excess(&self, x: [f64; 2]) -> f64 {
        match &self.shape {
            Shape::Disk(r) => (x[0].hypot(x[1]) - r).max(0.0),
            Shape::Ellipse(a, b) => {
                let g = ((x[0] / a).powi(2) + (x[1] / b).powi(2)).sqrt();
                ((g - 1.0) * a.min(*b)).max(0.0)
            }
            Shape::Wulff(r, f) => ((f.polar_raw(&x) - r) / f.equiv_upper()).max(0.0),
            Shape::Polygon(v) => {
                if winding_inside(v, x) {
                    0.0
                } else {
                    polygon_distance(v, x)
                }
            }
        }
    }

    /// `m` approximately equispaced boundary points with outward normals.
    /// Polygon vertices are always included.
    pub fn boundary_samples(&self, m: usize) -> Vec<BoundarySample> {
        let m = m.max(8);
        match &self.shape {
            Shape::Disk(r) => (0..m)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / m as f64;
                    let n = [t.cos(), t.sin()];
                    BoundarySample { point: [r * n[0], r * n[1]], normal: n }
                })
                .collect(),
            Shape::Ellipse(a, b) => {
                let curve = |t: f64| [a * t.cos(), b * t.sin()];
                resample_closed_curve(curve, m)
                    .into_iter()
                    .map(|p| {
                        let g = [p[0] / (a * a), p[1] / (b * b)];
                        BoundarySample { point: p, normal: unit(g) }
                    })
                    .collect()
            }
            Shape::Wulff(r, f) => {
                let curve = |t: f64| {
                    let u = [t.cos(), t.sin()];
                    let s = r / f.polar_raw(&u);
                    [s * u[0], s * u[1]]
                };
                resample_closed_curve(curve, m)
                    .into_iter()
                    .map(|p| BoundarySample { point: p, normal: polar_normal(f, p) })
                    .collect()
            }
            Shape::Polygon(v) => polygon_samples(v, m),
        }
    }

    /// Vertices of a polygonal domain, if any.
    pub fn polygon_vertices(&self) -> Option<&[[f64; 2]]> {
        match &self.shape {
            Shape::Polygon(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Outward normal of a Wulff boundary at `p`, from a centered difference of
/// `F°`. At corners this averages the adjacent face normals.
fn polar_normal(f: &Anisotropy, p: [f64; 2]) -> [f64; 2] {
    let d = 1e-7 * p[0].hypot(p[1]).max(1e-300);
    let gx = f.polar_raw(&[p[0] + d, p[1]]) - f.polar_raw(&[p[0] - d, p[1]]);
    let gy = f.polar_raw(&[p[0], p[1] + d]) - f.polar_raw(&[p[0], p[1] - d]);
    unit([gx, gy])
}

/// Arc-length resampling of a closed parametric curve on `[0, 2pi)`.
fn resample_closed_curve<C: Fn(f64) -> [f64; 2]>(curve: C, m: usize) -> Vec<[f64; 2]> {
    let dense = 16 * m;
    let pts: Vec<[f64; 2]> =
        (0..=dense).map(|k| curve(std::f64::consts::TAU * k as f64 / dense as f64)).collect();
    let mut cum = vec![0.0; dense + 1];
    for k in 1..=dense {
        cum[k] = cum[k - 1] + (pts[k][0] - pts[k - 1][0]).hypot(pts[k][1] - pts[k - 1][1]);
    }
    let total = cum[dense];
    let mut out = Vec::with_capacity(m);
    let mut j = 0;
    for i in 0..m {
        let s = total * i as f64 / m as f64;
        while j + 1 < dense && cum[j + 1] < s {
            j += 1;
        }
        let seg = cum[j + 1] - cum[j];
        let w = if seg > 0.0 { (s - cum[j]) / seg } else { 0.0 };
        out.push([
            pts[j][0] + w * (pts[j + 1][0] - pts[j][0]),
            pts[j][1] + w * (pts[j + 1][1] - pts[j][1]),
        ]);
    }
    out
}

fn polygon_samples(v: &[[f64; 2]], m: usize) -> Vec<BoundarySample> {
    let k = v.len();
    let len = |i: usize| {
        let (a, b) = (v[i], v[(i + 1) % k]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    };
    let perim: f64 = (0..k).map(len).sum();
    let edge_normal = |i: usize| {
        let (a, b) = (v[i], v[(i + 1) % k]);
        unit([b[1] - a[1], a[0] - b[0]])
    };
    let mut out = Vec::with_capacity(m + k);
    for i in 0..k {
        let n_prev = edge_normal((i + k - 1) % k);
        let n_here = edge_normal(i);
        out.push(BoundarySample {
            point: v[i],
            normal: unit([n_prev[0] + n_here[0], n_prev[1] + n_here[1]]),
        });
        let pieces = ((m as f64 * len(i) / perim).round() as usize).max(1);
        let (a, b) = (v[i], v[(i + 1) % k]);
        for s in 1..pieces {
            let t = s as f64 / pieces as f64;
            out.push(BoundarySample {
                point: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                normal: n_here,
            });
        }
    }
    out
}

fn winding_inside(v: &[[f64; 2]], x: [f64; 2]) -> bool {
    let mut inside = false;
    let k = v.len();
    for i in 0..k {
        let (a, b) = (v[i], v[(i + 1) % k]);
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let t = (x[1] - a[1]) / (b[1] - a[1]);
            if x[0] < a[0] + t * (b[0] - a[0]) {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_distance(v: &[[f64; 2]], x: [f64; 2]) -> f64 {
    let k = v.len();
    (0..k)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % k]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let l2 = d[0] * d[0] + d[1] * d[1];
            let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0);
            (x[0] - a[0] - t * d[0]).hypot(x[1] - a[1] - t * d[1])
        })
        .fold(f64::INFINITY, f64::min)
}

/// The condenser `W_R \ Ω̄` together with the energy density `F^p`.
#[derive(Clone, Debug)]
pub struct AnnulusProblem {
    pub domain: DomainSpec,
    pub outer_radius: f64,
    pub anisotropy: Anisotropy,
    pub p: f64,
}

impl AnnulusProblem {
    /// Capacity problem; requires `1 < p < N` and `Ω̄ ⊂ W_R`.
    pub fn new(domain: DomainSpec, anisotropy: Anisotropy, p: f64, outer_radius: f64) -> Result<Self> {
        let n = anisotropy.dim() as f64;
        if !(p > 1.0 && p < n) {
            return Err(invalid(format!("capacity runs need 1 < p < {n}, got {p}")));
        }
        Self::dirichlet(domain, anisotropy, p, outer_radius)
    }

    /// Plain Dirichlet problem; any `p > 1` is accepted.
    pub fn dirichlet(domain: DomainSpec, anisotropy: Anisotropy, p: f64, outer_radius: f64) -> Result<Self> {
        crate::anisotropy::check_p(p)?;
        if anisotropy.dim() != 2 {
            return Err(invalid("annulus problems are planar; the anisotropy must be 2-D"));
        }
        positive(outer_radius, "outer radius R")?;
        let rb = super::radius_bounds(&anisotropy, &domain)?;
        if rb.r2 >= outer_radius {
            return Err(invalid(format!(
                "obstacle reaches F°-radius {:.6} which is not inside W_R with R = {outer_radius}",
                rb.r2
            )));
        }
        Ok(Self { domain, outer_radius, anisotropy, p })
    }

    /// `alpha = (p - N) / (p - 1)`.
    pub fn alpha(&self) -> f64 {
        (self.p - self.anisotropy.dim() as f64) / (self.p - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> DomainSpec {
        DomainSpec::polygon(vec![[-0.5, -0.5], [1.5, -0.5], [1.5, 0.5], [0.5, 0.5], [0.5, 1.5], [-0.5, 1.5]])
            .unwrap()
    }

    #[test]
    fn membership() {
        let d = DomainSpec::disk(1.0).unwrap();
        assert!(d.contains([0.5, 0.5]) && !d.contains([1.0, 0.0]));
        assert!(d.contains_closed([1.0, 0.0], 0.0));
        let l = l_shape();
        assert!(l.contains([1.0, 0.0]) && l.contains([0.0, 1.0]) && !l.contains([1.0, 1.0]));
        assert!(!l.contains([0.5, 0.5]) && l.contains_closed([0.5, 0.5], 0.0));
        assert!((l.excess([1.0, 1.0]) - 0.5).abs() < 1e-15);
        let w = DomainSpec::wulff(&Anisotropy::l1(2).unwrap(), 1.0).unwrap();
        assert!(w.contains([0.9, -0.9]) && !w.contains([1.0, 0.2]));
    }

    #[test]
    fn polygon_validation() {
        assert!(DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        let cw = vec![[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]];
        assert!(DomainSpec::polygon(cw).is_err());
        let off = vec![[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]];
        assert!(DomainSpec::polygon(off).is_err());
    }

    #[test]
    fn samples_lie_on_boundary() {
        let f = Anisotropy::l1(2).unwrap();
        for d in [
            DomainSpec::disk(1.0).unwrap(),
            DomainSpec::ellipse(1.0, 0.5).unwrap(),
            DomainSpec::wulff(&f, 1.0).unwrap(),
            l_shape(),
        ] {
            let s = d.boundary_samples(400);
            assert!(s.len() >= 400);
            for b in &s {
                assert!(d.contains_closed(b.point, 1e-12), "{d}: {:?}", b.point);
                let n = b.normal;
                assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
                let out = [b.point[0] + 1e-6 * n[0], b.point[1] + 1e-6 * n[1]];
                assert!(!d.contains(out) && d.excess(out) > 0.0, "{d}: {:?}", b.point);
            }
        }
        // The Wulff square has axis normals on its faces.
        let s = DomainSpec::wulff(&f, 1.0).unwrap().boundary_samples(64);
        let face = s.iter().find(|b| (b.point[0] - 1.0).abs() < 1e-12 && b.point[1].abs() < 0.5).unwrap();
        assert!((face.normal[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn parse_and_polygon_file() {
        let f = Anisotropy::euclidean(2).unwrap();
        assert_eq!(DomainSpec::parse("disk(1)", &f).unwrap().to_string(), "disk(1)");
        assert_eq!(DomainSpec::parse("ellipse(1, 0.5)", &f).unwrap().to_string(), "ellipse(1,0.5)");
        assert!(DomainSpec::parse("disk(-1)", &f).is_err());
        assert!(DomainSpec::parse("torus(1)", &f).is_err());
        let dir = std::env::temp_dir().join(format!("anisocap-poly-{}", std::process::id()));
        std::fs::write(&dir, "# square\n-1 -1\n1 -1\n1 1\n-1 1\n").unwrap();
        let d = DomainSpec::parse(&format!("polygon({})", dir.display()), &f).unwrap();
        assert!(d.contains([0.99, 0.99]));
        std::fs::remove_file(dir).unwrap();
    }

    #[test]
    fn annulus_validation() {
        let f = Anisotropy::euclidean(2).unwrap();
        let d = DomainSpec::disk(1.0).unwrap();
        assert!(AnnulusProblem::new(d.clone(), f.clone(), 1.5, 2.0).is_ok());
        assert!(AnnulusProblem::new(d.clone(), f.clone(), 2.5, 2.0).is_err());
        assert!(AnnulusProblem::dirichlet(d.clone(), f.clone(), 2.5, 2.0).is_ok());
        assert!(AnnulusProblem::new(d, f, 1.5, 0.9).is_err());
    }
}
