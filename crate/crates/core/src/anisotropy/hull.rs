//! Euclidean projection onto the convex hull of a few points in R^2 or R^3,
//! by Wolfe's minimum-norm-point algorithm. Exact up to round-off; corrals
//! never exceed `dim + 1` points.

use super::MAX_DIM;

fn sub(a: &[f64; MAX_DIM], b: &[f64], n: usize) -> [f64; MAX_DIM] {
    let mut out = [0.0; MAX_DIM];
    for i in 0..n {
        out[i] = a[i] - b[i];
    }
    out
}

fn dotn(a: &[f64; MAX_DIM], b: &[f64; MAX_DIM], n: usize) -> f64 {
    (0..n).map(|i| a[i] * b[i]).sum()
}

/// Minimizer of `|y|` over the affine hull of `pts[idx]`, as barycentric
/// coefficients. Returns `None` if the points are affinely dependent.
fn affine_min(pts: &[[f64; MAX_DIM]], idx: &[usize], n: usize) -> Option<Vec<f64>> {
    let k = idx.len();
    let m = k + 1;
    // Bordered Gram system [G 1; 1^T 0] [v; mu] = [0; 1].
    let mut a = vec![vec![0.0; m + 1]; m];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = dotn(&pts[idx[r]], &pts[idx[c]], n);
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    a[k][m] = 1.0;
    let scale = a.iter().flat_map(|r| r.iter()).fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..k).map(|r| a[r][m] / a[r][r]).collect())
}

/// Closest point to `target` in `conv(points)`.
pub(super) fn project(points: &[[f64; MAX_DIM]], n: usize, target: &[f64]) -> [f64; MAX_DIM] {
    let mut out = [0.0; MAX_DIM];
    if points.is_empty() {
        out[..n].copy_from_slice(target);
        return out;
    }
    let pts: Vec<[f64; MAX_DIM]> = points.iter().map(|p| sub(p, target, n)).collect();
    let scale = pts.iter().map(|p| dotn(p, p, n)).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-13 * scale;

    let first = (0..pts.len())
        .min_by(|&i, &j| dotn(&pts[i], &pts[i], n).total_cmp(&dotn(&pts[j], &pts[j], n)))
        .unwrap();
    let mut corral = vec![first];
    let mut w = vec![1.0];
    let mut x = pts[first];

    for _ in 0..200 {
        let (j, xj) = (0..pts.len())
            .map(|j| (j, dotn(&x, &pts[j], n)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if dotn(&x, &x, n) - xj <= tol || corral.contains(&j) || corral.len() > n {
            break;
        }
        corral.push(j);
        w.push(0.0);
        loop {
            let v = match affine_min(&pts, &corral, n) {
                Some(v) => v,
                None => {
                    // Drop the newest point; the current x is already optimal
                    // to working precision on this corral.
                    corral.pop();
                    w.pop();
                    break;
                }
            };
            if v.iter().all(|&c| c > 1e-15) {
                w = v;
                break;
            }
            let mut theta = 1.0f64;
            for (wi, vi) in w.iter().zip(&v) {
                if *vi <= 1e-15 {
                    let d = wi - vi;
                    if d > 0.0 {
                        theta = theta.min(wi / d);
                    }
                }
            }
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi = theta * vi + (1.0 - theta) * *wi;
            }
            let mut keep_c = Vec::new();
            let mut keep_w = Vec::new();
            let mut dropped = false;
            for (c, wi) in corral.iter().zip(&w) {
                if *wi <= 1e-15 && !dropped {
                    dropped = true;
                } else if *wi > 1e-15 {
                    keep_c.push(*c);
                    keep_w.push(*wi);
                }
            }
            if keep_c.is_empty() {
                keep_c.push(corral[0]);
                keep_w.push(1.0);
            }
            let total: f64 = keep_w.iter().sum();
            keep_w.iter_mut().for_each(|v| *v /= total);
            corral = keep_c;
            w = keep_w;
        }
        x = [0.0; MAX_DIM];
        for (c, wi) in corral.iter().zip(&w) {
            for i in 0..n {
                x[i] += wi * pts[*c][i];
            }
        }
    }
    for i in 0..n {
        out[i] = x[i] + target[i];
    }
    out
}
