//! Reference LP solution by vertex enumeration.
//!
//! The feasible set `{c ≥ 0 : A c ≥ b}` lies in the non-negative orthant and
//! the costs are non-negative, so the minimum is attained at a vertex. Each
//! vertex makes `K` of the `2K` inequalities tight with linearly independent
//! normals; we try every such subset, solve the square system, and keep the
//! cheapest feasible point.

use sidebandit::environment::{gaps, Instance};

/// Gaussian elimination with partial pivoting; `None` for singular systems.
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let p = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[p][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, p);
        rhs.swap(col, p);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(r);
            for (v, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *v -= f * p;
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

/// `min cost·x` over `{x ≥ 0 : a x ≥ b}` by vertex enumeration.
pub fn enumerate_min(a: &[Vec<f64>], b: &[f64], cost: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = cost.len();
    let m = a.len();
    // Rows 0..m are the covering constraints, m..m+k the bounds x_j ≥ 0.
    let normal = |i: usize| -> (Vec<f64>, f64) {
        if i < m {
            (a[i].clone(), b[i])
        } else {
            let mut e = vec![0.0; k];
            e[i - m] = 1.0;
            (e, 0.0)
        }
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for subset in subsets(m + k, k) {
        let (rows, rhs): (Vec<_>, Vec<_>) = subset.iter().map(|&i| normal(i)).unzip();
        let Some(x) = solve_square(rows, rhs) else {
            continue;
        };
        let feasible = x.iter().all(|&v| v >= -1e-9)
            && a.iter().zip(b).all(|(row, &bi)| {
                let lhs: f64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
                lhs >= bi * (1.0 - 1e-9)
            });
        if !feasible {
            continue;
        }
        let value: f64 = cost.iter().zip(&x).map(|(p, q)| p * q).sum();
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((x, value));
        }
    }
    best
}

/// Constraint data for an instance, built directly from the definitions:
/// arm `i` needs `Σ_j c_j/σ²_{j,i} ≥ 2/Δ_i²`, with `Δ_min` for optimal arms.
pub fn reference_program(instance: &Instance<f64>) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let k = instance.k();
    let fb = instance.feedback();
    let g = gaps(instance.means());
    let a = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let s = fb.sigma(j, i);
                    if s.is_finite() {
                        1.0 / (s * s)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let dmin = g.delta_min.expect("instance has a suboptimal arm");
    let b = g
        .deltas
        .iter()
        .map(|&d| {
            if d > 0.0 {
                2.0 / (d * d)
            } else {
                2.0 / (dmin * dmin)
            }
        })
        .collect();
    (a, b, g.deltas)
}

pub fn lower_bound(instance: &Instance<f64>) -> f64 {
    let (a, b, cost) = reference_program(instance);
    enumerate_min(&a, &b, &cost)
        .expect("identifiable instances are feasible")
        .1
}
