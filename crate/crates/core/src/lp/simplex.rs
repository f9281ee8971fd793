//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min cost·x  s.t.  A x ≥ b, x ≥ 0` for `b > 0`. Rows are rescaled
//! so their largest coefficient is one; the tableau then carries, per row,
//! the structural columns, one surplus and one artificial column.

use crate::scalar::Scalar;

use super::LpError;

/// Upper bound on pivots across both phases.
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome<S> {
    pub x: Vec<S>,
    pub pivots: usize,
}

struct Tableau<S> {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    rows: Vec<Vec<S>>,
    /// Reduced costs, last entry is minus the objective value.
    objective: Vec<S>,
    basis: Vec<usize>,
    structural: usize,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn width(&self) -> usize {
        self.objective.len() - 1
    }

    fn rhs(&self, row: usize) -> &S {
        &self.rows[row][self.width()]
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.structural + self.rows.len()
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<(), LpError> {
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(LpError::IterationLimit(MAX_PIVOTS));
        }
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.rows[r][c] = S::one();
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<S>| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            row[c] = S::zero();
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.objective);
        self.basis[r] = c;
        Ok(())
    }

    /// Runs Bland's rule until no improving column remains.
    fn optimize(&mut self, allow_artificial: bool) -> Result<(), LpError> {
        let tol = S::tolerance();
        loop {
            let width = self.width();
            let entering = (0..width).find(|&j| {
                (allow_artificial || !self.is_artificial(j)) && self.objective[j] < -tol.clone()
            });
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !(*a > tol) {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, best)) => {
                        let slack = tol.clone() * max_one(&best);
                        let smaller = ratio < best.clone() - slack.clone();
                        let tied = ratio <= best.clone() + slack;
                        if smaller || (tied && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c)?;
        }
    }
}

fn max_one<S: Scalar>(x: &S) -> S {
    let a = x.abs();
    if a > S::one() {
        a
    } else {
        S::one()
    }
}

/// Minimizes `cost·x` over `{x ≥ 0 : A x ≥ b}`; requires `b > 0`.
pub(crate) fn minimize<S: Scalar>(
    a: &[Vec<S>],
    b: &[S],
    cost: &[S],
) -> Result<SimplexOutcome<S>, LpError> {
    let m = a.len();
    let n = cost.len();
    let width = n + 2 * m;

    let mut rows = Vec::with_capacity(m);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let scale = row
            .iter()
            .fold(S::zero(), |acc, v| if *v > acc { v.clone() } else { acc });
        if !(scale > S::zero()) {
            return Err(LpError::Infeasible { row: i });
        }
        let mut t = vec![S::zero(); width + 1];
        for (j, v) in row.iter().enumerate() {
            t[j] = v.clone() / scale.clone();
        }
        t[n + i] = -S::one();
        t[n + m + i] = S::one();
        t[width] = bi.clone() / scale;
        rows.push(t);
    }

    // Phase one: minimize the sum of artificials.
    let mut objective = vec![S::zero(); width + 1];
    for row in &rows {
        for j in 0..n + m {
            objective[j] = objective[j].clone() - row[j].clone();
        }
        objective[width] = objective[width].clone() - row[width].clone();
    }
    let mut tab = Tableau {
        rows,
        objective,
        basis: (n + m..n + 2 * m).collect(),
        structural: n,
        pivots: 0,
    };
    tab.optimize(true)?;

    let total_rhs = b.iter().fold(S::zero(), |acc, v| acc + v.abs());
    let infeasibility = -tab.objective[width].clone();
    if infeasibility > S::tolerance() * max_one(&total_rhs) {
        return Err(LpError::Infeasible {
            row: tab
                .basis
                .iter()
                .position(|&c| tab.is_artificial(c))
                .unwrap_or(0),
        });
    }

    // Drive zero-level artificials out of the basis where possible. A row
    // with no usable column is redundant and keeps its artificial at zero.
    for r in 0..m {
        if !tab.is_artificial(tab.basis[r]) {
            continue;
        }
        if let Some(c) = (0..n + m).find(|&j| tab.rows[r][j].abs() > S::tolerance()) {
            tab.pivot(r, c)?;
        }
    }

    // Phase two objective in terms of the current basis.
    let mut objective = vec![S::zero(); width + 1];
    for (j, cj) in cost.iter().enumerate() {
        objective[j] = cj.clone();
    }
    for r in 0..m {
        let bc = tab.basis[r];
        if bc < n && !cost[bc].is_zero() {
            let f = cost[bc].clone();
            for (o, v) in objective.iter_mut().zip(&tab.rows[r]) {
                *o = o.clone() - f.clone() * v.clone();
            }
        }
    }
    tab.objective = objective;
    tab.optimize(false)?;

    let mut x = vec![S::zero(); n];
    for r in 0..m {
        let bc = tab.basis[r];
        if bc < n {
            let v = tab.rhs(r).clone();
            x[bc] = if v < S::zero() { S::zero() } else { v };
        }
    }
    Ok(SimplexOutcome {
        x,
        pivots: tab.pivots,
    })
}

/// Scales `x` up until every row of `A x ≥ b` holds in the scalar's own
/// arithmetic. A no-op for exact scalars and for already-feasible points.
pub(crate) fn restore_feasibility<S: Scalar>(a: &[Vec<S>], b: &[S], x: &mut [S]) {
    if S::is_exact() {
        return;
    }
    for _ in 0..16 {
        let mut worst: Option<S> = None;
        for (row, bi) in a.iter().zip(b) {
            let lhs = dot(row, x);
            if lhs < *bi {
                let ratio = if lhs > S::zero() {
                    bi.clone() / lhs
                } else {
                    // No mass on this row; cannot be fixed by scaling.
                    continue;
                };
                worst = Some(match worst {
                    Some(w) if w > ratio => w,
                    _ => ratio,
                });
            }
        }
        let Some(mut factor) = worst else {
            return;
        };
        if !(factor > S::one()) {
            factor = S::one();
        }
        factor = factor * (S::one() + S::roundoff() + S::roundoff());
        for v in x.iter_mut() {
            *v = v.clone() * factor.clone();
        }
    }
}

pub(crate) fn dot<S: Scalar>(row: &[S], x: &[S]) -> S {
    row.iter()
        .zip(x)
        .fold(S::zero(), |acc, (a, v)| acc + a.clone() * v.clone())
}
