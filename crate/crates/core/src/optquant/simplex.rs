//! Dense two-phase primal simplex with Bland's rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// `min cost . x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub cost: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome<T> {
    pub status: LpStatus,
    /// Primal solution (empty unless optimal).
    pub x: Vec<T>,
    pub objective: T,
    /// One multiplier per constraint.
    pub duals: Vec<T>,
    /// `max(0, -min reduced cost)` over structural and slack columns.
    pub dual_residual: f64,
    pub pivots: usize,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    width: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> &T {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            // keep the pivot column an exact unit vector
            row[c] = T::zero();
        }
        self.basis[r] = c;
    }

    fn reduced(&self, cost: &[T], j: usize) -> T {
        self.rows
            .iter()
            .zip(&self.basis)
            .fold(cost[j].clone(), |acc, (row, &b)| acc - cost[b].clone() * row[j].clone())
    }

    /// Optimize `cost` over columns `0..allowed`. Returns `false` if unbounded.
    fn run(&mut self, cost: &[T], allowed: usize, pivots: &mut usize, limit: usize) -> Result<bool> {
        let tol = T::tolerance();
        loop {
            let Some(enter) = (0..allowed).find(|&j| !self.basis.contains(&j) && self.reduced(cost, j) < -tol.clone())
            else {
                return Ok(true);
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if *a <= tol {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            if *pivots >= limit {
                return Err(Error::PivotLimit);
            }
            *pivots += 1;
            self.pivot(r, enter);
        }
    }
}

pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpOutcome<T>> {
    let n = lp.cost.len();
    let m = lp.constraints.len();
    if let Some(c) = lp.constraints.iter().find(|c| c.coeffs.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c.coeffs.len(),
        });
    }
    let slacks: Vec<Option<usize>> = {
        let mut next = n;
        lp.constraints
            .iter()
            .map(|c| {
                (c.relation != Relation::Eq).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let cols = n + slacks.iter().flatten().count();
    let width = cols + m;

    // standard form rows with nonnegative right-hand sides, artificials after
    let mut flipped = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![T::zero(); width + 1];
        row[..n].clone_from_slice(&c.coeffs);
        if let Some(s) = slacks[i] {
            row[s] = if c.relation == Relation::Le {
                T::one()
            } else {
                -T::one()
            };
        }
        row[width] = c.rhs.clone();
        if c.rhs < T::zero() {
            flipped[i] = true;
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[cols + i] = T::one();
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        basis: (cols..cols + m).collect(),
        width,
    };
    let limit = 50 * (width + 1) + 10_000;
    let mut pivots = 0;

    let mut phase1 = vec![T::zero(); width];
    phase1[cols..].iter_mut().for_each(|v| *v = T::one());
    tab.run(&phase1, width, &mut pivots, limit)?;
    let infeasibility = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= cols)
        .fold(T::zero(), |acc, (i, _)| acc + tab.rhs(i).clone());
    let feas_tol = if T::is_exact() {
        T::zero()
    } else {
        T::tolerance() * T::from_usize(1000)
    };
    let mut outcome = LpOutcome {
        status: LpStatus::Infeasible,
        x: Vec::new(),
        objective: T::zero(),
        duals: vec![T::zero(); m],
        dual_residual: 0.0,
        pivots,
    };
    if infeasibility > feas_tol {
        return Ok(outcome);
    }
    // drive zero-level artificials out; rows where that fails are redundant
    for i in 0..m {
        if tab.basis[i] < cols {
            continue;
        }
        if let Some(j) = (0..cols).find(|&j| tab.rows[i][j].abs() > T::tolerance()) {
            tab.pivot(i, j);
        }
    }

    let mut cost = vec![T::zero(); width];
    cost[..n].clone_from_slice(&lp.cost);
    if !tab.run(&cost, cols, &mut pivots, limit)? {
        outcome.status = LpStatus::Unbounded;
        outcome.pivots = pivots;
        return Ok(outcome);
    }

    let mut x = vec![T::zero(); cols];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < cols {
            x[b] = tab.rhs(i).clone();
        }
    }
    x.truncate(n);
    // y = c_B B^{-1}; the artificial block of the tableau holds B^{-1}
    let duals: Vec<T> = (0..m)
        .map(|k| {
            let y = tab.rows.iter().zip(&tab.basis).fold(T::zero(), |acc, (row, &b)| {
                acc + cost[b].clone() * row[cols + k].clone()
            });
            if flipped[k] {
                -y
            } else {
                y
            }
        })
        .collect();
    let mut min_rc = 0.0f64;
    for j in 0..n {
        let rc = lp
            .constraints
            .iter()
            .zip(&duals)
            .fold(lp.cost[j].clone(), |acc, (c, y)| acc - y.clone() * c.coeffs[j].clone());
        min_rc = min_rc.min(rc.to_f64());
    }
    for (c, y) in lp.constraints.iter().zip(&duals) {
        let rc = match c.relation {
            Relation::Le => -y.clone(),
            Relation::Ge => y.clone(),
            Relation::Eq => continue,
        };
        min_rc = min_rc.min(rc.to_f64());
    }
    outcome.objective = x
        .iter()
        .zip(&lp.cost)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
    outcome.status = LpStatus::Optimal;
    outcome.x = x;
    outcome.duals = duals;
    outcome.dual_residual = -min_rc;
    outcome.pivots = pivots;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    fn row<T>(coeffs: Vec<T>, relation: Relation, rhs: T) -> Constraint<T> {
        Constraint { coeffs, relation, rhs }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let lp = LinearProgram {
            cost: vec![-3.0, -5.0],
            constraints: vec![
                row(vec![1.0, 0.0], Relation::Le, 4.0),
                row(vec![0.0, 2.0], Relation::Le, 12.0),
                row(vec![3.0, 2.0], Relation::Le, 18.0),
            ],
        };
        let out = solve_lp::<f64>(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective + 36.0).abs() < 1e-12);
        assert!((out.x[0] - 2.0).abs() < 1e-12 && (out.x[1] - 6.0).abs() < 1e-12);
        assert!(out.dual_residual <= 1e-12);
        // strong duality: b . y equals the optimum
        let by: f64 = out.duals.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((by + 36.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram {
            cost: vec![1.0],
            constraints: vec![row(vec![1.0], Relation::Ge, 2.0), row(vec![1.0], Relation::Le, 1.0)],
        };
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
        let lp = LinearProgram {
            cost: vec![-1.0, 0.0],
            constraints: vec![row(vec![1.0, -1.0], Relation::Eq, 0.0)],
        };
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_and_exact_arithmetic() {
        // x + y = 1 stated three times; minimize x - y with y <= 1/3
        let r = |a, b| ratio(a, b);
        let lp: LinearProgram<Rational> = LinearProgram {
            cost: vec![r(1, 1), r(-1, 1)],
            constraints: vec![
                row(vec![r(1, 1), r(1, 1)], Relation::Eq, r(1, 1)),
                row(vec![r(1, 1), r(1, 1)], Relation::Eq, r(1, 1)),
                row(vec![r(2, 1), r(2, 1)], Relation::Eq, r(2, 1)),
                row(vec![r(0, 1), r(1, 1)], Relation::Le, r(1, 3)),
            ],
        };
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.x, vec![r(2, 3), r(1, 3)]);
        assert_eq!(out.objective, r(1, 3));
        assert_eq!(out.dual_residual, 0.0);
    }

    #[test]
    fn negative_right_hand_side() {
        // -x <= -2 means x >= 2
        let lp = LinearProgram {
            cost: vec![1.0],
            constraints: vec![row(vec![-1.0], Relation::Le, -2.0)],
        };
        let out = solve_lp::<f64>(&lp).unwrap();
        assert!((out.objective - 2.0).abs() < 1e-12);
        assert!(out.dual_residual <= 1e-12);
    }
}
