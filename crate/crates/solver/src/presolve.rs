//! Reductions applied before the simplex: fixed columns are substituted out,
//! empty rows are checked and dropped, and singleton rows become column
//! bounds. [`Presolved::restore`] maps a reduced solution back, including row
//! duals for the removed singleton rows.

use crate::problem::{LinearProgram, MilpProblem, Row, VarKind};
use crate::solution::{Solution, Status};

const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Presolved {
    pub problem: MilpProblem,
    /// Set when a reduction proved the problem infeasible.
    pub infeasible: bool,
    original: LinearProgram,
    /// Reduced column index → original column.
    kept_cols: Vec<usize>,
    /// Reduced row index → original row.
    kept_rows: Vec<usize>,
    fixed: Vec<(usize, f64)>,
    /// Singleton rows in removal order: (row, column, coefficient).
    singletons: Vec<(usize, usize, f64)>,
}

impl Presolved {
    pub fn removed_columns(&self) -> usize {
        self.original.num_vars() - self.kept_cols.len()
    }

    pub fn removed_rows(&self) -> usize {
        self.original.num_rows() - self.kept_rows.len()
    }

    /// Maps a solution of the reduced problem onto the original columns.
    pub fn restore(&self, reduced: &Solution) -> Solution {
        let orig = &self.original;
        let n = orig.num_vars();
        let mut sol = Solution::empty(reduced.status, n);
        sol.iterations = reduced.iterations;
        sol.nodes = reduced.nodes;
        sol.gap = reduced.gap;
        if !reduced.has_values() {
            return sol;
        }
        let mut x = vec![0.0; n];
        for &(j, v) in &self.fixed {
            x[j] = v;
        }
        for (k, &j) in self.kept_cols.iter().enumerate() {
            x[j] = reduced.values[k];
        }
        sol.objective = orig.evaluate(&x);
        sol.best_bound = reduced.best_bound;
        sol.values = x;

        if reduced.row_duals.len() == self.kept_rows.len()
            && reduced.reduced_costs.len() == self.kept_cols.len()
        {
            let mut y = vec![0.0; orig.num_rows()];
            for (k, &i) in self.kept_rows.iter().enumerate() {
                y[i] = reduced.row_duals[k];
            }
            let mut d = vec![f64::NAN; n];
            for (k, &j) in self.kept_cols.iter().enumerate() {
                d[j] = reduced.reduced_costs[k];
            }
            for &(i, j, a) in self.singletons.iter().rev() {
                if d[j].is_nan() || d[j] == 0.0 {
                    continue;
                }
                let row = &orig.rows[i];
                let (rlo, rhi) = row.bounds();
                let act = a * sol.values[j];
                let tol = FEAS_TOL * (1.0 + act.abs());
                let at_lo = rlo.is_finite() && (act - rlo).abs() <= tol;
                let at_hi = rhi.is_finite() && (act - rhi).abs() <= tol;
                if at_lo || at_hi {
                    y[i] = d[j] / a;
                    d[j] = 0.0;
                }
            }
            let mut is_fixed = vec![false; n];
            for &(j, _) in &self.fixed {
                d[j] = orig.objective[j];
                is_fixed[j] = true;
            }
            for (i, row) in orig.rows.iter().enumerate() {
                if y[i] == 0.0 {
                    continue;
                }
                for &(j, a) in &row.entries {
                    if is_fixed[j] {
                        d[j] -= y[i] * a;
                    }
                }
            }
            sol.row_duals = y;
            sol.reduced_costs = d;
        }
        sol
    }
}

/// Applies fixed-column, empty-row and singleton-row reductions until none
/// applies.
pub fn presolve(problem: &MilpProblem) -> Presolved {
    let lp = &problem.lp;
    let n = lp.num_vars();
    let m = lp.num_rows();
    let mut lo = lp.lower.clone();
    let mut hi = lp.upper.clone();
    let mut col_alive = vec![true; n];
    let mut row_alive = vec![true; m];
    let mut row_shift = vec![0.0f64; m];
    let mut row_len: Vec<usize> = lp.rows.iter().map(|r| r.entries.len()).collect();
    let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.entries {
            col_rows[j].push((i, a));
        }
    }
    let mut fixed = Vec::new();
    let mut singletons = Vec::new();
    let mut infeasible = false;

    let integral = |j: usize| problem.kinds[j] != VarKind::Continuous;
    for j in 0..n {
        if integral(j) {
            lo[j] = (lo[j] - 1e-9).ceil();
            hi[j] = (hi[j] + 1e-9).floor();
        }
        if lo[j] > hi[j] {
            infeasible = true;
        }
    }

    let mut changed = !infeasible;
    while changed && !infeasible {
        changed = false;
        for j in 0..n {
            if col_alive[j] && lo[j] == hi[j] {
                let v = lo[j];
                col_alive[j] = false;
                fixed.push((j, v));
                for &(i, a) in &col_rows[j] {
                    row_shift[i] += a * v;
                    row_len[i] = row_len[i].saturating_sub(1);
                }
                changed = true;
            }
        }
        for (i, row) in lp.rows.iter().enumerate() {
            if !row_alive[i] {
                continue;
            }
            let (rlo, rhi) = row.bounds();
            let (rlo, rhi) = (rlo - row_shift[i], rhi - row_shift[i]);
            match row_len[i] {
                0 => {
                    let tol = FEAS_TOL * (1.0 + row.rhs.abs());
                    if rlo > tol || rhi < -tol {
                        infeasible = true;
                    }
                    row_alive[i] = false;
                    changed = true;
                }
                1 => {
                    let &(j, a) = row
                        .entries
                        .iter()
                        .find(|&&(j, _)| col_alive[j])
                        .expect("one live entry");
                    let (mut l, mut h) = if a > 0.0 {
                        (rlo / a, rhi / a)
                    } else {
                        (rhi / a, rlo / a)
                    };
                    if integral(j) {
                        l = (l - 1e-9).ceil();
                        h = (h + 1e-9).floor();
                    }
                    lo[j] = lo[j].max(l);
                    hi[j] = hi[j].min(h);
                    if lo[j] > hi[j] {
                        let tol = FEAS_TOL * (1.0 + lo[j].abs());
                        if lo[j] - hi[j] <= tol && !integral(j) {
                            hi[j] = lo[j];
                        } else {
                            infeasible = true;
                        }
                    }
                    singletons.push((i, j, a));
                    row_alive[i] = false;
                    changed = true;
                }
                _ => {}
            }
        }
    }

    let kept_cols: Vec<usize> = (0..n).filter(|&j| col_alive[j]).collect();
    let kept_rows: Vec<usize> = (0..m).filter(|&i| row_alive[i]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &j) in kept_cols.iter().enumerate() {
        new_index[j] = k;
    }

    let mut reduced = LinearProgram::new(lp.sense);
    reduced.objective_offset =
        lp.objective_offset + fixed.iter().map(|&(j, v)| lp.objective[j] * v).sum::<f64>();
    for &j in &kept_cols {
        reduced.objective.push(lp.objective[j]);
        reduced.lower.push(lo[j]);
        reduced.upper.push(hi[j].max(lo[j]));
        reduced.names.push(lp.names[j].clone());
    }
    for &i in &kept_rows {
        let row = &lp.rows[i];
        reduced.rows.push(Row {
            name: row.name.clone(),
            sense: row.sense,
            rhs: row.rhs - row_shift[i],
            entries: row
                .entries
                .iter()
                .filter(|&&(j, _)| col_alive[j])
                .map(|&(j, a)| (new_index[j], a))
                .collect(),
        });
    }
    let kinds = kept_cols.iter().map(|&j| problem.kinds[j]).collect();

    Presolved {
        problem: MilpProblem { lp: reduced, kinds },
        infeasible,
        original: lp.clone(),
        kept_cols,
        kept_rows,
        fixed,
        singletons,
    }
}

/// Convenience: presolve, solve the reduced LP, restore.
pub fn solve_lp_presolved(lp: &LinearProgram, opts: &crate::SimplexOptions) -> Solution {
    let pre = presolve(&MilpProblem::continuous(lp.clone()));
    if pre.infeasible {
        return Solution::empty(Status::Infeasible, lp.num_vars());
    }
    let reduced = crate::solve_lp(&pre.problem.lp, opts);
    pre.restore(&reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{RowSense, Sense, VarId};
    use crate::SimplexOptions;

    #[test]
    fn fixed_variable_substituted() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 3.0, 3.0, 2.0).unwrap();
        let y = lp.add_var("y", 0.0, 10.0, 1.0).unwrap();
        lp.add_row("r", RowSense::Ge, 5.0, &[(x, 1.0), (y, 1.0)]).unwrap();
        let pre = presolve(&MilpProblem::continuous(lp.clone()));
        assert_eq!(pre.problem.lp.num_vars(), 1);
        let sol = solve_lp_presolved(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.value(x), 3.0);
        assert!((sol.value(y) - 2.0).abs() < 1e-12);
        assert!((sol.objective - 8.0).abs() < 1e-12);
    }

    #[test]
    fn empty_row_dropped_or_infeasible() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, 1.0, 1.0).unwrap();
        lp.add_row("empty", RowSense::Le, 5.0, &[]).unwrap();
        lp.add_row("keep", RowSense::Ge, 0.5, &[(x, 1.0)]).unwrap();
        let pre = presolve(&MilpProblem::continuous(lp.clone()));
        assert!(!pre.infeasible);
        assert_eq!(pre.removed_rows(), 2);

        lp.add_row("bad", RowSense::Ge, 5.0, &[]).unwrap();
        assert!(presolve(&MilpProblem::continuous(lp)).infeasible);
    }

    #[test]
    fn singleton_row_dual_recovered() {
        // min x s.t. x ≥ 2 (singleton), x + y ≥ 1, y ≥ 0
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0).unwrap();
        let y = lp.add_var("y", 0.0, f64::INFINITY, 0.0).unwrap();
        lp.add_row("xmin", RowSense::Ge, 2.0, &[(x, 1.0)]).unwrap();
        lp.add_row("sum", RowSense::Ge, 1.0, &[(x, 1.0), (y, 1.0)]).unwrap();
        let plain = crate::solve_lp(&lp, &SimplexOptions::default());
        let pre = solve_lp_presolved(&lp, &SimplexOptions::default());
        assert!((plain.objective - pre.objective).abs() < 1e-12);
        assert!((pre.row_duals[0] - 1.0).abs() < 1e-12);
        assert!(pre.reduced_costs[0].abs() < 1e-12);
        assert_eq!(pre.value(VarId(0)), 2.0);
    }

    #[test]
    fn maximization_restores_objective() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 1.0, 1.0, 4.0).unwrap();
        let y = lp.add_var("y", 0.0, f64::INFINITY, 1.0).unwrap();
        lp.add_row("cap", RowSense::Le, 3.0, &[(x, 1.0), (y, 1.0)]).unwrap();
        let sol = solve_lp_presolved(&lp, &SimplexOptions::default());
        assert!((sol.objective - 6.0).abs() < 1e-12);
    }
}
