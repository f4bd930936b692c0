use crate::problem::{LinearProgram, Sense, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Branch-and-bound stopped at its node limit; `values` holds the best
    /// incumbent if one was found.
    NodeLimit,
    IterationLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::NodeLimit => "node-limit",
            Status::IterationLimit => "iteration-limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub values: Vec<f64>,
    /// Objective in the problem's own sense, offset included.
    pub objective: f64,
    /// Row multipliers `y` with `c = Aᵀy + d` in the problem's own sense.
    /// Empty for MILP solutions.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Best proven bound (equal to `objective` for LPs solved to optimality).
    pub best_bound: f64,
    /// Relative gap `|objective − best_bound| / max(1, |objective|)`.
    pub gap: f64,
    pub iterations: usize,
    pub nodes: usize,
}

impl Solution {
    pub(crate) fn empty(status: Status, n: usize) -> Self {
        Solution {
            status,
            values: vec![0.0; n],
            objective: f64::NAN,
            row_duals: Vec::new(),
            reduced_costs: Vec::new(),
            best_bound: f64::NAN,
            gap: f64::INFINITY,
            iterations: 0,
            nodes: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn has_values(&self) -> bool {
        self.objective.is_finite()
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }
}

/// Bound on the optimum implied by row duals `y` and reduced costs `d`
/// (a lower bound for minimization, an upper bound for maximization).
///
/// Evaluated from the problem data only: each term takes the extreme of
/// `y_i·r_i` over the row's activity interval and of `d_j·x_j` over the
/// column's bounds. Multipliers below `zero_tol` in magnitude count as zero.
pub fn dual_bound(lp: &LinearProgram, y: &[f64], d: &[f64], zero_tol: f64) -> f64 {
    let pick = |coef: f64, lo: f64, hi: f64| -> f64 {
        if coef.abs() <= zero_tol {
            return 0.0;
        }
        let favour_low = match lp.sense {
            Sense::Minimize => coef > 0.0,
            Sense::Maximize => coef < 0.0,
        };
        let b = if favour_low { lo } else { hi };
        coef * b
    };
    let mut total = lp.objective_offset;
    for (row, &yi) in lp.rows.iter().zip(y) {
        let (lo, hi) = row.bounds();
        total += pick(yi, lo, hi);
    }
    for j in 0..lp.num_vars() {
        total += pick(d[j], lp.lower[j], lp.upper[j]);
    }
    total
}
