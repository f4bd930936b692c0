//! Best-bound branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::presolve::presolve;
use crate::problem::MilpProblem;
use crate::simplex::{outcome_to_solution, solve_standard, Basis, SimplexOptions, StandardForm};
use crate::solution::{Solution, Status};

#[derive(Clone, Debug, PartialEq)]
pub struct MilpOptions {
    pub int_tol: f64,
    pub rel_gap: f64,
    pub node_limit: usize,
    pub presolve: bool,
    /// Start each child relaxation from its parent's optimal basis.
    pub reuse_parent_basis: bool,
    pub lp: SimplexOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            int_tol: 1e-6,
            rel_gap: 1e-6,
            node_limit: 100_000,
            presolve: true,
            reuse_parent_basis: true,
            lp: SimplexOptions::default(),
        }
    }
}

struct Node {
    /// Parent relaxation value, minimization form.
    bound: f64,
    id: u64,
    /// Bound overrides `(column, lo, hi)` accumulated from the root.
    changes: Vec<(usize, f64, f64)>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound, then smallest id, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solves a mixed-integer program to within `opts.rel_gap` of optimality.
pub fn solve_milp(problem: &MilpProblem, opts: &MilpOptions) -> Solution {
    if !opts.presolve {
        return branch_and_bound(problem, opts);
    }
    let pre = presolve(problem);
    if pre.infeasible {
        return Solution::empty(Status::Infeasible, problem.lp.num_vars());
    }
    let reduced = branch_and_bound(&pre.problem, opts);
    pre.restore(&reduced)
}

fn most_fractional(problem: &MilpProblem, x: &[f64], int_tol: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut best_score = int_tol;
    for (j, &v) in x.iter().enumerate() {
        if !problem.is_integral(j) {
            continue;
        }
        let frac = v - v.floor();
        let score = frac.min(1.0 - frac);
        if score > best_score {
            best_score = score;
            best = Some((j, v));
        }
    }
    best
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

fn branch_and_bound(problem: &MilpProblem, opts: &MilpOptions) -> Solution {
    let lp = &problem.lp;
    let n = lp.num_vars();
    let sf = StandardForm::new(lp);

    let mut root_lo = lp.lower.clone();
    let mut root_hi = lp.upper.clone();
    for j in 0..n {
        if problem.is_integral(j) {
            root_lo[j] = (root_lo[j] - opts.int_tol).ceil();
            root_hi[j] = (root_hi[j] + opts.int_tol).floor();
        }
        if root_lo[j] > root_hi[j] {
            return Solution::empty(Status::Infeasible, n);
        }
    }

    if problem.num_integer() == 0 {
        let out = solve_standard(&sf, &root_lo, &root_hi, &opts.lp, None);
        let mut sol = outcome_to_solution(lp, &sf, out);
        sol.nodes = 1;
        return sol;
    }

    let mut incumbent: Option<Vec<f64>> = None;
    let mut incumbent_obj = f64::INFINITY;
    let mut iterations = 0usize;
    let mut nodes = 0usize;
    let mut next_id = 0u64;

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: next_id,
        changes: Vec::new(),
        basis: None,
    });
    next_id += 1;

    let mut lo = root_lo.clone();
    let mut hi = root_hi.clone();
    let mut limit_hit = false;
    let mut open_bound = f64::INFINITY;

    while let Some(node) = heap.pop() {
        if node.bound >= incumbent_obj
            || relative_gap(incumbent_obj, node.bound) <= opts.rel_gap
        {
            open_bound = open_bound.min(node.bound);
            break;
        }
        if nodes >= opts.node_limit {
            limit_hit = true;
            open_bound = open_bound.min(node.bound);
            break;
        }
        nodes += 1;

        lo.copy_from_slice(&root_lo);
        hi.copy_from_slice(&root_hi);
        for &(j, l, h) in &node.changes {
            lo[j] = l;
            hi[j] = h;
        }
        let start = if opts.reuse_parent_basis {
            node.basis.as_ref()
        } else {
            None
        };
        let out = solve_standard(&sf, &lo, &hi, &opts.lp, start);
        iterations += out.iterations;
        match out.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded if nodes == 1 => {
                let mut sol = Solution::empty(Status::Unbounded, n);
                sol.iterations = iterations;
                sol.nodes = nodes;
                return sol;
            }
            _ => {
                // Numerical trouble in a subtree: keep its parent bound open.
                open_bound = open_bound.min(node.bound);
                continue;
            }
        }
        let obj = out.objective;
        if obj >= incumbent_obj || relative_gap(incumbent_obj, obj) <= opts.rel_gap {
            continue;
        }

        if nodes == 1 {
            if let Some((x, v)) = rounding_heuristic(problem, &sf, &lo, &hi, &out.x, out.basis.as_ref(), opts) {
                if v < incumbent_obj {
                    incumbent_obj = v;
                    incumbent = Some(x);
                }
            }
        }

        match most_fractional(problem, &out.x, opts.int_tol) {
            None => {
                if obj < incumbent_obj {
                    incumbent_obj = obj;
                    let mut x = out.x;
                    snap_integers(problem, &mut x);
                    incumbent = Some(x);
                }
            }
            Some((j, v)) => {
                let basis = out.basis;
                let mut down = node.changes.clone();
                down.push((j, lo[j], v.floor()));
                let mut up = node.changes;
                up.push((j, v.ceil(), hi[j]));
                heap.push(Node {
                    bound: obj,
                    id: next_id,
                    changes: down,
                    basis: basis.clone(),
                });
                heap.push(Node {
                    bound: obj,
                    id: next_id + 1,
                    changes: up,
                    basis,
                });
                next_id += 2;
            }
        }
    }
    for node in heap.iter() {
        open_bound = open_bound.min(node.bound);
    }

    let Some(x) = incumbent else {
        let mut sol = Solution::empty(
            if limit_hit { Status::NodeLimit } else { Status::Infeasible },
            n,
        );
        sol.iterations = iterations;
        sol.nodes = nodes;
        return sol;
    };
    let best_bound_min = open_bound.min(incumbent_obj);
    let mut sol = Solution::empty(
        if limit_hit { Status::NodeLimit } else { Status::Optimal },
        n,
    );
    sol.objective = lp.evaluate(&x);
    sol.best_bound = sf.sign * best_bound_min + lp.objective_offset;
    sol.gap = relative_gap(incumbent_obj, best_bound_min);
    sol.values = x;
    sol.iterations = iterations;
    sol.nodes = nodes;
    sol
}

fn snap_integers(problem: &MilpProblem, x: &mut [f64]) {
    for (j, v) in x.iter_mut().enumerate() {
        if problem.is_integral(j) {
            *v = v.round();
        }
    }
}

/// Fixes integer columns to rounded relaxation values (nearest, then up)
/// and re-solves the continuous remainder.
fn rounding_heuristic(
    problem: &MilpProblem,
    sf: &StandardForm,
    lo: &[f64],
    hi: &[f64],
    relaxed: &[f64],
    basis: Option<&Basis>,
    opts: &MilpOptions,
) -> Option<(Vec<f64>, f64)> {
    for round_up in [false, true] {
        let mut flo = lo.to_vec();
        let mut fhi = hi.to_vec();
        for j in 0..relaxed.len() {
            if problem.is_integral(j) {
                let v = if round_up {
                    (relaxed[j] - opts.int_tol).ceil()
                } else {
                    relaxed[j].round()
                };
                let v = v.clamp(lo[j], hi[j]);
                flo[j] = v;
                fhi[j] = v;
            }
        }
        let out = solve_standard(sf, &flo, &fhi, &opts.lp, basis);
        if out.status == Status::Optimal {
            let mut x = out.x;
            snap_integers(problem, &mut x);
            return Some((x, out.objective));
        }
    }
    None
}
