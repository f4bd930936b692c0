//! Bounded-variable revised primal simplex.
//!
//! Every row `a_i·x` gets a logical column `r_i` with `a_i·x − r_i = 0` and
//! `r_i` bounded by the row's activity interval, so the starting basis is the
//! negated identity. Phase 1 minimizes the sum of bound violations of the
//! basic variables (a composite objective, no big-M); phase 2 then runs on
//! the true costs from the feasible basis reached.

use crate::lu::{ColRef, LuFactors};
use crate::problem::{LinearProgram, Sense};
use crate::solution::{Solution, Status};

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// Entries of the transformed column below this are not pivot candidates.
    pub pivot_tol: f64,
    /// Pivots between fresh factorizations of the basis.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots after which Bland's rule takes over.
    pub bland_threshold: usize,
    /// `None` picks a limit from the problem size.
    pub max_iterations: Option<usize>,
    /// Reach primal feasibility with the dual simplex (shifting costs where
    /// the start basis is not dual feasible) before primal iterations.
    pub dual_phase: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_interval: 50,
            bland_threshold: 200,
            max_iterations: None,
            dual_phase: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Free,
}

/// Basis snapshot over structural then logical columns.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Basis {
    pub status: Vec<VarStatus>,
}

/// Column-major copy of an LP in minimization form.
#[derive(Clone, Debug)]
pub(crate) struct StandardForm {
    pub n: usize,
    pub m: usize,
    col_start: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
    /// Structural costs, negated for maximization.
    pub cost: Vec<f64>,
    pub sign: f64,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    logical_idx: Vec<usize>,
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
}

const NEG_ONE: [f64; 1] = [-1.0];

impl StandardForm {
    pub fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut counts = vec![0usize; n + 1];
        for row in &lp.rows {
            for &(j, _) in &row.entries {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = col_start[n];
        let mut fill = counts;
        let mut col_idx = vec![0usize; nnz];
        let mut col_val = vec![0.0f64; nnz];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.entries {
                let slot = fill[j];
                col_idx[slot] = i;
                col_val[slot] = a;
                fill[j] += 1;
            }
        }
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let (row_lo, row_hi) = lp.rows.iter().map(|r| r.bounds()).unzip();
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_col = Vec::with_capacity(nnz);
        let mut row_val = Vec::with_capacity(nnz);
        row_start.push(0);
        for row in &lp.rows {
            for &(j, a) in &row.entries {
                row_col.push(j);
                row_val.push(a);
            }
            row_start.push(row_col.len());
        }
        StandardForm {
            n,
            m,
            col_start,
            col_idx,
            col_val,
            cost: lp.objective.iter().map(|c| sign * c).collect(),
            sign,
            row_lo,
            row_hi,
            logical_idx: (0..m).collect(),
            row_start,
            row_col,
            row_val,
        }
    }

    #[inline]
    pub fn column(&self, j: usize) -> ColRef<'_> {
        if j < self.n {
            let (a, b) = (self.col_start[j], self.col_start[j + 1]);
            ColRef {
                idx: &self.col_idx[a..b],
                val: &self.col_val[a..b],
            }
        } else {
            let i = j - self.n;
            ColRef {
                idx: &self.logical_idx[i..i + 1],
                val: &NEG_ONE,
            }
        }
    }
}

pub(crate) struct LpOutcome {
    pub status: Status,
    /// Structural values.
    pub x: Vec<f64>,
    /// Minimization-form objective without offset.
    pub objective: f64,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

struct Simplex<'a> {
    sf: &'a StandardForm,
    opts: &'a SimplexOptions,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basic: Vec<usize>,
    status: Vec<VarStatus>,
    lu: Option<LuFactors>,
    iterations: usize,
    degenerate_run: usize,
    // scratch
    y: Vec<f64>,
    d: Vec<f64>,
    alpha: Vec<f64>,
    rhs: Vec<f64>,
    cb: Vec<f64>,
    /// Temporary cost perturbation used by the dual phase.
    shift: Vec<f64>,
    rho: Vec<f64>,
    row_alpha: Vec<f64>,
    touched: Vec<usize>,
    seen: Vec<bool>,
    /// Devex reference weights of the basis positions for dual pricing.
    dual_w: Vec<f64>,
}

enum DualEnd {
    Feasible,
    Infeasible,
    GaveUp,
}

enum Step {
    Optimal,
    Infeasible,
    Unbounded,
    Continue,
}

impl<'a> Simplex<'a> {
    fn new(
        sf: &'a StandardForm,
        opts: &'a SimplexOptions,
        col_lo: &[f64],
        col_hi: &[f64],
        start: Option<&Basis>,
    ) -> Self {
        let (n, m) = (sf.n, sf.m);
        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        lo.extend_from_slice(col_lo);
        hi.extend_from_slice(col_hi);
        lo.extend_from_slice(&sf.row_lo);
        hi.extend_from_slice(&sf.row_hi);

        let usable = start.filter(|b| {
            b.status.len() == n + m
                && b.status.iter().filter(|s| **s == VarStatus::Basic).count() == m
        });
        let status: Vec<VarStatus> = match usable {
            Some(b) => b.status.clone(),
            None => (0..n + m)
                .map(|j| if j < n { VarStatus::AtLower } else { VarStatus::Basic })
                .collect(),
        };
        let basic: Vec<usize> = (0..n + m)
            .filter(|&j| status[j] == VarStatus::Basic)
            .collect();

        let mut s = Simplex {
            sf,
            opts,
            lo,
            hi,
            x: vec![0.0; n + m],
            basic,
            status,
            lu: None,
            iterations: 0,
            degenerate_run: 0,
            y: vec![0.0; m],
            d: vec![0.0; n + m],
            alpha: vec![0.0; m],
            rhs: vec![0.0; m],
            cb: vec![0.0; m],
            shift: Vec::new(),
            rho: vec![0.0; m],
            row_alpha: vec![0.0; n + m],
            touched: Vec::new(),
            seen: vec![false; n + m],
            dual_w: vec![1.0; m],
        };
        for j in 0..n + m {
            if s.status[j] != VarStatus::Basic {
                s.place_nonbasic(j, s.status[j]);
            }
        }
        s
    }

    /// Puts nonbasic `j` on a finite bound, preferring `hint`.
    fn place_nonbasic(&mut self, j: usize, hint: VarStatus) {
        let (l, u) = (self.lo[j], self.hi[j]);
        let st = match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if hint == VarStatus::AtUpper {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                }
            }
            (true, false) => VarStatus::AtLower,
            (false, true) => VarStatus::AtUpper,
            (false, false) => VarStatus::Free,
        };
        self.status[j] = st;
        self.x[j] = match st {
            VarStatus::AtLower => l,
            VarStatus::AtUpper => u,
            _ => 0.0,
        };
    }

    fn nearest_bound_status(&self, j: usize) -> VarStatus {
        let (l, u, v) = (self.lo[j], self.hi[j], self.x[j]);
        if l.is_finite() && u.is_finite() {
            if (v - l).abs() <= (u - v).abs() {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            }
        } else if l.is_finite() {
            VarStatus::AtLower
        } else if u.is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn refactor(&mut self) {
        let m = self.sf.m;
        let n = self.sf.n;
        loop {
            let cols: Vec<ColRef<'_>> = self.basic.iter().map(|&j| self.sf.column(j)).collect();
            match LuFactors::factorize(m, &cols) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    break;
                }
                Err(singular) => {
                    for &pos in &singular.positions {
                        let j = self.basic[pos];
                        let st = self.nearest_bound_status(j);
                        self.place_nonbasic(j, st);
                    }
                    for (&pos, &row) in singular.positions.iter().zip(&singular.rows) {
                        self.basic[pos] = n + row;
                        self.status[n + row] = VarStatus::Basic;
                    }
                }
            }
        }
        self.compute_basic_values();
    }

    fn compute_basic_values(&mut self) {
        let m = self.sf.m;
        self.rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.sf.n + m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            let col = self.sf.column(j);
            for (&i, &a) in col.idx.iter().zip(col.val) {
                self.rhs[i] -= a * xj;
            }
        }
        let mut xb = vec![0.0; m];
        let lu = self.lu.as_mut().expect("factorized");
        lu.ftran(&mut self.rhs, &mut xb);
        for (pos, &j) in self.basic.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    #[inline]
    fn tol_at(&self, bound: f64) -> f64 {
        self.opts.feasibility_tol * (1.0 + bound.abs())
    }

    /// Phase-1 cost of a basic variable: −1 below its bound, +1 above.
    fn infeasibility_cost(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lo[j] - self.tol_at(self.lo[j]) {
            -1.0
        } else if v > self.hi[j] + self.tol_at(self.hi[j]) {
            1.0
        } else {
            0.0
        }
    }

    #[inline]
    fn cost(&self, j: usize) -> f64 {
        let c = if j < self.sf.n { self.sf.cost[j] } else { 0.0 };
        match self.shift.get(j) {
            Some(s) => c + s,
            None => c,
        }
    }

    fn compute_duals(&mut self, phase_one: bool) {
        let n = self.sf.n;
        for pos in 0..self.sf.m {
            let j = self.basic[pos];
            self.cb[pos] = if phase_one {
                self.infeasibility_cost(j)
            } else {
                self.cost(j)
            };
        }
        let lu = self.lu.as_mut().expect("factorized");
        lu.btran(&mut self.cb, &mut self.y);
        for j in 0..n + self.sf.m {
            if self.status[j] == VarStatus::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let c = if phase_one { 0.0 } else { self.cost(j) };
            let col = self.sf.column(j);
            let mut s = c;
            for (&i, &a) in col.idx.iter().zip(col.val) {
                s -= self.y[i] * a;
            }
            self.d[j] = s;
        }
    }

    fn is_phase_one(&self) -> bool {
        self.basic
            .iter()
            .any(|&j| self.infeasibility_cost(j) != 0.0)
    }

    /// Entering column and direction (+1 increase, −1 decrease).
    fn price(&self, bland: bool, rejected: &[usize]) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.sf.n + self.sf.m {
            let dir = match self.status[j] {
                VarStatus::Basic => continue,
                VarStatus::AtLower => {
                    if self.d[j] < -tol && self.hi[j] > self.lo[j] {
                        1.0
                    } else {
                        continue;
                    }
                }
                VarStatus::AtUpper => {
                    if self.d[j] > tol && self.hi[j] > self.lo[j] {
                        -1.0
                    } else {
                        continue;
                    }
                }
                VarStatus::Free => {
                    if self.d[j] < -tol {
                        1.0
                    } else if self.d[j] > tol {
                        -1.0
                    } else {
                        continue;
                    }
                }
            };
            if rejected.contains(&j) {
                continue;
            }
            if bland {
                return Some((j, dir));
            }
            let score = self.d[j].abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn load_alpha(&mut self, q: usize) {
        self.rhs.iter_mut().for_each(|v| *v = 0.0);
        let col = self.sf.column(q);
        for (&i, &a) in col.idx.iter().zip(col.val) {
            self.rhs[i] = a;
        }
        let lu = self.lu.as_mut().expect("factorized");
        lu.ftran(&mut self.rhs, &mut self.alpha);
    }

    /// Ratio test. Returns `(position, step, leaves_at_lower)` or `None` if
    /// no basic variable blocks.
    fn ratio_test(&self, dir: f64, phase_one: bool, bland: bool) -> Option<(usize, f64, bool)> {
        let ptol = self.opts.pivot_tol;
        // Breakpoint of basic position k: (relaxed ratio, exact ratio, at_lower).
        let limit = |k: usize, relax: bool| -> Option<(f64, bool)> {
            let a = self.alpha[k];
            if a.abs() <= ptol {
                return None;
            }
            let j = self.basic[k];
            let delta = -dir * a;
            let (l, u, v) = (self.lo[j], self.hi[j], self.x[j]);
            let tl = if relax { self.tol_at(l) } else { 0.0 };
            let tu = if relax { self.tol_at(u) } else { 0.0 };
            if phase_one && v < l - self.tol_at(l) {
                return (delta > 0.0).then(|| ((l - v + tl) / delta, true));
            }
            if phase_one && v > u + self.tol_at(u) {
                return (delta < 0.0).then(|| ((v - u + tu) / -delta, false));
            }
            if delta < 0.0 && l.is_finite() {
                Some((((v - l + tl) / -delta).max(0.0), true))
            } else if delta > 0.0 && u.is_finite() {
                Some((((u - v + tu) / delta).max(0.0), false))
            } else {
                None
            }
        };

        if bland {
            let mut best: Option<(usize, f64, bool)> = None;
            for k in 0..self.sf.m {
                if let Some((t, at_lower)) = limit(k, false) {
                    let better = match best {
                        None => true,
                        Some((bk, bt, _)) => {
                            t < bt - 1e-12 || (t <= bt + 1e-12 && self.basic[k] < self.basic[bk])
                        }
                    };
                    if better {
                        best = Some((k, t, at_lower));
                    }
                }
            }
            return best;
        }

        let mut theta_max = f64::INFINITY;
        for k in 0..self.sf.m {
            if let Some((t, _)) = limit(k, true) {
                theta_max = theta_max.min(t);
            }
        }
        if !theta_max.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64, bool)> = None;
        let mut best_abs = 0.0;
        for k in 0..self.sf.m {
            if let Some((t, at_lower)) = limit(k, false) {
                let mag = self.alpha[k].abs();
                if t <= theta_max && mag > best_abs {
                    best_abs = mag;
                    best = Some((k, t.max(0.0), at_lower));
                }
            }
        }
        best
    }

    fn iterate(&mut self, rejected: &mut Vec<usize>) -> Step {
        let phase_one = self.is_phase_one();
        self.compute_duals(phase_one);
        let bland = self.degenerate_run >= self.opts.bland_threshold;
        let Some((q, dir)) = self.price(bland, rejected) else {
            return if phase_one { Step::Infeasible } else { Step::Optimal };
        };
        self.load_alpha(q);
        let flip = if self.lo[q].is_finite() && self.hi[q].is_finite() {
            self.hi[q] - self.lo[q]
        } else {
            f64::INFINITY
        };
        let block = self.ratio_test(dir, phase_one, bland);
        let step = match block {
            Some((_, t, _)) if t < flip => t,
            _ => flip,
        };
        if !step.is_finite() {
            if phase_one {
                rejected.push(q);
                return Step::Continue;
            }
            return Step::Unbounded;
        }
        rejected.clear();
        self.iterations += 1;
        if step > 0.0 {
            self.degenerate_run = 0;
        } else {
            self.degenerate_run += 1;
        }

        for k in 0..self.sf.m {
            let a = self.alpha[k];
            if a != 0.0 {
                self.x[self.basic[k]] -= step * dir * a;
            }
        }
        match block {
            Some((r, t, at_lower)) if t < flip => {
                self.x[q] += dir * step;
                let leaving = self.basic[r];
                if at_lower {
                    self.status[leaving] = VarStatus::AtLower;
                    self.x[leaving] = self.lo[leaving];
                } else {
                    self.status[leaving] = VarStatus::AtUpper;
                    self.x[leaving] = self.hi[leaving];
                }
                self.basic[r] = q;
                self.status[q] = VarStatus::Basic;
                let lu = self.lu.as_mut().expect("factorized");
                lu.update(r, &self.alpha);
                if lu.num_updates() >= self.opts.refactor_interval {
                    self.refactor();
                }
            }
            _ => {
                if dir > 0.0 {
                    self.status[q] = VarStatus::AtUpper;
                    self.x[q] = self.hi[q];
                } else {
                    self.status[q] = VarStatus::AtLower;
                    self.x[q] = self.lo[q];
                }
            }
        }
        Step::Continue
    }

    /// Makes every nonbasic reduced cost sign-correct: boxed columns move to
    /// the matching bound, others get their cost shifted.
    fn restore_dual_feasibility(&mut self) {
        let tol = self.opts.optimality_tol;
        let mut moved = false;
        for j in 0..self.sf.n + self.sf.m {
            let (l, u, d) = (self.lo[j], self.hi[j], self.d[j]);
            if l == u {
                continue;
            }
            let wrong = match self.status[j] {
                VarStatus::Basic => continue,
                VarStatus::AtLower => d < -tol,
                VarStatus::AtUpper => d > tol,
                VarStatus::Free => d.abs() > tol,
            };
            if !wrong {
                continue;
            }
            if l.is_finite() && u.is_finite() {
                self.place_nonbasic(j, if d < 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower });
                moved = true;
            } else {
                if self.shift.is_empty() {
                    self.shift = vec![0.0; self.sf.n + self.sf.m];
                }
                self.shift[j] -= d;
                self.d[j] = 0.0;
            }
        }
        if moved {
            self.compute_basic_values();
        }
    }

    fn refresh_dual(&mut self) {
        self.refactor();
        self.compute_duals(false);
        self.restore_dual_feasibility();
    }

    /// Basis position of the most infeasible basic variable and the bound
    /// it should leave at (`true` for lower).
    fn dual_leaving(&self) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        let mut worst = 0.0;
        for (k, &j) in self.basic.iter().enumerate() {
            let (l, u, v) = (self.lo[j], self.hi[j], self.x[j]);
            let (gap, at_lower) = if v < l - self.tol_at(l) {
                (l - v, true)
            } else if v > u + self.tol_at(u) {
                (v - u, false)
            } else {
                continue;
            };
            let score = gap * gap / self.dual_w[k];
            if score > worst {
                worst = score;
                best = Some((k, at_lower));
            }
        }
        best
    }

    /// Fills `row_alpha` with row `r` of `B⁻¹[A | −I]` on nonbasic columns.
    fn load_row_alpha(&mut self, r: usize) {
        for &j in &self.touched {
            self.row_alpha[j] = 0.0;
            self.seen[j] = false;
        }
        self.touched.clear();
        self.cb.iter_mut().for_each(|v| *v = 0.0);
        self.cb[r] = 1.0;
        let lu = self.lu.as_mut().expect("factorized");
        lu.btran(&mut self.cb, &mut self.rho);
        let n = self.sf.n;
        for i in 0..self.sf.m {
            let p = self.rho[i];
            if p.abs() <= 1e-13 {
                continue;
            }
            for e in self.sf.row_start[i]..self.sf.row_start[i + 1] {
                let j = self.sf.row_col[e];
                if self.status[j] == VarStatus::Basic {
                    continue;
                }
                if !self.seen[j] {
                    self.seen[j] = true;
                    self.touched.push(j);
                }
                self.row_alpha[j] += p * self.sf.row_val[e];
            }
            let j = n + i;
            if self.status[j] != VarStatus::Basic {
                self.row_alpha[j] = -p;
                self.seen[j] = true;
                self.touched.push(j);
            }
        }
    }

    /// Harris two-pass dual ratio test; `up` is true when the leaving
    /// variable must increase.
    fn dual_ratio(&self, up: bool) -> Option<usize> {
        let ptol = self.opts.pivot_tol.max(1e-9);
        let dtol = self.opts.optimality_tol;
        let eligible = |j: usize| -> Option<(f64, f64)> {
            let a = self.row_alpha[j];
            if a.abs() <= ptol || self.lo[j] == self.hi[j] {
                return None;
            }
            // x_r moves by −a per unit increase of x_j.
            let slack = match self.status[j] {
                VarStatus::AtLower if (a < 0.0) == up => self.d[j],
                VarStatus::AtUpper if (a > 0.0) == up => -self.d[j],
                VarStatus::Free => self.d[j].abs(),
                _ => return None,
            };
            Some((slack, a.abs()))
        };
        let mut bound = f64::INFINITY;
        for &j in &self.touched {
            if let Some((slack, a)) = eligible(j) {
                bound = bound.min((slack.max(0.0) + dtol) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<usize> = None;
        let mut best_a = 0.0;
        for &j in &self.touched {
            if let Some((slack, a)) = eligible(j) {
                if slack.max(0.0) / a <= bound && (a > best_a || (a == best_a && best.map_or(true, |b| j < b))) {
                    best_a = a;
                    best = Some(j);
                }
            }
        }
        best
    }

    fn dual_phase(&mut self, limit: usize) -> DualEnd {
        self.compute_duals(false);
        self.restore_dual_feasibility();
        let mut retries = 0;
        loop {
            if self.iterations >= limit {
                return DualEnd::GaveUp;
            }
            let Some((r, at_lower)) = self.dual_leaving() else {
                return DualEnd::Feasible;
            };
            self.load_row_alpha(r);
            let Some(q) = self.dual_ratio(at_lower) else {
                if self.lu.as_ref().map_or(false, |lu| lu.num_updates() > 0) && retries < 5 {
                    retries += 1;
                    self.refresh_dual();
                    continue;
                }
                return DualEnd::Infeasible;
            };
            self.load_alpha(q);
            let arq = self.row_alpha[q];
            if (self.alpha[r] - arq).abs() > 1e-7 * (1.0 + arq.abs()) {
                if retries >= 5 {
                    return DualEnd::GaveUp;
                }
                retries += 1;
                self.refresh_dual();
                continue;
            }
            retries = 0;
            self.iterations += 1;

            let leaving = self.basic[r];
            let target = if at_lower { self.lo[leaving] } else { self.hi[leaving] };
            let slack_q = match self.status[q] {
                VarStatus::AtUpper => -self.d[q],
                VarStatus::Free => self.d[q].abs(),
                _ => self.d[q],
            };
            let t = if at_lower { -1.0 } else { 1.0 } * slack_q.max(0.0) / arq.abs();
            for &j in &self.touched {
                if self.status[j] != VarStatus::Basic {
                    self.d[j] -= t * self.row_alpha[j];
                }
            }
            self.d[q] = 0.0;
            self.d[leaving] = -t;

            let delta = (target - self.x[leaving]) / -self.alpha[r];
            for k in 0..self.sf.m {
                let a = self.alpha[k];
                if a != 0.0 {
                    self.x[self.basic[k]] -= delta * a;
                }
            }
            let wr = self.dual_w[r];
            let ar = self.alpha[r];
            for k in 0..self.sf.m {
                let a = self.alpha[k];
                if a != 0.0 && k != r {
                    let ratio = a / ar;
                    self.dual_w[k] = self.dual_w[k].max(ratio * ratio * wr);
                }
            }
            self.dual_w[r] = (wr / (ar * ar)).max(1.0);
            self.x[q] += delta;
            self.x[leaving] = target;
            self.status[leaving] = if at_lower { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.basic[r] = q;
            self.status[q] = VarStatus::Basic;
            let lu = self.lu.as_mut().expect("factorized");
            lu.update(r, &self.alpha);
            if lu.num_updates() >= self.opts.refactor_interval {
                self.refresh_dual();
            }
        }
    }

    fn run(mut self) -> LpOutcome {
        let (n, m) = (self.sf.n, self.sf.m);
        let limit = self
            .opts
            .max_iterations
            .unwrap_or(50 * (n + m) + 10_000);
        self.refactor();
        let mut early = None;
        if self.opts.dual_phase {
            match self.dual_phase(limit) {
                DualEnd::Infeasible => early = Some(Status::Infeasible),
                DualEnd::Feasible | DualEnd::GaveUp => {}
            }
            if !self.shift.is_empty() {
                self.shift.clear();
            }
        }
        let mut rejected = Vec::new();
        let mut checks = 0;
        let status = loop {
            if let Some(st) = early {
                break st;
            }
            if self.iterations >= limit {
                break Status::IterationLimit;
            }
            match self.iterate(&mut rejected) {
                Step::Continue => {}
                Step::Unbounded => break Status::Unbounded,
                Step::Infeasible | Step::Optimal => {
                    // Confirm on a fresh factorization before trusting the verdict.
                    checks += 1;
                    let stale = self.lu.as_ref().map_or(true, |lu| lu.num_updates() > 0);
                    if stale && checks < 20 {
                        self.refactor();
                        continue;
                    }
                    let phase_one = self.is_phase_one();
                    if phase_one {
                        break Status::Infeasible;
                    }
                    self.compute_duals(false);
                    if self.price(false, &[]).is_some() && checks < 20 {
                        continue;
                    }
                    break Status::Optimal;
                }
            }
        };

        let x: Vec<f64> = self.x[..n].to_vec();
        let objective: f64 = self.sf.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        if status == Status::Optimal {
            self.compute_duals(false);
        }
        LpOutcome {
            status,
            x,
            objective,
            y: self.y.clone(),
            d: self.d[..n].to_vec(),
            basis: Some(Basis {
                status: self.status.clone(),
            }),
            iterations: self.iterations,
        }
    }
}

pub(crate) fn solve_standard(
    sf: &StandardForm,
    col_lo: &[f64],
    col_hi: &[f64],
    opts: &SimplexOptions,
    start: Option<&Basis>,
) -> LpOutcome {
    if sf.m == 0 {
        return solve_unconstrained(sf, col_lo, col_hi);
    }
    Simplex::new(sf, opts, col_lo, col_hi, start).run()
}

fn solve_unconstrained(sf: &StandardForm, lo: &[f64], hi: &[f64]) -> LpOutcome {
    let mut x = vec![0.0; sf.n];
    let mut status = Status::Optimal;
    for j in 0..sf.n {
        let c = sf.cost[j];
        let target = if c > 0.0 {
            lo[j]
        } else if c < 0.0 {
            hi[j]
        } else if lo[j].is_finite() {
            lo[j]
        } else if hi[j].is_finite() {
            hi[j]
        } else {
            0.0
        };
        if !target.is_finite() {
            status = Status::Unbounded;
            x[j] = 0.0;
        } else {
            x[j] = target;
        }
    }
    let objective = sf.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome {
        status,
        x,
        objective,
        y: Vec::new(),
        d: sf.cost.clone(),
        basis: None,
        iterations: 0,
    }
}

/// Solves `lp` with the revised simplex method.
pub fn solve_lp(lp: &LinearProgram, opts: &SimplexOptions) -> Solution {
    for j in 0..lp.num_vars() {
        if lp.lower[j] > lp.upper[j] {
            return Solution::empty(Status::Infeasible, lp.num_vars());
        }
    }
    let sf = StandardForm::new(lp);
    let out = solve_standard(&sf, &lp.lower, &lp.upper, opts, None);
    outcome_to_solution(lp, &sf, out)
}

pub(crate) fn outcome_to_solution(lp: &LinearProgram, sf: &StandardForm, out: LpOutcome) -> Solution {
    let n = lp.num_vars();
    let mut sol = Solution::empty(out.status, n);
    sol.iterations = out.iterations;
    if out.status != Status::Optimal {
        return sol;
    }
    sol.objective = lp.evaluate(&out.x);
    sol.best_bound = sol.objective;
    sol.gap = 0.0;
    sol.values = out.x;
    sol.row_duals = out.y.iter().map(|v| sf.sign * v).collect();
    sol.reduced_costs = out.d.iter().map(|v| sf.sign * v).collect();
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{RowSense, VarId};

    #[test]
    fn bounded_single_variable() {
        let mut lp = LinearProgram::default();
        lp.add_var("x", 0.0, 5.0, -1.0).unwrap();
        let sol = solve_lp(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.values[0], 5.0);
        assert_eq!(sol.objective, -5.0);
    }

    #[test]
    fn textbook_maximization() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY, 3.0).unwrap();
        let y = lp.add_var("y", 0.0, f64::INFINITY, 5.0).unwrap();
        lp.add_row("c1", RowSense::Le, 4.0, &[(x, 1.0)]).unwrap();
        lp.add_row("c2", RowSense::Le, 12.0, &[(y, 2.0)]).unwrap();
        lp.add_row("c3", RowSense::Le, 18.0, &[(x, 3.0), (y, 2.0)]).unwrap();
        let sol = solve_lp(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.values[0] - 2.0).abs() < 1e-9);
        assert!((sol.values[1] - 6.0).abs() < 1e-9);
        assert!((sol.objective - 36.0).abs() < 1e-9);
        // Known shadow prices: 0, 1.5, 1.
        assert!(sol.row_duals[0].abs() < 1e-9);
        assert!((sol.row_duals[1] - 1.5).abs() < 1e-9);
        assert!((sol.row_duals[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0).unwrap();
        lp.add_row("a", RowSense::Ge, 1.0, &[(x, 1.0)]).unwrap();
        lp.add_row("b", RowSense::Le, 0.0, &[(x, 1.0)]).unwrap();
        let sol = solve_lp(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, Status::Infeasible);
    }

    #[test]
    fn unbounded_ray_detected() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, f64::INFINITY, -1.0).unwrap();
        let y = lp.add_var("y", 0.0, f64::INFINITY, 0.0).unwrap();
        lp.add_row("a", RowSense::Ge, 1.0, &[(x, 1.0), (y, -1.0)]).unwrap();
        let sol = solve_lp(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, Status::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y  s.t. x − y = 1, x + y ≥ 3, x, y free  → x = 2, y = 1.
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0).unwrap();
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY, 1.0).unwrap();
        lp.add_row("e", RowSense::Eq, 1.0, &[(x, 1.0), (y, -1.0)]).unwrap();
        lp.add_row("g", RowSense::Ge, 3.0, &[(x, 1.0), (y, 1.0)]).unwrap();
        let sol = solve_lp(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.value(VarId(0)) - 2.0).abs() < 1e-9);
        assert!((sol.value(VarId(1)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_rows_uses_bounds() {
        let mut lp = LinearProgram::default();
        lp.add_var("a", -2.0, 3.0, 1.0).unwrap();
        lp.add_var("b", -2.0, 3.0, -1.0).unwrap();
        let sol = solve_lp(&lp, &SimplexOptions::default());
        assert_eq!(sol.values, vec![-2.0, 3.0]);
        assert_eq!(sol.objective, -5.0);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance.
        let mut lp = LinearProgram::default();
        let v: Vec<VarId> = [-0.75, 150.0, -0.02, 6.0]
            .iter()
            .enumerate()
            .map(|(k, &c)| lp.add_var(format!("x{k}"), 0.0, f64::INFINITY, c).unwrap())
            .collect();
        lp.add_row("a", RowSense::Le, 0.0, &[(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)])
            .unwrap();
        lp.add_row("b", RowSense::Le, 0.0, &[(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)])
            .unwrap();
        lp.add_row("c", RowSense::Le, 1.0, &[(v[2], 1.0)]).unwrap();
        let opts = SimplexOptions {
            bland_threshold: 0,
            ..Default::default()
        };
        let sol = solve_lp(&lp, &opts);
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective + 0.05).abs() < 1e-9);
    }
}
