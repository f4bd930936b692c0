//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! Columns are factorized left-looking (Gilbert–Peierls): each basis column is
//! solved against the partial `L`, then a pivot row is chosen among the rows
//! not yet pivoted. Pivot choice is a threshold rule that prefers short rows,
//! which keeps fill low on the near-triangular bases typical of LP problems.

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

/// A sparse column given as parallel index/value slices.
#[derive(Clone, Copy)]
pub(crate) struct ColRef<'a> {
    pub idx: &'a [usize],
    pub val: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    /// Basis positions that could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows left without a pivot, one per entry of `positions`.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
struct SparseCols {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl SparseCols {
    fn with_capacity(cols: usize, nnz: usize) -> Self {
        let mut start = Vec::with_capacity(cols + 1);
        start.push(0);
        SparseCols {
            start,
            idx: Vec::with_capacity(nnz),
            val: Vec::with_capacity(nnz),
        }
    }

    fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    fn seal(&mut self) {
        self.start.push(self.idx.len());
    }

    fn col(&self, p: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.start[p], self.start[p + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }
}

/// Transposes column-major `a` (column p, entries keyed by `key(index)`).
fn transpose(a: &SparseCols, m: usize, key: impl Fn(usize) -> usize) -> SparseCols {
    let mut count = vec![0usize; m + 1];
    for &i in &a.idx {
        count[key(i) + 1] += 1;
    }
    for k in 0..m {
        count[k + 1] += count[k];
    }
    let start = count.clone();
    let nnz = a.idx.len();
    let mut idx = vec![0usize; nnz];
    let mut val = vec![0.0f64; nnz];
    for p in 0..m {
        let (ai, av) = a.col(p);
        for (&i, &v) in ai.iter().zip(av) {
            let r = key(i);
            idx[count[r]] = p;
            val[count[r]] = v;
            count[r] += 1;
        }
    }
    SparseCols { start, idx, val }
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    /// Column p holds the sub-diagonal entries of L, keyed by original row.
    lower: SparseCols,
    /// Column p holds the above-diagonal entries of U, keyed by pivot index.
    upper: SparseCols,
    diag: Vec<f64>,
    /// Row-wise copies of `upper` and `lower` (keyed by pivot index) so that
    /// `btran` can skip zero entries.
    upper_t: SparseCols,
    lower_t: SparseCols,
    etas: Vec<Eta>,
    work: Vec<f64>,
}

impl LuFactors {
    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Factorizes the `m × m` matrix whose columns are `cols`.
    pub fn factorize(m: usize, cols: &[ColRef<'_>]) -> Result<LuFactors, Singular> {
        debug_assert_eq!(cols.len(), m);
        let nnz: usize = cols.iter().map(|c| c.idx.len()).sum();

        let mut row_count = vec![0usize; m];
        for c in cols {
            for &i in c.idx {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&k| (cols[k].idx.len(), k));

        let mut row_pivot = vec![usize::MAX; m];
        let mut pivot_row = Vec::with_capacity(m);
        let mut pivot_col = Vec::with_capacity(m);
        let mut lower = SparseCols::with_capacity(m, nnz);
        let mut upper = SparseCols::with_capacity(m, nnz);
        let mut diag = Vec::with_capacity(m);

        let mut x = vec![0.0f64; m];
        let mut mark = vec![usize::MAX; m];
        let mut topo: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut failed = Vec::new();

        for (step, &k) in order.iter().enumerate() {
            let col = cols[k];
            // Reach of the column's pattern through the current L graph.
            topo.clear();
            for &i0 in col.idx {
                if mark[i0] == step {
                    continue;
                }
                mark[i0] = step;
                stack.push((i0, 0));
                while let Some(&(i, mut child)) = stack.last() {
                    let p = row_pivot[i];
                    let mut next = None;
                    if p != usize::MAX {
                        let (li, _) = lower.col(p);
                        while child < li.len() {
                            let j = li[child];
                            child += 1;
                            if mark[j] != step {
                                next = Some(j);
                                break;
                            }
                        }
                    }
                    match next {
                        Some(j) => {
                            mark[j] = step;
                            if let Some(top) = stack.last_mut() {
                                top.1 = child;
                            }
                            stack.push((j, 0));
                        }
                        None => {
                            topo.push(i);
                            stack.pop();
                        }
                    }
                }
            }
            for (&i, &v) in col.idx.iter().zip(col.val) {
                x[i] = v;
            }
            for &i in topo.iter().rev() {
                let p = row_pivot[i];
                if p == usize::MAX {
                    continue;
                }
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                let (li, lv) = lower.col(p);
                for (&j, &l) in li.iter().zip(lv) {
                    x[j] -= l * xi;
                }
            }

            let mut best_abs = 0.0f64;
            for &i in &topo {
                if row_pivot[i] == usize::MAX {
                    best_abs = best_abs.max(x[i].abs());
                }
            }
            if best_abs <= SINGULAR_TOL {
                failed.push(k);
                for &i in &topo {
                    x[i] = 0.0;
                }
                continue;
            }
            let mut chosen = usize::MAX;
            for &i in &topo {
                if row_pivot[i] != usize::MAX || x[i].abs() < PIVOT_THRESHOLD * best_abs {
                    continue;
                }
                if chosen == usize::MAX
                    || row_count[i] < row_count[chosen]
                    || (row_count[i] == row_count[chosen] && i < chosen)
                {
                    chosen = i;
                }
            }
            let p = pivot_row.len();
            let pivot = x[chosen];
            for &i in &topo {
                let v = x[i];
                x[i] = 0.0;
                if i == chosen || v.abs() <= DROP_TOL {
                    continue;
                }
                let q = row_pivot[i];
                if q != usize::MAX {
                    upper.push(q, v);
                } else {
                    lower.push(i, v / pivot);
                }
            }
            lower.seal();
            upper.seal();
            diag.push(pivot);
            row_pivot[chosen] = p;
            pivot_row.push(chosen);
            pivot_col.push(k);
        }

        if !failed.is_empty() {
            let rows: Vec<usize> = (0..m).filter(|&i| row_pivot[i] == usize::MAX).collect();
            return Err(Singular {
                positions: failed,
                rows,
            });
        }

        let upper_t = transpose(&upper, m, |q| q);
        let lower_t = transpose(&lower, m, |j| row_pivot[j]);
        Ok(LuFactors {
            m,
            pivot_row,
            pivot_col,
            lower,
            upper,
            diag,
            upper_t,
            lower_t,
            etas: Vec::new(),
            work: vec![0.0; m],
        })
    }

    /// Solves `B z = rhs`. `rhs` is indexed by row and is consumed; the
    /// result is written into `out`, indexed by basis position.
    pub fn ftran(&mut self, rhs: &mut [f64], out: &mut [f64]) {
        let m = self.m;
        for p in 0..m {
            let v = rhs[self.pivot_row[p]];
            if v == 0.0 {
                continue;
            }
            let (li, lv) = self.lower.col(p);
            for (&j, &l) in li.iter().zip(lv) {
                rhs[j] -= l * v;
            }
        }
        let w = &mut self.work;
        for p in 0..m {
            w[p] = rhs[self.pivot_row[p]];
        }
        for p in (0..m).rev() {
            let v = w[p] / self.diag[p];
            w[p] = v;
            if v == 0.0 {
                continue;
            }
            let (ui, uv) = self.upper.col(p);
            for (&q, &u) in ui.iter().zip(uv) {
                w[q] -= u * v;
            }
        }
        for p in 0..m {
            out[self.pivot_col[p]] = w[p];
        }
        for eta in &self.etas {
            let zr = out[eta.pos] / eta.pivot;
            out[eta.pos] = zr;
            if zr == 0.0 {
                continue;
            }
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                out[i] -= a * zr;
            }
        }
    }

    /// Solves `Bᵀ y = c`. `c` is indexed by basis position and is consumed;
    /// `y` is indexed by row.
    pub fn btran(&mut self, c: &mut [f64], y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let m = self.m;
        let g = &mut self.work;
        for p in 0..m {
            g[p] = c[self.pivot_col[p]];
        }
        for p in 0..m {
            let v = g[p] / self.diag[p];
            g[p] = v;
            if v == 0.0 {
                continue;
            }
            let (ui, uv) = self.upper_t.col(p);
            for (&q, &u) in ui.iter().zip(uv) {
                g[q] -= u * v;
            }
        }
        for p in (0..m).rev() {
            let v = g[p];
            if v == 0.0 {
                continue;
            }
            let (li, lv) = self.lower_t.col(p);
            for (&q, &l) in li.iter().zip(lv) {
                g[q] -= l * v;
            }
        }
        for p in 0..m {
            y[self.pivot_row[p]] = g[p];
        }
    }

    /// Records that basis position `pos` is replaced by a column whose
    /// transformed representation `B⁻¹a` is `alpha`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            idx,
            val,
        });
    }
}
