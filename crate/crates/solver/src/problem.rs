//! Problem containers: a sparse linear program and its mixed-integer extension.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Column handle returned by [`LinearProgram::add_var`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Row handle returned by [`LinearProgram::add_row`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable `{name}` has lower bound {lo} above upper bound {hi}")]
    InvertedBounds { name: String, lo: f64, hi: f64 },
    #[error("variable `{name}` has a NaN bound or cost")]
    NanVariable { name: String },
    #[error("row `{row}` has non-finite right-hand side {rhs}")]
    NonFiniteRhs { row: String, rhs: f64 },
    #[error("row `{row}` has a non-finite coefficient on `{var}`")]
    NonFiniteCoeff { row: String, var: String },
    #[error("row `{row}` references variable #{index}, but only {count} variables exist")]
    UnknownVar { row: String, index: usize, count: usize },
    #[error("row `{row}` lists variable `{var}` more than once")]
    DuplicateEntry { row: String, var: String },
    #[error("binary variable `{name}` has bounds [{lo}, {hi}] outside [0, 1]")]
    BinaryBounds { name: String, lo: f64, hi: f64 },
    #[error("triplet references row #{index}, but only {count} rows exist")]
    UnknownRow { index: usize, count: usize },
    #[error("kind vector has {got} entries for {expected} variables")]
    KindLength { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub sense: RowSense,
    pub rhs: f64,
    /// Sorted by column, no duplicates.
    pub entries: Vec<(usize, f64)>,
}

impl Row {
    /// Activity interval `[lo, hi]` implied by sense and rhs.
    pub fn bounds(&self) -> (f64, f64) {
        match self.sense {
            RowSense::Le => (f64::NEG_INFINITY, self.rhs),
            RowSense::Eq => (self.rhs, self.rhs),
            RowSense::Ge => (self.rhs, f64::INFINITY),
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// A linear program `min/max c·x + offset` subject to sparse rows and column bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub names: Vec<String>,
    pub rows: Vec<Row>,
}

impl Default for LinearProgram {
    fn default() -> Self {
        Self::new(Sense::Minimize)
    }
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            objective_offset: 0.0,
            lower: Vec::new(),
            upper: Vec::new(),
            names: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.entries.len()).sum()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        cost: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if lo.is_nan() || hi.is_nan() || !cost.is_finite() {
            return Err(ModelError::NanVariable { name });
        }
        if lo > hi {
            return Err(ModelError::InvertedBounds { name, lo, hi });
        }
        self.objective.push(cost);
        self.lower.push(lo);
        self.upper.push(hi);
        self.names.push(name);
        Ok(VarId(self.objective.len() - 1))
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        sense: RowSense,
        rhs: f64,
        entries: &[(VarId, f64)],
    ) -> Result<RowId, ModelError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(ModelError::NonFiniteRhs { row: name, rhs });
        }
        let mut seen = HashSet::with_capacity(entries.len());
        let mut sorted = Vec::with_capacity(entries.len());
        for &(VarId(j), a) in entries {
            if j >= self.num_vars() {
                return Err(ModelError::UnknownVar {
                    row: name,
                    index: j,
                    count: self.num_vars(),
                });
            }
            if !a.is_finite() {
                return Err(ModelError::NonFiniteCoeff {
                    row: name,
                    var: self.names[j].clone(),
                });
            }
            if !seen.insert(j) {
                return Err(ModelError::DuplicateEntry {
                    row: name,
                    var: self.names[j].clone(),
                });
            }
            if a != 0.0 {
                sorted.push((j, a));
            }
        }
        sorted.sort_by_key(|e| e.0);
        self.rows.push(Row {
            name,
            sense,
            rhs,
            entries: sorted,
        });
        Ok(RowId(self.rows.len() - 1))
    }

    /// Builds a program from coordinate triplets `(row, col, coeff)`.
    pub fn from_triplets(
        sense: Sense,
        objective: Vec<f64>,
        bounds: Vec<(f64, f64)>,
        rows: Vec<(RowSense, f64)>,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, ModelError> {
        let mut lp = LinearProgram::new(sense);
        for (j, (&c, &(lo, hi))) in objective.iter().zip(&bounds).enumerate() {
            lp.add_var(format!("x{j}"), lo, hi, c)?;
        }
        let mut per_row: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); rows.len()];
        for &(i, j, a) in triplets {
            if i >= rows.len() {
                return Err(ModelError::UnknownRow {
                    index: i,
                    count: rows.len(),
                });
            }
            per_row[i].push((VarId(j), a));
        }
        for (i, ((sense, rhs), entries)) in rows.into_iter().zip(per_row).enumerate() {
            lp.add_row(format!("r{i}"), sense, rhs, &entries)?;
        }
        Ok(lp)
    }

    /// Objective in the program's own sense, including the constant offset.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Largest violation of rows and bounds, each scaled by `1 + |rhs|`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            let lo = self.lower[j];
            let hi = self.upper[j];
            worst = worst.max((lo - v) / (1.0 + lo.abs().min(1e300)));
            worst = worst.max((v - hi) / (1.0 + hi.abs().min(1e300)));
        }
        for row in &self.rows {
            let act = row.activity(x);
            let (lo, hi) = row.bounds();
            let scale = 1.0 + row.rhs.abs();
            worst = worst.max((lo - act) / scale).max((act - hi) / scale);
        }
        worst
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(VarId)
    }
}

/// A linear program whose columns carry integrality requirements.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub kinds: Vec<VarKind>,
}

impl MilpProblem {
    pub fn new(lp: LinearProgram, kinds: Vec<VarKind>) -> Result<Self, ModelError> {
        if kinds.len() != lp.num_vars() {
            return Err(ModelError::KindLength {
                expected: lp.num_vars(),
                got: kinds.len(),
            });
        }
        for (j, kind) in kinds.iter().enumerate() {
            if *kind == VarKind::Binary && (lp.lower[j] < 0.0 || lp.upper[j] > 1.0) {
                return Err(ModelError::BinaryBounds {
                    name: lp.names[j].clone(),
                    lo: lp.lower[j],
                    hi: lp.upper[j],
                });
            }
        }
        Ok(MilpProblem { lp, kinds })
    }

    /// Wraps a pure LP with every column continuous.
    pub fn continuous(lp: LinearProgram) -> Self {
        let kinds = vec![VarKind::Continuous; lp.num_vars()];
        MilpProblem { lp, kinds }
    }

    pub fn is_integral(&self, j: usize) -> bool {
        self.kinds[j] != VarKind::Continuous
    }

    pub fn num_integer(&self) -> usize {
        self.kinds.iter().filter(|k| **k != VarKind::Continuous).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_entries_rejected() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, 1.0, 1.0).unwrap();
        let err = lp
            .add_row("r", RowSense::Le, 1.0, &[(x, 1.0), (x, 2.0)])
            .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateEntry { .. }));
    }

    #[test]
    fn inverted_bounds_and_bad_rhs_rejected() {
        let mut lp = LinearProgram::default();
        assert!(lp.add_var("x", 2.0, 1.0, 0.0).is_err());
        let x = lp.add_var("x", 0.0, 1.0, 0.0).unwrap();
        assert!(lp
            .add_row("r", RowSense::Le, f64::INFINITY, &[(x, 1.0)])
            .is_err());
        assert!(lp.add_row("r", RowSense::Le, 1.0, &[(VarId(7), 1.0)]).is_err());
    }

    #[test]
    fn binary_bounds_checked() {
        let mut lp = LinearProgram::default();
        lp.add_var("b", 0.0, 2.0, 0.0).unwrap();
        assert!(MilpProblem::new(lp, vec![VarKind::Binary]).is_err());
    }

    #[test]
    fn triplet_construction() {
        let lp = LinearProgram::from_triplets(
            Sense::Maximize,
            vec![3.0, 5.0],
            vec![(0.0, f64::INFINITY); 2],
            vec![(RowSense::Le, 4.0), (RowSense::Le, 12.0), (RowSense::Le, 18.0)],
            &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, 3.0), (2, 1, 2.0)],
        )
        .unwrap();
        assert_eq!(lp.num_rows(), 3);
        assert_eq!(lp.num_nonzeros(), 4);
        assert_eq!(lp.evaluate(&[2.0, 6.0]), 36.0);
        assert!(lp.max_violation(&[2.0, 6.0]) <= 0.0);
    }
}
