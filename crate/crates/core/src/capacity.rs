//! Installed capacity as "existing + newly built" and the rows that cap
//! operating columns by it.

use gridsmith_solver::{LinearProgram, ModelError, RowId, RowSense, VarId};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Capacity {
    /// Newly built capacity column, if the tech is a candidate here.
    pub var: Option<VarId>,
    /// Capacity already in place.
    pub installed: f64,
}

impl Capacity {
    pub fn fixed(installed: f64) -> Self {
        Capacity { var: None, installed }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.installed + self.var.map_or(0.0, |v| x[v.0])
    }

    /// Row `Σ a·x ≤ factor·capacity`.
    pub fn limit(
        &self,
        lp: &mut LinearProgram,
        name: String,
        terms: &[(VarId, f64)],
        factor: f64,
    ) -> Result<RowId, ModelError> {
        let mut all = terms.to_vec();
        if let Some(v) = self.var {
            all.push((v, -factor));
        }
        lp.add_row(name, RowSense::Le, factor * self.installed, &all)
    }
}
