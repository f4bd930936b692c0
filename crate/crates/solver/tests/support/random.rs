//! Random problem generators and the brute-force binary oracle, shared by
//! the solver oracle suite and the workspace acceptance checks.
#![allow(dead_code)]

use gridsmith_solver::{LinearProgram, MilpProblem, RowSense, Sense, VarId, VarKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random LP with a known feasible point inside finite column boxes.
pub fn random_feasible_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=10);
    let m = rng.gen_range(1..=10);
    let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut lp = LinearProgram::new(sense);
    let mut x0 = Vec::new();
    let mut vars = Vec::new();
    for j in 0..n {
        let lo = rng.gen_range(-5.0..0.0f64).round();
        let hi = lo + rng.gen_range(0.5..10.0);
        x0.push(rng.gen_range(lo..=hi));
        vars.push(lp.add_var(format!("x{j}"), lo, hi, rng.gen_range(-5.0..5.0)).unwrap());
    }
    for i in 0..m {
        let mut entries = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                entries.push((vars[j], rng.gen_range(-4.0..4.0)));
            }
        }
        let act: f64 = entries.iter().map(|&(v, a): &(VarId, f64)| a * x0[v.0]).sum();
        let (sense, rhs) = match rng.gen_range(0..3) {
            0 => (RowSense::Le, act + rng.gen_range(0.0..3.0)),
            1 => (RowSense::Ge, act - rng.gen_range(0.0..3.0)),
            _ => (RowSense::Eq, act),
        };
        lp.add_row(format!("r{i}"), sense, rhs, &entries).unwrap();
    }
    lp
}

/// Pure-binary program evaluated over all 2ⁿ assignments.
pub fn enumerate_binary(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        let ok = lp.rows.iter().all(|row| {
            let act = row.activity(&x);
            let (lo, hi) = row.bounds();
            act >= lo - 1e-9 && act <= hi + 1e-9
        });
        if !ok {
            continue;
        }
        let v = lp.evaluate(&x);
        best = Some(match (best, lp.sense) {
            (None, _) => v,
            (Some(b), Sense::Minimize) => b.min(v),
            (Some(b), Sense::Maximize) => b.max(v),
        });
    }
    best
}

pub fn random_binary_program(rng: &mut ChaCha8Rng) -> MilpProblem {
    let n = rng.gen_range(1..=10);
    let m = rng.gen_range(1..=6);
    let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut lp = LinearProgram::new(sense);
    let vars: Vec<VarId> = (0..n)
        .map(|j| {
            lp.add_var(format!("b{j}"), 0.0, 1.0, rng.gen_range(-10i32..10) as f64)
                .unwrap()
        })
        .collect();
    for i in 0..m {
        let entries: Vec<(VarId, f64)> = vars
            .iter()
            .map(|&v| (v, rng.gen_range(-6i32..=6) as f64))
            .filter(|e| e.1 != 0.0)
            .collect();
        let total: f64 = entries.iter().map(|e| e.1.abs()).sum();
        let rhs = (rng.gen_range(-0.2..0.6) * total).round();
        let sense = if rng.gen_bool(0.8) { RowSense::Le } else { RowSense::Ge };
        lp.add_row(format!("r{i}"), sense, rhs, &entries).unwrap();
    }
    MilpProblem::new(lp, vec![VarKind::Binary; n]).unwrap()
}
