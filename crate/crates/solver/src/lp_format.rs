//! Human-readable LP-text export (`Minimize / Subject To / Bounds / End`).

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::problem::{MilpProblem, Sense, VarKind};

fn clean(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]()#".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s.insert(0, '_');
    }
    s
}

fn num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    let mut width = 0usize;
    for (a, name) in terms {
        let sign = if a < 0.0 { "-" } else { "+" };
        let mag = a.abs();
        let coef = if mag == 1.0 { String::new() } else { format!("{} ", num(mag)) };
        let piece = if first && a >= 0.0 {
            format!(" {coef}{name}")
        } else {
            format!(" {sign} {coef}{name}")
        };
        if width + piece.len() > 80 {
            out.push_str("\n  ");
            width = 0;
        }
        width += piece.len();
        out.push_str(&piece);
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// Renders `problem` in LP-text format.
pub fn to_lp_string(problem: &MilpProblem) -> String {
    let lp = &problem.lp;
    let names: Vec<String> = lp.names.iter().map(|s| clean(s)).collect();
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    let mut terms: Vec<(f64, String)> = lp
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, &c)| (c, names[j].clone()))
        .collect();
    if lp.objective_offset != 0.0 {
        terms.push((lp.objective_offset, "__offset".to_string()));
    }
    write_terms(&mut out, terms.into_iter());
    out.push_str("\nSubject To\n");
    for row in &lp.rows {
        let _ = write!(out, " {}:", clean(&row.name));
        write_terms(
            &mut out,
            row.entries.iter().map(|&(j, a)| (a, names[j].clone())),
        );
        let _ = writeln!(out, " {} {}", row.sense, num(row.rhs));
    }
    out.push_str("Bounds\n");
    if lp.objective_offset != 0.0 {
        out.push_str(" __offset = 1\n");
    }
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let name = &names[j];
        let line = match (lo.is_finite(), hi.is_finite()) {
            (false, false) => format!(" {name} free"),
            (true, false) if lo == 0.0 => continue,
            (true, false) => format!(" {name} >= {}", num(lo)),
            (false, true) => format!(" -inf <= {name} <= {}", num(hi)),
            (true, true) if lo == hi => format!(" {name} = {}", num(lo)),
            (true, true) => format!(" {} <= {name} <= {}", num(lo), num(hi)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    for (header, kind) in [("General", VarKind::Integer), ("Binary", VarKind::Binary)] {
        let list: Vec<&String> = (0..lp.num_vars())
            .filter(|&j| problem.kinds[j] == kind)
            .map(|j| &names[j])
            .collect();
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{header}");
        for chunk in list.chunks(8) {
            let joined: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(out, " {}", joined.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp<W: Write>(problem: &MilpProblem, mut w: W) -> io::Result<()> {
    w.write_all(to_lp_string(problem).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LinearProgram, RowSense};

    #[test]
    fn renders_sections() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, 4.0, 3.0).unwrap();
        let y = lp.add_var("flow[1 2]", f64::NEG_INFINITY, f64::INFINITY, -1.0).unwrap();
        let b = lp.add_var("b", 0.0, 1.0, 0.5).unwrap();
        lp.add_row("cap", RowSense::Le, 18.0, &[(x, 3.0), (y, -2.0), (b, 1.0)])
            .unwrap();
        let p = MilpProblem::new(lp, vec![VarKind::Continuous, VarKind::Continuous, VarKind::Binary])
            .unwrap();
        let text = to_lp_string(&p);
        let expected = "Maximize\n obj: 3 x - flow[1_2] + 0.5 b\nSubject To\n cap: 3 x - 2 flow[1_2] + b <= 18\nBounds\n 0 <= x <= 4\n flow[1_2] free\n 0 <= b <= 1\nBinary\n b\nEnd\n";
        assert_eq!(text, expected);
    }
}
