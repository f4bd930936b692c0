//! CSV tables and SVG dispatch charts for planning results.
//!
//! Column layouts are fixed:
//! - `costs.csv`: `scenario,investment,operation,total,c_invd,c_invc,c_pur,c_dem,c_gen,c_exp,curtailment`
//! - `portfolio.csv`: `node,scenario,<tech>...` with one column per technology
//!   that is a candidate somewhere, in catalog order, plus `aggregate` rows
//! - `comparison.csv`: `component,first,second,difference,reduction_pct`
//! - `dispatch.csv`: `node,hour,variable,value`

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{ContinuousKind, Site, TechRef, TimeStructure};
use crate::planner::{Comparison, CostBreakdown, Dispatch, Portfolio};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub const COSTS_HEADER: [&str; 11] = [
    "scenario",
    "investment",
    "operation",
    "total",
    "c_invd",
    "c_invc",
    "c_pur",
    "c_dem",
    "c_gen",
    "c_exp",
    "curtailment",
];
pub const COMPARISON_HEADER: [&str; 5] = ["component", "first", "second", "difference", "reduction_pct"];
pub const DISPATCH_HEADER: [&str; 4] = ["node", "hour", "variable", "value"];

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, ReportError> {
    csv::Writer::from_path(path).map_err(|source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn finish(path: &Path, mut w: csv::Writer<fs::File>) -> Result<(), ReportError> {
    w.flush().map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn num(v: f64) -> String {
    // Keeps files stable across runs by hiding float noise around zero.
    let v = if v.abs() < 1e-9 { 0.0 } else { v };
    format!("{v:.6}")
}

pub fn write_costs_csv(path: &Path, rows: &[(&str, &CostBreakdown)]) -> Result<(), ReportError> {
    let mut w = csv_writer(path)?;
    let err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(COSTS_HEADER).map_err(err)?;
    for (label, c) in rows {
        let vals = [
            c.investment(),
            c.operation(),
            c.total,
            c.c_invd,
            c.c_invc,
            c.c_pur,
            c.c_dem,
            c.c_gen,
            c.c_exp,
            c.curtailment,
        ];
        let mut rec = vec![label.to_string()];
        rec.extend(vals.iter().map(|v| num(*v)));
        w.write_record(&rec).map_err(err)?;
    }
    finish(path, w)
}

/// Reads a file written by [`write_costs_csv`].
pub fn read_costs_csv(path: &Path) -> Result<Vec<(String, CostBreakdown)>, ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(COSTS_HEADER.iter().copied()) {
        return Err(ReportError::Format {
            path: path.to_path_buf(),
            message: format!("expected header `{}`", COSTS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let mut v = [0.0; 10];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = rec[k + 1].trim().parse().map_err(|_| ReportError::Format {
                path: path.to_path_buf(),
                message: format!("column `{}` is not a number: `{}`", COSTS_HEADER[k + 1], &rec[k + 1]),
            })?;
        }
        out.push((
            rec[0].to_string(),
            CostBreakdown {
                c_invd: v[3],
                c_invc: v[4],
                c_pur: v[5],
                c_dem: v[6],
                c_gen: v[7],
                c_exp: v[8],
                curtailment: v[9],
                total: v[2],
            },
        ));
    }
    Ok(out)
}

/// Technologies that can be built somewhere in `site`, in catalog order.
pub fn investable_techs(site: &Site) -> Vec<String> {
    let candidate = |id: &str| site.network.buses.iter().any(|b| b.candidate_techs.iter().any(|t| t == id));
    site.catalog.ids().into_iter().filter(|id| candidate(id)).map(str::to_string).collect()
}

/// One row per (bus, scenario) with new capacity per technology, then one
/// aggregate row per scenario.
pub fn write_portfolio_csv(path: &Path, site: &Site, rows: &[(&str, &Portfolio)]) -> Result<(), ReportError> {
    let techs = investable_techs(site);
    let mut w = csv_writer(path)?;
    let err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut header = vec!["node".to_string(), "scenario".to_string()];
    header.extend(techs.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for bus in site.network.buses.iter().filter(|b| !b.candidate_techs.is_empty()) {
        for (label, p) in rows {
            let mut rec = vec![bus.id.clone(), label.to_string()];
            rec.extend(techs.iter().map(|t| num(p.new_capacity(&bus.id, t))));
            w.write_record(&rec).map_err(err)?;
        }
    }
    for (label, p) in rows {
        let mut rec = vec!["aggregate".to_string(), label.to_string()];
        rec.extend(techs.iter().map(|t| num(p.aggregate(t))));
        w.write_record(&rec).map_err(err)?;
    }
    finish(path, w)
}

pub fn write_comparison_csv(path: &Path, cmp: &Comparison) -> Result<(), ReportError> {
    let mut w = csv_writer(path)?;
    let err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(COMPARISON_HEADER).map_err(err)?;
    for (label, a, b, d) in cmp.rows() {
        let pct = match label {
            "investment" => num(cmp.investment_reduction_pct),
            "operation" => num(cmp.operation_reduction_pct),
            "total" => num(cmp.total_reduction_pct),
            _ => String::new(),
        };
        w.write_record([label.to_string(), num(a), num(b), num(d), pct]).map_err(err)?;
    }
    finish(path, w)
}

pub fn write_dispatch_csv(path: &Path, dispatch: &Dispatch) -> Result<(), ReportError> {
    let mut w = csv_writer(path)?;
    let err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(DISPATCH_HEADER).map_err(err)?;
    for s in &dispatch.series {
        for (h, v) in s.values.iter().enumerate() {
            w.write_record([s.node.clone(), h.to_string(), s.variable.clone(), num(*v)]).map_err(err)?;
        }
    }
    finish(path, w)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The typical day shown in dispatch charts: the July day if there is one,
/// else the first.
pub fn showcase_day(time: &TimeStructure) -> usize {
    time.typical_days.iter().position(|d| d.month == 7).unwrap_or(0)
}

const PALETTE: [&str; 8] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];

/// Stacked hourly electricity supply at `node` over typical day `day`, with
/// the node's total demand (load, chillers, storage charging) as a line.
/// Network exchange is the balance remainder: inflow stacks with local
/// supply, outflow is drawn below the axis.
pub fn dispatch_svg(dispatch: &Dispatch, node: &str, site: &Site, day: usize) -> String {
    let time = &site.time;
    let hpd = time.hours_per_day;
    let electric_storage = |var: &str, prefix: &str| {
        var.strip_prefix(prefix).map_or(false, |tech| {
            matches!(site.catalog.find(tech), Some(TechRef::Continuous(t)) if t.kind == ContinuousKind::Ess)
        })
    };
    let hours: Vec<usize> = (day * hpd..(day + 1) * hpd).collect();
    let node_series: Vec<_> = dispatch.series.iter().filter(|s| s.node == node).collect();
    let at = |s: &[f64], h: usize| s.get(h).copied().unwrap_or(0.0);

    let mut supply: Vec<(String, Vec<f64>)> = Vec::new();
    let mut demand = vec![0.0; hpd];
    for s in &node_series {
        let v = &s.variable;
        let vals: Vec<f64> = hours.iter().map(|&h| at(&s.values, h)).collect();
        if v == "import" || v.starts_with("gen:") || electric_storage(v, "discharge:") || v == "curtail" {
            if vals.iter().any(|x| x.abs() > 1e-9) {
                supply.push((v.clone(), vals));
            }
        } else if v == "load" || v == "export" || v.starts_with("chiller:") || electric_storage(v, "charge:") {
            for (d, x) in demand.iter_mut().zip(&vals) {
                *d += x;
            }
        }
    }
    let local: Vec<f64> = (0..hpd).map(|k| supply.iter().map(|(_, v)| v[k]).sum()).collect();
    let net: Vec<f64> = (0..hpd).map(|k| demand[k] - local[k]).collect();
    if net.iter().any(|x| *x > 1e-6) {
        supply.push(("network in".into(), net.iter().map(|x| x.max(0.0)).collect()));
    }
    let outflow: Vec<f64> = net.iter().map(|x| (-x).max(0.0)).collect();

    let top = (0..hpd)
        .map(|k| supply.iter().map(|(_, v)| v[k]).sum::<f64>().max(demand[k]))
        .fold(1e-9, f64::max);
    let bottom = outflow.iter().copied().fold(0.0, f64::max);
    let (w, h) = (760.0, 380.0);
    let (left, right, upper, lower) = (60.0, 170.0, 40.0, 40.0);
    let plot_w = w - left - right;
    let plot_h = h - upper - lower;
    let span = top + bottom;
    let y = |v: f64| upper + (top - v) / span * plot_h;
    let bar = plot_w / hpd as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let label = &time.typical_days[day].label;
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="22" font-size="14">Electricity supply at {node}, typical day {label} (kW)</text>"#
    );
    for (i, (name, vals)) in supply.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<g fill="{color}"><title>{name}</title>"#);
        for k in 0..hpd {
            let base: f64 = supply[..i].iter().map(|(_, v)| v[k]).sum();
            let v = vals[k].max(0.0);
            if v <= 0.0 {
                continue;
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                left + k as f64 * bar + 1.0,
                y(base + v),
                bar - 2.0,
                y(base) - y(base + v)
            );
        }
        let _ = writeln!(svg, "</g>");
        let ly = upper + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{name}</text>"#,
            w - right + 14.0,
            ly,
            w - right + 28.0,
            ly + 9.0
        );
    }
    if bottom > 0.0 {
        let _ = writeln!(svg, r##"<g fill="#bbbbbb"><title>network out</title>"##);
        for (k, v) in outflow.iter().enumerate() {
            if *v > 0.0 {
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                    left + k as f64 * bar + 1.0,
                    y(0.0),
                    bar - 2.0,
                    y(-v) - y(0.0)
                );
            }
        }
        let _ = writeln!(svg, "</g>");
        let ly = upper + 16.0 * supply.len() as f64;
        let _ = writeln!(
            svg,
            r##"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="#bbbbbb"/><text x="{:.1}" y="{:.1}">network out</text>"##,
            w - right + 14.0,
            ly,
            w - right + 28.0,
            ly + 9.0
        );
    }
    let points: Vec<String> = demand
        .iter()
        .enumerate()
        .map(|(k, d)| format!("{:.2},{:.2}", left + (k as f64 + 0.5) * bar, y(*d)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="black" stroke-width="2" points="{}"><title>demand</title></polyline>"#,
        points.join(" ")
    );
    let ly = upper + 16.0 * (supply.len() + usize::from(bottom > 0.0)) as f64;
    let _ = writeln!(
        svg,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/><text x="{:.1}" y="{:.1}">demand</text>"#,
        w - right + 14.0,
        ly + 5.0,
        w - right + 24.0,
        ly + 5.0,
        w - right + 28.0,
        ly + 9.0
    );
    // Axes with five ticks on the value axis and every third hour labelled.
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        y(0.0),
        left + plot_w,
        y(0.0)
    );
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{upper}" x2="{left}" y2="{:.2}" stroke="black"/>"#, upper + plot_h);
    for t in 0..=4 {
        let v = -bottom + span * t as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.0}</text>"#,
            left - 6.0,
            y(v) + 4.0,
            v
        );
    }
    for k in (0..hpd).step_by(3) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{k}</text>"#,
            left + (k as f64 + 0.5) * bar,
            h - lower + 16.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
