//! Electrical network rows: nodal power balance, linear voltage drop and
//! cable ampacity, for every hour slot of the typical-day year.

use gridsmith_solver::{LinearProgram, ModelError as LpError, RowId, RowSense, VarId};
use thiserror::Error;

use crate::model::{Catalog, ContinuousKind, NetworkModel, TechRef, TimeStructure};
use crate::thermal::StorageVars;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("node `{node}` hour {hour}: no {what} profile value")]
    MissingProfile { node: String, hour: usize, what: &'static str },
    #[error("cable {from}-{to}: heat loss fraction {loss} outside [0, 1)")]
    BadLoss { from: String, to: String, loss: f64 },
    #[error("node `{node}` has a cooling load but no chiller COP to serve it")]
    MissingCop { node: String },
    #[error("node `{node}` lists more than one `{kind}` technology")]
    DuplicateKind { node: String, kind: String },
    #[error("unknown technology `{0}`")]
    UnknownTech(String),
    #[error("cable {0} references a missing bus")]
    Dangling(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Electrical decision columns of one bus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeElectric {
    /// Per generating technology (CHP units and PV): output per hour (kW).
    pub generation: Vec<(String, Vec<VarId>)>,
    pub ess: Option<StorageVars>,
    pub curtailment: Vec<VarId>,
    /// Per electric chiller: electricity drawn per hour (kW).
    pub chiller_draw: Vec<(String, Vec<VarId>)>,
    /// Main-grid exchange, present only at the slack bus.
    pub import: Option<Vec<VarId>>,
    pub export: Option<Vec<VarId>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElectricVarMap {
    pub hours: usize,
    pub nodes: Vec<NodeElectric>,
    /// Directed flow per cable and hour (pu, positive from `from` to `to`).
    pub flow: Vec<Vec<VarId>>,
    /// Voltage magnitude per bus and hour (pu).
    pub voltage: Vec<Vec<VarId>>,
}

fn hourly(lp: &mut LinearProgram, hours: usize, lo: f64, hi: f64, name: impl Fn(usize) -> String) -> Result<Vec<VarId>, LpError> {
    (0..hours).map(|h| lp.add_var(name(h), lo, hi, 0.0)).collect()
}

impl ElectricVarMap {
    /// Registers every electrical operating column. Costs are attached later
    /// by the planner; capacity limits live with the investment columns.
    pub fn register(
        lp: &mut LinearProgram,
        net: &NetworkModel,
        catalog: &Catalog,
        time: &TimeStructure,
        loads: &[Vec<f64>],
    ) -> Result<Self, AssemblyError> {
        let hours = time.num_hours();
        let inf = f64::INFINITY;
        let mut nodes = Vec::with_capacity(net.buses.len());
        for (n, bus) in net.buses.iter().enumerate() {
            let id = &bus.id;
            let mut node = NodeElectric::default();
            for tech in bus.techs() {
                match catalog.find(tech).ok_or_else(|| AssemblyError::UnknownTech(tech.to_string()))? {
                    TechRef::Discrete(d) => {
                        let v = hourly(lp, hours, 0.0, inf, |h| format!("gen_{id}_{}_{h}", d.id))?;
                        node.generation.push((d.id.clone(), v));
                    }
                    TechRef::Continuous(c) => match c.kind {
                        ContinuousKind::Pv => {
                            let v = hourly(lp, hours, 0.0, inf, |h| format!("gen_{id}_{}_{h}", c.id))?;
                            node.generation.push((c.id.clone(), v));
                        }
                        ContinuousKind::Ess => {
                            if node.ess.is_some() {
                                return Err(AssemblyError::DuplicateKind {
                                    node: id.clone(),
                                    kind: "ess".into(),
                                });
                            }
                            node.ess = Some(StorageVars::register(lp, id, &c.id, time)?);
                        }
                        ContinuousKind::ElectricChiller => {
                            let v = hourly(lp, hours, 0.0, inf, |h| format!("chill_{id}_{}_{h}", c.id))?;
                            node.chiller_draw.push((c.id.clone(), v));
                        }
                        _ => {}
                    },
                }
            }
            let load = &loads[n];
            node.curtailment = (0..hours)
                .map(|h| lp.add_var(format!("curt_{id}_{h}"), 0.0, load.get(h).copied().unwrap_or(0.0).max(0.0), 0.0))
                .collect::<Result<_, _>>()?;
            if bus.is_slack() {
                node.import = Some(hourly(lp, hours, 0.0, inf, |h| format!("import_{h}"))?);
                node.export = Some(hourly(lp, hours, 0.0, inf, |h| format!("export_{h}"))?);
            }
            nodes.push(node);
        }
        let mut flow = Vec::with_capacity(net.cables.len());
        for (k, c) in net.cables.iter().enumerate() {
            net.cable_ends(c).ok_or(AssemblyError::Dangling(k))?;
            flow.push(hourly(lp, hours, -inf, inf, |h| format!("flow_{}_{}_{h}", c.from, c.to))?);
        }
        let voltage = net
            .buses
            .iter()
            .map(|b| hourly(lp, hours, -inf, inf, |h| format!("v_{}_{h}", b.id)))
            .collect::<Result<_, _>>()?;
        Ok(ElectricVarMap {
            hours,
            nodes,
            flow,
            voltage,
        })
    }
}

/// Nodal balance for one hour, in kW:
/// Σgen + import − export + discharge − charge − load + curtailment − chiller draw
/// = base_kva·(Σ outgoing flow − Σ incoming flow).
pub fn emit_power_balance(
    lp: &mut LinearProgram,
    net: &NetworkModel,
    vars: &ElectricVarMap,
    loads: &[Vec<f64>],
    hour: usize,
) -> Result<Vec<RowId>, AssemblyError> {
    let base = net.base_power_kva;
    let mut rows = Vec::with_capacity(net.buses.len());
    for (n, bus) in net.buses.iter().enumerate() {
        let node = &vars.nodes[n];
        let load = *loads
            .get(n)
            .and_then(|l| l.get(hour))
            .ok_or_else(|| AssemblyError::MissingProfile {
                node: bus.id.clone(),
                hour,
                what: "electrical",
            })?;
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for (_, g) in &node.generation {
            terms.push((g[hour], 1.0));
        }
        if let Some(v) = &node.import {
            terms.push((v[hour], 1.0));
        }
        if let Some(v) = &node.export {
            terms.push((v[hour], -1.0));
        }
        if let Some(s) = &node.ess {
            terms.push((s.discharge[hour], 1.0));
            terms.push((s.charge[hour], -1.0));
        }
        terms.push((node.curtailment[hour], 1.0));
        for (_, d) in &node.chiller_draw {
            terms.push((d[hour], -1.0));
        }
        for (k, c) in net.cables.iter().enumerate() {
            let (a, b) = net.cable_ends(c).ok_or(AssemblyError::Dangling(k))?;
            if a == n {
                terms.push((vars.flow[k][hour], -base));
            } else if b == n {
                terms.push((vars.flow[k][hour], base));
            }
        }
        rows.push(lp.add_row(format!("pbal_{}_{hour}", bus.id), RowSense::Eq, load, &terms)?);
    }
    Ok(rows)
}

/// Linear voltage drop along every cable, slack reference and band rows.
pub fn emit_voltage_rows(lp: &mut LinearProgram, net: &NetworkModel, vars: &ElectricVarMap) -> Result<Vec<RowId>, AssemblyError> {
    let [vmin, vmax] = net.voltage_band;
    let mut rows = Vec::new();
    for h in 0..vars.hours {
        for (k, c) in net.cables.iter().enumerate() {
            let (a, b) = net.cable_ends(c).ok_or(AssemblyError::Dangling(k))?;
            rows.push(lp.add_row(
                format!("vdrop_{}_{}_{h}", c.from, c.to),
                RowSense::Eq,
                0.0,
                &[(vars.voltage[b][h], 1.0), (vars.voltage[a][h], -1.0), (vars.flow[k][h], c.resistance_pu())],
            )?);
        }
        for (n, bus) in net.buses.iter().enumerate() {
            let v = vars.voltage[n][h];
            if bus.is_slack() {
                rows.push(lp.add_row(format!("vref_{h}"), RowSense::Eq, 1.0, &[(v, 1.0)])?);
            }
            rows.push(lp.add_row(format!("vmin_{}_{h}", bus.id), RowSense::Ge, vmin, &[(v, 1.0)])?);
            rows.push(lp.add_row(format!("vmax_{}_{h}", bus.id), RowSense::Le, vmax, &[(v, 1.0)])?);
        }
    }
    Ok(rows)
}

/// |flow| ≤ ampacity as two rows per cable-hour.
pub fn emit_ampacity_rows(lp: &mut LinearProgram, net: &NetworkModel, vars: &ElectricVarMap) -> Result<Vec<RowId>, AssemblyError> {
    let mut rows = Vec::new();
    for (k, c) in net.cables.iter().enumerate() {
        for h in 0..vars.hours {
            let f = vars.flow[k][h];
            rows.push(lp.add_row(format!("ampf_{}_{}_{h}", c.from, c.to), RowSense::Le, c.ampacity_pu, &[(f, 1.0)])?);
            rows.push(lp.add_row(format!("ampr_{}_{}_{h}", c.from, c.to), RowSense::Ge, -c.ampacity_pu, &[(f, 1.0)])?);
        }
    }
    Ok(rows)
}

/// Voltage change along a cable for a given pu flow.
pub fn voltage_drop(cable: &crate::model::Cable, flow_pu: f64) -> f64 {
    cable.resistance_pu() * flow_pu
}
