//! Thermal rows: per-node heat and cooling balances, lossy heat links,
//! CHP heat recovery, chillers and storage state of charge.

use gridsmith_solver::{LinearProgram, ModelError as LpError, RowId, RowSense, VarId};

use crate::capacity::Capacity;
use crate::grid::{AssemblyError, ElectricVarMap};
use crate::model::{Catalog, ContinuousKind, ContinuousTech, NetworkModel, TechRef, TimeStructure};

/// Charge, discharge and state-of-charge columns of one storage unit.
#[derive(Clone, Debug, PartialEq)]
pub struct StorageVars {
    pub node: String,
    pub tech: String,
    pub charge: Vec<VarId>,
    pub discharge: Vec<VarId>,
    /// SOC at the start of each hour.
    pub soc: Vec<VarId>,
}

impl StorageVars {
    pub fn register(lp: &mut LinearProgram, node: &str, tech: &str, time: &TimeStructure) -> Result<Self, LpError> {
        let hours = time.num_hours();
        let inf = f64::INFINITY;
        let mut col = |prefix: &str| -> Result<Vec<VarId>, LpError> {
            (0..hours)
                .map(|h| lp.add_var(format!("{prefix}_{node}_{tech}_{h}"), 0.0, inf, 0.0))
                .collect()
        };
        Ok(StorageVars {
            charge: col("ch")?,
            discharge: col("dis")?,
            soc: col("soc")?,
            node: node.to_string(),
            tech: tech.to_string(),
        })
    }
}

/// Heat sources and sinks of one bus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeThermal {
    /// CHP technologies whose electric output (in the electric map) yields heat.
    pub chp: Vec<(String, f64)>,
    /// Boiler heat output per hour, with thermal efficiency.
    pub boiler: Vec<(String, f64, Vec<VarId>)>,
    /// Absorption-chiller heat input per hour, with COP.
    pub absorption: Vec<(String, f64, Vec<VarId>)>,
    /// Electric chillers (draw columns live in the electric map), with COP.
    pub electric_chillers: Vec<(String, f64)>,
    pub heat_storage: Option<StorageVars>,
    pub cold_storage: Option<StorageVars>,
    /// Recovered heat that is not used.
    pub dump: Option<Vec<VarId>>,
    pub has_heat_balance: bool,
    pub has_cooling_balance: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermalVarMap {
    pub hours: usize,
    pub nodes: Vec<NodeThermal>,
    /// Per cable: `[from→to, to→from]` heat sent per hour (kW_th), for heat-carrying links.
    pub heat_flow: Vec<Option<[Vec<VarId>; 2]>>,
}

fn hourly(lp: &mut LinearProgram, hours: usize, name: impl Fn(usize) -> String) -> Result<Vec<VarId>, LpError> {
    (0..hours).map(|h| lp.add_var(name(h), 0.0, f64::INFINITY, 0.0)).collect()
}

impl ThermalVarMap {
    pub fn register(
        lp: &mut LinearProgram,
        net: &NetworkModel,
        catalog: &Catalog,
        time: &TimeStructure,
        heat_loads: &[Vec<f64>],
        cooling_loads: &[Vec<f64>],
    ) -> Result<Self, AssemblyError> {
        let hours = time.num_hours();
        let mut heat_flow = Vec::with_capacity(net.cables.len());
        let mut linked = vec![false; net.buses.len()];
        for (k, c) in net.cables.iter().enumerate() {
            if !c.carries_heat {
                heat_flow.push(None);
                continue;
            }
            let loss = c.heat_loss_fraction();
            if !(0.0..1.0).contains(&loss) {
                return Err(AssemblyError::BadLoss {
                    from: c.from.clone(),
                    to: c.to.clone(),
                    loss,
                });
            }
            let (a, b) = net.cable_ends(c).ok_or(AssemblyError::Dangling(k))?;
            linked[a] = true;
            linked[b] = true;
            let fwd = hourly(lp, hours, |h| format!("heat_{}_{}_{h}", c.from, c.to))?;
            let rev = hourly(lp, hours, |h| format!("heat_{}_{}_{h}", c.to, c.from))?;
            heat_flow.push(Some([fwd, rev]));
        }

        let mut nodes = Vec::with_capacity(net.buses.len());
        for (n, bus) in net.buses.iter().enumerate() {
            let id = &bus.id;
            let mut node = NodeThermal::default();
            for tech in bus.techs() {
                match catalog.find(tech).ok_or_else(|| AssemblyError::UnknownTech(tech.to_string()))? {
                    TechRef::Discrete(d) => {
                        if d.heat_to_power_ratio > 0.0 {
                            node.chp.push((d.id.clone(), d.heat_to_power_ratio));
                        }
                    }
                    TechRef::Continuous(c) => match c.kind {
                        ContinuousKind::Boiler => {
                            let v = hourly(lp, hours, |h| format!("boil_{id}_{}_{h}", c.id))?;
                            node.boiler.push((c.id.clone(), c.efficiency, v));
                        }
                        ContinuousKind::AbsorptionChiller => {
                            let v = hourly(lp, hours, |h| format!("abs_{id}_{}_{h}", c.id))?;
                            node.absorption.push((c.id.clone(), c.cop, v));
                        }
                        ContinuousKind::ElectricChiller => node.electric_chillers.push((c.id.clone(), c.cop)),
                        ContinuousKind::HeatStorage | ContinuousKind::ColdStorage => {
                            let slot = if c.kind == ContinuousKind::HeatStorage {
                                &mut node.heat_storage
                            } else {
                                &mut node.cold_storage
                            };
                            if slot.is_some() {
                                return Err(AssemblyError::DuplicateKind {
                                    node: id.clone(),
                                    kind: format!("{:?}", c.kind),
                                });
                            }
                            *slot = Some(StorageVars::register(lp, id, &c.id, time)?);
                        }
                        _ => {}
                    },
                }
            }
            if !node.chp.is_empty() {
                node.dump = Some(hourly(lp, hours, |h| format!("dump_{id}_{h}"))?);
            }
            let heat_load = heat_loads.get(n).is_some_and(|l| l.iter().any(|&v| v > 0.0));
            node.has_heat_balance = heat_load
                || linked[n]
                || !node.chp.is_empty()
                || !node.boiler.is_empty()
                || !node.absorption.is_empty()
                || node.heat_storage.is_some();
            let cooling_load = cooling_loads.get(n).is_some_and(|l| l.iter().any(|&v| v > 0.0));
            let has_supply =
                !node.electric_chillers.is_empty() || !node.absorption.is_empty() || node.cold_storage.is_some();
            if cooling_load && node.electric_chillers.is_empty() && node.absorption.is_empty() {
                return Err(AssemblyError::MissingCop { node: id.clone() });
            }
            node.has_cooling_balance = cooling_load || has_supply;
            nodes.push(node);
        }
        Ok(ThermalVarMap { hours, nodes, heat_flow })
    }
}

/// heat_load + absorption draw + storage charge + Σ sent + dump
/// = HPR·CHP output + boiler + storage discharge + Σ received·(1 − loss).
pub fn emit_heat_balance(
    lp: &mut LinearProgram,
    net: &NetworkModel,
    elec: &ElectricVarMap,
    vars: &ThermalVarMap,
    heat_loads: &[Vec<f64>],
    hour: usize,
) -> Result<Vec<RowId>, AssemblyError> {
    let mut rows = Vec::new();
    for (n, bus) in net.buses.iter().enumerate() {
        let node = &vars.nodes[n];
        if !node.has_heat_balance {
            continue;
        }
        let load = heat_loads.get(n).map_or(Some(0.0), |l| l.get(hour).copied()).ok_or_else(|| {
            AssemblyError::MissingProfile {
                node: bus.id.clone(),
                hour,
                what: "heating",
            }
        })?;
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for (tech, hpr) in &node.chp {
            if let Some((_, g)) = elec.nodes[n].generation.iter().find(|(t, _)| t == tech) {
                terms.push((g[hour], *hpr));
            }
        }
        for (_, _, b) in &node.boiler {
            terms.push((b[hour], 1.0));
        }
        for (_, _, a) in &node.absorption {
            terms.push((a[hour], -1.0));
        }
        if let Some(s) = &node.heat_storage {
            terms.push((s.discharge[hour], 1.0));
            terms.push((s.charge[hour], -1.0));
        }
        if let Some(d) = &node.dump {
            terms.push((d[hour], -1.0));
        }
        for (k, c) in net.cables.iter().enumerate() {
            let Some([fwd, rev]) = &vars.heat_flow[k] else {
                continue;
            };
            let (a, b) = net.cable_ends(c).ok_or(AssemblyError::Dangling(k))?;
            let keep = 1.0 - c.heat_loss_fraction();
            if a == n {
                terms.push((fwd[hour], -1.0));
                terms.push((rev[hour], keep));
            } else if b == n {
                terms.push((rev[hour], -1.0));
                terms.push((fwd[hour], keep));
            }
        }
        rows.push(lp.add_row(format!("hbal_{}_{hour}", bus.id), RowSense::Eq, load, &terms)?);
    }
    Ok(rows)
}

/// cooling_load + cold charge = COP_e·electric draw + COP_a·absorption draw + cold discharge.
pub fn emit_cooling_balance(
    lp: &mut LinearProgram,
    net: &NetworkModel,
    elec: &ElectricVarMap,
    vars: &ThermalVarMap,
    cooling_loads: &[Vec<f64>],
    hour: usize,
) -> Result<Vec<RowId>, AssemblyError> {
    let mut rows = Vec::new();
    for (n, bus) in net.buses.iter().enumerate() {
        let node = &vars.nodes[n];
        if !node.has_cooling_balance {
            continue;
        }
        let load = cooling_loads.get(n).map_or(Some(0.0), |l| l.get(hour).copied()).ok_or_else(|| {
            AssemblyError::MissingProfile {
                node: bus.id.clone(),
                hour,
                what: "cooling",
            }
        })?;
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for (tech, cop) in &node.electric_chillers {
            if let Some((_, d)) = elec.nodes[n].chiller_draw.iter().find(|(t, _)| t == tech) {
                terms.push((d[hour], *cop));
            }
        }
        for (_, cop, a) in &node.absorption {
            terms.push((a[hour], *cop));
        }
        if let Some(s) = &node.cold_storage {
            terms.push((s.discharge[hour], 1.0));
            terms.push((s.charge[hour], -1.0));
        }
        rows.push(lp.add_row(format!("cbal_{}_{hour}", bus.id), RowSense::Eq, load, &terms)?);
    }
    Ok(rows)
}

/// SOC recursion, cyclic within each typical day, plus energy and power
/// limits against the installed capacity (energy units).
pub fn emit_storage_dynamics(
    lp: &mut LinearProgram,
    vars: &StorageVars,
    tech: &ContinuousTech,
    time: &TimeStructure,
    capacity: &Capacity,
) -> Result<Vec<RowId>, AssemblyError> {
    let hpd = time.hours_per_day;
    let keep = 1.0 - tech.decay_per_hour;
    let rate = 1.0 / tech.duration_hours;
    let tag = format!("{}_{}", vars.node, vars.tech);
    let mut rows = Vec::new();
    for h in 0..time.num_hours() {
        let next = time.day_of(h) * hpd + (time.hour_of_day(h) + 1) % hpd;
        let mut terms = vec![
            (vars.charge[h], -tech.charge_efficiency),
            (vars.discharge[h], 1.0 / tech.discharge_efficiency),
        ];
        if next == h {
            terms.push((vars.soc[h], 1.0 - keep));
        } else {
            terms.push((vars.soc[next], 1.0));
            terms.push((vars.soc[h], -keep));
        }
        rows.push(lp.add_row(format!("soc_{tag}_{h}"), RowSense::Eq, 0.0, &terms)?);
        rows.push(capacity.limit(lp, format!("socmax_{tag}_{h}"), &[(vars.soc[h], 1.0)], 1.0)?);
        rows.push(capacity.limit(lp, format!("chmax_{tag}_{h}"), &[(vars.charge[h], 1.0)], rate)?);
        rows.push(capacity.limit(lp, format!("dismax_{tag}_{h}"), &[(vars.discharge[h], 1.0)], rate)?);
    }
    Ok(rows)
}
