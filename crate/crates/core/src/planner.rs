//! Supply-side layer: builds the investment-and-dispatch MILP for a site,
//! solves it and turns the solution into portfolio, dispatch and costs.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use gridsmith_solver::{
    solve_milp, LinearProgram, MilpOptions, MilpProblem, ModelError as LpError, RowSense, Sense, Solution, Status,
    VarId, VarKind,
};
use thiserror::Error;

use crate::capacity::Capacity;
use crate::grid::{self, AssemblyError, ElectricVarMap};
use crate::model::{ContinuousKind, Site, TechRef, ValidationReport};
use crate::thermal::{self, StorageVars, ThermalVarMap};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid model:\n{0}")]
    Validation(ValidationReport),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("plan is infeasible: {0}")]
    Infeasible(String),
    #[error("solver stopped without a solution ({0})")]
    SolverLimit(&'static str),
    #[error("scenarios are not comparable: {0}")]
    Mismatch(String),
}

impl From<LpError> for PlanError {
    fn from(e: LpError) -> Self {
        PlanError::Assembly(AssemblyError::Lp(e))
    }
}

/// Capital recovery factor r(1+r)^n / ((1+r)^n − 1), or 1/n at r = 0.
pub fn capital_recovery_factor(rate: f64, years: u32) -> f64 {
    let n = f64::from(years);
    if rate == 0.0 {
        return 1.0 / n;
    }
    let g = (1.0 + rate).powf(n);
    rate * g / (g - 1.0)
}

/// Equivalent uniform annual cost of `capital`.
pub fn annualize(capital: f64, lifetime_years: u32, rate: f64) -> Result<f64, PlanError> {
    if !(capital >= 0.0) || !(rate >= 0.0) || lifetime_years < 1 {
        return Err(PlanError::Argument(format!(
            "annualize(capital = {capital}, lifetime = {lifetime_years}, rate = {rate})"
        )));
    }
    Ok(capital * capital_recovery_factor(rate, lifetime_years))
}

#[derive(Clone, Debug, PartialEq)]
pub enum InvestmentKind {
    Discrete { unit_kw: f64, units: VarId },
    Continuous { capacity: VarId, install: VarId },
}

/// New-build columns for one technology at one bus.
#[derive(Clone, Debug, PartialEq)]
pub struct Investment {
    pub node: usize,
    pub tech: String,
    pub kind: InvestmentKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Loads {
    pub electrical: Vec<Vec<f64>>,
    pub heating: Vec<Vec<f64>>,
    pub cooling: Vec<Vec<f64>>,
}

impl Loads {
    pub fn from_site(site: &Site) -> Result<Self, PlanError> {
        let series = |pick: fn(&crate::model::Bus) -> Option<&String>| -> Result<Vec<Vec<f64>>, PlanError> {
            site.network
                .buses
                .iter()
                .map(|b| site.series(pick(b)).map_err(|e| PlanError::Argument(e.to_string())))
                .collect()
        };
        Ok(Loads {
            electrical: series(|b| b.electrical_load.as_ref())?,
            heating: series(|b| b.heating_load.as_ref())?,
            cooling: series(|b| b.cooling_load.as_ref())?,
        })
    }
}

/// The assembled MILP plus everything needed to read its solution.
#[derive(Clone, Debug)]
pub struct PlanProblem {
    pub milp: MilpProblem,
    pub electric: ElectricVarMap,
    pub thermal: ThermalVarMap,
    pub investments: Vec<Investment>,
    /// Capacity expression per (bus index, tech id).
    pub capacities: BTreeMap<(usize, String), Capacity>,
    /// Monthly peak-import columns, present when a demand charge applies.
    pub peaks: Vec<(u8, VarId)>,
    pub site: Site,
    pub loads: Loads,
    pub solar: Vec<f64>,
}

/// Builds the full planning MILP: annualized investment plus weighted hourly
/// operating cost and monthly demand charges, subject to every electrical
/// and thermal row.
pub fn assemble_plan_milp(site: &Site) -> Result<PlanProblem, PlanError> {
    let report = site.validate();
    if !report.is_ok() {
        return Err(PlanError::Validation(report));
    }
    let net = &site.network;
    let time = &site.time;
    let tariff = &site.tariff;
    let hours = time.num_hours();
    let rate = time.discount_rate;
    let loads = Loads::from_site(site)?;
    let solar = site.series(site.solar_profile.as_ref()).map_err(|e| PlanError::Argument(e.to_string()))?;

    let mut lp = LinearProgram::new(Sense::Minimize);
    let electric = ElectricVarMap::register(&mut lp, net, &site.catalog, time, &loads.electrical)?;
    let thermal = ThermalVarMap::register(&mut lp, net, &site.catalog, time, &loads.heating, &loads.cooling)?;

    let mut investments = Vec::new();
    let mut capacities = BTreeMap::new();
    let mut integer_cols = Vec::new();
    let mut binary_cols = Vec::new();
    for (n, bus) in net.buses.iter().enumerate() {
        let id = &bus.id;
        for tech in bus.techs() {
            let candidate = bus.candidate_techs.iter().any(|t| t == tech);
            let mut cap = Capacity::fixed(bus.installed_kw(tech));
            match site.catalog.find(tech).ok_or_else(|| AssemblyError::UnknownTech(tech.to_string()))? {
                TechRef::Discrete(d) if candidate && d.max_units > 0 => {
                    let per_unit = annualize(d.unit_capacity_kw * d.capital_cost_per_kw, d.lifetime_years, rate)?;
                    let units = lp.add_var(format!("units_{id}_{tech}"), 0.0, f64::from(d.max_units), per_unit)?;
                    integer_cols.push(units);
                    // Expressed through a continuous kW column tied to the unit count.
                    let kw = lp.add_var(format!("cap_{id}_{tech}"), 0.0, f64::INFINITY, 0.0)?;
                    lp.add_row(format!("unitcap_{id}_{tech}"), RowSense::Eq, 0.0, &[(kw, 1.0), (units, -d.unit_capacity_kw)])?;
                    cap.var = Some(kw);
                    investments.push(Investment {
                        node: n,
                        tech: tech.to_string(),
                        kind: InvestmentKind::Discrete {
                            unit_kw: d.unit_capacity_kw,
                            units,
                        },
                    });
                }
                TechRef::Continuous(c) if candidate && c.max_capacity_kw > 0.0 => {
                    let crf = capital_recovery_factor(rate, c.lifetime_years);
                    let kw = lp.add_var(format!("cap_{id}_{tech}"), 0.0, c.max_capacity_kw, c.variable_cost_per_kw * crf)?;
                    let y = lp.add_var(format!("build_{id}_{tech}"), 0.0, 1.0, c.fixed_cost * crf)?;
                    binary_cols.push(y);
                    lp.add_row(format!("gate_{id}_{tech}"), RowSense::Le, 0.0, &[(kw, 1.0), (y, -c.max_capacity_kw)])?;
                    cap.var = Some(kw);
                    investments.push(Investment {
                        node: n,
                        tech: tech.to_string(),
                        kind: InvestmentKind::Continuous { capacity: kw, install: y },
                    });
                }
                _ => {}
            }
            capacities.insert((n, tech.to_string()), cap);
        }
    }

    // Operating costs and capacity limits.
    let weight: Vec<f64> = (0..hours).map(|h| time.weight(h)).collect();
    for (n, bus) in net.buses.iter().enumerate() {
        let id = &bus.id;
        let en = &electric.nodes[n];
        for (tech, gen) in &en.generation {
            let cap = capacities[&(n, tech.clone())];
            match site.catalog.find(tech).expect("registered") {
                TechRef::Discrete(d) => {
                    let fuel = d.fuel_cost_per_kwh();
                    for h in 0..hours {
                        lp.objective[gen[h].0] = weight[h] * fuel;
                        cap.limit(&mut lp, format!("genmax_{id}_{tech}_{h}"), &[(gen[h], 1.0)], 1.0)?;
                    }
                }
                TechRef::Continuous(_) => {
                    for h in 0..hours {
                        cap.limit(&mut lp, format!("pvmax_{id}_{tech}_{h}"), &[(gen[h], 1.0)], solar[h])?;
                    }
                }
            }
        }
        for h in 0..hours {
            lp.objective[en.curtailment[h].0] = weight[h] * tariff.curtailment_penalty;
        }
        if let Some(imp) = &en.import {
            for h in 0..hours {
                lp.objective[imp[h].0] = weight[h] * tariff.energy_price[h];
            }
        }
        if let Some(exp) = &en.export {
            for h in 0..hours {
                lp.objective[exp[h].0] = -weight[h] * tariff.export_price[h];
            }
        }
        let th = &thermal.nodes[n];
        for (tech, cop) in &th.electric_chillers {
            let cap = capacities[&(n, tech.clone())];
            let draw = &en.chiller_draw.iter().find(|(t, _)| t == tech).expect("registered").1;
            for h in 0..hours {
                cap.limit(&mut lp, format!("chillmax_{id}_{tech}_{h}"), &[(draw[h], *cop)], 1.0)?;
            }
        }
        for (tech, cop, draw) in &th.absorption {
            let cap = capacities[&(n, tech.clone())];
            for h in 0..hours {
                cap.limit(&mut lp, format!("absmax_{id}_{tech}_{h}"), &[(draw[h], *cop)], 1.0)?;
            }
        }
        for (tech, eff, out) in &th.boiler {
            let cap = capacities[&(n, tech.clone())];
            for h in 0..hours {
                lp.objective[out[h].0] = weight[h] * tariff.fuel_price_gas / eff;
                cap.limit(&mut lp, format!("boilmax_{id}_{tech}_{h}"), &[(out[h], 1.0)], 1.0)?;
            }
        }
        for s in [&en.ess, &th.heat_storage, &th.cold_storage].into_iter().flatten() {
            let cap = capacities[&(n, s.tech.clone())];
            let tech = match site.catalog.find(&s.tech) {
                Some(TechRef::Continuous(c)) => c,
                _ => return Err(AssemblyError::UnknownTech(s.tech.clone()).into()),
            };
            thermal::emit_storage_dynamics(&mut lp, s, tech, time, &cap)?;
        }
    }

    for h in 0..hours {
        grid::emit_power_balance(&mut lp, net, &electric, &loads.electrical, h)?;
        thermal::emit_heat_balance(&mut lp, net, &electric, &thermal, &loads.heating, h)?;
        thermal::emit_cooling_balance(&mut lp, net, &electric, &thermal, &loads.cooling, h)?;
    }
    grid::emit_voltage_rows(&mut lp, net, &electric)?;
    grid::emit_ampacity_rows(&mut lp, net, &electric)?;

    let mut peaks = Vec::new();
    if tariff.demand_charge > 0.0 {
        if let Some(imp) = electric.nodes.iter().find_map(|n| n.import.as_ref()) {
            for month in time.months() {
                let peak = lp.add_var(format!("peak_m{month}"), 0.0, f64::INFINITY, tariff.demand_charge)?;
                for h in (0..hours).filter(|&h| time.typical_days[time.day_of(h)].month == month) {
                    lp.add_row(format!("peak_m{month}_{h}"), RowSense::Ge, 0.0, &[(peak, 1.0), (imp[h], -1.0)])?;
                }
                peaks.push((month, peak));
            }
        }
    }

    let mut kinds = vec![VarKind::Continuous; lp.num_vars()];
    for v in integer_cols {
        kinds[v.0] = VarKind::Integer;
    }
    for v in binary_cols {
        kinds[v.0] = VarKind::Binary;
    }
    let milp = MilpProblem::new(lp, kinds)?;
    Ok(PlanProblem {
        milp,
        electric,
        thermal,
        investments,
        capacities,
        peaks,
        site: site.clone(),
        loads,
        solar,
    })
}

/// Installed capacity of one technology at one bus.
#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioEntry {
    pub node: String,
    pub tech: String,
    /// Newly built capacity (kW, or kWh for storage).
    pub new_capacity: f64,
    /// Whole units bought, for discrete technologies.
    pub units: Option<u32>,
    /// Capacity that existed before planning.
    pub existing: f64,
}

impl PortfolioEntry {
    pub fn total(&self) -> f64 {
        self.new_capacity + self.existing
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Portfolio {
    pub entries: Vec<PortfolioEntry>,
}

impl Portfolio {
    pub fn new_capacity(&self, node: &str, tech: &str) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.node == node && e.tech == tech)
            .map(|e| e.new_capacity)
            .sum()
    }

    /// New capacity of `tech` summed over all buses.
    pub fn aggregate(&self, tech: &str) -> f64 {
        self.entries.iter().filter(|e| e.tech == tech).map(|e| e.new_capacity).sum()
    }

    pub fn total_capacity(&self, node: &str, tech: &str) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.node == node && e.tech == tech)
            .map(PortfolioEntry::total)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispatchSeries {
    /// Bus id, or `from-to` for cable quantities.
    pub node: String,
    pub variable: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dispatch {
    pub hours: usize,
    pub series: Vec<DispatchSeries>,
}

impl Dispatch {
    pub fn get(&self, node: &str, variable: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|s| s.node == node && s.variable == variable)
            .map(|s| s.values.as_slice())
    }

    fn push(&mut self, node: &str, variable: String, values: Vec<f64>) {
        self.series.push(DispatchSeries {
            node: node.to_string(),
            variable,
            values,
        });
    }
}

/// Annual cost components ($/yr). `curtailment` is the penalty on unserved
/// load and is zero whenever every load is met.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostBreakdown {
    pub c_invd: f64,
    pub c_invc: f64,
    pub c_pur: f64,
    pub c_dem: f64,
    pub c_gen: f64,
    pub c_exp: f64,
    pub curtailment: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn investment(&self) -> f64 {
        self.c_invd + self.c_invc
    }

    pub fn operation(&self) -> f64 {
        self.total - self.investment()
    }

    fn with_total(mut self) -> Self {
        self.total = self.c_invd + self.c_invc + self.c_pur + self.c_dem + self.c_gen - self.c_exp + self.curtailment;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SolveStats {
    pub status: Status,
    pub objective: f64,
    pub gap: f64,
    pub nodes: usize,
    pub iterations: usize,
    pub columns: usize,
    pub rows: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    pub portfolio: Portfolio,
    pub dispatch: Dispatch,
    pub costs: CostBreakdown,
    pub stats: SolveStats,
    /// Raw column values, indexed like the assembled problem.
    pub values: Vec<f64>,
}

fn series(x: &[f64], cols: &[VarId]) -> Vec<f64> {
    cols.iter().map(|v| x[v.0]).collect()
}

fn extract_portfolio(problem: &PlanProblem, x: &[f64]) -> Portfolio {
    let net = &problem.site.network;
    let mut entries = Vec::new();
    for ((n, tech), cap) in &problem.capacities {
        let inv = problem.investments.iter().find(|i| i.node == *n && &i.tech == tech);
        let (new_capacity, units) = match inv.map(|i| &i.kind) {
            Some(InvestmentKind::Discrete { unit_kw, units }) => {
                let k = x[units.0].round().max(0.0);
                (k * unit_kw, Some(k as u32))
            }
            Some(InvestmentKind::Continuous { capacity, .. }) => (x[capacity.0].max(0.0), None),
            None => (0.0, None),
        };
        entries.push(PortfolioEntry {
            node: net.buses[*n].id.clone(),
            tech: tech.clone(),
            new_capacity,
            units,
            existing: cap.installed,
        });
    }
    entries.sort_by(|a, b| {
        let ia = net.bus_index(&a.node);
        let ib = net.bus_index(&b.node);
        ia.cmp(&ib).then_with(|| a.tech.cmp(&b.tech))
    });
    Portfolio { entries }
}

fn extract_dispatch(problem: &PlanProblem, x: &[f64]) -> Dispatch {
    let net = &problem.site.network;
    let mut d = Dispatch {
        hours: problem.electric.hours,
        series: Vec::new(),
    };
    for (n, bus) in net.buses.iter().enumerate() {
        let id = bus.id.as_str();
        let en = &problem.electric.nodes[n];
        let th = &problem.thermal.nodes[n];
        d.push(id, "load".into(), problem.loads.electrical[n].clone());
        if let Some(v) = &en.import {
            d.push(id, "import".into(), series(x, v));
        }
        if let Some(v) = &en.export {
            d.push(id, "export".into(), series(x, v));
        }
        for (tech, v) in &en.generation {
            d.push(id, format!("gen:{tech}"), series(x, v));
        }
        for s in [&en.ess, &th.heat_storage, &th.cold_storage].into_iter().flatten() {
            d.push(id, format!("charge:{}", s.tech), series(x, &s.charge));
            d.push(id, format!("discharge:{}", s.tech), series(x, &s.discharge));
            d.push(id, format!("soc:{}", s.tech), series(x, &s.soc));
        }
        d.push(id, "curtail".into(), series(x, &en.curtailment));
        for (tech, v) in &en.chiller_draw {
            d.push(id, format!("chiller:{tech}"), series(x, v));
        }
        for (tech, _, v) in &th.absorption {
            d.push(id, format!("absorption:{tech}"), series(x, v));
        }
        for (tech, _, v) in &th.boiler {
            d.push(id, format!("boiler:{tech}"), series(x, v));
        }
        if let Some(v) = &th.dump {
            d.push(id, "heat_dump".into(), series(x, v));
        }
        if th.has_cooling_balance {
            d.push(id, "cooling_load".into(), problem.loads.cooling[n].clone());
        }
        if th.has_heat_balance {
            d.push(id, "heat_load".into(), problem.loads.heating[n].clone());
        }
        d.push(id, "voltage".into(), series(x, &problem.electric.voltage[n]));
    }
    for (k, c) in net.cables.iter().enumerate() {
        let key = format!("{}-{}", c.from, c.to);
        d.push(&key, "flow".into(), series(x, &problem.electric.flow[k]));
        if let Some([fwd, rev]) = &problem.thermal.heat_flow[k] {
            d.push(&key, "heat_forward".into(), series(x, fwd));
            d.push(&key, "heat_reverse".into(), series(x, rev));
        }
    }
    d
}

/// Recomputes every cost component from portfolio, dispatch and input data.
pub fn cost_breakdown(site: &Site, portfolio: &Portfolio, dispatch: &Dispatch) -> CostBreakdown {
    let time = &site.time;
    let tariff = &site.tariff;
    let rate = time.discount_rate;
    let hours = time.num_hours();
    let mut c = CostBreakdown::default();
    for e in &portfolio.entries {
        match site.catalog.find(&e.tech) {
            Some(TechRef::Discrete(d)) => {
                c.c_invd += e.new_capacity * d.capital_cost_per_kw * capital_recovery_factor(rate, d.lifetime_years);
            }
            Some(TechRef::Continuous(t)) if e.new_capacity > 0.0 => {
                c.c_invc += (t.fixed_cost + t.variable_cost_per_kw * e.new_capacity)
                    * capital_recovery_factor(rate, t.lifetime_years);
            }
            _ => {}
        }
    }
    let weighted = |v: &[f64], price: &dyn Fn(usize) -> f64| -> f64 { (0..hours).map(|h| time.weight(h) * price(h) * v[h]).sum() };
    for s in &dispatch.series {
        let v = &s.values;
        if s.variable == "import" {
            c.c_pur += weighted(v, &|h| tariff.energy_price[h]);
            if tariff.demand_charge > 0.0 {
                for month in time.months() {
                    let peak = (0..hours)
                        .filter(|&h| time.typical_days[time.day_of(h)].month == month)
                        .map(|h| v[h])
                        .fold(0.0, f64::max);
                    c.c_dem += tariff.demand_charge * peak;
                }
            }
        } else if s.variable == "export" {
            c.c_exp += weighted(v, &|h| tariff.export_price[h]);
        } else if s.variable == "curtail" {
            c.curtailment += weighted(v, &|_| tariff.curtailment_penalty);
        } else if let Some(tech) = s.variable.strip_prefix("gen:") {
            if let Some(TechRef::Discrete(d)) = site.catalog.find(tech) {
                let fuel = d.fuel_cost_per_kwh();
                c.c_gen += weighted(v, &|_| fuel);
            }
        } else if let Some(tech) = s.variable.strip_prefix("boiler:") {
            if let Some(TechRef::Continuous(b)) = site.catalog.find(tech) {
                let fuel = tariff.fuel_price_gas / b.efficiency;
                c.c_gen += weighted(v, &|_| fuel);
            }
        }
    }
    c.with_total()
}

fn infeasibility_diagnostic(problem: &PlanProblem) -> String {
    let site = &problem.site;
    let mut notes = Vec::new();
    for (n, bus) in site.network.buses.iter().enumerate() {
        let peak = problem.loads.cooling[n].iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            continue;
        }
        let mut supply = 0.0;
        for tech in bus.techs() {
            if let Some(TechRef::Continuous(c)) = site.catalog.find(tech) {
                let candidate = bus.candidate_techs.iter().any(|t| t == tech);
                let max = bus.installed_kw(tech) + if candidate { c.max_capacity_kw } else { 0.0 };
                match c.kind {
                    ContinuousKind::ElectricChiller | ContinuousKind::AbsorptionChiller => supply += max,
                    ContinuousKind::ColdStorage => supply += max / c.duration_hours,
                    _ => {}
                }
            }
        }
        if peak > supply {
            notes.push(format!(
                "node `{}`: cooling peak {peak:.1} kW_th exceeds reachable chiller and cold-storage output {supply:.1} kW_th (cooling has no curtailment)",
                bus.id
            ));
        }
    }
    if notes.is_empty() {
        "no single-node capacity shortfall found; heat or cooling balances without curtailment are the binding rows"
            .into()
    } else {
        notes.join("; ")
    }
}

/// Default branch-and-bound settings for planning problems.
pub fn plan_solver_options() -> MilpOptions {
    MilpOptions::default()
}

pub fn solve_plan(problem: &PlanProblem, opts: &MilpOptions) -> Result<PlanResult, PlanError> {
    let start = Instant::now();
    let sol: Solution = solve_milp(&problem.milp, opts);
    let elapsed = start.elapsed();
    match sol.status {
        Status::Infeasible => return Err(PlanError::Infeasible(infeasibility_diagnostic(problem))),
        Status::Unbounded => return Err(PlanError::Infeasible("objective is unbounded below".into())),
        _ if !sol.has_values() => return Err(PlanError::SolverLimit(sol.status.as_str())),
        _ => {}
    }
    let x = &sol.values;
    let portfolio = extract_portfolio(problem, x);
    let dispatch = extract_dispatch(problem, x);
    let costs = cost_breakdown(&problem.site, &portfolio, &dispatch);
    Ok(PlanResult {
        portfolio,
        dispatch,
        costs,
        stats: SolveStats {
            status: sol.status,
            objective: sol.objective,
            gap: sol.gap,
            nodes: sol.nodes,
            iterations: sol.iterations,
            columns: problem.milp.lp.num_vars(),
            rows: problem.milp.lp.num_rows(),
            elapsed,
        },
        values: sol.values.clone(),
    })
}

/// Assembles and solves in one call.
pub fn plan(site: &Site, opts: &MilpOptions) -> Result<(PlanProblem, PlanResult), PlanError> {
    let problem = assemble_plan_milp(site)?;
    let result = solve_plan(&problem, opts)?;
    Ok((problem, result))
}

/// Largest violations of the physical model, recomputed from column values
/// through the variable maps rather than from the emitted rows.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhysicsReport {
    /// pu of the power base.
    pub power_balance: f64,
    pub heat_balance: f64,
    pub cooling_balance: f64,
    /// Distance of any SOC outside [0, capacity].
    pub soc_bounds: f64,
    /// Residual of the SOC recursion, including the daily wrap-around.
    pub soc_cyclic: f64,
    pub max_abs_flow_pu: f64,
    pub min_voltage: f64,
    pub max_voltage: f64,
    /// Largest |capacity − k·unit| over discrete technologies.
    pub integrality: f64,
    /// Largest |monthly peak column − max in-month import|.
    pub demand_peak: f64,
}

impl PlanProblem {
    pub fn physics(&self, x: &[f64], portfolio: &Portfolio) -> PhysicsReport {
        let net = &self.site.network;
        let time = &self.site.time;
        let hours = time.num_hours();
        let base = net.base_power_kva;
        let mut r = PhysicsReport {
            min_voltage: f64::INFINITY,
            max_voltage: f64::NEG_INFINITY,
            ..Default::default()
        };
        let at = |v: &VarId| x[v.0];
        for h in 0..hours {
            for (n, _) in net.buses.iter().enumerate() {
                let en = &self.electric.nodes[n];
                let th = &self.thermal.nodes[n];
                let mut bal = -self.loads.electrical[n][h] + at(&en.curtailment[h]);
                bal += en.generation.iter().map(|(_, g)| at(&g[h])).sum::<f64>();
                bal += en.import.as_ref().map_or(0.0, |v| at(&v[h]));
                bal -= en.export.as_ref().map_or(0.0, |v| at(&v[h]));
                if let Some(s) = &en.ess {
                    bal += at(&s.discharge[h]) - at(&s.charge[h]);
                }
                bal -= en.chiller_draw.iter().map(|(_, d)| at(&d[h])).sum::<f64>();
                let mut heat = -self.loads.heating[n][h];
                for (tech, hpr) in &th.chp {
                    if let Some((_, g)) = en.generation.iter().find(|(t, _)| t == tech) {
                        heat += hpr * at(&g[h]);
                    }
                }
                heat += th.boiler.iter().map(|(_, _, b)| at(&b[h])).sum::<f64>();
                heat -= th.absorption.iter().map(|(_, _, a)| at(&a[h])).sum::<f64>();
                if let Some(s) = &th.heat_storage {
                    heat += at(&s.discharge[h]) - at(&s.charge[h]);
                }
                heat -= th.dump.as_ref().map_or(0.0, |d| at(&d[h]));
                for (k, c) in net.cables.iter().enumerate() {
                    let (a, b) = net.cable_ends(c).expect("validated");
                    let f = at(&self.electric.flow[k][h]);
                    if a == n {
                        bal -= base * f;
                    } else if b == n {
                        bal += base * f;
                    }
                    if let Some([fwd, rev]) = &self.thermal.heat_flow[k] {
                        let keep = 1.0 - c.heat_loss_fraction();
                        if a == n {
                            heat += keep * at(&rev[h]) - at(&fwd[h]);
                        } else if b == n {
                            heat += keep * at(&fwd[h]) - at(&rev[h]);
                        }
                    }
                }
                r.power_balance = r.power_balance.max(bal.abs() / base);
                if th.has_heat_balance {
                    r.heat_balance = r.heat_balance.max(heat.abs());
                }
                if th.has_cooling_balance {
                    let mut cool = -self.loads.cooling[n][h];
                    for (tech, cop) in &th.electric_chillers {
                        if let Some((_, d)) = en.chiller_draw.iter().find(|(t, _)| t == tech) {
                            cool += cop * at(&d[h]);
                        }
                    }
                    cool += th.absorption.iter().map(|(_, cop, a)| cop * at(&a[h])).sum::<f64>();
                    if let Some(s) = &th.cold_storage {
                        cool += at(&s.discharge[h]) - at(&s.charge[h]);
                    }
                    r.cooling_balance = r.cooling_balance.max(cool.abs());
                }
                let v = at(&self.electric.voltage[n][h]);
                r.min_voltage = r.min_voltage.min(v);
                r.max_voltage = r.max_voltage.max(v);
            }
            for k in 0..net.cables.len() {
                r.max_abs_flow_pu = r.max_abs_flow_pu.max(at(&self.electric.flow[k][h]).abs());
            }
        }
        let storages: Vec<(usize, &StorageVars)> = (0..net.buses.len())
            .flat_map(|n| {
                let th = &self.thermal.nodes[n];
                [&self.electric.nodes[n].ess, &th.heat_storage, &th.cold_storage]
                    .into_iter()
                    .flatten()
                    .map(move |s| (n, s))
            })
            .collect();
        for (n, s) in storages {
            let cap = self.capacities[&(n, s.tech.clone())].value(x);
            let Some(TechRef::Continuous(tech)) = self.site.catalog.find(&s.tech) else {
                continue;
            };
            for h in 0..hours {
                let soc = at(&s.soc[h]);
                r.soc_bounds = r.soc_bounds.max((-soc).max(soc - cap).max(0.0));
                let next = time.day_of(h) * time.hours_per_day + (time.hour_of_day(h) + 1) % time.hours_per_day;
                let expect = soc * (1.0 - tech.decay_per_hour) + tech.charge_efficiency * at(&s.charge[h])
                    - at(&s.discharge[h]) / tech.discharge_efficiency;
                r.soc_cyclic = r.soc_cyclic.max((at(&s.soc[next]) - expect).abs());
            }
        }
        for e in &portfolio.entries {
            if let Some(TechRef::Discrete(d)) = self.site.catalog.find(&e.tech) {
                let k = (e.new_capacity / d.unit_capacity_kw).round();
                r.integrality = r.integrality.max((e.new_capacity - k * d.unit_capacity_kw).abs());
            }
        }
        for inv in &self.investments {
            if let InvestmentKind::Discrete { units, .. } = inv.kind {
                r.integrality = r.integrality.max((x[units.0] - x[units.0].round()).abs());
            }
        }
        if let Some(imp) = self.electric.nodes.iter().find_map(|n| n.import.as_ref()) {
            for (month, peak) in &self.peaks {
                let max = (0..hours)
                    .filter(|&h| time.typical_days[time.day_of(h)].month == *month)
                    .map(|h| at(&imp[h]))
                    .fold(0.0, f64::max);
                r.demand_peak = r.demand_peak.max((at(peak) - max).abs());
            }
        }
        r
    }
}

/// Component-wise comparison of two plans' annual costs.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub a: CostBreakdown,
    pub b: CostBreakdown,
    /// `(a − b) / a` of the total, in percent.
    pub total_reduction_pct: f64,
    pub investment_reduction_pct: f64,
    pub operation_reduction_pct: f64,
}

fn reduction_pct(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        100.0 * (a - b) / a
    }
}

impl Comparison {
    pub fn from_costs(a: CostBreakdown, b: CostBreakdown) -> Self {
        Comparison {
            total_reduction_pct: reduction_pct(a.total, b.total),
            investment_reduction_pct: reduction_pct(a.investment(), b.investment()),
            operation_reduction_pct: reduction_pct(a.operation(), b.operation()),
            a,
            b,
        }
    }

    /// (label, a, b, a − b) per component.
    pub fn rows(&self) -> Vec<(&'static str, f64, f64, f64)> {
        let pick: [(&'static str, fn(&CostBreakdown) -> f64); 10] = [
            ("c_invd", |c| c.c_invd),
            ("c_invc", |c| c.c_invc),
            ("c_pur", |c| c.c_pur),
            ("c_dem", |c| c.c_dem),
            ("c_gen", |c| c.c_gen),
            ("c_exp", |c| c.c_exp),
            ("curtailment", |c| c.curtailment),
            ("investment", CostBreakdown::investment),
            ("operation", CostBreakdown::operation),
            ("total", |c| c.total),
        ];
        pick.iter()
            .map(|(name, f)| (*name, f(&self.a), f(&self.b), f(&self.a) - f(&self.b)))
            .collect()
    }
}

/// Compares two solved plans; both must share network, catalog and tariff.
pub fn compare_scenarios(a: (&Site, &PlanResult), b: (&Site, &PlanResult)) -> Result<Comparison, PlanError> {
    let (sa, ra) = a;
    let (sb, rb) = b;
    if sa.network.buses.len() != sb.network.buses.len()
        || sa.network.cables != sb.network.cables
        || sa.catalog != sb.catalog
        || sa.tariff != sb.tariff
        || sa.time != sb.time
    {
        return Err(PlanError::Mismatch(
            "network, catalog, tariff and time structure must be identical".into(),
        ));
    }
    Ok(Comparison::from_costs(ra.costs, rb.costs))
}
