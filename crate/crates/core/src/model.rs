//! Shared domain types: network topology, technologies, tariffs, the
//! typical-day time structure and hourly profiles.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("profile has {got} values, time structure needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown bus `{0}`")]
    UnknownBus(String),
    #[error("unknown technology `{0}`")]
    UnknownTech(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Load,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub kind: BusKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrical_load: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cooling_load: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heating_load: Option<String>,
    /// Technologies the planner may build here.
    #[serde(default)]
    pub candidate_techs: Vec<String>,
    /// Capacity already in place (kW, or kWh for storage), by technology id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub installed: BTreeMap<String, f64>,
}

impl Bus {
    pub fn is_slack(&self) -> bool {
        self.kind == BusKind::Slack
    }

    /// Technologies present at this bus: candidates first, then installed-only.
    pub fn techs(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.candidate_techs.iter().map(String::as_str).collect();
        for id in self.installed.keys() {
            if !out.contains(&id.as_str()) {
                out.push(id);
            }
        }
        out
    }

    pub fn installed_kw(&self, tech: &str) -> f64 {
        self.installed.get(tech).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cable {
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub impedance_pu_per_m: f64,
    pub ampacity_pu: f64,
    #[serde(default)]
    pub carries_heat: bool,
    #[serde(default)]
    pub heat_loss_per_m: f64,
}

impl Cable {
    pub fn resistance_pu(&self) -> f64 {
        self.impedance_pu_per_m * self.length_m
    }

    /// Fraction of sent heat lost along the link.
    pub fn heat_loss_fraction(&self) -> f64 {
        self.heat_loss_per_m * self.length_m
    }
}

fn default_band() -> [f64; 2] {
    [0.95, 1.05]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub buses: Vec<Bus>,
    pub cables: Vec<Cable>,
    pub slack_bus: String,
    pub nominal_voltage_kv: f64,
    pub base_power_kva: f64,
    /// Allowed voltage magnitude band in pu.
    #[serde(default = "default_band")]
    pub voltage_band: [f64; 2],
}

impl NetworkModel {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.bus_index(&self.slack_bus)
    }

    pub fn kw_to_pu(&self, kw: f64) -> f64 {
        kw / self.base_power_kva
    }

    pub fn pu_to_kw(&self, pu: f64) -> f64 {
        pu * self.base_power_kva
    }

    /// Cable endpoints as bus indices; `None` if either end is unknown.
    pub fn cable_ends(&self, cable: &Cable) -> Option<(usize, usize)> {
        Some((self.bus_index(&cable.from)?, self.bus_index(&cable.to)?))
    }

    /// Whether every bus is reachable from the first one.
    pub fn is_connected(&self) -> bool {
        let n = self.buses.len();
        if n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); n];
        for c in &self.cables {
            if let Some((a, b)) = self.cable_ends(c) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

/// A technology bought in whole units, such as a CHP prime mover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTech {
    pub id: String,
    pub unit_capacity_kw: f64,
    pub capital_cost_per_kw: f64,
    pub lifetime_years: u32,
    pub electrical_efficiency: f64,
    /// Recoverable kW_th per kW_e.
    pub heat_to_power_ratio: f64,
    /// $/kWh of fuel input.
    pub fuel_price: f64,
    pub max_units: u32,
}

impl DiscreteTech {
    /// Fuel cost per kWh of electricity produced.
    pub fn fuel_cost_per_kwh(&self) -> f64 {
        self.fuel_price / self.electrical_efficiency
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuousKind {
    Pv,
    Ess,
    HeatStorage,
    ColdStorage,
    ElectricChiller,
    AbsorptionChiller,
    Boiler,
}

impl ContinuousKind {
    pub fn is_storage(self) -> bool {
        matches!(
            self,
            ContinuousKind::Ess | ContinuousKind::HeatStorage | ContinuousKind::ColdStorage
        )
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// A technology sized continuously: `fixed_cost` is a lump sum paid when any
/// capacity is built, `variable_cost_per_kw` applies per kW (per kWh of
/// energy capacity for storage).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousTech {
    pub id: String,
    pub kind: ContinuousKind,
    pub fixed_cost: f64,
    pub variable_cost_per_kw: f64,
    pub lifetime_years: u32,
    pub max_capacity_kw: f64,
    #[serde(default = "one")]
    pub charge_efficiency: f64,
    #[serde(default = "one")]
    pub discharge_efficiency: f64,
    /// Fraction of stored energy lost per hour.
    #[serde(default)]
    pub decay_per_hour: f64,
    /// Chiller coefficient of performance (kW_th cooling per kW input).
    #[serde(default = "one")]
    pub cop: f64,
    /// Boiler thermal efficiency.
    #[serde(default = "one")]
    pub efficiency: f64,
    /// Storage energy capacity divided by power rating.
    #[serde(default = "two")]
    pub duration_hours: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    #[serde(default)]
    pub discrete: Vec<DiscreteTech>,
    #[serde(default)]
    pub continuous: Vec<ContinuousTech>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TechRef<'a> {
    Discrete(&'a DiscreteTech),
    Continuous(&'a ContinuousTech),
}

impl Catalog {
    pub fn find(&self, id: &str) -> Option<TechRef<'_>> {
        if let Some(t) = self.discrete.iter().find(|t| t.id == id) {
            return Some(TechRef::Discrete(t));
        }
        self.continuous
            .iter()
            .find(|t| t.id == id)
            .map(TechRef::Continuous)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.discrete
            .iter()
            .map(|t| t.id.as_str())
            .chain(self.continuous.iter().map(|t| t.id.as_str()))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.discrete.is_empty() && self.continuous.is_empty()
    }
}

fn default_curtailment_penalty() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tariff {
    /// $/kWh per typical-day hour.
    pub energy_price: Vec<f64>,
    /// $/kWh paid for exports per typical-day hour.
    pub export_price: Vec<f64>,
    /// $/kW of monthly peak import.
    pub demand_charge: f64,
    /// $/kWh of gas for boilers.
    pub fuel_price_gas: f64,
    /// $/kWh of unserved load.
    #[serde(default = "default_curtailment_penalty")]
    pub curtailment_penalty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalDay {
    pub label: String,
    /// Calendar month 1..=12 used for demand-charge billing.
    pub month: u8,
    /// Days per year this profile stands for.
    pub weight: f64,
}

fn default_hours() -> usize {
    24
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStructure {
    pub typical_days: Vec<TypicalDay>,
    #[serde(default = "default_hours")]
    pub hours_per_day: usize,
    pub planning_horizon_years: u32,
    pub discount_rate: f64,
}

pub const MONTH_DAYS: [f64; 12] = [
    31.0, 28.0, 31.0, 30.0, 31.0, 30.0, 31.0, 31.0, 30.0, 31.0, 30.0, 31.0,
];

const MONTH_LABELS: [&str; 12] = [
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

impl TimeStructure {
    /// One typical day per calendar month, weighted by days in the month.
    pub fn monthly(planning_horizon_years: u32, discount_rate: f64) -> Self {
        TimeStructure {
            typical_days: (0..12)
                .map(|k| TypicalDay {
                    label: MONTH_LABELS[k].to_string(),
                    month: k as u8 + 1,
                    weight: MONTH_DAYS[k],
                })
                .collect(),
            hours_per_day: 24,
            planning_horizon_years,
            discount_rate,
        }
    }

    pub fn num_hours(&self) -> usize {
        self.typical_days.len() * self.hours_per_day
    }

    pub fn day_of(&self, hour: usize) -> usize {
        hour / self.hours_per_day
    }

    pub fn hour_of_day(&self, hour: usize) -> usize {
        hour % self.hours_per_day
    }

    /// Days per year represented by hour slot `hour`.
    pub fn weight(&self, hour: usize) -> f64 {
        self.typical_days[self.day_of(hour)].weight
    }

    pub fn total_weight(&self) -> f64 {
        self.typical_days.iter().map(|d| d.weight).sum()
    }

    /// Distinct billing months in first-appearance order.
    pub fn months(&self) -> Vec<u8> {
        let mut seen = BTreeSet::new();
        self.typical_days
            .iter()
            .filter(|d| seen.insert(d.month))
            .map(|d| d.month)
            .collect()
    }
}

/// Hourly values (kW or kW_th), one per typical-day hour.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LoadProfile(pub Vec<f64>);

impl LoadProfile {
    pub fn zeros(len: usize) -> Self {
        LoadProfile(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn peak(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> LoadProfile {
        LoadProfile(self.0.iter().map(|v| v * factor).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnualSummary {
    /// MWh (or MWh_th) per year.
    pub usage_mwh: f64,
    /// kW (or kW_th).
    pub peak_kw: f64,
}

/// Annual energy and peak of a typical-day profile.
pub fn annual_summary(profile: &LoadProfile, time: &TimeStructure) -> Result<AnnualSummary, ModelError> {
    let expected = time.num_hours();
    if profile.len() != expected {
        return Err(ModelError::LengthMismatch {
            expected,
            got: profile.len(),
        });
    }
    let usage_kwh: f64 = profile
        .values()
        .iter()
        .enumerate()
        .map(|(h, v)| v * time.weight(h))
        .sum();
    Ok(AnnualSummary {
        usage_mwh: usage_kwh / 1000.0,
        peak_kw: profile.peak(),
    })
}

pub type ProfileSet = BTreeMap<String, LoadProfile>;

/// Everything the planning layer needs, with profile references resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub network: NetworkModel,
    pub catalog: Catalog,
    pub tariff: Tariff,
    pub time: TimeStructure,
    pub profiles: ProfileSet,
    /// PV output per kW installed, per hour.
    pub solar_profile: Option<String>,
    /// Outdoor dry-bulb temperature (°C), per hour.
    pub ambient_profile: Option<String>,
}

impl Site {
    pub fn profile(&self, name: &str) -> Result<&LoadProfile, ModelError> {
        self.profiles
            .get(name)
            .ok_or_else(|| ModelError::UnknownProfile(name.to_string()))
    }

    /// Values of an optional profile reference, zeros when absent.
    pub fn series(&self, name: Option<&String>) -> Result<Vec<f64>, ModelError> {
        match name {
            None => Ok(vec![0.0; self.time.num_hours()]),
            Some(n) => Ok(self.profile(n)?.0.clone()),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(
            &self.network,
            &self.catalog,
            &self.tariff,
            &self.time,
            &self.profiles,
            [self.solar_profile.as_deref(), self.ambient_profile.as_deref()],
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    MultipleSlack,
    NoSlack,
    SlackMismatch,
    SlackHasLoad,
    DuplicateBus,
    DanglingEndpoint,
    Disconnected,
    BadBase,
    BadCable,
    BadTech,
    UnknownTech,
    BadTariff,
    BadTime,
    MissingProfile,
    BadProfile,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::MultipleSlack => "multiple slack",
            ViolationKind::NoSlack => "no slack",
            ViolationKind::SlackMismatch => "slack mismatch",
            ViolationKind::SlackHasLoad => "slack has load",
            ViolationKind::DuplicateBus => "duplicate bus",
            ViolationKind::DanglingEndpoint => "dangling endpoint",
            ViolationKind::Disconnected => "disconnected",
            ViolationKind::BadBase => "bad base",
            ViolationKind::BadCable => "bad cable",
            ViolationKind::BadTech => "bad technology",
            ViolationKind::UnknownTech => "unknown technology",
            ViolationKind::BadTariff => "bad tariff",
            ViolationKind::BadTime => "bad time structure",
            ViolationKind::MissingProfile => "missing profile",
            ViolationKind::BadProfile => "bad profile",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, detail: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of the planning inputs.
pub fn validate_model(
    network: &NetworkModel,
    catalog: &Catalog,
    tariff: &Tariff,
    time: &TimeStructure,
    profiles: &ProfileSet,
    extra_profiles: [Option<&str>; 2],
) -> ValidationReport {
    use ViolationKind as K;
    let mut r = ValidationReport::default();

    let slacks: Vec<&Bus> = network.buses.iter().filter(|b| b.is_slack()).collect();
    match slacks.len() {
        0 => r.push(K::NoSlack, "no bus has kind `slack`"),
        1 => {
            if slacks[0].id != network.slack_bus {
                r.push(
                    K::SlackMismatch,
                    format!("slack_bus `{}` but bus `{}` is the slack", network.slack_bus, slacks[0].id),
                );
            }
        }
        k => r.push(K::MultipleSlack, format!("{k} buses have kind `slack`")),
    }
    for b in &slacks {
        if b.electrical_load.is_some() || b.cooling_load.is_some() || b.heating_load.is_some() {
            r.push(K::SlackHasLoad, format!("slack bus `{}` carries a load", b.id));
        }
    }
    let mut ids = BTreeSet::new();
    for b in &network.buses {
        if !ids.insert(b.id.as_str()) {
            r.push(K::DuplicateBus, format!("bus id `{}` repeated", b.id));
        }
    }
    if !(network.base_power_kva > 0.0) {
        r.push(K::BadBase, format!("base_power_kva = {}", network.base_power_kva));
    }
    let [vmin, vmax] = network.voltage_band;
    if !(vmin < 1.0 && vmax > 1.0) {
        r.push(K::BadBase, format!("voltage band [{vmin}, {vmax}] excludes 1.0 pu"));
    }

    let mut dangling = false;
    for (k, c) in network.cables.iter().enumerate() {
        for end in [&c.from, &c.to] {
            if network.bus_index(end).is_none() {
                dangling = true;
                r.push(K::DanglingEndpoint, format!("cable #{k} references missing bus `{end}`"));
            }
        }
        if !(c.length_m > 0.0) {
            r.push(K::BadCable, format!("cable #{k} length {} m", c.length_m));
        }
        if !(c.ampacity_pu > 0.0) {
            r.push(K::BadCable, format!("cable #{k} ampacity {} pu", c.ampacity_pu));
        }
        if !(c.impedance_pu_per_m >= 0.0) {
            r.push(K::BadCable, format!("cable #{k} impedance {} pu/m", c.impedance_pu_per_m));
        }
        let loss = c.heat_loss_fraction();
        if !(0.0..1.0).contains(&loss) {
            r.push(K::BadCable, format!("cable #{k} heat loss fraction {loss} outside [0, 1)"));
        }
    }
    if !dangling && !network.is_connected() {
        r.push(K::Disconnected, "not every bus is reachable");
    }

    for t in &catalog.discrete {
        if !(t.electrical_efficiency > 0.0 && t.electrical_efficiency <= 1.0) {
            r.push(K::BadTech, format!("`{}` efficiency {}", t.id, t.electrical_efficiency));
        }
        if t.lifetime_years < 1 {
            r.push(K::BadTech, format!("`{}` lifetime {}", t.id, t.lifetime_years));
        }
        if !(t.unit_capacity_kw > 0.0) {
            r.push(K::BadTech, format!("`{}` unit capacity {}", t.id, t.unit_capacity_kw));
        }
        if !(t.capital_cost_per_kw >= 0.0 && t.fuel_price >= 0.0 && t.heat_to_power_ratio >= 0.0) {
            r.push(K::BadTech, format!("`{}` has a negative cost or ratio", t.id));
        }
    }
    for t in &catalog.continuous {
        if !(t.fixed_cost >= 0.0 && t.variable_cost_per_kw >= 0.0) {
            r.push(K::BadTech, format!("`{}` has a negative cost", t.id));
        }
        for (name, eta) in [
            ("charge efficiency", t.charge_efficiency),
            ("discharge efficiency", t.discharge_efficiency),
            ("efficiency", t.efficiency),
        ] {
            if !(eta > 0.0 && eta <= 1.0) {
                r.push(K::BadTech, format!("`{}` {name} {eta}", t.id));
            }
        }
        if !(t.cop > 0.0) {
            r.push(K::BadTech, format!("`{}` COP {}", t.id, t.cop));
        }
        if !(0.0..1.0).contains(&t.decay_per_hour) {
            r.push(K::BadTech, format!("`{}` decay {}", t.id, t.decay_per_hour));
        }
        if t.lifetime_years < 1 {
            r.push(K::BadTech, format!("`{}` lifetime {}", t.id, t.lifetime_years));
        }
        if !(t.max_capacity_kw >= 0.0) || !(t.duration_hours > 0.0) {
            r.push(K::BadTech, format!("`{}` capacity limits", t.id));
        }
    }
    let mut tech_ids = BTreeSet::new();
    for id in catalog.ids() {
        if !tech_ids.insert(id) {
            r.push(K::BadTech, format!("technology id `{id}` repeated"));
        }
    }
    for b in &network.buses {
        for id in b.candidate_techs.iter().chain(b.installed.keys()) {
            if catalog.find(id).is_none() {
                r.push(K::UnknownTech, format!("bus `{}` lists `{id}`", b.id));
            }
        }
        for (id, kw) in &b.installed {
            if !(*kw >= 0.0) {
                r.push(K::BadTech, format!("bus `{}` installed `{id}` = {kw}", b.id));
            }
        }
    }

    let hours = time.num_hours();
    if time.typical_days.is_empty() || time.hours_per_day == 0 {
        r.push(K::BadTime, "no typical-day hours");
    }
    let total = time.total_weight();
    if (total - 365.0).abs() > 1.0 {
        r.push(K::BadTime, format!("typical-day weights sum to {total}, expected 365 ± 1"));
    }
    if time.planning_horizon_years < 1 {
        r.push(K::BadTime, "planning horizon below one year");
    }
    if !(0.0..1.0).contains(&time.discount_rate) {
        r.push(K::BadTime, format!("discount rate {}", time.discount_rate));
    }
    for d in &time.typical_days {
        if !(1..=12).contains(&d.month) || !(d.weight > 0.0) {
            r.push(K::BadTime, format!("typical day `{}` month {} weight {}", d.label, d.month, d.weight));
        }
    }

    for (name, series) in [("energy_price", &tariff.energy_price), ("export_price", &tariff.export_price)] {
        if series.len() != hours {
            r.push(K::BadTariff, format!("{name} has {} values, expected {hours}", series.len()));
        }
        if series.iter().any(|v| !(*v >= 0.0)) {
            r.push(K::BadTariff, format!("{name} has negative or NaN entries"));
        }
    }
    if !(tariff.demand_charge >= 0.0 && tariff.fuel_price_gas >= 0.0 && tariff.curtailment_penalty >= 0.0) {
        r.push(K::BadTariff, "negative demand charge, gas price or curtailment penalty");
    }

    let mut referenced: Vec<(String, &str)> = Vec::new();
    for b in &network.buses {
        for p in [&b.electrical_load, &b.cooling_load, &b.heating_load].into_iter().flatten() {
            referenced.push((format!("bus `{}`", b.id), p));
        }
    }
    for p in extra_profiles.into_iter().flatten() {
        referenced.push(("site".to_string(), p));
    }
    for (owner, name) in referenced {
        match profiles.get(name) {
            None => r.push(K::MissingProfile, format!("{owner} references `{name}`")),
            Some(p) => {
                if p.len() != hours {
                    r.push(K::BadProfile, format!("`{name}` has {} values, expected {hours}", p.len()));
                }
            }
        }
    }
    for (name, p) in profiles {
        if p.values().iter().any(|v| !v.is_finite()) {
            r.push(K::BadProfile, format!("`{name}` has non-finite values"));
        }
    }
    for b in &network.buses {
        for p in [&b.electrical_load, &b.cooling_load, &b.heating_load].into_iter().flatten() {
            if let Some(prof) = profiles.get(p) {
                if prof.values().iter().any(|v| *v < 0.0) {
                    r.push(K::BadProfile, format!("load `{p}` has negative values"));
                }
            }
        }
    }
    r
}
