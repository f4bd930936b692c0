//! The bundled five-bus campus: two medium offices and two midrise
//! apartment blocks behind one point of common coupling. Loads are
//! synthesized from the hand-authored templates to hit the annual usage and
//! peak targets in [`NODES`]; prices, climate and zone models are synthetic.

use std::collections::BTreeMap;

use crate::dsm::{ComfortSpec, DsmZoneConfig, ZoneThermalModel};
use crate::model::{
    Bus, BusKind, Cable, Catalog, ContinuousKind, ContinuousTech, DiscreteTech, LoadProfile, NetworkModel, Tariff,
    TimeStructure,
};
use crate::scenario::{DsmConfig, ProfileSource, ScenarioFile};
use crate::synth::{self, synthesize_profile, templates, SynthesisSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Building {
    Office,
    Apartment,
}

/// Annual targets for one load bus: electricity and cooling (MWh, kW) for
/// the setback baseline and for the optimized-setpoint case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeTargets {
    pub bus: &'static str,
    pub building: Building,
    pub electric: (f64, f64),
    pub cooling_baseline: (f64, f64),
    pub cooling_optimized: (f64, f64),
    /// Technologies the planner may build at this bus.
    pub candidates: &'static [&'static str],
}

pub const NODES: [NodeTargets; 4] = [
    NodeTargets {
        bus: "n1",
        building: Building::Office,
        electric: (1819.0, 446.0),
        cooling_baseline: (12958.0, 2442.0),
        cooling_optimized: (11223.0, 2088.0),
        candidates: &["chp_mt", "abs_chiller"],
    },
    NodeTargets {
        bus: "n2",
        building: Building::Apartment,
        electric: (1399.0, 297.0),
        cooling_baseline: (1497.0, 815.0),
        cooling_optimized: (1293.0, 688.0),
        candidates: &["pv", "ess"],
    },
    NodeTargets {
        bus: "n3",
        building: Building::Office,
        electric: (1450.0, 452.0),
        cooling_baseline: (2055.0, 1196.0),
        cooling_optimized: (1752.0, 1006.0),
        candidates: &["chp_fc", "abs_chiller"],
    },
    NodeTargets {
        bus: "n4",
        building: Building::Apartment,
        electric: (644.0, 211.0),
        cooling_baseline: (233.0, 622.0),
        cooling_optimized: (202.0, 533.0),
        candidates: &["pv", "ess"],
    },
];

pub const SLACK: &str = "pcc";
pub const CHILLER_COP: f64 = 3.0;
pub const CABLE_LENGTH_M: f64 = 200.0;
pub const IMPEDANCE_PU_PER_M: f64 = 6e-6;
pub const AMPACITY_PU: f64 = 0.4;
pub const HEAT_LOSS_PER_M: f64 = 1e-4;
/// Existing chiller capacity relative to the baseline cooling peak.
const CHILLER_MARGIN: f64 = 1.15;
/// Template shapes are sharpened until their mean is this fraction of the
/// target load factor, leaving a small constant base load.
const SHAPE_MEAN_FRACTION: f64 = 0.9;

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn occupancy(b: Building, hour: usize) -> f64 {
    match b {
        Building::Office => templates::office_occupancy(hour),
        Building::Apartment => templates::apartment_occupancy(hour),
    }
}

fn target_profile(time: &TimeStructure, raw: Vec<f64>, (usage, peak): (f64, f64)) -> LoadProfile {
    let load_factor = usage * 1000.0 / (peak * time.total_weight() * time.hours_per_day as f64);
    let shape = synth::sharpen(&raw, time, SHAPE_MEAN_FRACTION * load_factor);
    let p = synthesize_profile(
        &SynthesisSpec {
            target_usage: usage,
            target_peak: peak,
            shape,
        },
        time,
    )
    .expect("bundled targets are consistent");
    LoadProfile(p.0.into_iter().map(round4).collect())
}

pub fn electric_profile(time: &TimeStructure, node: &NodeTargets) -> LoadProfile {
    let raw = match node.building {
        Building::Office => templates::shape(templates::office_electric),
        Building::Apartment => templates::shape(templates::apartment_electric),
    };
    target_profile(time, raw, node.electric)
}

pub fn cooling_profile(time: &TimeStructure, node: &NodeTargets, targets: (f64, f64)) -> LoadProfile {
    let b = node.building;
    let balance = match b {
        Building::Office => 12.0,
        Building::Apartment => 18.0,
    };
    let raw = templates::shape(|m, h| templates::cooling(m, h, occupancy(b, h), balance));
    target_profile(time, raw, targets)
}

/// Time-of-use energy price ($/kWh) with a summer on-peak window.
pub fn energy_price(month: usize, hour: usize) -> f64 {
    let summer = (5..=8).contains(&month);
    match (summer, hour) {
        (true, 12..=19) => 0.16,
        (true, 8..=11) | (true, 20..=22) => 0.11,
        (false, 8..=21) => 0.10,
        _ => 0.05,
    }
}

pub const EXPORT_PRICE: f64 = 0.03;
pub const DEMAND_CHARGE: f64 = 20.0;
pub const GAS_PRICE: f64 = 0.04;
/// CHP is bought in modules; the catalog caps are 2000 kW (MT) and 1000 kW (FC).
pub const CHP_MODULE_KW: f64 = 250.0;

pub fn catalog() -> Catalog {
    let storage = |id: &str, kind, fixed, var, life, max| ContinuousTech {
        id: id.into(),
        kind,
        fixed_cost: fixed,
        variable_cost_per_kw: var,
        lifetime_years: life,
        max_capacity_kw: max,
        charge_efficiency: 0.95,
        discharge_efficiency: 0.95,
        decay_per_hour: 0.001,
        cop: 1.0,
        efficiency: 1.0,
        duration_hours: 2.0,
    };
    let plain = |id: &str, kind, fixed, var, life, max, cop| ContinuousTech {
        cop,
        charge_efficiency: 1.0,
        discharge_efficiency: 1.0,
        decay_per_hour: 0.0,
        ..storage(id, kind, fixed, var, life, max)
    };
    Catalog {
        discrete: vec![
            DiscreteTech {
                id: "chp_mt".into(),
                unit_capacity_kw: CHP_MODULE_KW,
                capital_cost_per_kw: 3500.0,
                lifetime_years: 25,
                electrical_efficiency: 0.41,
                heat_to_power_ratio: 1.2,
                fuel_price: GAS_PRICE,
                max_units: 8,
            },
            DiscreteTech {
                id: "chp_fc".into(),
                unit_capacity_kw: CHP_MODULE_KW,
                capital_cost_per_kw: 4000.0,
                lifetime_years: 25,
                electrical_efficiency: 0.37,
                heat_to_power_ratio: 1.0,
                fuel_price: GAS_PRICE,
                max_units: 4,
            },
        ],
        continuous: vec![
            storage("ess", ContinuousKind::Ess, 600.0, 500.0, 6, 2000.0),
            plain("pv", ContinuousKind::Pv, 3000.0, 2000.0, 25, 2000.0, 1.0),
            plain("elec_chiller", ContinuousKind::ElectricChiller, 0.0, 300.0, 20, 4000.0, CHILLER_COP),
            plain("abs_chiller", ContinuousKind::AbsorptionChiller, 20000.0, 250.0, 20, 3000.0, 0.7),
        ],
    }
}

fn zone_configs(time: &TimeStructure) -> Vec<DsmZoneConfig> {
    let hours_per_year = time.total_weight() * time.hours_per_day as f64;
    let mut zones = Vec::new();
    for node in &NODES {
        let (names, share): (&[&str], f64) = match node.building {
            Building::Office => (&["east", "west"], 0.5),
            Building::Apartment => (&["all"], 1.0),
        };
        let mean_ase = node.cooling_baseline.0 * 1000.0 / CHILLER_COP / hours_per_year * share;
        let m = mean_ase;
        let coupling = if names.len() > 1 { -0.005 * m } else { 0.0 };
        for name in names {
            let (occupied, setback) = (22.0, 27.0);
            let baseline_setpoints = (0..24)
                .map(|h| if occupancy(node.building, h) >= 0.5 { occupied } else { setback })
                .collect();
            zones.push(DsmZoneConfig {
                node: node.bus.into(),
                model: ZoneThermalModel {
                    zone_id: format!("{}-{name}", node.bus),
                    beta: [0.0, 1.0, round4(0.02 * m), round4(-0.078 * m), round4(0.018 * m), 0.0, 0.0, 0.0, round4(coupling)],
                    residual_sigma: 0.0,
                },
                comfort: ComfortSpec {
                    t_min: 22.0,
                    t_max: 27.0,
                    max_ramp: 1.0,
                    w1: 1.0,
                    w2: 1.0,
                    ep: 0.5,
                    occupants: (0.75 * m).round(),
                },
                occupancy: (0..24).map(|h| occupancy(node.building, h)).collect(),
                baseline_setpoints,
                cooling_share: share,
            });
        }
    }
    zones
}

/// The baseline (setback) scenario and the optimized-setpoint scenario. Both
/// carry the baseline cooling profiles; the second adds the zone models that
/// the pipeline uses to derive its cooling loads.
pub fn scenario_pair() -> (ScenarioFile, ScenarioFile) {
    let time = TimeStructure::monthly(25, 0.05);
    let mut profiles = BTreeMap::new();
    let grid_series = |f: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        (0..12).flat_map(|m| (0..24).map(move |h| (m, h))).map(|(m, h)| round4(f(m, h))).collect()
    };
    profiles.insert("solar".to_string(), ProfileSource::Inline(grid_series(&templates::solar)));
    profiles.insert("ambient".to_string(), ProfileSource::Inline(grid_series(&templates::ambient)));

    let mut buses = vec![Bus {
        id: SLACK.into(),
        kind: BusKind::Slack,
        electrical_load: None,
        cooling_load: None,
        heating_load: None,
        candidate_techs: vec![],
        installed: BTreeMap::new(),
    }];
    for node in &NODES {
        let elec = format!("elec_{}", node.bus);
        let cool = format!("cool_{}", node.bus);
        profiles.insert(elec.clone(), ProfileSource::Inline(electric_profile(&time, node).0));
        profiles.insert(cool.clone(), ProfileSource::Inline(cooling_profile(&time, node, node.cooling_baseline).0));
        let candidate_techs = node.candidates.iter().map(|t| t.to_string()).collect();
        let chiller_kw = (CHILLER_MARGIN * node.cooling_baseline.1 / 10.0).ceil() * 10.0;
        buses.push(Bus {
            id: node.bus.into(),
            kind: BusKind::Load,
            electrical_load: Some(elec),
            cooling_load: Some(cool),
            heating_load: None,
            candidate_techs,
            installed: BTreeMap::from([("elec_chiller".to_string(), chiller_kw)]),
        });
    }
    let cable = |from: &str, to: &str, heat: bool| Cable {
        from: from.into(),
        to: to.into(),
        length_m: CABLE_LENGTH_M,
        impedance_pu_per_m: IMPEDANCE_PU_PER_M,
        ampacity_pu: AMPACITY_PU,
        carries_heat: heat,
        heat_loss_per_m: if heat { HEAT_LOSS_PER_M } else { 0.0 },
    };
    let network = NetworkModel {
        buses,
        cables: vec![
            cable(SLACK, "n1", false),
            cable("n1", "n2", false),
            cable("n1", "n3", true),
            cable("n3", "n4", false),
        ],
        slack_bus: SLACK.into(),
        nominal_voltage_kv: 12.47,
        base_power_kva: 10_000.0,
        voltage_band: [0.95, 1.05],
    };
    let prices = grid_series(&energy_price);
    let hours = time.num_hours();
    let tariff = Tariff {
        energy_price: prices,
        export_price: vec![EXPORT_PRICE; hours],
        demand_charge: DEMAND_CHARGE,
        fuel_price_gas: GAS_PRICE,
        curtailment_penalty: 10.0,
    };
    let base = ScenarioFile {
        label: "Scenario I (setback control)".into(),
        network,
        catalog: catalog(),
        tariff,
        time: time.clone(),
        profiles,
        solar_profile: Some("solar".into()),
        ambient_profile: Some("ambient".into()),
        dsm: None,
    };
    let mut smart = base.clone();
    smart.label = "Scenario II (optimized setpoints)".into();
    smart.dsm = Some(DsmConfig {
        zones: zone_configs(&time),
        horizon: 6,
        grid_step: 0.5,
        max_sweeps: 20,
        chiller_cop: Some(CHILLER_COP),
    });
    (base, smart)
}
