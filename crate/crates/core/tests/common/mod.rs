//! Small hand-built sites for planner tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use gridsmith_core::model::*;

pub mod dsm_oracle;

pub const BASE_KVA: f64 = 10_000.0;

/// One typical day standing for the whole year.
pub fn one_day() -> TimeStructure {
    TimeStructure {
        typical_days: vec![TypicalDay {
            label: "year".into(),
            month: 1,
            weight: 365.0,
        }],
        hours_per_day: 24,
        planning_horizon_years: 25,
        discount_rate: 0.05,
    }
}

pub fn slack(id: &str) -> Bus {
    Bus {
        id: id.into(),
        kind: BusKind::Slack,
        electrical_load: None,
        cooling_load: None,
        heating_load: None,
        candidate_techs: vec![],
        installed: BTreeMap::new(),
    }
}

pub fn load_bus(id: &str) -> Bus {
    Bus {
        kind: BusKind::Load,
        ..slack(id)
    }
}

pub fn cable(from: &str, to: &str) -> Cable {
    Cable {
        from: from.into(),
        to: to.into(),
        length_m: 200.0,
        impedance_pu_per_m: 6e-6,
        ampacity_pu: 0.4,
        carries_heat: false,
        heat_loss_per_m: 0.0,
    }
}

pub fn continuous(id: &str, kind: ContinuousKind) -> ContinuousTech {
    ContinuousTech {
        id: id.into(),
        kind,
        fixed_cost: 0.0,
        variable_cost_per_kw: 100.0,
        lifetime_years: 20,
        max_capacity_kw: 5000.0,
        charge_efficiency: 1.0,
        discharge_efficiency: 1.0,
        decay_per_hour: 0.0,
        cop: 1.0,
        efficiency: 1.0,
        duration_hours: 2.0,
    }
}

pub fn chp(id: &str, unit_kw: f64, cost_per_kw: f64, eff: f64, hpr: f64, fuel: f64, max_units: u32) -> DiscreteTech {
    DiscreteTech {
        id: id.into(),
        unit_capacity_kw: unit_kw,
        capital_cost_per_kw: cost_per_kw,
        lifetime_years: 25,
        electrical_efficiency: eff,
        heat_to_power_ratio: hpr,
        fuel_price: fuel,
        max_units,
    }
}

/// Slack bus `pcc` feeding load bus `b1` through one cable, flat price,
/// no demand charge and no exports paid.
pub fn two_bus(load_kw: f64) -> Site {
    let time = one_day();
    let hours = time.num_hours();
    let mut b1 = load_bus("b1");
    b1.electrical_load = Some("load".into());
    Site {
        network: NetworkModel {
            buses: vec![slack("pcc"), b1],
            cables: vec![cable("pcc", "b1")],
            slack_bus: "pcc".into(),
            nominal_voltage_kv: 12.47,
            base_power_kva: BASE_KVA,
            voltage_band: [0.95, 1.05],
        },
        catalog: Catalog::default(),
        tariff: Tariff {
            energy_price: vec![0.1; hours],
            export_price: vec![0.0; hours],
            demand_charge: 0.0,
            fuel_price_gas: 0.03,
            curtailment_penalty: 10.0,
        },
        time,
        profiles: BTreeMap::from([("load".to_string(), LoadProfile(vec![load_kw; hours]))]),
        solar_profile: None,
        ambient_profile: None,
    }
}

pub fn set_profile(site: &mut Site, name: &str, values: Vec<f64>) {
    site.profiles.insert(name.to_string(), LoadProfile(values));
}
