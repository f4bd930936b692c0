//! Independent re-statements of the setpoint objective, and fixture inputs
//! for the coupled-zone optimizer.

use gridsmith_core::dsm::*;
use gridsmith_core::fixture::scenario_pair;
use gridsmith_core::pipeline::apply_dsm;

pub fn hp_poly(t: f64) -> f64 {
    (0.16475 * t - 0.00582 * t.powi(2) + 0.00006 * t.powi(3) - 0.46853).clamp(0.0, 1.0)
}

/// Objective of one zone's trajectory, written out term by term.
pub fn single_zone_cost(z: &ZoneInput, prices: &[f64], plan: &[f64]) -> f64 {
    let b = &z.model.beta;
    let c = &z.comfort;
    let mut total = 0.0;
    for t in 0..plan.len() {
        let lag = |k: usize| if t >= k { plan[t - k] } else { z.history[k - t - 1] };
        let f = &z.forecast[t];
        let ase = b[0]
            + b[1] * f.energy_rate
            + b[2] * f.ambient
            + b[3] * plan[t]
            + b[4] * lag(1)
            + b[5] * lag(2)
            + b[6] * lag(3)
            + b[7] * f.tau;
        total += c.w1 * prices[t] * ase.max(0.0) + c.w2 * (1.0 - hp_poly(plan[t])) * c.ep * c.occupants * f.occupancy;
    }
    total
}

pub fn fixture_building_inputs(node: &str, hour_of_day: usize) -> (Vec<ZoneInput>, Vec<f64>) {
    let (_, smart) = scenario_pair();
    let sc = smart.resolve(std::path::Path::new(".")).unwrap();
    let cfg = sc.dsm.clone().unwrap();
    let (_, result) = apply_dsm(&sc).unwrap();
    let result = result.unwrap();
    let time = &sc.site.time;
    let ambient = sc.site.profile("ambient").unwrap().values().to_vec();
    let day_start = 6 * 24;
    let window: Vec<usize> = (0..6).map(|s| day_start + (hour_of_day + s) % 24).collect();
    let mut inputs = Vec::new();
    for (z, zc) in cfg.zones.iter().enumerate() {
        if zc.node != node {
            continue;
        }
        inputs.push(ZoneInput {
            model: zc.model.clone(),
            comfort: zc.comfort.clone(),
            history: [zc.comfort.midpoint(); 3],
            forecast: window
                .iter()
                .map(|&w| StepForecast {
                    energy_rate: result.energy_rate[z][w],
                    ambient: ambient[w],
                    tau: time.hour_of_day(w) as f64,
                    occupancy: zc.occupancy[time.hour_of_day(w)],
                })
                .collect(),
        });
    }
    let prices = window.iter().map(|&w| sc.site.tariff.energy_price[w]).collect();
    (inputs, prices)
}
