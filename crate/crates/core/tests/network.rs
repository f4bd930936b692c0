mod common;

use common::*;
use gridsmith_core::grid::{emit_ampacity_rows, voltage_drop, AssemblyError, ElectricVarMap};
use gridsmith_core::model::{Catalog, ContinuousKind, NetworkModel, Site};
use gridsmith_core::planner::{assemble_plan_milp, plan, solve_plan, PlanError};
use gridsmith_core::thermal::{emit_storage_dynamics, StorageVars, ThermalVarMap};
use gridsmith_core::capacity::Capacity;
use gridsmith_solver::{solve_lp, solve_milp, LinearProgram, MilpOptions, Sense, SimplexOptions, Status};

fn solve(site: &Site) -> gridsmith_core::planner::PlanResult {
    plan(site, &MilpOptions::default()).unwrap().1
}

fn all_close(v: &[f64], expected: f64, tol: f64) -> bool {
    v.iter().all(|x| (x - expected).abs() <= tol)
}

#[test]
fn lone_load_is_served_by_import() {
    let r = solve(&two_bus(100.0));
    assert!(all_close(r.dispatch.get("pcc", "import").unwrap(), 100.0, 1e-9));
    assert!(all_close(r.dispatch.get("pcc-b1", "flow").unwrap(), 100.0 / BASE_KVA, 1e-12));
    assert_eq!(r.costs.investment(), 0.0);
}

#[test]
fn zero_loads_cost_nothing() {
    let mut site = two_bus(0.0);
    site.catalog.continuous.push(continuous("pv", ContinuousKind::Pv));
    site.network.buses[1].candidate_techs.push("pv".into());
    set_profile(&mut site, "sun", vec![0.5; 24]);
    site.solar_profile = Some("sun".into());
    let r = solve(&site);
    assert!(r.costs.total.abs() < 1e-9);
    assert!(r.portfolio.entries.iter().all(|e| e.new_capacity == 0.0));
    assert!(all_close(r.dispatch.get("b1", "voltage").unwrap(), 1.0, 1e-12));
}

#[test]
fn voltage_drop_follows_impedance_times_length() {
    let c = cable("pcc", "b1");
    let oracle = 6e-6 * 200.0 * 0.2;
    assert!((voltage_drop(&c, 0.2) - oracle).abs() < 1e-15);
    assert!((oracle - 2.4e-4).abs() < 1e-15);
    // Same drop in a solved dispatch: 0.2 pu is 2000 kW on a 10 MVA base.
    let r = solve(&two_bus(2000.0));
    assert!(all_close(r.dispatch.get("b1", "voltage").unwrap(), 1.0 - oracle, 1e-12));
}

#[test]
fn flow_at_ampacity_keeps_voltage_in_band() {
    let r = solve(&two_bus(4000.0));
    assert!(all_close(r.dispatch.get("pcc-b1", "flow").unwrap(), 0.4, 1e-12));
    let v = r.dispatch.get("b1", "voltage").unwrap();
    assert!(all_close(v, 1.0 - 6e-6 * 200.0 * 0.4, 1e-12));
    assert!(v.iter().all(|&x| (0.95..=1.05).contains(&x)));
    assert!(r.costs.curtailment.abs() < 1e-9);
}

#[test]
fn flow_beyond_ampacity_is_infeasible() {
    // 4000 kW is exactly 0.4 pu, so pinning the flow there is feasible.
    let mut p = assemble_plan_milp(&two_bus(4000.0)).unwrap();
    let f = p.electric.flow[0][0];
    p.milp.lp.lower[f.0] = 0.41;
    assert_eq!(solve_milp(&p.milp, &MilpOptions::default()).status, Status::Infeasible);
    p.milp.lp.lower[f.0] = 0.4;
    assert_eq!(solve_milp(&p.milp, &MilpOptions::default()).status, Status::Optimal);
}

#[test]
fn islanded_bus_has_no_ampacity_rows() {
    let site = two_bus(0.0);
    let net = NetworkModel {
        buses: vec![site.network.buses[0].clone()],
        cables: vec![],
        ..site.network.clone()
    };
    let mut lp = LinearProgram::new(Sense::Minimize);
    let vars = ElectricVarMap::register(&mut lp, &net, &Catalog::default(), &site.time, &[vec![0.0; 24]]).unwrap();
    assert!(emit_ampacity_rows(&mut lp, &net, &vars).unwrap().is_empty());
}

/// Load behind a long cable so the voltage band, not ampacity, limits import.
fn long_feeder(band: [f64; 2]) -> Site {
    let mut site = two_bus(3000.0);
    site.network.cables[0].length_m = 20_000.0;
    site.network.voltage_band = band;
    site
}

#[test]
fn dropping_voltage_band_rows_never_raises_cost() {
    let tight = long_feeder([0.97, 1.03]);
    let mut p = assemble_plan_milp(&tight).unwrap();
    let banded = solve_plan(&p, &MilpOptions::default()).unwrap();
    p.milp.lp.rows.retain(|r| !r.name.starts_with("vmin_") && !r.name.starts_with("vmax_"));
    let free = solve_plan(&p, &MilpOptions::default()).unwrap();
    assert!(free.stats.objective <= banded.stats.objective + 1e-9);
    // The band binds here: 20 km at 0.3 pu would sag 3.6%.
    assert!(banded.costs.curtailment > 0.0);
    assert!(free.costs.curtailment.abs() < 1e-9);
}

#[test]
fn reversing_cables_negates_flows() {
    let mut site = two_bus(250.0);
    site.network.buses.push(load_bus("b2"));
    site.network.buses[2].electrical_load = Some("load2".into());
    set_profile(&mut site, "load2", (0..24).map(|h| 50.0 + h as f64).collect());
    site.network.cables.push(cable("b1", "b2"));
    let a = solve(&site);
    let mut flipped = site.clone();
    for c in &mut flipped.network.cables {
        std::mem::swap(&mut c.from, &mut c.to);
    }
    let b = solve(&flipped);
    assert!((a.stats.objective - b.stats.objective).abs() < 1e-9);
    for (fwd, rev) in [("pcc-b1", "b1-pcc"), ("b1-b2", "b2-b1")] {
        let fa = a.dispatch.get(fwd, "flow").unwrap();
        let fb = b.dispatch.get(rev, "flow").unwrap();
        assert!(fa.iter().zip(fb).all(|(x, y)| (x + y).abs() < 1e-12));
    }
}

#[test]
fn chp_heat_follows_heat_to_power_ratio() {
    let mut site = two_bus(0.0);
    site.catalog.discrete.push(chp("mt", 1000.0, 3500.0, 0.4, 1.2, 0.02, 2));
    site.network.buses[1].installed.insert("mt".into(), 2000.0);
    site.network.buses[1].heating_load = Some("heat".into());
    set_profile(&mut site, "heat", vec![2400.0; 24]);
    site.network.cables[0].ampacity_pu = 1.0;
    let r = solve(&site);
    let gen = r.dispatch.get("b1", "gen:mt").unwrap();
    assert!(all_close(gen, 2000.0, 1e-6));
    assert!(gen.iter().all(|g| (1.2 * g - 2400.0).abs() < 1e-6));
    assert!(all_close(r.dispatch.get("b1", "heat_dump").unwrap(), 0.0, 1e-6));
    assert!(all_close(r.dispatch.get("pcc", "export").unwrap(), 2000.0, 1e-6));
}

#[test]
fn heat_link_loses_its_fraction() {
    let mut site = two_bus(0.0);
    site.network.buses.push(load_bus("b2"));
    let mut link = cable("b1", "b2");
    link.length_m = 1000.0;
    link.carries_heat = true;
    link.heat_loss_per_m = 1e-4;
    site.network.cables.push(link);
    let mut boiler = continuous("boiler", ContinuousKind::Boiler);
    boiler.efficiency = 0.85;
    site.catalog.continuous.push(boiler);
    site.network.buses[1].installed.insert("boiler".into(), 500.0);
    site.network.buses[2].heating_load = Some("heat".into());
    set_profile(&mut site, "heat", vec![90.0; 24]);
    let r = solve(&site);
    assert!(all_close(r.dispatch.get("b1-b2", "heat_forward").unwrap(), 100.0, 1e-6));
    assert!(all_close(r.dispatch.get("b1", "boiler:boiler").unwrap(), 100.0, 1e-6));
    // Gas for 100 kW_th at 85% efficiency, all year.
    let fuel = 100.0 / 0.85 * 0.03 * 8760.0;
    assert!((r.costs.c_gen - fuel).abs() < 1e-6 * fuel);
}

#[test]
fn electric_chiller_draw_is_cooling_over_cop() {
    let mut site = two_bus(0.0);
    let mut ch = continuous("chiller", ContinuousKind::ElectricChiller);
    ch.cop = 3.0;
    site.catalog.continuous.push(ch);
    site.network.buses[1].installed.insert("chiller".into(), 400.0);
    site.network.buses[1].cooling_load = Some("cool".into());
    let cooling: Vec<f64> = (0..24).map(|h| if h == 14 { 300.0 } else { 0.0 }).collect();
    set_profile(&mut site, "cool", cooling.clone());
    let r = solve(&site);
    let draw = r.dispatch.get("b1", "chiller:chiller").unwrap();
    for h in 0..24 {
        assert!((draw[h] - cooling[h] / 3.0).abs() < 1e-9, "hour {h}: {}", draw[h]);
    }
}

#[test]
fn cooling_beyond_chiller_capacity_is_reported_infeasible() {
    let mut site = two_bus(0.0);
    site.catalog.continuous.push(continuous("chiller", ContinuousKind::ElectricChiller));
    site.network.buses[1].installed.insert("chiller".into(), 100.0);
    site.network.buses[1].cooling_load = Some("cool".into());
    set_profile(&mut site, "cool", vec![500.0; 24]);
    match plan(&site, &MilpOptions::default()) {
        Err(PlanError::Infeasible(msg)) => assert!(msg.contains("b1"), "{msg}"),
        other => panic!("expected infeasibility, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn cooling_without_any_chiller_is_an_assembly_error() {
    let mut site = two_bus(0.0);
    site.network.buses[1].cooling_load = Some("cool".into());
    set_profile(&mut site, "cool", vec![10.0; 24]);
    assert!(matches!(
        assemble_plan_milp(&site),
        Err(PlanError::Assembly(AssemblyError::MissingCop { .. }))
    ));
}

#[test]
fn negative_heat_loss_is_rejected() {
    let mut site = two_bus(0.0);
    site.network.cables[0].carries_heat = true;
    site.network.cables[0].heat_loss_per_m = -1e-4;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let zeros = vec![vec![0.0; 24]; 2];
    let err = ThermalVarMap::register(&mut lp, &site.network, &site.catalog, &site.time, &zeros, &zeros).unwrap_err();
    assert!(matches!(err, AssemblyError::BadLoss { .. }));
    assert!(!site.validate().is_ok());
}

/// Storage rows for one day with fixed capacity, solved for a feasible point.
fn storage_lp(eta_c: f64, decay: f64, fix: impl Fn(&mut LinearProgram, &StorageVars)) -> (LinearProgram, StorageVars) {
    let time = one_day();
    let mut tech = continuous("ess", ContinuousKind::Ess);
    tech.charge_efficiency = eta_c;
    tech.decay_per_hour = decay;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let vars = StorageVars::register(&mut lp, "b1", "ess", &time).unwrap();
    emit_storage_dynamics(&mut lp, &vars, &tech, &time, &Capacity::fixed(100.0)).unwrap();
    fix(&mut lp, &vars);
    (lp, vars)
}

fn pin(lp: &mut LinearProgram, v: gridsmith_solver::VarId, value: f64) {
    lp.lower[v.0] = value;
    lp.upper[v.0] = value;
}

#[test]
fn idle_storage_holds_its_charge() {
    let (mut lp, vars) = storage_lp(0.95, 0.0, |lp, s| {
        for h in 0..24 {
            pin(lp, s.charge[h], 0.0);
            pin(lp, s.discharge[h], 0.0);
        }
    });
    lp.objective[vars.soc[0].0] = -1.0;
    let sol = solve_lp(&lp, &SimplexOptions::default());
    assert_eq!(sol.status, Status::Optimal);
    let soc: Vec<f64> = vars.soc.iter().map(|&v| sol.value(v)).collect();
    assert!(all_close(&soc, 100.0, 1e-9));
}

#[test]
fn charging_ten_at_95_percent_stores_nine_and_a_half() {
    let (lp, vars) = storage_lp(0.95, 0.0, |lp, s| {
        for h in 0..24 {
            pin(lp, s.charge[h], if h == 3 { 10.0 } else { 0.0 });
            pin(lp, s.discharge[h], if h == 20 { 9.5 } else { 0.0 });
        }
        pin(lp, s.soc[0], 0.0);
    });
    let sol = solve_lp(&lp, &SimplexOptions::default());
    assert_eq!(sol.status, Status::Optimal);
    let soc = |h: usize| sol.value(vars.soc[h]);
    assert!((soc(4) - soc(3) - 9.5).abs() < 1e-12);
    assert!(soc(21).abs() < 1e-12 && soc(0).abs() < 1e-12);
}
