mod common;

use common::*;
use gridsmith_core::model::ContinuousKind;
use gridsmith_core::planner::*;
use gridsmith_solver::MilpOptions;

fn crf_oracle(r: f64, n: i32) -> f64 {
    let g = (1.0 + r).powi(n);
    r * g / (g - 1.0)
}

#[test]
fn capital_recovery_factor_values() {
    assert!((capital_recovery_factor(0.0, 25) - 1.0 / 25.0).abs() < 1e-15);
    let crf = capital_recovery_factor(0.05, 25);
    assert!((crf - crf_oracle(0.05, 25)).abs() < 1e-12);
    assert!((crf - 0.070952).abs() < 1e-6);
    assert!((annualize(1.0e6, 25, 0.0).unwrap() - 40_000.0).abs() < 1e-9);
    assert!((annualize(7.0e6, 25, 0.05).unwrap() - 496_667.0).abs() < 1.0);
    // One 2000 kW microturbine at 3500 $/kW.
    assert!((annualize(2000.0 * 3500.0, 25, 0.05).unwrap() - 7.0e6 * crf_oracle(0.05, 25)).abs() < 1e-6);
}

#[test]
fn annualize_rejects_bad_arguments() {
    assert!(annualize(-1.0, 10, 0.05).is_err());
    assert!(annualize(1.0, 0, 0.05).is_err());
    assert!(annualize(1.0, 10, -0.01).is_err());
}

#[test]
fn empty_catalog_means_pure_import() {
    let (_, r) = plan(&two_bus(100.0), &MilpOptions::default()).unwrap();
    assert_eq!(r.costs.c_invd, 0.0);
    assert_eq!(r.costs.c_invc, 0.0);
    let energy = 100.0 * 0.1 * 8760.0;
    assert!((r.costs.c_pur - energy).abs() < 1e-6);
    assert!((r.costs.total - energy).abs() < 1e-6);
}

/// Load bus with an existing 1000 kW CHP whose fuel costs 0.05 $/kWh_e.
fn chp_site(export_price: f64) -> gridsmith_core::model::Site {
    let mut site = two_bus(500.0);
    site.catalog.discrete.push(chp("mt", 250.0, 1000.0, 0.4, 0.0, 0.02, 4));
    site.network.buses[1].installed.insert("mt".into(), 1000.0);
    site.tariff.export_price = vec![export_price; 24];
    site
}

#[test]
fn no_export_without_export_price() {
    let (_, r) = plan(&chp_site(0.0), &MilpOptions::default()).unwrap();
    assert!(r.dispatch.get("pcc", "export").unwrap().iter().all(|&e| e.abs() < 1e-9));
    assert!(r.dispatch.get("b1", "gen:mt").unwrap().iter().all(|&g| (g - 500.0).abs() < 1e-6));
    // Control: once exports pay more than fuel, the unit runs flat out.
    let (_, r) = plan(&chp_site(0.06), &MilpOptions::default()).unwrap();
    assert!(r.dispatch.get("pcc", "export").unwrap().iter().all(|&e| (e - 500.0).abs() < 1e-6));
}

/// Annual cost of serving a flat load with `k` CHP modules, by hand.
fn chp_cost_oracle(k: u32, unit: f64, capital_per_kw: f64, load: f64, fuel_per_kwh: f64, price: f64) -> f64 {
    let cap = k as f64 * unit;
    let own = cap.min(load);
    cap * capital_per_kw * crf_oracle(0.05, 25) + 8760.0 * (own * fuel_per_kwh + (load - own) * price)
}

#[test]
fn chp_is_built_when_it_beats_the_grid() {
    for capital in [1000.0, 6000.0, 7000.0] {
        let mut site = two_bus(500.0);
        site.catalog.discrete.push(chp("mt", 250.0, capital, 0.4, 0.0, 0.02, 4));
        site.network.buses[1].candidate_techs.push("mt".into());
        let (_, r) = plan(&site, &MilpOptions::default()).unwrap();
        let costs: Vec<f64> = (0..=4).map(|k| chp_cost_oracle(k, 250.0, capital, 500.0, 0.05, 0.1)).collect();
        let best = (0..=4).min_by(|&a, &b| costs[a].total_cmp(&costs[b])).unwrap();
        let built = r.portfolio.new_capacity("b1", "mt");
        assert_eq!(built, best as f64 * 250.0, "capital {capital}");
        assert!((r.costs.total - costs[best]).abs() < 1e-6 * costs[best]);
        // Breakeven: 0.05 $/kWh saved over 8760 h against the annualized price of a kW.
        let worth_it = 0.05 * 8760.0 > capital * crf_oracle(0.05, 25);
        assert_eq!(best == 2, worth_it, "capital {capital}");
    }
}

#[test]
fn zero_load_plan_is_empty() {
    let mut site = two_bus(0.0);
    site.catalog.discrete.push(chp("mt", 250.0, 1000.0, 0.4, 0.0, 0.02, 4));
    site.catalog.continuous.push(continuous("ess", ContinuousKind::Ess));
    site.network.buses[1].candidate_techs = vec!["mt".into(), "ess".into()];
    site.tariff.demand_charge = 15.0;
    let (_, r) = plan(&site, &MilpOptions::default()).unwrap();
    assert!(r.costs.total.abs() < 1e-9);
    assert!(r.portfolio.entries.iter().all(|e| e.new_capacity == 0.0));
}

fn storage_site(load: Vec<f64>) -> gridsmith_core::model::Site {
    let mut site = two_bus(0.0);
    set_profile(&mut site, "load", load);
    let mut ess = continuous("ess", ContinuousKind::Ess);
    ess.fixed_cost = 500.0;
    ess.variable_cost_per_kw = 50.0;
    ess.charge_efficiency = 0.95;
    ess.discharge_efficiency = 0.95;
    site.catalog.continuous.push(ess);
    site.catalog.continuous.push(continuous("pv", ContinuousKind::Pv));
    site.network.buses[1].candidate_techs = vec!["ess".into(), "pv".into()];
    set_profile(&mut site, "sun", (0..24).map(|h| if (7..18).contains(&h) { 0.6 } else { 0.0 }).collect());
    site.solar_profile = Some("sun".into());
    site.tariff.energy_price = (0..24).map(|h| if (12..20).contains(&h) { 0.3 } else { 0.08 }).collect();
    site.tariff.demand_charge = 12.0;
    site
}

#[test]
fn smaller_loads_never_cost_more() {
    let big: Vec<f64> = (0..24).map(|h| 300.0 + 40.0 * ((h as f64) / 3.0).sin().abs()).collect();
    let small: Vec<f64> = big.iter().enumerate().map(|(h, v)| v * if h % 3 == 0 { 0.8 } else { 1.0 }).collect();
    let (pa, a) = plan(&storage_site(big), &MilpOptions::default()).unwrap();
    let (_, b) = plan(&storage_site(small), &MilpOptions::default()).unwrap();
    assert!(b.stats.objective <= a.stats.objective + 1e-9);
    let cmp = compare_scenarios((&pa.site, &a), (&pa.site, &b)).unwrap();
    assert!(cmp.total_reduction_pct >= 0.0);
}

#[test]
fn costs_recompute_from_dispatch() {
    let load: Vec<f64> = (0..24).map(|h| 200.0 + 10.0 * h as f64).collect();
    let (p, r) = plan(&storage_site(load), &MilpOptions::default()).unwrap();
    let c = r.costs;
    let sum = c.c_invd + c.c_invc + c.c_pur + c.c_dem + c.c_gen - c.c_exp + c.curtailment;
    assert!((c.total - sum).abs() < 1e-6);
    for v in [c.c_invd, c.c_invc, c.c_pur, c.c_dem, c.c_gen, c.c_exp, c.curtailment] {
        assert!(v >= 0.0);
    }
    assert!((c.total - r.stats.objective).abs() <= 1e-6 * (1.0 + r.stats.objective.abs()));
    let again = cost_breakdown(&p.site, &r.portfolio, &r.dispatch);
    assert_eq!(again, c);
    let phys = p.physics(&r.values, &r.portfolio);
    assert!(phys.demand_peak < 1e-6);
    assert!(r.portfolio.new_capacity("b1", "ess") > 0.0, "storage should pay off on this tariff");
}

fn costs(total: f64, investment: f64) -> CostBreakdown {
    CostBreakdown {
        c_invd: investment,
        c_pur: total - investment,
        total,
        ..Default::default()
    }
}

#[test]
fn reported_reductions() {
    let cmp = Comparison::from_costs(costs(242_711.0, 79_420.0), costs(216_807.0, 68_461.0));
    assert!((cmp.total_reduction_pct - 10.67).abs() <= 0.01, "{}", cmp.total_reduction_pct);
    assert!((cmp.investment_reduction_pct - 13.79).abs() <= 0.01, "{}", cmp.investment_reduction_pct);
    let same = Comparison::from_costs(costs(1.0, 0.5), costs(1.0, 0.5));
    assert_eq!(same.total_reduction_pct, 0.0);
    assert!(same.rows().iter().all(|r| r.3 == 0.0));
}

#[test]
fn comparing_different_tariffs_is_refused() {
    let (pa, a) = plan(&two_bus(100.0), &MilpOptions::default()).unwrap();
    let mut other = two_bus(100.0);
    other.tariff.demand_charge = 5.0;
    let (pb, b) = plan(&other, &MilpOptions::default()).unwrap();
    assert!(matches!(compare_scenarios((&pa.site, &a), (&pb.site, &b)), Err(PlanError::Mismatch(_))));
    let same = compare_scenarios((&pa.site, &a), (&pa.site, &a)).unwrap();
    assert_eq!(same.total_reduction_pct, 0.0);
}

#[test]
fn discrete_capacity_is_whole_units() {
    let mut site = two_bus(610.0);
    site.catalog.discrete.push(chp("mt", 250.0, 1000.0, 0.4, 0.0, 0.02, 4));
    site.network.buses[1].candidate_techs.push("mt".into());
    let (p, r) = plan(&site, &MilpOptions::default()).unwrap();
    let e = r.portfolio.entries.iter().find(|e| e.tech == "mt").unwrap();
    let units = e.units.unwrap();
    assert_eq!(e.new_capacity, units as f64 * 250.0);
    assert!(p.physics(&r.values, &r.portfolio).integrality < 1e-9);
}
