//! `gridsmith`: fit zone models, optimize setpoints, plan and compare
//! microgrid scenarios from JSON scenario files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridsmith_core::dsm::{self, DsmError, ZoneThermalModel, COEFF_NAMES};
use gridsmith_core::model::{annual_summary, LoadProfile};
use gridsmith_core::pipeline::{apply_dsm, run_scenario, PipelineError, ScenarioRun};
use gridsmith_core::planner::{plan_solver_options, Comparison, PlanError};
use gridsmith_core::reports::{self, ReportError};
use gridsmith_core::scenario::{Scenario, ScenarioError};
use gridsmith_core::{fixture, planner};

#[derive(Parser)]
#[command(name = "gridsmith", version, about = "Microgrid DER sizing with demand-side setpoint optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct DsmOverrides {
    /// Look-ahead steps for setpoint optimization (overrides the scenario).
    #[arg(long)]
    horizon: Option<usize>,
    /// Setpoint grid spacing in °C (overrides the scenario).
    #[arg(long)]
    grid_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-zone cooling models from a training CSV, or from synthetic
    /// samples drawn around the zones of a scenario.
    FitDsm {
        /// Training CSV (zone,hour,T_inf,E_rate,T,T_lag1,T_lag2,T_lag3,tau,other_sum,ase).
        #[arg(long, conflicts_with = "scenario")]
        samples: Option<PathBuf>,
        /// Scenario whose DSM zones generate synthetic samples; defaults to the
        /// bundled campus fixture.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Seed for synthetic sample generation.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Synthetic samples per zone.
        #[arg(long, default_value_t = 2000)]
        count: usize,
        /// Noise standard deviation; defaults to each zone's residual sigma.
        #[arg(long)]
        noise: Option<f64>,
        /// Where to save the generated samples.
        #[arg(long)]
        samples_out: Option<PathBuf>,
        /// Output JSON with the fitted models (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize zone setpoints for a scenario and write the resulting loads.
    Dsm {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: DsmOverrides,
    },
    /// Size and dispatch DERs for one scenario.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write the assembled MILP as `plan.lp`.
        #[arg(long)]
        dump_lp: bool,
        #[command(flatten)]
        overrides: DsmOverrides,
    },
    /// Compare two costs.csv files (first row of each).
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Output comparison CSV (stdout table only if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan two scenarios and compare them.
    Pipeline {
        /// Baseline scenario, then the scenario to compare against it.
        #[arg(long, num_args = 2, required = true, value_names = ["FIRST", "SECOND"])]
        scenario: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        dump_lp: bool,
        #[command(flatten)]
        overrides: DsmOverrides,
    },
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

const EXIT_OTHER: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_LIMIT: u8 = 4;

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn plan_code(e: &PlanError) -> u8 {
    match e {
        PlanError::Infeasible(_) => EXIT_INFEASIBLE,
        PlanError::SolverLimit(_) => EXIT_LIMIT,
        _ => EXIT_VALIDATION,
    }
}

fn dsm_code(e: &DsmError) -> u8 {
    match e {
        DsmError::Infeasible { .. } => EXIT_INFEASIBLE,
        DsmError::AtHour { source, .. } => dsm_code(source),
        _ => EXIT_VALIDATION,
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::new(EXIT_VALIDATION, e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let code = match e {
            ReportError::Format { .. } | ReportError::Csv { .. } => EXIT_VALIDATION,
            ReportError::Io { .. } => EXIT_OTHER,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<DsmError> for Failure {
    fn from(e: DsmError) -> Self {
        Failure::new(dsm_code(&e), format!("dsm: {e}"))
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Scenario(_) => EXIT_VALIDATION,
            PipelineError::Dsm { source, .. } => dsm_code(source),
            PipelineError::Plan { source, .. } | PipelineError::Compare(source) => plan_code(source),
            PipelineError::Report(_) => EXIT_OTHER,
        };
        Failure::new(code, format!("{} stage failed: {e}", e.stage()))
    }
}

fn load_scenario(path: &Path, overrides: &DsmOverrides) -> Result<Scenario, Failure> {
    let mut s = Scenario::load(path)?;
    if let Some(cfg) = &mut s.dsm {
        if let Some(h) = overrides.horizon {
            cfg.horizon = h;
        }
        if let Some(g) = overrides.grid_step {
            cfg.grid_step = g;
        }
    }
    Ok(s)
}

fn fit_dsm(
    samples: Option<PathBuf>,
    scenario: Option<PathBuf>,
    seed: u64,
    count: usize,
    noise: Option<f64>,
    samples_out: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let data = match samples {
        Some(path) => dsm::read_samples_csv(&path)?,
        None => {
            let cfg = match scenario {
                Some(path) => Scenario::load(&path)?.dsm,
                None => fixture::scenario_pair().1.dsm,
            }
            .ok_or_else(|| Failure::new(EXIT_VALIDATION, "scenario has no `dsm` section to sample from"))?;
            cfg.zones
                .iter()
                .enumerate()
                .flat_map(|(i, z)| {
                    let sigma = noise.unwrap_or(z.model.residual_sigma);
                    dsm::synthetic_samples(&z.model, count, sigma, seed.wrapping_add(i as u64))
                })
                .collect()
        }
    };
    if let Some(path) = samples_out {
        dsm::write_samples_csv(&path, &data)?;
    }
    let mut zones: Vec<&str> = data.iter().map(|s| s.zone.as_str()).collect();
    zones.sort_unstable();
    zones.dedup();
    let mut models: Vec<ZoneThermalModel> = Vec::new();
    for zone in zones {
        let rows: Vec<_> = data.iter().filter(|s| s.zone == zone).cloned().collect();
        let m = dsm::fit_zone_model(zone, &rows).map_err(|e| Failure::new(dsm_code(&e), format!("zone `{zone}`: {e}")))?;
        eprintln!("{zone}: {} samples, residual sigma {:.4}", rows.len(), m.residual_sigma);
        for (name, b) in COEFF_NAMES.iter().zip(m.beta) {
            eprintln!("  {name:<16} {b:>12.6}");
        }
        models.push(m);
    }
    let json = serde_json::to_string_pretty(&models).expect("models serialize");
    match out {
        Some(path) => reports::write_text(&path, &(json + "\n"))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn write_cooling_csv(path: &Path, baseline: &[(String, LoadProfile)], run: &dsm::AnnualDsmResult) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::new(EXIT_OTHER, format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["node", "hour", "baseline_kw", "optimized_kw", "chiller_kw"]).map_err(io)?;
    for (node, base) in baseline {
        let (Some(opt), Some(elec)) = (run.cooling.get(node), run.chiller_electric.get(node)) else {
            continue;
        };
        for h in 0..base.0.len() {
            w.write_record([
                node.clone(),
                h.to_string(),
                format!("{:.6}", base.0[h]),
                format!("{:.6}", opt.0[h]),
                format!("{:.6}", elec.0[h]),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Failure::new(EXIT_OTHER, format!("{}: {e}", path.display())))
}

fn write_setpoints_csv(path: &Path, scenario: &Scenario, run: &dsm::AnnualDsmResult) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::new(EXIT_OTHER, format!("{}: {e}", path.display()));
    let zones = &scenario.dsm.as_ref().expect("dsm section").zones;
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["zone", "node", "hour", "setpoint"]).map_err(io)?;
    for (z, series) in zones.iter().zip(&run.setpoints) {
        for (h, t) in series.iter().enumerate() {
            w.write_record([z.model.zone_id.clone(), z.node.clone(), h.to_string(), format!("{t:.3}")])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Failure::new(EXIT_OTHER, format!("{}: {e}", path.display())))
}

fn baseline_cooling(scenario: &Scenario) -> Vec<(String, LoadProfile)> {
    let site = &scenario.site;
    site.network
        .buses
        .iter()
        .filter_map(|b| {
            let name = b.cooling_load.as_ref()?;
            Some((b.id.clone(), site.profiles.get(name)?.clone()))
        })
        .collect()
}

fn run_dsm(scenario: PathBuf, out_dir: PathBuf, overrides: DsmOverrides) -> Result<(), Failure> {
    let s = load_scenario(&scenario, &overrides)?;
    if s.dsm.is_none() {
        return Err(Failure::new(EXIT_VALIDATION, format!("{}: no `dsm` section", scenario.display())));
    }
    let (site, result) = apply_dsm(&s)?;
    let result = result.expect("dsm section present");
    reports::create_dir(&out_dir)?;
    let baseline = baseline_cooling(&s);
    write_cooling_csv(&out_dir.join("cooling.csv"), &baseline, &result)?;
    write_setpoints_csv(&out_dir.join("setpoints.csv"), &s, &result)?;
    println!("{:<8} {:>16} {:>16}", "node", "baseline MWh_th", "optimized MWh_th");
    for (node, base) in &baseline {
        if let Some(opt) = result.cooling.get(node) {
            let usage = |p: &LoadProfile| annual_summary(p, &site.time).map(|s| s.usage_mwh).unwrap_or(f64::NAN);
            println!("{node:<8} {:>16.1} {:>16.1}", usage(base), usage(opt));
        }
    }
    println!("max Gauss-Seidel sweeps: {}", result.max_sweeps_used);
    Ok(())
}

/// Writes dispatch CSV, per-node charts and optionally the LP for one run.
fn write_run(dir: &Path, run: &ScenarioRun, dump_lp: bool) -> Result<(), Failure> {
    reports::create_dir(dir)?;
    reports::write_dispatch_csv(&dir.join("dispatch.csv"), &run.result.dispatch)?;
    let day = reports::showcase_day(&run.site.time);
    for bus in run.site.network.buses.iter().filter(|b| !b.is_slack()) {
        let svg = reports::dispatch_svg(&run.result.dispatch, &bus.id, &run.site, day);
        reports::write_text(&dir.join(format!("dispatch_{}.svg", bus.id)), &svg)?;
    }
    if dump_lp {
        let path = dir.join("plan.lp");
        let file = fs::File::create(&path).map_err(|e| Failure::new(EXIT_OTHER, format!("{}: {e}", path.display())))?;
        gridsmith_solver::write_lp(&run.problem.milp, std::io::BufWriter::new(file))
            .map_err(|e| Failure::new(EXIT_OTHER, format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn print_run(run: &ScenarioRun) {
    let r = &run.result;
    println!(
        "{}: total {:.0} $/yr (investment {:.0}, operation {:.0}), {} B&B nodes, {:.1}s",
        run.label,
        r.costs.total,
        r.costs.investment(),
        r.costs.operation(),
        r.stats.nodes,
        r.stats.elapsed.as_secs_f64()
    );
    for e in r.portfolio.entries.iter().filter(|e| e.new_capacity > 0.0) {
        println!("  {:<6} {:<12} {:>10.1} kW", e.node, e.tech, e.new_capacity);
    }
}

fn run_plan(scenario: PathBuf, out_dir: PathBuf, dump_lp: bool, overrides: DsmOverrides) -> Result<(), Failure> {
    let s = load_scenario(&scenario, &overrides)?;
    let run = run_scenario(&s, &plan_solver_options())?;
    write_run(&out_dir, &run, dump_lp)?;
    reports::write_costs_csv(&out_dir.join("costs.csv"), &[(&run.label, &run.result.costs)])?;
    reports::write_portfolio_csv(&out_dir.join("portfolio.csv"), &run.site, &[(&run.label, &run.result.portfolio)])?;
    print_run(&run);
    Ok(())
}

fn print_comparison(cmp: &Comparison) {
    println!("{:<12} {:>14} {:>14} {:>14} {:>9}", "component", "first", "second", "difference", "reduction");
    for (name, a, b, diff) in cmp.rows() {
        let pct = match name {
            "investment" => format!("{:.2}%", cmp.investment_reduction_pct),
            "operation" => format!("{:.2}%", cmp.operation_reduction_pct),
            "total" => format!("{:.2}%", cmp.total_reduction_pct),
            _ => String::new(),
        };
        println!("{name:<12} {a:>14.0} {b:>14.0} {diff:>14.0} {pct:>9}");
    }
}

fn run_compare(first: PathBuf, second: PathBuf, out: Option<PathBuf>) -> Result<(), Failure> {
    let first_row = |path: &Path| -> Result<planner::CostBreakdown, Failure> {
        reports::read_costs_csv(path)?
            .into_iter()
            .next()
            .map(|(_, c)| c)
            .ok_or_else(|| Failure::new(EXIT_VALIDATION, format!("{}: no cost rows", path.display())))
    };
    let cmp = Comparison::from_costs(first_row(&first)?, first_row(&second)?);
    if let Some(path) = out {
        reports::write_comparison_csv(&path, &cmp)?;
    }
    print_comparison(&cmp);
    Ok(())
}

fn run_pipeline(paths: Vec<PathBuf>, out_dir: PathBuf, dump_lp: bool, overrides: DsmOverrides) -> Result<(), Failure> {
    let a = load_scenario(&paths[0], &overrides)?;
    let b = load_scenario(&paths[1], &overrides)?;
    let out = gridsmith_core::pipeline::run_pipeline(&a, &b, &plan_solver_options())?;
    reports::create_dir(&out_dir)?;
    let [ra, rb] = &out.runs;
    for (i, (run, scenario)) in [(ra, &a), (rb, &b)].into_iter().enumerate() {
        let dir = out_dir.join(format!("scenario{}", i + 1));
        write_run(&dir, run, dump_lp)?;
        if let Some(d) = &run.dsm {
            write_cooling_csv(&dir.join("cooling.csv"), &baseline_cooling(scenario), d)?;
            write_setpoints_csv(&dir.join("setpoints.csv"), scenario, d)?;
        }
        print_run(run);
    }
    reports::write_costs_csv(&out_dir.join("costs.csv"), &[(&ra.label, &ra.result.costs), (&rb.label, &rb.result.costs)])?;
    reports::write_portfolio_csv(
        &out_dir.join("portfolio.csv"),
        &ra.site,
        &[(&ra.label, &ra.result.portfolio), (&rb.label, &rb.result.portfolio)],
    )?;
    reports::write_comparison_csv(&out_dir.join("comparison.csv"), &out.comparison)?;
    print_comparison(&out.comparison);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::FitDsm {
            samples,
            scenario,
            seed,
            count,
            noise,
            samples_out,
            out,
        } => fit_dsm(samples, scenario, seed, count, noise, samples_out, out),
        Command::Dsm {
            scenario,
            out_dir,
            overrides,
        } => run_dsm(scenario, out_dir, overrides),
        Command::Plan {
            scenario,
            out_dir,
            dump_lp,
            overrides,
        } => run_plan(scenario, out_dir, dump_lp, overrides),
        Command::Compare { first, second, out } => run_compare(first, second, out),
        Command::Pipeline {
            scenario,
            out_dir,
            dump_lp,
            overrides,
        } => run_pipeline(scenario, out_dir, dump_lp, overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
