//! End-to-end runs: setpoint optimization where a scenario asks for it,
//! planning, and the cost comparison between two scenarios.

use std::collections::BTreeMap;

use gridsmith_solver::MilpOptions;
use thiserror::Error;

use crate::dsm::{build_annual_profiles, AnnualDsmResult, DsmError};
use crate::model::{LoadProfile, Site};
use crate::planner::{compare_scenarios, plan, Comparison, PlanError, PlanProblem, PlanResult};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("loading scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("setpoint optimization for `{label}`: {source}")]
    Dsm {
        label: String,
        #[source]
        source: DsmError,
    },
    #[error("planning `{label}`: {source}")]
    Plan {
        label: String,
        #[source]
        source: PlanError,
    },
    #[error("comparing scenarios: {0}")]
    Compare(#[source] PlanError),
    #[error("writing reports: {0}")]
    Report(#[from] crate::reports::ReportError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Scenario(_) => "scenario",
            PipelineError::Dsm { .. } => "dsm",
            PipelineError::Plan { .. } => "plan",
            PipelineError::Compare(_) => "compare",
            PipelineError::Report(_) => "report",
        }
    }

    /// The planning error underneath, if the failure came from planning.
    pub fn plan_error(&self) -> Option<&PlanError> {
        match self {
            PipelineError::Plan { source, .. } | PipelineError::Compare(source) => Some(source),
            _ => None,
        }
    }
}

/// Runs the scenario's setpoint optimization, if it has one, and returns the
/// site with each participating bus pointed at its optimized cooling profile.
pub fn apply_dsm(scenario: &Scenario) -> Result<(Site, Option<AnnualDsmResult>), DsmError> {
    let mut site = scenario.site.clone();
    let Some(cfg) = &scenario.dsm else {
        return Ok((site, None));
    };
    let ambient = match &site.ambient_profile {
        Some(name) => site
            .profile(name)
            .map_err(|e| DsmError::InvalidInput(e.to_string()))?
            .0
            .clone(),
        None => return Err(DsmError::InvalidInput("scenario has no ambient temperature profile".into())),
    };
    let cop = cfg
        .cop(&site.catalog)
        .ok_or_else(|| DsmError::InvalidInput("no chiller COP: set `chiller_cop` or add an electric chiller".into()))?;
    let mut baseline = BTreeMap::new();
    for bus in &site.network.buses {
        if let Some(p) = bus.cooling_load.as_ref().and_then(|name| site.profiles.get(name)) {
            baseline.insert(bus.id.clone(), p.clone());
        }
    }
    let result = build_annual_profiles(
        &cfg.zones,
        &site.tariff.energy_price,
        &ambient,
        &site.time,
        &baseline,
        cop,
        &cfg.options(),
    )?;
    for (node, profile) in &result.cooling {
        let name = format!("dsm_cooling_{node}");
        site.profiles.insert(name.clone(), LoadProfile(profile.0.clone()));
        if let Some(bus) = site.network.buses.iter_mut().find(|b| &b.id == node) {
            bus.cooling_load = Some(name);
        }
    }
    Ok((site, Some(result)))
}

pub struct ScenarioRun {
    pub label: String,
    /// The site actually planned, with optimized cooling loads substituted.
    pub site: Site,
    pub dsm: Option<AnnualDsmResult>,
    pub problem: PlanProblem,
    pub result: PlanResult,
}

pub fn run_scenario(scenario: &Scenario, opts: &MilpOptions) -> Result<ScenarioRun, PipelineError> {
    let label = scenario.label.clone();
    let (site, dsm) = apply_dsm(scenario).map_err(|source| PipelineError::Dsm {
        label: label.clone(),
        source,
    })?;
    let (problem, result) = plan(&site, opts).map_err(|source| PipelineError::Plan {
        label: label.clone(),
        source,
    })?;
    Ok(ScenarioRun {
        label,
        site,
        dsm,
        problem,
        result,
    })
}

pub struct PipelineOutput {
    pub runs: [ScenarioRun; 2],
    pub comparison: Comparison,
}

/// Plans both scenarios and compares their annual costs (first against second).
pub fn run_pipeline(first: &Scenario, second: &Scenario, opts: &MilpOptions) -> Result<PipelineOutput, PipelineError> {
    let a = run_scenario(first, opts)?;
    let b = run_scenario(second, opts)?;
    let comparison = compare_scenarios((&a.site, &a.result), (&b.site, &b.result)).map_err(PipelineError::Compare)?;
    Ok(PipelineOutput {
        runs: [a, b],
        comparison,
    })
}
