//! Building-side layer: human-performance curve, per-zone cooling-energy
//! regression, and setpoint optimization over a short look-ahead horizon.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{LoadProfile, TimeStructure};

pub const NUM_COEFFS: usize = 9;

/// Regression coefficient labels in design-matrix column order.
pub const COEFF_NAMES: [&str; NUM_COEFFS] = [
    "β₀ (intercept)",
    "β₁ (E_rate)",
    "β₂ (T_inf)",
    "β₃ (T)",
    "β₄ (T_lag1)",
    "β₅ (T_lag2)",
    "β₆ (T_lag3)",
    "β₇ (tau)",
    "β₈ (other_sum)",
];

const PHYSICAL_RANGE: (f64, f64) = (-40.0, 60.0);
const RAMP_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DsmError {
    #[error("need at least {needed} linearly independent samples, got {got}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("rank-deficient design matrix; collinear columns: {}", .columns.join(", "))]
    Collinear { columns: Vec<&'static str> },
    #[error("zone `{zone}`: no setpoint sequence satisfies band and ramp limits (stuck at step {step})")]
    Infeasible { zone: String, step: usize },
    #[error("hour {hour}: {source}")]
    AtHour {
        hour: usize,
        #[source]
        source: Box<DsmError>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
}

/// Relative human performance at dry-bulb temperature `temp` (°C).
pub fn human_performance(temp: f64) -> f64 {
    let hp = 0.16475 * temp - 0.00582 * temp * temp + 0.00006 * temp * temp * temp - 0.46853;
    hp.clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneThermalModel {
    pub zone_id: String,
    pub beta: [f64; NUM_COEFFS],
    #[serde(default)]
    pub residual_sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneState {
    /// Zone temperature at t−1, t−2, t−3 (°C).
    pub temp_history: [f64; 3],
    /// Rate of change of zone thermal energy (kW).
    pub energy_rate: f64,
    /// Outdoor temperature (°C).
    pub ambient: f64,
    /// Hour-class regressor.
    pub time_of_day: f64,
}

fn features(state: &ZoneState, setpoint: f64, other_sum: f64) -> [f64; NUM_COEFFS] {
    let [l1, l2, l3] = state.temp_history;
    [
        1.0,
        state.energy_rate,
        state.ambient,
        setpoint,
        l1,
        l2,
        l3,
        state.time_of_day,
        other_sum,
    ]
}

impl ZoneThermalModel {
    /// Affine part of the regression, without the nonnegativity clamp.
    pub fn linear_prediction(&self, state: &ZoneState, setpoint: f64, other_sum: f64) -> f64 {
        features(state, setpoint, other_sum)
            .iter()
            .zip(&self.beta)
            .map(|(x, b)| x * b)
            .sum()
    }

    pub fn predict(&self, state: &ZoneState, setpoint: f64, other_sum: f64) -> f64 {
        self.linear_prediction(state, setpoint, other_sum).max(0.0)
    }
}

/// Cooling electricity (kWh) for one step; ε is taken at its zero mean.
pub fn predict_cooling_energy(
    model: &ZoneThermalModel,
    state: &ZoneState,
    setpoint: f64,
    other_zone_temps: f64,
) -> f64 {
    model.predict(state, setpoint, other_zone_temps)
}

/// One observation row; field names follow the training CSV header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub zone: String,
    pub hour: usize,
    #[serde(rename = "T_inf")]
    pub t_inf: f64,
    #[serde(rename = "E_rate")]
    pub e_rate: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "T_lag1")]
    pub t_lag1: f64,
    #[serde(rename = "T_lag2")]
    pub t_lag2: f64,
    #[serde(rename = "T_lag3")]
    pub t_lag3: f64,
    pub tau: f64,
    pub other_sum: f64,
    pub ase: f64,
}

impl TrainingSample {
    pub fn state(&self) -> ZoneState {
        ZoneState {
            temp_history: [self.t_lag1, self.t_lag2, self.t_lag3],
            energy_rate: self.e_rate,
            ambient: self.t_inf,
            time_of_day: self.tau,
        }
    }
}

/// Header of the training CSV, in column order.
pub const SAMPLE_HEADER: [&str; 11] = [
    "zone", "hour", "T_inf", "E_rate", "T", "T_lag1", "T_lag2", "T_lag3", "tau", "other_sum", "ase",
];

pub fn read_samples_csv(path: &Path) -> Result<Vec<TrainingSample>, DsmError> {
    let err = |message: String| DsmError::Csv {
        path: path.display().to_string(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    if headers.iter().ne(SAMPLE_HEADER) {
        return Err(err(format!("header must be `{}`", SAMPLE_HEADER.join(","))));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| err(format!("row {}: {e}", i + 1))))
        .collect()
}

pub fn write_samples_csv(path: &Path, samples: &[TrainingSample]) -> Result<(), DsmError> {
    let err = |message: String| DsmError::Csv {
        path: path.display().to_string(),
        message,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(e.to_string()))?;
    for s in samples {
        w.serialize(s).map_err(|e| err(e.to_string()))?;
    }
    if samples.is_empty() {
        w.write_record(SAMPLE_HEADER).map_err(|e| err(e.to_string()))?;
    }
    w.flush().map_err(|e| err(e.to_string()))
}

/// Draws `n` random operating points for `model` and labels them with the
/// affine prediction plus Gaussian noise of standard deviation `sigma`.
/// The labels are not clamped at zero so that a refit sees the exact
/// generating hyperplane.
pub fn synthetic_samples(model: &ZoneThermalModel, n: usize, sigma: f64, seed: u64) -> Vec<TrainingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    (0..n)
        .map(|i| {
            let hour = i % 24;
            let t = rng.gen_range(21.0..28.0);
            let mut s = TrainingSample {
                zone: model.zone_id.clone(),
                hour,
                t_inf: rng.gen_range(18.0..38.0),
                e_rate: rng.gen_range(0.0..40.0),
                t,
                t_lag1: t + rng.gen_range(-1.0..1.0),
                t_lag2: t + rng.gen_range(-2.0..2.0),
                t_lag3: t + rng.gen_range(-3.0..3.0),
                tau: hour as f64,
                other_sum: rng.gen_range(0.0..80.0),
                ase: 0.0,
            };
            s.ase = model.linear_prediction(&s.state(), s.t, s.other_sum) + noise.sample(&mut rng);
            s
        })
        .collect()
}

/// Columns that are linear combinations of earlier columns, found by
/// modified Gram–Schmidt with reorthogonalization.
fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm0 = col.norm();
        let mut v = col;
        for _ in 0..2 {
            for q in &basis {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= 1e-9 * norm0 {
            dependent.push(j);
        } else {
            basis.push(v / norm);
        }
    }
    dependent
}

/// Ordinary least squares on the nine regressors.
pub fn fit_zone_model(zone_id: &str, samples: &[TrainingSample]) -> Result<ZoneThermalModel, DsmError> {
    let n = samples.len();
    if n < NUM_COEFFS {
        return Err(DsmError::TooFewSamples {
            got: n,
            needed: NUM_COEFFS,
        });
    }
    let x = DMatrix::from_fn(n, NUM_COEFFS, |i, j| {
        let s = &samples[i];
        features(&s.state(), s.t, s.other_sum)[j]
    });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.ase));
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(DsmError::InvalidInput("non-finite training value".into()));
    }
    let dependent = dependent_columns(&x);
    if !dependent.is_empty() {
        return Err(DsmError::Collinear {
            columns: dependent.iter().map(|&j| COEFF_NAMES[j]).collect(),
        });
    }
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * &y;
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or(DsmError::Collinear { columns: vec![] })?;
    let residual = &y - &x * &beta;
    let sigma = (residual.norm_squared() / n as f64).sqrt();
    let mut coeffs = [0.0; NUM_COEFFS];
    coeffs.copy_from_slice(beta.as_slice());
    Ok(ZoneThermalModel {
        zone_id: zone_id.to_string(),
        beta: coeffs,
        residual_sigma: sigma,
    })
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComfortSpec {
    pub t_min: f64,
    pub t_max: f64,
    /// Largest allowed |ΔT| between consecutive steps (°C).
    pub max_ramp: f64,
    pub w1: f64,
    pub w2: f64,
    /// Value of full performance per occupant-step ($).
    pub ep: f64,
    #[serde(default = "one")]
    pub occupants: f64,
}

impl ComfortSpec {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_min + self.t_max)
    }

    fn check(&self) -> Result<(), DsmError> {
        let ok = self.t_min < self.t_max
            && self.max_ramp > 0.0
            && self.w1 >= 0.0
            && self.w2 >= 0.0
            && self.ep >= 0.0
            && self.occupants >= 0.0
            && self.t_min >= PHYSICAL_RANGE.0
            && self.t_max <= PHYSICAL_RANGE.1;
        if ok {
            Ok(())
        } else {
            Err(DsmError::InvalidInput(format!("comfort spec {self:?}")))
        }
    }
}

/// Exogenous inputs for one step of the look-ahead.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepForecast {
    pub energy_rate: f64,
    pub ambient: f64,
    pub tau: f64,
    /// Fraction of `ComfortSpec::occupants` present.
    pub occupancy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZoneInput {
    pub model: ZoneThermalModel,
    pub comfort: ComfortSpec,
    /// Temperatures at t−1, t−2, t−3 before the first step.
    pub history: [f64; 3],
    pub forecast: Vec<StepForecast>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DsmOptions {
    pub horizon: usize,
    pub grid_step: f64,
    pub max_sweeps: usize,
}

impl Default for DsmOptions {
    fn default() -> Self {
        DsmOptions {
            horizon: 6,
            grid_step: 0.5,
            max_sweeps: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZonePlan {
    pub zone_id: String,
    pub setpoints: Vec<f64>,
    /// Predicted cooling electricity per step (kWh).
    pub ase: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetpointPlan {
    pub zones: Vec<ZonePlan>,
    pub objective: f64,
    /// Total objective after each Gauss–Seidel sweep.
    pub sweep_objectives: Vec<f64>,
    pub converged: bool,
}

/// Setpoint grid from `t_min` in `step` increments; `t_max` is always a level.
pub fn setpoint_levels(t_min: f64, t_max: f64, step: f64) -> Vec<f64> {
    let n = ((t_max - t_min) / step + 1e-9).floor() as usize;
    let mut levels: Vec<f64> = (0..=n).map(|k| t_min + k as f64 * step).collect();
    if t_max - levels[n] > 1e-9 {
        levels.push(t_max);
    }
    levels
}

fn step_state(zone: &ZoneInput, t: usize, lags: [f64; 3]) -> ZoneState {
    let f = &zone.forecast[t];
    ZoneState {
        temp_history: lags,
        energy_rate: f.energy_rate,
        ambient: f.ambient,
        time_of_day: f.tau,
    }
}

fn lags_at(zone: &ZoneInput, setpoints: &[f64], t: usize) -> [f64; 3] {
    let get = |k: usize| {
        if t >= k {
            setpoints[t - k]
        } else {
            zone.history[k - t - 1]
        }
    };
    [get(1), get(2), get(3)]
}

fn energy_cost(zone: &ZoneInput, price: f64, t: usize, temp: f64, lags: [f64; 3], other: f64) -> f64 {
    zone.comfort.w1 * price * zone.model.predict(&step_state(zone, t, lags), temp, other)
}

fn comfort_cost(zone: &ZoneInput, t: usize, temp: f64) -> f64 {
    let c = &zone.comfort;
    c.w2 * (1.0 - human_performance(temp)) * c.ep * c.occupants * zone.forecast[t].occupancy
}

/// Objective of a fixed set of setpoint trajectories.
pub fn plan_objective(zones: &[ZoneInput], prices: &[f64], setpoints: &[Vec<f64>]) -> f64 {
    let steps = setpoints.first().map_or(0, Vec::len);
    let mut total = 0.0;
    for t in 0..steps {
        let sum_t: f64 = setpoints.iter().map(|s| s[t]).sum();
        for (z, zone) in zones.iter().enumerate() {
            let temp = setpoints[z][t];
            let lags = lags_at(zone, &setpoints[z], t);
            total += energy_cost(zone, prices[t], t, temp, lags, sum_t - temp) + comfort_cost(zone, t, temp);
        }
    }
    total
}

/// How many past setpoints the DP state must carry: at least one for the
/// ramp limit, more only if the model weights deeper lags.
fn lag_depth(model: &ZoneThermalModel) -> usize {
    (1..=3).rev().find(|&k| model.beta[3 + k] != 0.0).unwrap_or(1)
}

/// Largest DP state space accepted before refusing a grid as too fine.
const MAX_DP_STATES: usize = 1 << 24;

fn dp_states(levels: usize, depth: usize) -> usize {
    (levels + 3).saturating_pow(depth as u32)
}

/// Exact DP for zone `z` over the discretized band with the other zones'
/// trajectories held fixed. `extra[t][k]` is the cost the other zones incur
/// when this zone sits at level `k` in step `t`. The state is the last
/// `lag_depth` setpoints, with the three history values as extra symbols.
fn solve_zone(
    zone: &ZoneInput,
    prices: &[f64],
    levels: &[f64],
    other_sums: &[f64],
    extra: &[Vec<f64>],
) -> Result<Vec<f64>, usize> {
    let steps = other_sums.len();
    let nl = levels.len();
    let nv = nl + 3;
    let depth = lag_depth(&zone.model);
    let mut values = levels.to_vec();
    values.extend_from_slice(&zone.history);
    let ns = dp_states(nl, depth);
    let shift = ns / nv;
    let digits = |s: usize| {
        let mut d = [usize::MAX; 3];
        let mut r = s;
        for slot in d.iter_mut().take(depth) {
            *slot = r % nv;
            r /= nv;
        }
        d
    };
    let ramp = zone.comfort.max_ramp + RAMP_SLACK;

    let start = (0..depth).rev().fold(0, |acc, i| acc * nv + nl + i);
    let mut cost = vec![f64::INFINITY; ns];
    cost[start] = 0.0;
    let mut active = vec![start];
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut next = vec![f64::INFINITY; ns];
        let mut parent = vec![u32::MAX; ns];
        for &s in &active {
            let base = cost[s];
            let d = digits(s);
            let lags = d.map(|i| if i == usize::MAX { 0.0 } else { values[i] });
            for k in 0..nl {
                if (levels[k] - lags[0]).abs() > ramp {
                    continue;
                }
                let v = base
                    + energy_cost(zone, prices[t], t, levels[k], lags, other_sums[t])
                    + comfort_cost(zone, t, levels[k])
                    + extra[t][k];
                let n = k + nv * (s % shift);
                if v < next[n] {
                    next[n] = v;
                    parent[n] = s as u32;
                }
            }
        }
        active = (0..ns).filter(|&s| next[s].is_finite()).collect();
        if active.is_empty() {
            return Err(t);
        }
        cost = next;
        parents.push(parent);
    }
    let mut best = active[0];
    for &s in &active {
        if cost[s] < cost[best] {
            best = s;
        }
    }
    let mut out = vec![0.0; steps];
    let mut s = best;
    for t in (0..steps).rev() {
        out[t] = values[s % nv];
        s = parents[t][s] as usize;
    }
    Ok(out)
}

fn check_zone(zone: &ZoneInput, steps: usize) -> Result<(), DsmError> {
    zone.comfort.check()?;
    if zone.forecast.len() < steps {
        return Err(DsmError::InvalidInput(format!(
            "zone `{}` forecast has {} steps, horizon is {steps}",
            zone.model.zone_id,
            zone.forecast.len()
        )));
    }
    let (lo, hi) = PHYSICAL_RANGE;
    let in_range = |v: f64| (lo..=hi).contains(&v);
    if !zone.history.iter().all(|&v| in_range(v))
        || !zone.forecast[..steps].iter().all(|f| in_range(f.ambient))
    {
        return Err(DsmError::InvalidInput(format!(
            "zone `{}` temperature outside [{lo}, {hi}] °C",
            zone.model.zone_id
        )));
    }
    if zone.model.beta.iter().any(|b| !b.is_finite()) {
        return Err(DsmError::InvalidInput(format!("zone `{}` has non-finite coefficients", zone.model.zone_id)));
    }
    Ok(())
}

/// Minimizes weighted cooling cost plus performance penalty across zones.
/// Each zone is solved exactly on the setpoint grid; zones are revisited in
/// zone-id order until no trajectory changes or `max_sweeps` is reached.
pub fn optimize_setpoints(zones: &[ZoneInput], prices: &[f64], opts: &DsmOptions) -> Result<SetpointPlan, DsmError> {
    let steps = opts.horizon;
    if steps == 0 || !(opts.grid_step > 0.0) || opts.max_sweeps == 0 {
        return Err(DsmError::InvalidInput(format!("options {opts:?}")));
    }
    if prices.len() < steps {
        return Err(DsmError::InvalidInput(format!(
            "{} prices for a horizon of {steps}",
            prices.len()
        )));
    }
    for zone in zones {
        check_zone(zone, steps)?;
    }
    let levels: Vec<Vec<f64>> = zones
        .iter()
        .map(|z| setpoint_levels(z.comfort.t_min, z.comfort.t_max, opts.grid_step))
        .collect();
    for (zone, lv) in zones.iter().zip(&levels) {
        if dp_states(lv.len(), lag_depth(&zone.model)) > MAX_DP_STATES {
            return Err(DsmError::InvalidInput(format!(
                "zone `{}`: {} setpoint levels is too fine a grid for {} lag terms",
                zone.model.zone_id,
                lv.len(),
                lag_depth(&zone.model)
            )));
        }
    }
    let mut order: Vec<usize> = (0..zones.len()).collect();
    order.sort_by(|&a, &b| zones[a].model.zone_id.cmp(&zones[b].model.zone_id));

    let mut plan: Vec<Vec<f64>> = zones.iter().map(|z| vec![z.comfort.midpoint(); steps]).collect();
    let mut sweep_objectives = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        let mut changed = false;
        for &z in &order {
            let zone = &zones[z];
            let mut other_sums = vec![0.0; steps];
            let mut extra = vec![vec![0.0; levels[z].len()]; steps];
            for t in 0..steps {
                let sum_t: f64 = plan.iter().enumerate().filter(|&(i, _)| i != z).map(|(_, s)| s[t]).sum();
                other_sums[t] = sum_t;
                for (i, other) in zones.iter().enumerate() {
                    if i == z {
                        continue;
                    }
                    let temp = plan[i][t];
                    let lags = lags_at(other, &plan[i], t);
                    let rest = sum_t - temp;
                    for (k, &lvl) in levels[z].iter().enumerate() {
                        extra[t][k] += energy_cost(other, prices[t], t, temp, lags, rest + lvl);
                    }
                }
            }
            let new = solve_zone(zone, &prices[..steps], &levels[z], &other_sums, &extra).map_err(|step| {
                DsmError::Infeasible {
                    zone: zone.model.zone_id.clone(),
                    step,
                }
            })?;
            if new != plan[z] {
                changed = true;
                plan[z] = new;
            }
        }
        sweep_objectives.push(plan_objective(zones, prices, &plan));
        if !changed || zones.len() <= 1 {
            converged = true;
            break;
        }
    }

    let zone_plans = zones
        .iter()
        .enumerate()
        .map(|(z, zone)| {
            let ase = (0..steps)
                .map(|t| {
                    let sum_t: f64 = plan.iter().map(|s| s[t]).sum();
                    let temp = plan[z][t];
                    let state = step_state(zone, t, lags_at(zone, &plan[z], t));
                    zone.model.predict(&state, temp, sum_t - temp)
                })
                .collect();
            ZonePlan {
                zone_id: zone.model.zone_id.clone(),
                setpoints: plan[z].clone(),
                ase,
            }
        })
        .collect();
    Ok(SetpointPlan {
        zones: zone_plans,
        objective: plan_objective(zones, prices, &plan),
        sweep_objectives,
        converged,
    })
}

/// A conditioned zone attached to a network bus, with its daily schedules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsmZoneConfig {
    pub node: String,
    pub model: ZoneThermalModel,
    pub comfort: ComfortSpec,
    /// Fraction of occupants present, per hour of day.
    pub occupancy: Vec<f64>,
    /// Conventional setback schedule per hour of day (°C).
    pub baseline_setpoints: Vec<f64>,
    /// Share of the node's baseline cooling load this zone accounts for.
    #[serde(default = "one")]
    pub cooling_share: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnualDsmResult {
    /// Optimized cooling load per bus (kW_th).
    pub cooling: BTreeMap<String, LoadProfile>,
    /// Electricity drawn by the chillers for `cooling`, per bus (kW).
    pub chiller_electric: BTreeMap<String, LoadProfile>,
    /// Applied setpoint per zone and hour.
    pub setpoints: Vec<Vec<f64>>,
    /// Energy-rate series that reproduces the baseline under the setback schedule.
    pub energy_rate: Vec<Vec<f64>>,
    /// Largest sweep count used in any hour.
    pub max_sweeps_used: usize,
}

fn hour_class(hour_of_day: usize) -> f64 {
    hour_of_day as f64
}

/// Runs the setpoint optimizer in receding-horizon fashion over every
/// typical-day hour and converts the chosen plans into cooling profiles.
/// Zones sharing a bus form one building and are optimized together.
///
/// The energy-rate regressor is calibrated so that the baseline setback
/// schedule reproduces `baseline_cooling / cop` exactly; the optimized
/// schedule is then evaluated with the same regressors. Look-ahead wraps
/// within the typical day and lags restart at the band midpoint each day.
pub fn build_annual_profiles(
    zones: &[DsmZoneConfig],
    prices: &[f64],
    ambient: &[f64],
    time: &TimeStructure,
    baseline_cooling: &BTreeMap<String, LoadProfile>,
    cop: f64,
    opts: &DsmOptions,
) -> Result<AnnualDsmResult, DsmError> {
    let hours = time.num_hours();
    let hpd = time.hours_per_day;
    if prices.len() != hours || ambient.len() != hours {
        return Err(DsmError::InvalidInput(format!(
            "price/ambient series must have {hours} values"
        )));
    }
    if !(cop > 0.0) {
        return Err(DsmError::InvalidInput(format!("chiller COP {cop}")));
    }
    for z in zones {
        if z.occupancy.len() != hpd || z.baseline_setpoints.len() != hpd {
            return Err(DsmError::InvalidInput(format!(
                "zone `{}` schedules must have {hpd} values",
                z.model.zone_id
            )));
        }
        if !(0.0..=1.0).contains(&z.cooling_share) {
            return Err(DsmError::InvalidInput(format!("zone `{}` cooling share", z.model.zone_id)));
        }
        match baseline_cooling.get(&z.node) {
            Some(p) if p.len() == hours => {}
            _ => {
                return Err(DsmError::InvalidInput(format!(
                    "no {hours}-hour baseline cooling profile for node `{}`",
                    z.node
                )))
            }
        }
        if z.model.beta[1] == 0.0 {
            return Err(DsmError::InvalidInput(format!(
                "zone `{}` has β₁ = 0, energy rate cannot be calibrated",
                z.model.zone_id
            )));
        }
    }

    let nz = zones.len();
    let mids: Vec<f64> = zones.iter().map(|z| z.comfort.midpoint()).collect();
    // Zones in the same building are coupled; buildings are independent.
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (z, zc) in zones.iter().enumerate() {
        groups.entry(zc.node.as_str()).or_default().push(z);
    }
    let group_sum = |series: &[Vec<f64>], z: usize, h: usize| -> f64 {
        groups[zones[z].node.as_str()].iter().filter(|&&i| i != z).map(|&i| series[i][h]).sum()
    };
    let lag_or_mid = |series: &[f64], day_start: usize, h: usize, k: usize, mid: f64| {
        if h >= day_start + k {
            series[h - k]
        } else {
            mid
        }
    };

    let mut energy_rate = vec![vec![0.0; hours]; nz];
    let mut baseline = vec![vec![0.0; hours]; nz];
    for h in 0..hours {
        for (z, zc) in zones.iter().enumerate() {
            baseline[z][h] = zc.baseline_setpoints[time.hour_of_day(h)];
        }
    }
    for h in 0..hours {
        let day_start = time.day_of(h) * hpd;
        for (z, zc) in zones.iter().enumerate() {
            let temp = baseline[z][h];
            let lags = [1, 2, 3].map(|k| lag_or_mid(&baseline[z], day_start, h, k, mids[z]));
            let state = ZoneState {
                temp_history: lags,
                energy_rate: 0.0,
                ambient: ambient[h],
                time_of_day: hour_class(time.hour_of_day(h)),
            };
            let target = zc.cooling_share * baseline_cooling[&zc.node].0[h] / cop;
            let rest = zc.model.linear_prediction(&state, temp, group_sum(&baseline, z, h));
            energy_rate[z][h] = (target - rest) / zc.model.beta[1];
        }
    }

    let mut applied = vec![vec![0.0; hours]; nz];
    let mut max_sweeps_used = 0;
    for h in 0..hours {
        let day_start = time.day_of(h) * hpd;
        let hod = time.hour_of_day(h);
        let window: Vec<usize> = (0..opts.horizon).map(|s| day_start + (hod + s) % hpd).collect();
        let window_prices: Vec<f64> = window.iter().map(|&w| prices[w]).collect();
        for members in groups.values() {
            let inputs: Vec<ZoneInput> = members
                .iter()
                .map(|&z| {
                    let zc = &zones[z];
                    ZoneInput {
                        model: zc.model.clone(),
                        comfort: zc.comfort.clone(),
                        history: [1, 2, 3].map(|k| lag_or_mid(&applied[z], day_start, h, k, mids[z])),
                        forecast: window
                            .iter()
                            .map(|&w| StepForecast {
                                energy_rate: energy_rate[z][w],
                                ambient: ambient[w],
                                tau: hour_class(time.hour_of_day(w)),
                                occupancy: zc.occupancy[time.hour_of_day(w)],
                            })
                            .collect(),
                    }
                })
                .collect();
            let plan = optimize_setpoints(&inputs, &window_prices, opts).map_err(|e| DsmError::AtHour {
                hour: h,
                source: Box::new(e),
            })?;
            max_sweeps_used = max_sweeps_used.max(plan.sweep_objectives.len());
            for (zp, &z) in plan.zones.iter().zip(members) {
                applied[z][h] = zp.setpoints[0];
            }
        }
    }

    let mut cooling: BTreeMap<String, LoadProfile> = BTreeMap::new();
    let mut electric: BTreeMap<String, LoadProfile> = BTreeMap::new();
    for (node, members) in &groups {
        let share: f64 = members.iter().map(|&z| zones[z].cooling_share).sum();
        let base = &baseline_cooling[*node];
        let rest = (1.0 - share).max(0.0);
        cooling.insert(node.to_string(), base.scaled(rest));
        electric.insert(node.to_string(), base.scaled(rest / cop));
    }
    for h in 0..hours {
        let day_start = time.day_of(h) * hpd;
        for (z, zc) in zones.iter().enumerate() {
            let temp = applied[z][h];
            let state = ZoneState {
                temp_history: [1, 2, 3].map(|k| lag_or_mid(&applied[z], day_start, h, k, mids[z])),
                energy_rate: energy_rate[z][h],
                ambient: ambient[h],
                time_of_day: hour_class(time.hour_of_day(h)),
            };
            let ase = zc.model.predict(&state, temp, group_sum(&applied, z, h));
            cooling.get_mut(&zc.node).expect("node registered").0[h] += ase * cop;
            electric.get_mut(&zc.node).expect("node registered").0[h] += ase;
        }
    }
    Ok(AnnualDsmResult {
        cooling,
        chiller_electric: electric,
        setpoints: applied,
        energy_rate,
        max_sweeps_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(beta: [f64; NUM_COEFFS]) -> ZoneThermalModel {
        ZoneThermalModel {
            zone_id: "z".into(),
            beta,
            residual_sigma: 0.0,
        }
    }

    fn state() -> ZoneState {
        ZoneState {
            temp_history: [24.0, 24.0, 24.0],
            energy_rate: 2.0,
            ambient: 31.0,
            time_of_day: 14.0,
        }
    }

    #[test]
    fn hp_values() {
        assert!((human_performance(20.0) - 0.97847).abs() < 1e-5);
        assert!((human_performance(25.0) - 0.95022).abs() < 1e-5);
        assert_eq!(human_performance(-50.0), 0.0);
    }

    #[test]
    fn constant_and_rate_models() {
        let mut b = [0.0; NUM_COEFFS];
        b[0] = 1.0;
        assert_eq!(predict_cooling_energy(&model(b), &state(), 23.0, 50.0), 1.0);
        let mut b = [0.0; NUM_COEFFS];
        b[1] = 1.0;
        assert_eq!(predict_cooling_energy(&model(b), &state(), 23.0, 50.0), 2.0);
        let mut b = [0.0; NUM_COEFFS];
        b[0] = -5.0;
        assert_eq!(predict_cooling_energy(&model(b), &state(), 23.0, 0.0), 0.0);
    }

    #[test]
    fn too_few_samples() {
        let s = TrainingSample {
            zone: "z".into(),
            hour: 0,
            t_inf: 30.0,
            e_rate: 1.0,
            t: 24.0,
            t_lag1: 24.0,
            t_lag2: 24.0,
            t_lag3: 24.0,
            tau: 0.0,
            other_sum: 0.0,
            ase: 1.0,
        };
        let err = fit_zone_model("z", &vec![s; 5]).unwrap_err();
        assert_eq!(err, DsmError::TooFewSamples { got: 5, needed: 9 });
    }

    #[test]
    fn levels_include_band_edges() {
        assert_eq!(setpoint_levels(22.0, 24.0, 0.5), vec![22.0, 22.5, 23.0, 23.5, 24.0]);
        assert_eq!(setpoint_levels(22.0, 23.2, 0.5), vec![22.0, 22.5, 23.0, 23.2]);
    }

    #[test]
    fn unreachable_band_is_infeasible() {
        let zone = ZoneInput {
            model: model([0.0; NUM_COEFFS]),
            comfort: ComfortSpec {
                t_min: 22.0,
                t_max: 24.0,
                max_ramp: 0.5,
                w1: 1.0,
                w2: 1.0,
                ep: 0.5,
                occupants: 1.0,
            },
            history: [30.0; 3],
            forecast: vec![
                StepForecast {
                    energy_rate: 0.0,
                    ambient: 30.0,
                    tau: 0.0,
                    occupancy: 1.0
                };
                6
            ],
        };
        let err = optimize_setpoints(&[zone], &[0.1; 6], &DsmOptions::default()).unwrap_err();
        assert!(matches!(err, DsmError::Infeasible { step: 0, .. }));
    }
}
