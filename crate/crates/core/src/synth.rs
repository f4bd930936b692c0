//! Load-profile synthesis: an affine map of a normalized shape that hits a
//! target annual energy and peak, plus the bundled synthetic templates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{LoadProfile, TimeStructure};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error(
        "peak {peak_kw} kW is below the average demand {avg_kw:.3} kW implied by {usage_mwh} MWh/yr; \
         a flat load is the lowest possible peak"
    )]
    PeakBelowAverage { usage_mwh: f64, peak_kw: f64, avg_kw: f64 },
    #[error("shape is too flat for load factor {load_factor:.4}: reaching the peak would need a negative base load")]
    ShapeTooFlat { load_factor: f64 },
    #[error("shape must have {expected} values in [0, 1] with maximum 1")]
    BadShape { expected: usize },
    #[error("targets must be nonnegative and finite")]
    BadTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    /// MWh per year.
    pub target_usage: f64,
    /// kW.
    pub target_peak: f64,
    /// Normalized hourly template, one value per typical-day hour.
    pub shape: Vec<f64>,
}

/// Finds `a, b ≥ 0` with `a·shape + b` matching the annual usage and peak.
pub fn synthesize_profile(spec: &SynthesisSpec, time: &TimeStructure) -> Result<LoadProfile, SynthError> {
    let hours = time.num_hours();
    let shape = &spec.shape;
    let max = shape.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shape.len() != hours || shape.iter().any(|v| !(0.0..=1.0).contains(v)) || (max - 1.0).abs() > 1e-12 {
        return Err(SynthError::BadShape { expected: hours });
    }
    let (usage, peak) = (spec.target_usage, spec.target_peak);
    if !(usage >= 0.0 && peak >= 0.0 && usage.is_finite() && peak.is_finite()) {
        return Err(SynthError::BadTarget);
    }
    let hours_per_year: f64 = (0..hours).map(|h| time.weight(h)).sum();
    let weighted_shape: f64 = (0..hours).map(|h| time.weight(h) * shape[h]).sum();
    let energy = usage * 1000.0;
    let avg = energy / hours_per_year;
    if peak < avg * (1.0 - 1e-9) {
        return Err(SynthError::PeakBelowAverage {
            usage_mwh: usage,
            peak_kw: peak,
            avg_kw: avg,
        });
    }
    if peak == 0.0 {
        return Ok(LoadProfile::zeros(hours));
    }
    let flat_gap = hours_per_year - weighted_shape;
    let (a, b) = if flat_gap <= 1e-9 * hours_per_year {
        // Flat shape: only the flat load fits.
        if (peak - avg).abs() > 1e-3 * peak {
            return Err(SynthError::ShapeTooFlat {
                load_factor: avg / peak,
            });
        }
        (0.0, peak)
    } else {
        let a = (peak * hours_per_year - energy) / flat_gap;
        (a, peak - a)
    };
    if b < -1e-9 * peak {
        return Err(SynthError::ShapeTooFlat {
            load_factor: avg / peak,
        });
    }
    let b = b.max(0.0);
    Ok(LoadProfile(shape.iter().map(|s| a * s + b).collect()))
}

/// Weighted mean of a shape over the year.
pub fn shape_mean(shape: &[f64], time: &TimeStructure) -> f64 {
    let w: f64 = (0..shape.len()).map(|h| time.weight(h)).sum();
    (0..shape.len()).map(|h| time.weight(h) * shape[h]).sum::<f64>() / w
}

/// Raises a shape to the power that brings its weighted mean to `target_mean`
/// (bisection on the exponent), renormalized to a maximum of 1.
pub fn sharpen(shape: &[f64], time: &TimeStructure, target_mean: f64) -> Vec<f64> {
    let apply = |p: f64| -> Vec<f64> {
        let v: Vec<f64> = shape.iter().map(|s| s.max(0.0).powf(p)).collect();
        let m = v.iter().copied().fold(0.0, f64::max);
        v.iter().map(|x| x / m).collect()
    };
    if shape_mean(&apply(1.0), time) <= target_mean {
        return apply(1.0);
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while shape_mean(&apply(hi), time) > target_mean && hi < 1e3 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if shape_mean(&apply(mid), time) > target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    apply(hi)
}

/// Synthetic climate and schedule templates for a mid-latitude site with
/// one typical day per month. All values are hand-authored, not measured.
pub mod templates {
    use std::f64::consts::PI;

    /// Monthly mean outdoor temperature (°C).
    pub const MONTHLY_MEAN_C: [f64; 12] = [0.5, 2.0, 7.0, 13.0, 18.5, 23.5, 26.5, 25.5, 21.5, 15.0, 9.0, 3.0];
    /// Half of the daily temperature swing (°C).
    pub const DIURNAL_HALF_SWING_C: [f64; 12] = [4.0, 4.5, 5.0, 5.5, 5.5, 5.5, 5.0, 5.0, 5.0, 5.0, 4.5, 4.0];
    /// Clear-sky-ish peak PV output per kW installed.
    pub const PV_PEAK: [f64; 12] = [0.45, 0.52, 0.62, 0.70, 0.76, 0.79, 0.80, 0.76, 0.69, 0.58, 0.48, 0.42];
    /// Hours of daylight.
    pub const DAY_LENGTH_H: [f64; 12] = [9.5, 10.6, 11.9, 13.3, 14.5, 15.1, 14.8, 13.8, 12.4, 11.0, 9.8, 9.2];

    pub fn ambient(month: usize, hour: usize) -> f64 {
        // Coldest near 05:00, warmest near 15:00.
        let phase = 2.0 * PI * (hour as f64 - 15.0) / 24.0;
        MONTHLY_MEAN_C[month] + DIURNAL_HALF_SWING_C[month] * phase.cos()
    }

    pub fn solar(month: usize, hour: usize) -> f64 {
        let noon = 12.5;
        let half = DAY_LENGTH_H[month] / 2.0;
        let t = hour as f64 + 0.5;
        if (t - noon).abs() >= half {
            0.0
        } else {
            PV_PEAK[month] * (PI * (t - noon + half) / (2.0 * half)).sin()
        }
    }

    /// Fraction of occupants present in an office, by hour.
    pub fn office_occupancy(hour: usize) -> f64 {
        match hour {
            0..=5 => 0.0,
            6 => 0.1,
            7 => 0.4,
            8..=11 => 0.95,
            12 => 0.8,
            13..=16 => 0.95,
            17 => 0.6,
            18 => 0.25,
            19..=21 => 0.1,
            _ => 0.0,
        }
    }

    /// Fraction of residents at home, by hour.
    pub fn apartment_occupancy(hour: usize) -> f64 {
        match hour {
            0..=6 => 1.0,
            7 => 0.8,
            8 => 0.5,
            9..=15 => 0.3,
            16 => 0.45,
            17 => 0.7,
            18..=22 => 0.9,
            _ => 1.0,
        }
    }

    /// Seasonal multiplier for plug and lighting loads.
    fn season(month: usize) -> f64 {
        [0.97, 0.96, 0.93, 0.9, 0.9, 0.95, 1.0, 1.0, 0.94, 0.9, 0.93, 0.98][month]
    }

    pub fn office_electric(month: usize, hour: usize) -> f64 {
        season(month) * (0.3 + 0.7 * office_occupancy(hour))
    }

    pub fn apartment_electric(month: usize, hour: usize) -> f64 {
        let evening = (-((hour as f64 - 19.5) / 2.5).powi(2)).exp();
        let morning = 0.5 * (-((hour as f64 - 7.5) / 1.5).powi(2)).exp();
        season(month) * (0.35 + 0.65 * (evening + morning).min(1.0))
    }

    /// Cooling need grows with outdoor temperature above a balance point and
    /// with internal gains from occupancy.
    pub fn cooling(month: usize, hour: usize, occupancy: f64, balance_c: f64) -> f64 {
        let excess = (ambient(month, hour) - balance_c).max(0.0);
        excess * (0.55 + 0.45 * occupancy)
    }

    /// Builds a 12×24 shape normalized to a maximum of 1.
    pub fn shape(f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..12).flat_map(|m| (0..24).map(move |h| (m, h))).map(|(m, h)| f(m, h)).collect();
        let max = raw.iter().copied().fold(0.0, f64::max);
        raw.iter().map(|v| v / max).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{annual_summary, TypicalDay};

    fn year() -> TimeStructure {
        TimeStructure {
            typical_days: vec![TypicalDay {
                label: "all".into(),
                month: 1,
                weight: 365.0,
            }],
            hours_per_day: 24,
            planning_horizon_years: 1,
            discount_rate: 0.0,
        }
    }

    #[test]
    fn flat_shape_gives_constant_load() {
        let spec = SynthesisSpec {
            target_usage: 8760.0,
            target_peak: 1000.0,
            shape: vec![1.0; 24],
        };
        let p = synthesize_profile(&spec, &year()).unwrap();
        assert!(p.values().iter().all(|&v| (v - 1000.0).abs() < 1e-9));
    }

    #[test]
    fn peak_below_average_rejected() {
        let spec = SynthesisSpec {
            target_usage: 8760.0,
            target_peak: 900.0,
            shape: vec![1.0; 24],
        };
        let err = synthesize_profile(&spec, &year()).unwrap_err();
        assert!(matches!(err, SynthError::PeakBelowAverage { .. }));
        assert!(err.to_string().contains("flat load"));
    }

    #[test]
    fn hits_targets_on_monthly_year() {
        let time = TimeStructure::monthly(25, 0.05);
        let shape = templates::shape(templates::office_electric);
        let lf = shape_mean(&shape, &time);
        // Any load factor between the shape's mean and 1 is reachable.
        let peak = 446.0;
        let usage = (0.5 * (lf + 1.0)) * peak * 8760.0 / 1000.0;
        let spec = SynthesisSpec {
            target_usage: usage,
            target_peak: peak,
            shape: shape.clone(),
        };
        let p = synthesize_profile(&spec, &time).unwrap();
        let s = annual_summary(&p, &time).unwrap();
        assert!((s.usage_mwh - usage).abs() < 1e-6);
        assert!((s.peak_kw - peak).abs() < 1e-9);
        // Below the shape's own load factor, the shape has to be sharpened first.
        let spec = SynthesisSpec {
            target_usage: 0.5 * lf * peak * 8760.0 / 1000.0,
            target_peak: peak,
            shape,
        };
        assert!(matches!(synthesize_profile(&spec, &time), Err(SynthError::ShapeTooFlat { .. })));
    }

    #[test]
    fn sharpen_reaches_target_mean() {
        let time = TimeStructure::monthly(25, 0.05);
        let shape = templates::shape(|m, h| templates::cooling(m, h, 0.5, 16.0));
        let sharp = sharpen(&shape, &time, 0.04);
        assert!((shape_mean(&sharp, &time) - 0.04).abs() < 1e-6);
    }
}
