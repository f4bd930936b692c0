//! Scenario documents: JSON with network, catalog, tariff, time and profile
//! sections, plus optional setpoint-optimization settings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsm::{DsmOptions, DsmZoneConfig};
use crate::model::{Catalog, ContinuousKind, LoadProfile, NetworkModel, ProfileSet, Site, Tariff, TimeStructure};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("profile `{0}` is defined more than once")]
    DuplicateProfile(String),
}

/// Where a profile's values come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSource {
    Inline(Vec<f64>),
    /// CSV with header `hour,value`, hours 0-based; relative paths resolve
    /// against the scenario file's directory.
    Csv { csv: String },
}

fn default_horizon() -> usize {
    6
}

fn default_grid_step() -> f64 {
    0.5
}

fn default_sweeps() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsmConfig {
    pub zones: Vec<DsmZoneConfig>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    /// Chiller COP used to convert between cooling and electricity; defaults
    /// to the first electric chiller in the catalog.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chiller_cop: Option<f64>,
}

impl DsmConfig {
    pub fn options(&self) -> DsmOptions {
        DsmOptions {
            horizon: self.horizon,
            grid_step: self.grid_step,
            max_sweeps: self.max_sweeps,
        }
    }

    pub fn cop(&self, catalog: &Catalog) -> Option<f64> {
        self.chiller_cop.or_else(|| {
            catalog
                .continuous
                .iter()
                .find(|t| t.kind == ContinuousKind::ElectricChiller)
                .map(|t| t.cop)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub label: String,
    pub network: NetworkModel,
    pub catalog: Catalog,
    pub tariff: Tariff,
    pub time: TimeStructure,
    pub profiles: BTreeMap<String, ProfileSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solar_profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsm: Option<DsmConfig>,
}

/// A parsed scenario with every profile loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub site: Site,
    pub dsm: Option<DsmConfig>,
}

pub fn read_profile_csv(path: &Path) -> Result<LoadProfile, ScenarioError> {
    let err = |message: String| ScenarioError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["hour", "value"] {
        return Err(err(format!("header must be `hour,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut values = Vec::new();
    for (i, rec) in rdr.deserialize::<(usize, f64)>().enumerate() {
        let (hour, value) = rec.map_err(|e| err(e.to_string()))?;
        if hour != i {
            return Err(err(format!("row {i} has hour {hour}; hours must be 0-based and consecutive")));
        }
        values.push(value);
    }
    Ok(LoadProfile(values))
}

pub fn write_profile_csv(path: &Path, profile: &LoadProfile) -> Result<(), ScenarioError> {
    let err = |message: String| ScenarioError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(e.to_string()))?;
    w.write_record(["hour", "value"]).map_err(|e| err(e.to_string()))?;
    for (h, v) in profile.values().iter().enumerate() {
        w.serialize((h, v)).map_err(|e| err(e.to_string()))?;
    }
    w.flush().map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

impl ScenarioFile {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Json {
            path: origin.to_path_buf(),
            source: e,
        })
    }

    pub fn read(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }

    /// Loads CSV-backed profiles; `base_dir` anchors relative paths.
    pub fn resolve(&self, base_dir: &Path) -> Result<Scenario, ScenarioError> {
        let mut profiles = ProfileSet::new();
        for (name, src) in &self.profiles {
            let p = match src {
                ProfileSource::Inline(v) => LoadProfile(v.clone()),
                ProfileSource::Csv { csv } => read_profile_csv(&base_dir.join(csv))?,
            };
            if profiles.insert(name.clone(), p).is_some() {
                return Err(ScenarioError::DuplicateProfile(name.clone()));
            }
        }
        Ok(Scenario {
            label: self.label.clone(),
            site: Site {
                network: self.network.clone(),
                catalog: self.catalog.clone(),
                tariff: self.tariff.clone(),
                time: self.time.clone(),
                profiles,
                solar_profile: self.solar_profile.clone(),
                ambient_profile: self.ambient_profile.clone(),
            },
            dsm: self.dsm.clone(),
        })
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let file = ScenarioFile::read(path)?;
        file.resolve(path.parent().unwrap_or(Path::new(".")))
    }

    /// Inverse of [`ScenarioFile::resolve`] with every profile inlined.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            label: self.label.clone(),
            network: self.site.network.clone(),
            catalog: self.site.catalog.clone(),
            tariff: self.site.tariff.clone(),
            time: self.site.time.clone(),
            profiles: self
                .site
                .profiles
                .iter()
                .map(|(k, v)| (k.clone(), ProfileSource::Inline(v.0.clone())))
                .collect(),
            solar_profile: self.site.solar_profile.clone(),
            ambient_profile: self.site.ambient_profile.clone(),
            dsm: self.dsm.clone(),
        }
    }
}
