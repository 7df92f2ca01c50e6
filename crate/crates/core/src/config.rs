//! TOML problem descriptions, benchmark presets and the JSON synthesis
//! artifact.
//!
//! ```toml
//! [plant]
//! A = [[-1.0, 0.0], [0.0, -2.0]]
//! B = [[1.0], [0.0]]
//! S = [[0.0], [1.0]]
//! V = [[1.0, 0.0]]
//! C = [[1.0, 0.0]]
//! Fx = [[1.0], [0.0]]
//! Fy = [[0.0]]
//! lipschitz_alpha = 1.0
//! nonlinearity = { kind = "neg_sin_x4" }
//!
//! [fault_model]
//! r = 1
//!
//! [scenario]
//! channels = [{ kind = "sinusoid", amplitude = 0.1, omega = 0.25 }]
//!
//! [simulation]
//! tf = 20.0
//! dt = 1e-3
//! x0 = [0.0, 0.0]
//! input = { kind = "channels", channels = [{ kind = "zero" }] }
//!
//! [solver]
//! epsilon = 1e-3
//! mode = "full"
//! ```

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::benchmark::{self, FaultCase, RobotArmParams};
use crate::model::{
    augment, AugmentedModel, BuiltinNonlinearity, FaultModelConfig, ModelError, PlantMatrices,
    PlantModel,
};
use crate::simulation::{FaultScenario, Input, Integrator, SimulationConfig};
use crate::synthesis::{SynthesisOptions, SynthesisResult};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Invalid(String),
}

/// Serializable plant: named matrices, Lipschitz constant and a registry
/// nonlinearity. Empty `Fx`/`Fy` (`[]`) mean zero blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    #[serde(rename = "A", with = "crate::rows")]
    pub a: DMatrix<f64>,
    #[serde(rename = "B", with = "crate::rows")]
    pub b: DMatrix<f64>,
    #[serde(rename = "S", with = "crate::rows")]
    pub s: DMatrix<f64>,
    #[serde(rename = "V", with = "crate::rows")]
    pub v: DMatrix<f64>,
    #[serde(rename = "C", with = "crate::rows")]
    pub c: DMatrix<f64>,
    #[serde(rename = "Fx", with = "crate::rows", default = "empty")]
    pub fx: DMatrix<f64>,
    #[serde(rename = "Fy", with = "crate::rows", default = "empty")]
    pub fy: DMatrix<f64>,
    pub lipschitz_alpha: f64,
    pub nonlinearity: BuiltinNonlinearity,
}

fn empty() -> DMatrix<f64> {
    DMatrix::zeros(0, 0)
}

impl PlantSpec {
    pub fn from_plant(plant: &PlantModel) -> Result<Self, ConfigError> {
        let g = plant.nonlinearity().builtin().ok_or_else(|| {
            ConfigError::Invalid(
                "the plant's nonlinearity is not a registry built-in and cannot be written out"
                    .into(),
            )
        })?;
        let m = plant.matrices();
        Ok(Self {
            a: m.a.clone(),
            b: m.b.clone(),
            s: m.s.clone(),
            v: m.v.clone(),
            c: m.c.clone(),
            fx: m.fx.clone(),
            fy: m.fy.clone(),
            lipschitz_alpha: plant.alpha(),
            nonlinearity: g,
        })
    }

    pub fn build(&self) -> Result<PlantModel, ConfigError> {
        let n = self.a.nrows();
        let m = self.c.nrows();
        let n_f = self.fx.ncols().max(self.fy.ncols());
        let fill = |mat: &DMatrix<f64>, rows: usize| {
            if mat.is_empty() {
                DMatrix::zeros(rows, n_f)
            } else {
                mat.clone()
            }
        };
        let mats = PlantMatrices {
            a: self.a.clone(),
            b: self.b.clone(),
            s: self.s.clone(),
            v: self.v.clone(),
            c: self.c.clone(),
            fx: fill(&self.fx, n),
            fy: fill(&self.fy, m),
        };
        Ok(PlantModel::new(
            mats,
            self.lipschitz_alpha,
            Arc::new(self.nonlinearity.clone()),
        )?)
    }
}

/// Simulation settings; `z0` defaults to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    #[serde(default)]
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    pub input: Input,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient_end: Option<f64>,
}

impl SimulationSpec {
    pub fn to_config(&self, n_z: usize) -> SimulationConfig {
        SimulationConfig {
            t0: self.t0,
            tf: self.tf,
            dt: self.dt,
            integrator: self.integrator,
            x0: DVector::from_vec(self.x0.clone()),
            z0: self
                .z0
                .clone()
                .map_or_else(|| DVector::zeros(n_z), DVector::from_vec),
            input: self.input.clone(),
            transient_end: self.transient_end,
        }
    }

    pub fn from_config(cfg: &SimulationConfig) -> Self {
        Self {
            t0: cfg.t0,
            tf: cfg.tf,
            dt: cfg.dt,
            integrator: cfg.integrator,
            x0: cfg.x0.as_slice().to_vec(),
            z0: cfg.z0.iter().any(|v| *v != 0.0).then(|| cfg.z0.as_slice().to_vec()),
            input: cfg.input.clone(),
            transient_end: cfg.transient_end,
        }
    }
}

/// A complete problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub plant: PlantSpec,
    #[serde(default)]
    pub fault_model: FaultModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<FaultScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    #[serde(default)]
    pub solver: SynthesisOptions,
}

impl ProblemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        FaultModelConfig::new(cfg.fault_model.r)?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Plant, its augmentation and the validated fault model order.
    pub fn build(&self) -> Result<(PlantModel, AugmentedModel), ConfigError> {
        let plant = self.plant.build()?;
        let aug = augment(&plant, FaultModelConfig::new(self.fault_model.r)?)?;
        Ok((plant, aug))
    }

    /// Preset description of a benchmark case.
    pub fn preset(name: &str, r: usize) -> Option<Self> {
        let case = FaultCase::from_preset(name)?;
        let plant = benchmark::robot_arm(&RobotArmParams::default(), case).ok()?;
        let aug_nz = 4 + r;
        Some(Self {
            plant: PlantSpec::from_plant(&plant).ok()?,
            fault_model: FaultModelConfig { r },
            scenario: Some(benchmark::fault_scenario(case)),
            simulation: Some(SimulationSpec::from_config(&benchmark::simulation_config(aug_nz))),
            solver: SynthesisOptions::default(),
        })
    }

    /// A preset name or a path to a TOML file.
    pub fn resolve(source: &str, r: Option<usize>) -> Result<Self, ConfigError> {
        if source.starts_with("benchmark:") {
            return Self::preset(source, r.unwrap_or(1)).ok_or_else(|| {
                ConfigError::Invalid(format!(
                    "unknown preset {source:?}; available: {}, {}",
                    benchmark::SENSOR_PRESET,
                    benchmark::ACTUATOR_PRESET
                ))
            });
        }
        let mut cfg = Self::load(Path::new(source))?;
        if let Some(r) = r {
            cfg.fault_model = FaultModelConfig::new(r)?;
        }
        Ok(cfg)
    }
}

/// Format tag written into every artifact.
pub const ARTIFACT_FORMAT: &str = "nuio-synthesis/1";

/// What `synthesize` writes: the problem it solved and the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisArtifact {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub problem: ProblemConfig,
    pub result: SynthesisResult,
}

impl SynthesisArtifact {
    pub fn new(source: Option<String>, problem: ProblemConfig, result: SynthesisResult) -> Self {
        Self {
            format: ARTIFACT_FORMAT.into(),
            source,
            problem,
            result,
        }
    }

    pub fn to_json(&self) -> Result<String, ConfigError> {
        serde_json::to_string_pretty(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let art: Self =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if art.format != ARTIFACT_FORMAT {
            return Err(ConfigError::Invalid(format!(
                "unsupported artifact format {:?} (expected {ARTIFACT_FORMAT:?})",
                art.format
            )));
        }
        Ok(art)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Rebuild the plant and augmentation and check that the stored
    /// matrices fit them.
    pub fn build(&self) -> Result<(PlantModel, AugmentedModel), ConfigError> {
        let (plant, aug) = self.problem.build()?;
        let res = &self.result;
        let (nz, m) = (aug.n_z, aug.dims.m);
        let shapes = [
            ("P", res.p.shape(), (nz, nz)),
            ("R", res.r.shape(), (nz, m)),
            ("Q", res.q.shape(), (nz, m)),
            ("N", res.observer.n.shape(), (nz, nz)),
            ("E", res.observer.e.shape(), (nz, m)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(ConfigError::Invalid(format!(
                    "artifact {name} is {got:?}, the problem needs {want:?}"
                )));
            }
        }
        Ok((plant, aug))
    }
}
