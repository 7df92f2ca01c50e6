//! Flexible-joint robot arm benchmark with sensor and actuator fault cases.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{
    augment, AugmentedModel, BuiltinNonlinearity, FaultModelConfig, ModelError, PlantMatrices,
    PlantModel,
};
use crate::simulation::{FaultScenario, Input, Signal, SimulationConfig};

pub const SENSOR_PRESET: &str = "benchmark:robot-arm:sensor";
pub const ACTUATOR_PRESET: &str = "benchmark:robot-arm:actuator";

/// Physical parameters; state is `[ω_m, θ_m, ω_l, θ_l]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotArmParams {
    pub j_l: f64,
    pub j_m: f64,
    pub f_l: f64,
    pub f_m: f64,
    pub k: f64,
    pub m: f64,
    pub g: f64,
    pub c: f64,
    pub k_tau: f64,
}

impl Default for RobotArmParams {
    fn default() -> Self {
        Self {
            j_l: 4.5,
            j_m: 1.0,
            f_l: 0.5,
            f_m: 1.0,
            k: 2.0,
            m: 4.0,
            g: 9.8,
            c: 0.5,
            k_tau: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultCase {
    Sensor,
    Actuator,
}

impl FaultCase {
    pub fn preset(self) -> &'static str {
        match self {
            FaultCase::Sensor => SENSOR_PRESET,
            FaultCase::Actuator => ACTUATOR_PRESET,
        }
    }

    pub fn from_preset(name: &str) -> Option<Self> {
        match name {
            SENSOR_PRESET => Some(FaultCase::Sensor),
            ACTUATOR_PRESET => Some(FaultCase::Actuator),
            _ => None,
        }
    }
}

/// Plant matrices with the fault distribution of `case`.
pub fn robot_arm_matrices(p: &RobotArmParams, case: FaultCase) -> PlantMatrices {
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            -p.f_m / p.j_m,
            -p.k / p.j_m,
            0.0,
            p.k / p.j_m,
            1.0,
            0.0,
            0.0,
            0.0,
            0.0,
            p.k / p.j_l,
            -p.f_l / p.j_l,
            -p.k / p.j_l,
            0.0,
            0.0,
            1.0,
            0.0,
        ],
    );
    let (fx, fy) = match case {
        FaultCase::Sensor => (DMatrix::zeros(4, 1), DMatrix::from_column_slice(2, 1, &[1.0, 0.0])),
        FaultCase::Actuator => (
            DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::zeros(2, 1),
        ),
    };
    PlantMatrices {
        a,
        b: DMatrix::from_column_slice(4, 1, &[p.k_tau / p.j_m, 0.0, 0.0, 0.0]),
        s: DMatrix::from_column_slice(4, 1, &[0.0, 0.0, p.m * p.g * p.c / p.j_l, 0.0]),
        v: DMatrix::from_row_slice(1, 4, &[0.0, 0.0, 0.0, 1.0]),
        c: DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        fx,
        fy,
    }
}

/// `g(v) = −sin(v)` with unit Lipschitz constant (`α = 1`).
pub fn robot_arm(p: &RobotArmParams, case: FaultCase) -> Result<PlantModel, ModelError> {
    PlantModel::new(
        robot_arm_matrices(p, case),
        1.0,
        Arc::new(BuiltinNonlinearity::NegSin),
    )
}

pub fn fault_scenario(case: FaultCase) -> FaultScenario {
    let ch = match case {
        FaultCase::Sensor => Signal::IncipientRamp {
            t_on: 25.0,
            slope: 0.05,
            saturation: 0.5,
        },
        FaultCase::Actuator => Signal::Sinusoid {
            amplitude: 0.1,
            omega: 0.25,
            phase: 0.0,
            t_on: 0.0,
        },
    };
    FaultScenario { channels: vec![ch] }
}

/// `u = 2 sin(0.25 t)`, `x0 = 0.01·1`, `z0 = 0` on `[0, 60]` with `dt = 1e-3`.
pub fn simulation_config(n_z: usize) -> SimulationConfig {
    SimulationConfig {
        t0: 0.0,
        tf: 60.0,
        dt: 1e-3,
        integrator: Default::default(),
        x0: DVector::from_element(4, 0.01),
        z0: DVector::zeros(n_z),
        input: Input::Channels {
            channels: vec![Signal::Sinusoid {
                amplitude: 2.0,
                omega: 0.25,
                phase: 0.0,
                t_on: 0.0,
            }],
        },
        transient_end: Some(30.0),
    }
}

/// Everything needed to run one benchmark case.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub case: FaultCase,
    pub plant: PlantModel,
    pub augmented: AugmentedModel,
    pub scenario: FaultScenario,
    pub simulation: SimulationConfig,
}

pub fn benchmark_case(case: FaultCase, r: usize) -> Result<BenchmarkCase, ModelError> {
    let plant = robot_arm(&RobotArmParams::default(), case)?;
    let augmented = augment(&plant, FaultModelConfig::new(r)?)?;
    let simulation = simulation_config(augmented.n_z);
    Ok(BenchmarkCase {
        case,
        plant,
        augmented,
        scenario: fault_scenario(case),
        simulation,
    })
}

pub fn benchmark_scenarios(r: usize) -> Result<Vec<BenchmarkCase>, ModelError> {
    [FaultCase::Sensor, FaultCase::Actuator]
        .into_iter()
        .map(|c| benchmark_case(c, r))
        .collect()
}
