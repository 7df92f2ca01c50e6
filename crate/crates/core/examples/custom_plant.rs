//! Describe a damped pendulum with an actuator fault in TOML, design an
//! observer for it and run the configured simulation.

use std::error::Error;

use nuio::config::ProblemConfig;
use nuio::simulation::{simulate, SimulationTrace};
use nuio::synthesis::{synthesize, SynthesisResult};

pub const PROBLEM: &str = r#"
[plant]
A = [[0.0, 1.0], [-2.0, -0.5]]
B = [[0.0], [1.0]]
S = [[0.0], [1.0]]
V = [[1.0, 0.0]]
C = [[1.0, 0.0], [0.0, 1.0]]
Fx = [[0.0], [1.0]]
Fy = [[0.0], [0.0]]
lipschitz_alpha = 1.0
nonlinearity = { kind = "neg_sin_x4" }

[fault_model]
r = 1

[scenario]
channels = [{ kind = "sinusoid", amplitude = 0.2, omega = 0.5, t_on = 5.0 }]

[simulation]
tf = 30.0
dt = 1e-3
x0 = [0.3, 0.0]
input = { kind = "channels", channels = [{ kind = "sinusoid", amplitude = 0.5, omega = 1.0 }] }
transient_end = 10.0
"#;

pub fn run_example() -> Result<(SynthesisResult, SimulationTrace), Box<dyn Error>> {
    let cfg = ProblemConfig::from_toml_str(PROBLEM)?;
    let (plant, aug) = cfg.build()?;
    let res = synthesize(&aug, plant.alpha(), &cfg.solver)?;
    let scenario = cfg.scenario.as_ref().ok_or("no scenario")?;
    let sim = cfg.simulation.as_ref().ok_or("no simulation")?.to_config(aug.n_z);
    let trace = simulate(&plant, &aug, &res.observer, scenario, &sim)?;
    Ok((res, trace))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let (res, trace) = run_example()?;
    println!("rho* = {:.6}, ISS bound = {:.4}", res.rho.unwrap_or(f64::NAN), res.iss_gain_bound);
    println!("max |e| for t >= 10 s: {:.4e}", trace.summary.max_error_after_transient);
    println!("terminal fault error:  {:.4e}", trace.summary.terminal_fault_error);
    Ok(())
}
