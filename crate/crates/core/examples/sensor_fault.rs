//! Estimate a saturated-ramp sensor fault on the robot arm and write the
//! trace as CSV next to the system temp directory.

use std::error::Error;

use nuio::benchmark::{benchmark_case, FaultCase};
use nuio::simulation::{simulate, write_csv, SimulationTrace};
use nuio::synthesis::{synthesize, SynthesisOptions};

pub fn run_example() -> Result<SimulationTrace, Box<dyn Error>> {
    let bc = benchmark_case(FaultCase::Sensor, 1)?;
    let res = synthesize(&bc.augmented, bc.plant.alpha(), &SynthesisOptions::default())?;
    let trace = simulate(&bc.plant, &bc.augmented, &res.observer, &bc.scenario, &bc.simulation)?;
    Ok(trace)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let trace = run_example()?;
    let path = std::env::temp_dir().join("nuio_sensor_fault.csv");
    write_csv(&trace, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    for t in [0.0, 20.0, 30.0, 40.0, 60.0] {
        let k = trace.t.iter().position(|s| *s >= t - 1e-9).unwrap_or(trace.len() - 1);
        println!("t = {:5.1}  f = {:+.6}  f_hat = {:+.6}  |e| = {:.3e}", trace.t[k], trace.f[(0, k)], trace.f_hat[(0, k)], trace.e_norm[k]);
    }
    println!("terminal fault error {:.3e}", trace.summary.terminal_fault_error);
    println!("trace written to {}", path.display());
    Ok(())
}
