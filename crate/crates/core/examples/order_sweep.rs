//! Sweep the fault model order on the actuator case. Higher orders model
//! more fault derivatives; the attenuation level is reported for each.

use std::error::Error;

use nuio::benchmark::{benchmark_case, FaultCase};
use nuio::synthesis::{synthesize, SynthesisOptions};

pub fn run_example() -> Result<Vec<(usize, usize, Option<f64>)>, Box<dyn Error>> {
    let mut rows = Vec::new();
    for r in 1..=3 {
        let bc = benchmark_case(FaultCase::Actuator, r)?;
        let res = synthesize(&bc.augmented, bc.plant.alpha(), &SynthesisOptions::default())?;
        rows.push((r, bc.augmented.n_z, res.rho));
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    println!(" r  n_z  rho*");
    for (r, nz, rho) in run_example()? {
        println!("{r:2}  {nz:3}  {}", rho.map_or("n/a".into(), |v| format!("{v:.6}")));
    }
    Ok(())
}
