//! Design observers for both robot-arm fault cases and print the certified
//! bounds.

use std::error::Error;

use nuio::benchmark::{benchmark_scenarios, FaultCase};
use nuio::synthesis::{synthesize, SynthesisOptions, SynthesisResult};

pub fn run_example() -> Result<Vec<(FaultCase, SynthesisResult)>, Box<dyn Error>> {
    let mut out = Vec::new();
    for bc in benchmark_scenarios(1)? {
        let res = synthesize(&bc.augmented, bc.plant.alpha(), &SynthesisOptions::default())?;
        out.push((bc.case, res));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    for (case, res) in run_example()? {
        println!("{}", case.preset());
        println!("  status      {}", res.status.as_str());
        println!("  rho*        {:.8}", res.rho.unwrap_or(f64::NAN));
        println!("  L2 bound    {:.6}", res.l2_gain_bound.unwrap_or(f64::NAN));
        println!("  ISS bound   {:.6}", res.iss_gain_bound);
        println!("  iterations  {}", res.diagnostics.iterations);
        println!("  N =\n{:.4}", res.observer.n);
    }
    Ok(())
}
