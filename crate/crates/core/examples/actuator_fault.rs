//! Estimate a sinusoidal actuator fault and compare the observed gain from
//! fault derivative to estimation error with the certified bound. The
//! observer starts on the true state so that the transient does not count.

use std::error::Error;

use nuio::benchmark::{benchmark_case, FaultCase};
use nuio::simulation::{simulate, SimulationTrace};
use nuio::synthesis::{synthesize, SynthesisOptions};

pub struct Outcome {
    pub trace: SimulationTrace,
    pub l2_bound: f64,
}

pub fn run_example() -> Result<Outcome, Box<dyn Error>> {
    let bc = benchmark_case(FaultCase::Actuator, 1)?;
    let res = synthesize(&bc.augmented, bc.plant.alpha(), &SynthesisOptions::default())?;
    let mut sim = bc.simulation.clone();
    let xa0 = bc.augmented.stack(&sim.x0, &bc.scenario.chain(bc.augmented.r, sim.t0));
    sim.z0 = &res.observer.m * xa0;
    let trace = simulate(&bc.plant, &bc.augmented, &res.observer, &bc.scenario, &sim)?;
    Ok(Outcome {
        trace,
        l2_bound: res.l2_gain_bound.ok_or("no L2 bound")?,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let o = run_example()?;
    let s = &o.trace.summary;
    println!("max |e| after {:.0} s   {:.4e}", s.transient_end, s.max_error_after_transient);
    println!("empirical L2 gain      {:.4}", s.empirical_l2.unwrap_or(f64::NAN));
    println!("certified L2 bound     {:.4}", o.l2_bound);
    Ok(())
}
