//! Independently check a synthesized certificate: recomputed LMI blocks,
//! observer identities and sampled Lyapunov and dissipation inequalities.

use std::error::Error;

use nuio::benchmark::{benchmark_case, FaultCase};
use nuio::synthesis::{synthesize, SynthesisOptions};
use nuio::verification::{verify_result, SamplingOptions, VerificationSuite};

pub fn run_example() -> Result<(VerificationSuite, VerificationSuite), Box<dyn Error>> {
    let bc = benchmark_case(FaultCase::Actuator, 1)?;
    let res = synthesize(&bc.augmented, bc.plant.alpha(), &SynthesisOptions::default())?;
    let opts = SamplingOptions {
        samples: 20_000,
        ..SamplingOptions::default()
    };
    let good = verify_result(&bc.augmented, &res, &opts);

    // A corrupted Lyapunov matrix must be rejected.
    let mut bad = res.clone();
    bad.p[(0, 0)] = -bad.p[(0, 0)];
    let rejected = verify_result(&bc.augmented, &bad, &opts);
    Ok((good, rejected))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let (good, bad) = run_example()?;
    println!("synthesized certificate:\n{good}\n");
    println!("with P[0,0] negated:\n{bad}");
    Ok(())
}
