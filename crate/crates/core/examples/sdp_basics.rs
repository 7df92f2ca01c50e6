//! Three small semidefinite programs solved with the built-in backend.

use std::error::Error;

use nalgebra::DMatrix;
use nuio_sdp::{solve, verify_solution, AffineExpr, SdpProblem, Status};

pub struct Outcome {
    pub scalar_rho: f64,
    pub trace_p: f64,
    pub lyapunov_max_eig: f64,
}

pub fn run_example() -> Result<Outcome, Box<dyn Error>> {
    // minimize ρ subject to [[-1, 0], [0, -ρ]] ⪯ 0, ρ ≥ 0
    let mut p = SdpProblem::new();
    let rho = {
        let id = p.add_scalar("rho");
        p.var(id)
    };
    p.minimize(rho.clone())?;
    let blk = AffineExpr::block(&[
        vec![AffineExpr::constant(DMatrix::from_element(1, 1, -1.0)), AffineExpr::zeros(1, 1)],
        vec![AffineExpr::zeros(1, 1), -&rho],
    ]);
    p.add_nsd("diag", blk)?;
    p.add_psd("rho >= 0", rho)?;
    let sol = solve(&p);
    if sol.status != Status::Optimal {
        return Err(format!("scalar program: {:?}", sol.status).into());
    }
    let scalar_rho = sol.objective;

    // minimize tr P subject to P ⪰ I
    let mut p = SdpProblem::new();
    let pe = {
        let id = p.add_symmetric("P", 2);
        p.var(id)
    };
    p.minimize(pe.trace())?;
    p.add_psd("P >= I", pe - AffineExpr::identity(2))?;
    let sol = solve(&p);
    let trace_p = sol.objective;

    // find P ≻ 0 with AᵀP + PA ⪯ −I for A = −I₃
    let a = -DMatrix::<f64>::identity(3, 3);
    let mut p = SdpProblem::new();
    let pe = {
        let id = p.add_symmetric("P", 3);
        p.var(id)
    };
    p.add_psd("P >= I", pe.clone() - AffineExpr::identity(3))?;
    let lyap = pe.lmul(&a.transpose()) + pe.rmul(&a) + AffineExpr::identity(3);
    p.add_nsd("Lyapunov", lyap)?;
    let sol = solve(&p);
    let report = verify_solution(&p, &sol);
    let pv = sol.value("P").ok_or("missing P")?;
    let lyapunov_max_eig = (a.transpose() * &pv + &pv * &a).symmetric_eigenvalues().max();
    if !report.satisfied(1e-9) {
        return Err(format!("Lyapunov certificate rejected: {report:?}").into());
    }

    Ok(Outcome {
        scalar_rho,
        trace_p,
        lyapunov_max_eig,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let o = run_example()?;
    println!("min rho            = {:.3e}", o.scalar_rho);
    println!("min tr P (P >= I)  = {:.9}", o.trace_p);
    println!("max eig(A'P + PA)  = {:.6}", o.lyapunov_max_eig);
    Ok(())
}
