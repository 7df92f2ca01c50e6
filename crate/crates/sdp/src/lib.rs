//! Dense semidefinite programming for small linear matrix inequality
//! problems.
//!
//! Problems are stated with matrix-valued [`AffineExpr`]essions over declared
//! symmetric, rectangular and scalar variables, then handed to an
//! [`SdpBackend`]. The built-in [`InteriorPoint`] backend is an
//! infeasible-start primal-dual method (HKM direction, Mehrotra
//! predictor-corrector) with infeasibility detection.
//!
//! ```
//! use nalgebra::DMatrix;
//! use nuio_sdp::{AffineExpr, SdpProblem, Status};
//!
//! // minimize trace(P) subject to P ⪰ I
//! let mut p = SdpProblem::new();
//! let pv = p.add_symmetric("P", 2);
//! let pe = p.var(pv);
//! p.minimize(pe.trace()).unwrap();
//! p.add_psd("P >= I", pe - AffineExpr::identity(2)).unwrap();
//! let sol = nuio_sdp::solve(&p);
//! assert_eq!(sol.status, Status::Optimal);
//! assert!((sol.objective - 2.0).abs() < 1e-6);
//! let popt = sol.value("P").unwrap();
//! assert!((popt - DMatrix::<f64>::identity(2, 2)).amax() < 1e-6);
//! ```

mod dump;
mod expr;
mod ipm;
mod problem;
mod solution;
mod standard;
mod verify;

use nalgebra::{DMatrix, DVector};

pub use dump::{to_sdpa_string, write_sdpa};
pub use expr::{AffineExpr, Structure, VarId, VariableInfo};
pub use problem::{
    EqualityConstraint, LmiConstraint, SdpProblem, Sense, SolverOptions, SYMMETRY_TOL,
};
pub use solution::{Diagnostics, InfeasibilityCertificate, SdpSolution, Status};
pub use verify::{verify_solution, verify_values, BlockCheck, ViolationReport};

use standard::{Block, Prepared, StandardForm};

#[derive(Debug, thiserror::Error)]
pub enum SdpError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("constraint `{constraint}` is not symmetric (relative residual {residual:.3e})")]
    Asymmetric { constraint: String, residual: f64 },
    #[error("constraint `{constraint}` references undeclared coordinate {coordinate}")]
    UndeclaredVariable { constraint: String, coordinate: usize },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

/// Anything that can solve an [`SdpProblem`].
pub trait SdpBackend {
    fn solve(&self, problem: &SdpProblem) -> SdpSolution;
}

/// Built-in primal-dual interior-point backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint;

/// Solve with the built-in backend.
pub fn solve(problem: &SdpProblem) -> SdpSolution {
    InteriorPoint.solve(problem)
}

impl SdpBackend for InteriorPoint {
    fn solve(&self, problem: &SdpProblem) -> SdpSolution {
        let opts = &problem.options;
        let n = problem.n_coords();
        let mut diag = Diagnostics::default();

        if let Err(e) = opts.validate() {
            diag.message = e.to_string();
            return finish(problem, Status::NumericalFailure, vec![0.0; n], diag, None);
        }

        let red = match standard::prepare(problem) {
            Prepared::Ready(r) => r,
            Prepared::InconsistentEqualities(res) => {
                diag.message = format!("linear equalities are inconsistent (residual {res:.3e})");
                return finish(problem, Status::Infeasible, vec![0.0; n], diag, None);
            }
        };

        if red.form.n_vars() == 0 || red.form.blocks.is_empty() {
            // Nothing left to optimize: check the fixed point directly.
            let y = red.y0.as_slice().to_vec();
            let report = verify_values(problem, &y);
            let feasible = problem
                .constraints()
                .iter()
                .zip(&report.blocks)
                .all(|(c, b)| b.min_eigenvalue >= problem.margin_of(c) - opts.feas_tol);
            let status = match (feasible, red.free_objective_direction) {
                (false, _) => Status::Infeasible,
                (true, true) => Status::Unbounded,
                (true, false) => Status::Optimal,
            };
            diag.message = "no free coordinates after reduction".into();
            return finish(problem, status, y, diag, None);
        }

        let out = ipm::run(&red.form, opts);
        diag.iterations = out.iterations;
        diag.primal_residual = out.pinf;
        diag.dual_residual = out.dinf;
        diag.relative_gap = out.relgap;
        diag.message = out.message.clone();
        let mut status = out.status;
        let y = red.lift(&out.w);

        let mut certificate = out.ray.as_ref().map(|(z, res)| InfeasibilityCertificate {
            multipliers: z.clone(),
            residual: *res,
        });

        if matches!(status, Status::MaxIterations | Status::NumericalFailure) {
            if let Some((margin, cert)) = phase_one(&red.form, opts) {
                diag.phase_one_margin = Some(margin);
                if margin > opts.feas_tol && cert.is_some() {
                    status = Status::Infeasible;
                    certificate = cert;
                    diag.message = format!(
                        "{}; auxiliary margin {margin:.3e} > 0 certifies infeasibility",
                        diag.message
                    );
                }
            }
        }

        if red.free_objective_direction && status == Status::Optimal {
            status = Status::Unbounded;
            diag.message = "objective depends on a direction no constraint restricts".into();
        }

        finish(problem, status, y.as_slice().to_vec(), diag, certificate)
    }
}

fn finish(
    problem: &SdpProblem,
    mut status: Status,
    values: Vec<f64>,
    mut diagnostics: Diagnostics,
    certificate: Option<InfeasibilityCertificate>,
) -> SdpSolution {
    let report = verify_values(problem, &values);
    let worst_violation = report.worst();
    let objective = problem.objective().eval(&values)[(0, 0)];
    let tol = 10.0 * problem.options.feas_tol;
    if status == Status::Optimal
        && (worst_violation < -tol || report.equality_residual > tol * (1.0 + max_abs(&values)))
    {
        status = Status::NumericalFailure;
        diagnostics.message = format!(
            "converged point violates constraints on re-evaluation (worst eigenvalue {worst_violation:.3e})"
        );
    }
    SdpSolution {
        status,
        values,
        variables: problem.variables().to_vec(),
        objective,
        worst_violation,
        diagnostics,
        certificate: if status == Status::Infeasible { certificate } else { None },
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Solve `min s` subject to `S_j(w) + sI ⪰ 0` and `s ≥ −1`. The primal
/// multipliers of the original blocks, whether or not the auxiliary solve
/// fully converged, are tested as a Farkas ray.
fn phase_one(
    sf: &StandardForm,
    opts: &SolverOptions,
) -> Option<(f64, Option<InfeasibilityCertificate>)> {
    let k = sf.n_vars();
    let mut blocks: Vec<Block> = sf
        .blocks
        .iter()
        .map(|b| {
            let mut a = b.a.clone();
            a.push((k, -DMatrix::identity(b.dim, b.dim)));
            Block {
                dim: b.dim,
                c: b.c.clone(),
                a,
            }
        })
        .collect();
    blocks.push(Block {
        dim: 1,
        c: DMatrix::from_element(1, 1, 1.0),
        a: vec![(k, DMatrix::from_element(1, 1, -1.0))],
    });
    let mut b = DVector::zeros(k + 1);
    b[k] = -1.0;
    let aux = StandardForm { blocks, b };
    let out = ipm::run(&aux, opts);
    if !out.w.iter().all(|v| v.is_finite()) {
        return None;
    }
    let margin = out.w[k];
    let zs: Vec<DMatrix<f64>> = out.x[..sf.blocks.len()].to_vec();
    let val: f64 = sf.blocks.iter().zip(&zs).map(|(b, z)| b.c.dot(z)).sum();
    let cert = if val < 0.0 {
        let zs: Vec<DMatrix<f64>> = zs.iter().map(|z| z / -val).collect();
        let residual = sf.apply_a(&zs).norm();
        (residual <= ipm::RAY_TOL).then_some(InfeasibilityCertificate {
            multipliers: zs,
            residual,
        })
    } else {
        None
    };
    Some((margin, cert))
}
