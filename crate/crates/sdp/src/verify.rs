//! Solver-independent re-evaluation of every constraint at given values.

use nalgebra::SymmetricEigen;

use crate::problem::{SdpProblem, Sense};
use crate::solution::SdpSolution;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub name: String,
    pub sense: Sense,
    pub dim: usize,
    /// Smallest eigenvalue of the block in psd orientation (`−F` for
    /// `F ⪯ 0`). For a `⪯ 0` block the largest eigenvalue of `F` is the
    /// negation of this value.
    pub min_eigenvalue: f64,
    /// Margin the solver was asked to respect (zero for non-strict blocks).
    pub margin: f64,
}

impl BlockCheck {
    /// Largest eigenvalue of `F` for `F ⪯ 0` blocks, smallest for `F ⪰ 0`.
    pub fn extreme_eigenvalue(&self) -> f64 {
        match self.sense {
            Sense::NegSemidefinite => -self.min_eigenvalue,
            Sense::PosSemidefinite => self.min_eigenvalue,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub blocks: Vec<BlockCheck>,
    /// Largest absolute residual over all equality entries.
    pub equality_residual: f64,
}

impl ViolationReport {
    /// Most negative psd-oriented eigenvalue over all blocks (`+∞` when
    /// there are none).
    pub fn worst(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    /// Every block has psd-oriented eigenvalues `≥ −tol` and equalities hold
    /// to `tol`.
    pub fn satisfied(&self, tol: f64) -> bool {
        self.worst() >= -tol && self.equality_residual <= tol
    }

    pub fn block(&self, name: &str) -> Option<&BlockCheck> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

pub fn verify_solution(problem: &SdpProblem, solution: &SdpSolution) -> ViolationReport {
    verify_values(problem, &solution.values)
}

pub fn verify_values(problem: &SdpProblem, values: &[f64]) -> ViolationReport {
    let blocks = problem
        .constraints()
        .iter()
        .map(|c| {
            let m = c.psd_form().eval(values);
            let m = (&m + m.transpose()) * 0.5;
            let min_eigenvalue = SymmetricEigen::new(m).eigenvalues.min();
            BlockCheck {
                name: c.name.clone(),
                sense: c.sense,
                dim: c.dim(),
                min_eigenvalue,
                margin: problem.margin_of(c),
            }
        })
        .collect();
    let equality_residual = problem
        .equalities()
        .iter()
        .map(|e| e.expr.eval(values).amax())
        .fold(0.0, f64::max);
    ViolationReport {
        blocks,
        equality_residual,
    }
}
