use nalgebra::DMatrix;

use crate::expr::{VarId, VariableInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Status {
    Optimal,
    Infeasible,
    /// The objective decreases without bound over the feasible set.
    Unbounded,
    #[cfg_attr(feature = "serde", serde(rename = "max_iter"))]
    MaxIterations,
    NumericalFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::MaxIterations => "max_iter",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Iteration statistics of the last solve.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostics {
    pub iterations: usize,
    /// `‖b − A(X)‖ / (1 + ‖b‖)` in the internal standard form.
    pub primal_residual: f64,
    /// `‖C − Aᵀy − S‖ / (1 + ‖C‖)`.
    pub dual_residual: f64,
    /// `⟨X, S⟩ / (1 + |pobj| + |dobj|)`.
    pub relative_gap: f64,
    /// Optimal margin `s*` of the auxiliary problem `min s : F_j + sI ⪰ 0`,
    /// when it was run to classify a failed solve.
    pub phase_one_margin: Option<f64>,
    pub message: String,
}

/// Farkas-type certificate of infeasibility: positive semidefinite
/// multipliers `Z_j`, one per constraint (in constraint order, psd
/// orientation), with `Σ_j ⟨Z_j, F_j(y)⟩ < 0` for every `y`, up to the
/// reported residual.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityCertificate {
    pub multipliers: Vec<DMatrix<f64>>,
    /// Norm of the part of `y ↦ Σ⟨Z_j, F_j(y)⟩` that still depends on `y`,
    /// after normalizing the constant part to −1.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: Status,
    /// Flat coordinate vector of every variable.
    pub values: Vec<f64>,
    pub variables: Vec<VariableInfo>,
    pub objective: f64,
    /// Most negative eigenvalue across all constraint blocks in psd
    /// orientation (`−F` for `F ⪯ 0`), without strictness margins.
    pub worst_violation: f64,
    pub diagnostics: Diagnostics,
    pub certificate: Option<InfeasibilityCertificate>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value_of(&self, id: VarId) -> DMatrix<f64> {
        self.variables[id.index()].unpack(&self.values)
    }

    pub fn value(&self, name: &str) -> Option<DMatrix<f64>> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.unpack(&self.values))
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.value(name).map(|m| m[(0, 0)])
    }
}
