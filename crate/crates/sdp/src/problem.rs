use nalgebra::DMatrix;

use crate::expr::{AffineExpr, Structure, VarId, VariableInfo};
use crate::SdpError;

/// Relative asymmetry tolerated before a constraint block is rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Direction of a linear matrix inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sense {
    /// `F(y) ⪯ 0`
    NegSemidefinite,
    /// `F(y) ⪰ 0`
    PosSemidefinite,
}

#[derive(Debug, Clone)]
pub struct LmiConstraint {
    pub name: String,
    pub sense: Sense,
    /// Symmetric affine block `F(y)`.
    pub expr: AffineExpr,
    /// Strict inequalities are enforced with the solver's psd margin:
    /// `F ⪯ −δI` or `F ⪰ δI`.
    pub strict: bool,
}

impl LmiConstraint {
    /// `expr ⪯ 0`
    pub fn nsd(name: &str, expr: AffineExpr) -> Self {
        Self {
            name: name.to_string(),
            sense: Sense::NegSemidefinite,
            expr,
            strict: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.expr.nrows()
    }

    /// The block oriented so that feasibility means positive semidefinite,
    /// without any margin: `−F` for `⪯ 0`, `F` for `⪰ 0`.
    pub fn psd_form(&self) -> AffineExpr {
        match self.sense {
            Sense::NegSemidefinite => -&self.expr,
            Sense::PosSemidefinite => self.expr.clone(),
        }
    }
}

/// Elementwise linear equality `expr(y) = 0`.
#[derive(Debug, Clone)]
pub struct EqualityConstraint {
    pub name: String,
    pub expr: AffineExpr,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverOptions {
    /// Relative primal/dual residual tolerance.
    pub feas_tol: f64,
    /// Relative duality-gap tolerance.
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Margin `δ` used for strict inequalities.
    pub psd_margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
            psd_margin: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SdpError> {
        let ok = self.feas_tol > 0.0
            && self.gap_tol > 0.0
            && self.max_iter > 0
            && self.psd_margin > 0.0
            && self.feas_tol.is_finite()
            && self.gap_tol.is_finite()
            && self.psd_margin.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SdpError::InvalidOptions(format!("{self:?}")))
        }
    }
}

/// A semidefinite program in LMI form:
///
/// ```text
/// minimize    c(y)
/// subject to  F_j(y) ⪯ 0  or  F_j(y) ⪰ 0     for every constraint j
///             G(y) = 0
/// ```
///
/// with every map affine in the flat coordinates `y` of the declared
/// variables.
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    variables: Vec<VariableInfo>,
    n_coords: usize,
    objective: Option<AffineExpr>,
    constraints: Vec<LmiConstraint>,
    equalities: Vec<EqualityConstraint>,
    pub options: SolverOptions,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_options(options: SolverOptions) -> Self {
        Self {
            options,
            ..Self::default()
        }
    }

    fn declare(&mut self, name: &str, rows: usize, cols: usize, structure: Structure) -> VarId {
        let info = VariableInfo {
            name: name.to_string(),
            rows,
            cols,
            structure,
            offset: self.n_coords,
        };
        self.n_coords += info.len();
        self.variables.push(info);
        VarId(self.variables.len() - 1)
    }

    pub fn add_symmetric(&mut self, name: &str, n: usize) -> VarId {
        self.declare(name, n, n, Structure::Symmetric)
    }

    pub fn add_matrix(&mut self, name: &str, rows: usize, cols: usize) -> VarId {
        self.declare(name, rows, cols, Structure::Rectangular)
    }

    pub fn add_scalar(&mut self, name: &str) -> VarId {
        self.declare(name, 1, 1, Structure::Scalar)
    }

    /// Affine expression standing for variable `id`.
    pub fn var(&self, id: VarId) -> AffineExpr {
        self.variables[id.0].expr()
    }

    pub fn variables(&self) -> &[VariableInfo] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &VariableInfo {
        &self.variables[id.0]
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    pub fn constraints(&self) -> &[LmiConstraint] {
        &self.constraints
    }

    pub fn equalities(&self) -> &[EqualityConstraint] {
        &self.equalities
    }

    /// Objective as a 1×1 affine expression; zero when unset.
    pub fn objective(&self) -> AffineExpr {
        self.objective.clone().unwrap_or_else(|| AffineExpr::scalar(0.0))
    }

    fn check_refs(&self, name: &str, expr: &AffineExpr) -> Result<(), SdpError> {
        match expr.max_coordinate() {
            Some(k) if k >= self.n_coords => Err(SdpError::UndeclaredVariable {
                constraint: name.to_string(),
                coordinate: k,
            }),
            _ => Ok(()),
        }
    }

    pub fn minimize(&mut self, objective: AffineExpr) -> Result<(), SdpError> {
        if objective.shape() != (1, 1) {
            return Err(SdpError::Shape(format!(
                "objective must be 1x1, got {:?}",
                objective.shape()
            )));
        }
        self.check_refs("objective", &objective)?;
        self.objective = Some(objective);
        Ok(())
    }

    fn push_lmi(
        &mut self,
        name: &str,
        expr: AffineExpr,
        sense: Sense,
        strict: bool,
    ) -> Result<(), SdpError> {
        let (r, c) = expr.shape();
        if r != c || r == 0 {
            return Err(SdpError::Shape(format!(
                "constraint `{name}` must be square and nonempty, got {r}x{c}"
            )));
        }
        self.check_refs(name, &expr)?;
        let asym = expr.asymmetry();
        if asym >= SYMMETRY_TOL {
            return Err(SdpError::Asymmetric {
                constraint: name.to_string(),
                residual: asym,
            });
        }
        self.constraints.push(LmiConstraint {
            name: name.to_string(),
            sense,
            expr: expr.symmetric_part(),
            strict,
        });
        Ok(())
    }

    /// `expr ⪯ 0`
    pub fn add_nsd(&mut self, name: &str, expr: AffineExpr) -> Result<(), SdpError> {
        self.push_lmi(name, expr, Sense::NegSemidefinite, false)
    }

    /// `expr ⪰ 0`
    pub fn add_psd(&mut self, name: &str, expr: AffineExpr) -> Result<(), SdpError> {
        self.push_lmi(name, expr, Sense::PosSemidefinite, false)
    }

    /// `expr ≺ 0`, enforced as `expr ⪯ −δI`.
    pub fn add_strict_nsd(&mut self, name: &str, expr: AffineExpr) -> Result<(), SdpError> {
        self.push_lmi(name, expr, Sense::NegSemidefinite, true)
    }

    /// `expr ≻ 0`, enforced as `expr ⪰ δI`.
    pub fn add_strict_psd(&mut self, name: &str, expr: AffineExpr) -> Result<(), SdpError> {
        self.push_lmi(name, expr, Sense::PosSemidefinite, true)
    }

    pub fn add_lmi(&mut self, name: &str, expr: AffineExpr, sense: Sense) -> Result<(), SdpError> {
        self.push_lmi(name, expr, sense, false)
    }

    /// Add a constraint assembled elsewhere, with the same checks as the
    /// other `add_*` methods.
    pub fn add_constraint(&mut self, c: LmiConstraint) -> Result<(), SdpError> {
        self.push_lmi(&c.name, c.expr, c.sense, c.strict)
    }

    /// Every entry of `expr` equals zero.
    pub fn add_equality(&mut self, name: &str, expr: AffineExpr) -> Result<(), SdpError> {
        self.check_refs(name, &expr)?;
        self.equalities.push(EqualityConstraint {
            name: name.to_string(),
            expr,
        });
        Ok(())
    }

    /// Constant shift applied to constraint `j` so that the solver sees
    /// `psd_form − margin·I ⪰ 0`.
    pub(crate) fn margin_of(&self, c: &LmiConstraint) -> f64 {
        if c.strict {
            self.options.psd_margin
        } else {
            0.0
        }
    }

    /// Multiply every constraint block by `s > 0`.
    pub fn scaled_constraints(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.constraints {
            c.expr = c.expr.scale(s);
        }
        out
    }

    /// Evaluate variable `id` at flat coordinates `y`.
    pub fn unpack(&self, id: VarId, y: &[f64]) -> DMatrix<f64> {
        self.variables[id.0].unpack(y)
    }
}
