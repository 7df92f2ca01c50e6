//! Observer synthesis: the ISS and L2 matrix inequalities, the convex
//! program minimizing the L2 level `ρ`, and recovery of the observer
//! matrices from the decision variables.
//!
//! Decision variables are `P = Pᵀ ∈ ℝ^{n_z×n_z}`, `R, Q ∈ ℝ^{n_z×m}`,
//! `J ∈ ℝ^{n_v×m}` and `ρ ≥ 0`; the gains follow as `E = P⁻¹R`,
//! `K = P⁻¹Q`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use nuio_sdp::{
    AffineExpr, Diagnostics, LmiConstraint, SdpProblem, SolverOptions, Status, VarId,
};
use serde::{Deserialize, Serialize};

use crate::model::AugmentedModel;

/// Condition number above which `P` is treated as singular.
pub const MAX_P_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SynthesisError {
    #[error("{0}")]
    Dimension(String),
    #[error("invalid synthesis options: {0}")]
    InvalidOptions(String),
    #[error("observer program is infeasible{}", hint.as_deref().map(|h| format!(": {h}")).unwrap_or_default())]
    Infeasible {
        hint: Option<String>,
        precheck: PrecheckReport,
        diagnostics: Diagnostics,
    },
    #[error("solver stopped with status {status}: {}", diagnostics.message)]
    Solver {
        status: Status,
        diagnostics: Diagnostics,
    },
    #[error("P is numerically singular (condition number {condition:.3e})")]
    SingularP { condition: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    /// ISS and L2 inequalities, minimize `ρ`.
    #[default]
    Full,
    /// ISS inequality only (feasibility, minimum-trace `P`).
    IssOnly,
    /// L2 inequality only, minimize `ρ`.
    L2Only,
    /// Full program plus `M S_a = 0`, i.e. `(P + R C_a) S_a = 0`.
    Decoupled,
}

impl SynthesisMode {
    pub fn has_iss(self) -> bool {
        !matches!(self, SynthesisMode::L2Only)
    }
    pub fn has_l2(self) -> bool {
        !matches!(self, SynthesisMode::IssOnly)
    }
}

impl std::str::FromStr for SynthesisMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "iss_only" | "iss-only" => Ok(Self::IssOnly),
            "l2_only" | "l2-only" => Ok(Self::L2Only),
            "decoupled" => Ok(Self::Decoupled),
            _ => Err(format!(
                "unknown mode `{s}` (expected full, iss_only, l2_only or decoupled)"
            )),
        }
    }
}

/// Bounds that keep the optimal gains finite: `P ⪰ p_floor·I` and
/// `‖[R Q]‖₂ ≤ kappa`, hence `‖[E K]‖₂ ≤ kappa / p_floor`.
///
/// Without them the infimum of `ρ` may only be approached as the gains
/// grow without bound, and a solver returns whichever near-optimal point
/// its iterations stop at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainBound {
    pub p_floor: f64,
    pub kappa: f64,
}

impl Default for GainBound {
    fn default() -> Self {
        Self {
            p_floor: 1.0,
            kappa: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisOptions {
    /// ISS margin `ε` in `X + εI`.
    pub epsilon: f64,
    /// `P ⪰ delta_p·I`.
    pub delta_p: f64,
    /// Both inequalities are imposed as `F ⪯ −margin·I` so that the
    /// returned point satisfies the non-strict forms with room to spare.
    pub certificate_margin: f64,
    pub mode: SynthesisMode,
    pub gain_bound: Option<GainBound>,
    #[serde(rename = "backend")]
    pub solver: SolverOptions,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            delta_p: 1e-6,
            certificate_margin: 1e-6,
            mode: SynthesisMode::Full,
            gain_bound: Some(GainBound::default()),
            solver: SolverOptions::default(),
        }
    }
}

impl SynthesisOptions {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.epsilon) {
            return Err(SynthesisError::InvalidOptions(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !pos(self.delta_p) {
            return Err(SynthesisError::InvalidOptions(format!(
                "delta_p must be positive, got {}",
                self.delta_p
            )));
        }
        if !(self.certificate_margin >= 0.0 && self.certificate_margin.is_finite()) {
            return Err(SynthesisError::InvalidOptions(format!(
                "certificate_margin must be nonnegative, got {}",
                self.certificate_margin
            )));
        }
        if let Some(gb) = self.gain_bound {
            if !pos(gb.p_floor) || !pos(gb.kappa) {
                return Err(SynthesisError::InvalidOptions(format!(
                    "gain bound needs positive p_floor and kappa, got {gb:?}"
                )));
            }
        }
        self.solver
            .validate()
            .map_err(|e| SynthesisError::InvalidOptions(e.to_string()))
    }
}

/// Decision variables as affine expressions. Use [`LmiVars::declare`] to
/// create them in a problem or [`LmiVars::fixed`] to evaluate the
/// inequalities at given values.
#[derive(Debug, Clone)]
pub struct LmiVars {
    pub p: AffineExpr,
    pub r: AffineExpr,
    pub q: AffineExpr,
    pub j: AffineExpr,
    pub rho: AffineExpr,
}

/// Handles of the declared variables.
#[derive(Debug, Clone, Copy)]
pub struct LmiVarIds {
    pub p: VarId,
    pub r: VarId,
    pub q: VarId,
    pub j: VarId,
    pub rho: VarId,
}

impl LmiVars {
    pub fn declare(problem: &mut SdpProblem, aug: &AugmentedModel) -> (Self, LmiVarIds) {
        let d = aug.dims;
        let ids = LmiVarIds {
            p: problem.add_symmetric("P", aug.n_z),
            r: problem.add_matrix("R", aug.n_z, d.m),
            q: problem.add_matrix("Q", aug.n_z, d.m),
            j: problem.add_matrix("J", d.n_v, d.m),
            rho: problem.add_scalar("rho"),
        };
        let vars = Self {
            p: problem.var(ids.p),
            r: problem.var(ids.r),
            q: problem.var(ids.q),
            j: problem.var(ids.j),
            rho: problem.var(ids.rho),
        };
        (vars, ids)
    }

    pub fn fixed(
        p: &DMatrix<f64>,
        r: &DMatrix<f64>,
        q: &DMatrix<f64>,
        j: &DMatrix<f64>,
        rho: f64,
    ) -> Self {
        Self {
            p: AffineExpr::constant(p.clone()),
            r: AffineExpr::constant(r.clone()),
            q: AffineExpr::constant(q.clone()),
            j: AffineExpr::constant(j.clone()),
            rho: AffineExpr::scalar(rho),
        }
    }

    fn check(&self, aug: &AugmentedModel) -> Result<(), SynthesisError> {
        let d = aug.dims;
        let want = [
            ("P", &self.p, (aug.n_z, aug.n_z)),
            ("R", &self.r, (aug.n_z, d.m)),
            ("Q", &self.q, (aug.n_z, d.m)),
            ("J", &self.j, (d.n_v, d.m)),
            ("rho", &self.rho, (1, 1)),
        ];
        for (name, e, shape) in want {
            if e.shape() != shape {
                return Err(SynthesisError::Dimension(format!(
                    "{name} has shape {:?}, expected {shape:?}",
                    e.shape()
                )));
            }
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<(), SynthesisError> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(SynthesisError::InvalidOptions(format!(
            "alpha must be finite and nonnegative, got {alpha}"
        )))
    }
}

/// `X` and `X₁₂` shared by both inequalities.
fn x_blocks(aug: &AugmentedModel, alpha: f64, v: &LmiVars) -> (AffineExpr, AffineExpr) {
    let (a_a, c_a, v_a, s_a) = (&aug.a_a, &aug.c_a, &aug.v_a, &aug.s_a);
    let pm = &v.p + &v.r.rmul(c_a);
    let t = pm.rmul(a_a) - v.q.rmul(c_a);
    let s11 = &t + &t.transpose();
    let vjc = v.j.rmul(c_a).lmul(&v_a.transpose());
    let x = s11 + AffineExpr::constant(v_a.transpose() * v_a * alpha)
        - (&vjc + &vjc.transpose()).scale(alpha);
    let sa = alpha.sqrt();
    let x12 = AffineExpr::hstack(&[pm.rmul(s_a).scale(sa), v.j.rmul(c_a).transpose().scale(sa)]);
    (x, x12)
}

/// `[[X + εI, X₁₂], [X₁₂ᵀ, −I]] ⪯ 0` of size `n_z + n_g + n_v`.
pub fn build_iss_lmi(
    aug: &AugmentedModel,
    alpha: f64,
    epsilon: f64,
    vars: &LmiVars,
) -> Result<LmiConstraint, SynthesisError> {
    check_alpha(alpha)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SynthesisError::InvalidOptions(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    vars.check(aug)?;
    let (x, x12) = x_blocks(aug, alpha, vars);
    let k = aug.dims.n_g + aug.dims.n_v;
    let block = AffineExpr::block(&[
        vec![x + AffineExpr::identity(aug.n_z).scale(epsilon), x12.clone()],
        vec![x12.transpose(), -AffineExpr::identity(k)],
    ]);
    Ok(LmiConstraint::nsd("iss", block))
}

/// `ρ·I_k` for a scalar expression.
fn scaled_identity(rho: &AffineExpr, k: usize) -> AffineExpr {
    let rows: Vec<Vec<AffineExpr>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        rho.clone()
                    } else {
                        AffineExpr::zeros(1, 1)
                    }
                })
                .collect()
        })
        .collect();
    AffineExpr::block(&rows)
}

/// `[[X + ½C̄ᵀC̄, (P + R C_a) D_a, X₁₂], [·, −ρI, 0], [·, ·, −I]] ⪯ 0` of size
/// `n_z + n_f + n_g + n_v`.
pub fn build_l2_lmi(
    aug: &AugmentedModel,
    alpha: f64,
    vars: &LmiVars,
) -> Result<LmiConstraint, SynthesisError> {
    check_alpha(alpha)?;
    vars.check(aug)?;
    let d = aug.dims;
    if d.n_f == 0 {
        return Err(SynthesisError::Dimension(
            "the L2 inequality needs at least one fault channel".into(),
        ));
    }
    let (x, x12) = x_blocks(aug, alpha, vars);
    let k = d.n_g + d.n_v;
    let pmd = (&vars.p + &vars.r.rmul(&aug.c_a)).rmul(&aug.d_a);
    let l11 = x + AffineExpr::constant(aug.c_bar.transpose() * &aug.c_bar * 0.5);
    let block = AffineExpr::block(&[
        vec![l11, pmd.clone(), x12.clone()],
        vec![
            pmd.transpose(),
            -scaled_identity(&vars.rho, d.n_f),
            AffineExpr::zeros(d.n_f, k),
        ],
        vec![x12.transpose(), AffineExpr::zeros(k, d.n_f), -AffineExpr::identity(k)],
    ]);
    Ok(LmiConstraint::nsd("l2", block))
}

/// Necessary condition `rank(Fy) < m`: with full-row-rank `Fy` every output
/// direction can be explained by a sensor fault and the program has no
/// solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecheckReport {
    pub rank_fy: usize,
    pub m: usize,
    pub passes: bool,
    pub tolerance: f64,
}

pub fn numeric_rank(m: &DMatrix<f64>) -> (usize, f64) {
    if m.is_empty() {
        return (0, 0.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let tol = m.nrows().max(m.ncols()) as f64 * smax * 1e-12;
    (sv.iter().filter(|&&s| s > tol).count(), tol)
}

pub fn feasibility_precheck(aug: &AugmentedModel) -> PrecheckReport {
    let d = aug.dims;
    let fy = aug.c_a.columns(d.n, d.n_f).into_owned();
    let (rank_fy, tolerance) = numeric_rank(&fy);
    PrecheckReport {
        rank_fy,
        m: d.m,
        passes: rank_fy < d.m,
        tolerance,
    }
}

/// Observer matrices of
///
/// ```text
/// ż   = N z + G u + L y + M S_a g(V_a x̂_a + J (y − C_a x̂_a), u, t)
/// x̂_a = z − E y
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observer {
    #[serde(with = "crate::rows")]
    pub e: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub k: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub j: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub m: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub n: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub g: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub l: DMatrix<f64>,
}

impl Observer {
    /// Observer matrices for given gains `E`, `K`, `J`.
    pub fn from_gains(
        aug: &AugmentedModel,
        e: DMatrix<f64>,
        k: DMatrix<f64>,
        j: DMatrix<f64>,
    ) -> Self {
        let id = DMatrix::<f64>::identity(aug.n_z, aug.n_z);
        let m = &id + &e * &aug.c_a;
        let n = &m * &aug.a_a - &k * &aug.c_a;
        let g = &m * &aug.b_a;
        let im = DMatrix::<f64>::identity(aug.dims.m, aug.dims.m);
        let l = &k * (im + &aug.c_a * &e) - &m * &aug.a_a * &e;
        Self { e, k, j, m, n, g, l }
    }

    /// Injection-free observer with `E = K = 0`: `M = I`, `N = A_a`.
    pub fn zero_gain(aug: &AugmentedModel) -> Self {
        let d = aug.dims;
        Self::from_gains(
            aug,
            DMatrix::zeros(aug.n_z, d.m),
            DMatrix::zeros(aug.n_z, d.m),
            DMatrix::zeros(d.n_v, d.m),
        )
    }
}

/// Condition number of a symmetric matrix from its eigenvalues (infinite
/// when not positive definite).
pub fn spd_condition(p: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new((p + p.transpose()) * 0.5).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `E = P⁻¹R`, `K = P⁻¹Q` by Cholesky solves, then the observer matrices.
pub fn recover_observer(
    p: &DMatrix<f64>,
    r: &DMatrix<f64>,
    q: &DMatrix<f64>,
    j: &DMatrix<f64>,
    aug: &AugmentedModel,
) -> Result<Observer, SynthesisError> {
    let d = aug.dims;
    let shapes = [
        ("P", p.shape(), (aug.n_z, aug.n_z)),
        ("R", r.shape(), (aug.n_z, d.m)),
        ("Q", q.shape(), (aug.n_z, d.m)),
        ("J", j.shape(), (d.n_v, d.m)),
    ];
    for (name, got, want) in shapes {
        if got != want {
            return Err(SynthesisError::Dimension(format!(
                "{name} has shape {got:?}, expected {want:?}"
            )));
        }
    }
    let condition = spd_condition(p);
    if condition > MAX_P_CONDITION || !condition.is_finite() {
        return Err(SynthesisError::SingularP { condition });
    }
    let ps = (p + p.transpose()) * 0.5;
    let ch = Cholesky::new(ps).ok_or(SynthesisError::SingularP { condition })?;
    let e = ch.solve(r);
    let k = ch.solve(q);
    Ok(Observer::from_gains(aug, e, k, j.clone()))
}

/// `2‖P M D_a‖₂ / ε` with `M = I + E C_a`.
pub fn iss_gain_bound(
    p: &DMatrix<f64>,
    obs: &Observer,
    aug: &AugmentedModel,
    epsilon: f64,
) -> f64 {
    let pmd = p * &obs.m * &aug.d_a;
    let norm = if pmd.is_empty() {
        0.0
    } else {
        pmd.svd(false, false).singular_values.max()
    };
    2.0 * norm / epsilon
}

/// Solution of `E C_a S_a = −S_a`, which removes the nonlinearity from the
/// error dynamics (`M S_a = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    /// Rank of `C_a S_a`.
    pub rank: usize,
    pub n_g: usize,
    #[serde(with = "crate::rows::option")]
    pub e0: Option<DMatrix<f64>>,
    /// `‖E₀ C_a S_a + S_a‖` when a solution exists.
    pub residual: Option<f64>,
}

pub fn decoupling_gain(aug: &AugmentedModel) -> DecouplingReport {
    let cs = &aug.c_a * &aug.s_a;
    let (rank, _) = numeric_rank(&cs);
    let n_g = aug.dims.n_g;
    let zero_channel = aug.s_a.iter().all(|v| *v == 0.0);
    let e0 = if zero_channel {
        Some(DMatrix::zeros(aug.n_z, aug.dims.m))
    } else if rank == n_g && n_g > 0 {
        // E₀ = −S_a (CS)⁺ with (CS)⁺ = ((CS)ᵀCS)⁻¹(CS)ᵀ.
        let gram = cs.transpose() * &cs;
        Cholesky::new(gram).map(|ch| -(&aug.s_a * ch.solve(&cs.transpose())))
    } else {
        None
    };
    let residual = e0.as_ref().map(|e| (e * &cs + &aug.s_a).norm());
    DecouplingReport {
        rank,
        n_g,
        e0,
        residual,
    }
}

/// Largest eigenvalues of the re-evaluated constraint blocks at the
/// returned point (without the margin), as reported by the backend's
/// verifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub iss_max_eigenvalue: Option<f64>,
    pub l2_max_eigenvalue: Option<f64>,
    pub p_min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub mode: SynthesisMode,
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(with = "crate::rows")]
    pub p: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub r: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub q: DMatrix<f64>,
    /// `None` in `iss_only` mode, where `ρ` is not part of the program.
    pub rho: Option<f64>,
    pub observer: Observer,
    pub iss_gain_bound: f64,
    /// `sqrt(2ρ)`.
    pub l2_gain_bound: Option<f64>,
    pub certificate: CertificateCheck,
    pub status: Status,
    pub diagnostics: Diagnostics,
}

impl SynthesisResult {
    pub fn j(&self) -> &DMatrix<f64> {
        &self.observer.j
    }
}

/// Assemble the program without solving it.
pub fn build_program(
    aug: &AugmentedModel,
    alpha: f64,
    opts: &SynthesisOptions,
) -> Result<(SdpProblem, LmiVarIds), SynthesisError> {
    opts.validate()?;
    check_alpha(alpha)?;
    let mode = opts.mode;
    let mut prob = SdpProblem::with_options(opts.solver.clone());
    let (vars, ids) = LmiVars::declare(&mut prob, aug);
    let n_z = aug.n_z;
    let sdp = |e: nuio_sdp::SdpError| SynthesisError::Dimension(e.to_string());

    let p_floor = opts
        .gain_bound
        .map_or(opts.delta_p, |gb| gb.p_floor.max(opts.delta_p));
    prob.add_psd("P >= delta I", &vars.p - &AffineExpr::identity(n_z).scale(p_floor))
        .map_err(sdp)?;

    let margin = opts.certificate_margin;
    if mode.has_iss() {
        let mut c = build_iss_lmi(aug, alpha, opts.epsilon, &vars)?;
        c.expr = &c.expr + &AffineExpr::identity(c.dim()).scale(margin);
        prob.add_constraint(c).map_err(sdp)?;
    }
    if mode.has_l2() {
        let mut c = build_l2_lmi(aug, alpha, &vars)?;
        c.expr = &c.expr + &AffineExpr::identity(c.dim()).scale(margin);
        prob.add_constraint(c).map_err(sdp)?;
        prob.add_psd("rho >= 0", vars.rho.clone()).map_err(sdp)?;
        prob.minimize(vars.rho.clone()).map_err(sdp)?;
    } else {
        prob.minimize(vars.p.trace().scale(1.0 / n_z as f64)).map_err(sdp)?;
    }
    if mode == SynthesisMode::Decoupled {
        let ms = (&vars.p + &vars.r.rmul(&aug.c_a)).rmul(&aug.s_a);
        prob.add_equality("M S_a = 0", ms).map_err(sdp)?;
    }
    if let Some(gb) = opts.gain_bound {
        let m = aug.dims.m;
        let rq = AffineExpr::hstack(&[vars.r.clone(), vars.q.clone()]);
        let blk = AffineExpr::block(&[
            vec![AffineExpr::identity(n_z).scale(gb.kappa), rq.clone()],
            vec![rq.transpose(), AffineExpr::identity(2 * m).scale(gb.kappa)],
        ]);
        prob.add_psd("gain bound", blk).map_err(sdp)?;
    }
    Ok((prob, ids))
}

/// Solve the observer program and recover the observer.
pub fn synthesize(
    aug: &AugmentedModel,
    alpha: f64,
    opts: &SynthesisOptions,
) -> Result<SynthesisResult, SynthesisError> {
    let precheck = feasibility_precheck(aug);
    let (prob, ids) = build_program(aug, alpha, opts)?;
    let sol = nuio_sdp::solve(&prob);
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            let hint = (!precheck.passes).then(|| {
                format!(
                    "Fy has full row rank ({} = m), so every output direction can be \
                     attributed to a sensor fault; drop or combine a faulty sensor channel \
                     so that rank(Fy) < m",
                    precheck.rank_fy
                )
            });
            return Err(SynthesisError::Infeasible {
                hint,
                precheck,
                diagnostics: sol.diagnostics,
            });
        }
        status => {
            return Err(SynthesisError::Solver {
                status,
                diagnostics: sol.diagnostics,
            })
        }
    }

    let p = sol.value_of(ids.p);
    let r = sol.value_of(ids.r);
    let q = sol.value_of(ids.q);
    let j = sol.value_of(ids.j);
    let observer = recover_observer(&p, &r, &q, &j, aug)?;

    let report = nuio_sdp::verify_solution(&prob, &sol);
    let certificate = CertificateCheck {
        iss_max_eigenvalue: report.block("iss").map(|b| b.extreme_eigenvalue() - opts.certificate_margin),
        l2_max_eigenvalue: report.block("l2").map(|b| b.extreme_eigenvalue() - opts.certificate_margin),
        p_min_eigenvalue: SymmetricEigen::new(p.clone()).eigenvalues.min(),
    };

    let rho = opts
        .mode
        .has_l2()
        .then(|| sol.value_of(ids.rho)[(0, 0)].max(0.0));
    let iss_gain_bound = iss_gain_bound(&p, &observer, aug, opts.epsilon);
    Ok(SynthesisResult {
        mode: opts.mode,
        alpha,
        epsilon: opts.epsilon,
        p,
        r,
        q,
        rho,
        observer,
        iss_gain_bound,
        l2_gain_bound: rho.map(|r| (2.0 * r).sqrt()),
        certificate,
        status: sol.status,
        diagnostics: sol.diagnostics,
    })
}
