//! Numerical checks of a synthesized observer: algebraic identities,
//! re-evaluation of both matrix inequalities with plain matrix arithmetic,
//! and sampled Lyapunov-decrease and Hamilton–Jacobi inequalities.
//!
//! Sampling is split into fixed-size chunks; chunk `i` draws from a ChaCha
//! stream `(seed, i)`, so reports do not depend on the thread count.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::AugmentedModel;
use crate::synthesis::{Observer, SynthesisResult};

const CHUNK: usize = 4096;
const DEFAULT_SEED: u64 = 0x5eed_0b5e;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    pub samples: usize,
    pub seed: u64,
    /// Slack allowed on each sampled inequality.
    pub tolerance: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: DEFAULT_SEED,
            tolerance: 1e-9,
        }
    }
}

/// Outcome of one sampled check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Largest value of the left-hand side (should be ≤ 0).
    pub worst_margin: f64,
    pub violations: usize,
    /// Set when the check could not run (e.g. `ρ ≤ 0`).
    pub note: Option<String>,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: worst margin {:.3e}, {} violation(s) in {} samples (seed {}, tol {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst_margin,
            self.violations,
            self.samples,
            self.seed,
            self.tolerance
        )?;
        if let Some(n) = &self.note {
            write!(f, " [{n}]")?;
        }
        Ok(())
    }
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Residuals of the observer's defining identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityAudit {
    /// `‖G − M B_a‖_F`.
    pub g_residual: f64,
    /// `‖N M + L C_a − M A_a‖_F`.
    pub nm_residual: f64,
    /// `‖M − (I + E C_a)‖_F`.
    pub m_residual: f64,
    /// `‖M S_a‖_F`; zero means the nonlinearity is decoupled from the error.
    pub ms_norm: f64,
    pub decoupled: bool,
    /// `‖P E − R‖_F` and `‖P K − Q‖_F` when the LMI variables are supplied.
    pub pe_residual: Option<f64>,
    pub pk_residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for IdentityAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} observer_identities: |G-MB_a| = {:.3e}, |NM+LC_a-MA_a| = {:.3e}, |M-I-EC_a| = {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.g_residual,
            self.nm_residual,
            self.m_residual
        )?;
        if let (Some(a), Some(b)) = (self.pe_residual, self.pk_residual) {
            write!(f, ", |PE-R| = {a:.3e}, |PK-Q| = {b:.3e}")?;
        }
        write!(
            f,
            ", |MS_a| = {:.3e} ({})",
            self.ms_norm,
            if self.decoupled { "decoupled" } else { "coupled" }
        )
    }
}

/// Gain-consistency inputs for [`observer_identity_audit`].
#[derive(Debug, Clone, Copy)]
pub struct LmiPoint<'a> {
    pub p: &'a DMatrix<f64>,
    pub r: &'a DMatrix<f64>,
    pub q: &'a DMatrix<f64>,
}

pub fn observer_identity_audit(
    obs: &Observer,
    aug: &AugmentedModel,
    lmi: Option<LmiPoint<'_>>,
    tolerance: f64,
) -> IdentityAudit {
    let id = DMatrix::<f64>::identity(aug.n_z, aug.n_z);
    let g_residual = frob(&(&obs.g - &obs.m * &aug.b_a));
    let nm_residual = frob(&(&obs.n * &obs.m + &obs.l * &aug.c_a - &obs.m * &aug.a_a));
    let m_residual = frob(&(&obs.m - (id + &obs.e * &aug.c_a)));
    let ms_norm = frob(&(&obs.m * &aug.s_a));
    let (pe_residual, pk_residual) = match lmi {
        Some(pt) => (
            Some(frob(&(pt.p * &obs.e - pt.r))),
            Some(frob(&(pt.p * &obs.k - pt.q))),
        ),
        None => (None, None),
    };
    let worst = [g_residual, nm_residual, m_residual]
        .into_iter()
        .chain(pe_residual)
        .chain(pk_residual)
        .fold(0.0, f64::max);
    IdentityAudit {
        g_residual,
        nm_residual,
        m_residual,
        ms_norm,
        decoupled: ms_norm <= tolerance,
        pe_residual,
        pk_residual,
        tolerance,
        passed: worst.is_finite() && worst <= tolerance,
    }
}

fn max_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.max()
}

/// `(X, X₁₂)` from plain matrices.
fn x_blocks_numeric(
    aug: &AugmentedModel,
    alpha: f64,
    p: &DMatrix<f64>,
    r: &DMatrix<f64>,
    q: &DMatrix<f64>,
    j: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let pm = p + r * &aug.c_a;
    let t = &pm * &aug.a_a - q * &aug.c_a;
    let jc = j * &aug.c_a;
    let vt = aug.v_a.transpose();
    let x = &t + t.transpose()
        + (&vt * &aug.v_a - &vt * &jc - jc.transpose() * &aug.v_a) * alpha;
    let ps = &pm * &aug.s_a;
    let mut x12 = DMatrix::zeros(aug.n_z, ps.ncols() + jc.nrows());
    x12.columns_mut(0, ps.ncols()).copy_from(&ps);
    x12.columns_mut(ps.ncols(), jc.nrows()).copy_from(&jc.transpose());
    (x, x12 * alpha.sqrt())
}

fn assemble(blocks: &[&[&DMatrix<f64>]]) -> DMatrix<f64> {
    let heights: Vec<usize> = blocks.iter().map(|row| row[0].nrows()).collect();
    let widths: Vec<usize> = blocks[0].iter().map(|b| b.ncols()).collect();
    let mut out = DMatrix::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (i, row) in blocks.iter().enumerate() {
        let mut c0 = 0;
        for (j, b) in row.iter().enumerate() {
            out.view_mut((r0, c0), (heights[i], widths[j])).copy_from(*b);
            c0 += widths[j];
        }
        r0 += heights[i];
    }
    out
}

/// The ISS block evaluated with dense arithmetic.
pub fn iss_block(aug: &AugmentedModel, res: &SynthesisResult) -> DMatrix<f64> {
    let (x, x12) = x_blocks_numeric(aug, res.alpha, &res.p, &res.r, &res.q, res.j());
    let k = x12.ncols();
    let x11 = x + DMatrix::identity(aug.n_z, aug.n_z) * res.epsilon;
    let m22 = -DMatrix::<f64>::identity(k, k);
    assemble(&[&[&x11, &x12], &[&x12.transpose(), &m22]])
}

/// The L2 block evaluated with dense arithmetic; `None` without `ρ`.
pub fn l2_block(aug: &AugmentedModel, res: &SynthesisResult) -> Option<DMatrix<f64>> {
    let rho = res.rho?;
    let nf = aug.dims.n_f;
    let (x, x12) = x_blocks_numeric(aug, res.alpha, &res.p, &res.r, &res.q, res.j());
    let k = x12.ncols();
    let l11 = x + aug.c_bar.transpose() * &aug.c_bar * 0.5;
    let pmd = (&res.p + &res.r * &aug.c_a) * &aug.d_a;
    let rr = -DMatrix::<f64>::identity(nf, nf) * rho;
    let zf = DMatrix::zeros(nf, k);
    let ik = -DMatrix::<f64>::identity(k, k);
    Some(assemble(&[
        &[&l11, &pmd, &x12],
        &[&pmd.transpose(), &rr, &zf],
        &[&x12.transpose(), &zf.transpose(), &ik],
    ]))
}

/// Largest eigenvalues of the recomputed blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecheck {
    pub iss_max_eigenvalue: Option<f64>,
    pub l2_max_eigenvalue: Option<f64>,
    pub p_min_eigenvalue: f64,
}

impl CertificateRecheck {
    pub fn worst(&self) -> f64 {
        self.iss_max_eigenvalue
            .into_iter()
            .chain(self.l2_max_eigenvalue)
            .chain(std::iter::once(-self.p_min_eigenvalue))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn recheck_certificate(aug: &AugmentedModel, res: &SynthesisResult) -> CertificateRecheck {
    CertificateRecheck {
        iss_max_eigenvalue: res.mode.has_iss().then(|| max_eig(&iss_block(aug, res))),
        l2_max_eigenvalue: l2_block(aug, res).map(|b| max_eig(&b)),
        p_min_eigenvalue: SymmetricEigen::new(res.p.clone()).eigenvalues.min(),
    }
}

/// `Δ = NᵀP + PN + α P M S_a S_aᵀ Mᵀ P + α (V_a − J C_a)ᵀ(V_a − J C_a)`, the
/// observer-gain form.
pub fn delta_matrix(aug: &AugmentedModel, obs: &Observer, p: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let pn = p * &obs.n;
    let pms = p * &obs.m * &aug.s_a;
    let w = &aug.v_a - &obs.j * &aug.c_a;
    pn.transpose() + &pn + (&pms * pms.transpose()) * alpha + (w.transpose() * &w) * alpha
}

/// `‖Δ − (X + X₁₂X₁₂ᵀ)‖_F / max(1, ‖Δ‖_F)` for a result.
pub fn delta_equivalence_residual(aug: &AugmentedModel, res: &SynthesisResult) -> f64 {
    delta_equivalence_at(aug, res.alpha, &res.observer, &res.p, &res.r, &res.q)
}

/// Same residual for arbitrary `P`, `R`, `Q` and an observer built from
/// `E = P⁻¹R`, `K = P⁻¹Q` (and its `J`).
pub fn delta_equivalence_at(
    aug: &AugmentedModel,
    alpha: f64,
    obs: &Observer,
    p: &DMatrix<f64>,
    r: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> f64 {
    let delta = delta_matrix(aug, obs, p, alpha);
    let (x, x12) = x_blocks_numeric(aug, alpha, p, r, q, &obs.j);
    frob(&(&delta - (x + &x12 * x12.transpose()))) / frob(&delta).max(1.0)
}

/// `(Ẇ, eᵀΔe)` at one point, with `Ẇ = eᵀ(NᵀP + PN)e + 2 eᵀ P M S_a δg`.
pub fn lyapunov_terms(
    aug: &AugmentedModel,
    res: &SynthesisResult,
    e: &DVector<f64>,
    dg: &DVector<f64>,
) -> (f64, f64) {
    let s = Sampler::new(aug, &res.observer, &res.p, res.alpha);
    let w_dot = 2.0 * e.dot(&(&s.pn * e)) + 2.0 * e.dot(&(&s.pms * dg));
    (w_dot, e.dot(&(&s.delta * e)))
}

/// Left-hand side of the dissipation inequality at one point.
pub fn hamilton_jacobi_value(
    aug: &AugmentedModel,
    res: &SynthesisResult,
    rho: f64,
    e: &DVector<f64>,
    dg: &DVector<f64>,
    w: &DVector<f64>,
) -> f64 {
    Sampler::new(aug, &res.observer, &res.p, res.alpha).hj_value(e, dg, w, rho)
}

/// Matrices used by the samplers.
struct Sampler<'a> {
    aug: &'a AugmentedModel,
    alpha: f64,
    pn: DMatrix<f64>,
    pms: DMatrix<f64>,
    pmd: DMatrix<f64>,
    w: DMatrix<f64>,
    delta: DMatrix<f64>,
}

impl<'a> Sampler<'a> {
    fn new(aug: &'a AugmentedModel, obs: &Observer, p: &DMatrix<f64>, alpha: f64) -> Self {
        let pm = p * &obs.m;
        Self {
            aug,
            alpha,
            pn: p * &obs.n,
            pms: &pm * &aug.s_a,
            pmd: &pm * &aug.d_a,
            w: &aug.v_a - &obs.j * &aug.c_a,
            delta: delta_matrix(aug, obs, p, alpha),
        }
    }

    fn unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        loop {
            let v = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
            let nv = v.norm();
            if nv > 1e-12 {
                return v / nv;
            }
        }
    }

    /// An admissible `δg` for error `e`: `‖δg‖ ≤ α‖(V_a − J C_a) e‖`.
    /// Families rotate with `kind`: the literal form `α s (V_a − J C_a) e`
    /// (when `n_g = n_v`), the direction that maximizes `eᵀ P M S_a δg`, and
    /// a random direction. The scale `s` is uniform in `[−1, 1]`, with the
    /// edge `s = 1` forced for a share of the samples.
    fn delta_g(&self, rng: &mut ChaCha8Rng, e: &DVector<f64>, kind: usize) -> DVector<f64> {
        let n_g = self.aug.dims.n_g;
        let we = &self.w * e;
        let bound = self.alpha * we.norm();
        let s: f64 = if kind % 4 == 3 { 1.0 } else { rng.random_range(-1.0..=1.0) };
        match kind % 3 {
            0 if n_g == we.len() => we * (self.alpha * s),
            1 => {
                let dir = self.pms.transpose() * e;
                let nd = dir.norm();
                if nd > 0.0 {
                    dir * (bound * s.abs() / nd)
                } else {
                    Self::unit(rng, n_g) * (bound * s)
                }
            }
            _ => Self::unit(rng, n_g) * (bound * s),
        }
    }

    /// `Ẇ = eᵀ(NᵀP + PN)e + 2 eᵀ P M S_a δg` minus the two bounds; returns
    /// `max(Ẇ − eᵀΔe, eᵀΔe + ε‖e‖²)`.
    fn lyapunov_margin(&self, e: &DVector<f64>, dg: &DVector<f64>, eps: f64) -> f64 {
        let w_dot = 2.0 * e.dot(&(&self.pn * e)) + 2.0 * e.dot(&(&self.pms * dg));
        let quad = e.dot(&(&self.delta * e));
        (w_dot - quad).max(quad + eps * e.norm_squared())
    }

    /// `2eᵀP(Ne + MS_a δg − MD_a w) + ½‖C̄e‖² − ρ‖w‖²`.
    fn hj_value(&self, e: &DVector<f64>, dg: &DVector<f64>, w: &DVector<f64>, rho: f64) -> f64 {
        let ce = &self.aug.c_bar * e;
        2.0 * e.dot(&(&self.pn * e)) + 2.0 * e.dot(&(&self.pms * dg))
            - 2.0 * e.dot(&(&self.pmd * w))
            + 0.5 * ce.norm_squared()
            - rho * w.norm_squared()
    }

    /// Disturbances: the maximizer `w★ = −ρ⁻¹ D_aᵀMᵀP e` scaled by
    /// `s ∈ [0, 2]`, or a random vector of comparable size.
    fn disturbance(&self, rng: &mut ChaCha8Rng, e: &DVector<f64>, rho: f64, kind: usize) -> DVector<f64> {
        let nf = self.pmd.ncols();
        let star = -(self.pmd.transpose() * e) / rho;
        if kind % 2 == 0 {
            let s: f64 = if kind % 4 == 0 { 1.0 } else { rng.random_range(0.0..=2.0) };
            star * s
        } else {
            let scale = star.norm().max(1.0) * rng.random_range(0.0..=2.0);
            Self::unit(rng, nf) * scale
        }
    }
}

/// Run `f(rng, index)` over `samples` draws in parallel and reduce to
/// `(worst, violations)`.
fn sample_parallel<F>(samples: usize, seed: u64, tol: f64, f: F) -> (f64, usize)
where
    F: Fn(&mut ChaCha8Rng, usize) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let mut worst = f64::NEG_INFINITY;
            let mut bad = 0usize;
            for i in lo..hi {
                let v = f(&mut rng, i);
                if !(v <= tol) {
                    bad += 1;
                }
                worst = worst.max(if v.is_nan() { f64::INFINITY } else { v });
            }
            (worst, bad)
        })
        .reduce(|| (f64::NEG_INFINITY, 0), |a, b| (a.0.max(b.0), a.1 + b.1))
}

fn sample_errors(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    Sampler::unit(rng, n)
}

/// Sampled check of `Ẇ ≤ eᵀΔe ≤ −ε‖e‖²` for fault-free error dynamics.
/// Errors are drawn on the unit sphere (both sides are quadratic in
/// `(e, δg)`).
pub fn lyapunov_decrease_check(
    aug: &AugmentedModel,
    res: &SynthesisResult,
    opts: &SamplingOptions,
) -> CheckReport {
    let sampler = Sampler::new(aug, &res.observer, &res.p, res.alpha);
    let eps = res.epsilon;
    let (worst, violations) = sample_parallel(opts.samples, opts.seed, opts.tolerance, |rng, i| {
        let e = sample_errors(rng, aug.n_z);
        let dg = sampler.delta_g(rng, &e, i);
        sampler.lyapunov_margin(&e, &dg, eps)
    });
    CheckReport {
        name: "lyapunov_decrease".into(),
        passed: violations == 0 && opts.samples > 0,
        samples: opts.samples,
        seed: opts.seed,
        tolerance: opts.tolerance,
        worst_margin: worst,
        violations,
        note: None,
    }
}

/// Sampled check of the dissipation inequality
/// `Ẇ + ½‖C̄e‖² − ρ‖f⁽ʳ⁾‖² ≤ 0` with `Ẇ` along the error dynamics. Its
/// maximum over the disturbance is the quadratic form
/// `eᵀ(Δ + ½C̄ᵀC̄ + ρ⁻¹ P M D_a D_aᵀ Mᵀ P)e` at the Lipschitz edge.
pub fn hamilton_jacobi_check(
    aug: &AugmentedModel,
    res: &SynthesisResult,
    rho: f64,
    opts: &SamplingOptions,
) -> CheckReport {
    let mut report = CheckReport {
        name: "hamilton_jacobi".into(),
        passed: false,
        samples: opts.samples,
        seed: opts.seed,
        tolerance: opts.tolerance,
        worst_margin: f64::INFINITY,
        violations: opts.samples,
        note: None,
    };
    if !(rho > 0.0 && rho.is_finite()) {
        report.note = Some(format!("rho = {rho:e} must be positive"));
        return report;
    }
    if aug.dims.n_f == 0 {
        report.note = Some("no fault channels".into());
        return report;
    }
    let sampler = Sampler::new(aug, &res.observer, &res.p, res.alpha);
    let (worst, violations) = sample_parallel(opts.samples, opts.seed, opts.tolerance, |rng, i| {
        let e = sample_errors(rng, aug.n_z);
        let dg = sampler.delta_g(rng, &e, i);
        let w = sampler.disturbance(rng, &e, rho, i / 3);
        sampler.hj_value(&e, &dg, &w, rho)
    });
    report.worst_margin = worst;
    report.violations = violations;
    report.passed = violations == 0 && opts.samples > 0;
    report
}

/// The closed-form quadratic-form matrix of the Hamilton–Jacobi check.
pub fn hamilton_jacobi_matrix(aug: &AugmentedModel, res: &SynthesisResult, rho: f64) -> DMatrix<f64> {
    let sampler = Sampler::new(aug, &res.observer, &res.p, res.alpha);
    &sampler.delta
        + aug.c_bar.transpose() * &aug.c_bar * 0.5
        + &sampler.pmd * sampler.pmd.transpose() / rho
}

/// All checks run by the `verify` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSuite {
    pub identities: IdentityAudit,
    pub lyapunov: CheckReport,
    pub hamilton_jacobi: Option<CheckReport>,
}

impl VerificationSuite {
    pub fn passed(&self) -> bool {
        self.identities.passed
            && self.lyapunov.passed
            && self.hamilton_jacobi.as_ref().is_none_or(|r| r.passed)
    }
}

impl fmt::Display for VerificationSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.identities)?;
        writeln!(f, "{}", self.lyapunov)?;
        match &self.hamilton_jacobi {
            Some(r) => writeln!(f, "{r}"),
            None => writeln!(f, "SKIP hamilton_jacobi: no L2 level in this result"),
        }
    }
}

/// Identity tolerance used by [`verify_result`].
pub const IDENTITY_TOL: f64 = 1e-9;

pub fn verify_result(aug: &AugmentedModel, res: &SynthesisResult, opts: &SamplingOptions) -> VerificationSuite {
    let lmi = LmiPoint {
        p: &res.p,
        r: &res.r,
        q: &res.q,
    };
    VerificationSuite {
        identities: observer_identity_audit(&res.observer, aug, Some(lmi), IDENTITY_TOL),
        lyapunov: lyapunov_decrease_check(aug, res, opts),
        hamilton_jacobi: res.rho.map(|rho| hamilton_jacobi_check(aug, res, rho, opts)),
    }
}
