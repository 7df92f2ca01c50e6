//! Infeasible-start primal-dual path-following method with the HKM search
//! direction and Mehrotra predictor-corrector steps.
//!
//! Primal: `min Σ⟨C_j, X_j⟩  s.t.  A(X) = b, X_j ⪰ 0`.
//! Dual:   `max bᵀw          s.t.  S_j = C_j − (Aᵀw)_j ⪰ 0`.
//!
//! User problems live on the dual side, so dual infeasibility of the user
//! problem shows up as a primal ray `X ⪰ 0, A(X) = 0, ⟨C, X⟩ < 0`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::problem::SolverOptions;
use crate::solution::Status;
use crate::standard::StandardForm;

/// Acceptance threshold for a normalized primal ray `Z ⪰ 0`, `⟨C, Z⟩ = −1`.
/// A ray with `‖A(Z)‖ ≤ r` rules out every dual point with `‖w‖ < 1/r`,
/// since `⟨Z, S(w)⟩ ≤ −1 + r‖w‖`.
pub(crate) const RAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub status: Status,
    pub w: DVector<f64>,
    pub x: Vec<DMatrix<f64>>,
    pub iterations: usize,
    pub pinf: f64,
    pub dinf: f64,
    pub relgap: f64,
    /// Normalized primal ray when the dual side is infeasible.
    pub ray: Option<(Vec<DMatrix<f64>>, f64)>,
    pub message: String,
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn frob2(ms: &[DMatrix<f64>]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum()
}

/// Largest `α ≥ 0` with `x + α·dx ⪰ 0`, given `x ≻ 0`.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let l = Cholesky::new(x.clone())?.unpack();
    let half = l.solve_lower_triangular(dx)?;
    let scaled = l.solve_lower_triangular(&half.transpose())?;
    let eig = SymmetricEigen::new(sym(scaled));
    let lmin = eig.eigenvalues.min();
    Some(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

fn inverse_spd(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(s.clone()).map(|c| sym(c.inverse()))
}

/// Solve `M v = r` for the symmetric positive definite Schur matrix, with a
/// small diagonal shift as a last resort.
fn solve_schur(m: &DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch.solve(r));
    }
    let dmax = m.diagonal().amax().max(1.0);
    for shift in [1e-14, 1e-12, 1e-10] {
        let mut mm = m.clone();
        for i in 0..mm.nrows() {
            mm[(i, i)] += shift * dmax;
        }
        if let Some(ch) = Cholesky::new(mm) {
            return Some(ch.solve(r));
        }
    }
    m.clone().lu().solve(r)
}

struct Direction {
    dw: DVector<f64>,
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
}

pub(crate) fn run(sf: &StandardForm, opts: &SolverOptions) -> Outcome {
    let k = sf.n_vars();
    let nb = sf.blocks.len();
    let n_total: usize = sf.blocks.iter().map(|b| b.dim).sum();
    let norm_b = sf.b.norm();
    let norm_c = sf.blocks.iter().map(|b| b.c.norm_squared()).sum::<f64>().sqrt();

    // Starting point in the spirit of SDPT3's `infeaspt`.
    let mut x: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
    let mut s: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
    for blk in &sf.blocks {
        let nj = blk.dim as f64;
        let mut xi = 10f64.max(nj.sqrt());
        let mut eta = 10f64.max(nj.sqrt()).max(blk.c.norm());
        for (i, aij) in &blk.a {
            let na = aij.norm();
            xi = xi.max(nj * (1.0 + sf.b[*i].abs()) / (1.0 + na));
            eta = eta.max(na);
        }
        x.push(DMatrix::identity(blk.dim, blk.dim) * xi);
        s.push(DMatrix::identity(blk.dim, blk.dim) * eta);
    }
    let mut w = DVector::zeros(k);

    let mut out = Outcome {
        status: Status::MaxIterations,
        w: w.clone(),
        x: x.clone(),
        iterations: 0,
        pinf: f64::INFINITY,
        dinf: f64::INFINITY,
        relgap: f64::INFINITY,
        ray: None,
        message: String::new(),
    };

    // Gram matrix of the constraint operator, G_il = Σ_j ⟨A_ij, A_lj⟩.
    let gram = {
        let mut g = DMatrix::<f64>::zeros(k, k);
        for blk in &sf.blocks {
            for (i, aij) in &blk.a {
                for (l, alj) in &blk.a {
                    g[(*i, *l)] += aij.dot(alj);
                }
            }
        }
        Cholesky::new(g)
    };

    let mut stalls = 0usize;
    for iter in 0..=opts.max_iter {
        out.iterations = iter;
        let ax = sf.apply_a(&x);
        let rp = &sf.b - &ax;
        let atw = sf.apply_at(&w);
        let rd: Vec<DMatrix<f64>> = sf
            .blocks
            .iter()
            .zip(&atw)
            .zip(&s)
            .map(|((blk, aw), sj)| &blk.c - aw - sj)
            .collect();
        let xs: f64 = x.iter().zip(&s).map(|(a, b)| a.dot(b)).sum();
        let mu = xs / n_total as f64;
        let pobj: f64 = sf.blocks.iter().zip(&x).map(|(b, xj)| b.c.dot(xj)).sum();
        let dobj = sf.b.dot(&w);

        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = frob2(&rd).sqrt() / (1.0 + norm_c);
        let relgap = xs / (1.0 + pobj.abs() + dobj.abs());
        out.w = w.clone();
        out.x = x.clone();
        out.pinf = pinf;
        out.dinf = dinf;
        out.relgap = relgap;

        if !(pinf.is_finite() && dinf.is_finite() && relgap.is_finite()) {
            out.status = Status::NumericalFailure;
            out.message = format!("non-finite residuals at iteration {iter}");
            return out;
        }
        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && relgap <= opts.gap_tol {
            out.status = Status::Optimal;
            out.message = format!("converged in {iter} iterations");
            return out;
        }
        // Primal ray: certifies that no S(w) ⪰ 0 exists with ‖w‖ < 1/ray_res.
        if pobj < 0.0 {
            let ray_res = ax.norm() / -pobj;
            if ray_res <= RAY_TOL {
                let scaled = x.iter().map(|m| m / -pobj).collect();
                out.ray = Some((scaled, ray_res));
                out.status = Status::Infeasible;
                out.message = format!("primal ray found at iteration {iter}");
                return out;
            }
        }
        // Dual ray: objective unbounded.
        if dobj > 0.0 {
            let cres = sf
                .blocks
                .iter()
                .zip(&rd)
                .map(|(b, r)| (&b.c - r).norm_squared())
                .sum::<f64>()
                .sqrt();
            if cres / dobj <= opts.feas_tol && pinf > opts.feas_tol {
                out.status = Status::Unbounded;
                out.message = format!("dual ray found at iteration {iter}");
                return out;
            }
        }
        if iter == opts.max_iter {
            break;
        }

        let sinv: Vec<DMatrix<f64>> = match s.iter().map(inverse_spd).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => {
                out.status = Status::NumericalFailure;
                out.message = format!("dual slack lost definiteness at iteration {iter}");
                return out;
            }
        };

        // Schur complement M_il = Σ_j ⟨A_ij, X_j A_lj S_j⁻¹⟩.
        let mut m = DMatrix::<f64>::zeros(k, k);
        for (j, blk) in sf.blocks.iter().enumerate() {
            for (l, alj) in &blk.a {
                let g = &x[j] * alj * &sinv[j];
                for (i, aij) in &blk.a {
                    m[(*i, *l)] += aij.dot(&g);
                }
            }
        }
        let m = sym(m);

        // X R_d S⁻¹ and the fixed part of the right-hand side.
        let xrs: Vec<DMatrix<f64>> = (0..nb).map(|j| &x[j] * &rd[j] * &sinv[j]).collect();
        let base_rhs = &rp + &ax + sf.apply_a(&xrs);

        let direction = |target: &[DMatrix<f64>]| -> Option<Direction> {
            // target_j is T_j; T S⁻¹ enters the right-hand side.
            let ts: Vec<DMatrix<f64>> = (0..nb).map(|j| &target[j] * &sinv[j]).collect();
            let rhs = &base_rhs - sf.apply_a(&ts);
            let build = |dw: DVector<f64>| {
                let atdw = sf.apply_at(&dw);
                let ds: Vec<DMatrix<f64>> = (0..nb).map(|j| &rd[j] - &atdw[j]).collect();
                let dx: Vec<DMatrix<f64>> = (0..nb)
                    .map(|j| sym(&ts[j] - &x[j] - &x[j] * &ds[j] * &sinv[j]))
                    .collect();
                let res = &rp - sf.apply_a(&dx);
                (Direction { dw, dx, ds }, res)
            };
            let (mut d, res) = build(solve_schur(&m, &rhs)?);
            // Once μ is small the Schur matrix is too ill-conditioned for
            // A(dx) = r_p to survive the solve; restore it by a least-squares
            // correction through the constant Gram matrix A Aᵀ.
            if let Some(gram) = &gram {
                if res.norm() > 1e-14 * (1.0 + rp.norm()) {
                    let fix = sf.apply_at(&gram.solve(&res));
                    for (dxj, fj) in d.dx.iter_mut().zip(fix) {
                        *dxj += fj;
                    }
                }
            }
            Some(d)
        };

        let steps = |d: &Direction| -> Option<(f64, f64)> {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for j in 0..nb {
                ap = ap.min(max_step(&x[j], &d.dx[j])?);
                ad = ad.min(max_step(&s[j], &d.ds[j])?);
            }
            Some((ap, ad))
        };

        let zeros: Vec<DMatrix<f64>> = sf
            .blocks
            .iter()
            .map(|b| DMatrix::zeros(b.dim, b.dim))
            .collect();
        let Some(pred) = direction(&zeros) else {
            out.status = Status::NumericalFailure;
            out.message = format!("schur solve failed at iteration {iter}");
            return out;
        };
        let Some((ap_max, ad_max)) = steps(&pred) else {
            out.status = Status::NumericalFailure;
            out.message = format!("step length failed at iteration {iter}");
            return out;
        };
        let ap_aff = ap_max.min(1.0);
        let ad_aff = ad_max.min(1.0);
        let mu_aff: f64 = (0..nb)
            .map(|j| (&x[j] + &pred.dx[j] * ap_aff).dot(&(&s[j] + &pred.ds[j] * ad_aff)))
            .sum::<f64>()
            / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let target: Vec<DMatrix<f64>> = (0..nb)
            .map(|j| {
                DMatrix::identity(sf.blocks[j].dim, sf.blocks[j].dim) * (sigma * mu)
                    - &pred.dx[j] * &pred.ds[j]
            })
            .collect();
        let Some(corr) = direction(&target) else {
            out.status = Status::NumericalFailure;
            out.message = format!("schur solve failed at iteration {iter}");
            return out;
        };
        let Some((ap_max, ad_max)) = steps(&corr) else {
            out.status = Status::NumericalFailure;
            out.message = format!("step length failed at iteration {iter}");
            return out;
        };
        let gamma = 0.9 + 0.09 * ap_aff.min(ad_aff);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);

        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                out.status = Status::NumericalFailure;
                out.message = format!("step lengths collapsed at iteration {iter}");
                return out;
            }
        } else {
            stalls = 0;
        }

        // Rounding can leave the updated iterate on the wrong side of the
        // cone even below the computed step bound; back off until both
        // factor.
        let (mut ap, mut ad) = (ap, ad);
        let mut accepted = false;
        for _ in 0..30 {
            let nx: Vec<DMatrix<f64>> = (0..nb).map(|j| sym(&x[j] + &corr.dx[j] * ap)).collect();
            let ns: Vec<DMatrix<f64>> = (0..nb).map(|j| sym(&s[j] + &corr.ds[j] * ad)).collect();
            if nx.iter().chain(&ns).all(|m| Cholesky::new(m.clone()).is_some()) {
                x = nx;
                s = ns;
                accepted = true;
                break;
            }
            ap *= 0.8;
            ad *= 0.8;
        }
        if !accepted {
            out.status = Status::NumericalFailure;
            out.message = format!("iterate left the cone at iteration {iter}");
            return out;
        }
        w += &corr.dw * ad;
    }
    out.status = Status::MaxIterations;
    out.message = format!("no convergence within {} iterations", opts.max_iter);
    out
}
