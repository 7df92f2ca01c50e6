//! Lowering of an [`SdpProblem`] to the block standard form
//!
//! ```text
//! maximize  bᵀw   subject to   S_j = C_j − Σ_i w_i A_ij ⪰ 0
//! ```
//!
//! with the flat coordinates recovered as `y = y0 + T w`. Linear equalities
//! are eliminated through a null-space basis, and coordinate directions that
//! no constraint sees are projected out so that the Schur complement stays
//! nonsingular.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::expr::add_scaled;
use crate::problem::SdpProblem;

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub dim: usize,
    pub c: DMatrix<f64>,
    /// Sparse list of `(i, A_ij)`.
    pub a: Vec<(usize, DMatrix<f64>)>,
}

#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub blocks: Vec<Block>,
    pub b: DVector<f64>,
}

impl StandardForm {
    pub fn n_vars(&self) -> usize {
        self.b.len()
    }

    /// `A(X)_i = Σ_j ⟨A_ij, X_j⟩`
    pub fn apply_a(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_vars());
        for (blk, xj) in self.blocks.iter().zip(x) {
            for (i, aij) in &blk.a {
                out[*i] += aij.dot(xj);
            }
        }
        out
    }

    /// `(Aᵀy)_j = Σ_i y_i A_ij`
    pub fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut m = DMatrix::zeros(blk.dim, blk.dim);
                for (i, aij) in &blk.a {
                    if y[*i] != 0.0 {
                        add_scaled(&mut m, y[*i], aij);
                    }
                }
                m
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub form: StandardForm,
    pub y0: DVector<f64>,
    /// `None` means the identity map.
    pub basis: Option<DMatrix<f64>>,
    /// The objective has a component along a direction no constraint sees.
    pub free_objective_direction: bool,
}

impl Reduced {
    pub fn lift(&self, w: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(t) => &self.y0 + t * w,
            None => &self.y0 + w,
        }
    }
}

pub(crate) enum Prepared {
    Ready(Reduced),
    /// The linear equalities alone are inconsistent.
    InconsistentEqualities(f64),
}

pub(crate) fn prepare(p: &SdpProblem) -> Prepared {
    let n = p.n_coords();
    let obj = p.objective();
    let mut cost = DVector::zeros(n);
    for (&k, c) in obj.terms() {
        cost[k] = c[(0, 0)];
    }

    let mut blocks = Vec::with_capacity(p.constraints().len());
    for con in p.constraints() {
        let psd = con.psd_form();
        let dim = con.dim();
        let margin = p.margin_of(con);
        let c = psd.constant_part() - DMatrix::identity(dim, dim) * margin;
        let a = psd.terms().iter().map(|(&k, h)| (k, -h)).collect();
        blocks.push(Block { dim, c, a });
    }

    // Equalities: G y = h.
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for eq in p.equalities() {
        let (r, c) = eq.expr.shape();
        for i in 0..r {
            for j in 0..c {
                let mut g = DVector::zeros(n);
                for (&k, m) in eq.expr.terms() {
                    g[k] = m[(i, j)];
                }
                rows.push(g);
                rhs.push(-eq.expr.constant_part()[(i, j)]);
            }
        }
    }

    let (y0, z) = if rows.is_empty() {
        (DVector::zeros(n), None)
    } else {
        let g = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let h = DVector::from_vec(rhs);
        // Full SVD via the Gram route keeps the null-space basis explicit.
        let svd = SVD::new(g.transpose() * &g, true, true);
        let v = svd.v_t.as_ref().expect("svd v").transpose();
        let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
        let tol = smax * 1e-13 * n as f64;
        let range: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] > tol).collect();
        let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol).collect();
        let vr = v.select_columns(&range);
        // Least-norm particular solution restricted to range(Gᵀ).
        let gv = &g * &vr;
        let y0r = gv
            .clone()
            .svd(true, true)
            .solve(&h, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(range.len()));
        let y0 = &vr * y0r;
        let resid = (&g * &y0 - &h).norm();
        if resid > 1e-9 * (1.0 + h.norm()) {
            return Prepared::InconsistentEqualities(resid);
        }
        (y0, Some(v.select_columns(&null)))
    };

    // Gram matrix of the constraint map in the current parametrization.
    let k = z.as_ref().map_or(n, |z| z.ncols());
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let dense_blocks: Option<Vec<Vec<DMatrix<f64>>>> = z.as_ref().map(|z| {
        blocks
            .iter()
            .map(|blk| combine(blk, z))
            .collect()
    });
    match &dense_blocks {
        None => {
            for blk in &blocks {
                for (i, ai) in &blk.a {
                    for (l, al) in &blk.a {
                        gram[(*i, *l)] += ai.dot(al);
                    }
                }
            }
        }
        Some(dense) => {
            for mats in dense {
                for (q, aq) in mats.iter().enumerate() {
                    for (s, as_) in mats.iter().enumerate() {
                        gram[(q, s)] += aq.dot(as_);
                    }
                }
            }
        }
    }

    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..k)
        .filter(|&i| eig.eigenvalues[i] > lmax * 1e-13 && eig.eigenvalues[i] > 0.0)
        .collect();
    let cost_z = match &z {
        Some(z) => z.transpose() * &cost,
        None => cost.clone(),
    };
    let full_rank = keep.len() == k;
    let (basis_w, free_dir) = if full_rank {
        (None, false)
    } else {
        let u = eig.eigenvectors.select_columns(&keep);
        let proj = &u * (u.transpose() * &cost_z);
        let free = (&cost_z - proj).norm() > 1e-10 * (1.0 + cost_z.norm());
        (Some(u), free)
    };

    // Overall map y = y0 + T w.
    let basis = match (z, basis_w) {
        (None, None) => None,
        (Some(z), None) => Some(z),
        (None, Some(u)) => Some(u),
        (Some(z), Some(u)) => Some(z * u),
    };

    let form = match &basis {
        None => StandardForm {
            blocks,
            b: -&cost,
        },
        Some(t) => {
            let new_blocks = blocks
                .iter()
                .map(|blk| {
                    let mut c = blk.c.clone();
                    for (i, aij) in &blk.a {
                        if y0[*i] != 0.0 {
                            add_scaled(&mut c, -y0[*i], aij);
                        }
                    }
                    let a = combine(blk, t)
                        .into_iter()
                        .enumerate()
                        .filter(|(_, m)| m.amax() > 0.0)
                        .collect();
                    Block { dim: blk.dim, c, a }
                })
                .collect();
            StandardForm {
                blocks: new_blocks,
                b: -(t.transpose() * &cost),
            }
        }
    };

    Prepared::Ready(Reduced {
        form,
        y0,
        basis,
        free_objective_direction: free_dir,
    })
}

/// Dense coefficients `Σ_i T_iq A_ij` for every column `q` of `t`.
fn combine(blk: &Block, t: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    (0..t.ncols())
        .map(|q| {
            let mut m = DMatrix::zeros(blk.dim, blk.dim);
            for (i, aij) in &blk.a {
                let w = t[(*i, q)];
                if w != 0.0 {
                    add_scaled(&mut m, w, aij);
                }
            }
            m
        })
        .collect()
}
