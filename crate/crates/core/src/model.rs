//! Plant description, ultra-local fault model and the augmented dynamics.
//!
//! The plant is
//!
//! ```text
//! ẋ = A x + B u + S g(V x, u, t) + Fx f
//! y = C x + Fy f
//! ```
//!
//! and an order-`r` fault model treats `f` as the top of a chain of `r`
//! integrators driven by `f⁽ʳ⁾`. Stacking `x_a = [x; f; ḟ; …; f⁽ʳ⁻¹⁾]` gives
//!
//! ```text
//! ẋ_a = A_a x_a + B_a u + S_a g(V_a x_a, u, t) + D_a f⁽ʳ⁾
//! y   = C_a x_a
//! ```

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: String,
        found: String,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn mismatch(what: &str, expected: (usize, usize), found: (usize, usize)) -> ModelError {
    ModelError::DimensionMismatch {
        what: what.to_string(),
        expected: format!("{}×{}", expected.0, expected.1),
        found: format!("{}×{}", found.0, found.1),
    }
}

/// A Lipschitz map `g(v, u, t)`.
///
/// Implementations must be pure: the same arguments always give the same
/// value and no interior mutability is observable. Plants are shared across
/// threads during sampling and batch simulation.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    /// Output dimension for an argument of dimension `n_v`, or why `n_v` is
    /// not accepted.
    fn output_dim(&self, n_v: usize) -> Result<usize, String>;

    fn eval(&self, v: &DVector<f64>, u: &DVector<f64>, t: f64) -> DVector<f64>;

    /// Registry description, when the map is one of the serializable
    /// built-ins.
    fn builtin(&self) -> Option<BuiltinNonlinearity> {
        None
    }
}

/// Nonlinearities that can be named in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinNonlinearity {
    /// `g(v) = −sin(v)` entry-wise; with `V` selecting the link angle this is
    /// the robot-arm gravity term.
    #[serde(rename = "neg_sin_x4")]
    NegSin,
    /// `g ≡ 0` with the given output dimension.
    Zero { dim: usize },
    /// Entry-wise piecewise-linear interpolation of a table, held constant
    /// outside the breakpoints.
    CustomTable { breakpoints: Vec<f64>, values: Vec<f64> },
    /// `g(v) = G v`.
    Linear {
        #[serde(with = "crate::rows")]
        gain: DMatrix<f64>,
    },
}

impl BuiltinNonlinearity {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let BuiltinNonlinearity::CustomTable { breakpoints, values } = self {
            if breakpoints.is_empty() || breakpoints.len() != values.len() {
                return Err(ModelError::InvalidParameter(format!(
                    "custom_table needs matching non-empty breakpoints and values ({} vs {})",
                    breakpoints.len(),
                    values.len()
                )));
            }
            if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ModelError::InvalidParameter(
                    "custom_table breakpoints must be strictly increasing".into(),
                ));
            }
            if breakpoints.iter().chain(values).any(|v| !v.is_finite()) {
                return Err(ModelError::InvalidParameter(
                    "custom_table entries must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    /// Best Lipschitz constant of the map with respect to `v`, when it is
    /// known in closed form.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            BuiltinNonlinearity::NegSin => 1.0,
            BuiltinNonlinearity::Zero { .. } => 0.0,
            BuiltinNonlinearity::CustomTable { breakpoints, values } => breakpoints
                .windows(2)
                .zip(values.windows(2))
                .map(|(b, v)| ((v[1] - v[0]) / (b[1] - b[0])).abs())
                .fold(0.0, f64::max),
            BuiltinNonlinearity::Linear { gain } => gain.norm_spectral_or_zero(),
        }
    }
}

trait SpectralNorm {
    fn norm_spectral_or_zero(&self) -> f64;
}

impl SpectralNorm for DMatrix<f64> {
    fn norm_spectral_or_zero(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.clone().svd(false, false).singular_values.max()
        }
    }
}

fn interp(bp: &[f64], vals: &[f64], x: f64) -> f64 {
    if x <= bp[0] {
        return vals[0];
    }
    let last = bp.len() - 1;
    if x >= bp[last] {
        return vals[last];
    }
    let k = bp.partition_point(|b| *b <= x) - 1;
    let w = (x - bp[k]) / (bp[k + 1] - bp[k]);
    vals[k] + w * (vals[k + 1] - vals[k])
}

impl Nonlinearity for BuiltinNonlinearity {
    fn output_dim(&self, n_v: usize) -> Result<usize, String> {
        match self {
            BuiltinNonlinearity::NegSin | BuiltinNonlinearity::CustomTable { .. } => Ok(n_v),
            BuiltinNonlinearity::Zero { dim } => Ok(*dim),
            BuiltinNonlinearity::Linear { gain } => {
                if gain.ncols() == n_v {
                    Ok(gain.nrows())
                } else {
                    Err(format!(
                        "linear gain has {} columns but V has {n_v} rows",
                        gain.ncols()
                    ))
                }
            }
        }
    }

    fn eval(&self, v: &DVector<f64>, _u: &DVector<f64>, _t: f64) -> DVector<f64> {
        match self {
            BuiltinNonlinearity::NegSin => v.map(|x| -x.sin()),
            BuiltinNonlinearity::Zero { dim } => DVector::zeros(*dim),
            BuiltinNonlinearity::CustomTable { breakpoints, values } => {
                v.map(|x| interp(breakpoints, values, x))
            }
            BuiltinNonlinearity::Linear { gain } => gain * v,
        }
    }

    fn builtin(&self) -> Option<BuiltinNonlinearity> {
        Some(self.clone())
    }
}

type GFn = dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync;

/// Wraps a closure as a [`Nonlinearity`] with a fixed output dimension.
#[derive(Clone)]
pub struct FnNonlinearity {
    name: String,
    dim: usize,
    f: Arc<GFn>,
}

impl FnNonlinearity {
    pub fn new<F>(name: &str, dim: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            dim,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnNonlinearity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Nonlinearity for FnNonlinearity {
    fn output_dim(&self, _n_v: usize) -> Result<usize, String> {
        Ok(self.dim)
    }

    fn eval(&self, v: &DVector<f64>, u: &DVector<f64>, t: f64) -> DVector<f64> {
        (self.f)(v, u, t)
    }
}

/// Plain matrices of a plant, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub fx: DMatrix<f64>,
    pub fy: DMatrix<f64>,
}

/// Problem dimensions shared by a plant and its augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub n_f: usize,
    pub n_g: usize,
    pub n_v: usize,
}

/// Validated Lipschitz plant. Immutable after construction.
#[derive(Debug, Clone)]
pub struct PlantModel {
    mats: PlantMatrices,
    alpha: f64,
    g: Arc<dyn Nonlinearity>,
    dims: Dims,
}

impl PlantModel {
    pub fn new(
        mats: PlantMatrices,
        alpha: f64,
        g: Arc<dyn Nonlinearity>,
    ) -> Result<Self, ModelError> {
        let n = mats.a.nrows();
        let check = |what: &str, m: &DMatrix<f64>, r: usize, c: Option<usize>| {
            let ok = m.nrows() == r && c.is_none_or(|c| m.ncols() == c);
            if ok {
                Ok(())
            } else {
                Err(mismatch(what, (r, c.unwrap_or(m.ncols())), m.shape()))
            }
        };
        check("A", &mats.a, n, Some(n))?;
        check("B", &mats.b, n, None)?;
        check("S", &mats.s, n, None)?;
        check("V", &mats.v, mats.v.nrows(), Some(n))?;
        check("C", &mats.c, mats.c.nrows(), Some(n))?;
        check("Fx", &mats.fx, n, None)?;
        let m = mats.c.nrows();
        let n_f = mats.fx.ncols();
        check("Fy", &mats.fy, m, Some(n_f))?;
        if n == 0 || m == 0 {
            return Err(ModelError::InvalidParameter(
                "the plant needs at least one state and one output".into(),
            ));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "Lipschitz constant must be finite and nonnegative, got {alpha}"
            )));
        }
        let all = [&mats.a, &mats.b, &mats.s, &mats.v, &mats.c, &mats.fx, &mats.fy];
        if all.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(ModelError::InvalidParameter(
                "plant matrices must be finite".into(),
            ));
        }
        let n_v = mats.v.nrows();
        let n_g = g
            .output_dim(n_v)
            .map_err(|e| ModelError::InvalidParameter(format!("nonlinearity: {e}")))?;
        if n_g != mats.s.ncols() {
            return Err(mismatch("S", (n, n_g), mats.s.shape()));
        }
        if let Some(b) = g.builtin() {
            b.validate()?;
        }
        let dims = Dims {
            n,
            m,
            l: mats.b.ncols(),
            n_f,
            n_g,
            n_v,
        };
        Ok(Self {
            mats,
            alpha,
            g,
            dims,
        })
    }

    /// Same plant with a different fault distribution.
    pub fn with_faults(&self, fx: DMatrix<f64>, fy: DMatrix<f64>) -> Result<Self, ModelError> {
        let mats = PlantMatrices {
            fx,
            fy,
            ..self.mats.clone()
        };
        Self::new(mats, self.alpha, self.g.clone())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn matrices(&self) -> &PlantMatrices {
        &self.mats
    }
    pub fn a(&self) -> &DMatrix<f64> {
        &self.mats.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.mats.b
    }
    pub fn s(&self) -> &DMatrix<f64> {
        &self.mats.s
    }
    pub fn v(&self) -> &DMatrix<f64> {
        &self.mats.v
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.mats.c
    }
    pub fn fx(&self) -> &DMatrix<f64> {
        &self.mats.fx
    }
    pub fn fy(&self) -> &DMatrix<f64> {
        &self.mats.fy
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn nonlinearity(&self) -> &Arc<dyn Nonlinearity> {
        &self.g
    }

    /// `g(v, u, t)` without argument checks.
    pub(crate) fn g_raw(&self, v: &DVector<f64>, u: &DVector<f64>, t: f64) -> DVector<f64> {
        self.g.eval(v, u, t)
    }

    /// `ẋ = A x + B u + S g(V x, u, t) + Fx f`.
    pub(crate) fn state_derivative(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        f: &DVector<f64>,
        t: f64,
    ) -> DVector<f64> {
        let g = self.g_raw(&(&self.mats.v * x), u, t);
        let mut dx = &self.mats.a * x + &self.mats.b * u + &self.mats.s * g;
        if self.dims.n_f > 0 {
            dx += &self.mats.fx * f;
        }
        dx
    }

    /// `y = C x + Fy f`.
    pub fn output(&self, x: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        let mut y = &self.mats.c * x;
        if self.dims.n_f > 0 {
            y += &self.mats.fy * f;
        }
        y
    }
}

/// Order of the ultra-local fault model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultModelConfig {
    pub r: usize,
}

impl Default for FaultModelConfig {
    fn default() -> Self {
        Self { r: 1 }
    }
}

impl FaultModelConfig {
    pub fn new(r: usize) -> Result<Self, ModelError> {
        if r == 0 {
            return Err(ModelError::InvalidParameter(
                "fault model order r must be at least 1".into(),
            ));
        }
        Ok(Self { r })
    }
}

/// Augmented plant for an order-`r` fault model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedModel {
    #[serde(with = "crate::rows")]
    pub a_a: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub b_a: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub s_a: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub v_a: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub d_a: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub c_a: DMatrix<f64>,
    /// Fault selector: `f̂ = C̄ x̂_a`.
    #[serde(with = "crate::rows")]
    pub c_bar: DMatrix<f64>,
    pub n_z: usize,
    pub r: usize,
    pub dims: Dims,
}

/// Build the augmented matrices.
pub fn augment(plant: &PlantModel, cfg: FaultModelConfig) -> Result<AugmentedModel, ModelError> {
    let FaultModelConfig { r } = FaultModelConfig::new(cfg.r)?;
    let d = plant.dims();
    let (n, nf) = (d.n, d.n_f);
    let n_z = n + r * nf;

    let mut a_a = DMatrix::zeros(n_z, n_z);
    a_a.view_mut((0, 0), (n, n)).copy_from(plant.a());
    if nf > 0 {
        a_a.view_mut((0, n), (n, nf)).copy_from(plant.fx());
        for k in 0..r.saturating_sub(1) {
            let row = n + k * nf;
            a_a.view_mut((row, row + nf), (nf, nf))
                .fill_with_identity();
        }
    }

    let mut b_a = DMatrix::zeros(n_z, d.l);
    b_a.view_mut((0, 0), (n, d.l)).copy_from(plant.b());
    let mut s_a = DMatrix::zeros(n_z, d.n_g);
    s_a.view_mut((0, 0), (n, d.n_g)).copy_from(plant.s());
    let mut v_a = DMatrix::zeros(d.n_v, n_z);
    v_a.view_mut((0, 0), (d.n_v, n)).copy_from(plant.v());
    let mut d_a = DMatrix::zeros(n_z, nf);
    let mut c_a = DMatrix::zeros(d.m, n_z);
    c_a.view_mut((0, 0), (d.m, n)).copy_from(plant.c());
    let mut c_bar = DMatrix::zeros(nf, n_z);
    if nf > 0 {
        d_a.view_mut((n_z - nf, 0), (nf, nf)).fill_with_identity();
        c_a.view_mut((0, n), (d.m, nf)).copy_from(plant.fy());
        c_bar.view_mut((0, n), (nf, nf)).fill_with_identity();
    }

    Ok(AugmentedModel {
        a_a,
        b_a,
        s_a,
        v_a,
        d_a,
        c_a,
        c_bar,
        n_z,
        r,
        dims: d,
    })
}

impl AugmentedModel {
    /// Stack `x` and the fault derivatives `[f, ḟ, …, f⁽ʳ⁻¹⁾]` into `x_a`.
    pub fn stack(&self, x: &DVector<f64>, fault_derivs: &[DVector<f64>]) -> DVector<f64> {
        let n = self.dims.n;
        let nf = self.dims.n_f;
        let mut xa = DVector::zeros(self.n_z);
        xa.rows_mut(0, n).copy_from(x);
        for (k, fk) in fault_derivs.iter().take(self.r).enumerate() {
            xa.rows_mut(n + k * nf, nf).copy_from(fk);
        }
        xa
    }
}

/// Argument of `g` for [`eval_nonlinearity`].
#[derive(Debug, Clone, Copy)]
pub enum NonlinearityInput<'a> {
    /// Plant state `x`; `g` is evaluated at `V x`.
    Plant(&'a DVector<f64>),
    /// Observer state estimate `x̂_a` with measurement `y` and injection gain
    /// `J`; `g` is evaluated at `V_a x̂_a + J (y − C_a x̂_a)`.
    Observer {
        xa_hat: &'a DVector<f64>,
        y: &'a DVector<f64>,
        j: &'a DMatrix<f64>,
    },
}

/// Evaluate the plant nonlinearity in plant or observer mode. The observer
/// argument only involves `x` and the fault block of `x̂_a`, so it is
/// computed from the plant matrices directly.
pub fn eval_nonlinearity(
    plant: &PlantModel,
    input: NonlinearityInput<'_>,
    u: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>, ModelError> {
    let d = plant.dims();
    if u.len() != d.l {
        return Err(mismatch("u", (d.l, 1), (u.len(), 1)));
    }
    let v = match input {
        NonlinearityInput::Plant(x) => {
            if x.len() != d.n {
                return Err(mismatch("x", (d.n, 1), (x.len(), 1)));
            }
            plant.v() * x
        }
        NonlinearityInput::Observer { xa_hat, y, j } => {
            let nz = xa_hat.len();
            if nz < d.n || d.n_f == 0 && nz != d.n || d.n_f > 0 && (nz - d.n) % d.n_f != 0 {
                return Err(ModelError::DimensionMismatch {
                    what: "x̂_a".into(),
                    expected: format!("n + r·n_f with n = {}, n_f = {}", d.n, d.n_f),
                    found: nz.to_string(),
                });
            }
            if y.len() != d.m {
                return Err(mismatch("y", (d.m, 1), (y.len(), 1)));
            }
            if j.shape() != (d.n_v, d.m) {
                return Err(mismatch("J", (d.n_v, d.m), j.shape()));
            }
            let x = xa_hat.rows(0, d.n).into_owned();
            let f = xa_hat.rows(d.n, d.n_f).into_owned();
            let yhat = plant.output(&x, &f);
            plant.v() * x + j * (y - yhat)
        }
    };
    Ok(plant.g_raw(&v, u, t))
}

/// Box over `(v, u)` for [`lipschitz_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzDomain {
    pub v_lo: DVector<f64>,
    pub v_hi: DVector<f64>,
    pub u_lo: DVector<f64>,
    pub u_hi: DVector<f64>,
    pub t: f64,
}

impl LipschitzDomain {
    /// Symmetric box `|v_i| ≤ v_radius`, `|u_i| ≤ u_radius` at `t = 0`.
    pub fn symmetric(d: Dims, v_radius: f64, u_radius: f64) -> Self {
        Self {
            v_lo: DVector::from_element(d.n_v, -v_radius),
            v_hi: DVector::from_element(d.n_v, v_radius),
            u_lo: DVector::from_element(d.l, -u_radius),
            u_hi: DVector::from_element(d.l, u_radius),
            t: 0.0,
        }
    }
}

/// Largest sampled ratio `‖g(v₁,u,t) − g(v₂,u,t)‖ / ‖v₁ − v₂‖` over
/// `samples` random pairs in the box.
///
/// This is a lower bound on the true Lipschitz constant and only serves to
/// sanity-check a declared `alpha`; sampling cannot certify a global bound.
pub fn lipschitz_estimate(
    plant: &PlantModel,
    domain: &LipschitzDomain,
    samples: usize,
    seed: u64,
) -> Result<f64, ModelError> {
    let d = plant.dims();
    if samples < 2 {
        return Err(ModelError::InvalidParameter(
            "lipschitz_estimate needs at least 2 samples".into(),
        ));
    }
    if domain.v_lo.len() != d.n_v || domain.v_hi.len() != d.n_v {
        return Err(mismatch("v box", (d.n_v, 1), (domain.v_lo.len(), 1)));
    }
    if domain.u_lo.len() != d.l || domain.u_hi.len() != d.l {
        return Err(mismatch("u box", (d.l, 1), (domain.u_lo.len(), 1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lo: &DVector<f64>, hi: &DVector<f64>| {
        DVector::from_fn(lo.len(), |i, _| {
            if hi[i] > lo[i] {
                rng.random_range(lo[i]..hi[i])
            } else {
                lo[i]
            }
        })
    };
    let mut best = 0.0f64;
    for _ in 0..samples {
        let v1 = draw(&domain.v_lo, &domain.v_hi);
        let v2 = draw(&domain.v_lo, &domain.v_hi);
        let u = draw(&domain.u_lo, &domain.u_hi);
        let dv = (&v1 - &v2).norm();
        if dv == 0.0 {
            continue;
        }
        let dg = (plant.g_raw(&v1, &u, domain.t) - plant.g_raw(&v2, &u, domain.t)).norm();
        best = best.max(dg / dv);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plant(fx: DMatrix<f64>, fy: DMatrix<f64>) -> PlantModel {
        let mats = PlantMatrices {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]),
            b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            s: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            v: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            fx,
            fy,
        };
        PlantModel::new(mats, 1.0, Arc::new(BuiltinNonlinearity::NegSin)).unwrap()
    }

    #[test]
    fn zero_fault_distribution_leaves_top_right_block_empty() {
        let p = small_plant(DMatrix::zeros(2, 1), DMatrix::zeros(1, 1));
        let aug = augment(&p, FaultModelConfig { r: 1 }).unwrap();
        assert_eq!(aug.n_z, 3);
        assert_eq!(aug.a_a.view((0, 2), (2, 1)).amax(), 0.0);
        assert_eq!(aug.c_a.columns(0, 2), p.c().columns(0, 2));
        assert_eq!(aug.c_a[(0, 2)], 0.0);
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        let mut mats = small_plant(DMatrix::zeros(2, 1), DMatrix::zeros(1, 1))
            .matrices()
            .clone();
        mats.fy = DMatrix::zeros(1, 2);
        let err = PlantModel::new(mats.clone(), 1.0, Arc::new(BuiltinNonlinearity::NegSin));
        assert!(matches!(err, Err(ModelError::DimensionMismatch { .. })));
        mats.fy = DMatrix::zeros(1, 1);
        let err = PlantModel::new(mats, -1.0, Arc::new(BuiltinNonlinearity::NegSin));
        assert!(matches!(err, Err(ModelError::InvalidParameter(_))));
    }

    #[test]
    fn r_zero_is_rejected() {
        let p = small_plant(DMatrix::zeros(2, 1), DMatrix::zeros(1, 1));
        assert!(augment(&p, FaultModelConfig { r: 0 }).is_err());
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let g = BuiltinNonlinearity::CustomTable {
            breakpoints: vec![-1.0, 0.0, 2.0],
            values: vec![1.0, 0.0, 4.0],
        };
        let u = DVector::zeros(0);
        let out = g.eval(&DVector::from_vec(vec![-5.0, -0.5, 1.0, 9.0]), &u, 0.0);
        assert_eq!(out.as_slice(), &[1.0, 0.5, 2.0, 4.0]);
        assert_eq!(g.lipschitz_constant(), 2.0);
    }

    #[test]
    fn unsorted_table_is_rejected() {
        let g = BuiltinNonlinearity::CustomTable {
            breakpoints: vec![0.0, 0.0],
            values: vec![1.0, 2.0],
        };
        assert!(g.validate().is_err());
    }
}
