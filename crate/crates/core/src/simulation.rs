//! Plant/observer co-simulation with injected faults.
//!
//! Both [`simulate`] and [`simulate_error_dynamics`] use classical fixed-step
//! RK4 with inputs, faults and measurements evaluated at the stage times.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{AugmentedModel, PlantModel};
use crate::synthesis::Observer;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error("invalid simulation setup: {0}")]
    Invalid(String),
    #[error("state became non-finite at step {step} (t = {t})")]
    NonFiniteState { step: usize, t: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

fn invalid(msg: impl Into<String>) -> SimulationError {
    SimulationError::Invalid(msg.into())
}

/// Scalar time signal with closed-form derivatives, switched on at `t_on`
/// (zero before).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    Zero,
    Step {
        t_on: f64,
        magnitude: f64,
    },
    /// `min(slope·(t − t_on), saturation)` after onset (saturation is an
    /// upper bound on the magnitude, signed like the slope).
    IncipientRamp {
        t_on: f64,
        slope: f64,
        saturation: f64,
    },
    /// `amplitude·sin(omega·t + phase)` after onset.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        t_on: f64,
    },
    /// Linear interpolation through `(times, values)`, held constant outside.
    Samples { times: Vec<f64>, values: Vec<f64> },
}

impl Signal {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{what} must be finite")))
            }
        };
        match self {
            Signal::Zero => Ok(()),
            Signal::Step { t_on, magnitude } => {
                finite(*magnitude, "step magnitude")?;
                onset(*t_on)
            }
            Signal::IncipientRamp {
                t_on,
                slope,
                saturation,
            } => {
                finite(*slope, "ramp slope")?;
                finite(*saturation, "ramp saturation")?;
                if *saturation < 0.0 {
                    return Err(invalid("ramp saturation must be nonnegative"));
                }
                onset(*t_on)
            }
            Signal::Sinusoid {
                amplitude,
                omega,
                phase,
                t_on,
            } => {
                finite(*amplitude, "amplitude")?;
                finite(*omega, "omega")?;
                finite(*phase, "phase")?;
                onset(*t_on)
            }
            Signal::Samples { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(invalid(format!(
                        "sample table needs matching non-empty times and values ({} vs {})",
                        times.len(),
                        values.len()
                    )));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("sample times must be strictly increasing"));
                }
                if times.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(invalid("sample table entries must be finite"));
                }
                if times[0] < 0.0 {
                    return Err(invalid("sample times must be nonnegative"));
                }
                Ok(())
            }
        }
    }

    /// `k`-th time derivative, piecewise (one-sided at kinks). Impulses at
    /// discontinuities are not represented.
    pub fn derivative(&self, k: usize, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Step { t_on, magnitude } => {
                if k == 0 && t >= *t_on {
                    *magnitude
                } else {
                    0.0
                }
            }
            Signal::IncipientRamp {
                t_on,
                slope,
                saturation,
            } => {
                if t < *t_on {
                    return 0.0;
                }
                let raw = slope * (t - t_on);
                let saturated = raw.abs() >= *saturation;
                match (k, saturated) {
                    (0, true) => saturation * slope.signum(),
                    (0, false) => raw,
                    (1, false) => *slope,
                    _ => 0.0,
                }
            }
            Signal::Sinusoid {
                amplitude,
                omega,
                phase,
                t_on,
            } => {
                if t < *t_on {
                    return 0.0;
                }
                let arg = omega * t + phase + k as f64 * std::f64::consts::FRAC_PI_2;
                amplitude * omega.powi(k as i32) * arg.sin()
            }
            Signal::Samples { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] || t >= times[last] {
                    return if k == 0 {
                        if t <= times[0] {
                            values[0]
                        } else {
                            values[last]
                        }
                    } else {
                        0.0
                    };
                }
                let i = times.partition_point(|s| *s <= t) - 1;
                let slope = (values[i + 1] - values[i]) / (times[i + 1] - times[i]);
                match k {
                    0 => values[i] + slope * (t - times[i]),
                    1 => slope,
                    _ => 0.0,
                }
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// Number of leading derivatives `f, ḟ, …` that are continuous on
    /// `[t0, ∞)`; `usize::MAX` for signals smooth on the whole window.
    /// The derivative of that order is still available piecewise.
    pub fn continuity_order(&self, t0: f64) -> usize {
        match self {
            Signal::Zero => usize::MAX,
            Signal::Step { t_on, magnitude } => {
                if *t_on <= t0 || *magnitude == 0.0 {
                    usize::MAX
                } else {
                    0
                }
            }
            Signal::IncipientRamp { slope, saturation, .. } => {
                if *slope == 0.0 || *saturation == 0.0 {
                    usize::MAX
                } else {
                    1
                }
            }
            Signal::Sinusoid {
                amplitude,
                omega,
                phase,
                t_on,
            } => {
                if *t_on <= t0 || *amplitude == 0.0 {
                    return usize::MAX;
                }
                // First derivative that is nonzero at the onset jumps.
                (0..8)
                    .find(|&k| {
                        let arg = omega * t_on + phase + k as f64 * std::f64::consts::FRAC_PI_2;
                        (amplitude * omega.powi(k as i32) * arg.sin()).abs() > 1e-12
                    })
                    .unwrap_or(usize::MAX)
            }
            Signal::Samples { times, values } => {
                if values.windows(2).all(|w| w[0] == w[1]) && times.len() > 0 {
                    usize::MAX
                } else {
                    1
                }
            }
        }
    }

    /// `sup_t |f⁽ᵏ⁾(t)|` over `[t0, tf]`.
    pub fn derivative_sup(&self, k: usize, t0: f64, tf: f64) -> f64 {
        match self {
            Signal::Sinusoid {
                amplitude,
                omega,
                t_on,
                ..
            } if *t_on < tf => (amplitude * omega.powi(k as i32)).abs(),
            Signal::Sinusoid { .. } => 0.0,
            _ => {
                // Piecewise constant or linear: the kinks and end points
                // suffice, sampled densely for safety.
                let n = 20_000;
                (0..=n)
                    .map(|i| self.derivative(k, t0 + (tf - t0) * i as f64 / n as f64).abs())
                    .fold(0.0, f64::max)
            }
        }
    }
}

fn onset(t_on: f64) -> Result<(), SimulationError> {
    if t_on >= 0.0 && t_on.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("onset time must be finite and ≥ 0, got {t_on}")))
    }
}

/// One signal per fault channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    pub channels: Vec<Signal>,
}

impl FaultScenario {
    pub fn zero(n_f: usize) -> Self {
        Self {
            channels: vec![Signal::Zero; n_f],
        }
    }

    pub fn validate(&self, n_f: usize) -> Result<(), SimulationError> {
        if self.channels.len() != n_f {
            return Err(invalid(format!(
                "scenario has {} fault channels, the plant has {n_f}",
                self.channels.len()
            )));
        }
        self.channels.iter().try_for_each(Signal::validate)
    }

    pub fn derivative(&self, k: usize, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.channels.len(), self.channels.iter().map(|s| s.derivative(k, t)))
    }

    pub fn value(&self, t: f64) -> DVector<f64> {
        self.derivative(0, t)
    }

    /// `[f, ḟ, …, f⁽ʳ⁻¹⁾]` at `t`.
    pub fn chain(&self, r: usize, t: f64) -> Vec<DVector<f64>> {
        (0..r).map(|k| self.derivative(k, t)).collect()
    }

    pub fn continuity_order(&self, t0: f64) -> usize {
        self.channels
            .iter()
            .map(|s| s.continuity_order(t0))
            .min()
            .unwrap_or(usize::MAX)
    }

    /// `sup_t ‖f⁽ᵏ⁾(t)‖₂` bound over `[t0, tf]` (root-sum of channel sups).
    pub fn derivative_sup(&self, k: usize, t0: f64, tf: f64) -> f64 {
        self.channels
            .iter()
            .map(|s| s.derivative_sup(k, t0, tf).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

type InputFn = dyn Fn(f64) -> DVector<f64> + Send + Sync;

/// Plant input `u(t)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Input {
    /// One [`Signal`] per input channel.
    Channels { channels: Vec<Signal> },
    #[serde(skip)]
    Custom { dim: usize, f: Arc<InputFn> },
}

impl std::fmt::Debug for Input {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Input::Channels { channels } => f.debug_struct("Channels").field("channels", channels).finish(),
            Input::Custom { dim, .. } => f.debug_struct("Custom").field("dim", dim).finish(),
        }
    }
}

impl PartialEq for Input {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Input::Channels { channels: a }, Input::Channels { channels: b }) => a == b,
            (Input::Custom { f: a, .. }, Input::Custom { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Input {
    pub fn zero(l: usize) -> Self {
        Input::Channels {
            channels: vec![Signal::Zero; l],
        }
    }

    pub fn custom<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Input::Custom {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Input::Channels { channels } => channels.len(),
            Input::Custom { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        match self {
            Input::Channels { channels } => {
                DVector::from_iterator(channels.len(), channels.iter().map(|s| s.value(t)))
            }
            Input::Custom { f, .. } => f(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Integrator {
    #[default]
    #[serde(rename = "rk4_fixed")]
    Rk4Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(with = "crate::rows::vector")]
    pub x0: DVector<f64>,
    #[serde(with = "crate::rows::vector")]
    pub z0: DVector<f64>,
    pub input: Input,
    /// Start of the window for the post-transient error statistics.
    #[serde(default)]
    pub transient_end: Option<f64>,
}

impl SimulationConfig {
    pub fn validate(&self, d: crate::model::Dims, n_z: usize) -> Result<(), SimulationError> {
        if !(self.t0.is_finite() && self.tf.is_finite() && self.tf > self.t0) {
            return Err(invalid(format!("need tf > t0, got [{}, {}]", self.t0, self.tf)));
        }
        if !(self.dt > 0.0 && self.dt <= self.tf - self.t0) {
            return Err(invalid(format!(
                "need 0 < dt ≤ tf − t0, got dt = {}",
                self.dt
            )));
        }
        if self.x0.len() != d.n {
            return Err(invalid(format!("x0 has length {}, expected {}", self.x0.len(), d.n)));
        }
        if self.z0.len() != n_z {
            return Err(invalid(format!("z0 has length {}, expected {n_z}", self.z0.len())));
        }
        if self.input.dim() != d.l {
            return Err(invalid(format!(
                "input has {} channels, expected {}",
                self.input.dim(),
                d.l
            )));
        }
        if let Input::Channels { channels } = &self.input {
            channels.iter().try_for_each(Signal::validate)?;
        }
        Ok(())
    }

    /// `t0, t0 + dt, …, tf`; the last step is shortened if `dt` does not
    /// divide the horizon.
    pub fn grid(&self) -> Vec<f64> {
        let span = self.tf - self.t0;
        let steps = (span / self.dt - 1e-9).ceil().max(1.0) as usize;
        let mut t: Vec<f64> = (0..steps).map(|k| self.t0 + k as f64 * self.dt).collect();
        t.push(self.tf);
        t
    }
}

/// Summary statistics of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    /// `max ‖e‖` over `t ≥ transient_end`.
    pub max_error_after_transient: f64,
    pub transient_end: f64,
    /// `‖f̂(tf) − f(tf)‖`.
    pub terminal_fault_error: f64,
    /// [`empirical_l2_gain`], when defined.
    pub empirical_l2: Option<f64>,
}

/// Time series stored column-wise: column `k` belongs to `t[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub t: Vec<f64>,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub f: DMatrix<f64>,
    /// `f⁽ʳ⁾`, available when the scenario's derivatives are continuous up
    /// to order `r − 1`.
    pub f_r: Option<DMatrix<f64>>,
    /// Ground-truth augmented state. Fault-derivative blocks that are not
    /// available analytically are NaN.
    pub x_a: DMatrix<f64>,
    pub xa_hat: DMatrix<f64>,
    pub f_hat: DMatrix<f64>,
    /// `e = x̂_a − x_a`.
    pub e: DMatrix<f64>,
    /// `‖e‖` over the available components.
    pub e_norm: Vec<f64>,
    pub fault_selector: DMatrix<f64>,
    pub summary: TraceSummary,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `C̄ e` at step `k`.
    pub fn fault_error(&self, k: usize) -> DVector<f64> {
        &self.fault_selector * self.e.column(k)
    }
}

fn rk4_step<F>(f: &F, t: f64, h: f64, s: &DVector<f64>) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = f(t, s);
    let k2 = f(t + 0.5 * h, &(s + &k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(s + &k2 * (0.5 * h)));
    let k4 = f(t + h, &(s + &k3 * h));
    s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn check_observer(aug: &AugmentedModel, obs: &Observer) -> Result<(), SimulationError> {
    let (nz, m, nv) = (aug.n_z, aug.dims.m, aug.dims.n_v);
    let ok = obs.n.shape() == (nz, nz)
        && obs.m.shape() == (nz, nz)
        && obs.e.shape() == (nz, m)
        && obs.l.shape() == (nz, m)
        && obs.g.shape() == (nz, aug.dims.l)
        && obs.j.shape() == (nv, m);
    if ok {
        Ok(())
    } else {
        Err(invalid(format!(
            "observer matrices do not match the augmented model (n_z = {nz}, m = {m})"
        )))
    }
}

fn check_plant(plant: &PlantModel, aug: &AugmentedModel) -> Result<(), SimulationError> {
    if plant.dims() != aug.dims || aug.a_a.view((0, 0), (aug.dims.n, aug.dims.n)) != *plant.a() {
        return Err(invalid("augmented model was not built from this plant"));
    }
    Ok(())
}

/// Observer right-hand side `ż` at `(t, x, z)`.
struct ObserverRhs<'a> {
    plant: &'a PlantModel,
    aug: &'a AugmentedModel,
    obs: &'a Observer,
    ms: DMatrix<f64>,
}

impl<'a> ObserverRhs<'a> {
    fn new(plant: &'a PlantModel, aug: &'a AugmentedModel, obs: &'a Observer) -> Self {
        Self {
            plant,
            aug,
            obs,
            ms: &obs.m * &aug.s_a,
        }
    }

    fn xa_hat(&self, z: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        z - &self.obs.e * y
    }

    fn zdot(&self, t: f64, z: &DVector<f64>, y: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let o = self.obs;
        let xh = self.xa_hat(z, y);
        let arg = &self.aug.v_a * &xh + &o.j * (y - &self.aug.c_a * &xh);
        let g = self.plant.g_raw(&arg, u, t);
        &o.n * z + &o.g * u + &o.l * y + &self.ms * g
    }
}

/// Co-simulate plant and observer over the configured grid.
pub fn simulate(
    plant: &PlantModel,
    aug: &AugmentedModel,
    obs: &Observer,
    scenario: &FaultScenario,
    cfg: &SimulationConfig,
) -> Result<SimulationTrace, SimulationError> {
    let d = plant.dims();
    check_plant(plant, aug)?;
    check_observer(aug, obs)?;
    scenario.validate(d.n_f)?;
    cfg.validate(d, aug.n_z)?;

    let rhs = ObserverRhs::new(plant, aug, obs);
    let n = d.n;
    let field = |t: f64, s: &DVector<f64>| -> DVector<f64> {
        let x = s.rows(0, n).into_owned();
        let z = s.rows(n, aug.n_z).into_owned();
        let u = cfg.input.eval(t);
        let f = scenario.value(t);
        let y = plant.output(&x, &f);
        let dx = plant.state_derivative(&x, &u, &f, t);
        let dz = rhs.zdot(t, &z, &y, &u);
        let mut out = DVector::zeros(n + aug.n_z);
        out.rows_mut(0, n).copy_from(&dx);
        out.rows_mut(n, aug.n_z).copy_from(&dz);
        out
    };

    let grid = cfg.grid();
    let mut state = DVector::zeros(n + aug.n_z);
    state.rows_mut(0, n).copy_from(&cfg.x0);
    state.rows_mut(n, aug.n_z).copy_from(&cfg.z0);
    let mut states = Vec::with_capacity(grid.len());
    states.push(state.clone());
    for k in 1..grid.len() {
        let h = grid[k] - grid[k - 1];
        state = rk4_step(&field, grid[k - 1], h, &state);
        if state.iter().any(|v| !v.is_finite()) {
            return Err(SimulationError::NonFiniteState { step: k, t: grid[k] });
        }
        states.push(state.clone());
    }

    Ok(assemble_trace(plant, aug, obs, scenario, cfg, &grid, |k| {
        (
            states[k].rows(0, n).into_owned(),
            states[k].rows(n, aug.n_z).into_owned(),
        )
    }))
}

fn assemble_trace<S>(
    plant: &PlantModel,
    aug: &AugmentedModel,
    obs: &Observer,
    scenario: &FaultScenario,
    cfg: &SimulationConfig,
    grid: &[f64],
    state_at: S,
) -> SimulationTrace
where
    S: Fn(usize) -> (DVector<f64>, DVector<f64>),
{
    let d = plant.dims();
    let nt = grid.len();
    let r = aug.r;
    let cont = scenario.continuity_order(cfg.t0);
    // ζ_k = f⁽ᵏ⁻¹⁾ is known when f, …, f⁽ᵏ⁻¹⁾ are continuous, except ζ₁ = f
    // which is always available.
    let known_blocks = r.min(cont.max(1));
    let derivs_ok = cont >= r;

    let mut x = DMatrix::zeros(d.n, nt);
    let mut y = DMatrix::zeros(d.m, nt);
    let mut u = DMatrix::zeros(d.l, nt);
    let mut f = DMatrix::zeros(d.n_f, nt);
    let mut f_r = DMatrix::zeros(d.n_f, nt);
    let mut x_a = DMatrix::zeros(aug.n_z, nt);
    let mut xa_hat = DMatrix::zeros(aug.n_z, nt);
    let mut f_hat = DMatrix::zeros(d.n_f, nt);
    let mut e = DMatrix::zeros(aug.n_z, nt);
    let mut e_norm = Vec::with_capacity(nt);
    let avail = d.n + known_blocks * d.n_f;

    for (k, &t) in grid.iter().enumerate() {
        let (xk, zk) = state_at(k);
        let uk = cfg.input.eval(t);
        let fk = scenario.value(t);
        let yk = plant.output(&xk, &fk);
        let mut chain = scenario.chain(r, t);
        for blk in chain.iter_mut().skip(known_blocks) {
            blk.fill(f64::NAN);
        }
        let xak = aug.stack(&xk, &chain);
        let xhk = &zk - &obs.e * &yk;
        let ek = &xhk - &xak;
        e_norm.push(ek.rows(0, avail).norm());
        f_hat.set_column(k, &(&aug.c_bar * &xhk));
        x.set_column(k, &xk);
        y.set_column(k, &yk);
        u.set_column(k, &uk);
        f.set_column(k, &fk);
        f_r.set_column(k, &scenario.derivative(r, t));
        x_a.set_column(k, &xak);
        xa_hat.set_column(k, &xhk);
        e.set_column(k, &ek);
    }

    let transient_end = cfg
        .transient_end
        .unwrap_or(cfg.t0 + 0.5 * (cfg.tf - cfg.t0));
    let max_error_after_transient = grid
        .iter()
        .zip(&e_norm)
        .filter(|(t, _)| **t >= transient_end)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let last = nt - 1;
    let terminal_fault_error = (f_hat.column(last) - f.column(last)).norm();

    let mut trace = SimulationTrace {
        t: grid.to_vec(),
        x,
        y,
        u,
        f,
        f_r: derivs_ok.then_some(f_r),
        x_a,
        xa_hat,
        f_hat,
        e,
        e_norm,
        fault_selector: aug.c_bar.clone(),
        summary: TraceSummary {
            max_error_after_transient,
            transient_end,
            terminal_fault_error,
            empirical_l2: None,
        },
    };
    trace.summary.empirical_l2 = empirical_l2_gain(&trace).ok();
    trace
}

/// Integrate `ė = N e + M S_a δg − M D_a f⁽ʳ⁾` directly, alongside the plant
/// (needed for `δg = g(V x + (V_a − J C_a) e) − g(V x)`), starting from
/// `e0`.
pub fn simulate_error_dynamics(
    plant: &PlantModel,
    aug: &AugmentedModel,
    obs: &Observer,
    scenario: &FaultScenario,
    cfg: &SimulationConfig,
    e0: &DVector<f64>,
) -> Result<SimulationTrace, SimulationError> {
    let d = plant.dims();
    check_plant(plant, aug)?;
    check_observer(aug, obs)?;
    scenario.validate(d.n_f)?;
    cfg.validate(d, aug.n_z)?;
    if e0.len() != aug.n_z {
        return Err(invalid(format!("e0 has length {}, expected {}", e0.len(), aug.n_z)));
    }
    if scenario.continuity_order(cfg.t0) < aug.r {
        return Err(invalid(format!(
            "the reduced error dynamics need f, …, f^({}) continuous on the horizon",
            aug.r - 1
        )));
    }

    let n = d.n;
    let nz = aug.n_z;
    let ms = &obs.m * &aug.s_a;
    let md = &obs.m * &aug.d_a;
    let vj = &aug.v_a - &obs.j * &aug.c_a;
    let field = |t: f64, s: &DVector<f64>| -> DVector<f64> {
        let x = s.rows(0, n).into_owned();
        let e = s.rows(n, nz).into_owned();
        let u = cfg.input.eval(t);
        let f = scenario.value(t);
        let dx = plant.state_derivative(&x, &u, &f, t);
        let v = plant.v() * &x;
        let dg = plant.g_raw(&(&v + &vj * &e), &u, t) - plant.g_raw(&v, &u, t);
        let mut de = &obs.n * &e + &ms * dg;
        if d.n_f > 0 {
            de -= &md * scenario.derivative(aug.r, t);
        }
        let mut out = DVector::zeros(n + nz);
        out.rows_mut(0, n).copy_from(&dx);
        out.rows_mut(n, nz).copy_from(&de);
        out
    };

    let grid = cfg.grid();
    let mut state = DVector::zeros(n + nz);
    state.rows_mut(0, n).copy_from(&cfg.x0);
    state.rows_mut(n, nz).copy_from(e0);
    let mut states = Vec::with_capacity(grid.len());
    states.push(state.clone());
    for k in 1..grid.len() {
        let h = grid[k] - grid[k - 1];
        state = rk4_step(&field, grid[k - 1], h, &state);
        if state.iter().any(|v| !v.is_finite()) {
            return Err(SimulationError::NonFiniteState { step: k, t: grid[k] });
        }
        states.push(state.clone());
    }

    // Map back to observer coordinates: z = x̂_a + E y = x_a + e + E y.
    Ok(assemble_trace(plant, aug, obs, scenario, cfg, &grid, |k| {
        let t = grid[k];
        let x = states[k].rows(0, n).into_owned();
        let e = states[k].rows(n, nz).into_owned();
        let xa = aug.stack(&x, &scenario.chain(aug.r, t));
        let y = plant.output(&x, &scenario.value(t));
        (x, xa + e + &obs.e * y)
    }))
}

/// Trapezoidal integral of `v(t)` on the grid.
pub fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    t.windows(2)
        .zip(v.windows(2))
        .map(|(tt, vv)| 0.5 * (tt[1] - tt[0]) * (vv[0] + vv[1]))
        .sum()
}

/// `sqrt(∫‖C̄e‖² dt / ∫‖f⁽ʳ⁾‖² dt)` by the trapezoidal rule.
pub fn empirical_l2_gain(trace: &SimulationTrace) -> Result<f64, SimulationError> {
    let Some(fr) = &trace.f_r else {
        return Err(SimulationError::DegenerateInput(
            "the trace carries no analytic f^(r) series".into(),
        ));
    };
    let num: Vec<f64> = (0..trace.len())
        .map(|k| trace.fault_error(k).norm_squared())
        .collect();
    let den: Vec<f64> = fr.column_iter().map(|c| c.norm_squared()).collect();
    let den_int = trapezoid(&trace.t, &den);
    if den_int <= 1e-12 {
        return Err(SimulationError::DegenerateInput(format!(
            "∫‖f^(r)‖² dt = {den_int:.3e} is too small"
        )));
    }
    Ok((trapezoid(&trace.t, &num) / den_int).sqrt())
}

fn fmt15(v: f64) -> String {
    format!("{v:.14e}")
}

/// CSV with header `t,x1..xn,y1..ym,u1..ul,f1..f_nf,fhat1..fhat_nf,e_norm`,
/// 15 significant digits, `.` as decimal separator.
pub fn write_csv<W: Write>(trace: &SimulationTrace, mut w: W) -> io::Result<()> {
    let mut header = vec!["t".to_string()];
    let cols = [
        ("x", trace.x.nrows()),
        ("y", trace.y.nrows()),
        ("u", trace.u.nrows()),
        ("f", trace.f.nrows()),
        ("fhat", trace.f_hat.nrows()),
    ];
    for (name, count) in cols {
        header.extend((1..=count).map(|i| format!("{name}{i}")));
    }
    header.push("e_norm".into());
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for k in 0..trace.len() {
        line.clear();
        line.push_str(&fmt15(trace.t[k]));
        for m in [&trace.x, &trace.y, &trace.u, &trace.f, &trace.f_hat] {
            for v in m.column(k).iter() {
                line.push(',');
                line.push_str(&fmt15(*v));
            }
        }
        let _ = write!(line, ",{}", fmt15(trace.e_norm[k]));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn csv_string(trace: &SimulationTrace) -> String {
    let mut buf = Vec::new();
    write_csv(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Write `fault{i}_actual.dat` and `fault{i}_estimate.dat` (two columns,
/// `t value`) per fault channel into `dir`. Returns the written paths.
pub fn write_plot_data(trace: &SimulationTrace, dir: &Path) -> io::Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for i in 0..trace.f.nrows() {
        for (tag, series) in [("actual", &trace.f), ("estimate", &trace.f_hat)] {
            let path = dir.join(format!("fault{}_{tag}.dat", i + 1));
            let mut out = String::with_capacity(trace.len() * 48);
            let _ = writeln!(out, "# t f{}_{tag}", i + 1);
            for k in 0..trace.len() {
                let _ = writeln!(out, "{} {}", fmt15(trace.t[k]), fmt15(series[(i, k)]));
            }
            std::fs::write(&path, out)?;
            written.push(path);
        }
    }
    Ok(written)
}
