mod common;

use nalgebra::{DMatrix, DVector};
use nuio::benchmark::{benchmark_case, FaultCase};
use nuio::model::{augment, AugmentedModel, FaultModelConfig};
use nuio::synthesis::{recover_observer, synthesize, Observer, SynthesisOptions, SynthesisResult};
use nuio::verification::*;
use proptest::prelude::*;
use rand::Rng;

fn solved(case: FaultCase) -> (AugmentedModel, SynthesisResult) {
    let bc = benchmark_case(case, 1).unwrap();
    let res = synthesize(&bc.augmented, bc.plant.alpha(), &SynthesisOptions::default()).unwrap();
    (bc.augmented, res)
}

fn opts(samples: usize) -> SamplingOptions {
    SamplingOptions {
        samples,
        ..SamplingOptions::default()
    }
}

/// The observer is kept; only the Lyapunov matrix is corrupted.
fn with_flipped_p(res: &SynthesisResult) -> SynthesisResult {
    let mut bad = res.clone();
    bad.p[(0, 0)] = -bad.p[(0, 0)];
    bad
}

#[test]
fn origin_gives_zero_terms() {
    let (aug, res) = solved(FaultCase::Actuator);
    let e = DVector::zeros(aug.n_z);
    let dg = DVector::zeros(aug.dims.n_g);
    let w = DVector::zeros(aug.dims.n_f);
    assert_eq!(lyapunov_terms(&aug, &res, &e, &dg), (0.0, 0.0));
    assert_eq!(hamilton_jacobi_value(&aug, &res, res.rho.unwrap(), &e, &dg, &w), 0.0);
}

#[test]
fn zero_gain_observer_has_exact_identities() {
    let (aug, _) = solved(FaultCase::Sensor);
    let obs = Observer::zero_gain(&aug);
    let audit = observer_identity_audit(&obs, &aug, None, IDENTITY_TOL);
    assert_eq!(audit.g_residual, 0.0);
    assert_eq!(audit.nm_residual, 0.0);
    assert_eq!(audit.m_residual, 0.0);
    assert!(audit.passed);
    assert!(!audit.decoupled);
}

#[test]
fn benchmark_gains_satisfy_the_identities() {
    for case in [FaultCase::Sensor, FaultCase::Actuator] {
        let (aug, res) = solved(case);
        let lmi = LmiPoint {
            p: &res.p,
            r: &res.r,
            q: &res.q,
        };
        let audit = observer_identity_audit(&res.observer, &aug, Some(lmi), IDENTITY_TOL);
        assert!(audit.passed, "{case:?}: {audit}");
        assert!(audit.g_residual <= 1e-9 && audit.nm_residual <= 1e-9);
        assert!(delta_equivalence_residual(&aug, &res) <= 1e-10);
    }
}

#[test]
fn perturbed_l_is_flagged() {
    let (aug, res) = solved(FaultCase::Sensor);
    let mut rng = common::rng(5);
    let mut obs = res.observer.clone();
    obs.l += common::random_matrix(&mut rng, obs.l.nrows(), obs.l.ncols()) * 1e-3;
    let audit = observer_identity_audit(&obs, &aug, None, IDENTITY_TOL);
    assert!(audit.nm_residual > 1e-6);
    assert_eq!(audit.g_residual, 0.0);
    assert!(!audit.passed);
    assert!(audit.to_string().starts_with("FAIL"));
}

#[test]
fn tampered_q_breaks_gain_consistency() {
    let (aug, res) = solved(FaultCase::Actuator);
    let mut q = res.q.clone();
    q[(0, 0)] += 0.5;
    let lmi = LmiPoint {
        p: &res.p,
        r: &res.r,
        q: &q,
    };
    let audit = observer_identity_audit(&res.observer, &aug, Some(lmi), IDENTITY_TOL);
    assert!(!audit.passed);
    assert!(audit.pk_residual.unwrap() > 0.1);
    assert!(audit.pe_residual.unwrap() <= 1e-9);
}

#[test]
fn benchmark_certificates_survive_sampling() {
    for case in [FaultCase::Sensor, FaultCase::Actuator] {
        let (aug, res) = solved(case);
        let suite = verify_result(&aug, &res, &opts(20_000));
        assert!(suite.passed(), "{case:?}:\n{suite}");
        assert!(suite.lyapunov.worst_margin <= 1e-9);
        assert_eq!(suite.hamilton_jacobi.as_ref().unwrap().violations, 0);
        let text = suite.to_string();
        assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{text}");
    }
}

#[test]
fn sign_flipped_p_is_caught() {
    for case in [FaultCase::Sensor, FaultCase::Actuator] {
        let (aug, res) = solved(case);
        let bad = with_flipped_p(&res);
        let lyap = lyapunov_decrease_check(&aug, &bad, &opts(20_000));
        assert!(!lyap.passed && lyap.violations > 0, "{case:?}: {lyap}");
        let hj = hamilton_jacobi_check(&aug, &bad, res.rho.unwrap(), &opts(20_000));
        assert!(!hj.passed && hj.violations > 0, "{case:?}: {hj}");
    }
}

#[test]
fn shrinking_rho_breaks_the_dissipation_inequality() {
    let (aug, res) = solved(FaultCase::Actuator);
    let rho = res.rho.unwrap();
    let hj = hamilton_jacobi_check(&aug, &res, rho / 10.0, &opts(20_000));
    assert!(!hj.passed && hj.violations > 0, "{hj}");
    let m = hamilton_jacobi_matrix(&aug, &res, rho / 10.0);
    assert!(m.symmetric_eigenvalues().max() > 0.0);
}

#[test]
fn nonpositive_rho_is_reported() {
    let (aug, res) = solved(FaultCase::Actuator);
    let hj = hamilton_jacobi_check(&aug, &res, 0.0, &opts(10));
    assert!(!hj.passed);
    assert!(hj.note.is_some());
    let empty = lyapunov_decrease_check(&aug, &res, &opts(0));
    assert!(!empty.passed);
}

#[test]
fn sampling_is_deterministic_across_thread_counts() {
    let (aug, res) = solved(FaultCase::Actuator);
    let bad = with_flipped_p(&res);
    let o = SamplingOptions {
        samples: 30_000,
        seed: 99,
        tolerance: 1e-9,
    };
    let parallel = (lyapunov_decrease_check(&aug, &bad, &o), hamilton_jacobi_check(&aug, &bad, 0.01, &o));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| (lyapunov_decrease_check(&aug, &bad, &o), hamilton_jacobi_check(&aug, &bad, 0.01, &o)));
    assert_eq!(parallel, serial);
    assert!(parallel.0.violations > 0);
    let other_seed = lyapunov_decrease_check(&aug, &bad, &SamplingOptions { seed: 100, ..o });
    assert_ne!(other_seed.worst_margin, parallel.0.worst_margin);
}

#[test]
fn quadratic_forms_are_consistent_with_the_closed_form_matrices() {
    // Pointwise terms agree with the closed-form Δ, the dissipation matrix
    // is negative semidefinite, and aligned δg stays below the bound.
    let (aug, res) = solved(FaultCase::Actuator);
    let rho = res.rho.unwrap();
    let h = hamilton_jacobi_matrix(&aug, &res, rho);
    let mut rng = common::rng(17);
    for _ in 0..200 {
        let e = common::random_matrix(&mut rng, aug.n_z, 1).column(0).into_owned();
        let lyap = lyapunov_terms(&aug, &res, &e, &DVector::zeros(1));
        let quad = e.dot(&(delta_matrix(&aug, &res.observer, &res.p, res.alpha) * &e));
        assert!((lyap.1 - quad).abs() <= 1e-9 * (1.0 + quad.abs()));
        assert!(e.dot(&(&h * &e)) <= 1e-9 * e.norm_squared());
        let s: f64 = rng.random_range(-1.0..1.0);
        let dg = (&aug.v_a - res.j() * &aug.c_a) * &e * (res.alpha * s);
        let (w_dot, bound) = lyapunov_terms(&aug, &res, &e, &dg);
        assert!(w_dot <= bound + 1e-9 * (1.0 + bound.abs()));
    }
}

/// `X + X₁₂X₁₂ᵀ` written out term by term from `P`, `R`, `Q`, `J`.
fn expanded_x(aug: &AugmentedModel, alpha: f64, p: &DMatrix<f64>, r: &DMatrix<f64>, q: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    let (a, c, v, s) = (&aug.a_a, &aug.c_a, &aug.v_a, &aug.s_a);
    let s11 = a.transpose() * p + a.transpose() * c.transpose() * r.transpose() - c.transpose() * q.transpose()
        + p * a
        + r * c * a
        - q * c;
    let jc = j * c;
    let x = s11 + (v.transpose() * v - v.transpose() * &jc - jc.transpose() * v) * alpha;
    let ps = (p + r * c) * s;
    x + (&ps * ps.transpose() + jc.transpose() * &jc) * alpha
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn observer_form_equals_the_lmi_form(seed in any::<u64>(), r_order in 1usize..=3, alpha in 0.0f64..3.0) {
        let mut rng = common::rng(seed);
        let shape = common::random_shape(&mut rng);
        let plant = common::random_plant(&mut rng, shape);
        let aug = augment(&plant, FaultModelConfig::new(r_order).unwrap()).unwrap();
        let nz = aug.n_z;
        let b = common::random_matrix(&mut rng, nz, nz);
        let p = DMatrix::<f64>::identity(nz, nz) + &b * b.transpose() / nz as f64;
        let r = common::random_matrix(&mut rng, nz, shape.m);
        let q = common::random_matrix(&mut rng, nz, shape.m);
        let j = common::random_matrix(&mut rng, shape.n_v, shape.m);
        let obs = recover_observer(&p, &r, &q, &j, &aug).unwrap();
        let delta = delta_matrix(&aug, &obs, &p, alpha);
        let expanded = expanded_x(&aug, alpha, &p, &r, &q, &j);
        let worst = (&delta - &expanded).amax();
        prop_assert!(worst <= 1e-10 * (1.0 + delta.amax()), "{worst:e}");
        prop_assert!(delta_equivalence_at(&aug, alpha, &obs, &p, &r, &q) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn verified_certificates_never_fail_sampling(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let shape = common::random_shape(&mut rng);
        let plant = common::random_plant(&mut rng, shape);
        let aug = augment(&plant, FaultModelConfig::new(1).unwrap()).unwrap();
        let Ok(res) = synthesize(&aug, plant.alpha(), &SynthesisOptions::default()) else {
            return Ok(());
        };
        let recheck = recheck_certificate(&aug, &res);
        prop_assume!(recheck.iss_max_eigenvalue.is_some_and(|v| v <= 0.0));
        let o = SamplingOptions { samples: 4_000, seed, tolerance: 1e-9 };
        let report = lyapunov_decrease_check(&aug, &res, &o);
        prop_assert!(report.passed, "{report}");
        if let (Some(rho), Some(l2)) = (res.rho, recheck.l2_max_eigenvalue) {
            if l2 <= 0.0 && rho > 0.0 {
                let hj = hamilton_jacobi_check(&aug, &res, rho, &o);
                prop_assert!(hj.passed, "{hj}");
            }
        }
    }
}
