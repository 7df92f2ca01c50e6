mod common;

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nuio::benchmark::{robot_arm, FaultCase, RobotArmParams};
use nuio::model::*;
use proptest::prelude::*;

fn benchmark(case: FaultCase) -> PlantModel {
    robot_arm(&RobotArmParams::default(), case).unwrap()
}

#[test]
fn benchmark_augmentation_has_five_states() {
    let plant = benchmark(FaultCase::Sensor);
    let aug = augment(&plant, FaultModelConfig::new(1).unwrap()).unwrap();
    assert_eq!(aug.n_z, 5);
    let mut c_a = DMatrix::zeros(2, 5);
    c_a.view_mut((0, 0), (2, 4)).copy_from(plant.c());
    c_a[(0, 4)] = 1.0;
    assert_eq!(aug.c_a, c_a);
    assert_eq!(aug.d_a, DMatrix::from_column_slice(5, 1, &[0.0, 0.0, 0.0, 0.0, 1.0]));

    let act = augment(&benchmark(FaultCase::Actuator), FaultModelConfig::new(1).unwrap()).unwrap();
    let mut a_a = DMatrix::zeros(5, 5);
    a_a.view_mut((0, 0), (4, 4)).copy_from(plant.a());
    a_a[(0, 4)] = 1.0;
    assert_eq!(act.a_a, a_a);
}

#[test]
fn zero_fault_distribution_leaves_zero_blocks() {
    let plant = benchmark(FaultCase::Sensor)
        .with_faults(DMatrix::zeros(4, 1), DMatrix::zeros(2, 1))
        .unwrap();
    let aug = augment(&plant, FaultModelConfig::new(1).unwrap()).unwrap();
    assert!(aug.a_a.view((0, 4), (4, 1)).iter().all(|v| *v == 0.0));
    assert!(aug.c_a.column(4).iter().all(|v| *v == 0.0));
    assert_eq!(aug.c_a.view((0, 0), (2, 4)), *plant.c());
}

#[test]
fn third_order_model_matches_the_entrywise_layout() {
    let mut rng = common::rng(3);
    let shape = common::Shape {
        n: 3,
        m: 2,
        l: 1,
        n_f: 2,
        n_g: 1,
        n_v: 1,
    };
    let plant = common::random_plant(&mut rng, shape);
    let aug = augment(&plant, FaultModelConfig::new(3).unwrap()).unwrap();
    assert_eq!(aug.n_z, 9);
    let oracle = common::oracle_augment(&plant, 3);
    assert_eq!(common::oracle_mismatch(&aug, &oracle), None);
}

#[test]
fn benchmark_nonlinearity_values() {
    let plant = benchmark(FaultCase::Sensor);
    let u = DVector::from_element(1, 0.0);
    let g0 = eval_nonlinearity(&plant, NonlinearityInput::Plant(&DVector::zeros(4)), &u, 0.0).unwrap();
    assert_eq!(g0[0], 0.0);
    let x = DVector::from_column_slice(&[0.3, -0.2, 0.1, FRAC_PI_2]);
    let g1 = eval_nonlinearity(&plant, NonlinearityInput::Plant(&x), &u, 0.0).unwrap();
    assert!((g1[0] + 1.0).abs() < 1e-15);
}

#[test]
fn observer_mode_without_injection_equals_plant_mode() {
    let plant = benchmark(FaultCase::Sensor);
    let aug = augment(&plant, FaultModelConfig::new(2).unwrap()).unwrap();
    let j = DMatrix::zeros(1, 2);
    let mut rng = common::rng(11);
    for _ in 0..100 {
        let xa = common::random_matrix(&mut rng, aug.n_z, 1).column(0) * 3.0;
        let y = common::random_matrix(&mut rng, 2, 1).column(0).into_owned();
        let u = common::random_matrix(&mut rng, 1, 1).column(0).into_owned();
        let obs = eval_nonlinearity(
            &plant,
            NonlinearityInput::Observer {
                xa_hat: &xa,
                y: &y,
                j: &j,
            },
            &u,
            0.0,
        )
        .unwrap();
        let x = xa.rows(0, 4).into_owned();
        let direct = eval_nonlinearity(&plant, NonlinearityInput::Plant(&x), &u, 0.0).unwrap();
        assert_eq!(obs, direct);
    }
}

#[test]
fn observer_mode_uses_the_output_residual() {
    let plant = benchmark(FaultCase::Sensor);
    let aug = augment(&plant, FaultModelConfig::new(1).unwrap()).unwrap();
    let xa = DVector::from_column_slice(&[0.0, 0.2, 0.0, 0.1, 0.05]);
    let y = DVector::from_column_slice(&[0.4, 0.3]);
    let j = DMatrix::from_row_slice(1, 2, &[0.5, -1.0]);
    let u = DVector::zeros(1);
    let g = eval_nonlinearity(&plant, NonlinearityInput::Observer { xa_hat: &xa, y: &y, j: &j }, &u, 0.0)
        .unwrap();
    let arg = &aug.v_a * &xa + &j * (&y - &aug.c_a * &xa);
    assert!((g[0] + arg[0].sin()).abs() < 1e-15);
}

#[test]
fn dimension_errors_are_reported() {
    let plant = benchmark(FaultCase::Sensor);
    let u = DVector::zeros(1);
    let err = eval_nonlinearity(&plant, NonlinearityInput::Plant(&DVector::zeros(3)), &u, 0.0);
    assert!(matches!(err, Err(ModelError::DimensionMismatch { .. })));
    let xa = DVector::zeros(5);
    let y = DVector::zeros(2);
    let bad_j = DMatrix::zeros(2, 2);
    let err = eval_nonlinearity(
        &plant,
        NonlinearityInput::Observer { xa_hat: &xa, y: &y, j: &bad_j },
        &u,
        0.0,
    );
    assert!(matches!(err, Err(ModelError::DimensionMismatch { .. })));
}

#[test]
fn lipschitz_estimate_of_the_sine_is_at_most_one() {
    let plant = benchmark(FaultCase::Sensor);
    let wide = LipschitzDomain::symmetric(plant.dims(), 3.0, 1.0);
    let est = lipschitz_estimate(&plant, &wide, 20_000, 1).unwrap();
    assert!(est <= 1.0 && est > 0.9, "{est}");
    let near_zero = LipschitzDomain::symmetric(plant.dims(), 0.05, 1.0);
    let est = lipschitz_estimate(&plant, &near_zero, 2_000, 2).unwrap();
    assert!(est > 0.998, "{est}");
}

#[test]
fn lipschitz_estimate_of_a_constant_is_zero() {
    let plant = benchmark(FaultCase::Sensor);
    let m = plant.matrices().clone();
    let constant = PlantModel::new(m, 0.0, Arc::new(BuiltinNonlinearity::Zero { dim: 1 })).unwrap();
    let dom = LipschitzDomain::symmetric(constant.dims(), 1.0, 1.0);
    assert_eq!(lipschitz_estimate(&constant, &dom, 100, 0).unwrap(), 0.0);
}

#[test]
fn lipschitz_estimate_recovers_a_linear_slope() {
    let plant = benchmark(FaultCase::Sensor);
    let m = plant.matrices().clone();
    let gain = DMatrix::from_element(1, 1, 2.0);
    let lin = PlantModel::new(m, 2.0, Arc::new(BuiltinNonlinearity::Linear { gain })).unwrap();
    let dom = LipschitzDomain::symmetric(lin.dims(), 5.0, 1.0);
    let est = lipschitz_estimate(&lin, &dom, 10_000, 4).unwrap();
    assert!((est - 2.0).abs() <= 1e-9, "{est}");
    assert!(lipschitz_estimate(&lin, &dom, 1, 4).is_err());
}

#[test]
fn closure_nonlinearities_see_time_and_input() {
    let plant = benchmark(FaultCase::Sensor);
    let g = FnNonlinearity::new("forced", 1, |v, u, t| DVector::from_element(1, v[0] + u[0] * t));
    let p = PlantModel::new(plant.matrices().clone(), 1.0, Arc::new(g)).unwrap();
    let x = DVector::from_column_slice(&[0.0, 0.0, 0.0, 0.5]);
    let u = DVector::from_element(1, 2.0);
    let val = eval_nonlinearity(&p, NonlinearityInput::Plant(&x), &u, 3.0).unwrap();
    assert_eq!(val[0], 6.5);
    assert!(p.nonlinearity().builtin().is_none());
}

#[test]
fn mismatched_plant_matrices_are_rejected() {
    let mut m = benchmark(FaultCase::Sensor).matrices().clone();
    m.fy = DMatrix::zeros(2, 2);
    let err = PlantModel::new(m, 1.0, Arc::new(BuiltinNonlinearity::NegSin));
    assert!(matches!(err, Err(ModelError::DimensionMismatch { .. })));
    let m = benchmark(FaultCase::Sensor).matrices().clone();
    assert!(PlantModel::new(m, -1.0, Arc::new(BuiltinNonlinearity::NegSin)).is_err());
}

fn plant_and_order() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn augmentation_matches_the_entrywise_oracle((seed, r) in plant_and_order()) {
        let mut rng = common::rng(seed);
        let shape = common::random_shape(&mut rng);
        let plant = common::random_plant(&mut rng, shape);
        let aug = augment(&plant, FaultModelConfig::new(r).unwrap()).unwrap();
        prop_assert_eq!(aug.n_z, shape.n + r * shape.n_f);
        let oracle = common::oracle_augment(&plant, r);
        prop_assert_eq!(common::oracle_mismatch(&aug, &oracle), None);
        // Pure and deterministic.
        let again = augment(&plant, FaultModelConfig::new(r).unwrap()).unwrap();
        prop_assert_eq!(aug, again);
    }

    #[test]
    fn fault_selector_extracts_the_fault_block((seed, r) in plant_and_order()) {
        let mut rng = common::rng(seed);
        let shape = common::random_shape(&mut rng);
        let plant = common::random_plant(&mut rng, shape);
        let aug = augment(&plant, FaultModelConfig::new(r).unwrap()).unwrap();
        let xa = common::random_matrix(&mut rng, aug.n_z, 1).column(0).into_owned();
        let zeta1 = xa.rows(shape.n, shape.n_f).into_owned();
        prop_assert_eq!(&aug.c_bar * &xa, zeta1);
    }
}
