use nuio::benchmark::{ACTUATOR_PRESET, SENSOR_PRESET};
use nuio::config::*;
use nuio::model::BuiltinNonlinearity;
use nuio::synthesis::{synthesize, SynthesisError, SynthesisMode};

const SMALL: &str = r#"
[plant]
A = [[-1.0, 0.0], [0.0, -2.0]]
B = [[1.0], [0.0]]
S = [[0.0], [1.0]]
V = [[1.0, 0.0]]
C = [[1.0, 0.0]]
Fx = [[1.0], [0.0]]
Fy = [[0.0]]
lipschitz_alpha = 1.0
nonlinearity = { kind = "neg_sin_x4" }

[fault_model]
r = 1

[scenario]
channels = [{ kind = "sinusoid", amplitude = 0.1, omega = 0.25 }]

[simulation]
tf = 20.0
dt = 1e-3
x0 = [0.0, 0.0]
input = { kind = "channels", channels = [{ kind = "zero" }] }

[solver]
epsilon = 1e-3
mode = "full"
"#;

#[test]
fn presets_survive_a_toml_round_trip() {
    for name in [SENSOR_PRESET, ACTUATOR_PRESET] {
        let cfg = ProblemConfig::preset(name, 1).unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = ProblemConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg, "{name}");
        let (plant, aug) = back.build().unwrap();
        assert_eq!(plant.dims().n, 4);
        assert_eq!(aug.n_z, 5);
    }
}

#[test]
fn preset_order_follows_the_request() {
    let cfg = ProblemConfig::resolve(SENSOR_PRESET, Some(3)).unwrap();
    assert_eq!(cfg.fault_model.r, 3);
    assert_eq!(cfg.build().unwrap().1.n_z, 7);
    let spec = cfg.simulation.unwrap().to_config(7);
    assert_eq!(spec.z0.len(), 7);
}

#[test]
fn documented_example_parses_and_builds() {
    let cfg = ProblemConfig::from_toml_str(SMALL).unwrap();
    let (plant, aug) = cfg.build().unwrap();
    assert_eq!(plant.dims().n, 2);
    assert_eq!(aug.n_z, 3);
    let sim = cfg.simulation.as_ref().unwrap().to_config(aug.n_z);
    assert_eq!(sim.t0, 0.0);
    assert_eq!(sim.z0.len(), 3);
    assert!(sim.z0.iter().all(|v| *v == 0.0));
    assert_eq!(cfg.solver.mode, SynthesisMode::Full);
    assert!(cfg.scenario.unwrap().validate(1).is_ok());
}

#[test]
fn missing_matrix_is_named() {
    let text = SMALL.replace("C = [[1.0, 0.0]]\n", "");
    let err = ProblemConfig::from_toml_str(&text).unwrap_err().to_string();
    assert!(err.contains("`C`"), "{err}");
}

#[test]
fn ragged_matrix_rows_are_rejected() {
    let text = SMALL.replace("A = [[-1.0, 0.0], [0.0, -2.0]]", "A = [[-1.0, 0.0], [0.0]]");
    assert!(ProblemConfig::from_toml_str(&text).is_err());
}

#[test]
fn unknown_nonlinearity_is_rejected() {
    let text = SMALL.replace("neg_sin_x4", "tanh");
    let err = ProblemConfig::from_toml_str(&text).unwrap_err().to_string();
    assert!(err.contains("tanh"), "{err}");
}

#[test]
fn inconsistent_dimensions_fail_at_build_time() {
    let text = SMALL.replace("V = [[1.0, 0.0]]", "V = [[1.0, 0.0, 0.0]]");
    let cfg = ProblemConfig::from_toml_str(&text).unwrap();
    assert!(matches!(cfg.build(), Err(ConfigError::Model(_))));
}

#[test]
fn zero_order_is_rejected() {
    let text = SMALL.replace("r = 1", "r = 0");
    assert!(ProblemConfig::from_toml_str(&text).is_err());
}

#[test]
fn table_nonlinearities_round_trip() {
    let text = SMALL.replace(
        r#"nonlinearity = { kind = "neg_sin_x4" }"#,
        r#"nonlinearity = { kind = "custom_table", breakpoints = [-1.0, 0.0, 1.0], values = [1.0, 0.0, -1.0] }"#,
    );
    let cfg = ProblemConfig::from_toml_str(&text).unwrap();
    assert!(matches!(cfg.plant.nonlinearity, BuiltinNonlinearity::CustomTable { .. }));
    let back = ProblemConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn identity_fault_output_is_infeasible() {
    // Every measured channel is faulty: no residual is left to estimate from.
    let mut cfg = ProblemConfig::preset(SENSOR_PRESET, 1).unwrap();
    cfg.plant.fy = nalgebra::DMatrix::identity(2, 2);
    cfg.plant.fx = nalgebra::DMatrix::zeros(4, 2);
    let (plant, aug) = cfg.build().unwrap();
    match synthesize(&aug, plant.alpha(), &cfg.solver) {
        Err(SynthesisError::Infeasible { hint, .. }) => {
            assert!(hint.unwrap().contains("rank(Fy)"));
        }
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

#[test]
fn artifacts_round_trip_exactly() {
    let cfg = ProblemConfig::preset(ACTUATOR_PRESET, 1).unwrap();
    let (plant, aug) = cfg.build().unwrap();
    let res = synthesize(&aug, plant.alpha(), &cfg.solver).unwrap();
    let art = SynthesisArtifact::new(Some(ACTUATOR_PRESET.into()), cfg, res);
    let text = art.to_json().unwrap();
    let back = SynthesisArtifact::from_json(&text).unwrap();
    assert_eq!(back, art);
    assert_eq!(back.to_json().unwrap(), text);
    assert!(back.build().is_ok());
    assert!(text.contains(ARTIFACT_FORMAT));
}

#[test]
fn corrupted_artifacts_are_rejected() {
    let cfg = ProblemConfig::preset(SENSOR_PRESET, 1).unwrap();
    let (plant, aug) = cfg.build().unwrap();
    let res = synthesize(&aug, plant.alpha(), &cfg.solver).unwrap();
    let art = SynthesisArtifact::new(None, cfg.clone(), res);
    let text = art.to_json().unwrap();

    let wrong_tag = text.replace(ARTIFACT_FORMAT, "nuio-synthesis/0");
    assert!(matches!(SynthesisArtifact::from_json(&wrong_tag), Err(ConfigError::Invalid(_))));
    assert!(matches!(SynthesisArtifact::from_json(&text[..text.len() / 2]), Err(ConfigError::Parse(_))));

    let mut other_order = art.clone();
    other_order.problem.fault_model.r = 2;
    assert!(matches!(other_order.build(), Err(ConfigError::Invalid(_))));
}

#[test]
fn missing_files_are_io_errors() {
    let err = ProblemConfig::load(std::path::Path::new("/nonexistent/problem.toml")).unwrap_err();
    assert!(matches!(err, ConfigError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/problem.toml"));
}
