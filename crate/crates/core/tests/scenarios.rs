use proptest::prelude::*;
use sunstar::aie::{picard_solve_aie, PicardOptions};
use sunstar::report::{solve_scenario, trajectory_csv};
use sunstar::scenario::{InitialConfig, ScenarioConfig};
use sunstar::{Error, TrajectoryF32};

#[test]
fn bundled_configs_round_trip() {
    for cfg in ScenarioConfig::bundled_all() {
        let again = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again, "{}", cfg.name);
    }
}

#[test]
fn solve_is_bit_identical_across_runs() {
    for name in ["two_delays_matrix", "delayed_heat"] {
        let cfg = ScenarioConfig::bundled(name).unwrap();
        let (ta, sa) = solve_scenario(&cfg).unwrap();
        let (tb, sb) = solve_scenario(&cfg).unwrap();
        assert_eq!(trajectory_csv(&ta).unwrap(), trajectory_csv(&tb).unwrap());
        assert_eq!(serde_json::to_string(&sa).unwrap(), serde_json::to_string(&sb).unwrap());
    }
}

#[test]
fn single_precision_hutchinson() {
    let cfg = ScenarioConfig::bundled("hutchinson").unwrap();
    let handle = cfg.handle::<f32>().unwrap();
    let rhs = cfg.rhs::<f32>().unwrap();
    let phi = cfg.initial::<f32>().unwrap();
    let opts = PicardOptions { picard_tol: 1e-6, ..cfg.picard_options::<f32>() };
    let (traj, _): (TrajectoryF32, _) = picard_solve_aie(&handle, &rhs, &phi, 1.0, 1e-3, &opts).unwrap();
    assert!(traj.at_step(traj.n_steps())[0].abs() < 1e-3);
}

#[test]
fn unknown_fields_are_rejected() {
    let text = ScenarioConfig::bundled("trivial").unwrap().to_json().replacen("\"seed\"", "\"sed\"", 1);
    assert!(matches!(ScenarioConfig::from_json(&text), Err(Error::Config { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edited_configs_round_trip(
        which in 0usize..6,
        seed in any::<u64>(),
        amplitude in -5.0f64..5.0,
        frequency in 0.0f64..10.0,
        tol_exp in -14i32..-3,
    ) {
        let mut cfg = ScenarioConfig::bundled_all().swap_remove(which);
        cfg.seed = seed;
        cfg.tolerances.picard_tol = 10f64.powi(tol_exp);
        cfg.initial = InitialConfig::Sine {
            amplitude: vec![amplitude; cfg.space.dim],
            frequency,
            phase: 0.25,
        };
        let text = cfg.to_json();
        let parsed = ScenarioConfig::from_json(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parsed.to_json(), text);
    }
}
