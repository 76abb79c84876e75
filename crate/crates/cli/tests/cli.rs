use std::fs;
use std::path::Path;
use std::process::{Command, Output};

/// Runs the binary from a scratch working directory, so config-named outputs
/// never land in the source tree.
fn sunstar(args: &[&str], out_dir: Option<&Path>) -> Output {
    let cwd = tempfile::tempdir().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sunstar"));
    cmd.args(args).current_dir(cwd.path()).env_remove("SUNSTAR_OUTPUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("SUNSTAR_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn bundled_text(name: &str) -> String {
    let out = sunstar(&["scenario", name], None);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn solve_every_bundled_scenario() {
    let list = sunstar(&["scenario"], None);
    let names: Vec<String> = String::from_utf8(list.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(names.len(), 6);
    let dir = tempfile::tempdir().unwrap();
    for name in &names {
        let out = sunstar(&["solve", name], Some(dir.path()));
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let summary = stdout_json(&out);
        assert_eq!(summary["passed"], true);
        assert!(dir.path().join(format!("{name}.csv")).exists());
        assert!(dir.path().join(format!("{name}.json")).exists());
    }
}

#[test]
fn config_named_outputs_without_override() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&bundled_text("trivial")).unwrap();
    let csv = dir.path().join("nested").join("run.csv");
    cfg["outputs"] = serde_json::json!({ "csv": csv.to_str().unwrap() });
    let path = dir.path().join("cfg.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = sunstar(&["solve", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(csv.exists());
    assert!(!dir.path().join("nested").join("trivial.json").exists());
}

#[test]
fn hutchinson_value_at_one() {
    let out = sunstar(&["solve", "hutchinson"], None);
    let summary = stdout_json(&out);
    // x(t) = 1 − t on [0, 1].
    assert!(summary["final_state"][0].as_f64().unwrap().abs() < 1e-3);
    assert_eq!(summary["steps"], 1000);
}

#[test]
fn solve_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("cfg.json");
    fs::write(&cfg, bundled_text("delayed_heat")).unwrap();
    let cfg = cfg.to_str().unwrap();
    let ra = sunstar(&["solve", cfg], Some(a.path()));
    let rb = sunstar(&["solve", cfg], Some(b.path()));
    assert_eq!(ra.stdout, rb.stdout);
    for file in ["delayed_heat.csv", "delayed_heat.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
}

#[test]
fn config_errors_exit_two_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&bundled_text("trivial")).unwrap();
    cfg["dt"] = serde_json::json!(0.003);
    let path = dir.path().join("bad.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = sunstar(&["solve", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`dt`"));

    let out = sunstar(&["solve", dir.path().join("missing.json").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));

    let out = sunstar(&["verify", "--suite", "nope"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn understated_lipschitz_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&bundled_text("hutchinson")).unwrap();
    cfg["lipschitz"] = serde_json::json!(0.1);
    let path = dir.path().join("lip.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = sunstar(&["solve", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergent_iteration_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&bundled_text("hutchinson")).unwrap();
    cfg["rhs"]["terms"][0]["matrix"] = serde_json::json!([[-1e200]]);
    cfg["lipschitz"] = serde_json::Value::Null;
    let path = dir.path().join("div.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = sunstar(&["solve", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contract"));
}

#[test]
fn verify_pass_and_injected_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = sunstar(&["verify", "--suite", "perturbed", "--seed", "7"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)[0]["passed"], true);
    assert!(dir.path().join("verify_perturbed.json").exists());

    let out = sunstar(&["verify", "--suite", "duality", "--m-ladder", "50,100", "--inject-sign-bug"], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)[0]["passed"], false);
}

#[test]
fn resolvent_table_and_admissibility() {
    let dir = tempfile::tempdir().unwrap();
    let out = sunstar(&["resolvent", "trivial", "--lambdas", "1,2,5"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = stdout_json(&out);
    assert_eq!(rep["rows"].as_array().unwrap().len(), 3);
    let csv = fs::read_to_string(dir.path().join("trivial_resolvent.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    // Zero generator: ω = 0, so λ = 0 is not admissible.
    let mut cfg: serde_json::Value = serde_json::from_str(&bundled_text("hutchinson")).unwrap();
    cfg["outputs"] = serde_json::json!({});
    let path = dir.path().join("h.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = sunstar(&["resolvent", path.to_str().unwrap(), "--lambdas", "0"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = sunstar(&["resolvent", path.to_str().unwrap(), "--lambdas", "0.5,3"], None);
    assert_eq!(out.status.code(), Some(0));
}
