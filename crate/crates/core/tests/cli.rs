use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn noregret(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noregret"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn quadratic_config(extra: Value) -> Value {
    let mut v = json!({
        "game": {"game": "quadratic_stream",
                 "params": {"dim": 2, "beta": 1.0, "targets": {"cycle": [[0.2, -0.1], [0.6, 0.3]]}},
                 "noise": {"sigma": 0.3}},
        "learners": "ada_ogd",
        "horizon": 10,
        "seed": 4,
        "metrics": ["action", "regret"]
    });
    for (k, val) in extra.as_object().unwrap() {
        v[k] = val.clone();
    }
    v
}

#[test]
fn run_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let cfg = write_json(dir.path(), "c.json", &quadratic_config(json!({"output": out, "replications": 3})));
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = noregret(&["run", "--config", &cfg]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let text = String::from_utf8(runs.remove(0)).unwrap();
    assert!(text.starts_with("seed,t,metric,value\n"));
    let seed0_actions = text.lines().filter(|l| l.starts_with("0,") && l.contains(",action[0],")).count();
    assert_eq!(seed0_actions, 11);
    assert!(text.contains("-1,10,mean/regret,"));
    assert!(text.contains("-1,10,stderr/regret,"));
}

#[test]
fn run_without_output_prints_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(dir.path(), "c.json", &quadratic_config(json!({})));
    let o = noregret(&["run", "--config", &cfg]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("seed,t,metric,value"));
}

#[test]
fn sweep_appends_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(
        dir.path(),
        "c.json",
        &quadratic_config(json!({"horizons": [50, 100, 200], "replications": 2, "metrics": ["regret"]})),
    );
    let o = noregret(&["sweep", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("-1,0,slope/regret,"));
    assert!(text.contains("-1,0,nonconvergent/regret,"));
}

#[test]
fn invalid_configs_exit_with_two_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (quadratic_config(json!({"horizn": 5})), "horizn"),
        (quadratic_config(json!({"learners": "sgd"})), "learners"),
        (quadratic_config(json!({"replications": 0})), "replications"),
        (quadratic_config(json!({"learners": "ada_ons"})), "learners"),
        (quadratic_config(json!({"horizons": [10, 20]})), "horizons"),
    ];
    for (i, (v, key)) in cases.iter().enumerate() {
        let cfg = write_json(dir.path(), &format!("c{i}.json"), v);
        let cmd = if *key == "horizons" { "sweep" } else { "run" };
        let o = noregret(&[cmd, "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "case {key}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(&format!("`{key}`")), "case {key}: {err}");
    }
    let o = noregret(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn game_given_as_relative_path() {
    let dir = tempfile::tempdir().unwrap();
    let game = json!({"game": "newsvendor_ma", "params": {"price": 2.0, "costs": [1.0, 1.0], "x_bar": [1.0, 1.0]}});
    write_json(dir.path(), "retailers.json", &game);
    let cfg = json!({"game": "retailers.json", "learners": ["ada_ogd", "ada_ogd"], "horizon": 64,
                     "metrics": ["distance", "gap"]});
    let cfg = write_json(dir.path(), "c.json", &cfg);
    let o = noregret(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("0,64,gap,"));
}

#[test]
fn probe_reports_on_an_instance() {
    let dir = tempfile::tempdir().unwrap();
    let game = json!({"game": "power_management",
                      "params": {"gain": [[2.0, 1.0], [1.0, 2.0]], "r_star": [0.5, 0.5], "thermal": [1.0, 1.0]}});
    let path = write_json(dir.path(), "pm.json", &game);
    let o = noregret(&["probe", "--game", &path, "--pairs", "2000"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("monotonicity: claimed beta 0.750000"), "{text}");
    assert!(text.contains("pass"));
}
