//! End-to-end runs of the `carleman` binary on the bundled scenarios.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn out_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("carleman-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_carleman"));
    cmd.args(args).arg("--quiet");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn report(dir: &Path, command: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{command}.json"))).expect("report written");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn det2_on_the_kp_scenario_passes_and_writes_tables() {
    let dir = out_dir("det2");
    let cfg = scenario("kp_graph.json");
    let o =
        run(&["det2", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()], &[("CARLEMAN_THREADS", "2")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir, "det2");
    assert_eq!(r["pass"], Value::Bool(true));
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(r["grid"]["nodes"], 288);
    let grid = std::fs::read_to_string(dir.join("det2_grid.csv")).unwrap();
    assert!(grid.starts_with("re,im,weight\n"));
    assert_eq!(grid.lines().count(), 289);
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn overrides_reach_the_config_and_the_hash() {
    let cfg = scenario("nilpotent.json");
    let (a, b) = (out_dir("hash-a"), out_dir("hash-b"));
    let base = ["solve-dbar", "--config", cfg.to_str().unwrap(), "--radial", "6", "--angular", "12"];
    let o = run(&[&base[..], &["--out", a.to_str().unwrap()]].concat(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[&base[..], &["--out", b.to_str().unwrap(), "--set", "field.value=[0.5,0.0]"]].concat(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let (ra, rb) = (report(&a, "solve_dbar"), report(&b, "solve_dbar"));
    assert_ne!(ra["config_hash"], rb["config_hash"]);
    assert_eq!(rb["inputs"]["field"]["value"], serde_json::json!([0.5, 0.0]));
    assert_eq!(ra["grid"]["radial_points"], 6);
    let _ = std::fs::remove_dir_all(a);
    let _ = std::fs::remove_dir_all(b);
}

#[test]
fn broken_mirror_symmetry_is_a_tolerance_failure() {
    let dir = out_dir("mirror");
    let cfg = scenario("nls_disk.json");
    let o = run(
        &[
            "nls-solve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--set",
            "field.mirror_scale=2.0",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir, "nls_solve");
    assert_eq!(r["pass"], Value::Bool(false));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn config_errors_exit_with_two() {
    let cfg = scenario("kp_graph.json");
    let dir = out_dir("config");
    let d = dir.to_str().unwrap();
    let c = cfg.to_str().unwrap();
    for args in [
        vec!["det2", "--config", c, "--out", d, "--set", "domain.kind=\"square\""],
        vec!["det2", "--config", c, "--out", d, "--radial", "41"],
        vec!["det2", "--config", "/nonexistent/config.json", "--out", d],
        vec!["no-such-command"],
    ] {
        let o = run(&args, &[]);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["det2", "--config", c, "--out", d], &[("CARLEMAN_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn solver_failures_exit_with_three() {
    let dir = out_dir("solver");
    let cfg = scenario("nilpotent.json");
    let o = run(
        &["det2", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--set", "times=[[5000.0,0.0]]"],
        &[],
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let _ = std::fs::remove_dir_all(dir);
}
