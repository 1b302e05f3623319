use std::path::Path;
use std::process::{Command, Output};

use voinav::engine::EpisodeMetrics;
use voinav::harness::{read_tradeoff_csv, CommMode};
use voinav::mapio::load_map;

fn voinav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voinav")).args(args).env_remove("VOINAV_BANDWIDTH").output().unwrap()
}

fn voinav_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_voinav"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn metrics(p: &Path) -> EpisodeMetrics {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn gen_map_maze_parses_back_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.map");
    let o = voinav(&["gen-map", "--kind", "maze", "--size", "30", "--seed", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let g = load_map(&out).unwrap();
    assert_eq!(g.size(), 30);
    assert!(g.values().iter().all(|v| *v == 0 || *v == 100));
}

#[test]
fn gen_map_terrain_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.map");
    let o = voinav(&["gen-map", "--kind", "terrain", "--size", "64", "--seed", "7", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(load_map(&out).unwrap().size(), 64);
}

#[test]
fn missing_out_is_a_usage_error() {
    let o = voinav(&["gen-map", "--kind", "maze", "--size", "30"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[usage]: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn bogus_framework_is_a_usage_error() {
    let o = voinav(&["run", "--framework", "BOGUS"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[usage]: "));
}

#[test]
fn run_is_repeatable_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = voinav(&["run", "--framework", "UI", "--size", "24", "--seed", "9", "--metrics-out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let m = metrics(&a);
    assert_eq!(m.total_data, 0);
    assert!(m.completed);
}

#[test]
fn run_on_a_map_file_with_explicit_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("m.map");
    assert!(voinav(&["gen-map", "--kind", "maze", "--size", "15", "--seed", "1", "--out", s(&map)]).status.success());
    let out = dir.path().join("r.json");
    let events = dir.path().join("r.jsonl");
    let o = voinav(&[
        "run", "--map", s(&map), "--framework", "MILP1", "--starts", "2,2", "--goals", "14,14", "--bandwidth", "5",
        "--metrics-out", s(&out), "--events-out", s(&events),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&out);
    assert_eq!(m.seekers.len(), 1);
    assert!(m.peak_step_delivery <= 5);
    let log = std::fs::read_to_string(&events).unwrap();
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(first["event"], "start");
    let last: serde_json::Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert_eq!(last["event"], "end");
    assert_eq!(last["total_data"], m.total_data);
}

#[test]
fn infeasible_endpoints_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("wall.map");
    let mut text = String::from("N 8 PHI_MIN 0 PHI_MAX 100 PHI_OBS 50 PHI_U 50\n");
    for _ in 0..8 {
        text.push_str("0 0 0 100 0 0 0 0\n");
    }
    std::fs::write(&map, text).unwrap();
    let o = voinav(&["run", "--map", s(&map), "--framework", "UI", "--starts", "1,1", "--goals", "8,8"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[config]: "), "{}", stderr(&o));
}

#[test]
fn step_limit_exits_with_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = voinav(&["run", "--framework", "FI1", "--max-steps", "2", "--metrics-out", s(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error[timeout]: "));
    assert!(!metrics(&out).completed);
}

#[test]
fn sweep_row_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    let o = voinav(&[
        "sweep", "--size", "16", "--trials", "2", "--bandwidths", "9,27", "--frameworks", "UI,FI1,MILP1", "--out-dir",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let points = read_tradeoff_csv(std::fs::File::open(out.join("tradeoff.csv")).unwrap()).unwrap();
    let count = |m: CommMode| points.iter().filter(|p| p.framework.comm == m).count();
    assert_eq!((count(CommMode::Ui), count(CommMode::Fi), count(CommMode::Milp)), (1, 1, 2));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 4);
    let metrics_rows = std::fs::read_to_string(out.join("metrics.csv")).unwrap().lines().count();
    assert_eq!(metrics_rows, 1 + 2 * 4);
}

#[test]
fn sweep_rejects_empty_lists() {
    let o = voinav(&["sweep", "--frameworks", "MILP1", "--bandwidths", "", "--out-dir", "unused"]);
    assert_eq!(o.status.code(), Some(2));
    let o = voinav(&["sweep", "--frameworks", "", "--out-dir", "unused"]);
    assert_eq!(o.status.code(), Some(2));
    let o = voinav(&["sweep", "--out-dir", "unused"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn settings_precedence_file_then_env_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test settings\nsize = 20\nbandwidth = 3\nseekers = 2\n").unwrap();
    let run = |extra: &[&str], env: &[(&str, &str)]| -> EpisodeMetrics {
        let out = dir.path().join("m.json");
        let mut args = vec!["--config", s(&cfg), "run", "--framework", "MILP1", "--metrics-out", s(&out)];
        args.extend_from_slice(extra);
        let o = voinav_env(&args, env);
        assert!(o.status.success(), "{}", stderr(&o));
        metrics(&out)
    };
    let from_file = run(&[], &[]);
    assert_eq!(from_file.bandwidth, Some(3));
    assert_eq!(from_file.seekers.len(), 2);
    let from_env = run(&[], &[("VOINAV_BANDWIDTH", "9")]);
    assert_eq!(from_env.bandwidth, Some(9));
    let from_flag = run(&["--bandwidth", "18"], &[("VOINAV_BANDWIDTH", "9")]);
    assert_eq!(from_flag.bandwidth, Some(18));
    let from_set = run(&["--set", "bandwidth=54"], &[]);
    assert_eq!(from_set.bandwidth, Some(54));
}

#[test]
fn bad_settings_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "size = 20\nwarp_speed = 9\n").unwrap();
    let o = voinav(&["--config", s(&cfg), "run", "--framework", "UI"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let o = voinav_env(&["run", "--framework", "UI"], &[("VOINAV_SIZE", "huge")]);
    assert_eq!(o.status.code(), Some(3));
    let o = voinav(&["run", "--framework", "UI", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn showcase_runs_all_frameworks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("show");
    let o = voinav(&["showcase", "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for label in ["UI", "FI0", "FI1", "MILP0", "MILP1"] {
        assert!(out.join(format!("{label}.json")).exists());
        assert!(out.join(format!("{label}.events.jsonl")).exists());
    }
    let fi = metrics(&out.join("FI1.json"));
    let milp = metrics(&out.join("MILP1.json"));
    assert!(milp.completed && fi.completed);
    assert_eq!(milp.bandwidth, Some(27));
    assert!(milp.total_data * 2 < fi.total_data, "MILP1 {} vs FI1 {}", milp.total_data, fi.total_data);
    assert_eq!(load_map(out.join("map.txt")).unwrap().size(), 32);
}
