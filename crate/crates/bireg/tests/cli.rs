use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn bireg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bireg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_graph_reports_benchmark_partition() {
    let o = bireg(&["check-graph", data("benchmark.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("partition: V1 = {1, 2}, V2 = {3, 4}"), "{out}");
    assert!(out.contains("leader spanning tree: yes"));
    assert!(out.contains("H^s eigenvalues: {3, 1, 1, 1}"), "{out}");
}

#[test]
fn check_graph_prints_witness_for_unbalanced_graph() {
    let o = bireg(&["check-graph", data("unbalanced.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cycle 3 -> 1 -> 2 -> 3"), "{}", stderr(&o));
}

#[test]
fn check_graph_without_spanning_tree_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    std::fs::write(&path, "0 1 1\n3 2 -1\n").unwrap();
    let o = bireg(&["check-graph", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("leader spanning tree: no"));
}

#[test]
fn gains_expand_the_pole_polynomial() {
    let o = bireg(&["gains", "--order", "2", "--poles", "-1,-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "beta = 1, 2\n");
    // (s + 3)(s^2 + 2s + 5) = s^3 + 5s^2 + 11s + 15
    let o = bireg(&["gains", "--order", "3", "--poles", "-1+2i,-1-2i,-3"]);
    assert_eq!(stdout(&o), "beta = 15, 11, 5\n");
    let o = bireg(&["gains", "--order", "3", "--poles", "-2"]);
    assert_eq!(stdout(&o), "beta = 8, 12, 6\n");
}

#[test]
fn gains_reject_bad_input() {
    assert_eq!(bireg(&["gains", "--order", "2", "--poles", "-1,-1,-1"]).status.code(), Some(1));
    assert_eq!(bireg(&["gains", "--order", "2", "--poles", "1,-1"]).status.code(), Some(1));
    assert_eq!(bireg(&["gains", "--order", "2", "--poles", "abc"]).status.code(), Some(1));
}

#[test]
fn unknown_subcommand_and_flag_print_usage() {
    for args in [&["frobnicate"][..], &["gains", "--colour", "red"][..], &[][..]] {
        let o = bireg(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains("Usage:"), "{}", stderr(&o));
    }
    assert_eq!(bireg(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let config = data("pendulums.conf");
    for out in [&a, &b] {
        let o = bireg(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("time,entity,series,value\n"));
    // t_final / (dt * record_every) + 1 samples of 26 rows each
    assert_eq!(text.lines().count(), 1 + 301 * 26);
    let last_e: Vec<f64> = text
        .lines()
        .rev()
        .take(26)
        .filter(|l| l.contains(",e,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(last_e.len(), 4);
    assert!(last_e.iter().all(|e| e.abs() <= 1e-2), "{last_e:?}");
}

#[test]
fn simulate_blow_up_exits_two_with_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("benchmark.txt"), dir.path().join("benchmark.txt")).unwrap();
    let conf = std::fs::read_to_string(data("pendulums.conf")).unwrap() + "blowup_threshold = 0.5\n";
    let conf_path = dir.path().join("s.conf");
    std::fs::write(&conf_path, conf).unwrap();
    let out = dir.path().join("s.csv");
    let o = bireg(&["simulate", "--config", conf_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().count() > 1);
}

#[test]
fn simulate_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "graph = missing.txt\nexosystem = vanderpol\nv0 = 0, 0\n").unwrap();
    let o = bireg(&["simulate", "--config", conf.to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.txt"));
}

#[test]
fn turing_renders_small_target() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("t.pgm");
    let out = dir.path().join("o.pgm");
    std::fs::write(&target, "P2\n3 2\n255\n0 255 0\n255 255 0\n").unwrap();
    let o = bireg(&["turing", "--target", target.to_str().unwrap(), "--out", out.to_str().unwrap(), "--t-final", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(bytes, b"P5\n3 2\n255\n\x00\xff\x00\xff\xff\x00".to_vec());
}

#[test]
fn turing_rejects_bad_target() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("t.pgm");
    std::fs::write(&target, "P6\n1 1\n255\n\0\0\0").unwrap();
    let o = bireg(&["turing", "--target", target.to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn turing_with_unstable_step_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("t.pgm");
    std::fs::write(&target, "P2\n2 1\n255\n0 255\n").unwrap();
    let o = bireg(&["turing", "--target", target.to_str().unwrap(), "--out", "/dev/null", "--dt", "0.5", "--mu", "100"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("row 0"));
}
