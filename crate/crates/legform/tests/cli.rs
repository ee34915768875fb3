use std::path::Path;
use std::process::{Command, Output};

fn legform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legform")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = legform(&["evolve", "--bogus"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&legform(&["frobnicate"])), 1);
    assert_eq!(code(&legform(&[])), 1);
    assert_eq!(code(&legform(&["--help"])), 0);
    assert_eq!(code(&legform(&["--version"])), 0);
}

#[test]
fn invalid_configuration_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&legform(&["evolve", "--representation", "cppn", "--env", "soil", "--out", p(&out)])), 1);
    assert_eq!(code(&legform(&["evolve", "--representation", "bezier", "--env", "soil", "--population", "1", "--out", p(&out)])), 1);
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"representation":"bezier","environment":"soil","colour":"red"}"#).unwrap();
    assert_eq!(code(&legform(&["evolve", "--config", p(&cfg), "--out", p(&out)])), 1);
}

#[test]
fn missing_files_are_runtime_errors() {
    assert_eq!(code(&legform(&["evaluate", "/nonexistent/genome.json"])), 2);
    assert_eq!(code(&legform(&["compare", "/nonexistent/a", "/nonexistent/b"])), 2);
}

#[test]
fn evolve_smoke_writes_archive() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = legform(&[
        "evolve", "--representation", "cppn", "--constraint", "scale", "--env", "soil", "--generations", "2", "--population", "20",
        "--repeats", "1", "--seed", "7", "--out", p(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["stats.csv", "plot.svg", "config.json", "run_0/gen_0/champion.json", "run_0/gen_1/champion.json", "run_0/champion.stl", "run_0/champion.obj"] {
        assert!(out.join(f).is_file(), "{f}");
    }

    let genome = out.join("run_0/gen_1/champion.json");
    let trace = dir.path().join("trace.csv");
    let res = legform(&["evaluate", p(&genome), "--env", "soil", "--constraint", "scale", "--trace", p(&trace)]);
    assert_eq!(code(&res), 0);
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let fitness = report["fitness"].as_f64().unwrap();
    let csv = std::fs::read_to_string(out.join("stats.csv")).unwrap();
    let best: f64 = csv.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(fitness, best);
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("step,tau_coxa,tau_femur,tau_tibia,tau_sum\n"));
    assert_eq!(trace_text.lines().count(), 3001);

    let stl = dir.path().join("leg.stl");
    let obj = dir.path().join("leg.obj");
    let res = legform(&["export-mesh", p(&genome), "--stl", p(&stl), "--obj", p(&obj), "--scale", "0.5", "--axis", "x", "--angle", "-90"]);
    assert_eq!(code(&res), 0);
    let bytes = std::fs::read(&stl).unwrap();
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    assert_eq!(bytes.len(), 84 + 50 * n);
    assert_eq!(code(&legform(&["export-mesh", p(&genome)])), 1);
}

#[test]
fn compare_identical_archives() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let res = legform(&[
        "evolve", "--representation", "bezier", "--env", "fluid", "--generations", "1", "--population", "4", "--repeats", "3", "--seed", "3",
        "--out", p(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let res = legform(&["compare", p(&out), p(&out)]);
    assert_eq!(code(&res), 0);
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report["p"].as_f64(), Some(1.0));
    assert_eq!(report["significant"].as_bool(), Some(false));
    assert_eq!(report["n_a"].as_u64(), Some(3));

    let svg = dir.path().join("plot.svg");
    assert_eq!(code(&legform(&["plot", p(&out), p(&out), "--out", p(&svg)])), 0);
    assert!(roxmltree::Document::parse(&std::fs::read_to_string(&svg).unwrap()).is_ok());
}
