use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use coulomb_nls::config::parse_config;
use coulomb_nls::runner::{scenario, SCENARIOS};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coulomb-nls"));
    cmd.env_remove("COULOMB_NLS_OUT");
    cmd
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL_RUN: &str = r#"
[physics]
K = 0.0
lambda = 0
p = 3.0

[grid]
rmax = 20.0
n = 256

[time]
dt = 0.01
tmax = 0.2

[initial]
kind = "gaussian"
amplitude = 1.0
width = 1.0
"#;

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&bin().output().unwrap()), 1);
    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 1);
    assert_eq!(code(&bin().args(["groundstate", "--kind", "X", "--p", "3"]).output().unwrap()), 1);
    assert_eq!(code(&bin().args(["--help"]).output().unwrap()), 0);
}

#[test]
fn bad_configs_exit_1_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, SMALL_RUN.replace("lambda = 0", "lambda = 2")).unwrap();
    let out = bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("physics.lambda"), "{}", stderr(&out));

    fs::write(&bad, SMALL_RUN.replace("rmax", "r_max")).unwrap();
    let out = bin().arg("classify").arg(&bad).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("grid.r_max"), "{}", stderr(&out));

    let out = bin().args(["run", "/definitely/not/here.toml"]).output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn run_writes_artifacts_under_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL_RUN).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin().env("COULOMB_NLS_OUT", &out_dir).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["series.csv", "final_field.csv", "summary.json"] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["steps"], 20);
    assert!(summary["drifts"]["mass"].as_f64().unwrap() < 1e-12);
    let series = fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert!(series.starts_with("t,M,E,E0,h1,hhalf,y,yprime,ysecond_rhs,A,rate_lb,l4,sup,dt\n"));
    assert_eq!(series.lines().count(), 22);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL_RUN).unwrap();
    let read = |sub: &str| {
        let d = dir.path().join(sub);
        let out = bin().env("COULOMB_NLS_OUT", &d).arg("run").arg(&cfg).output().unwrap();
        assert_eq!(code(&out), 0);
        (
            fs::read(d.join("series.csv")).unwrap(),
            fs::read(d.join("final_field.csv")).unwrap(),
        )
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn several_configs_get_their_own_directories() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("one.toml");
    let b = dir.path().join("two.toml");
    fs::write(&a, SMALL_RUN).unwrap();
    fs::write(&b, SMALL_RUN.replace("amplitude = 1.0", "amplitude = 2.0")).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .env("COULOMB_NLS_OUT", &out_dir)
        .args(["run", "--jobs", "2"])
        .arg(&a)
        .arg(&b)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out_dir.join("one/summary.json").is_file());
    assert!(out_dir.join("two/summary.json").is_file());
}

#[test]
fn numerical_failures_exit_2() {
    // No soliton exists for K = 1.
    let out = bin().args(["groundstate", "--kind", "f", "--p", "3", "--K", "1", "--n", "512"]).output().unwrap();
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("soliton.toml");
    let text = SMALL_RUN
        .replace("K = 0.0", "K = 1.0")
        .replace("lambda = 0", "lambda = 1")
        .replace("kind = \"gaussian\"\namplitude = 1.0\nwidth = 1.0", "kind = \"soliton\"");
    fs::write(&cfg, text).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin().env("COULOMB_NLS_OUT", &out_dir).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let summary = fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"error\""));
}

#[test]
fn groundstate_reports_constants() {
    let out = bin().args(["groundstate", "--kind", "Q", "--p", "3", "--n", "1024"]).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let c = &v["constants"];
    let ratio = c["e0_q"].as_f64().unwrap() / c["mass_q"].as_f64().unwrap();
    assert!((ratio - 0.5).abs() < 1e-5, "{ratio}");

    let out = bin().args(["groundstate", "--kind", "W", "--p", "5"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let out = bin().args(["groundstate", "--kind", "W", "--p", "3"]).output().unwrap();
    assert_eq!(code(&out), 1);
    let out = bin().args(["groundstate", "--kind", "f", "--p", "3"]).output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn classify_prints_regime() {
    let out = bin().args(["classify", "mass_critical_near_MQ"]).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["regime"], "mass_critical_below_MQ");
    assert!(v["witnesses"]["mass"].as_f64().unwrap() < v["witnesses"]["mass_Q"].as_f64().unwrap());
}

#[test]
fn selftest_catches_injected_sign_flip() {
    let out = bin().args(["selftest", "--inject-coulomb-sign-flip"]).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("FAIL energy_conservation"), "{}", stdout(&out));
}

#[test]
fn shipped_scenarios_match_catalog() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in SCENARIOS {
        let text = fs::read_to_string(dir.join(format!("{name}.toml"))).unwrap();
        assert_eq!(parse_config(&text).unwrap(), scenario(name).unwrap(), "{name}");
    }
    assert_eq!(fs::read_dir(&dir).unwrap().count(), SCENARIOS.len());
}
