use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"schema = "gsqmc-config/1"
kind = "table"

[model]
x = 1.2
delta = 0.05
penalty = { kind = "constant_one" }
premium = { c_tilde = 2.0, a = 3.0, epsilon = 0.001 }
interarrival = { kind = "exponential", rate = 1.0 }
claim = { kind = "exponential", rate = 0.8 }

[run]
n_levels = [1, 3]
n_points = [100, 300]
generators = ["mc", "sobol", "halton"]
seeds = [4]
"#;

const HEADER: &str = "generator,N,k_levels,x,lambda,mu,delta,penalty,estimate,stderr,ci_lo,ci_hi,reference,abs_error,seconds";

fn gsqmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsqmc"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn validate_accepts_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let out = gsqmc(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("12 rows"));
}

#[test]
fn empty_point_list_is_a_config_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("n_points = [100, 300]", "n_points = []");
    let cfg = write_config(dir.path(), "c.toml", &text);
    for cmd in ["validate", "run"] {
        let out = gsqmc(&[cmd, &cfg]);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("c.toml:14:"), "{err}");
    }
    assert_eq!(entries(dir.path()), vec!["c.toml"]);
}

#[test]
fn run_writes_csv_with_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let csv = dir.path().join("out.csv");
    let out = gsqmc(&["run", &cfg, "--output", csv.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with(HEADER));
    assert_eq!(lines.count(), 12);
    assert_eq!(entries(dir.path()), vec!["c.toml", "out.csv"]);
}

#[test]
fn qmc_rows_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let run = |threads: &str| {
        let out = gsqmc(&["run", &cfg, "--threads", threads, "--format", "json"]);
        assert_eq!(out.status.code(), Some(0));
        let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        rows.as_array()
            .unwrap()
            .iter()
            .map(|r| r["estimate"].as_f64().unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn json_output_carries_schema_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let out = gsqmc(&["run", &cfg, "--format", "json", "--seed-override", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r["schema"] == "gsqmc-output/1"));
    let mc = rows.iter().find(|r| r["generator"] == "mc").unwrap();
    assert_eq!(mc["seed"], 9);
    assert!(mc["stderr"].as_f64().unwrap() > 0.0);
    assert_eq!(mc["reference"].as_f64().unwrap(), 0.7577);
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let target = dir.path().join("missing").join("out.csv");
    let out = gsqmc(&["run", &cfg, "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(entries(dir.path()), vec!["c.toml"]);
}

#[test]
fn missing_config_is_a_config_error() {
    let out = gsqmc(&["validate", "/nonexistent/gsqmc.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = gsqmc(&["validate", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
    }
}
