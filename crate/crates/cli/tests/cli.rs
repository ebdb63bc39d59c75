use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_trotterlab"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .expect("binary runs")
}

const LIE_320: &str = "\
# first-order scheme on a state vanishing quadratically at the origin
scheme = lie
state = hydrogen:3:2:0
ell_condition = 1
r_max = 60
T = 1
L = 2^4..2^11
grid_n = 200, 400
output = out/lie
";

#[test]
fn rates_pass_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["rates"], LIE_320);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for suffix in ["_series.csv", "_runs.csv", "_report.json", "_plot.py"] {
        assert!(dir.path().join(format!("out/lie{suffix}")).is_file(), "{suffix}");
    }
    let series = fs::read_to_string(dir.path().join("out/lie_series.csv")).unwrap();
    assert!(series.starts_with("scheme,ell,n,r_max,T,L,t,error\n"));
    assert_eq!(series.lines().count(), 1 + 2 * 8);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/lie_report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["reports"][1]["predicted_rate"], "1");
}

#[test]
fn rates_are_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a/x"), dir.path().join("b/x"));
    let a = run(dir.path(), &["rates", "--out", pa.to_str().unwrap()], LIE_320);
    let b = run(dir.path(), &["rates", "--out", pb.to_str().unwrap(), "--jobs", "2"], LIE_320);
    assert!(a.status.success() && b.status.success());
    for f in ["x_series.csv", "x_runs.csv"] {
        let fa = fs::read(dir.path().join("a").join(f)).unwrap();
        let fb = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(fa, fb, "{f}");
    }
}

#[test]
fn failed_assessment_is_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = LIE_320.replace("ell_condition = 1", "ell_condition = 1\npredicted = 2");
    let out = run(dir.path(), &["rates"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    // Artifacts are still written for inspection.
    assert!(dir.path().join("out/lie_report.json").is_file());
}

#[test]
fn config_errors_exit_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["rates"], "scheme = lie\n\nspeed = 3\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.cfg:3:"));

    let bad_grid = LIE_320.replace("grid_n = 200, 400", "grid_n = 400, 200");
    let out = run(dir.path(), &["rates"], &bad_grid);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.cfg:8:"));

    let missing = LIE_320.replace("hydrogen:3:2:0", "nowhere.csv");
    assert_eq!(run(dir.path(), &["rates"], &missing).status.code(), Some(2));
}

#[test]
fn superposition_file_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("ell,m,r,re_u,im_u\n");
    let n = 300;
    let h = 60.0 / n as f64;
    for j in 0..n {
        let r = (j as f64 + 0.5) * h;
        let u = r * r * r * (-r / 3.0).exp();
        csv.push_str(&format!("2,0,{r},{u},0\n2,1,{r},0,{}\n", 0.5 * u));
    }
    fs::write(dir.path().join("mix.csv"), csv).unwrap();
    let cfg = LIE_320.replace("hydrogen:3:2:0", "mix.csv");
    let out = run(dir.path(), &["rates"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["oracle"], "dim = 5\nseed = 11\nt = 0.5\noutput = o\n");
    assert_eq!(out.status.code(), Some(0));
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o_oracle.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 4);

    let out = run(dir.path(), &["constants"], "particles = 1, 2\noutput = k\n");
    assert_eq!(out.status.code(), Some(0));
    let k: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("k_constants.json")).unwrap()).unwrap();
    assert_eq!(k["particles"][0]["c_n"], 16.0);

    let out = run(dir.path(), &["oracle"], "check = sideways\n");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn state_check_and_hardy() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["check-state"],
        "state = hydrogen:3:2:0\nell_condition = 1\ngrid_n = 400\nr_max = 60\noutput = s\n",
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s_check_state.json")).unwrap()).unwrap();
    assert_eq!(v["results"][0]["check"]["verdict"], true);

    let out = run(dir.path(), &["hardy"], "grid_n = 100, 200\nr_max = 40\n");
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 2);
}
