use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn twfilm(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_twfilm"));
    c.current_dir(dir).args(args).env_remove("TW_FAULT").env_remove("TW_THREADS");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn read_csv(p: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect()).collect();
    (header, rows)
}

fn interp(rows: &[Vec<f64>], h: f64) -> f64 {
    let i = rows.partition_point(|r| r[0] < h).clamp(1, rows.len() - 1);
    let (a, b) = (&rows[i - 1], &rows[i]);
    a[1] + (b[1] - a[1]) * (h - a[0]) / (b[0] - a[0])
}

#[test]
fn solve_matches_the_boundary_value_solver() {
    let dir = tempfile::tempdir().unwrap();
    let o = twfilm(dir.path(), &["solve", "--n", "2", "--k", "1", "--hmax", "1e6", "--out", "prof.csv"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, prof) = read_csv(&dir.path().join("prof.csv"));
    assert_eq!(header, "H,psi,dpsi");
    let s = read_json(&dir.path().join("prof.json"));
    assert!((s["b_cg"].as_f64().unwrap() - 0.2818026609).abs() < 1e-8);
    assert_eq!(s["classification"], "Converged");
    assert_eq!(s["config"]["hmax"], 1e6);

    let o = twfilm(dir.path(), &["bvp", "--n", "2", "--k", "1", "--eps", "1e-3", "--grid", "4096", "--out", "bvp.csv"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, grid) = read_csv(&dir.path().join("bvp.csv"));
    assert_eq!(header, "H,psi");
    // truncating at 1/eps costs a few parts per thousand in the interior
    for r in grid.iter().filter(|r| r[0] >= 0.1 && r[0] <= 10.0) {
        let rel = (r[1] - interp(&prof, r[0])).abs() / r[1];
        assert!(rel < 5e-3, "H = {}: {rel}", r[0]);
    }
}

#[test]
fn series_residual_check_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = twfilm(dir.path(), &["series", "--n", "1.5", "--k", "1", "--degree", "10", "--check-residual", "--out", "g.csv"], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("all zero"));
    let s = read_json(&dir.path().join("g.json"));
    assert_eq!(s["g_rational_zero"], true);
    assert_eq!(s["w_rational_zero"], true);
    assert!(std::fs::read_to_string(dir.path().join("g.csv")).unwrap().starts_with("j,l,value\n"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = twfilm(dir.path(), &["solve", "--n", "3", "--k", "1"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 < n < 3"));

    let o = twfilm(dir.path(), &["solve", "--hmax", "fast"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--hmax"));

    std::fs::write(dir.path().join("bad.cfg"), "n = 2\nspeed = 4\n").unwrap();
    let o = twfilm(dir.path(), &["solve", "--config", "bad.cfg"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("speed"));

    let o = twfilm(dir.path(), &["verify", "--only", "everything"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("prof.csv").exists());
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = twfilm(dir.path(), &["bvp", "--n", "2", "--grid", "256", "--max-iter", "2", "--out", "b.csv"], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("b.csv").exists());
}

#[test]
fn effective_config_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "command = solve\nn = 1.5\nk = 0.8\nhmax = 1e5\n").unwrap();
    let o = twfilm(dir.path(), &["solve", "--config", "run.cfg", "--rtol", "1e-11", "--out", "a.csv"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = read_json(&dir.path().join("a.json"))["config"].clone();
    assert_eq!(cfg["rtol"], 1e-11);
    std::fs::write(dir.path().join("eff.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = twfilm(dir.path(), &["solve", "--config", "eff.json", "--out", "b.csv"], &[]);
    assert!(o.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    let o = twfilm(dir.path(), &["bvp", "--config", "eff.json"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["sweep", "--n", "2", "--k-min", "0.8", "--k-max", "1.2", "--points", "5", "--hmax", "1e5", "--out", out];
    let o = twfilm(dir.path(), &args("one.csv"), &[("TW_THREADS", "1")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = twfilm(dir.path(), &args("four.csv"), &[("TW_THREADS", "4")]);
    assert!(o.status.success());
    let a = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(dir.path().join("four.csv")).unwrap());
    assert!(a.starts_with("k,b_cg,B_cg,dB_dk\n"));
    assert_eq!(a.lines().count(), 6);
}

#[test]
fn match_writes_result_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = twfilm(dir.path(), &["match", "--n", "2", "--hmax", "1e5", "--format", "json", "--out", "m.json", "--plot-out", "x.csv"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&dir.path().join("m.json"));
    assert!((m["ln_b"].as_f64().unwrap() - 2.2509).abs() < 1e-3);
    let s = read_json(&dir.path().join("m.summary.json"));
    assert_eq!(s["config"]["command"], "match");
    assert!(std::fs::read_to_string(dir.path().join("x.csv")).unwrap().starts_with("x,dHdx_cubed,ln_x\n"));
}

#[test]
fn verify_subset_and_fault_hook() {
    let dir = tempfile::tempdir().unwrap();
    let o = twfilm(dir.path(), &["verify", "--only", "dynsys", "--out", "ok.json"], &[]);
    assert!(o.status.success());
    let r = read_json(&dir.path().join("ok.json"));
    assert_eq!(r["criteria"].as_array().unwrap().len(), 2);
    assert_eq!(r["failed"], 0);

    let o = twfilm(dir.path(), &["verify", "--only", "dynsys", "--out", "bad.json"], &[("TW_FAULT", "1")]);
    assert!(o.status.success());
    let r = read_json(&dir.path().join("bad.json"));
    assert_eq!(r["fault"], true);
    assert_eq!(r["failed"], 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL]"));
}
