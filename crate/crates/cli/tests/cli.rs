use std::path::Path;
use std::process::{Command, Output};

fn rkf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rkf")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_alpha_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rkf(&["scale-sweep", "--eta-grid", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--alpha"));
    assert!(!dir.path().join("scale_sweep.csv").exists());
}

#[test]
fn inapplicable_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--method", "is", "--l", "4"],
        vec!["--method", "glq", "--n", "10"],
        vec!["--method", "gs", "--n", "10"],
        vec!["--method", "glq", "--l", "0"],
    ] {
        let mut full = vec!["scale-sweep", "--alpha", "1", "--out", s(dir.path())];
        full.extend(args.iter());
        let out = rkf(&full);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr(&out).contains("Usage"), "{args:?}");
    }
    assert!(!dir.path().join("scale_sweep.csv").exists());
}

#[test]
fn glq_row_matches_inverse_gamma_posterior() {
    // at alpha = 1 the mixing law is Levy(0, 1/2), so the posterior of y is
    // inverse-Gamma(3/2, eta/2 + 1/4) when m = 2
    let dir = tempfile::tempdir().unwrap();
    let out = rkf(&[
        "scale-sweep", "--alpha", "1.0", "--eta-grid", "10", "--m", "2", "--method", "glq", "--l", "30", "--out",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("scale_sweep.csv")).unwrap();
    assert!(text.starts_with("alpha,eta,m,method,n_or_l,value,method_used,gs_terms,wall_ns,status\r\n"));
    let rows = read_csv(&dir.path().join("scale_sweep.csv"));
    assert_eq!(rows.len(), 1);
    let value: f64 = rows[0][5].parse().unwrap();
    let exact = 1.5 / (10.0 / 2.0 + 0.25);
    assert!((value / exact - 1.0).abs() < 1e-3, "{value} vs {exact}");
    assert_eq!(&rows[0][4], "30");
    assert_eq!(&rows[0][6], "glq");
    assert_eq!(&rows[0][8], "");
    assert_eq!(&rows[0][9], "0");
}

#[test]
fn gsis_falls_back_to_is_as_eta_shrinks() {
    let dir = tempfile::tempdir().unwrap();
    let out = rkf(&[
        "scale-sweep", "--alpha", "1.85", "--eta-grid", "1000,100,30,10,3,1,0.1,0.01", "--method", "gsis", "--out",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let used: Vec<String> = read_csv(&dir.path().join("scale_sweep.csv")).iter().map(|r| r[6].to_string()).collect();
    assert_eq!(used.first().map(String::as_str), Some("gs"));
    assert_eq!(used.last().map(String::as_str), Some("is"));
    let switch = used.iter().position(|u| u == "is").unwrap();
    assert!(used[switch..].iter().all(|u| u == "is"), "{used:?}");
}

#[test]
fn diverged_gs_leaves_value_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = rkf(&["scale-sweep", "--alpha", "1.85", "--eta-grid", "0.01,0", "--method", "gs", "--out", s(dir.path())]);
    assert!(out.status.success());
    for row in read_csv(&dir.path().join("scale_sweep.csv")) {
        assert_eq!(&row[5], "");
        assert_ne!(&row[9], "0");
    }
}

#[test]
fn scale_sweep_is_reproducible_and_timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, timing: bool| {
        let out_dir = dir.path().join(sub);
        let mut args = vec!["scale-sweep", "--alpha", "0.5,1.5", "--method", "is", "--n", "500", "--seed", "7", "--out", s(&out_dir)];
        if timing {
            args.push("--timing");
        }
        assert!(rkf(&args).status.success());
        std::fs::read_to_string(out_dir.join("scale_sweep.csv")).unwrap()
    };
    let (a, b) = (run("a", false), run("b", false));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 9);
    let timed = read_csv(&dir.path().join("b").join("scale_sweep.csv"));
    assert!(timed.iter().all(|r| r[8].is_empty()));
    run("c", true);
    let timed = read_csv(&dir.path().join("c").join("scale_sweep.csv"));
    assert!(timed.iter().all(|r| r[8].parse::<u128>().is_ok()));
}

#[test]
fn stable_check_exit_codes() {
    let ok = rkf(&["stable-check", "--alpha", "1", "--samples", "5000"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("laplace s=0.5") && stdout.contains("ks n=5000"));

    let degenerate = rkf(&["stable-check", "--alpha", "2"]);
    assert_eq!(degenerate.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&degenerate.stdout).contains("point mass"));

    let bad = rkf(&["stable-check", "--alpha", "2.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("alpha"));
}

#[test]
fn version_prints_crate_version() {
    let out = rkf(&["version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("exp.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn unknown_filter_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"scenario": {"noise": {"family": "sgas", "alpha": 0.5}, "filters": [{"kind": "ukf"}]}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = rkf(&["track", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for name in ["ukf", "kf", "kftncm", "rkf-sgas-gsis", "rkf-sgas-gsgl", "rstkf", "rkf-sl", "rkf-vg"] {
        assert!(err.contains(name), "{err}");
    }
    assert!(!out_dir.exists());
}

#[test]
fn malformed_config_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"scenario\": {\n    \"noise\": {\"family\": \"sgas\", \"alpha\": 0.5},\n    \"filters\": [,]\n  }\n}\n");
    let out = rkf(&["track", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exp.json:4:"), "{}", stderr(&out));
}

#[test]
fn invalid_scenarios_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"scenario": {"noise": {"family": "sgas", "alpha": 0.5}, "filters": [{"kind": "kf"}]}, "sweep": [0.5, 3.0]}"#,
    );
    let out = rkf(&["track", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = rkf(&["track", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gm-sweep"));
    let out = Command::new(env!("CARGO_BIN_EXE_rkf"))
        .args(["track", "--preset", "gaussian", "--out", s(&dir.path().join("t"))])
        .env("RKF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gaussian_preset_filters_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = rkf(&["track", "--preset", "gaussian", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(&dir.path().join("summary.csv"));
    assert_eq!(rows.len(), 9);
    let rmse: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let (lo, hi) = rmse.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    assert!(hi <= 1.05 * lo, "{rmse:?}");
    assert!(rows.iter().all(|r| r[5].is_empty() && &r[7] == "true"));
    assert!(dir.path().join("rmse_position.svg").exists());
    assert_eq!(read_csv(&dir.path().join("rmse_time.csv")).len(), 9 * 100);
}

#[test]
fn plots_do_not_change_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"scenario": {"steps": 30, "mc_runs": 3, "noise": {"family": "student-t", "v": 1.5},
            "filters": [{"kind": "kf"}, {"kind": "rstkf"}, {"kind": "rkf-sgas-gsgl"}]}, "sweep": [1.5, 3]}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(rkf(&["track", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(rkf(&["track", "--config", s(&cfg), "--out", s(&b), "--no-plots", "--seed", "0"]).status.success());
    for f in ["rmse_time.csv", "summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("sweep_pos_rmse.svg").exists() && a.join("sweep_fallback.svg").exists());
    assert!(!b.join("sweep_pos_rmse.svg").exists());
    let summary = read_csv(&a.join("summary.csv"));
    assert_eq!(summary.len(), 6);
    assert_eq!(&summary[4][1], "3");
    let labels: Vec<String> = read_csv(&a.join("rmse_time.csv")).iter().map(|r| r[1].to_string()).collect();
    assert!(labels.iter().any(|l| l == "rstkf@1.5") && labels.iter().any(|l| l == "rstkf@3"));

    let seeded = dir.path().join("c");
    assert!(rkf(&["track", "--config", s(&cfg), "--out", s(&seeded), "--no-plots", "--seed", "1"]).status.success());
    assert_ne!(std::fs::read(a.join("summary.csv")).unwrap(), std::fs::read(seeded.join("summary.csv")).unwrap());
}

#[test]
fn paper_scale_sets_steps_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"scenario": {"noise": {"family": "gaussian-mixture", "u": 100}, "filters": [{"kind": "kf"}, {"kind": "kftncm"}]}}"#,
    );
    let out = rkf(&["track", "--config", s(&cfg), "--out", s(dir.path()), "--paper-scale", "--no-plots"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("100 runs x 300 steps"));
    let rows = read_csv(&dir.path().join("rmse_time.csv"));
    assert_eq!(rows.len(), 2 * 300);
    assert_eq!(&rows[299][0], "300");
}

#[test]
fn kftncm_without_covariance_is_not_applicable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"scenario": {"steps": 20, "mc_runs": 2, "noise": {"family": "sgas", "alpha": 1.2},
            "filters": [{"kind": "kftncm"}, {"kind": "kf"}]}}"#,
    );
    assert!(rkf(&["track", "--config", s(&cfg), "--out", s(dir.path())]).status.success());
    let rows = read_csv(&dir.path().join("summary.csv"));
    assert_eq!(&rows[0][7], "n/a");
    assert_eq!(&rows[0][2], "");
    assert_ne!(&rows[1][7], "n/a");
}
