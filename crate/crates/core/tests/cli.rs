use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn wloss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wloss"))
        .args(args)
        .output()
        .expect("run wloss")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn toy_csv(dir: &Path) -> PathBuf {
    let mut text = String::new();
    for i in 0..12 {
        let v = i as f64 / 4.0;
        let label = if i < 6 { "neg" } else { "pos" };
        text.push_str(&format!("{v},{},{label}\n", (v * 1.7).sin()));
    }
    write(dir, "toy.csv", &text)
}

#[test]
fn prep_reports_removed_samples() {
    let dir = TempDir::new().unwrap();
    let data = write(
        dir.path(),
        "fixture.csv",
        "1,2,1\n1,2,1\n3,4,1\n3,4,-1\n5,6,-1\n",
    );
    let out_csv = dir.path().join("clean.csv");
    let o = wloss(&[
        "prep",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("removed_duplicates=1"), "{text}");
    assert!(text.contains("removed_inconsistent=2"), "{text}");
    assert_eq!(fs::read_to_string(out_csv).unwrap().lines().count(), 2);
}

#[test]
fn grid_report_has_one_row_per_point() {
    let dir = TempDir::new().unwrap();
    let data = toy_csv(dir.path());
    let report = dir.path().join("report.tsv");
    let o = wloss(&[
        "grid",
        "--data",
        data.to_str().unwrap(),
        "--schemes",
        "none,5",
        "--c-values",
        "1,10",
        "--gamma-k-values",
        "1",
        "--gamma-s-values",
        "0.1,1,10",
        "--folds",
        "3",
        "--early-stop",
        "--jobs",
        "1",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&report).unwrap();
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("rank"))
        .count();
    assert_eq!(rows, 2 + 2 * 3);
    assert!(text.contains("# positive_label\t1"));
    assert!(stdout(&o).contains("seeds=Seeds"));
}

#[test]
fn train_then_predict() {
    let dir = TempDir::new().unwrap();
    let data = toy_csv(dir.path());
    let model = dir.path().join("model.txt");
    let weights = dir.path().join("w.txt");
    let o = wloss(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--scheme",
        "inv",
        "--gamma-s",
        "1",
        "--c",
        "10",
        "--model",
        model.to_str().unwrap(),
        "--weights-out",
        weights.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&weights).unwrap().lines().count(), 12);
    let o = wloss(&[
        "predict",
        "--data",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let preds: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(preds.len(), 12);
    assert!(text.contains("# f1="));
}

#[test]
fn cv_prints_folds_and_mean() {
    let dir = TempDir::new().unwrap();
    let data = toy_csv(dir.path());
    let o = wloss(&[
        "cv",
        "--data",
        data.to_str().unwrap(),
        "--folds",
        "3",
        "--early-stop",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("fold ")).count(), 3);
    assert!(text.contains("mean_f1="));
}

#[test]
fn selftest_passes() {
    let o = wloss(&["selftest", "--instances", "20"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("max_objective_gap="));
}

#[test]
fn mlp_runs_on_regression_data() {
    let dir = TempDir::new().unwrap();
    let mut text = String::new();
    for i in 0..40 {
        let a = i as f64 / 10.0;
        let b = (i % 7) as f64;
        text.push_str(&format!("{a},{b},{}\n", 2.0 * a - 0.3 * b));
    }
    let data = write(dir.path(), "reg.csv", &text);
    let o = wloss(&[
        "mlp",
        "--data",
        data.to_str().unwrap(),
        "--arch",
        "4,1",
        "--epochs",
        "5",
        "--gamma-s-values",
        "0.1,1",
        "--seeds",
        "1,2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("seed\tstandard_mae\tbest_gamma_s\tbest_weighted_mae"));
    assert_eq!(
        out.lines()
            .filter(|l| l.starts_with("1\t") || l.starts_with("2\t"))
            .count(),
        2
    );
}

#[test]
fn user_errors_are_one_line() {
    let o = wloss(&["prep", "--data", "/nonexistent/file.csv"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"));

    let dir = TempDir::new().unwrap();
    let data = toy_csv(dir.path());
    // gamma_s without a density scheme
    let o = wloss(&[
        "grid",
        "--data",
        data.to_str().unwrap(),
        "--schemes",
        "none",
        "--gamma-s-values",
        "1",
    ]);
    assert!(!o.status.success());
    assert_eq!(stderr(&o).trim().lines().count(), 1);

    let o = wloss(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--scheme",
        "3",
        "--model",
        "m",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("gamma-s"));

    let o = wloss(&["grid", "--no-such-flag"]);
    assert!(!o.status.success());
}
