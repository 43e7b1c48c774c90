//! End-to-end checks of the `ealm` binary: exit codes, printed metrics,
//! file outputs, and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ealm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ealm"))
        .current_dir(dir)
        .env_remove("EALM_OUT_DIR")
        .args(args)
        .output()
        .expect("failed to launch binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn exit_code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

/// Extracts the value following `key: ` from a command's stdout.
fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("missing `{key}` in output:\n{out}"))
        .to_string()
}

fn write_diag_csv(path: &Path) {
    let rows: String = (0..40).map(|k| format!("{0},{0}\n", k as f64 * 0.1)).collect();
    fs::write(path, rows).unwrap();
}

/// The two-input curve x1 = sin t, x2 = cos t, y = sin t + cos t sampled
/// densely over t in [0, 10*pi].
fn write_sincos_csv(path: &Path, n: usize) {
    let mut rows = String::new();
    for k in 0..n {
        let t = 10.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
        rows.push_str(&format!("{},{},{}\n", t.sin(), t.cos(), t.sin() + t.cos()));
    }
    fs::write(path, rows).unwrap();
}

#[test]
fn help_covers_every_command_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let top = ealm(dir.path(), &["--help"]);
    assert_eq!(exit_code(&top), 0);
    for cmd in ["train", "eval", "bench", "export-plane", "structure-report"] {
        assert!(stdout(&top).contains(cmd), "top-level help misses {cmd}");
        let o = ealm(dir.path(), &[cmd, "--help"]);
        assert_eq!(exit_code(&o), 0, "{cmd} --help failed");
    }
    // the shared fitting flags all appear in train's help
    let o = stdout(&ealm(dir.path(), &["train", "--help"]));
    for flag in [
        "--grid-size",
        "--ids-radius",
        "--thicken-passes",
        "--spur-length",
        "--truth-threshold",
        "--error-threshold",
        "--max-depth",
        "--seed",
        "--dump-planes",
    ] {
        assert!(o.contains(flag), "train help misses {flag}");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ealm(dir.path(), &["bench", "--no-such-flag"]);
    assert_eq!(exit_code(&o), 1);
}

#[test]
fn train_on_diagonal_reports_one_rule() {
    let dir = tempfile::tempdir().unwrap();
    write_diag_csv(&dir.path().join("diag.csv"));
    let o = ealm(
        dir.path(),
        &["train", "--method", "alm", "--data", "diag.csv"],
    );
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "rules"), "1");
    assert!(dir.path().join("model.json").is_file());
}

#[test]
fn train_rejects_single_row_dataset() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("one.csv"), "1,1\n").unwrap();
    let o = ealm(
        dir.path(),
        &["train", "--method", "alm", "--data", "one.csv"],
    );
    assert_eq!(exit_code(&o), 2);
    assert!(stderr(&o).contains("empty dataset"));
}

#[test]
fn train_reports_malformed_csv_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "1,2\n3,oops\n").unwrap();
    let o = ealm(
        dir.path(),
        &["train", "--method", "alm", "--data", "bad.csv"],
    );
    assert_eq!(exit_code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn train_on_two_branch_curve_stores_a_horizontal_split() {
    let dir = tempfile::tempdir().unwrap();
    write_sincos_csv(&dir.path().join("sincos.csv"), 2400);
    let o = ealm(
        dir.path(),
        &[
            "train",
            "--method",
            "ealm",
            "--data",
            "sincos.csv",
            "--grid-size",
            "61",
            "--model",
            "curve.json",
        ],
    );
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    let json = fs::read_to_string(dir.path().join("curve.json")).unwrap();
    assert!(json.contains("YSplit"), "expected a horizontal split");
}

#[test]
fn eval_reproduces_training_error() {
    let dir = tempfile::tempdir().unwrap();
    write_diag_csv(&dir.path().join("diag.csv"));
    let t = ealm(
        dir.path(),
        &["train", "--method", "ealm", "--data", "diag.csv"],
    );
    assert_eq!(exit_code(&t), 0, "{}", stderr(&t));
    let train_mse: f64 = field(&stdout(&t), "train_mse").parse().unwrap();

    let e = ealm(
        dir.path(),
        &[
            "eval",
            "--model",
            "model.json",
            "--data",
            "diag.csv",
            "--predictions",
            "preds.csv",
        ],
    );
    assert_eq!(exit_code(&e), 0, "{}", stderr(&e));
    let eval_mse: f64 = field(&stdout(&e), "mse").parse().unwrap();
    assert!((train_mse - eval_mse).abs() <= 1e-12);

    let preds = fs::read_to_string(dir.path().join("preds.csv")).unwrap();
    assert!(preds.starts_with("x1,actual,predicted"));
    assert_eq!(preds.lines().count(), 41); // header + one line per point
}

#[test]
fn eval_rejects_arity_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    write_diag_csv(&dir.path().join("diag.csv"));
    let t = ealm(
        dir.path(),
        &["train", "--method", "alm", "--data", "diag.csv"],
    );
    assert_eq!(exit_code(&t), 0, "{}", stderr(&t));
    // two-input dataset against the one-input model
    fs::write(dir.path().join("wide.csv"), "0,0,0\n1,1,1\n").unwrap();
    let e = ealm(
        dir.path(),
        &["eval", "--model", "model.json", "--data", "wide.csv"],
    );
    assert_eq!(exit_code(&e), 2);
}

#[test]
fn bench_emits_a_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let o = ealm(
        dir.path(),
        &[
            "bench",
            "--generator",
            "sinc2d",
            "--train",
            "80",
            "--test",
            "100",
            "--grid-size",
            "24",
        ],
    );
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3); // header + alm + ealm
    assert!(lines[0].starts_with("generator,method,seed"));
    assert!(lines[1].contains(",alm,"));
    assert!(lines[2].contains(",ealm,"));
    // both mse fields parse as finite numbers
    for line in &lines[1..] {
        let mse: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!(mse.is_finite());
    }
    // the human-readable table names both methods
    let text = stdout(&o);
    assert!(text.contains("alm") && text.contains("ealm"));
}

#[test]
fn bench_with_fixed_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |csv: &'static str| {
        vec![
            "bench",
            "--generator",
            "circle",
            "--train",
            "120",
            "--test",
            "100",
            "--grid-size",
            "24",
            "--seed",
            "7",
            "--csv",
            csv,
        ]
    };
    let a = ealm(dir.path(), &args("a.csv"));
    let b = ealm(dir.path(), &args("b.csv"));
    assert_eq!(exit_code(&a), 0, "{}", stderr(&a));
    assert_eq!(exit_code(&b), 0, "{}", stderr(&b));
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn bench_rejects_empty_split_and_unknown_generator() {
    let dir = tempfile::tempdir().unwrap();
    let o = ealm(
        dir.path(),
        &["bench", "--generator", "sinc2d", "--train", "0"],
    );
    assert_eq!(exit_code(&o), 1);

    let o = ealm(dir.path(), &["bench", "--generator", "frobnicate"]);
    assert_eq!(exit_code(&o), 1);
    let err = stderr(&o);
    for name in ["sinc2d", "parabolic-sine", "circle", "sin-circle"] {
        assert!(err.contains(name), "error should list `{name}`: {err}");
    }
}

#[test]
fn out_dir_env_redirects_relative_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write_diag_csv(&dir.path().join("diag.csv"));
    let o = Command::new(env!("CARGO_BIN_EXE_ealm"))
        .current_dir(dir.path())
        .env("EALM_OUT_DIR", out.path())
        .args(["train", "--method", "alm", "--data", "diag.csv"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    assert!(out.path().join("model.json").is_file());
    assert!(!dir.path().join("model.json").exists());
}

#[test]
fn dump_planes_writes_stage_files() {
    let dir = tempfile::tempdir().unwrap();
    write_diag_csv(&dir.path().join("diag.csv"));
    let o = ealm(
        dir.path(),
        &[
            "train",
            "--method",
            "ealm",
            "--data",
            "diag.csv",
            "--dump-planes",
            "--grid-size",
            "24",
        ],
    );
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    for f in [
        "plane_x0_raw.pgm",
        "plane_x0_thickened.pgm",
        "plane_x0_skeleton.pgm",
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
}

#[test]
fn export_plane_writes_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    write_sincos_csv(&dir.path().join("sincos.csv"), 400);
    let o = ealm(
        dir.path(),
        &[
            "export-plane",
            "--data",
            "sincos.csv",
            "--input",
            "1",
            "--out-dir",
            "stages",
            "--grid-size",
            "32",
        ],
    );
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    for f in [
        "plane_x1_raw.pgm",
        "plane_x1_spread.pgm",
        "plane_x1_path.csv",
        "plane_x1_thickened.pgm",
        "plane_x1_skeleton.pgm",
    ] {
        assert!(dir.path().join("stages").join(f).is_file(), "missing {f}");
    }
    // out-of-range input index is a usage error
    let bad = ealm(
        dir.path(),
        &["export-plane", "--data", "sincos.csv", "--input", "5"],
    );
    assert_eq!(exit_code(&bad), 1);
}

#[test]
fn structure_report_writes_pgms_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = ealm(
        dir.path(),
        &[
            "structure-report",
            "--generator",
            "circle",
            "--train",
            "800",
            "--grid-size",
            "32",
            "--out-dir",
            "report",
        ],
    );
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    for f in ["raw_plane.pgm", "cog_path.pgm", "skeleton.pgm"] {
        assert!(dir.path().join("report").join(f).is_file(), "missing {f}");
    }
    let cols: usize = field(&stdout(&o), "columns").parse().unwrap();
    assert_eq!(cols, 32);
}
