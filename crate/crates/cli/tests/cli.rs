use stabfem_cli::output::{num, Table};
use std::path::Path;
use std::process::{Command, Output};

fn stabfem(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabfem"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

const SOLVE: [&str; 9] = ["solve", "--profile", "poiseuille", "--re", "10000", "--alpha", "1", "--elements", "48"];

#[test]
fn solve_writes_sorted_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = stabfem(&SOLVE, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read(&dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(t.header, ["rank", "c_re", "c_im", "residual"]);
    let ci = t.floats("c_im").unwrap();
    assert!(ci.len() > 3);
    assert!(ci.windows(2).all(|w| w[0] >= w[1]));
    assert!(ci[0] > 0.0);
    assert!(t.floats("residual").unwrap().iter().all(|r| *r < 1e-6));
    assert!(dir.path().join("run.json").is_file());
}

#[test]
fn outputs_are_reproducible_and_round_trip() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = SOLVE.to_vec();
    args.push("--plots");
    assert!(stabfem(&args, a.path()).status.success());
    assert!(stabfem(&args, b.path()).status.success());
    for f in ["spectrum.csv", "spectrum.svg"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let text = read(&a.path().join("spectrum.csv"));
    for line in text.lines().skip(1) {
        for field in line.split(',').skip(1) {
            assert_eq!(num(field.parse().unwrap()), field);
        }
    }
}

#[test]
fn modes_sample_401_points_with_zero_walls() {
    let dir = tempfile::tempdir().unwrap();
    let out = stabfem(&["modes", "--re", "10000", "--alpha", "1", "--elements", "48", "--modes", "2", "--plots"], dir.path());
    assert!(out.status.success());
    for k in 0..2 {
        let t = Table::read(&dir.path().join(format!("mode{k}.csv"))).unwrap();
        assert_eq!(t.header, ["y", "u_re", "u_im", "v_re", "v_im", "p_re", "p_im"]);
        assert_eq!(t.rows.len(), 401);
        for row in [&t.rows[0], &t.rows[400]] {
            for f in &row[1..5] {
                assert_eq!(f.parse::<f64>().unwrap(), 0.0);
            }
        }
        assert_eq!(t.floats("y").unwrap()[400], 2.0);
        assert!(dir.path().join(format!("mode{k}.svg")).is_file());
    }
}

#[test]
fn sweep_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = stabfem(
        &["sweep", "--re-list", "5000,8000", "--alpha-lo", "0.9", "--alpha-hi", "1.1", "--alpha-steps", "3", "--elements", "24", "--plots"],
        dir.path(),
    );
    assert!(out.status.success());
    let t = Table::read(&dir.path().join("grid.csv")).unwrap();
    assert_eq!(t.header, ["re", "alpha", "c_re", "c_im", "converged"]);
    assert_eq!(t.rows.len(), 6);
    assert_eq!(t.floats("re").unwrap(), vec![5000.0, 5000.0, 5000.0, 8000.0, 8000.0, 8000.0]);
    assert!(dir.path().join("grid.svg").is_file());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json.in");
    std::fs::write(&cfg, r#"{"command": "sweep", "re_list": [3000, 4000], "alpha_list": [1.0], "elements": 16}"#).unwrap();
    let out = stabfem(&["--config", cfg.to_str().unwrap(), "--re", "500"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read(&dir.path().join("grid.csv")).unwrap();
    assert_eq!(t.floats("re").unwrap(), vec![500.0]);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["solve", "--re", "100", "--alpha", "1"][..],
        &["solve", "--re", "100", "--alpha", "1", "--elements", "4", "--unknown"],
        &["solve", "--re", "100", "--re-list", "1,2", "--alpha", "1", "--elements", "4"],
        &["solve", "--re", "-5", "--alpha", "1", "--elements", "4"],
        &["neutral", "--re-list", "100", "--elements", "4"],
        &["solve", "--profile-file", "/nonexistent.csv", "--re", "1", "--alpha", "1", "--elements", "4"],
    ] {
        let out = stabfem(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    let help = Command::new(env!("CARGO_BIN_EXE_stabfem")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn tabulated_profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("u.csv");
    let mut text = String::from("y,U\n");
    for i in 0..=200 {
        let y = i as f64 / 100.0;
        text += &format!("{y},{}\n", y * (2.0 - y));
    }
    std::fs::write(&csv, text).unwrap();
    let out = stabfem(
        &["solve", "--profile-file", csv.to_str().unwrap(), "--re", "10000", "--alpha", "1", "--elements", "32"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_passes_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = stabfem(&["validate", "--re", "10000", "--alpha", "1", "--elements", "129"], dir.path());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));
    let t = Table::read(&dir.path().join("validate.csv")).unwrap();
    assert_eq!(t.rows[0][8], "true");

    let bad = stabfem(&["validate", "--re", "10000", "--alpha", "1", "--elements", "6"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}
