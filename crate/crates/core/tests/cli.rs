use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pgrad_core::domain::{make_domain, Field};
use pgrad_core::io::{load_pgf, save_pgf};

fn pgrad(args: &[&Path], extra_env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pgrad"));
    cmd.args(args).env("PGRAD_LOG", "quiet");
    for (k, v) in extra_env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Copies a shipped config into `dir` so its outputs land there.
fn stage(dir: &Path, name: &str) -> PathBuf {
    let text = fs::read_to_string(configs_dir().join(format!("{name}.cfg"))).unwrap();
    let path = dir.join(format!("{name}.cfg"));
    fs::write(&path, text).unwrap();
    path
}

fn key_values(path: &Path) -> HashMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn number(kv: &HashMap<String, String>, key: &str) -> f64 {
    kv[key].parse().unwrap()
}

fn p(s: &str) -> &Path {
    Path::new(s)
}

#[test]
fn solve_then_diagnose_reproduces_phi() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["linear_forcing", "pseudo_huber", "cosine"] {
        let cfg = stage(tmp.path(), name);
        let out_dir = tmp.path().join("out").join(name);
        let solved = pgrad(&[p("solve"), &cfg], &[]);
        assert_eq!(code(&solved), 0, "{name}: {}", String::from_utf8_lossy(&solved.stderr));
        for file in ["field.pgf", "solve_report.txt", "residual_report.txt", "profile_axis1_comp1.dat"] {
            assert!(out_dir.join(file).exists(), "{name}: {file}");
        }
        let report = tmp.path().join(format!("{name}_diag.txt"));
        let diag = pgrad(&[p("diagnose"), &out_dir.join("field.pgf"), &cfg, p("--report"), &report], &[]);
        assert_eq!(code(&diag), 0, "{name}");
        let phi_solve = number(&key_values(&out_dir.join("solve_report.txt")), "phi_final");
        let diag = key_values(&report);
        let phi_diag = number(&diag, "phi");
        assert!((phi_solve - phi_diag).abs() <= 1e-12 * phi_solve.abs());
        for key in ["theorem2_holds", "wirtinger_holds", "residual_passes"] {
            assert_eq!(diag[key], "true", "{name}: {key}");
        }
    }
}

#[test]
fn linear_forcing_output_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = stage(tmp.path(), "linear_forcing");
    assert_eq!(code(&pgrad(&[p("solve"), &cfg], &[])), 0);
    let u = load_pgf(&tmp.path().join("out/linear_forcing/field.pgf")).unwrap();
    let exact = Field::sample(u.domain(), |t, o| o[0] = -(2.0 * PI * t[0]).cos() / (4.0 * PI * PI)).unwrap();
    assert!(u.max_abs_diff(&exact).unwrap() <= 1e-8);
    let profile = fs::read_to_string(tmp.path().join("out/linear_forcing/profile_axis1_comp1.dat")).unwrap();
    let rows: Vec<Vec<f64>> = profile
        .lines()
        .map(|l| l.split_whitespace().map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 64);
    for r in rows {
        assert!((r[1] + (2.0 * PI * r[0]).cos() / (4.0 * PI * PI)).abs() <= 1e-8);
    }
}

#[test]
fn cosine_solve_warns_and_proceeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = stage(tmp.path(), "cosine");
    let out = pgrad(&[p("solve"), &cfg], &[("PGRAD_LOG", "info")]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("coercivity"));
    let kv = key_values(&tmp.path().join("out/cosine/solve_report.txt"));
    assert_ne!(kv["coercivity_warning"], "none");
}

#[test]
fn quiet_logging_prints_nothing_on_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = stage(tmp.path(), "cosine");
    let out = pgrad(&[p("solve"), &cfg], &[]);
    assert!(out.stderr.is_empty());
}

#[test]
fn check_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, expected) in [("pseudo_huber", 0), ("cosine", 1), ("linear_forcing", 1)] {
        let cfg = stage(tmp.path(), name);
        assert_eq!(code(&pgrad(&[p("check"), &cfg], &[])), expected, "{name}");
    }
    let cfg = tmp.path().join("quadratic.cfg");
    fs::write(
        &cfg,
        "[domain]\np = 1\nn = 1\nperiods = 1\ngrid_sizes = 16\n[potential]\nname = quadratic\nclaimed_bound = 10\n",
    )
    .unwrap();
    let out = pgrad(&[p("check"), &cfg], &[]);
    assert_eq!(code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("bounded_gradient: fail"), "{stdout}");
}

#[test]
fn bad_inputs_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = stage(tmp.path(), "pseudo_huber");
    let odd = tmp.path().join("odd.cfg");
    fs::write(&odd, fs::read_to_string(&cfg).unwrap().replace("64 64", "64 63")).unwrap();
    let out = pgrad(&[p("solve"), &odd], &[]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain.grid_sizes"));
    assert_eq!(code(&pgrad(&[p("check"), &odd], &[])), 2);
    assert_eq!(code(&pgrad(&[p("solve"), &tmp.path().join("missing.cfg")], &[])), 2);

    // one NaN in an otherwise valid field file
    let d = make_domain(2, 1, &[1.0, 1.0], &[64, 64]).unwrap();
    let field = tmp.path().join("u.pgf");
    save_pgf(&Field::zeros(&d), &field).unwrap();
    let text = fs::read_to_string(&field).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[4 + 70] = "NaN";
    fs::write(&field, lines.join("\n")).unwrap();
    let out = pgrad(&[p("diagnose"), &field, &cfg], &[]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":75:") && err.contains("[1, 6]"), "{err}");

    let small = make_domain(2, 1, &[1.0, 1.0], &[8, 8]).unwrap();
    save_pgf(&Field::zeros(&small), &field).unwrap();
    assert_eq!(code(&pgrad(&[p("diagnose"), &field, &cfg], &[])), 2);
    assert_eq!(code(&pgrad(&[p("frobnicate")], &[])), 2);
}

#[test]
fn zero_field_under_zero_potential_is_all_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("zero.cfg");
    fs::write(
        &cfg,
        "[domain]\np = 2\nn = 2\nperiods = 1 3\ngrid_sizes = 8 8\n[potential]\nname = zero\n",
    )
    .unwrap();
    let d = make_domain(2, 2, &[1.0, 3.0], &[8, 8]).unwrap();
    let field = tmp.path().join("zero.pgf");
    save_pgf(&Field::zeros(&d), &field).unwrap();
    let report = tmp.path().join("diag.txt");
    assert_eq!(code(&pgrad(&[p("diagnose"), &field, &cfg, p("--report"), &report], &[])), 0);
    let kv = key_values(&report);
    for key in ["phi", "kinetic", "potential", "strong_l2", "strong_sup", "weak_max", "trace_mismatch", "periodicity"] {
        assert_eq!(number(&kv, key), 0.0, "{key}");
    }
}

#[test]
fn export_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let d = make_domain(2, 2, &[1.0, 2.0], &[4, 6]).unwrap();
    let u = Field::sample(&d, |t, o| {
        o[0] = t[0];
        o[1] = t[1];
    })
    .unwrap();
    let field = tmp.path().join("u.pgf");
    save_pgf(&u, &field).unwrap();
    let csv = tmp.path().join("u.csv");
    assert_eq!(code(&pgrad(&[p("export"), &field, p("--csv"), &csv], &[])), 0);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t1,t2,u1,u2"));
    assert_eq!(lines.count(), 24);
}
