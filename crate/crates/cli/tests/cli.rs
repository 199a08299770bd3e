use std::path::Path;
use std::process::{Command, Output};

use tpns::{Grid, Params, PhysicalField};
use tpns_cli::field_io;

fn tpns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpns")).args(args).output().expect("run tpns")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn missing_required_key_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.ini");
    std::fs::write(&cfg, "[grid]\nn = 8\n[forcing]\npreset = trig\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = tpns(&["solve", "--config", &s(&cfg), "--out-dir", &s(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.m"));
    assert!(!out_dir.exists());
}

#[test]
fn solve_writes_every_artifact_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.ini");
    std::fs::write(
        &cfg,
        "seed = 3\n[grid]\nn = 8\nm = 8\nbox = 6.0, 5.0, 4.0\n[physics]\nlambda = -0.7\nperiod = 3.0\n\
         [forcing]\npreset = random\namplitude = 0.05\n[solver]\ntol = 1e-12\n",
    )
    .unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = tpns(&["solve", "--config", &s(&cfg), "--out-dir", &s(dir)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).starts_with("converged iterations="));
    }
    for name in ["u.field", "v.field", "w.field", "p.field", "norms.csv", "energy.csv", "history.csv", "spectrum.csv"] {
        assert!(a.join(name).is_file(), "{name}");
    }
    let u = field_io::decode(&field_io::read(&a.join("u.field")).unwrap()).unwrap();
    let u2 = field_io::decode(&field_io::read(&b.join("u.field")).unwrap()).unwrap();
    assert!(u.sub(&u2).max_abs() <= 1e-12 * u.max_abs());
    assert_eq!(u.grid().box_len(), [6.0, 5.0, 4.0]);
    assert_eq!(u.grid().lambda(), -0.7);

    let verify = tpns(&[
        "verify",
        "--config",
        &s(&cfg),
        "--u",
        &s(&a.join("u.field")),
        "--p",
        &s(&a.join("p.field")),
        "--out-dir",
        &s(&a.join("check")),
    ]);
    assert_eq!(code(&verify), 0, "{}", stdout(&verify));
    assert!(stdout(&verify).starts_with("check,value,threshold,pass\n"));
    assert!(a.join("check/verify.csv").is_file());

    let norms = tpns(&["norms", "--u", &s(&a.join("u.field")), "--p", &s(&a.join("p.field")), "--lq", "2,inf"]);
    assert_eq!(code(&norms), 0);
    let text = stdout(&norms);
    assert!(text.starts_with("norm,q,r,value\n"));
    assert!(text.contains("xpres"));
}

#[test]
fn zero_fields_verify_against_zero_forcing() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Grid::cube(4, 4, Params::new(1.0, 2.0 * std::f64::consts::PI).unwrap()).unwrap();
    let (u, p) = (tmp.path().join("u.field"), tmp.path().join("p.field"));
    field_io::write(&u, &PhysicalField::zeros(g.clone(), 3)).unwrap();
    field_io::write(&p, &PhysicalField::zeros(g, 1)).unwrap();
    let out = tpns(&["verify", "--grid", "4", "--preset", "zero", "--u", &s(&u), "--p", &s(&p)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    // Same files against a nonzero forcing must fail honestly.
    let out = tpns(&["verify", "--grid", "4", "--preset", "trig", "--u", &s(&u), "--p", &s(&p)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("pde_residual"));
}

#[test]
fn bad_field_files_are_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Grid::cube(4, 4, Params::new(1.0, 2.0 * std::f64::consts::PI).unwrap()).unwrap();
    let u = tmp.path().join("u.field");
    let mut bytes = field_io::encode(&PhysicalField::zeros(g, 3));
    bytes[3] = b'?';
    std::fs::write(&u, &bytes).unwrap();
    let out = tpns(&["verify", "--grid", "4", "--preset", "zero", "--u", &s(&u)]);
    assert_eq!(code(&out), 6);
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));

    let out = tpns(&["norms", "--u", &s(&tmp.path().join("absent.field"))]);
    assert_eq!(code(&out), 6);

    let other = Grid::cube(4, 4, Params::new(2.0, 2.0 * std::f64::consts::PI).unwrap()).unwrap();
    field_io::write(&u, &PhysicalField::zeros(other, 3)).unwrap();
    let out = tpns(&["verify", "--grid", "4", "--preset", "zero", "--u", &s(&u)]);
    assert_eq!(code(&out), 6);
}

#[test]
fn probe_reports_bounded_symbols_and_rejects_unknown_ones() {
    let out = tpns(&["probe", "helmholtz", "m_l", "--resolution", "7", "--lambda", "-2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,max_abs,marcinkiewicz_sup,sample_count"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let helm_max: f64 = rows[0][1].parse().unwrap();
    assert!(helm_max <= 1.0 + 1e-6);
    for row in &rows {
        assert!(row[2].parse::<f64>().unwrap().is_finite());
    }

    let out = tpns(&["probe", "not_a_symbol"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn invalid_arguments_are_usage_errors() {
    assert_eq!(code(&tpns(&["solve", "--grid", "7", "--preset", "trig"])), 2);
    assert_eq!(code(&tpns(&["solve", "--grid", "8", "--preset", "nonsense"])), 2);
    assert_eq!(code(&tpns(&["solve", "--grid", "8", "--preset", "trig", "--tol", "-1"])), 2);
    assert_eq!(code(&tpns(&["norms", "--u", "x", "--q", "3"])), 2);
    assert_eq!(code(&tpns(&["frobnicate"])), 2);
}
