use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qbrown_cli::config::{Command as Cmd, RunConfig};
use qbrown_cli::output::{parse_csv, render_csv, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn qbrown(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbrown"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn success_and_help_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbrown(&[
        "criterion-scan",
        "--points",
        "101",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "criterion_scan.csv",
        "criterion_scan.svg",
        "criterion-scan.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(code(&qbrown(&["--help"])), 0);
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // omega0^2 <= alpha kappa has no renormalized frequency
    let o = qbrown(&["hr-coeffs", "--omega0", "1", "--out", path(dir.path())]);
    assert_eq!(code(&o), 2);
    let o = qbrown(&[
        "criterion-scan",
        "--u-min",
        "5",
        "--u-max",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&o), 2);
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"command": "criterion-scan", "params": {"bogus": 1}}"#,
    )
    .unwrap();
    assert_eq!(code(&qbrown(&["--config", path(&cfg)])), 2);
    assert_eq!(code(&qbrown(&["no-such-command"])), 2);
    assert_eq!(code(&qbrown(&[])), 2);
}

#[test]
fn numerical_gate_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // the witness state does not fit in eight levels
    let o = qbrown(&[
        "witness",
        "--n",
        "8",
        "--n-check",
        "10",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("leakage"));
}

#[test]
fn csv_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut t = Table::new("t", &["a", "b", "c"]);
    for _ in 0..200 {
        let e: i32 = rng.gen_range(-300..300);
        t.push_nums(&[
            rng.gen::<f64>() * 10f64.powi(e),
            -rng.gen::<f64>(),
            rng.gen_range(-1e6..1e6),
        ]);
    }
    t.push_nums(&[0.0, -0.0, f64::MIN_POSITIVE]);
    t.footer.push("note".into());
    let config = RunConfig::defaults(Cmd::CriterionScan, "unused");
    let text = render_csv(&t, &config).unwrap();
    let (header, rows) = parse_csv(&text).unwrap();
    assert_eq!(header, ["a", "b", "c"]);
    assert_eq!(rows.len(), t.rows.len());
    for (got, want) in rows.iter().zip(&t.rows) {
        for (x, c) in got.iter().zip(want) {
            match c {
                qbrown_cli::output::Cell::Num(y) => assert_eq!(x.to_bits(), y.to_bits()),
                qbrown_cli::output::Cell::Text(_) => unreachable!(),
            }
        }
    }
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = qbrown(&[
            "qbe-solve",
            "--points",
            "51",
            "--seed",
            "17",
            "--out",
            path(d.path()),
        ]);
        assert_eq!(code(&o), 0);
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for n in names {
        assert_eq!(
            fs::read(a.path().join(&n)).unwrap(),
            fs::read(b.path().join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            r#"{{"command": "criterion-scan", "params": {{"eta_tilde": 3.0, "r": 0.2, "points": 11}},
                "output_dir": {:?}, "formats": ["json"], "seed": 5}}"#,
            path(&out)
        ),
    )
    .unwrap();
    let o = qbrown(&["--config", path(&cfg), "criterion-scan", "--r", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("criterion-scan.json")).unwrap())
            .unwrap();
    assert_eq!(json["params"]["eta_tilde"], 3.0);
    assert_eq!(json["params"]["r"], 0.5);
    assert_eq!(json["params"]["points"], 11);
    assert_eq!(json["seed"], 5);
    assert!(!out.join("criterion_scan.csv").exists());

    // a file for one command cannot drive another
    let o = qbrown(&["--config", path(&cfg), "qbe-solve"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn csv_header_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbrown(&[
        "criterion-scan",
        "--points",
        "5",
        "--format",
        "csv",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("criterion_scan.csv")).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# qbrown "));
    assert!(first.contains("command=criterion-scan") && first.contains("seed=20120423"));
    let (header, rows) = parse_csv(&text).unwrap();
    assert_eq!(header, ["u", "s"]);
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert_eq!(r[1], qbrown_qbe::criterion_raw(10.0, 0.1, r[0]));
    }
}
