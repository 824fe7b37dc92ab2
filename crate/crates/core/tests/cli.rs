use std::path::Path;
use std::process::{Command, Output};

use indef_nystrom::harness::read_csv;
use indef_nystrom::matcore::read_matrix_csv;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indef-nystrom"))
        .args(args)
        .output()
        .expect("spawn binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SMALL: &str = r#"
schema_version = 1
experiment = "custom"
master_seed = 3
trials = 2
r_values = [4, 6]

[matrix]
source = "synthetic"
spectrum = { kind = "geometric", n = 30, start = 1.0, end = 1e-6 }

[[methods]]
label = "alg1"
method = "truncated_core"

[[methods]]
label = "oracle"
method = "theorem"
c1 = 1.5
c2 = 2.0
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn selftest_succeeds() {
    let out = bin(&["selftest"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn run_writes_all_rows_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(code(&bin(&["run", "--config", &cfg, "--out", a.to_str().unwrap()])), 0);
    let out = bin(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--workers", "3", "--seed", "99"]);
    assert_eq!(code(&out), 0);

    let ra = read_csv(&a).unwrap();
    let rb = read_csv(&b).unwrap();
    assert_eq!(ra.len(), 2 * 2 * 2);
    assert_eq!(rb.len(), ra.len());
    assert!(ra.iter().zip(&rb).all(|(x, y)| x.seed != y.seed));
    assert!(ra.iter().all(|r| r.error.is_none()));
}

#[test]
fn theorem_subcommand_keeps_only_oracle_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("t.csv");
    assert_eq!(code(&bin(&["theorem", "--config", &cfg, "--out", out.to_str().unwrap()])), 0);
    let rows = read_csv(&out).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.method == "oracle" && r.eps_ra.is_some() && r.omega_f.is_some()));
}

#[test]
fn config_problems_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();

    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&bin(&["run", "--config", missing.to_str().unwrap(), "--out", out])), 1);

    let garbage = write(dir.path(), "garbage.toml", "schema_version = [");
    assert_eq!(code(&bin(&["run", "--config", &garbage, "--out", out])), 1);

    let unknown = write(dir.path(), "unknown.toml", &SMALL.replace("trials = 2", "trials = 2\ncolour = 1"));
    assert_eq!(code(&bin(&["run", "--config", &unknown, "--out", out])), 1);

    let rank = write(dir.path(), "rank.toml", &SMALL.replace("[4, 6]", "[4, 30]"));
    assert_eq!(code(&bin(&["run", "--config", &rank, "--out", out])), 1);

    let version = write(dir.path(), "version.toml", &SMALL.replace("schema_version = 1", "schema_version = 2"));
    assert_eq!(code(&bin(&["run", "--config", &version, "--out", out])), 1);

    assert_eq!(code(&bin(&["run"])), 1);
    assert_eq!(code(&bin(&["frobnicate"])), 1);
    assert_eq!(code(&bin(&["--help"])), 0);
    assert!(!Path::new(out).exists());
}

#[test]
fn runtime_problems_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("no/such/dir/o.csv");
    assert_eq!(code(&bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])), 2);

    let points = dir.path().join("missing_points.csv");
    let km = dir.path().join("k.csv");
    let res = bin(&["kernel", "--kernel", "sigmoid", "--points", points.to_str().unwrap(), "--out", km.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
}

#[test]
fn synth_geometric_and_stepwise() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    let res = bin(&["synth", "--kind", "geometric", "--n", "40", "--start", "1", "--end", "1e-4", "--seed", "2", "--out", g.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let a = read_matrix_csv(&g).unwrap();
    assert_eq!(a.n(), 40);
    let sv = a.singular_values().unwrap();
    assert!((sv[0] - 1.0).abs() < 1e-10 && (sv[39] - 1e-4).abs() < 1e-12);

    let s = dir.path().join("s.csv");
    let steps = "5:1,15:1e-3";
    let res = bin(&["synth", "--kind", "stepwise", "--steps", steps, "--eigvecs", "block-coherent", "--block", "10", "--out", s.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let sv = read_matrix_csv(&s).unwrap().singular_values().unwrap();
    assert_eq!(sv.len(), 20);
    assert!(sv.iter().take(5).all(|v| (v - 1.0).abs() < 1e-10));
    assert!(sv.iter().skip(5).all(|v| (v - 1e-3).abs() < 1e-12));

    let mismatch = bin(&["synth", "--kind", "stepwise", "--steps", steps, "--n", "21", "--out", s.to_str().unwrap()]);
    assert_eq!(code(&mismatch), 1);
    let no_n = bin(&["synth", "--kind", "geometric", "--out", s.to_str().unwrap()]);
    assert_eq!(code(&no_n), 1);
}

#[test]
fn kernel_from_points() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "p.csv", "x,y\n0,0\n3,4\n");
    let out = dir.path().join("k.csv");
    let res = bin(&["kernel", "--kernel", "thin_plate_spline", "--points", &pts, "--has-header", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let k = read_matrix_csv(&out).unwrap();
    let want = 25.0 * 25f64.ln();
    assert_eq!(k.matrix()[(0, 0)], 0.0);
    assert!((k.matrix()[(0, 1)] - want).abs() < 1e-12);

    let bad = bin(&["kernel", "--kernel", "gaussian_rbf", "--points", &pts, "--has-header", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&bad), 1);
    let header_as_data = bin(&["kernel", "--kernel", "sigmoid", "--points", &pts, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&header_as_data), 1);
}
