use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use symdom::linalg::{c64, eigenvalues, C64};
use symdom::sampling::{random_diagonalizable_tuple, seeded_rng};
use symdom::DomainSpec;
use symdom_cli::config::{ExperimentConfig, LoadedConfig};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_symdom"));
    c.env_remove("SYMDOM_CACHE_DIR");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, config: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--config").arg(config).args(extra).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

type Rows = Vec<std::collections::HashMap<String, String>>;

fn rows(csv_text: &str) -> Rows {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(r: &std::collections::HashMap<String, String>, k: &str) -> f64 {
    r[k].parse().unwrap_or_else(|_| panic!("column {k} = {:?}", r[k]))
}

fn parse_c64(s: &str) -> C64 {
    let Some(body) = s.strip_suffix('j') else { return c64(s.parse().unwrap(), 0.0) };
    let split =
        body.char_indices().skip(1).filter(|&(i, ch)| (ch == '+' || ch == '-') && !body[..i].ends_with('e')).last();
    let (i, _) = split.expect("real and imaginary parts");
    c64(body[..i].parse().unwrap(), body[i..].trim_start_matches('+').parse().unwrap())
}

const BALL2: &str = r#"{
  "domain": {"kind": "ball", "n": 2},
  "lambda": 1.0,
  "D": [4, 8, 12]
}"#;

#[test]
fn kernel_ball_gram_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let out = ok(&run("kernel", &write(dir.path(), "c.json", BALL2), &[]));
    let rs = rows(&out);
    assert_eq!(rs.len(), 3);
    let mut prev = f64::INFINITY;
    for r in &rs {
        assert_eq!(r["gram_oracle"], "closed_form");
        assert!(num(r, "max_gram_deviation") <= 1e-10);
        assert!(num(r, "gram_min_eig_ratio") > 0.0);
        let e = num(r, "max_partial_sum_error");
        assert!(e < prev);
        prev = e;
    }
    assert!(prev < 1e-5);
}

#[test]
fn empty_degree_list_is_rejected_with_its_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &BALL2.replace("[4, 8, 12]", "[]"));
    let out = run("kernel", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("c.json:4: `D`"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_and_invalid_configs_fail() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", "{\n  \"domain\": {\"kind\": \"ball\", \"n\": 2},\n  \"lambda\": 1.0,,\n}");
    let out = run("spectrum", &bad, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:3:"));
    let weight = write(dir.path(), "w.json", &BALL2.replace("1.0", "-0.5"));
    let out = run("kernel", &weight, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("w.json:3: `lambda`"));
    let out = run("kernel", &dir.path().join("missing.json"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_guard_failure_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"domain": {"kind": "ball", "n": 1}, "lambda": 3.0, "D": [4],
            "symbols": {"coordinates": false, "mobius": [[[0.99999, 0]]]}}"#,
    );
    let out = run("invariance", &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("denominator"));
}

#[test]
fn polydisc_kernel_within_budget() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"domain": {"kind": "polydisc", "n": 2}, "lambda": 2.0, "D": [12]}"#);
    let start = Instant::now();
    let rs = rows(&ok(&run("kernel", &cfg, &[])));
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert!(num(&rs[0], "max_gram_deviation") <= 1e-10);
}

#[test]
fn quotient_spectrum_points() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"domain": {"kind": "ball", "n": 2}, "lambda": 3.0, "D": [6, 10], "generators": ["z1"],
            "spectrum": {"tuple": "quotient", "points": [[[0, 0], [0, 0]], [[0.5, 0], [0.5, 0]]]}}"#,
    );
    let rs = rows(&ok(&run("spectrum", &cfg, &[])));
    let points: Vec<_> = rs.iter().filter(|r| r["source"] == "point").collect();
    assert_eq!(points.len(), 4);
    for r in points {
        let expect = if r["w1"] == "0" { "singular" } else { "regular" };
        assert_eq!(r["verdict"], expect);
        assert_eq!(r["oracle"], expect);
    }
}

#[test]
fn diagonal_spectrum_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"domain": {"kind": "polydisc", "n": 2}, "lambda": 1.0, "D": [4], "seed": 5,
            "spectrum": {"tuple": "diagonal", "size": 5, "repeated": true,
                         "grid": {"min": -0.9, "max": 0.9, "steps": 4}}}"#,
    );
    let rs = rows(&ok(&run("spectrum", &cfg, &[])));
    assert_eq!(rs.iter().filter(|r| r["source"] == "eigenvalue").count(), 3);
    assert_eq!(rs.iter().filter(|r| r["source"] == "grid").count(), 256);
    assert!(rs.iter().all(|r| r["verdict"] == r["oracle"]));
    assert!(rs.iter().all(|r| r["D"].is_empty()));
}

#[test]
fn single_variable_spectrum_is_the_classical_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"domain": {"kind": "ball", "n": 1}, "lambda": 1.0, "D": [2], "seed": 9,
            "spectrum": {"tuple": "diagonal", "size": 4, "radius": 0.8}}"#,
    );
    let rs = rows(&ok(&run("spectrum", &cfg, &[])));
    let disc = DomainSpec::ball(1).unwrap();
    let sample = random_diagonalizable_tuple(&disc, 4, 0.8, false, &mut seeded_rng(9));
    let classical = eigenvalues(&sample.ops[0]);
    let reported: Vec<C64> = rs.iter().filter(|r| r["source"] == "eigenvalue").map(|r| parse_c64(&r["w1"])).collect();
    assert_eq!(reported.len(), 4);
    for e in &classical {
        assert!(reported.iter().any(|r| (r - e).norm() < 1e-10), "{e} missing from {reported:?}");
    }
    assert!(rs.iter().all(|r| r["verdict"] == "singular"));
}

#[test]
fn disc_calculus_suite() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"domain": {"kind": "ball", "n": 1}, "lambda": 1.0, "D": [2], "seed": 3,
            "calculus": {"polynomials": ["1", "z1^3 - 0.5j*z1"],
                         "tuples": [{"kind": "diagonal", "size": 5, "radius": 0.7},
                                    {"kind": "triangular", "size": 6, "radius": 0.7},
                                    {"kind": "nonnormal", "size": 6, "radius": 0.7}]}}"#,
    );
    let rs = rows(&ok(&run("calculus", &cfg, &[])));
    assert_eq!(rs.len(), 3 * 4);
    assert!(rs.iter().all(|r| r["pass"] == "true"));
    for r in rs.iter().filter(|r| r["check"] == "integral") {
        assert_eq!(r["nodes"], "1024");
        assert!(num(r, "residual") <= 1e-9);
        if r["detail"] == "1" {
            assert!(num(r, "residual") <= 1e-13);
        }
    }
}

#[test]
fn sphere_calculus_suite() {
    let dir = TempDir::new().unwrap();
    let cfg =
        write(dir.path(), "c.json", r#"{"domain": {"kind": "ball", "n": 2}, "lambda": 2.0, "D": [2], "seed": 4}"#);
    let rs = rows(&ok(&run("calculus", &cfg, &[])));
    let integrals: Vec<_> = rs.iter().filter(|r| r["check"] == "integral").collect();
    assert_eq!(integrals.len(), 3 * 5);
    for r in integrals {
        assert_eq!(r["nodes"], "256000");
        assert!(num(r, "residual") <= 1e-3);
    }
    assert!(rs.iter().all(|r| r["pass"] == "true"));
}

const INVARIANCE: &str = r#"{
  "domain": {"kind": "ball", "n": 2},
  "lambda": 3.0,
  "D": [DLIST],
  "generators": ["z1"],
  "symbols": {"coordinates": true, "mobius": [[[X, 0], [0, 0]]]},
  "p": [3.0],
  "window": 2
}"#;

fn invariance_config(dir: &Path, d: &str, x: &str) -> PathBuf {
    write(dir, "inv.json", &INVARIANCE.replace("DLIST", d).replace("X", x))
}

#[test]
fn families_coincide_at_the_origin() {
    let dir = TempDir::new().unwrap();
    let rs = rows(&ok(&run("invariance", &invariance_config(dir.path(), "6, 9", "0"), &[])));
    let coords: Vec<_> = rs.iter().filter(|r| r["family"] == "coordinates").collect();
    let mobius: Vec<_> = rs.iter().filter(|r| r["family"].starts_with("mobius")).collect();
    assert_eq!(coords.len(), 8);
    assert_eq!(coords.len(), mobius.len());
    for (a, b) in coords.iter().zip(&mobius) {
        assert_eq!(a["D"], b["D"]);
        for k in ["schatten_full", "schatten_windowed"] {
            assert!((num(a, k) - num(b, k)).abs() <= 1e-12);
        }
    }
}

#[test]
fn windowed_norms_stabilize() {
    let dir = TempDir::new().unwrap();
    let summary = dir.path().join("summary.csv");
    let cfg = invariance_config(dir.path(), "16, 20", "0.4");
    let rs = rows(&ok(&run("invariance", &cfg, &["--summary", summary.to_str().unwrap()])));
    assert!(rs.iter().all(|r| num(r, "schatten_windowed").is_finite() && num(r, "schatten_full").is_finite()));
    let s = rows(&fs::read_to_string(&summary).unwrap());
    assert_eq!(s.len(), 8);
    for r in &s {
        assert_eq!((r["D_prev"].as_str(), r["D_last"].as_str()), ("16", "20"));
        assert!(num(r, "relative_change_windowed") <= 0.05);
    }
    assert!(s.iter().any(|r| r["family"].starts_with("mobius") && num(r, "windowed_last") > 0.1));
}

#[test]
fn permissive_scaling_multiplies_by_c_squared() {
    let dir = TempDir::new().unwrap();
    let body =
        INVARIANCE.replace("DLIST", "5, 7").replace("X", "0.3").replace("\"window\": 2", "\"scaling\": {\"c\": 0.5}");
    let rs = rows(&ok(&run("invariance", &write(dir.path(), "s.json", &body), &[])));
    let base: Vec<_> = rs.iter().filter(|r| r["c"] == "1").collect();
    let scaled: Vec<_> = rs.iter().filter(|r| r["c"] == "0.5").collect();
    assert_eq!(base.len(), scaled.len());
    for (a, b) in base.iter().zip(&scaled) {
        assert_eq!((&a["family"], &a["D"], &a["symbol_i"]), (&b["family"], &b["D"], &b["symbol_i"]));
        for k in ["schatten_full", "schatten_windowed"] {
            assert!((num(b, k) - 0.25 * num(a, k)).abs() <= 1e-12 * num(a, k).max(1.0));
        }
    }
}

#[test]
fn reruns_are_byte_identical_with_or_without_cache() {
    let dir = TempDir::new().unwrap();
    let cfg = invariance_config(dir.path(), "4, 6", "0.2");
    let plain = ok(&run("invariance", &cfg, &[]));
    assert_eq!(plain, ok(&run("invariance", &cfg, &[])));
    let cache = dir.path().join("cache");
    let cold = ok(&run("invariance", &cfg, &["--cache-dir", cache.to_str().unwrap()]));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 2);
    let warm = bin().args(["invariance", "--config"]).arg(&cfg).env("SYMDOM_CACHE_DIR", &cache).output().unwrap();
    assert_eq!(plain, cold);
    assert_eq!(plain, ok(&warm));
    let seq = ok(&run("invariance", &cfg, &["--sequential"]));
    assert_eq!(plain, seq);
}

#[test]
fn seeded_commands_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", BALL2);
    for cmd in ["kernel", "calculus"] {
        let a = ok(&run(cmd, &cfg, &["--seed", "17", "--D", "3"]));
        assert_eq!(a, ok(&run(cmd, &cfg, &["--seed", "17", "--D", "3"])));
    }
    assert_ne!(ok(&run("kernel", &cfg, &["--seed", "1"])), ok(&run("kernel", &cfg, &["--seed", "2"])));
}

#[test]
fn flag_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", BALL2);
    let out = dir.path().join("k.csv");
    let o = run("kernel", &cfg, &["--D", "2,3", "--lambda", "2.5", "--out", out.to_str().unwrap()]);
    assert!(ok(&o).is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("domain,lambda,D,"));
    assert!(text.contains("\r\n"));
    let rs = rows(&text);
    assert_eq!(rs.iter().map(|r| r["D"].as_str()).collect::<Vec<_>>(), ["2", "3"]);
    assert!(rs.iter().all(|r| r["lambda"] == "2.5"));
    let bad = run("kernel", &cfg, &["--lambda", "-1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("--lambda flag"));
}

#[test]
fn shipped_configs_are_valid_and_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let raw = fs::read_to_string(&path).unwrap();
        let loaded = LoadedConfig::parse(&path.display().to_string(), &raw).unwrap();
        loaded.validate().unwrap();
        let again = ExperimentConfig::from_json(&loaded.config.to_json()).unwrap();
        assert_eq!(again, loaded.config);
        seen += 1;
    }
    assert!(seen >= 5);
}
