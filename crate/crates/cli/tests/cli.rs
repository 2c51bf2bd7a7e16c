use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tilepath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilepath"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> String {
        let p = self.dir.path().join(name);
        fs::write(&p, contents).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn identity(&self) -> (String, String) {
        (
            self.file("a.csv", "1,0\n0,1\n"),
            self.file("y.csv", "1\n0.5\n"),
        )
    }
}

fn str_of(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn tile_count(json: &str) -> usize {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v["tiles"].as_array().unwrap().len()
}

#[test]
fn identity_tiling_has_three_tiles() {
    let f = Fixture::new();
    let (a, y) = f.identity();
    let out = str_of(&f.path("t.json"));
    let o = tilepath(&[
        "tiling", "--matrix", &a, "--datum", &y, "--s-max", "2", "--out", &out, "--format",
        "json,svg",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("tiles: 3"));
    assert_eq!(tile_count(&fs::read_to_string(&out).unwrap()), 3);
    let svg = fs::read_to_string(f.path("t.svg")).unwrap();
    assert_eq!(svg.matches("<polygon").count(), 3);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn zero_depth_tiling_is_root_only() {
    let f = Fixture::new();
    let (a, y) = f.identity();
    let out = str_of(&f.path("root.json"));
    let o = tilepath(&[
        "tiling", "--matrix", &a, "--datum", &y, "--s-max", "0", "--out", &out,
    ]);
    assert!(o.status.success());
    assert_eq!(tile_count(&fs::read_to_string(&out).unwrap()), 1);
}

#[test]
fn binary_matrix_input() {
    let f = Fixture::new();
    let mut bytes = b"TPTH".to_vec();
    bytes.extend(2u32.to_le_bytes());
    bytes.extend(2u32.to_le_bytes());
    for x in [1.0f64, 0.0, 0.0, 1.0] {
        bytes.extend(x.to_le_bytes());
    }
    let a = f.path("a.bin");
    fs::write(&a, bytes).unwrap();
    let y = f.file("y.csv", "1,0.5\n");
    let out = str_of(&f.path("t.json"));
    let o = tilepath(&[
        "tiling",
        "--matrix",
        &str_of(&a),
        "--datum",
        &y,
        "--s-max",
        "2",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(tile_count(&fs::read_to_string(&out).unwrap()), 3);
}

#[test]
fn missing_input_exits_two() {
    let f = Fixture::new();
    let y = f.file("y.csv", "1\n");
    let o = tilepath(&[
        "tiling",
        "--matrix",
        "/nonexistent/a.csv",
        "--datum",
        &y,
        "--s-max",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_depth_exits_one() {
    let f = Fixture::new();
    let (a, y) = f.identity();
    let out = str_of(&f.path("t.json"));
    let o = tilepath(&[
        "tiling", "--matrix", &a, "--datum", &y, "--s-max", "3", "--out", &out,
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn omp_on_noiseless_fixture() {
    let f = Fixture::new();
    // Columns 1 and 3 of a 4x5 matrix, u = (0, 2, 0, -1, 0).
    let a = f.file(
        "a.csv",
        "1,0,0,0,0.5\n0,1,0,0,0.5\n0,0,1,0,0.5\n0,0,0,1,0.5\n",
    );
    let y = f.file("y.csv", "0\n2\n0\n-1\n");
    let u = f.file("u.csv", "0,2,0,-1,0\n");
    let o = tilepath(&[
        "solve", "--matrix", &a, "--datum", &y, "--truth", &u, "--method", "omp", "--s-max", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("support: [1, 3]"), "{text}");
    assert!(text.contains("symmetric difference: 0"), "{text}");
}

#[test]
fn mp_rank_on_identity() {
    let f = Fixture::new();
    let (a, y) = f.identity();
    let out = str_of(&f.path("solve.json"));
    let o = tilepath(&[
        "solve", "--matrix", &a, "--datum", &y, "--method", "mp-rank", "--s-max", "1", "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("support: [0]"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["support"], serde_json::json!([0]));
}

#[test]
fn unknown_method_exits_one_with_usage() {
    let f = Fixture::new();
    let (a, y) = f.identity();
    let o = tilepath(&[
        "solve", "--matrix", &a, "--datum", &y, "--method", "ista", "--s-max", "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("unknown method") && err.contains("--help"),
        "{err}"
    );
}

fn bench_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "bench", "--m", "12", "--n", "24", "--s", "2", "--trials", "2", "--seed", "3", "--out",
        out, "--format", "csv,json",
    ];
    v.extend_from_slice(extra);
    v
}

#[test]
fn bench_smoke_and_repeatability() {
    let f = Fixture::new();
    let first = str_of(&f.path("one.csv"));
    let second = str_of(&f.path("two.csv"));
    let o = tilepath(&bench_args(&first, &["--values", "2", "--workers", "1"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&first).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("sweep,value,method"));
    assert_eq!(lines.len(), 7);
    for label in [
        "OMP",
        "L1IHT",
        "LASSO",
        "pLASSO",
        "MPLASSO(All)",
        "MPLASSO(Rank)",
    ] {
        assert!(
            lines.iter().any(|l| l.split(',').nth(2) == Some(label)),
            "{label}"
        );
    }
    let o = tilepath(&bench_args(&second, &["--values", "2", "--workers", "3"]));
    assert!(o.status.success());
    assert_eq!(csv, fs::read_to_string(&second).unwrap());
    assert_eq!(
        fs::read(f.path("one.json")).unwrap(),
        fs::read(f.path("two.json")).unwrap()
    );
}

#[test]
fn fixed_beta_bench_layout() {
    let f = Fixture::new();
    let out = str_of(&f.path("fixed.csv"));
    let o = tilepath(&bench_args(
        &out,
        &["--sweep", "fixed-beta", "--values", "1e-4,1,50"],
    ));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains(",FixedBeta,")).count(), 3);
    assert_eq!(
        csv.lines().filter(|l| l.contains(",MPLASSO(All),")).count(),
        3
    );
    let table = stdout(&o);
    assert!(table.contains("FixedBeta") && table.contains("MPLASSO(All)"));
}

#[test]
fn bench_rejects_bad_method() {
    let f = Fixture::new();
    let out = str_of(&f.path("b.csv"));
    let o = tilepath(&bench_args(&out, &["--method", "omp,nope"]));
    assert_eq!(o.status.code(), Some(1));
}
