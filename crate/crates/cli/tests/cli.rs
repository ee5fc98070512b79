//! Black-box invocations of the `mtl` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mtl_core::geometry::PointCloud;
use mtl_core::monotone::{rockafellar_potential, PairSet};
use serde_json::Value;

struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("mtl-cli-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn mtl(args: &[&str]) -> Output {
    mtl_env(args, &[])
}

fn mtl_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mtl"));
    cmd.args(args).env_remove("SOURCE_DATE_EPOCH").env_remove("MTL_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn swapped_pairs_exit_one_with_witness() {
    let t = Scratch::new("swap");
    let pairs = t.file("pairs.csv", "0,1\n1,0\n");
    let out = mtl(&["check-monotone", s(&pairs), "--dim", "1"]);
    assert_eq!(code(&out), 1);
    let r = json(&out);
    assert_eq!(r["exit_code"], 1);
    assert_eq!(r["body"]["holds"], false);
    assert_eq!(r["body"]["witness"]["cycle"], serde_json::json!([0, 1]));
    assert_eq!(num(&r["body"]["witness"]["deficit"]), -1.0);
}

#[test]
fn monotone_pairs_exit_zero() {
    let t = Scratch::new("mono");
    let pairs = t.file("pairs.csv", "x,y\n0,0\n1,1\n2,5\n");
    let out = mtl(&["check-monotone", s(&pairs)]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["body"]["holds"], true);
    assert_eq!(r["body"]["witness"], Value::Null);
    assert_eq!(r["header"]["command"], "check-monotone");
}

#[test]
fn two_point_transport_matches_hand_solution() {
    let t = Scratch::new("ot");
    let p = t.file("p.csv", "0\n1\n");
    let q = t.file("q.csv", "2\n3\n");
    let out = mtl(&["solve-ot", s(&p), s(&q), "--dim", "1"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(num(&r["body"]["cost"]), 4.0);
    let support: Vec<(f64, f64)> = r["body"]["support"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (num(&e["x"][0]), num(&e["y"][0])))
        .collect();
    assert_eq!(support, vec![(0.0, 2.0), (1.0, 3.0)]);
    assert_eq!(r["body"]["certified"], true);

    let csv = mtl(&["solve-ot", s(&p), s(&q), "--dim", "1", "--format", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 3);
}

#[test]
fn weight_columns_are_normalised() {
    let t = Scratch::new("weights");
    let p = t.file("p.csv", "0,0,3\n1,0,1\n");
    let q = t.file("q.csv", "0,1,1\n");
    let out = mtl(&["solve-ot", s(&p), s(&q), "--weights-col", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    // masses 3/4 at distance 1 and 1/4 at distance sqrt 2
    assert!((num(&r["body"]["cost"]) - 1.25).abs() < 1e-15);
}

#[test]
fn hausdorff_of_small_clouds() {
    let t = Scratch::new("hd");
    let a = t.file("a.csv", "0\n1\n");
    let b = t.file("b.csv", "0\n3\n");
    let r = json(&mtl(&["hausdorff", s(&a), s(&b), "--dim", "1"]));
    assert_eq!(num(&r["body"]["distance"]), 2.0);
    assert_eq!(num(&r["body"]["directed_ab"]), 1.0);
    assert_eq!(num(&r["body"]["directed_ba"]), 2.0);
}

#[test]
fn usage_errors_exit_two() {
    let t = Scratch::new("usage");
    let a = t.file("a.csv", "0\n1\n");
    assert_eq!(code(&mtl(&["hausdorff", s(&a)])), 2);
    assert_eq!(code(&mtl(&["hausdorff", s(&a), s(&a), "--bogus"])), 2);
    assert_eq!(code(&mtl(&["frobnicate"])), 2);
    assert_eq!(code(&mtl(&["hausdorff", s(&a), s(&t.path("missing.csv"))])), 2);
    let bad = t.file("bad.csv", "1,2\n3,4\n5,x\n");
    let out = mtl(&["hausdorff", s(&bad), s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let three = t.file("three.csv", "1,2,3\n");
    let out = mtl(&["check-monotone", s(&three)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("without --dim"));
    assert_eq!(code(&mtl(&["check-monotone", s(&a), "--dim", "1", "--format", "csv"])), 2);
    assert_eq!(code(&mtl(&["--help"])), 0);
}

#[test]
fn potential_refuses_non_monotone_input() {
    let t = Scratch::new("potfail");
    let pairs = t.file("pairs.csv", "0,1\n1,0\n");
    let out = mtl(&["potential", s(&pairs), "--dim", "1"]);
    assert_eq!(code(&out), 1);
    let r = json(&out);
    assert_eq!(r["body"]["error"]["kind"], "not_cyclically_monotone");
    assert_eq!(r["body"]["error"]["witness"]["cycle"], serde_json::json!([0, 1]));
}

#[test]
fn potential_round_trip_evaluates_identically() {
    use rand::{Rng, SeedableRng};
    let t = Scratch::new("potrt");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    // gradients of |x|^2 / 2 + |x|^4 / 4 are cyclically monotone
    let mut pairs_csv = String::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..30 {
        let x: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r2 = x[0] * x[0] + x[1] * x[1];
        let y = [x[0] * (1.0 + r2), x[1] * (1.0 + r2)];
        pairs_csv.push_str(&format!("{:e},{:e},{:e},{:e}\n", x[0], x[1], y[0], y[1]));
        xs.extend(x);
        ys.extend(y);
    }
    let mut queries = String::new();
    let mut qs = Vec::new();
    for _ in 0..100 {
        let q: [f64; 2] = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        queries.push_str(&format!("{:e},{:e}\n", q[0], q[1]));
        qs.push(q);
    }
    let pairs = t.file("pairs.csv", &pairs_csv);
    let query = t.file("q.csv", &queries);
    let pot = t.path("pot.json");
    assert_eq!(code(&mtl(&["potential", s(&pairs), "--dim", "2", "--out", s(&pot)])), 0);
    let out = mtl(&["eval-map", s(&pot), s(&query)]);
    assert_eq!(code(&out), 0);
    let r = json(&out);

    // `{:e}` is shortest round-trip, so the in-process set is the same
    let set = PairSet::new(PointCloud::from_flat(2, xs).unwrap(), PointCloud::from_flat(2, ys).unwrap()).unwrap();
    let psi = rockafellar_potential(&set, 0).unwrap();
    let entries = r["body"]["queries"].as_array().unwrap();
    assert_eq!(entries.len(), 100);
    for (e, q) in entries.iter().zip(&qs) {
        assert_eq!(num(&e["value"]), psi.value(q).unwrap());
        let verts = psi.subdifferential(q, 1e-9).unwrap().vertices.to_rows();
        let got: Vec<Vec<f64>> = serde_json::from_value(e["vertices"].clone()).unwrap();
        assert_eq!(got, verts);
    }
}

#[test]
fn ranks_report_is_bijective_and_stable() {
    let t = Scratch::new("ranks");
    let sample = t.file(
        "s.csv",
        "0.1,0.2\n-0.3,0.1\n0.5,-0.4\n-0.2,-0.6\n0.9,0.3\n-0.8,0.7\n0.05,-0.1\n0.6,0.8\n0.0,0.0\n",
    );
    let args = ["ranks", "--sample", s(&sample), "--nr", "2", "--ns", "4", "--n0", "1", "--seed", "3"];
    let a = mtl_env(&args, &[("SOURCE_DATE_EPOCH", "1700000000")]);
    let b = mtl_env(&args, &[("SOURCE_DATE_EPOCH", "1700000000")]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["header"]["timestamp"], 1700000000);
    assert_eq!(r["header"]["seed"], 3);
    let entries = r["body"]["entries"].as_array().unwrap();
    let mut grid: Vec<u64> = entries.iter().map(|e| e["grid_index"].as_u64().unwrap()).collect();
    grid.sort();
    assert_eq!(grid, (0..9).collect::<Vec<_>>());
    assert!(entries.iter().filter(|e| e["ring"] != 0).all(|e| e["angle"].is_number()));
    assert_eq!(r["body"]["certified"], true);

    let out = mtl(&["ranks", "--sample", s(&sample), "--nr", "2", "--ns", "3"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["body"]["error"]["kind"], "invalid_input");
}

#[test]
fn grids_from_descriptors_and_rings() {
    let t = Scratch::new("grid");
    let set = t.file("k.json", r#"{"type": "box", "lo": [0, 0], "hi": [1, 1]}"#);
    let r = json(&mtl(&["gen-grid", "--set", s(&set), "--resolution", "2"]));
    assert_eq!(r["body"]["count"], 9);
    let out = mtl(&["gen-grid", "--nr", "3", "--ns", "5", "--n0", "2", "--dim", "3", "--seed", "9", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.lines().all(|l| l.split(',').count() == 3));
    assert_eq!(code(&mtl(&["gen-grid", "--set", s(&set)])), 2);
}

#[test]
fn converge_writes_stable_reports_and_long_csv() {
    let t = Scratch::new("converge");
    let cfg = t.file(
        "cfg.json",
        r#"{
            "dim": 1,
            "source": {"family": "uniform_box", "lo": [0.0], "hi": [1.0]},
            "target": {"family": "uniform_box", "lo": [0.0], "hi": [2.0]},
            "sample_sizes": [8, 32],
            "replications": 2,
            "seed": 17,
            "compact": {"type": "box", "lo": [0.25], "hi": [0.75]},
            "resolution": 4
        }"#,
    );
    let (out1, out2, csv) = (t.path("r1.json"), t.path("r2.json"), t.path("r.csv"));
    let a = mtl_env(&["converge", "--config", s(&cfg), "--out", s(&out1), "--csv", s(&csv)], &[("MTL_THREADS", "1")]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = mtl(&["converge", "--config", s(&cfg), "--out", s(&out2)]);
    assert_eq!(code(&b), 0);
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
    assert_eq!(a.stdout, {
        // stdout names the paths, so only the CSV entry differs
        let mut v = json(&b);
        v["body"]["csv"] = Value::String(csv.display().to_string());
        v["body"]["out"] = Value::String(out1.display().to_string());
        mtl_core::io::to_canonical_json(&v).unwrap().into_bytes()
    });

    let report: Value = serde_json::from_slice(&fs::read(&out1).unwrap()).unwrap();
    assert_eq!(report["header"]["seed"], 17);
    assert_eq!(report["header"]["config"]["seed"], 17);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["monotone_certified"] == true));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,rep,metric,value"));
    let records: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // every row contributes the same metric list
    assert_eq!(records.len() % 4, 0);
    assert!(records.iter().all(|r| r.len() == 4));
    let sup: Vec<f64> = records.iter().filter(|r| r[2] == "sup_error_k").map(|r| r[3].parse().unwrap()).collect();
    let expected: Vec<f64> = rows.iter().map(|r| num(&r["sup_error_k"])).collect();
    assert_eq!(sup, expected);

    let bad = t.file("bad.json", r#"{"dim": 1}"#);
    assert_eq!(code(&mtl(&["converge", "--config", s(&bad), "--out", s(&out2)])), 2);
}
