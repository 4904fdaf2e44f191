use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssd-relax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn distance_of_spread_versus_mean() {
    let out = run(&[
        "distance",
        path(&fixture("spread.json")),
        path(&fixture("mean.json")),
    ]);
    let v = json(&out);
    assert_eq!(f(&v["distance"]), 0.5);
    assert_eq!(f(&v["lorenz_sup"]["value"]), 0.5);
    assert_eq!(f(&v["lorenz_sup"]["p"]), 0.5);
    assert_eq!(f(&v["shortfall_sup"]["value"]), 0.5);
    assert_eq!(f(&v["shortfall_sup"]["eta"]), 1.0);
    assert_eq!(v["dominates"], Value::Bool(false));
}

#[test]
fn distance_to_itself_is_zero() {
    let x = fixture("spread.json");
    let v = json(&run(&["distance", path(&x), path(&x)]));
    assert_eq!(f(&v["distance"]), 0.0);
    assert_eq!(v["dominates"], Value::Bool(true));
}

#[test]
fn csv_and_json_inputs_agree() {
    let a = json(&run(&[
        "distance",
        path(&fixture("spread.csv")),
        path(&fixture("mean.json")),
    ]));
    let b = json(&run(&[
        "distance",
        path(&fixture("spread.json")),
        path(&fixture("mean.json")),
    ]));
    assert_eq!(a, b);
}

#[test]
fn malformed_input_exits_2() {
    let out = run(&[
        "distance",
        path(&fixture("malformed.json")),
        path(&fixture("mean.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed.json"));
    let out = run(&["distance", "no/such/file.json", path(&fixture("mean.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn projection_of_spread_versus_mean() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("proj.json");
    let out = run(&[
        "project",
        path(&fixture("spread.json")),
        path(&fixture("mean.json")),
        "--out",
        path(&out_file),
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let atoms: Vec<(f64, f64)> = v["zhat"]["atoms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (f(&a["value"]), f(&a["prob"])))
        .collect();
    assert_eq!(atoms, vec![(1.0, 0.5), (2.0, 0.5)]);
    assert_eq!(f(&v["distance"]), 0.5);
    assert_eq!(
        v["increasing_set"]["intervals"],
        serde_json::json!([[0.0, 0.5]])
    );
}

#[test]
fn projecting_a_dominating_input_returns_it_unchanged() {
    let x = fixture("spread.json");
    let v = json(&run(&["project", path(&x), path(&fixture("spread.csv"))]));
    let original: Value = serde_json::from_str(&std::fs::read_to_string(&x).unwrap()).unwrap();
    assert_eq!(
        serde_json::to_string(&v["zhat"]).unwrap(),
        serde_json::to_string(&original).unwrap()
    );
    assert_eq!(v["increasing_set"]["intervals"], serde_json::json!([]));
}

#[test]
fn solve_reproduces_the_toys() {
    let y = fixture("mean.json");
    let cfg = fixture("alpha2.json");
    let v = json(&run(&[
        "solve",
        path(&fixture("toy_achievable.json")),
        path(&y),
        "--config",
        path(&cfg),
    ]));
    assert_eq!(v["status"], "optimal_feasible");
    assert!((f(&v["x_star"][0]) - 1.0).abs() <= 1e-9);
    assert!((f(&v["f_star"]) + 1.0).abs() <= 1e-9);
    assert!(f(&v["distance_star"]) <= 1e-9);

    let v = json(&run(&[
        "solve",
        path(&fixture("toy_truncated.json")),
        path(&y),
        "--config",
        path(&cfg),
    ]));
    assert_eq!(v["status"], "optimal_relaxed");
    assert!((f(&v["x_star"][0]) - 0.5).abs() <= 1e-9);
    assert!((f(&v["distance_star"]) - 0.5).abs() <= 1e-9);
    assert!(!v["iterates"].as_array().unwrap().is_empty());
}

#[test]
fn solve_flags_alpha_zero_and_the_iteration_cap() {
    let y = fixture("mean.json");
    let v = json(&run(&[
        "solve",
        path(&fixture("toy_truncated.json")),
        path(&y),
        "--alpha",
        "0",
    ]));
    assert_eq!(v["status"], "optimal_relaxed");
    assert!(v["iterates"]
        .as_array()
        .unwrap()
        .iter()
        .all(|it| f(&it["theta_p"]) == 0.0));

    let v = json(&run(&[
        "solve",
        path(&fixture("toy_achievable.json")),
        path(&y),
        "--alpha",
        "0",
        "--max-iter",
        "1",
    ]));
    assert_eq!(v["iterations"], 1);
}

#[test]
fn solve_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"alpah": 1}"#).unwrap();
    let out = run(&[
        "solve",
        path(&fixture("toy_achievable.json")),
        path(&fixture("mean.json")),
        "--config",
        path(&cfg),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "solve",
        path(&fixture("toy_achievable.json")),
        path(&fixture("mean.json")),
        "--alpha",
        "-1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let mut all = vec![header];
    all.extend(
        r.records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect::<Vec<_>>()),
    );
    all
}

#[test]
fn relief_bench_distance_is_nonincreasing() {
    let out = run(&["bench", "relief", "--alphas", "0,0.5,1,5"]);
    let table = rows(&out);
    assert_eq!(
        table[0],
        [
            "alpha",
            "expected_outcome",
            "distance",
            "iterations",
            "cpu_seconds"
        ]
    );
    assert_eq!(table.len(), 5);
    let d: Vec<f64> = table[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(
        d.windows(2).all(|w| w[1] <= w[0] + 1e-6 * (1.0 + w[0])),
        "{d:?}"
    );
    let alphas: Vec<&str> = table[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(alphas, ["0", "0.5", "1", "5"]);
}

#[test]
fn inspection_bench_defaults() {
    let table = rows(&run(&["bench", "inspection", "--alphas", "1"]));
    assert_eq!(
        table[0],
        [
            "alpha",
            "expected_outcome",
            "distance",
            "iterations",
            "cpu_seconds"
        ]
    );
    assert_eq!(table.len(), 2);
    let iterations: usize = table[1][3].parse().unwrap();
    assert!(iterations <= 50);
}

#[test]
fn bench_is_deterministic_across_thread_counts() {
    let strip = |out: Output| -> Vec<Vec<String>> {
        rows(&out)
            .into_iter()
            .map(|mut r| {
                r.pop();
                r
            })
            .collect()
    };
    let args = ["bench", "inspection", "--alphas", "0,1,10", "--seed", "3"];
    let one = Command::new(env!("CARGO_BIN_EXE_ssd-relax"))
        .args(args)
        .env("SSD_RELAX_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_ssd-relax"))
        .args(args)
        .env("SSD_RELAX_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(strip(one), strip(many));
}

#[test]
fn empty_alpha_list_exits_2() {
    let out = run(&["bench", "relief", "--alphas", ""]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["bench", "relief", "--alphas", "1,x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_ssd-relax"))
        .args([
            "distance",
            path(&fixture("spread.json")),
            path(&fixture("mean.json")),
        ])
        .env("SSD_RELAX_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn curves_cover_breakpoints_and_satisfy_parity() {
    let table = rows(&run(&[
        "curves",
        path(&fixture("spread.json")),
        path(&fixture("mean.json")),
    ]));
    assert_eq!(table[0], ["series", "kind", "x", "y"]);
    let get = |series: &str, kind: &str, x: f64| -> f64 {
        table[1..]
            .iter()
            .find(|r| r[0] == series && r[1] == kind && r[2].parse::<f64>().unwrap() == x)
            .map(|r| r[3].parse().unwrap())
            .unwrap_or_else(|| panic!("no {series}/{kind} row at {x}"))
    };
    // breakpoints are present with exact library values
    assert_eq!(get("spread", "shortfall2", 0.0), 0.0);
    assert_eq!(get("spread", "shortfall2", 2.0), 1.0);
    assert_eq!(get("spread", "cdf", 0.0), 0.5);
    // a point mass has a single cdf step
    let mean_cdf: Vec<(f64, f64)> = table[1..]
        .iter()
        .filter(|r| r[0] == "mean" && r[1] == "cdf")
        .map(|r| (r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect();
    assert!(mean_cdf.len() >= 200);
    assert!(mean_cdf
        .iter()
        .all(|&(x, y)| y == if x >= 1.0 { 1.0 } else { 0.0 }));
    // excess - shortfall = mean - eta on every row; both fixtures have mean 1
    for r in table[1..].iter().filter(|r| r[1] == "excess") {
        let x: f64 = r[2].parse().unwrap();
        let e: f64 = r[3].parse().unwrap();
        let s = get(&r[0], "shortfall2", x);
        assert!((e - s - (1.0 - x)).abs() <= 1e-9);
    }
}

#[test]
fn verify_agrees_on_the_fixture() {
    let v = json(&run(&[
        "verify",
        path(&fixture("spread.json")),
        path(&fixture("mean.json")),
    ]));
    assert_eq!(f(&v["oracle"]), 0.5);
    assert!(f(&v["max_disagreement"]) <= 1e-7);
}

#[test]
fn generated_instances_solve_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (p, b) = (dir.path().join("p.json"), dir.path().join("b.json"));
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"n": 4, "scenarios": 10}"#).unwrap();
    let out = run(&[
        "generate",
        "inspection",
        "--spec",
        path(&spec),
        "--seed",
        "5",
        "--problem-out",
        path(&p),
        "--benchmark-out",
        path(&b),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&run(&["solve", path(&p), path(&b), "--alpha", "1"]));
    assert_eq!(v["x_star"].as_array().unwrap().len(), 4);
    assert_ne!(v["status"], "iteration_limit");

    std::fs::write(&spec, r#"{"n": 4, "scenarioz": 10}"#).unwrap();
    let out = run(&[
        "generate",
        "inspection",
        "--spec",
        path(&spec),
        "--problem-out",
        path(&p),
        "--benchmark-out",
        path(&b),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
