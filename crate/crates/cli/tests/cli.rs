use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use csskit::covest::{read_cov_csv, sample_cov, write_cov_csv, write_data_csv, DataMatrix};
use csskit::search::{exhaustive, SearchConfig};
use csskit::simlab::{preset_a1, sample, FactorLaw, Noise, ScenarioSpec};
use csskit::{Criterion, CriterionKind, IndexSet, Matrix, SymMatrix};

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csskit"))
        .args(args)
        .current_dir(dir)
        .env_remove("CSSKIT_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_cov(path: &Path, sigma: &SymMatrix<f64>) {
    let mut buf = Vec::new();
    write_cov_csv(&mut buf, sigma, None).unwrap();
    fs::write(path, buf).unwrap();
}

fn write_data(path: &Path, x: &DataMatrix<f64>) {
    let mut buf = Vec::new();
    write_data_csv(&mut buf, x, None).unwrap();
    fs::write(path, buf).unwrap();
}

// Field `name` of every CSV row.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let at = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(at).unwrap().to_string()).collect()
}

fn members(field: &str) -> Vec<usize> {
    let mut v: Vec<usize> = field.split(';').map(|t| t.parse().unwrap()).collect();
    v.sort();
    v
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn a1_data(dir: &Path, name: &str, mar_prob: f64, seed: u64) -> PathBuf {
    let path = dir.join(name);
    write_data(&path, &sample(&preset_a1(mar_prob), 200, seed).unwrap());
    path
}

#[test]
fn select_identity_picks_first_variable() {
    let dir = workdir("select_identity");
    write_cov(&dir.join("id3.csv"), &SymMatrix::identity(3));
    let o = run(&dir, &["select", "--cov", "id3.csv", "--k", "1", "--method", "greedy"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(column(&out, "subset"), ["0"]);
    assert_eq!(column(&out, "objective"), ["2.0"]);
}

#[test]
fn select_swap_recovers_a1_subset() {
    let dir = workdir("select_a1");
    a1_data(&dir, "a1_sample.csv", 0.0, 3);
    let o = run(
        &dir,
        &["select", "--data", "a1_sample.csv", "--k", "4", "--method", "swap", "--restarts", "10", "--seed", "7", "--out", "sel.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = fs::read_to_string(dir.join("sel.csv")).unwrap();
    assert_eq!(members(&column(&out, "subset")[0]), [0, 1, 2, 3]);
    let manifest = json(&dir.join("sel.csv.manifest.json"));
    assert_eq!(manifest["schema"], "csskit.manifest.v1");
    assert_eq!(manifest["seeds"]["seed"], 7);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn select_exhaustive_matches_library() {
    let dir = workdir("select_exhaustive");
    let x = Matrix::from_fn(12, 7, |i, j| (((i * 7 + j * 3) % 11) as f64 - 5.0) / (1.0 + j as f64));
    let sigma = sample_cov(&DataMatrix::from_matrix(&x).unwrap()).unwrap();
    write_cov(&dir.join("p7.csv"), &sigma);
    let o = run(&dir, &["select", "--cov", "p7.csv", "--k", "3", "--method", "exhaustive"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let written = read_cov_csv::<f64, _>(fs::read(dir.join("p7.csv")).unwrap().as_slice(), false).unwrap();
    let lib = exhaustive(&written, &SearchConfig::new(Criterion::new(CriterionKind::CssTrace, 7, 3).unwrap())).unwrap();
    let expected: Vec<String> = lib.subset.iter().map(|i| i.to_string()).collect();
    assert_eq!(column(&out, "subset"), [expected.join(";")]);
    let objective: f64 = column(&out, "objective")[0].parse().unwrap();
    assert_eq!(objective, lib.objective.to_scalar());
}

#[test]
fn select_range_emits_r2_trace() {
    let dir = workdir("select_range");
    let sigma = SymMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0]);
    write_cov(&dir.join("d.csv"), &sigma);
    let o = run(&dir, &["select", "--cov", "d.csv", "--k-range", "1..4", "--standardize"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let r2: Vec<f64> = column(&out, "avg_r2").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(r2, [0.25, 0.5, 0.75, 1.0]);
    let pca: Vec<f64> = column(&out, "pca_r2").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(pca, [0.25, 0.5, 0.75, 1.0]);
}

#[test]
fn bad_flags_exit_with_two() {
    let dir = workdir("bad_flags");
    write_cov(&dir.join("id3.csv"), &SymMatrix::identity(3));
    let cases: [&[&str]; 6] = [
        &["select", "--cov", "id3.csv", "--k", "1", "--method", "swap"],
        &["select", "--cov", "id3.csv", "--k", "4"],
        &["select", "--cov", "id3.csv", "--k", "1", "--criterion", "nope"],
        &["select", "--k", "1"],
        &["select", "--cov", "missing.csv", "--k", "1"],
        &["simulate", "--scenario", "unknown", "--seed", "1"],
    ];
    for args in cases {
        let o = run(&dir, args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_csskit"))
        .args(["select", "--cov", "id3.csv", "--k", "1"])
        .current_dir(&dir)
        .env("CSSKIT_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = workdir("numerical");
    fs::write(dir.join("indef.csv"), "1,2\n2,1\n").unwrap();
    let o = run(&dir, &["select", "--cov", "indef.csv", "--k", "1"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("symmat"), "{}", stderr(&o));

    fs::write(dir.join("gap.csv"), "1,\n2,\n3,\n,1\n,2\n,4\n").unwrap();
    let o = run(&dir, &["covest", "--data", "gap.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("variables 0 and 1"), "{}", stderr(&o));
}

#[test]
fn covest_complete_data_equals_sample_cov() {
    let dir = workdir("covest_complete");
    let x = sample(&preset_a1(0.0), 50, 4).unwrap();
    write_data(&dir.join("x.csv"), &x);
    let o = run(&dir, &["covest", "--data", "x.csv", "--missing", "none", "--out", "cov.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let got = read_cov_csv::<f64, _>(fs::read(dir.join("cov.csv")).unwrap().as_slice(), false).unwrap();
    let written = csskit::covest::read_data_csv::<f64, _>(fs::read(dir.join("x.csv")).unwrap().as_slice(), false).unwrap();
    assert_eq!(got, sample_cov(&written).unwrap());
    assert!(dir.join("cov.csv.diagnostics.json").exists());

    let o = run(&dir, &["covest", "--data", "x.csv", "--standardize", "--out", "cor.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cor = read_cov_csv::<f64, _>(fs::read(dir.join("cor.csv")).unwrap().as_slice(), false).unwrap();
    assert!(cor.diag().iter().all(|&d| d == 1.0));
}

#[test]
fn covest_masked_sample_is_psd() {
    let dir = workdir("covest_masked");
    a1_data(&dir, "masked.csv", 0.05, 8);
    let o = run(&dir, &["covest", "--data", "masked.csv", "--out", "cov.csv", "--diagnostics", "diag.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sigma = read_cov_csv::<f64, _>(fs::read(dir.join("cov.csv")).unwrap().as_slice(), false).unwrap();
    assert!(sigma.eigen().unwrap().min_value() >= -1e-10);
    let diag = json(&dir.join("diag.json"));
    assert_eq!(diag["schema"], "csskit.covest-diagnostics.v1");
    assert!(diag["missing_entries"].as_u64().unwrap() > 0);
    assert_eq!(diag["pair_counts"].as_array().unwrap().len(), 20);
}

#[test]
fn covest_keeps_header_names() {
    let dir = workdir("covest_header");
    fs::write(dir.join("h.csv"), "a,b\n1,2\n2,1\n3,5\n").unwrap();
    let o = run(&dir, &["covest", "--data", "h.csv", "--header"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("a,b\n"));
}

#[test]
fn choose_k_on_diagonal_data_selects_nothing() {
    let dir = workdir("choose_k_diag");
    let spec = ScenarioSpec {
        name: "independent".into(),
        p: 6,
        subset: IndexSet::empty(),
        sigma_s: SymMatrix::zeros(0),
        w: Matrix::zeros(6, 0),
        noise: Noise::Diagonal {
            d: vec![1.0, 2.0, 0.5, 4.0, 1.5, 3.0],
            laws: vec![FactorLaw::Gaussian; 6],
        },
        mu: vec![0.0; 6],
        mar_prob: 0.0,
    };
    write_data(&dir.join("x.csv"), &sample(&spec, 200, 12).unwrap());
    let o = run(&dir, &["choose-k", "--data", "x.csv", "--seed", "1", "--mc-samples", "20000", "--out", "r.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("chosen k = 0"));
    let report = json(&dir.join("r.json"));
    assert_eq!(report["schema"], "csskit.choose-k.v1");
    assert_eq!(report["chosen_k"], 0);
}

#[test]
fn choose_k_on_a1_data_finds_four_or_five() {
    let dir = workdir("choose_k_a1");
    a1_data(&dir, "a1.csv", 0.0, 21);
    let o = run(&dir, &["choose-k", "--data", "a1.csv", "--model", "pcss", "--seed", "2", "--mc-samples", "20000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let k = report["chosen_k"].as_u64().unwrap();
    assert!(k == 4 || k == 5, "chosen {k}");
    assert_eq!(report["records"].as_array().unwrap().len() as u64, k + 1);
}

#[test]
fn choose_k_needs_more_samples_than_variables() {
    let dir = workdir("choose_k_small");
    fs::write(dir.join("x.csv"), "1,2,3\n2,1,0\n0,4,1\n").unwrap();
    let o = run(&dir, &["choose-k", "--data", "x.csv", "--seed", "1"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("sizesel"), "{}", stderr(&o));
}

#[test]
fn simulate_single_trial_is_one_deterministic_row() {
    let dir = workdir("simulate_one");
    let args = ["simulate", "--scenario", "missing-a1", "--trials", "1", "--n", "200", "--seed", "5"];
    let a = run(&dir, &args);
    let b = run(&dir, &args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(stdout(&a).lines().count(), 2);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_missing_a1_recovers_truth() {
    let dir = workdir("simulate_a1");
    let o = run(
        &dir,
        &["simulate", "--scenario", "missing-a1", "--trials", "100", "--n", "200", "--seed", "1", "--out", "a1.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = json(&dir.join("a1.csv.summary.json"));
    let rate = summary["methods"][0]["exact_recovery_rate"].as_f64().unwrap();
    assert_eq!(summary["methods"][0]["method"], "swap");
    assert!(rate >= 0.95, "recovery {rate}");
    assert!(dir.join("a1.csv.manifest.json").exists());
}

#[test]
fn simulate_sizesel_high_signal_and_reproducible_outputs() {
    let dir = workdir("simulate_a2");
    let args = |out: &'static str| {
        [
            "simulate", "--scenario", "sizesel-a2", "--signal", "0.254", "--trials", "4", "--seed", "3", "--mc-samples",
            "20000", "--out", out,
        ]
    };
    let o = run(&dir, &args("a.csv"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    run(&dir, &args("b.csv"));
    let a = fs::read(dir.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.join("b.csv")).unwrap());
    assert_eq!(fs::read(dir.join("a.csv.summary.json")).unwrap(), fs::read(dir.join("b.csv.summary.json")).unwrap());
    let text = String::from_utf8(a).unwrap();
    for k in column(&text, "k_hat") {
        let k: usize = k.parse().unwrap();
        assert!((20..=22).contains(&k), "k_hat {k}");
    }
    let manifest = |p: &str| {
        let mut m = json(&dir.join(p));
        m.as_object_mut().unwrap().remove("timings");
        m["flags"].as_object_mut().unwrap().remove("out");
        m.as_object_mut().unwrap().remove("outputs");
        m
    };
    assert_eq!(manifest("a.csv.manifest.json"), manifest("b.csv.manifest.json"));
}

#[test]
fn select_reports_selection_order() {
    let dir = workdir("selection_order");
    write_cov(&dir.join("d.csv"), &SymMatrix::from_diag(&[1.0, 3.0, 2.0]));
    let o = run(&dir, &["select", "--cov", "d.csv", "--k", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(column(&stdout(&o), "subset"), ["1;2"]);
}

// Keys listed as required by a documented schema, including the branch
// selected by `scenario` when the schema has alternatives.
fn required_keys(schema: &serde_json::Value, doc: &serde_json::Value) -> Vec<String> {
    let names = |v: &serde_json::Value| -> Vec<String> {
        v.as_array().map(|a| a.iter().map(|s| s.as_str().unwrap().to_string()).collect()).unwrap_or_default()
    };
    let mut keys = names(&schema["required"]);
    for alt in schema["oneOf"].as_array().into_iter().flatten() {
        if alt["properties"]["scenario"]["const"] == doc["scenario"] {
            keys.extend(names(&alt["required"]));
        }
    }
    keys
}

fn assert_matches_schema(schema_file: &str, doc_path: &Path) {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(schema_file);
    let schema = json(&schema_path);
    let doc = json(doc_path);
    assert_eq!(doc["schema"], schema["$id"], "{}", doc_path.display());
    for key in required_keys(&schema, &doc) {
        assert!(doc.get(&key).is_some(), "{} lacks {key}", doc_path.display());
    }
}

#[test]
fn outputs_follow_documented_schemas() {
    let dir = workdir("schemas");
    let data = a1_data(&dir, "a1.csv", 0.05, 8);
    let data = data.to_str().unwrap();
    let runs: [&[&str]; 5] = [
        &["select", "--data", data, "--k", "4", "--format", "json", "--out", "sel.json"],
        &["covest", "--data", data, "--out", "cov.csv"],
        &["choose-k", "--data", data, "--seed", "2", "--mc-samples", "1000", "--out", "ck.json"],
        &["simulate", "--scenario", "missing-a1", "--trials", "2", "--seed", "3", "--out", "a1.sim.csv"],
        &["simulate", "--scenario", "sizesel-a2", "--trials", "1", "--seed", "4", "--mc-samples", "1000", "--out", "a2.sim.csv"],
    ];
    for args in runs {
        let o = run(&dir, args);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }
    assert_matches_schema("select.v1.json", &dir.join("sel.json"));
    assert_matches_schema("covest-diagnostics.v1.json", &dir.join("cov.csv.diagnostics.json"));
    assert_matches_schema("choose-k.v1.json", &dir.join("ck.json"));
    assert_matches_schema("simulate.v1.json", &dir.join("a1.sim.csv.summary.json"));
    assert_matches_schema("simulate.v1.json", &dir.join("a2.sim.csv.summary.json"));
    for out in ["sel.json", "cov.csv", "ck.json", "a1.sim.csv", "a2.sim.csv"] {
        assert_matches_schema("manifest.v1.json", &dir.join(format!("{out}.manifest.json")));
    }
}
