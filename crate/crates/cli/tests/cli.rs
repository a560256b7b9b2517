//! End-to-end runs of the binary against the documented wire formats.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphonsig"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    // Table commands print CSV first; the summary JSON starts at the first
    // line opening an object.
    let start = text.find('{').expect("stdout contains JSON");
    serde_json::from_str(&text[start..]).expect("valid summary JSON")
}

fn write_fixture(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("x.json");
    let json = r#"{
        "m": 2,
        "r": 1.0,
        "graphon": [[0.9, 0.1], [0.1, 0.6]],
        "signal": [[0.5], [-0.5]]
    }"#;
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn bounds_reports_hand_value() {
    let out = run(&["bounds", "--epsilon", "1.0", "--c", "1.0"]);
    let v = stdout_json(&out);
    assert_eq!(v["log2_covering_number"], 25.0);
}

#[test]
fn genbound_reports_probability() {
    let out = run(&[
        "genbound", "--N", "1000000", "--C", "2", "--L", "1.0", "--p", "0.1", "--loss0", "0.0",
    ]);
    let v = stdout_json(&out);
    let p = v["probability"].as_f64().unwrap();
    assert!((p - (1.0 - 0.2 - 8.0 / 1e6)).abs() < 1e-9);
    assert!(v["rhs"].as_f64().unwrap() > 0.0);
}

#[test]
fn cutnorm_exact_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out = run(&["cutnorm", "--input", input.to_str().unwrap()]);
    let v = stdout_json(&out);
    // Nonnegative graphon: cut norm = mean = (0.9 + 0.1 + 0.1 + 0.6)/4.
    assert!((v["graphon_cut_norm"].as_f64().unwrap() - 0.425).abs() < 1e-12);
    assert!((v["signal_cut_norm"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(v["exact"], true);
}

#[test]
fn cutdist_exact_zero_against_self() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let path = input.to_str().unwrap();
    let out = run(&["cutdist", "--a", path, "--b", path, "--exact"]);
    let v = stdout_json(&out);
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);
    assert_eq!(v["permutation"], serde_json::json!([0, 1]));
}

#[test]
fn sample_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for out in [&out_a, &out_b] {
        let st = run(&[
            "sample",
            "--input",
            input.to_str().unwrap(),
            "--k",
            "20",
            "--mode",
            "simple",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(st.status.success());
    }
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );
    let g: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_a).unwrap()).unwrap();
    assert_eq!(g["n"], 20);
}

#[test]
fn regularize_emits_sbm_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out_path = dir.path().join("sbm.json");
    let out = run(&[
        "regularize",
        "--input",
        input.to_str().unwrap(),
        "--epsilon",
        "0.3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert!(v["residual_cut_norm"].as_f64().unwrap() <= 0.3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(report["approximation"]["graphon"].is_array());
    assert_eq!(report["partition_assignment"].as_array().unwrap().len(), 2);
}

#[test]
fn mpnn_run_round_trips_graph_and_graphon() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    let spec = r#"{
        "layers": [{
            "message": {"terms": [{
                "receiver": {"kind": "constant", "in_dim": 1, "value": [1.0]},
                "transmitter": {"kind": "identity", "dim": 1}
            }]},
            "update": null
        }],
        "readout": true
    }"#;
    std::fs::write(&spec_path, spec).unwrap();

    let graph_path = dir.path().join("g.json");
    std::fs::write(
        &graph_path,
        r#"{"n": 3, "r": 3.0,
            "adjacency": [[0,1,1],[1,0,1],[1,1,0]],
            "features": [[1.0],[2.0],[3.0]]}"#,
    )
    .unwrap();
    let out_path = dir.path().join("y.json");
    let out = run(&[
        "mpnn-run",
        "--spec",
        spec_path.to_str().unwrap(),
        "--input",
        graph_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "graph-signal");
    let y: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let f0 = y["features"][0][0].as_f64().unwrap();
    assert!((f0 - 5.0 / 3.0).abs() < 1e-12);

    let graphon_in = write_fixture(dir.path());
    let out2_path = dir.path().join("y2.json");
    let out2 = run(&[
        "mpnn-run",
        "--spec",
        spec_path.to_str().unwrap(),
        "--input",
        graphon_in.to_str().unwrap(),
        "--out",
        out2_path.to_str().unwrap(),
    ]);
    assert_eq!(stdout_json(&out2)["kind"], "graphon-signal");
}

#[test]
fn verify_commutation_passes_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    std::fs::write(
        &spec_path,
        r#"{"layers": [{
            "message": {"terms": [{
                "receiver": {"kind": "tanh_affine", "weight": [[0.7]], "bias": [0.1]},
                "transmitter": {"kind": "tanh_affine", "weight": [[-0.4]], "bias": [0.0]}
            }]},
            "update": {"kind": "affine", "weight": [[0.5, 0.5]], "bias": [0.0]}
        }], "readout": false}"#,
    )
    .unwrap();
    let out = run(&[
        "verify-commutation",
        "--spec",
        spec_path.to_str().unwrap(),
        "--n",
        "16",
        "--trials",
        "25",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["ok"], true);
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn verify_sampling_writes_pinned_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out_path = dir.path().join("report.csv");
    let out = run(&[
        "verify-sampling",
        "--input",
        input.to_str().unwrap(),
        "--k-grid",
        "8,32",
        "--trials",
        "6",
        "--seed",
        "4",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("k,trial,l1_upper,heuristic_estimate,paper_bound\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 6);
    assert!(out_path.with_extension("json").exists());

    // Same seed reruns byte-identically.
    let before = std::fs::read(&out_path).unwrap();
    let again = run(&[
        "verify-sampling",
        "--input",
        input.to_str().unwrap(),
        "--k-grid",
        "8,32",
        "--trials",
        "6",
        "--seed",
        "4",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    assert_eq!(std::fs::read(&out_path).unwrap(), before);
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["cutnorm"]); // missing --input
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_file_exits_one() {
    let out = run(&["cutnorm", "--input", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
