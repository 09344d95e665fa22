//! End-to-end contract tests for the `rffkim` binary: exit codes, JSON and
//! CSV shapes, store caching, resource guards, and thread-count determinism,
//! all on instances small enough to finish in seconds.

use std::path::Path;
use std::process::{Command, Output};

use rffkim::lattice::LatticeGraph;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rffkim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn help_version_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["exact-tv", "--help"])), 0);
    // Unknown subcommand and missing required arguments are usage errors.
    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(code(&run(&["sample", "--model", "rfim"])), 2);
    assert_eq!(code(&run(&["exact-tv", "--side", "2", "--epsilon", "x"])), 2);
}

#[test]
fn exact_tv_reports_distribution_summary() {
    let out = run(&[
        "exact-tv", "--side", "2", "--model", "rfim", "--temp", "2.0", "--epsilon", "0.5",
        "--seeds", "3",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["side"], 2);
    assert_eq!(doc["model"], "rfim");
    assert_eq!(doc["boundary"], "zero");
    assert_eq!(doc["seeds"], 3);
    let per_seed = doc["per_seed"].as_array().unwrap();
    assert_eq!(per_seed.len(), 3);
    let values: Vec<f64> = per_seed.iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(values.iter().all(|&v| (0.0..=1.0).contains(&v) && v > 0.0));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert!((doc["mean"].as_f64().unwrap() - mean).abs() < 1e-12);
    assert!(doc["min"].as_f64().unwrap() <= doc["median"].as_f64().unwrap());
    assert!(doc["median"].as_f64().unwrap() <= doc["max"].as_f64().unwrap());
    // The reference measure at zero strength is itself: every distance is 0.
    let zero = stdout_json(&run(&[
        "exact-tv", "--side", "2", "--model", "rfim", "--temp", "2.0", "--epsilon", "0",
        "--seeds", "2",
    ]));
    assert!(zero["per_seed"].as_array().unwrap().iter().all(|v| v.as_f64() == Some(0.0)));
    // Cluster-model runs echo the edge probability; out-of-range p is refused,
    // as is a wiring name from the wrong model family.
    let fk = stdout_json(&run(&[
        "exact-tv", "--side", "2", "--model", "rffk", "--epsilon", "0.4", "--seeds", "2",
        "--p", "0.5",
    ]));
    assert_eq!(fk["boundary"], "free");
    assert_eq!(fk["p"], 0.5);
    let bad_p = run(&[
        "exact-tv", "--side", "2", "--model", "rffk", "--epsilon", "0.4", "--p", "1.5",
    ]);
    assert_eq!(code(&bad_p), 2);
    let bad_bc = run(&[
        "exact-tv", "--side", "2", "--model", "rfim", "--epsilon", "0.4", "--boundary", "wired",
    ]);
    assert_eq!(code(&bad_bc), 2);
}

fn write_stats_input(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn stats_accepts_descriptors_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    // 2×2 rectangle: 4 vertices, 4 edges. All edges closed → 4 singletons;
    // all open → one 4-cluster.
    let closed = write_stats_input(
        dir.path(),
        "closed.json",
        r#"{"graph": {"kind": "rect", "width": 2, "height": 2}, "bits": "0000"}"#,
    );
    let doc = stdout_json(&run(&["stats", "--in", &closed]));
    assert_eq!(doc["kappa"], 4);
    assert_eq!(doc["max_size"], 1);
    assert_eq!(doc["sum_sq"], 4.0);
    assert_eq!(doc["boundary_size"], 0);
    assert_eq!(doc["f_value"], 0.0);
    let open = write_stats_input(
        dir.path(),
        "open.json",
        r#"{"graph": {"kind": "rect", "width": 2, "height": 2}, "bits": "1111"}"#,
    );
    let doc = stdout_json(&run(&["stats", "--in", &open]));
    assert_eq!(doc["kappa"], 1);
    assert_eq!(doc["max_size"], 4);
    assert_eq!(doc["sum_sq"], 16.0);
    // Box descriptor: radius 1 → 3×3 vertices, 12 edges. Wired closed
    // configuration still joins the 8 interior-boundary vertices through the
    // ghost, leaving the centre as the only singleton.
    let boxed = write_stats_input(
        dir.path(),
        "box.json",
        &format!(
            r#"{{"graph": {{"kind": "box", "n": 1}}, "bits": "{}"}}"#,
            "0".repeat(12)
        ),
    );
    let doc = stdout_json(&run(&["stats", "--in", &boxed, "--boundary", "wired"]));
    assert_eq!(doc["kappa"], 2);
    assert_eq!(doc["max_size"], 8);
    // A full vertex/edge dump round-trips through the same entry point.
    let graph = LatticeGraph::build_rect((0, 0), 3, 2).unwrap();
    let dump = write_stats_input(
        dir.path(),
        "dump.json",
        &format!(
            r#"{{"graph": {}, "bits": "{}"}}"#,
            graph.to_json(),
            "1".repeat(graph.edge_count())
        ),
    );
    let doc = stdout_json(&run(&["stats", "--in", &dump, "--epsilon", "0.5", "--seed", "3"]));
    assert_eq!(doc["kappa"], 1);
    assert_eq!(doc["max_size"], 6);
    assert!(doc["f_value"].as_f64().unwrap() > 0.0);
    // Malformed inputs are configuration errors.
    for (name, body) in [
        ("short.json", r#"{"graph": {"kind": "rect", "width": 2, "height": 2}, "bits": "00"}"#),
        ("alien.json", r#"{"graph": {"kind": "rect", "width": 2, "height": 2}, "bits": "01x0"}"#),
        ("nograph.json", r#"{"bits": "0000"}"#),
        ("badkind.json", r#"{"graph": {"kind": "hex", "n": 1}, "bits": "0000"}"#),
    ] {
        let path = write_stats_input(dir.path(), name, body);
        assert_eq!(code(&run(&["stats", "--in", &path])), 2, "{name} should be refused");
    }
    assert_eq!(code(&run(&["stats", "--in", "/nonexistent/file.json"])), 2);
}

#[test]
fn sample_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("records.csv");
    let args: Vec<String> = [
        "sample", "--model", "rfim", "--n", "1", "--temp", "2.0", "--epsilon", "0.3",
        "--boundary", "zero", "--sweeps", "6", "--thin", "2", "--replicas", "2",
        "--seed", "4", "--burn", "10",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain(["--out".to_string(), out_path.display().to_string()])
    .collect();
    let first = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "replica,sweep,kappa,max_cluster,sum_sq,sum_quartic,boundary_cluster,F_value,magnetization"
    );
    // 6 sweeps recorded every 2nd, 2 replicas → 3 × 2 rows.
    assert_eq!(lines.count(), 6);
    assert!(String::from_utf8_lossy(&first.stdout).contains("wrote 6 records"));
    // Re-running the identical request reproduces the file byte for byte.
    let bytes_first = std::fs::read(&out_path).unwrap();
    let second = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(second.status.success());
    assert_eq!(std::fs::read(&out_path).unwrap(), bytes_first);
    // The cluster model accepts wiring names and an explicit edge probability.
    let fk_path = dir.path().join("fk.csv");
    let fk = run(&[
        "sample", "--model", "rffk", "--n", "1", "--temp", "2.269", "--epsilon", "0.2",
        "--boundary", "wired", "--sweeps", "4", "--replicas", "1", "--seed", "9",
        "--burn", "10", "--p", "0.5", "--out", fk_path.to_str().unwrap(),
    ]);
    assert!(fk.status.success(), "{}", String::from_utf8_lossy(&fk.stderr));
    assert_eq!(std::fs::read_to_string(&fk_path).unwrap().lines().count(), 5);
}

const SWEEP_HEADER: &str = "T,N,epsilon,alpha,tv_mean,tv_se,z_hat,z_se,p2_exceed,p3_exceed";

fn tiny_sweep_args(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "sweep", "--model", "rfim", "--temp", "2.0", "--alpha", "0.5", "--n-list", "1,2",
        "--disorder-seeds", "2", "--burn", "20", "--thin", "1", "--samples", "10",
        "--replicas", "1", "--seed-base", "3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

#[test]
fn sweep_direct_output_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("rows.csv");
    let args = tiny_sweep_args(&["--out", csv_path.to_str().unwrap(), "--no-plot"]);
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_HEADER);
    assert_eq!(lines.count(), 2, "one row per box radius");
    assert!(!dir.path().join("rows.svg").exists(), "--no-plot must skip the figure");
    // Without --no-plot a sibling SVG appears next to the CSV.
    let plotted = dir.path().join("plotted.csv");
    let args = tiny_sweep_args(&["--out", plotted.to_str().unwrap()]);
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("plotted.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.contains("<svg"));
    // A sweep with neither --out nor --store is a configuration error.
    let neither = tiny_sweep_args(&[]);
    assert_eq!(code(&run(&neither.iter().map(|s| s.as_str()).collect::<Vec<_>>())), 2);
}

#[test]
fn sweep_store_caches_by_content_key() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let args = tiny_sweep_args(&["--store", store.to_str().unwrap()]);
    let argv: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let first = stdout_json(&run(&argv));
    assert_eq!(first["cached"], false);
    let key = first["key"].as_str().unwrap().to_string();
    assert!(!key.is_empty());
    let files: Vec<&str> =
        first["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(files.iter().any(|f| f.ends_with(".csv")), "store lists a CSV: {files:?}");
    let run_dir = Path::new(first["dir"].as_str().unwrap()).to_path_buf();
    assert!(run_dir.join("manifest.json").exists());
    // Identical request → same key, served from the store.
    let second = stdout_json(&run(&argv));
    assert_eq!(second["cached"], true);
    assert_eq!(second["key"].as_str().unwrap(), key);
    // Any parameter change produces a different key.
    let tweaked = tiny_sweep_args(&["--store", store.to_str().unwrap(), "--theta", "1.5"]);
    let third = stdout_json(&run(&tweaked.iter().map(|s| s.as_str()).collect::<Vec<_>>()));
    assert_eq!(third["cached"], false);
    assert_ne!(third["key"].as_str().unwrap(), key);
}

#[test]
fn sweep_guard_refuses_oversized_requests() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let out = run(&[
        "sweep", "--model", "rfim", "--temp", "2.0", "--alpha", "0.5", "--n-list", "8",
        "--disorder-seeds", "1000", "--samples", "100000000", "--burn", "1",
        "--store", store.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("max_total_sweeps"), "guard names its limit: {err}");
}

#[test]
fn ldp_tail_json_and_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("tail.csv");
    let out = run(&[
        "ldp-tail", "--p", "0.5", "--n-list", "2", "--samples", "4", "--seed", "7",
        "--burn", "20", "--thin", "1", "--out", csv_path.to_str().unwrap(),
    ]);
    let doc = stdout_json(&out);
    let rows = doc.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["n"], 2);
    assert_eq!(rows[0]["samples"], 4);
    assert!(rows[0]["median_max"].as_f64().unwrap() >= 1.0);
    assert!(rows[0]["median_ratio"].as_f64().unwrap() > 0.0);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,samples,median_max,median_ratio,median_m_ratio,median_sum_sq_per_area,\
         median_second_max,tail_1,tail_1_25,tail_1_5,tail_2,subcritical_exceedance,\
         boundary_cover_frequency"
    );
    assert_eq!(lines.count(), 1);
    // p outside (0,1) is refused.
    assert_eq!(code(&run(&["ldp-tail", "--p", "0", "--n-list", "2", "--samples", "2"])), 2);
}

#[test]
fn influence_and_correlation_length_json() {
    let out = run(&[
        "boundary-influence", "--side", "2", "--temp", "2.27", "--epsilon", "0.5",
        "--seeds", "2", "--method", "exact",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["method"], "exact-enumeration");
    assert_eq!(doc["per_seed"].as_array().unwrap().len(), 2);
    let mean = doc["mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mean));
    assert!(doc["std_error"].as_f64().unwrap() >= 0.0);

    let out = run(&[
        "corr-length", "--temp", "2.27", "--epsilon", "0.5", "--sides", "2,3",
        "--seeds", "2", "--method", "exact",
    ]);
    let doc = stdout_json(&out);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["side"], 2);
    assert_eq!(rows[1]["side"], 3);
    for row in rows {
        assert_eq!(row["with_field"]["method"], "exact-enumeration");
        assert!(row["zero_field"]["mean"].as_f64().unwrap() >= 0.0);
    }
    assert!(doc.get("psi_star").is_some(), "scan reports the halving side or null");
    // Sides must be strictly increasing.
    assert_eq!(
        code(&run(&[
            "corr-length", "--temp", "2.27", "--epsilon", "0.5", "--sides", "3,2",
            "--seeds", "1", "--method", "exact",
        ])),
        2
    );
}

#[test]
fn plot_renders_svg_and_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("rows.csv");
    let args = tiny_sweep_args(&["--out", csv_path.to_str().unwrap(), "--no-plot"]);
    assert!(run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>()).status.success());
    let svg_path = dir.path().join("figure.svg");
    let out = run(&["plot", "--in", csv_path.to_str().unwrap(), "--out",
        svg_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.contains("<svg"));
    assert!(svg.contains("circle") || svg.contains("polyline"), "figure draws the series");
    // Rendering is deterministic: a second pass writes identical bytes.
    let again = dir.path().join("figure2.svg");
    assert!(run(&["plot", "--in", csv_path.to_str().unwrap(), "--out",
        again.to_str().unwrap()])
    .status
    .success());
    assert_eq!(std::fs::read(&svg_path).unwrap(), std::fs::read(&again).unwrap());
    // A CSV without the required columns is a configuration error.
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    let out = run(&["plot", "--in", bad.to_str().unwrap(), "--out",
        dir.path().join("bad.svg").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column"));
}

#[test]
fn thread_count_env_is_validated_and_immaterial() {
    let argv = [
        "exact-tv", "--side", "2", "--model", "rffk", "--temp", "2.1", "--epsilon", "0.6",
        "--seeds", "4",
    ];
    let baseline = bin().args(argv).env("RFFKIM_THREADS", "1").output().unwrap();
    assert!(baseline.status.success());
    let multi = bin().args(argv).env("RFFKIM_THREADS", "4").output().unwrap();
    assert!(multi.status.success());
    assert_eq!(baseline.stdout, multi.stdout, "results do not depend on the pool size");
    for bad in ["abc", "0", "-2", ""] {
        let out = bin().args(argv).env("RFFKIM_THREADS", bad).output().unwrap();
        assert_eq!(code(&out), 2, "RFFKIM_THREADS={bad:?} must be refused");
    }
}
