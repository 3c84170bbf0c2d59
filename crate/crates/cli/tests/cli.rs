use std::path::Path;
use std::process::{Command, Output};

use ergolab_cli::manifest::{read_manifest, replay_check};
use serde_json::{json, Value};

fn ergolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergolab")).args(args).env_remove("ERGOLAB_THREADS").output().expect("binary runs")
}

fn write_config(dir: &Path, cfg: &Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_into(sub: &str, cfg: &Value, out: &Path, extra: &[&str]) -> Output {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), cfg);
    let out = out.to_string_lossy().into_owned();
    let mut args = vec![sub, "--config", &config, "--out", &out];
    args.extend_from_slice(extra);
    ergolab(&args)
}

fn digests(dir: &Path) -> Vec<(String, String)> {
    read_manifest(dir)
        .unwrap()
        .outputs
        .into_iter()
        .map(|o| (o.file, o.sha256))
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn double_run(sub: &str, cfg: &Value, extra: &[&str]) -> Vec<(String, String)> {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_into(sub, cfg, a.path(), extra);
    assert!(ra.status.success(), "{}", stderr(&ra));
    let rb = run_into(sub, cfg, b.path(), &[extra, &["--threads", "1"]].concat());
    assert!(rb.status.success(), "{}", stderr(&rb));
    let (da, db) = (digests(a.path()), digests(b.path()));
    assert!(!da.is_empty());
    assert_eq!(da, db, "{sub} outputs differ between runs");
    for (file, _) in &da {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap());
    }
    da
}

fn probe_config() -> Value {
    json!({"kind": "interval-probe", "parameters": {"rank": 2, "radius": 6, "p": 0.4, "bigSize": 20}, "seeds": [1, 2, 3]})
}

fn coinduce_config(budget: u64) -> Value {
    json!({
        "kind": "coinduce",
        "parameters": {
            "classes": [[0, 1, 2, 3, 4, 5]],
            "beta": {"points": 6, "generators": [[1, 2, 0, 4, 5, 3]]},
            "alpha": {"points": 3, "generators": [[1, 2, 0]]},
            "budget": budget,
            "swapTest": true
        }
    })
}

#[test]
fn every_kind_is_byte_identical_across_runs_and_thread_counts() {
    double_run("percolate", &probe_config(), &[]);
    double_run(
        "sweep",
        &json!({"kind": "sweep", "parameters": {"window": {"type": "grid", "dims": [24, 24]}, "pGrid": {"lo": 0.3, "hi": 0.7, "step": 0.1}, "svg": true}, "seeds": {"from": 0, "to": 3}}),
        &[],
    );
    double_run(
        "spectrum",
        &json!({"kind": "spectral", "parameters": {"window": {"type": "tree", "degree": 3}, "radii": [2, 4], "isoSamples": 20}}),
        &[],
    );
    double_run("entropy", &json!({"kind": "entropy-ledger", "parameters": {"alphaWitness": 3, "schedule": [[3, 100]]}}), &[]);
    double_run("coinduce", &coinduce_config(1000), &[]);
    double_run("extend", &json!({"kind": "extension-suite", "parameters": {"instances": 12}, "seeds": [5]}), &[]);
}

#[test]
fn sweep_writes_the_plot_from_the_summary() {
    let out = tempfile::tempdir().unwrap();
    let cfg = json!({"kind": "sweep", "parameters": {"window": {"type": "grid", "dims": [16, 16]}, "pGrid": [0.2, 0.5, 0.8], "svg": true}, "seeds": [1]});
    let r = run_into("sweep", &cfg, out.path(), &[]);
    assert!(r.status.success(), "{}", stderr(&r));
    let files: Vec<String> = digests(out.path()).into_iter().map(|d| d.0).collect();
    assert_eq!(files, ["sweep.csv", "summary.json", "summary.csv", "sweep.svg"]);
    let csv = std::fs::read_to_string(out.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("p,seed,largestFrac,bigClusters,spanning\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn seed_offset_shifts_the_seed_ledger() {
    let out = tempfile::tempdir().unwrap();
    let r = run_into("percolate", &probe_config(), out.path(), &["--seed-offset", "10"]);
    assert!(r.status.success(), "{}", stderr(&r));
    let seeds: Vec<u64> = read_manifest(out.path()).unwrap().seed_ledger.iter().map(|t| t.seed).collect();
    assert_eq!(seeds, [11, 12, 13]);
    let probe = std::fs::read_to_string(out.path().join("probe.csv")).unwrap();
    assert!(probe.lines().nth(1).unwrap().starts_with("11,"));
}

#[test]
fn entropy_ledger_with_witness_three_prints_the_bound() {
    let out = tempfile::tempdir().unwrap();
    let cfg = json!({"kind": "entropy-ledger", "parameters": {"alphaWitness": 3}});
    let r = run_into("entropy", &cfg, out.path(), &[]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert!(String::from_utf8_lossy(&r.stdout).contains("2.609438"));
    let ledger: Value = serde_json::from_slice(&std::fs::read(out.path().join("ledger.json")).unwrap()).unwrap();
    assert_eq!(ledger["entries"][0]["rule"], "spectral-gap");
    assert!((ledger["bound"].as_f64().unwrap() - 2.609_437_912_434_100_4).abs() < 1e-12);
}

#[test]
fn replay_passes_untouched_and_names_edited_files() {
    let out = tempfile::tempdir().unwrap();
    let r = run_into("percolate", &probe_config(), out.path(), &[]);
    assert!(r.status.success(), "{}", stderr(&r));
    let dir = out.path().to_string_lossy().into_owned();
    assert!(ergolab(&["replay", "--out", &dir]).status.success());

    let csv = out.path().join("probe.csv");
    let mut text = std::fs::read_to_string(&csv).unwrap();
    text.push_str("99,0,0,0\n");
    std::fs::write(&csv, text).unwrap();
    let r = ergolab(&["replay", "--out", &dir]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("probe.csv"), "{}", stderr(&r));

    std::fs::remove_file(out.path().join("clusters.csv")).unwrap();
    let err = replay_check(&read_manifest(out.path()).unwrap(), out.path()).unwrap_err().to_string();
    assert!(err.contains("missing: clusters.csv") && err.contains("probe.csv"), "{err}");
}

#[test]
fn replay_of_absent_directory_reports_missing() {
    let out = tempfile::tempdir().unwrap();
    let gone = out.path().join("never-written");
    let r = ergolab(&["replay", "--out", &gone.to_string_lossy()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("missing"), "{}", stderr(&r));
}

#[test]
fn schema_violations_exit_with_code_two_and_the_field_path() {
    let out = tempfile::tempdir().unwrap();
    let cfg = json!({"kind": "interval-probe", "parameters": {"rank": 2, "radius": "six", "p": 0.4}});
    let r = run_into("percolate", &cfg, out.path(), &[]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("parameters.radius"), "{}", stderr(&r));

    let r = run_into("sweep", &probe_config(), out.path(), &[]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("`kind`"), "{}", stderr(&r));

    let cfg = json!({"kind": "coinduce", "parameters": {"classes": [[0, 1]], "beta": {"points": 2, "generators": [[0, 0]]}, "alpha": {"points": 1, "generators": [[0]]}}});
    let r = run_into("coinduce", &cfg, out.path(), &[]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("parameters.beta.generators[0]"), "{}", stderr(&r));
}

#[test]
fn budget_errors_exit_with_code_three() {
    let out = tempfile::tempdir().unwrap();
    let r = run_into("coinduce", &coinduce_config(10), out.path(), &[]);
    assert_eq!(r.status.code(), Some(3), "{}", stderr(&r));
    assert!(stderr(&r).contains("budget"), "{}", stderr(&r));
}

#[test]
fn missing_output_directory_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &probe_config());
    let r = ergolab(&["percolate", "--config", &config]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("outputDir"));
}

#[test]
fn coinduce_reports_verified_axioms() {
    let out = tempfile::tempdir().unwrap();
    let r = run_into("coinduce", &coinduce_config(1000), out.path(), &[]);
    assert!(r.status.success(), "{}", stderr(&r));
    let report: Value = serde_json::from_slice(&std::fs::read(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["choiceSystemOk"], true);
    assert_eq!(report["coinduced"]["extension"], true);
    assert_eq!(report["coinduced"]["expansionContainment"], true);
    // |X|·|Y|^N with N = 2 orbits per class
    assert_eq!(report["points"], 54);
}
