use std::fs;
use std::path::Path;
use std::process::Command;

use gkc_cli::{
    cmd_compare, cmd_curate, cmd_embed, cmd_eval, cmd_profiles, cmd_synth, tree_digests, CliError, Overrides, Workspace,
};
use gkc_core::eval::Metric;
use gkc_core::features::Strategy;
use serde_json::Value;

const SMALL: &str = r#"
models = ["GradBoost"]

[cohort.synthetic]
n_patients = 60

[embedder]
dim = 64

[cv]
repeats = 2

[[grids.GradBoost]]
kind = "GradBoost"
n_rounds = 20
learning_rate = 0.1
max_depth = 2
l2_leaf_reg = 1.0
min_child_weight = 1.0
"#;

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path
}

fn gkc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gkc")).args(args).output().unwrap()
}

#[test]
fn stage_out_of_order_names_the_missing_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = write_config(tmp.path());
    let o = gkc(&["--out", out.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "eval"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["status"], "error");
    assert_eq!(err["kind"], "missing_artifact");
    assert_eq!(err["run_stage"], "synth");

    let o = gkc(&["--out", out.to_str().unwrap(), "synth"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["status"], "ok");
    let o = gkc(&["--out", out.to_str().unwrap(), "curate"]);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["run_stage"], "profiles");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[cv]\nrepeets = 3\n").unwrap();
    let o = gkc(&["--out", tmp.path().join("run").to_str().unwrap(), "--config", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["kind"], "config");
}

#[test]
fn concurrent_runs_on_one_directory_are_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let held = Workspace::open(tmp.path(), Some(&cfg), &Overrides::default()).unwrap();
    let second = Workspace::open(tmp.path(), None, &Overrides::default());
    assert!(matches!(second, Err(CliError::Locked(_))));
    drop(held);
    assert!(Workspace::open(tmp.path(), None, &Overrides::default()).is_ok());
}

fn run_stages(out: &Path, cfg: &Path) -> (usize, usize) {
    let ws = Workspace::open(out, Some(cfg), &Overrides::default()).unwrap();
    cmd_synth(&ws).unwrap();
    cmd_profiles(&ws).unwrap();
    let curate = cmd_curate(&ws).unwrap();
    let embed = cmd_embed(&ws).unwrap();
    cmd_eval(&ws, true).unwrap();
    (curate.provider_calls, embed.provider_calls)
}

#[test]
fn pipeline_is_reproducible_and_cached() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (curate_calls, embed_calls) = run_stages(&a, &cfg);
    assert!(curate_calls > 0 && curate_calls <= 180);
    assert!(embed_calls > 0);
    run_stages(&b, &cfg);
    for sub in ["cohort", "profiles", "reports", "embeddings", "matrices", "results"] {
        let (da, db) = (tree_digests(&a.join(sub)).unwrap(), tree_digests(&b.join(sub)).unwrap());
        assert!(!da.is_empty(), "{sub} is empty");
        assert_eq!(da, db, "{sub} differs");
    }

    let audit: Value = serde_json::from_str(&fs::read_to_string(a.join("results/audit.json")).unwrap()).unwrap();
    let folds: Vec<&Value> = match &audit {
        Value::Array(v) => v.iter().collect(),
        Value::Object(m) => m.values().flat_map(|v| v.as_array().unwrap()).collect(),
        _ => panic!("unexpected audit layout"),
    };
    assert_eq!(folds.len(), 3 * 2 * 5);
    assert!(folds.iter().all(|f| f["leaked_rows"].as_array().unwrap().is_empty()));

    let ws = Workspace::open(&a, None, &Overrides::default()).unwrap();
    assert_eq!(cmd_curate(&ws).unwrap().provider_calls, 0);
    assert_eq!(cmd_embed(&ws).unwrap().provider_calls, 0);
    let (report, table) = cmd_compare(&ws, &[Strategy::ENF, Strategy::GKC], Metric::AucRoc).unwrap();
    assert_eq!(report.status, "ok");
    assert!(table.contains("GKC"));
    assert!(a.join("results/comparison.auc_roc.tsv").exists());
}
