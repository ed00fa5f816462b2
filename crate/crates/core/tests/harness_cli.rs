use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use tactile_transfer::harness::experiment::{mean_curves, ArmResult, TrialResult};
use tactile_transfer::harness::report::curves_csv;
use tactile_transfer::harness::{load_config, parse_config, read_result, report, run_experiment, summarize, RunResult};
use tactile_transfer::transfer::{SelectionMethod, TransferDecision};

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tactile-lab"))
}

fn arm(mode: &str, curve: &[f64]) -> ArmResult {
    ArmResult {
        mode: mode.into(),
        x: (1..=curve.len()).collect(),
        curve: curve.to_vec(),
        initial_accuracy: Some(curve[0] - 0.1),
        stopped_early: false,
        log: Vec::new(),
        final_decisions: Vec::new(),
        final_weights: vec![("P1".into(), 11, vec![0.25, 0.75])],
        error: None,
    }
}

fn fixture() -> RunResult {
    let config = parse_config(
        r#"{"schema_version": 1, "catalog": "c.json", "prior_objects": [1],
            "new_objects": [11, 12], "trials": 2, "seeds": [4, 9], "budget": 3, "mode": "Transfer"}"#,
    )
    .unwrap();
    let mut t4 = arm("Transfer", &[0.5, 0.625, 0.75]);
    t4.log = vec![tactile_transfer::active::LoopEntry {
        iteration: 1,
        object: 11,
        action: "P1".into(),
        branch: tactile_transfer::active::Branch::Exploit,
        uncertainty: vec![vec![0.5, 0.25]],
        decisions: vec![
            TransferDecision {
                action: "P1".into(),
                new_object: 11,
                selected: Some(1),
                rho: 0.75,
                method: SelectionMethod::ModelPrediction,
                mean_prediction: 0.75,
                scores: vec![(1, 0.75)],
            },
            TransferDecision {
                action: "P1".into(),
                new_object: 12,
                selected: None,
                rho: 0.0,
                method: SelectionMethod::ModelPrediction,
                mean_prediction: 0.5,
                scores: vec![(1, 0.5)],
            },
        ],
        weights: vec![(11, vec![0.25, 0.75]), (12, vec![0.5, 0.5])],
        accuracy: 0.5,
    }];
    let trials = vec![
        TrialResult {
            seed: 4,
            arms: vec![t4, arm("NoTransfer", &[0.25, 0.5, 0.5])],
            error: None,
        },
        TrialResult {
            seed: 9,
            arms: vec![arm("Transfer", &[0.75, 0.875, 1.0]), arm("NoTransfer", &[0.5, 0.5, 0.75])],
            error: None,
        },
    ];
    RunResult {
        config_hash: config.hash(),
        config,
        mean_curves: mean_curves(&trials),
        trials,
        failures: 0,
        wall_clock_s: 1.5,
    }
}

#[test]
fn curves_csv_golden() {
    let csv = curves_csv(&fixture()).unwrap();
    assert_eq!(csv, include_str!("golden/curves.csv"));
}

#[test]
fn summary_golden() {
    let text = serde_json::to_string_pretty(&summarize(&fixture())).unwrap() + "\n";
    assert_eq!(text, include_str!("golden/summary.json"));
}

#[test]
fn mean_curve_and_one_shot() {
    let r = fixture();
    assert_eq!(r.mean_curves["Transfer"], vec![0.625, 0.75, 0.875]);
    assert_eq!(r.mean_curves["NoTransfer"], vec![0.375, 0.5, 0.625]);
    let s = summarize(&r);
    assert_eq!(s.arms["Transfer"].one_shot_accuracy, Some(r.mean_curves["Transfer"][0]));
    assert_eq!(s.decisions["Transfer"].none, 1);
    assert_eq!(s.decisions["Transfer"].mean_rho_selected, Some(0.75));
}

#[test]
fn failed_trials_are_left_out_of_means() {
    let mut r = fixture();
    r.trials[1].arms[0].error = Some("boom".into());
    let means = mean_curves(&r.trials);
    assert_eq!(means["Transfer"], vec![0.5, 0.625, 0.75]);
    assert_eq!(means["NoTransfer"], vec![0.25, 0.5, 0.5]);
}

#[test]
fn report_is_byte_stable() {
    let r = fixture();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    report(&r, a.path()).unwrap();
    report(&r, b.path()).unwrap();
    for f in ["curves.csv", "summary.json", "config.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 2);
}

#[test]
fn report_rejects_unwritable_directory() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    assert!(report(&fixture(), &file.join("sub")).is_err());
}

#[test]
fn no_transfer_run_has_no_decisions() {
    let mut loaded = load_config(manifest("data/acceptance/small.json")).unwrap();
    loaded.config.mode = tactile_transfer::harness::Mode::NoTransfer;
    loaded.config.prior_objects.clear();
    loaded.config.trials = 1;
    loaded.config.seeds = vec![2];
    loaded.config.budget = 2;
    let r = run_experiment(&loaded, 1).unwrap();
    assert_eq!(r.failures, 0);
    assert_eq!(r.trials[0].arms.len(), 1);
    let arm = &r.trials[0].arms[0];
    assert_eq!(arm.mode, "NoTransfer");
    assert!(arm.final_decisions.is_empty());
    assert!(arm.log.iter().all(|e| e.decisions.is_empty()));
    assert!(summarize(&r).decisions.is_empty());
}

#[test]
fn transfer_and_baseline_share_initial_observations() {
    let mut loaded = load_config(manifest("data/acceptance/small.json")).unwrap();
    loaded.config.trials = 1;
    loaded.config.seeds = vec![3];
    loaded.config.budget = 4;
    loaded.config.epsilon_explore = 1.0;
    let r = run_experiment(&loaded, 1).unwrap();
    let arms = &r.trials[0].arms;
    // with ε = 1 both arms explore every step from one stream
    let picks = |a: &ArmResult| a.log.iter().map(|e| (e.object, e.action.clone())).collect::<Vec<_>>();
    assert_eq!(picks(&arms[0]), picks(&arms[1]));
}

#[test]
fn cli_run_report_and_validate() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", manifest("data/acceptance/small.json").to_str().unwrap(), "--seed-offset", "10", "--jobs", "2", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());
    let r = read_result(&out.path().join("result.json")).unwrap();
    assert_eq!(r.config.seeds, vec![15, 16]);
    assert_eq!(r.trials.iter().map(|t| t.seed).collect::<Vec<_>>(), vec![15, 16]);

    let again = tempfile::tempdir().unwrap();
    let status = bin().arg("report").arg(out.path().join("result.json")).arg("--out").arg(again.path()).status().unwrap();
    assert!(status.success());
    for f in ["curves.csv", "summary.json", "config.json"] {
        assert_eq!(std::fs::read(out.path().join(f)).unwrap(), std::fs::read(again.path().join(f)).unwrap());
    }

    let v = bin().args(["validate", manifest("data/acceptance/related_priors.json").to_str().unwrap()]).output().unwrap();
    assert!(v.status.success());
    let loaded = load_config(manifest("data/acceptance/related_priors.json")).unwrap();
    assert_eq!(String::from_utf8(v.stdout).unwrap().trim(), format!("ok {}", loaded.config.hash()));
}

#[test]
fn cli_config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(manifest("data/acceptance/small.json")).unwrap();
    let catalog = manifest("data/desk_catalog.json");
    let text = text.replace("../desk_catalog.json", catalog.to_str().unwrap());
    let cases = [
        ("unknown_key.json", text.replace("\"budget\"", "\"bogus\": 1, \"budget\"")),
        ("overlap.json", text.replace("\"prior_objects\": [\n    1,", "\"prior_objects\": [\n    11,")),
        ("missing_object.json", text.replace("15\n", "99\n")),
        ("not_json.json", "{".to_string()),
    ];
    for (name, body) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let status = bin().arg("validate").arg(&path).status().unwrap();
        assert_eq!(status.code(), Some(2), "{name}");
    }
    let status = bin().args(["run", "/nonexistent/config.json"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn cli_testset_and_groups() {
    let out = bin()
        .args(["testset", manifest("data/acceptance/small.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("test set size per trial: 650"), "{stdout}");

    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["gen-groups", manifest("data/acceptance/small.json").to_str().unwrap(), "--count", "4", "--seed", "3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let mut seen = BTreeMap::new();
    for i in 0..4 {
        let loaded = load_config(dir.path().join(format!("group_{i:02}.json"))).unwrap();
        assert_eq!(loaded.config.prior_objects.len(), 3);
        seen.insert(loaded.config.prior_objects.clone(), ());
    }
    assert!(seen.len() > 1);
}
