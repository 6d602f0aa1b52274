use std::path::Path;

use modefuse::baseline::MemberSpec;
use modefuse::harness::synthetic::{write_synthetic_dataset, SyntheticSpec};
use modefuse::harness::{
    load_manifest, make_splits, read_predictions, render_table, run_external, run_internal,
    write_predictions, EvalReport, ExternalConfig, PredictionRecord, RunConfig, SplitParams,
    SplitPlan,
};
use modefuse::{ClassLabel, Error, ErrorCategory, LabelSpace, Parallelism};

fn dataset(dir: &Path) -> std::path::PathBuf {
    let spec = SyntheticSpec {
        negatives: 15,
        positives: 15,
        side: 48,
        seed: 11,
        ..Default::default()
    };
    write_synthetic_dataset(dir, &spec).unwrap()
}

fn config() -> RunConfig {
    RunConfig {
        committee: vec![
            MemberSpec::logistic(8),
            MemberSpec::centroid(8),
            MemberSpec::centroid(4),
        ],
        input_side: 48,
        seed: 5,
        ..Default::default()
    }
}

#[test]
fn disk_run_round_trips_through_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = load_manifest(&dataset(dir.path())).unwrap();
    let plan = make_splits(
        &manifest,
        &SplitParams {
            iterations: 3,
            train_fraction: 0.7,
        },
        5,
    )
    .unwrap();
    let plan_path = dir.path().join("plan.json");
    plan.save(&plan_path).unwrap();
    let plan = SplitPlan::load(&plan_path).unwrap();

    let run = run_internal(&manifest, &plan, &config()).unwrap();
    assert_eq!(run.predictions.len(), 3 * 3 * plan.iterations[0].test.len());
    assert_eq!(run.report.ensemble().accuracy.mean, Some(1.0));

    let p = dir.path().join("preds.jsonl");
    write_predictions(&p, &run.predictions).unwrap();
    let records = read_predictions(&p, LabelSpace::Binary).unwrap();
    let ext = run_external(&manifest, &plan, &records, &ExternalConfig::default()).unwrap();
    for (a, b) in ext.rows.iter().zip(&run.report.rows) {
        assert!(a.same_values(b), "{}", a.model_id);
    }

    let json = run.report.to_json().unwrap();
    assert_eq!(EvalReport::from_json(&json).unwrap(), run.report);
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = load_manifest(&dataset(dir.path())).unwrap();
    let plan = make_splits(
        &manifest,
        &SplitParams {
            iterations: 2,
            train_fraction: 0.8,
        },
        1,
    )
    .unwrap();
    let mut cfg = config();
    cfg.augmentation = Some(Default::default());
    let par = run_internal(&manifest, &plan, &cfg).unwrap();
    cfg.parallelism = Parallelism::Sequential;
    let seq = run_internal(&manifest, &plan, &cfg).unwrap();
    assert_eq!(par.report.to_json().unwrap(), seq.report.to_json().unwrap());
    assert_eq!(par.predictions, seq.predictions);
}

#[test]
fn missing_image_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dataset(dir.path());
    let manifest = load_manifest(&path).unwrap();
    std::fs::remove_file(&manifest.entries()[3].path).unwrap();
    let plan = make_splits(&manifest, &SplitParams::default(), 1).unwrap();
    let err = run_internal(&manifest, &plan, &config()).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Data);
}

#[test]
fn plan_from_other_manifest_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = load_manifest(&dataset(dir.path())).unwrap();
    let mut plan = make_splits(&manifest, &SplitParams::default(), 1).unwrap();
    plan.iterations[0].test.push("stranger".into());
    assert_eq!(
        run_internal(&manifest, &plan, &config())
            .unwrap_err()
            .category(),
        ErrorCategory::Validation
    );
}

#[test]
fn external_table_matches_golden_text() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = dir.path().join("m.csv");
    std::fs::write(
        &manifest_path,
        "image_id,path,label\na,a.png,-1\nb,b.png,1\nc,c.png,-1\nd,d.png,1\n",
    )
    .unwrap();
    let manifest = load_manifest(&manifest_path).unwrap();
    let plan = SplitPlan {
        schema_version: 1,
        seed: 0,
        train_fraction: 0.5,
        iterations: vec![
            modefuse::harness::Split {
                train: vec!["a".into(), "b".into()],
                test: vec!["c".into(), "d".into()],
            },
            modefuse::harness::Split {
                train: vec!["c".into(), "d".into()],
                test: vec!["a".into(), "b".into()],
            },
        ],
    };
    let rec = |m: &str, i: &str, d: i32, s: f64| PredictionRecord {
        model_id: m.into(),
        image_id: i.into(),
        decision: ClassLabel(d),
        score: s,
        iteration: None,
    };
    let records = vec![
        rec("alpha", "a", -1, 0.9),
        rec("alpha", "b", 1, 0.8),
        rec("alpha", "c", -1, 0.7),
        rec("alpha", "d", -1, 0.6),
        rec("beta", "a", -1, 0.6),
        rec("beta", "b", -1, 0.9),
        rec("beta", "c", -1, 0.8),
        rec("beta", "d", 1, 0.7),
        rec("gamma", "a", 1, 0.55),
        rec("gamma", "b", 1, 0.9),
        rec("gamma", "c", -1, 0.95),
        rec("gamma", "d", 1, 0.85),
    ];
    let report = run_external(&manifest, &plan, &records, &ExternalConfig::default()).unwrap();
    // beta ranks b above a in the second iteration, so its AUC there is 0.
    let expected = "\
Model     Accuracy       Sensitivity    Specificity    F1 score     AUC
-------------------------------------------------------------------------------
alpha     75.00 ± 35.36  100.00 ± 0.00  50.00 ± 70.71  0.83 ± 0.24  1.00 ± 0.00
beta      75.00 ± 35.36  100.00 ± 0.00  50.00 ± 70.71  0.83 ± 0.24  0.50 ± 0.71
gamma     75.00 ± 35.36  50.00 ± 70.71  100.00 ± 0.00  0.50 ± 0.71  1.00 ± 0.00
-------------------------------------------------------------------------------
ensemble  100.00 ± 0.00  100.00 ± 0.00  100.00 ± 0.00  1.00 ± 0.00  1.00 ± 0.00

2 iteration(s), train fraction 0.5, positive class -1, source external.
";
    assert_eq!(render_table(&report), expected);
}

#[test]
fn iteration_errors_name_the_iteration() {
    let err = Error::Iteration {
        iteration: 3,
        source: Box::new(Error::SingularMode),
    };
    assert!(err.to_string().starts_with("iteration 3:"));
    assert_eq!(err.category(), ErrorCategory::Runtime);
}
