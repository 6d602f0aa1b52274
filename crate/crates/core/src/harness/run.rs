use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::baseline::{extract_features, Classifier, MemberSpec, Sample, TrainConfig};
use crate::ensemble::{fuse_with, DecisionMatrix, FusionResult, ScoreMatrix};
use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::metrics::{evaluate, MetricSet};
use crate::par::{self, Parallelism};
use crate::preprocess::{
    augment, load_image, resize, to_rgb, AugmentationConfig, RasterImage, DEFAULT_INPUT_SIDE,
};
use crate::rng::derive_seed;

use super::manifest::DatasetManifest;
use super::records::{PredictionRecord, PredictionTable};
use super::report::{
    ConfigEcho, EvalReport, ReportRow, RunSource, ENSEMBLE_ID, REPORT_SCHEMA_VERSION,
};
use super::split::SplitPlan;

const AUGMENT_TAG: u64 = 0xA06;
const TRAIN_TAG: u64 = 0x7EA1;

/// Settings for a run with the built-in committee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub committee: Vec<MemberSpec>,
    /// `seed` inside is ignored; member seeds derive from `seed` below.
    pub training: TrainConfig,
    /// Train-time augmentation; `seed` inside is ignored likewise.
    pub augmentation: Option<AugmentationConfig>,
    /// Images are converted to RGB and resized to this square side first.
    pub input_side: u32,
    pub positive: ClassLabel,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            committee: crate::baseline::CommitteePreset::Augmented.members(),
            training: TrainConfig::default(),
            augmentation: None,
            input_side: DEFAULT_INPUT_SIDE,
            positive: ClassLabel::COVID,
            seed: 42,
            parallelism: Parallelism::default(),
        }
    }
}

/// Settings for fusing externally produced predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalConfig {
    pub positive: ClassLabel,
    pub parallelism: Parallelism,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        Self {
            positive: ClassLabel::COVID,
            parallelism: Parallelism::default(),
        }
    }
}

/// Evaluation of one split iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationEval {
    pub per_model: Vec<MetricSet>,
    pub ensemble: MetricSet,
    pub fusion: FusionResult,
}

/// Report plus every test-set prediction the committee made, tagged with
/// its iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalRun {
    pub report: EvalReport,
    pub predictions: Vec<PredictionRecord>,
}

/// Unique display ids for committee members (`logistic-32`, `logistic-32#2`, …).
pub fn member_ids(committee: &[MemberSpec]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    committee
        .iter()
        .map(|m| {
            let base = m.to_string();
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}#{n}")
            }
        })
        .collect()
}

/// Fuses one iteration's committee output and scores every member and the
/// ensemble against `truth`. Rows of `decisions`/`scores` follow `model_ids`,
/// columns follow `image_ids`.
pub fn evaluate_iteration(
    manifest: &DatasetManifest,
    model_ids: &[String],
    image_ids: &[String],
    decisions: Vec<ClassLabel>,
    scores: Vec<f64>,
    positive: ClassLabel,
    parallelism: Parallelism,
) -> Result<IterationEval> {
    let truth: Vec<ClassLabel> = image_ids
        .iter()
        .map(|id| {
            manifest
                .position(id)
                .map(|i| manifest.entries()[i].label)
                .ok_or_else(|| Error::Config(format!("image `{id}` is not in the manifest")))
        })
        .collect::<Result<_>>()?;
    let d = DecisionMatrix::new(
        manifest.space(),
        model_ids.to_vec(),
        image_ids.to_vec(),
        decisions,
    )?;
    let s = ScoreMatrix::new(model_ids.to_vec(), image_ids.to_vec(), scores)?;
    let per_model = (0..model_ids.len())
        .map(|i| evaluate(&truth, d.row(i), s.row(i), positive))
        .collect::<Result<Vec<_>>>()?;
    let fusion = fuse_with(&d, &s, parallelism)?;
    let ensemble = evaluate(&truth, &fusion.dm, &fusion.ds, positive)?;
    Ok(IterationEval {
        per_model,
        ensemble,
        fusion,
    })
}

fn assemble_report(
    model_ids: &[String],
    evals: &[IterationEval],
    positive: ClassLabel,
    config: ConfigEcho,
) -> EvalReport {
    let mut rows: Vec<ReportRow> = model_ids
        .iter()
        .enumerate()
        .map(|(m, id)| {
            let sets: Vec<MetricSet> = evals.iter().map(|e| e.per_model[m]).collect();
            ReportRow::from_iterations(id, &sets)
        })
        .collect();
    let ens: Vec<MetricSet> = evals.iter().map(|e| e.ensemble).collect();
    rows.push(ReportRow::from_iterations(ENSEMBLE_ID, &ens));
    EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        iterations: evals.len(),
        positive_label: positive,
        config,
        rows,
    }
}

fn check_model_ids(ids: &[String]) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::Config("the committee is empty".into()));
    }
    if ids.iter().any(|id| id == ENSEMBLE_ID) {
        return Err(Error::Config(format!(
            "model id `{ENSEMBLE_ID}` is reserved"
        )));
    }
    Ok(())
}

/// Loads every manifest image, converts to RGB, resizes to `side × side`.
pub fn load_images(
    manifest: &DatasetManifest,
    side: u32,
    mode: Parallelism,
) -> Result<Vec<RasterImage>> {
    par::try_map_indexed(manifest.len(), mode, |i| {
        let img = load_image(&manifest.entries()[i].path)?;
        resize(&to_rgb(&img)?, side, side)
    })
}

/// Trains the built-in committee on every iteration's training split
/// (augmented when configured), predicts the untouched test split, fuses,
/// and aggregates the metrics. Images are read from the manifest paths.
pub fn run_internal(
    manifest: &DatasetManifest,
    plan: &SplitPlan,
    cfg: &RunConfig,
) -> Result<InternalRun> {
    if cfg.input_side == 0 {
        return Err(Error::Config("input side must be at least 1".into()));
    }
    let images = load_images(manifest, cfg.input_side, cfg.parallelism)?;
    run_internal_on_images(manifest, &images, plan, cfg)
}

/// [`run_internal`] over images already loaded in manifest order.
pub fn run_internal_on_images(
    manifest: &DatasetManifest,
    images: &[RasterImage],
    plan: &SplitPlan,
    cfg: &RunConfig,
) -> Result<InternalRun> {
    plan.validate_against(manifest)?;
    cfg.training.validate()?;
    if let Some(a) = &cfg.augmentation {
        a.validate()?;
    }
    if images.len() != manifest.len() {
        return Err(Error::Dimension(format!(
            "{} images for {} manifest entries",
            images.len(),
            manifest.len()
        )));
    }
    let model_ids = member_ids(&cfg.committee);
    check_model_ids(&model_ids)?;

    let outcomes = par::try_map_indexed(plan.len(), cfg.parallelism, |r| {
        run_iteration(manifest, images, plan, cfg, &model_ids, r).map_err(|e| e.at_iteration(r))
    })?;

    let mut evals = Vec::with_capacity(outcomes.len());
    let mut predictions = Vec::new();
    for (eval, records) in outcomes {
        evals.push(eval);
        predictions.extend(records);
    }
    let config = ConfigEcho {
        source: RunSource::Internal,
        seed: cfg.seed,
        train_fraction: plan.train_fraction,
        committee: model_ids.clone(),
        // Per-member and per-iteration seeds derive from the run seed.
        augmentation: cfg.augmentation.map(|a| AugmentationConfig {
            seed: cfg.seed,
            ..a
        }),
        training: Some(TrainConfig {
            seed: cfg.seed,
            ..cfg.training
        }),
        input_side: Some(cfg.input_side),
    };
    Ok(InternalRun {
        report: assemble_report(&model_ids, &evals, cfg.positive, config),
        predictions,
    })
}

fn run_iteration(
    manifest: &DatasetManifest,
    images: &[RasterImage],
    plan: &SplitPlan,
    cfg: &RunConfig,
    model_ids: &[String],
    r: usize,
) -> Result<(IterationEval, Vec<PredictionRecord>)> {
    let split = &plan.iterations[r];
    let index = |ids: &[String]| -> Vec<usize> {
        ids.iter()
            .map(|id| manifest.position(id).expect("plan validated"))
            .collect()
    };
    let train_idx = index(&split.train);
    let test_idx = index(&split.test);

    // Augmentation streams are keyed by manifest position, so a given image
    // gets the same transform regardless of scheduling.
    let train_images: Vec<RasterImage> = match &cfg.augmentation {
        Some(aug) => {
            let aug = AugmentationConfig {
                seed: derive_seed(cfg.seed, &[AUGMENT_TAG, r as u64]),
                ..*aug
            };
            par::try_map_indexed(train_idx.len(), cfg.parallelism, |i| {
                augment(&images[train_idx[i]], &aug, train_idx[i] as u64)
            })?
        }
        None => train_idx.iter().map(|&i| images[i].clone()).collect(),
    };

    let sides: BTreeSet<u32> = cfg.committee.iter().map(|m| m.side).collect();
    let mut train_features = HashMap::new();
    let mut test_features = HashMap::new();
    for &side in &sides {
        let train = par::try_map_indexed(train_images.len(), cfg.parallelism, |i| {
            Ok::<_, Error>(Sample {
                features: extract_features(&train_images[i], side)?,
                label: manifest.entries()[train_idx[i]].label,
            })
        })?;
        let test = par::try_map_indexed(test_idx.len(), cfg.parallelism, |i| {
            extract_features(&images[test_idx[i]], side)
        })?;
        train_features.insert(side, train);
        test_features.insert(side, test);
    }

    let k = test_idx.len();
    let mut decisions = Vec::with_capacity(model_ids.len() * k);
    let mut scores = Vec::with_capacity(model_ids.len() * k);
    let mut records = Vec::with_capacity(model_ids.len() * k);
    for (m, spec) in cfg.committee.iter().enumerate() {
        let training = TrainConfig {
            seed: derive_seed(cfg.seed, &[TRAIN_TAG, r as u64, m as u64]),
            ..cfg.training
        };
        let model: Classifier =
            spec.train(&train_features[&spec.side], manifest.space(), &training)?;
        for (j, x) in test_features[&spec.side].iter().enumerate() {
            let p = model.predict(x)?;
            decisions.push(p.decision);
            scores.push(p.score);
            records.push(PredictionRecord {
                model_id: model_ids[m].clone(),
                image_id: split.test[j].clone(),
                decision: p.decision,
                score: p.score,
                iteration: Some(r),
            });
        }
    }

    let eval = evaluate_iteration(
        manifest,
        model_ids,
        &split.test,
        decisions,
        scores,
        cfg.positive,
        Parallelism::Sequential,
    )?;
    Ok((eval, records))
}

/// Evaluates externally produced predictions with the same fusion and
/// metrics as [`run_internal`]. Every model must cover every test image of
/// every iteration.
pub fn run_external(
    manifest: &DatasetManifest,
    plan: &SplitPlan,
    records: &[PredictionRecord],
    cfg: &ExternalConfig,
) -> Result<EvalReport> {
    plan.validate_against(manifest)?;
    let table = PredictionTable::from_records(records)?;
    let model_ids = table.model_ids().to_vec();
    check_model_ids(&model_ids)?;
    for r in records {
        if manifest.position(&r.image_id).is_none() {
            return Err(Error::Config(format!(
                "prediction for model `{}` names image `{}`, which is not in the manifest",
                r.model_id, r.image_id
            )));
        }
        if let Some(it) = r.iteration {
            if it >= plan.len() {
                return Err(Error::Config(format!(
                    "prediction for model `{}`, image `{}` names iteration {it}, but the plan has {}",
                    r.model_id,
                    r.image_id,
                    plan.len()
                )));
            }
        }
    }

    let mut missing = Vec::new();
    for (r, split) in plan.iterations.iter().enumerate() {
        for m in &model_ids {
            for img in &split.test {
                if table.lookup(r, m, img).is_none() {
                    missing.push(format!("(iteration {r}, model {m}, image {img})"));
                }
            }
        }
    }
    if !missing.is_empty() {
        let sample = missing
            .iter()
            .take(5)
            .cloned()
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::Coverage {
            count: missing.len(),
            sample,
        });
    }

    let evals = par::try_map_indexed(plan.len(), cfg.parallelism, |r| {
        let split = &plan.iterations[r];
        let mut decisions = Vec::with_capacity(model_ids.len() * split.test.len());
        let mut scores = Vec::with_capacity(decisions.capacity());
        for m in &model_ids {
            for img in &split.test {
                let (d, s) = table.lookup(r, m, img).expect("coverage checked");
                decisions.push(d);
                scores.push(s);
            }
        }
        evaluate_iteration(
            manifest,
            &model_ids,
            &split.test,
            decisions,
            scores,
            cfg.positive,
            Parallelism::Sequential,
        )
        .map_err(|e| e.at_iteration(r))
    })?;

    let config = ConfigEcho {
        source: RunSource::External,
        seed: plan.seed,
        train_fraction: plan.train_fraction,
        committee: model_ids.clone(),
        augmentation: None,
        training: None,
        input_side: None,
    };
    Ok(assemble_report(&model_ids, &evals, cfg.positive, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::manifest::ManifestEntry;
    use crate::harness::split::{make_splits, SplitParams};
    use crate::label::LabelSpace;

    fn manifest(labels: &[i32]) -> DatasetManifest {
        let entries = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| ManifestEntry {
                image_id: format!("i{i}"),
                path: format!("{i}.png").into(),
                label: ClassLabel(l),
            })
            .collect();
        DatasetManifest::new(entries, LabelSpace::Binary).unwrap()
    }

    fn single_split(m: &DatasetManifest, test: &[&str]) -> SplitPlan {
        let test: Vec<String> = test.iter().map(|s| s.to_string()).collect();
        let train = m
            .entries()
            .iter()
            .map(|e| e.image_id.clone())
            .filter(|id| !test.contains(id))
            .collect();
        SplitPlan {
            schema_version: 1,
            seed: 0,
            train_fraction: 0.8,
            iterations: vec![crate::harness::split::Split { train, test }],
        }
    }

    fn rec(model: &str, image: &str, d: i32, s: f64) -> PredictionRecord {
        PredictionRecord {
            model_id: model.into(),
            image_id: image.into(),
            decision: ClassLabel(d),
            score: s,
            iteration: None,
        }
    }

    #[test]
    fn three_models_one_image() {
        let m = manifest(&[-1, 1, -1]);
        let plan = single_split(&m, &["i0"]);
        let records = vec![
            rec("a", "i0", -1, 0.9),
            rec("b", "i0", -1, 0.8),
            rec("c", "i0", 1, 0.6),
        ];
        let table = PredictionTable::from_records(&records).unwrap();
        let eval = evaluate_iteration(
            &m,
            table.model_ids(),
            &plan.iterations[0].test,
            vec![ClassLabel(-1), ClassLabel(-1), ClassLabel(1)],
            vec![0.9, 0.8, 0.6],
            ClassLabel::COVID,
            Parallelism::Sequential,
        )
        .unwrap();
        assert_eq!(eval.fusion.dm, vec![ClassLabel(-1)]);
        assert!((eval.fusion.ds[0] - 0.85).abs() < 1e-15);
        let report = run_external(&m, &plan, &records, &ExternalConfig::default()).unwrap();
        assert_eq!(report.ensemble().accuracy.mean, Some(1.0));
        assert_eq!(report.row("c").unwrap().accuracy.mean, Some(0.0));
        assert_eq!(report.ensemble().auc.mean, None);
        assert_eq!(report.ensemble().auc.excluded, 1);
    }

    #[test]
    fn unanimous_committee_equals_each_member() {
        let m = manifest(&[-1, 1, -1, 1, 1, -1, 1, -1, 1, -1]);
        let plan = make_splits(
            &m,
            &SplitParams {
                iterations: 3,
                train_fraction: 0.6,
            },
            5,
        )
        .unwrap();
        let mut records = Vec::new();
        for (i, e) in m.entries().iter().enumerate() {
            let d = if i % 3 == 0 { -e.label.0 } else { e.label.0 };
            let s = 0.5 + (i as f64) / 40.0;
            for model in ["x", "y", "z"] {
                records.push(rec(model, &e.image_id, d, s));
            }
        }
        let report = run_external(&m, &plan, &records, &ExternalConfig::default()).unwrap();
        for model in ["x", "y", "z"] {
            assert!(report.row(model).unwrap().same_values(report.ensemble()));
        }
    }

    #[test]
    fn missing_predictions_are_listed() {
        let m = manifest(&[-1, 1, -1, 1]);
        let plan = single_split(&m, &["i0", "i1"]);
        let records = vec![
            rec("a", "i0", -1, 0.9),
            rec("a", "i1", 1, 0.9),
            rec("b", "i0", -1, 0.9),
        ];
        match run_external(&m, &plan, &records, &ExternalConfig::default()).unwrap_err() {
            Error::Coverage { count, sample } => {
                assert_eq!(count, 1);
                assert!(sample.contains("model b, image i1"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_images_and_iterations_rejected() {
        let m = manifest(&[-1, 1, -1, 1]);
        let plan = single_split(&m, &["i0", "i1"]);
        let mut records = vec![
            rec("a", "i0", -1, 0.9),
            rec("a", "i1", 1, 0.9),
            rec("a", "zzz", 1, 0.9),
        ];
        assert!(matches!(
            run_external(&m, &plan, &records, &ExternalConfig::default()),
            Err(Error::Config(_))
        ));
        records.pop();
        records[0].iteration = Some(4);
        assert!(run_external(&m, &plan, &records, &ExternalConfig::default()).is_err());
        let reserved = vec![
            rec(ENSEMBLE_ID, "i0", -1, 0.9),
            rec(ENSEMBLE_ID, "i1", 1, 0.9),
        ];
        assert!(matches!(
            run_external(&m, &plan, &reserved, &ExternalConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn repeated_members_get_distinct_ids() {
        let ids = member_ids(&[
            MemberSpec::logistic(8),
            MemberSpec::centroid(8),
            MemberSpec::logistic(8),
        ]);
        assert_eq!(ids, vec!["logistic-8", "centroid-8", "logistic-8#2"]);
    }
}
