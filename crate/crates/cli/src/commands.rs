use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use modefuse::baseline::{CommitteePreset, MemberSpec, TrainConfig};
use modefuse::harness::synthetic::{write_synthetic_dataset, SyntheticSpec};
use modefuse::harness::{
    load_manifest, make_splits, read_predictions, render_table, run_external, run_internal,
    write_predictions, write_report_files, DatasetManifest, EvalReport, ExternalConfig,
    PredictionRecord, RunConfig, SplitParams, SplitPlan,
};
use modefuse::metrics::{confusion, evaluate, ConfusionCounts};
use modefuse::preprocess::AugmentationConfig;
use modefuse::{ClassLabel, Error, MetricKind, MetricSet, Parallelism, Result};

use crate::args::{FuseArgs, MetricsArgs, PlanArgs, RunArgs, SplitArgs, SynthArgs};

pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        Ok(&self.out)
    }
}

fn parallelism(sequential: bool) -> Parallelism {
    if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

fn positive_label(manifest: &DatasetManifest, code: i32) -> Result<ClassLabel> {
    manifest.space().check(ClassLabel(code))
}

/// Refuses to write over any of the command's input files.
fn guard_outputs(outputs: &[&Path], inputs: &[&Path]) -> Result<()> {
    for out in outputs {
        let Ok(out_c) = out.canonicalize() else {
            continue;
        };
        for input in inputs {
            if input.canonicalize().is_ok_and(|i| i == out_c) {
                return Err(Error::Config(format!(
                    "output {} would overwrite an input file",
                    out.display()
                )));
            }
        }
    }
    Ok(())
}

fn resolve_plan(
    ctx: &Context,
    manifest: &DatasetManifest,
    args: &PlanArgs,
) -> Result<(SplitPlan, bool)> {
    match &args.plan {
        Some(path) => {
            let plan = SplitPlan::load(path)?;
            plan.validate_against(manifest)?;
            Ok((plan, false))
        }
        None => {
            let params = SplitParams {
                iterations: args.iterations,
                train_fraction: args.train_fraction,
            };
            Ok((make_splits(manifest, &params, ctx.seed)?, true))
        }
    }
}

fn parse_committee(args: &RunArgs) -> Result<Vec<MemberSpec>> {
    if let Some(path) = &args.committee_file {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let members = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<Vec<MemberSpec>>>()?;
        if members.is_empty() {
            return Err(Error::Config(format!(
                "{} lists no members",
                path.display()
            )));
        }
        return Ok(members);
    }
    if let Ok(preset) = args.committee.parse::<CommitteePreset>() {
        return Ok(preset.members());
    }
    args.committee
        .split(',')
        .map(|s| s.trim().parse())
        .collect()
}

fn finish_report(ctx: &Context, report: &EvalReport, extra_inputs: &[&Path]) -> Result<()> {
    let dir = ctx.out_dir()?;
    guard_outputs(
        &[&dir.join("report.json"), &dir.join("report.txt")],
        extra_inputs,
    )?;
    let (json, txt) = write_report_files(report, dir)?;
    if !ctx.quiet {
        print!("{}", render_table(report));
    }
    ctx.info(format!("wrote {} and {}", json.display(), txt.display()));
    Ok(())
}

pub fn run(ctx: &Context, args: RunArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    manifest.check_files()?;
    let positive = positive_label(&manifest, args.positive)?;
    let (plan, generated) = resolve_plan(ctx, &manifest, &args.plan)?;
    let mut training = TrainConfig::default();
    if let Some(e) = args.epochs {
        training.max_epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        training.learning_rate = lr;
    }
    if let Some(b) = args.mini_batch {
        training.mini_batch = b;
    }
    let cfg = RunConfig {
        committee: parse_committee(&args)?,
        training,
        augmentation: args.augment.then(AugmentationConfig::default),
        input_side: args.input_side,
        positive,
        seed: ctx.seed,
        parallelism: parallelism(args.sequential),
    };
    ctx.info(format!(
        "run: {} images, {} iteration(s), {} member(s){}",
        manifest.len(),
        plan.len(),
        cfg.committee.len(),
        if args.augment { ", augmented" } else { "" }
    ));
    let result = run_internal(&manifest, &plan, &cfg)?;

    let dir = ctx.out_dir()?;
    let inputs: Vec<&Path> = [Some(args.manifest.as_path()), args.plan.plan.as_deref()]
        .into_iter()
        .flatten()
        .collect();
    let predictions = dir.join("predictions.csv");
    guard_outputs(&[&predictions, &dir.join("split_plan.json")], &inputs)?;
    if generated {
        plan.save(&dir.join("split_plan.json"))?;
    }
    write_predictions(&predictions, &result.predictions)?;
    finish_report(ctx, &result.report, &inputs)
}

fn read_all_predictions(
    paths: &[PathBuf],
    manifest: &DatasetManifest,
) -> Result<Vec<PredictionRecord>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_predictions(p, manifest.space())?);
    }
    Ok(all)
}

pub fn fuse(ctx: &Context, args: FuseArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let positive = positive_label(&manifest, args.positive)?;
    let (plan, generated) = resolve_plan(ctx, &manifest, &args.plan)?;
    let records = read_all_predictions(&args.predictions, &manifest)?;
    ctx.info(format!(
        "fuse: {} record(s) from {} file(s), {} iteration(s)",
        records.len(),
        args.predictions.len(),
        plan.len()
    ));
    let cfg = ExternalConfig {
        positive,
        parallelism: parallelism(args.sequential),
    };
    let report = run_external(&manifest, &plan, &records, &cfg)?;

    let mut inputs: Vec<&Path> = args.predictions.iter().map(PathBuf::as_path).collect();
    inputs.push(&args.manifest);
    if let Some(p) = &args.plan.plan {
        inputs.push(p);
    }
    if generated {
        let path = ctx.out_dir()?.join("split_plan.json");
        guard_outputs(&[&path], &inputs)?;
        plan.save(&path)?;
    }
    finish_report(ctx, &report, &inputs)
}

struct MetricsRow {
    model_id: String,
    iteration: Option<usize>,
    counts: ConfusionCounts,
    metrics: MetricSet,
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

pub fn metrics(ctx: &Context, args: MetricsArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let positive = positive_label(&manifest, args.positive)?;
    let records = read_all_predictions(&args.predictions, &manifest)?;

    // (model order of first appearance, iteration) -> records
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, Option<usize>), Vec<&PredictionRecord>> = BTreeMap::new();
    for r in &records {
        let m = match order.iter().position(|id| *id == r.model_id) {
            Some(i) => i,
            None => {
                order.push(r.model_id.clone());
                order.len() - 1
            }
        };
        groups.entry((m, r.iteration)).or_default().push(r);
    }

    let mut rows = Vec::new();
    for ((m, iteration), recs) in groups {
        let truth = recs
            .iter()
            .map(|r| {
                manifest
                    .position(&r.image_id)
                    .map(|i| manifest.entries()[i].label)
                    .ok_or_else(|| {
                        Error::Config(format!("image `{}` is not in the manifest", r.image_id))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let decisions: Vec<ClassLabel> = recs.iter().map(|r| r.decision).collect();
        let scores: Vec<f64> = recs.iter().map(|r| r.score).collect();
        rows.push(MetricsRow {
            model_id: order[m].clone(),
            iteration,
            counts: confusion(&truth, &decisions, positive)?,
            metrics: evaluate(&truth, &decisions, &scores, positive)?,
        });
    }

    if args.json {
        let value: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "model_id": r.model_id,
                    "iteration": r.iteration,
                    "counts": r.counts,
                    "metrics": r.metrics,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        println!(
            "{:<20} {:>4} {:>5} {:>5} {:>5} {:>5}  {:>8} {:>11} {:>11} {:>8} {:>8}",
            "model",
            "iter",
            "TP",
            "FP",
            "TN",
            "FN",
            "Accuracy",
            "Sensitivity",
            "Specificity",
            "F1",
            "AUC"
        );
        for r in &rows {
            let m = &r.metrics;
            println!(
                "{:<20} {:>4} {:>5} {:>5} {:>5} {:>5}  {:>8} {:>11} {:>11} {:>8} {:>8}",
                r.model_id,
                r.iteration
                    .map_or_else(|| "-".to_string(), |i| i.to_string()),
                r.counts.tp,
                r.counts.fp,
                r.counts.tn,
                r.counts.fn_,
                fmt_metric(m.get(MetricKind::Accuracy)),
                fmt_metric(m.get(MetricKind::Sensitivity)),
                fmt_metric(m.get(MetricKind::Specificity)),
                fmt_metric(m.get(MetricKind::F1)),
                fmt_metric(m.get(MetricKind::Auc)),
            );
        }
    }
    ctx.info(format!("positive class {positive}"));
    Ok(())
}

pub fn split(ctx: &Context, args: SplitArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let params = SplitParams {
        iterations: args.iterations,
        train_fraction: args.train_fraction,
    };
    let plan = make_splits(&manifest, &params, ctx.seed)?;
    let path = ctx.out_dir()?.join("split_plan.json");
    guard_outputs(&[&path], &[&args.manifest])?;
    plan.save(&path)?;
    let first = &plan.iterations[0];
    ctx.info(format!(
        "wrote {} ({} iteration(s), {} train / {} test)",
        path.display(),
        plan.len(),
        first.train.len(),
        first.test.len()
    ));
    Ok(())
}

pub fn synth(ctx: &Context, args: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        negatives: args.negatives,
        positives: args.positives,
        side: args.side,
        seed: ctx.seed,
        ..Default::default()
    };
    let manifest = write_synthetic_dataset(ctx.out_dir()?, &spec)?;
    ctx.info(format!("wrote {}", manifest.display()));
    Ok(())
}
