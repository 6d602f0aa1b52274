//! Dataset manifests, split plans, prediction files, the end-to-end
//! evaluation loop, and report output.

mod manifest;
mod records;
mod report;
mod run;
mod split;
pub mod synthetic;

pub use manifest::{
    load_manifest, load_manifest_with, write_manifest, DatasetManifest, ManifestEntry,
};
pub use records::{read_predictions, write_predictions, PredictionRecord, PredictionTable};
pub use report::{
    emit_report, render_table, summarize, write_report_files, ConfigEcho, EvalReport,
    MetricSummary, ReportFormat, ReportRow, RunSource, ENSEMBLE_ID, REPORT_SCHEMA_VERSION,
};
pub use run::{
    evaluate_iteration, load_images, member_ids, run_external, run_internal,
    run_internal_on_images, ExternalConfig, InternalRun, IterationEval, RunConfig,
};
pub use split::{make_splits, train_quotas, Split, SplitParams, SplitPlan};
