//! Mode-based fusion of classifier committees, with the metrics,
//! preprocessing, baseline members, and evaluation harness around it.
//!
//! The `parallel` feature (on by default) runs column fusion, image
//! preprocessing, and split iterations on the rayon pool. Without it every
//! [`Parallelism`] mode runs sequentially. Results are identical either way.

pub mod baseline;
pub mod ensemble;
mod error;
pub mod harness;
mod label;
pub mod metrics;
pub mod par;
pub mod preprocess;
pub mod rng;

pub use ensemble::{
    column_mode, fuse, fuse_with, grouped_mode, ColumnMode, DecisionMatrix, FusionResult,
    GroupedModeInput, ScoreMatrix,
};
pub use error::{Error, ErrorCategory, Result};
pub use label::{ClassLabel, LabelSpace};
pub use metrics::{evaluate, MetricKind, MetricSet};
pub use par::Parallelism;
