//! Built-in lightweight committee members: SGDM logistic regression and a
//! nearest-centroid classifier, both over downsampled grayscale pixels.

mod centroid;
mod features;
mod logistic;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::LabelSpace;

pub use centroid::{nearest_centroid_train, CentroidModel};
pub use features::{extract_features, FeatureVector, Sample, DEFAULT_FEATURE_SIDE};
pub use logistic::{
    clip_l2, logistic_gradient, logistic_loss, sgdm_step, sgdm_train, LinearModel, Prediction,
    TrainConfig,
};

/// Version written into saved model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT_NAME: &str = "modefuse-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Logistic,
    NearestCentroid,
}

/// One committee member: a classifier family and its feature grid side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemberSpec {
    pub kind: MemberKind,
    pub side: u32,
}

impl MemberSpec {
    pub const fn logistic(side: u32) -> Self {
        Self {
            kind: MemberKind::Logistic,
            side,
        }
    }

    pub const fn centroid(side: u32) -> Self {
        Self {
            kind: MemberKind::NearestCentroid,
            side,
        }
    }

    pub fn train(
        &self,
        samples: &[Sample],
        space: LabelSpace,
        cfg: &TrainConfig,
    ) -> Result<Classifier> {
        match self.kind {
            MemberKind::Logistic => sgdm_train(samples, cfg).map(Classifier::Logistic),
            MemberKind::NearestCentroid => {
                nearest_centroid_train(samples, space).map(Classifier::NearestCentroid)
            }
        }
    }
}

impl fmt::Display for MemberSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            MemberKind::Logistic => "logistic",
            MemberKind::NearestCentroid => "centroid",
        };
        write!(f, "{name}-{}", self.side)
    }
}

impl FromStr for MemberSpec {
    type Err = Error;

    /// Accepts `logistic:32`, `centroid-16`, or a bare kind (side 32).
    fn from_str(s: &str) -> Result<Self> {
        let (kind, side) = match s.split_once([':', '-']) {
            Some((k, side)) => (
                k,
                side.parse::<u32>()
                    .ok()
                    .filter(|&v| v > 0)
                    .ok_or_else(|| Error::Config(format!("bad feature side in member `{s}`")))?,
            ),
            None => (s, DEFAULT_FEATURE_SIDE),
        };
        let kind = match kind.trim().to_ascii_lowercase().as_str() {
            "logistic" | "lr" => MemberKind::Logistic,
            "centroid" | "nearest_centroid" | "nc" => MemberKind::NearestCentroid,
            other => {
                return Err(Error::Config(format!(
                    "unknown committee member kind `{other}`"
                )))
            }
        };
        Ok(Self { kind, side })
    }
}

/// Named committees. Member pool: A = logistic-32, B = logistic-16,
/// C = centroid-32, D = centroid-16. `Augmented` is {A, B, C} and `Plain` is
/// {B, C, D}, so the two presets share B and C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitteePreset {
    Augmented,
    Plain,
}

impl CommitteePreset {
    pub fn members(self) -> Vec<MemberSpec> {
        match self {
            CommitteePreset::Augmented => vec![
                MemberSpec::logistic(32),
                MemberSpec::logistic(16),
                MemberSpec::centroid(32),
            ],
            CommitteePreset::Plain => vec![
                MemberSpec::logistic(16),
                MemberSpec::centroid(32),
                MemberSpec::centroid(16),
            ],
        }
    }
}

impl FromStr for CommitteePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "augmented" => Ok(Self::Augmented),
            "plain" => Ok(Self::Plain),
            other => Err(Error::Config(format!("unknown committee preset `{other}`"))),
        }
    }
}

/// A trained committee member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Logistic(LinearModel),
    NearestCentroid(CentroidModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Classifier,
}

impl Classifier {
    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        match self {
            Classifier::Logistic(m) => m.predict(x),
            Classifier::NearestCentroid(m) => m.predict(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile {
            format: MODEL_FORMAT_NAME.into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT_NAME || file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
