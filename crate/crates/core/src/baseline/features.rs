use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::preprocess::{resize, to_gray, RasterImage};

/// Default side of the square feature grid.
pub const DEFAULT_FEATURE_SIDE: u32 = 32;

/// Flattened grayscale thumbnail with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("feature value {v} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A feature vector with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub label: ClassLabel,
}

/// Luma conversion, bilinear resize to `side × side`, row-major flatten,
/// division by 255.
pub fn extract_features(img: &RasterImage, side: u32) -> Result<FeatureVector> {
    if side == 0 {
        return Err(Error::Domain("feature side must be at least 1".into()));
    }
    let thumb = resize(&to_gray(img)?, side, side)?;
    Ok(FeatureVector(
        thumb.data().iter().map(|&v| v as f64 / 255.0).collect(),
    ))
}

/// Checks that every sample has the same dimension and returns it.
pub(crate) fn common_dim(samples: &[Sample]) -> Result<usize> {
    let dim = samples
        .first()
        .map(|s| s.features.dim())
        .ok_or_else(|| Error::DegenerateTraining("no training samples".into()))?;
    if let Some(s) = samples.iter().find(|s| s.features.dim() != dim) {
        return Err(Error::Dimension(format!(
            "feature dimension {} differs from {dim}",
            s.features.dim()
        )));
    }
    Ok(dim)
}
