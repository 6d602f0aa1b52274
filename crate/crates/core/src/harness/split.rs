use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::rng::{derive_seed, stream_rng};

use super::manifest::DatasetManifest;

pub const SPLIT_SCHEMA_VERSION: u32 = 1;
const SPLIT_TAG: u64 = 0x5B17;
/// Absorbs representation error in `fraction * count` before flooring
/// (0.8 * 10 must floor to 8).
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub iterations: usize,
    pub train_fraction: f64,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self {
            iterations: 5,
            train_fraction: 0.8,
        }
    }
}

impl SplitParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("at least one iteration is required".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Repeated stratified holdout splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub schema_version: u32,
    pub seed: u64,
    pub train_fraction: f64,
    pub iterations: Vec<Split>,
}

fn floor_slack(x: f64) -> usize {
    (x + FLOOR_SLACK).floor() as usize
}

/// Per-class training quotas.
///
/// The overall training size is `floor(fraction * total)`. Each class first
/// gets `floor(fraction * size)`, the shortfall goes one by one to the
/// classes with the largest fractional remainders (earlier class first on
/// ties), and every quota is finally clamped to `[1, size - 1]` so both
/// partitions see every class.
pub fn train_quotas(class_sizes: &[usize], train_fraction: f64) -> Result<Vec<usize>> {
    if let Some(i) = class_sizes.iter().position(|&n| n < 2) {
        return Err(Error::Stratification(format!(
            "class #{i} has {} sample(s); at least 2 are needed to appear in both partitions",
            class_sizes[i]
        )));
    }
    let total: usize = class_sizes.iter().sum();
    let target = floor_slack(train_fraction * total as f64);
    let shares: Vec<f64> = class_sizes
        .iter()
        .map(|&n| train_fraction * n as f64)
        .collect();
    let mut quotas: Vec<usize> = shares.iter().map(|&s| floor_slack(s)).collect();
    let assigned: usize = quotas.iter().sum();

    let mut by_remainder: Vec<usize> = (0..shares.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = shares[a] - quotas[a] as f64;
        let rb = shares[b] - quotas[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().take(target.saturating_sub(assigned)) {
        quotas[i] += 1;
    }
    for (q, &n) in quotas.iter_mut().zip(class_sizes) {
        *q = (*q).clamp(1, n - 1);
    }
    Ok(quotas)
}

/// Draws `params.iterations` independent stratified splits. Iteration `r`
/// uses its own random stream, so plans are reproducible from the seed.
pub fn make_splits(
    manifest: &DatasetManifest,
    params: &SplitParams,
    seed: u64,
) -> Result<SplitPlan> {
    params.validate()?;
    if manifest.len() < 2 {
        return Err(Error::Stratification("need at least two images".into()));
    }
    let counts = manifest.class_counts();
    if let Some((label, _)) = counts.iter().find(|(_, n)| *n == 0) {
        return Err(Error::Stratification(format!("class {label} is absent")));
    }
    let sizes: Vec<usize> = counts.iter().map(|&(_, n)| n).collect();
    let quotas = train_quotas(&sizes, params.train_fraction)?;
    let by_class: Vec<(ClassLabel, Vec<usize>)> = counts
        .iter()
        .map(|&(label, _)| {
            let idx = manifest
                .entries()
                .iter()
                .enumerate()
                .filter_map(|(i, e)| (e.label == label).then_some(i))
                .collect();
            (label, idx)
        })
        .collect();

    let base = derive_seed(seed, &[SPLIT_TAG]);
    let iterations = (0..params.iterations)
        .map(|r| {
            let mut rng = stream_rng(base, r as u64);
            let mut in_train = vec![false; manifest.len()];
            for ((_, members), &quota) in by_class.iter().zip(&quotas) {
                let mut shuffled = members.clone();
                shuffled.shuffle(&mut rng);
                for &i in &shuffled[..quota] {
                    in_train[i] = true;
                }
            }
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (e, &t) in manifest.entries().iter().zip(&in_train) {
                if t { &mut train } else { &mut test }.push(e.image_id.clone());
            }
            Split { train, test }
        })
        .collect();

    Ok(SplitPlan {
        schema_version: SPLIT_SCHEMA_VERSION,
        seed,
        train_fraction: params.train_fraction,
        iterations,
    })
}

impl SplitPlan {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Checks that every split partitions exactly the manifest's ids.
    pub fn validate_against(&self, manifest: &DatasetManifest) -> Result<()> {
        if self.iterations.is_empty() {
            return Err(Error::Config("split plan has no iterations".into()));
        }
        let all: HashSet<&str> = manifest
            .entries()
            .iter()
            .map(|e| e.image_id.as_str())
            .collect();
        for (r, split) in self.iterations.iter().enumerate() {
            let mut seen = HashSet::with_capacity(all.len());
            for id in split.train.iter().chain(&split.test) {
                if !all.contains(id.as_str()) {
                    return Err(Error::Config(format!(
                        "iteration {r}: image `{id}` is not in the manifest"
                    )));
                }
                if !seen.insert(id.as_str()) {
                    return Err(Error::DuplicateId(format!("image {id} in iteration {r}")));
                }
            }
            if seen.len() != all.len() {
                return Err(Error::Config(format!(
                    "iteration {r} covers {} of {} images",
                    seen.len(),
                    all.len()
                )));
            }
            if split.train.is_empty() || split.test.is_empty() {
                return Err(Error::Config(format!(
                    "iteration {r} has an empty partition"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: SplitPlan = serde_json::from_str(&text)?;
        if plan.schema_version != SPLIT_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported split plan schema {}",
                plan.schema_version
            )));
        }
        Ok(plan)
    }
}
