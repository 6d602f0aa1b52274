//! Synthetic two-class image sets for smoke tests and benchmarks.
//!
//! Class `-1` images have a bright left half, class `+1` a bright right
//! half. The split is left/right so vertical reflection keeps the class
//! signal intact.

use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::{Error, Result};
use crate::label::{ClassLabel, LabelSpace};
use crate::preprocess::{save_png, RasterImage};
use crate::rng::{derive_seed, stream_rng};

use super::manifest::{write_manifest, DatasetManifest, ManifestEntry};

const SYNTH_TAG: u64 = 0x5E7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    /// Images labelled `-1`.
    pub negatives: usize,
    /// Images labelled `+1`.
    pub positives: usize,
    pub side: u32,
    pub bright: u8,
    pub dark: u8,
    /// Uniform per-pixel noise amplitude.
    pub noise: u8,
    /// Uniform per-image brightness offset amplitude.
    pub jitter: u8,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            negatives: 100,
            positives: 100,
            side: 224,
            bright: 170,
            dark: 60,
            noise: 25,
            jitter: 15,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Interleaves classes so any prefix is roughly balanced.
    pub fn labels(&self) -> Vec<ClassLabel> {
        let total = self.negatives + self.positives;
        let mut out = Vec::with_capacity(total);
        let (mut neg, mut pos) = (0, 0);
        for i in 0..total {
            // Bresenham-style interleave keeps the running ratio on target.
            let want_neg = (i + 1) * self.negatives;
            if neg < self.negatives && (pos == self.positives || neg * total < want_neg) {
                out.push(ClassLabel(-1));
                neg += 1;
            } else {
                out.push(ClassLabel(1));
                pos += 1;
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return Err(Error::Config(
                "synthetic image side must be at least 2".into(),
            ));
        }
        if self.bright <= self.dark {
            return Err(Error::Config("bright level must exceed dark level".into()));
        }
        Ok(())
    }
}

/// Image id used for entry `index`.
pub fn synthetic_id(index: usize) -> String {
    format!("syn{index:05}")
}

/// Renders entry `index` as a single-channel image.
pub fn synthetic_image(spec: &SyntheticSpec, index: usize, label: ClassLabel) -> RasterImage {
    let mut rng = stream_rng(derive_seed(spec.seed, &[SYNTH_TAG]), index as u64);
    let side = spec.side as usize;
    let offset = if spec.jitter == 0 {
        0
    } else {
        rng.gen_range(-(spec.jitter as i32)..=spec.jitter as i32)
    };
    let bright_left = label == ClassLabel(-1);
    let mut data = Vec::with_capacity(side * side);
    for _y in 0..side {
        for x in 0..side {
            let left = x < side / 2;
            let base = if left == bright_left {
                spec.bright
            } else {
                spec.dark
            } as i32;
            let n = if spec.noise == 0 {
                0
            } else {
                rng.gen_range(-(spec.noise as i32)..=spec.noise as i32)
            };
            data.push((base + offset + n).clamp(0, 255) as u8);
        }
    }
    RasterImage::new(spec.side, spec.side, 1, data).expect("buffer sized to match")
}

/// In-memory manifest (paths are placeholders) and the matching images.
pub fn synthetic_in_memory(spec: &SyntheticSpec) -> Result<(DatasetManifest, Vec<RasterImage>)> {
    spec.validate()?;
    let labels = spec.labels();
    let entries = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| ManifestEntry {
            image_id: synthetic_id(i),
            path: PathBuf::from(format!("{}.png", synthetic_id(i))),
            label,
        })
        .collect();
    let images = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| synthetic_image(spec, i, l))
        .collect();
    Ok((DatasetManifest::new(entries, LabelSpace::Binary)?, images))
}

/// Writes PNGs under `dir/images/` and `dir/manifest.csv`; returns the
/// manifest path.
pub fn write_synthetic_dataset(dir: &Path, spec: &SyntheticSpec) -> Result<PathBuf> {
    spec.validate()?;
    let images_dir = dir.join("images");
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
    let mut rows = Vec::new();
    for (i, label) in spec.labels().into_iter().enumerate() {
        let id = synthetic_id(i);
        let rel = PathBuf::from("images").join(format!("{id}.png"));
        save_png(&synthetic_image(spec, i, label), &dir.join(&rel))?;
        rows.push((id, rel, label));
    }
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    Ok(manifest)
}
