use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

use super::resize::{bilinear, to_u8};
use super::{flip_vertical, RasterImage};

/// Distribution of the random train-time transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    /// Probability of a top-bottom reflection.
    pub reflect_probability: f64,
    /// Per-axis translation in pixels, drawn uniformly from `[lo, hi]`.
    pub translate_range: (f64, f64),
    /// Per-axis scale factor, drawn uniformly from `[lo, hi]`.
    pub scale_range: (f64, f64),
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            reflect_probability: 0.5,
            translate_range: (-30.0, 30.0),
            scale_range: (0.9, 1.1),
            seed: 0,
        }
    }
}

impl AugmentationConfig {
    /// No reflection, translation, or scaling.
    pub fn identity(seed: u64) -> Self {
        Self {
            reflect_probability: 0.0,
            translate_range: (0.0, 0.0),
            scale_range: (1.0, 1.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.reflect_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!(
                "reflect probability {p} is outside [0, 1]"
            )));
        }
        let (tlo, thi) = self.translate_range;
        if !(tlo.is_finite() && thi.is_finite() && tlo <= thi) {
            return Err(Error::Config(format!(
                "translation range [{tlo}, {thi}] is not an ordered finite interval"
            )));
        }
        let (slo, shi) = self.scale_range;
        if !(slo.is_finite() && shi.is_finite() && slo > 0.0 && slo <= shi) {
            return Err(Error::Config(format!(
                "scale range [{slo}, {shi}] must satisfy 0 < lo <= hi"
            )));
        }
        Ok(())
    }
}

/// The concrete transform drawn for one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationDraw {
    pub reflect: bool,
    pub translate_x: f64,
    pub translate_y: f64,
    pub scale_x: f64,
    pub scale_y: f64,
}

impl AugmentationDraw {
    /// Draws from stream `stream` of `cfg.seed`. Five uniforms are always
    /// consumed, in the order reflect, tx, ty, sx, sy.
    pub fn sample(cfg: &AugmentationConfig, stream: u64) -> Self {
        let mut rng = stream_rng(cfg.seed, stream);
        let mut uniform = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.gen::<f64>();
        let reflect = uniform((0.0, 1.0)) < cfg.reflect_probability;
        let translate_x = uniform(cfg.translate_range);
        let translate_y = uniform(cfg.translate_range);
        let scale_x = uniform(cfg.scale_range);
        let scale_y = uniform(cfg.scale_range);
        Self {
            reflect,
            translate_x,
            translate_y,
            scale_x,
            scale_y,
        }
    }

    fn is_rigid_identity(&self) -> bool {
        self.translate_x == 0.0
            && self.translate_y == 0.0
            && self.scale_x == 1.0
            && self.scale_y == 1.0
    }

    /// Applies reflect, then translate, then scale about the image center.
    /// Regions mapped from outside the frame are black.
    pub fn apply(&self, img: &RasterImage) -> RasterImage {
        let src = if self.reflect {
            flip_vertical(img)
        } else {
            img.clone()
        };
        if self.is_rigid_identity() {
            return src;
        }

        let (w, h, ch) = (src.width(), src.height(), src.channels());
        let cx = (w as f64 - 1.0) / 2.0;
        let cy = (h as f64 - 1.0) / 2.0;
        // Frame edges in pixel-center coordinates.
        let (min_x, max_x) = (-0.5, w as f64 - 0.5);
        let (min_y, max_y) = (-0.5, h as f64 - 0.5);

        let mut data = Vec::with_capacity(src.data().len());
        for y in 0..h {
            // forward: out = c + s * (in + t - c)
            let sy = cy + (y as f64 - cy) / self.scale_y - self.translate_y;
            for x in 0..w {
                let sx = cx + (x as f64 - cx) / self.scale_x - self.translate_x;
                let inside = (min_x..=max_x).contains(&sx) && (min_y..=max_y).contains(&sy);
                for c in 0..ch {
                    data.push(if inside {
                        to_u8(bilinear(&src, sx, sy, c))
                    } else {
                        0
                    });
                }
            }
        }
        RasterImage::new(w, h, ch, data).expect("augmented buffer matches source shape")
    }
}

/// Randomly reflects, translates, and scales `img`. The same
/// `(cfg.seed, stream)` always yields the same bytes.
pub fn augment(img: &RasterImage, cfg: &AugmentationConfig, stream: u64) -> Result<RasterImage> {
    cfg.validate()?;
    Ok(AugmentationDraw::sample(cfg, stream).apply(img))
}
