//! Image normalization and randomized train-time augmentation.

mod augment;
mod raster;
mod resize;

pub use augment::{augment, AugmentationConfig, AugmentationDraw};
pub use raster::{flip_vertical, load_image, save_png, to_gray, to_rgb, RasterImage};
pub use resize::resize;

/// Network input side used by every committee member's preprocessing.
pub const DEFAULT_INPUT_SIDE: u32 = 224;
