use std::path::Path;

use image::{ColorType, DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};

/// 8-bit image, row-major, channels interleaved. One or three channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Format(format!(
                "unsupported channel count {channels}, expected 1 or 3"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{} bytes for a {width}x{height}x{channels} image, expected {expected}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32, c: u8) -> u8 {
        self.data[((y as usize * self.width as usize + x as usize) * self.channels as usize)
            + c as usize]
    }
}

/// Replicates a gray channel into RGB; RGB passes through unchanged.
pub fn to_rgb(img: &RasterImage) -> Result<RasterImage> {
    match img.channels {
        3 => Ok(img.clone()),
        1 => {
            let data = img.data.iter().flat_map(|&v| [v, v, v]).collect();
            RasterImage::new(img.width, img.height, 3, data)
        }
        c => Err(Error::Format(format!("unsupported channel count {c}"))),
    }
}

/// Rec. 601 luma, `0.299 R + 0.587 G + 0.114 B`, rounded half away from zero.
pub fn to_gray(img: &RasterImage) -> Result<RasterImage> {
    match img.channels {
        1 => Ok(img.clone()),
        3 => {
            let data = img
                .data
                .chunks_exact(3)
                .map(|p| {
                    let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                    y.round().clamp(0.0, 255.0) as u8
                })
                .collect();
            RasterImage::new(img.width, img.height, 1, data)
        }
        c => Err(Error::Format(format!("unsupported channel count {c}"))),
    }
}

/// Top-bottom reflection.
pub fn flip_vertical(img: &RasterImage) -> RasterImage {
    let row = img.width as usize * img.channels as usize;
    let data = img
        .data
        .chunks_exact(row)
        .rev()
        .flatten()
        .copied()
        .collect();
    RasterImage {
        data,
        ..img.clone()
    }
}

/// Reads PNG or JPEG. Gray sources stay single channel; everything else is
/// converted to 8-bit RGB.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let dynimg = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = (dynimg.width(), dynimg.height());
    match dynimg.color() {
        ColorType::L8 | ColorType::L16 | ColorType::La8 | ColorType::La16 => {
            RasterImage::new(w, h, 1, dynimg.to_luma8().into_raw())
        }
        _ => RasterImage::new(w, h, 3, dynimg.to_rgb8().into_raw()),
    }
}

pub fn save_png(img: &RasterImage, path: &Path) -> Result<()> {
    let dynimg = match img.channels {
        1 => GrayImage::from_raw(img.width, img.height, img.data.clone()).map(DynamicImage::from),
        _ => RgbImage::from_raw(img.width, img.height, img.data.clone()).map(DynamicImage::from),
    }
    .ok_or_else(|| Error::Format("buffer does not match image dimensions".into()))?;
    dynimg
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}
