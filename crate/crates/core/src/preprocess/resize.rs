use crate::error::{Error, Result};

use super::RasterImage;

/// Bilinear sample at continuous pixel coordinates (pixel centers sit on
/// integers). Coordinates are clamped to the outermost pixel centers.
#[inline]
pub(super) fn bilinear(img: &RasterImage, x: f64, y: f64, c: u8) -> f64 {
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as u32, y0 as u32);
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let p = |xx, yy| img.pixel(xx, yy, c) as f64;
    let top = p(x0, y0) + (p(x1, y0) - p(x0, y0)) * fx;
    let bottom = p(x0, y1) + (p(x1, y1) - p(x0, y1)) * fx;
    top + (bottom - top) * fy
}

#[inline]
pub(super) fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear resize with half-pixel-center alignment.
///
/// Output pixel `(x, y)` samples the source at
/// `((x + 0.5) * W / w - 0.5, (y + 0.5) * H / h - 0.5)`, clamped to the
/// source grid, and the blend is rounded half away from zero. A 2×2
/// checkerboard `0 255 / 255 0` therefore resizes to a single pixel of 128.
pub fn resize(img: &RasterImage, target_w: u32, target_h: u32) -> Result<RasterImage> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::Domain(format!(
            "resize target {target_w}x{target_h} is empty"
        )));
    }
    if img.width() == target_w && img.height() == target_h {
        return Ok(img.clone());
    }
    let sx = img.width() as f64 / target_w as f64;
    let sy = img.height() as f64 / target_h as f64;
    let ch = img.channels();
    let mut data = Vec::with_capacity(target_w as usize * target_h as usize * ch as usize);
    for y in 0..target_h {
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        for x in 0..target_w {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            for c in 0..ch {
                data.push(to_u8(bilinear(img, src_x, src_y, c)));
            }
        }
    }
    RasterImage::new(target_w, target_h, ch, data)
}
