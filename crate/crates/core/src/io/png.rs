//! PNG reading and writing, and the square input normalization.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::atomic::write_atomic;

/// Decodes an image file as RGB in `[0, 1]`.
pub fn read_rgb(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rgb(&bytes)
}

pub fn decode_rgb(bytes: &[u8]) -> Result<Image> {
    let rgb = image::load_from_memory(bytes)?.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
    Ok(Image::from_vec(w as usize, h as usize, 3, data))
}

/// Decodes an image file as single-channel luminance in `[0, 1]`.
pub fn read_gray(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let gray = image::load_from_memory(&bytes)?.to_luma8();
    let (w, h) = gray.dimensions();
    let data = gray.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
    Ok(Image::from_vec(w as usize, h as usize, 1, data))
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit PNG encoding; one channel gives grayscale, three give RGB.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let (w, h) = (img.width as u32, img.height as u32);
    let bytes: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
    let dynamic = match img.channels {
        1 => DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, bytes).expect("buffer matches size")),
        3 => DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, bytes).expect("buffer matches size")),
        c => return Err(Error::InvalidArgument(format!("cannot encode {c}-channel image as png"))),
    };
    let mut out = Cursor::new(Vec::new());
    dynamic.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn write_png(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    write_atomic(path, &encode_png(img)?)
}

/// Bilinear, aspect-preserving resize into a `size x size` frame; the scaled
/// image is centered and the margins take `pad`.
pub fn fit_square(img: &Image, size: usize, pad: f64) -> Image {
    let (w, h, x0, y0) = square_layout(img.width, img.height, size);
    let (sx, sy) = (img.width as f64 / w as f64, img.height as f64 / h as f64);
    Image::from_fn(size, size, img.channels, |x, y, c| {
        if x < x0 || y < y0 || x >= x0 + w || y >= y0 + h {
            return pad;
        }
        let u = (x - x0) as f64 + 0.5;
        let v = (y - y0) as f64 + 0.5;
        img.sample_bilinear(u * sx, v * sy, c)
    })
}

/// Scaled size and offset of a `width x height` image inside the frame.
fn square_layout(width: usize, height: usize, size: usize) -> (usize, usize, usize, usize) {
    let scale = size as f64 / width.max(height) as f64;
    let w = ((width as f64 * scale).round() as usize).clamp(1, size);
    let h = ((height as f64 * scale).round() as usize).clamp(1, size);
    (w, h, (size - w) / 2, (size - h) / 2)
}

/// Where [`fit_square`] moves the point `p` (continuous pixel coordinates)
/// of a `width x height` image.
pub fn fit_square_point(width: usize, height: usize, size: usize, p: [f64; 2]) -> [f64; 2] {
    let (w, h, x0, y0) = square_layout(width, height, size);
    [
        p[0] * w as f64 / width as f64 + x0 as f64,
        p[1] * h as f64 / height as f64 + y0 as f64,
    ]
}
