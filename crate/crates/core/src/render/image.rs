//! 8-bit PNG debug dumps. Quantization is lossy.

use std::io;
use std::path::Path;

use ::image::{GrayImage, RgbImage};

use super::{LogitImage, Mask, RenderOutput};
use crate::real::Real;

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn save(result: ::image::ImageResult<()>) -> io::Result<()> {
    result.map_err(|e| match e {
        ::image::ImageError::IoError(e) => e,
        other => io::Error::other(other),
    })
}

fn grey(width: u32, height: u32, data: Vec<u8>, path: &Path) -> io::Result<()> {
    let img = GrayImage::from_raw(width, height, data).expect("one byte per pixel");
    save(img.save_with_format(path, ::image::ImageFormat::Png))
}

pub fn write_rgb_png<T: Real>(out: &RenderOutput<T>, path: &Path) -> io::Result<()> {
    let data: Vec<u8> = out
        .rgb()
        .iter()
        .flat_map(|px| px.map(|c| quantize(c.as_f64())))
        .collect();
    let img = RgbImage::from_raw(out.width(), out.height(), data).expect("three bytes per pixel");
    save(img.save_with_format(path, ::image::ImageFormat::Png))
}

/// Grey levels spread the classes evenly over `[0, 255]`.
pub fn write_mask_png(mask: &Mask, path: &Path) -> io::Result<()> {
    let top = f64::from(mask.num_classes() - 1);
    let data: Vec<u8> = mask
        .labels()
        .iter()
        .map(|&l| quantize(f64::from(l) / top))
        .collect();
    grey(mask.width(), mask.height(), data, path)
}

/// Logits are mapped through the logistic function.
pub fn write_logit_png(img: &LogitImage, path: &Path) -> io::Result<()> {
    let data: Vec<u8> = img
        .values
        .iter()
        .map(|&r| quantize(1.0 / (1.0 + (-r).exp())))
        .collect();
    grey(img.width, img.height, data, path)
}
