//! Software splat rasterizer, evidence aggregation and prior-logit images.

mod camera;
mod evidence;
pub mod image;
mod prior;
mod raster;

pub use camera::Camera;
pub use evidence::{aggregate_evidence, aggregate_evidence_multiclass};
pub use prior::{prior_logit_from_render, render_prior_logit, LogitImage, PRIOR_EPS};
pub use raster::{
    render, render_responsibilities, Contribution, RenderOutput, ALPHA_MAX, FOOTPRINT_SIGMAS,
    NEAR_PLANE, SCREEN_DILATION, TRANSMITTANCE_EPS,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("class {class} out of range for a {num_classes}-class mask")]
    InvalidClass { class: u32, num_classes: u32 },
}

/// Per-pixel class image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    num_classes: u32,
    labels: Vec<u32>,
}

impl Mask {
    pub fn new(
        width: u32,
        height: u32,
        num_classes: u32,
        labels: Vec<u32>,
    ) -> Result<Self, RenderError> {
        if num_classes < 2 {
            return Err(RenderError::DimensionMismatch(format!(
                "a mask needs at least 2 classes, got {num_classes}"
            )));
        }
        if labels.len() != width as usize * height as usize {
            return Err(RenderError::DimensionMismatch(format!(
                "{} labels for a {width}x{height} mask",
                labels.len()
            )));
        }
        if let Some(&class) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(RenderError::InvalidClass { class, num_classes });
        }
        Ok(Self {
            width,
            height,
            num_classes,
            labels,
        })
    }

    /// Binary mask from per-pixel foreground flags.
    pub fn from_bools(width: u32, height: u32, fg: &[bool]) -> Result<Self, RenderError> {
        Self::new(width, height, 2, fg.iter().map(|&b| b as u32).collect())
    }

    pub fn filled(
        width: u32,
        height: u32,
        num_classes: u32,
        label: u32,
    ) -> Result<Self, RenderError> {
        Self::new(
            width,
            height,
            num_classes,
            vec![label; width as usize * height as usize],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    /// Number of pixels carrying `class`.
    pub fn count(&self, class: u32) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }

    pub(crate) fn check_dims(&self, width: u32, height: u32) -> Result<(), RenderError> {
        if (self.width, self.height) != (width, height) {
            return Err(RenderError::DimensionMismatch(format!(
                "mask is {}x{}, render is {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}
