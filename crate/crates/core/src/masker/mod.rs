//! 2D mask providers: a ground-truth oracle with configurable corruption, and
//! a placeholder for process-external segmenters.
//!
//! Corruption stages run in a fixed order: erosion, independent pixel flips,
//! then whole-view failure. Every stage draws from its own random stream
//! keyed by `(seed, iteration, stage)`, so changing one stage's parameters
//! leaves the others' draws untouched.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;
use crate::render::{Camera, LogitImage, Mask, RenderError, RenderOutput};
use crate::scene::Scene;

#[derive(Debug, Error)]
pub enum MaskerError {
    #[error(
        "scene `{0}` has no ground-truth labels; the oracle masker needs a generated or labeled \
         scene, or an external backend"
    )]
    MissingLabels(String),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),
    #[error("unknown mask backend `{0}` (expected `oracle` or `external:<command>`)")]
    UnknownBackend(String),
    #[error("external mask backend `{0}` is not available in this build")]
    ExternalUnavailable(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// What a failed view produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    /// All-zero mask.
    #[default]
    Empty,
    /// Mask of the dominant non-target, non-background object instead.
    WrongObject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub pixel_flip_prob: f64,
    pub boundary_erode_px: u32,
    pub view_failure_prob: f64,
    pub seed: u64,
    #[serde(default)]
    pub failure_mode: FailureMode,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::noiseless(0)
    }
}

impl NoiseSpec {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            pixel_flip_prob: 0.0,
            boundary_erode_px: 0,
            view_failure_prob: 0.0,
            seed,
            failure_mode: FailureMode::Empty,
        }
    }

    pub fn validate(&self) -> Result<(), MaskerError> {
        for (name, p) in [
            ("pixel_flip_prob", self.pixel_flip_prob),
            ("view_failure_prob", self.view_failure_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(MaskerError::InvalidNoise(format!(
                    "{name} = {p} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Everything a provider sees for one selected view.
#[derive(Debug, Clone, Copy)]
pub struct MaskRequest<'a, T = f64> {
    pub render: &'a RenderOutput<T>,
    pub camera: &'a Camera<T>,
    pub target_class: u32,
    pub prior_logit: Option<&'a LogitImage>,
}

/// Source of binary target masks (1 = target) for selected views.
pub trait MaskProvider<T: Real>: Send + Sync {
    fn mask(
        &self,
        req: &MaskRequest<'_, T>,
        scene: &Scene<T>,
        iteration: u64,
    ) -> Result<Mask, MaskerError>;
}

/// Ground-truth masker, optionally stabilized by the prior image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMasker {
    pub noise: NoiseSpec,
    /// Weight given to the prior logit by [`prior_blend`]; 0 disables it.
    pub prior_blend: f64,
}

impl<T: Real> MaskProvider<T> for OracleMasker {
    fn mask(
        &self,
        req: &MaskRequest<'_, T>,
        scene: &Scene<T>,
        iteration: u64,
    ) -> Result<Mask, MaskerError> {
        let mask = oracle_mask(req, scene, &self.noise, iteration)?;
        match req.prior_logit {
            Some(prior) if self.prior_blend > 0.0 => {
                Ok(prior_blend(&mask, prior, self.prior_blend)?)
            }
            _ => Ok(mask),
        }
    }
}

/// Placeholder for a segmenter run as a separate process. Always fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalMasker {
    pub command: String,
}

impl<T: Real> MaskProvider<T> for ExternalMasker {
    fn mask(&self, _: &MaskRequest<'_, T>, _: &Scene<T>, _: u64) -> Result<Mask, MaskerError> {
        // TODO: spawn `command`, stream the render as PNG on stdin and decode the PNG mask from stdout.
        Err(MaskerError::ExternalUnavailable(self.command.clone()))
    }
}

/// Parsed backend selector: `oracle` or `external:<command>`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskBackend {
    #[default]
    Oracle,
    External(String),
}

impl FromStr for MaskBackend {
    type Err = MaskerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "oracle" => Ok(Self::Oracle),
            Some(("external", cmd)) if !cmd.trim().is_empty() => {
                Ok(Self::External(cmd.to_string()))
            }
            _ => Err(MaskerError::UnknownBackend(s.to_string())),
        }
    }
}

impl std::fmt::Display for MaskBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Oracle => f.write_str("oracle"),
            Self::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

const STREAM_FLIP: u64 = 1;
const STREAM_FAIL: u64 = 2;

fn stage_rng(seed: u64, iteration: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration.wrapping_mul(4).wrapping_add(stream));
    rng
}

/// Per-pixel dominant-contributor label, `None` for empty pixels.
fn dominant_labels<T: Real>(out: &RenderOutput<T>, scene: &Scene<T>) -> Vec<Option<u32>> {
    (0..out.pixel_count())
        .map(|p| {
            out.dominant_contributor(p)
                .and_then(|g| scene.gaussian(g as usize).gt_label)
        })
        .collect()
}

/// Binary mask of pixels whose dominant contributor satisfies `is_fg`.
pub fn dominant_mask<T: Real>(out: &RenderOutput<T>, is_fg: impl Fn(usize) -> bool) -> Mask {
    let fg: Vec<bool> = (0..out.pixel_count())
        .map(|p| {
            out.dominant_contributor(p)
                .is_some_and(|g| is_fg(g as usize))
        })
        .collect();
    Mask::from_bools(out.width(), out.height(), &fg).expect("render-sized mask")
}

/// Keeps a pixel only if every in-bounds pixel within Chebyshev distance `k` is set.
fn erode(fg: &[bool], width: usize, height: usize, k: usize) -> Vec<bool> {
    if k == 0 {
        return fg.to_vec();
    }
    let mut out = vec![false; fg.len()];
    for y in 0..height {
        for x in 0..width {
            if !fg[y * width + x] {
                continue;
            }
            let (y0, y1) = (y.saturating_sub(k), (y + k).min(height - 1));
            let (x0, x1) = (x.saturating_sub(k), (x + k).min(width - 1));
            out[y * width + x] = (y0..=y1).all(|yy| (x0..=x1).all(|xx| fg[yy * width + xx]));
        }
    }
    out
}

/// Ground-truth target mask for a rendered view, corrupted per `noise`.
/// Deterministic per `(noise.seed, iteration)`.
pub fn oracle_mask<T: Real>(
    req: &MaskRequest<'_, T>,
    scene: &Scene<T>,
    noise: &NoiseSpec,
    iteration: u64,
) -> Result<Mask, MaskerError> {
    if !scene.has_labels() {
        return Err(MaskerError::MissingLabels(scene.id().to_string()));
    }
    noise.validate()?;
    let out = req.render;
    let (w, h) = (out.width() as usize, out.height() as usize);
    let labels = dominant_labels(out, scene);
    let clean: Vec<bool> = labels
        .iter()
        .map(|&l| l == Some(req.target_class))
        .collect();

    let mut fg = erode(&clean, w, h, noise.boundary_erode_px as usize);

    let mut rng = stage_rng(noise.seed, iteration, STREAM_FLIP);
    for px in &mut fg {
        // One draw per pixel regardless of the probability keeps streams aligned.
        let u: f64 = rng.random();
        if u < noise.pixel_flip_prob {
            *px = !*px;
        }
    }

    let mut rng = stage_rng(noise.seed, iteration, STREAM_FAIL);
    let u: f64 = rng.random();
    if u < noise.view_failure_prob {
        fg = match noise.failure_mode {
            FailureMode::Empty => vec![false; w * h],
            FailureMode::WrongObject => wrong_object(&labels, req.target_class),
        };
    }
    Ok(Mask::from_bools(out.width(), out.height(), &fg)?)
}

/// Pixels of the object (non-zero, non-target label) covering most of the view.
fn wrong_object(labels: &[Option<u32>], target: u32) -> Vec<bool> {
    let mut counts: std::collections::BTreeMap<u32, usize> = Default::default();
    for l in labels.iter().flatten().filter(|&&l| l != 0 && l != target) {
        *counts.entry(*l).or_default() += 1;
    }
    let other = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&l, _)| l);
    labels
        .iter()
        .map(|&l| other.is_some() && l == other)
        .collect()
}

/// Per pixel, 1 iff `w·σ(prior) + (1 - w)·mask ≥ 0.5`.
pub fn prior_blend(
    mask: &Mask,
    prior_logit: &LogitImage,
    blend_weight: f64,
) -> Result<Mask, RenderError> {
    mask.check_dims(prior_logit.width, prior_logit.height)?;
    if mask.num_classes() != 2 {
        return Err(RenderError::DimensionMismatch(format!(
            "prior blending needs a binary mask, got {} classes",
            mask.num_classes()
        )));
    }
    if blend_weight == 0.0 {
        return Ok(mask.clone());
    }
    let fg: Vec<bool> = mask
        .labels()
        .iter()
        .zip(&prior_logit.values)
        .map(|(&m, &r)| {
            let sigma = 1.0 / (1.0 + (-r).exp());
            blend_weight * sigma + (1.0 - blend_weight) * f64::from(m) >= 0.5
        })
        .collect();
    Mask::from_bools(mask.width(), mask.height(), &fg)
}
