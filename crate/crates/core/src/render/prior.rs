//! Posterior-mean prior image `R = logit(Σ mᵢ wᵢ)`.

use super::{render, Camera, RenderOutput};
use crate::posterior::PosteriorState;
use crate::real::Real;
use crate::scene::Scene;

/// Soft coverage is clamped to `[PRIOR_EPS, 1 - PRIOR_EPS]` before the logit.
pub const PRIOR_EPS: f64 = 1e-6;

/// Row-major scalar image of logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitImage {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl LogitImage {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Renders `scene` from `camera` and converts it with [`prior_logit_from_render`].
pub fn render_prior_logit<T: Real>(
    scene: &Scene<T>,
    camera: &Camera<T>,
    posterior: &PosteriorState,
) -> LogitImage {
    prior_logit_from_render(&render(scene, camera), posterior)
}

/// Prior logits from an existing render. Each splat is weighted by its
/// posterior probability of class 1.
///
/// # Panics
/// If the posterior and the render disagree on the number of splats.
pub fn prior_logit_from_render<T: Real>(
    out: &RenderOutput<T>,
    posterior: &PosteriorState,
) -> LogitImage {
    assert_eq!(
        posterior.len(),
        out.num_gaussians(),
        "posterior length must equal scene size"
    );
    let means: Vec<f64> = (0..posterior.len())
        .map(|i| posterior.class_mean(i, 1))
        .collect();
    let values = (0..out.pixel_count())
        .map(|p| {
            let soft: f64 = out
                .contribs(p)
                .iter()
                .map(|c| means[c.gaussian as usize] * c.weight.as_f64())
                .sum();
            let s = soft.clamp(PRIOR_EPS, 1.0 - PRIOR_EPS);
            (s / (1.0 - s)).ln()
        })
        .collect();
    LogitImage {
        width: out.width(),
        height: out.height(),
        values,
    }
}
