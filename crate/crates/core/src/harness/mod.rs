//! End-to-end segmentation runs, metrics and output files.

mod artifacts;
mod metrics;
mod pipeline;

pub use artifacts::{emit_artifacts, LABELS_HEADER, RUN_HEADER, SCATTER_HEADER};
pub use metrics::{
    evaluate_2d_miou, evaluate_3d_iou, holdout_cameras, mask_iou, pearson, sign_test_one_sided,
};
pub use pipeline::{canonical_camera, capture_cameras, run_pipeline, CAPTURE_CAMERA_COUNT};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::masker::{MaskBackend, NoiseSpec};
use crate::scene::SceneSpec;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] crate::scene::SceneError),
    #[error("evaluation needs ground-truth labels: {0}")]
    MissingLabels(String),
    #[error("pipeline failed at iteration {iteration}: {source}")]
    Pipeline {
        iteration: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
        /// Rows completed before the failure.
        partial: Box<RunReport>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON output: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Configuration and input problems are validation errors (exit code 2),
    /// everything else is a pipeline failure (exit code 3).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::Config(_) | Self::Scene(_) | Self::MissingLabels(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    File(PathBuf),
    Generate(SceneSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Highest expected information gain among the sphere candidates.
    Eig,
    /// A uniformly random sphere candidate.
    RandomSphere,
    /// A uniformly random camera from a fixed, scene-centric capture rig.
    RandomHoldout,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eig" => Ok(Self::Eig),
            "random_sphere" => Ok(Self::RandomSphere),
            "random_holdout" => Ok(Self::RandomHoldout),
            other => Err(format!(
                "unknown strategy `{other}` (expected eig, random_sphere or random_holdout)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: SceneSource,
    pub target_class: u32,
    pub iterations: usize,
    pub n_candidates: usize,
    pub a_init: f64,
    pub b_init: f64,
    pub resolution: (u32, u32),
    /// Vertical field of view in radians.
    pub fov: f64,
    pub backend: MaskBackend,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub strategy: Strategy,
    /// Stop once the mean-accuracy bound reaches this value.
    pub early_stop_accuracy: Option<f64>,
    /// Weight of the prior image when blending oracle masks; 0 disables it.
    pub prior_blend: f64,
    /// Overrides the default camera position of the first view.
    pub canonical_position: Option<Vec3<f64>>,
    /// Number of held-out views for the 2D metric.
    pub holdout_views: usize,
    pub checkpoint: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Dump PNG images of every selected view into `output_dir/debug`.
    pub debug_images: bool,
}

impl RunConfig {
    pub fn new(source: SceneSource, target_class: u32) -> Self {
        Self {
            source,
            target_class,
            iterations: 20,
            n_candidates: 20,
            a_init: 1.0,
            b_init: 1.0,
            resolution: (128, 128),
            fov: 60f64.to_radians(),
            backend: MaskBackend::Oracle,
            noise: NoiseSpec::noiseless(0),
            seed: 0,
            strategy: Strategy::Eig,
            early_stop_accuracy: None,
            prior_blend: 0.0,
            canonical_position: None,
            holdout_views: 8,
            checkpoint: None,
            output_dir: None,
            debug_images: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        if self.n_candidates < 1 {
            return bad("candidate count must be at least 1".into());
        }
        if !(self.a_init > 0.0
            && self.a_init.is_finite()
            && self.b_init > 0.0
            && self.b_init.is_finite())
        {
            return bad(format!(
                "a_init and b_init must be positive, got {} and {}",
                self.a_init, self.b_init
            ));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return bad("resolution must be at least 1x1".into());
        }
        if !(self.fov > 0.0 && self.fov < std::f64::consts::PI) {
            return bad(format!("fov must lie in (0, π) radians, got {}", self.fov));
        }
        if self.holdout_views < 1 {
            return bad("need at least one held-out view".into());
        }
        if let Some(a) = self.early_stop_accuracy {
            if !(0.5..=1.0).contains(&a) {
                return bad(format!("early-stop accuracy must lie in [0.5, 1], got {a}"));
            }
        }
        if !(0.0..=1.0).contains(&self.prior_blend) {
            return bad(format!(
                "prior blend weight must lie in [0, 1], got {}",
                self.prior_blend
            ));
        }
        self.noise
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// One planned view; also the `run.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iter: usize,
    pub selected_index: usize,
    pub eig: f64,
    pub exact_ig: f64,
    pub total_entropy_before: f64,
    pub total_entropy_after: f64,
    pub wall_ms: f64,
}

/// Bookkeeping for one planned view beyond the CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDetail {
    pub iter: usize,
    pub sphere_center: Vec3<f64>,
    pub sphere_radius: f64,
    /// True when no splat was foreground and the scene bounds were used.
    pub used_fallback: bool,
    pub candidate_seed: u64,
    pub camera_position: Vec3<f64>,
    pub mask_foreground_pixels: usize,
    pub mean_predictive_entropy: f64,
}

/// The first, unplanned view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalStep {
    pub camera_position: Vec3<f64>,
    pub look_at: Vec3<f64>,
    pub exact_ig: f64,
    pub total_entropy_before: f64,
    pub total_entropy_after: f64,
    pub mask_foreground_pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub mask_ms: f64,
    pub view_select_ms: f64,
    pub update_ms: f64,
    pub other_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub scene_id: String,
    pub config: RunConfig,
    /// `None` when the run resumed from a checkpoint.
    pub canonical: Option<CanonicalStep>,
    pub rows: Vec<IterationRow>,
    pub details: Vec<IterationDetail>,
    pub stopped_early: bool,
    pub final_total_entropy: f64,
    pub posterior_a: Vec<f64>,
    pub posterior_b: Vec<f64>,
    pub labels: Vec<u32>,
    pub iou_3d: Option<f64>,
    pub miou_2d: Option<f64>,
    pub timing: Timing,
}

impl RunReport {
    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.timing = Timing::default();
        for row in &mut r.rows {
            row.wall_ms = 0.0;
        }
        r
    }

    /// Predicted foreground flags from the MAP labels.
    pub fn foreground(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l == 1).collect()
    }
}
