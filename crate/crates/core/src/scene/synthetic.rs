//! Deterministic synthetic scenes with ground-truth labels.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Gaussian, Scene, SceneError};
use crate::geometry::{Quat, Vec3};
use crate::real::Real;

const MAX_PLACEMENT_ATTEMPTS: usize = 2_000;
const BACKGROUND_CLEARANCE: f64 = 4.0;
/// Per-axis object splat scale, as a fraction of the cluster's mean sigma.
const OBJECT_SPLAT_SCALE: std::ops::Range<f64> = 0.15..0.3;
const OBJECT_OPACITY: std::ops::Range<f64> = 0.9..0.99;
/// Background splat scale as a fraction of the workspace extent.
const BACKGROUND_SPLAT_SCALE: f64 = 0.1;
const BACKGROUND_OPACITY: std::ops::Range<f64> = 0.9..0.99;

/// Parameters of a generated scene. `workspace_extent` is the half-size of
/// the cube `[-extent, extent]³` holding all splats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub n_objects: u32,
    pub gaussians_per_object: usize,
    pub background_count: usize,
    pub workspace_extent: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            n_objects: 1,
            gaussians_per_object: 100,
            background_count: 400,
            workspace_extent: 4.0,
        }
    }
}

impl fmt::Display for SceneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed={},objects={},per_object={},background={},extent={}",
            self.seed,
            self.n_objects,
            self.gaussians_per_object,
            self.background_count,
            self.workspace_extent
        )
    }
}

/// Parses `key=value` pairs separated by commas, e.g.
/// `seed=7,objects=1,per_object=100,background=400,extent=4`.
/// Omitted keys keep their defaults.
impl FromStr for SceneSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut spec = SceneSpec::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let bad = |e: &dyn fmt::Display| format!("bad value for `{key}`: {e}");
            match key.trim() {
                "seed" => spec.seed = value.parse().map_err(|e| bad(&e))?,
                "objects" => spec.n_objects = value.parse().map_err(|e| bad(&e))?,
                "per_object" => spec.gaussians_per_object = value.parse().map_err(|e| bad(&e))?,
                "background" => spec.background_count = value.parse().map_err(|e| bad(&e))?,
                "extent" => spec.workspace_extent = value.parse().map_err(|e| bad(&e))?,
                other => return Err(format!("unknown key `{other}`")),
            }
        }
        Ok(spec)
    }
}

struct Cluster {
    center: Vec3<f64>,
    sigma: Vec3<f64>,
    rms_radius: f64,
    base_color: [f64; 3],
}

fn uniform_in_cube(rng: &mut ChaCha8Rng, half: f64) -> Vec3<f64> {
    Vec3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Quat<f64> {
    loop {
        let q = Quat::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if let Some(q) = q.normalized().filter(|_| q.norm() > 1e-3) {
            return q;
        }
    }
}

fn object_color(label: u32) -> [f64; 3] {
    const PALETTE: [[f64; 3]; 6] = [
        [0.85, 0.25, 0.2],
        [0.2, 0.45, 0.85],
        [0.9, 0.75, 0.2],
        [0.6, 0.3, 0.75],
        [0.95, 0.5, 0.1],
        [0.2, 0.75, 0.7],
    ];
    PALETTE[(label as usize).saturating_sub(1) % PALETTE.len()]
}

/// Builds `n_objects` labeled Gaussian clouds plus label-0 clutter.
///
/// Objects are axis-aligned clusters whose centers keep a distance of at
/// least twice the sum of the two clusters' RMS radii. Background splats
/// are uniform in the workspace but kept at least four RMS radii away from
/// every object center. Object splats come first in index order, grouped
/// by label, followed by the background.
pub fn generate_synthetic<T: Real>(spec: &SceneSpec) -> Result<Scene<T>, SceneError> {
    if spec.n_objects < 1 || spec.gaussians_per_object < 1 || spec.background_count < 1 {
        return Err(SceneError::Generation(
            "object, per-object and background counts must all be at least 1".into(),
        ));
    }
    if !(spec.workspace_extent.is_finite() && spec.workspace_extent > 0.0) {
        return Err(SceneError::Generation(
            "workspace extent must be positive".into(),
        ));
    }
    let extent = spec.workspace_extent;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut clusters: Vec<Cluster> = Vec::with_capacity(spec.n_objects as usize);
    for label in 1..=spec.n_objects {
        let sigma = Vec3::new(
            0.08 * extent * rng.random_range(0.8..1.25),
            0.08 * extent * rng.random_range(0.8..1.25),
            0.08 * extent * rng.random_range(0.8..1.25),
        );
        let rms_radius = sigma.norm();
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let c = uniform_in_cube(&mut rng, 0.5 * extent);
            if clusters
                .iter()
                .all(|o| (o.center - c).norm() >= 2.0 * (o.rms_radius + rms_radius))
            {
                placed = Some(c);
                break;
            }
        }
        let center = placed.ok_or_else(|| {
            SceneError::Generation(format!(
                "could not separate object {label} from the others after \
                 {MAX_PLACEMENT_ATTEMPTS} attempts; increase the workspace extent"
            ))
        })?;
        clusters.push(Cluster {
            center,
            sigma,
            rms_radius,
            base_color: object_color(label),
        });
    }

    let mut gaussians = Vec::with_capacity(
        spec.n_objects as usize * spec.gaussians_per_object + spec.background_count,
    );
    for (k, cluster) in clusters.iter().enumerate() {
        let label = k as u32 + 1;
        let mean_sigma = (cluster.sigma.x + cluster.sigma.y + cluster.sigma.z) / 3.0;
        for _ in 0..spec.gaussians_per_object {
            let offset = Vec3::new(
                cluster.sigma.x * rng.sample::<f64, _>(StandardNormal),
                cluster.sigma.y * rng.sample::<f64, _>(StandardNormal),
                cluster.sigma.z * rng.sample::<f64, _>(StandardNormal),
            );
            let scale = Vec3::new(
                mean_sigma * rng.random_range(OBJECT_SPLAT_SCALE),
                mean_sigma * rng.random_range(OBJECT_SPLAT_SCALE),
                mean_sigma * rng.random_range(OBJECT_SPLAT_SCALE),
            );
            let jitter = rng.random_range(-0.08..0.08);
            let color = cluster
                .base_color
                .map(|c: f64| (c + jitter).clamp(0.0, 1.0));
            gaussians.push(Gaussian {
                mean: cluster.center + offset,
                scale,
                rotation: random_rotation(&mut rng),
                opacity: rng.random_range(OBJECT_OPACITY),
                color,
                gt_label: Some(label),
            });
        }
    }

    let budget = MAX_PLACEMENT_ATTEMPTS * spec.background_count.max(1);
    let mut attempts = 0;
    let mut background = 0;
    while background < spec.background_count {
        if attempts >= budget {
            return Err(SceneError::Generation(format!(
                "placed only {background} of {} background splats outside the object \
                 exclusion zones; increase the workspace extent",
                spec.background_count
            )));
        }
        attempts += 1;
        let p = uniform_in_cube(&mut rng, extent);
        if clusters
            .iter()
            .any(|c| (c.center - p).norm() < BACKGROUND_CLEARANCE * c.rms_radius)
        {
            continue;
        }
        let s = BACKGROUND_SPLAT_SCALE * extent;
        let scale = Vec3::new(
            s * rng.random_range(0.6..1.6),
            s * rng.random_range(0.6..1.6),
            s * rng.random_range(0.6..1.6),
        );
        let grey = rng.random_range(0.25..0.6);
        gaussians.push(Gaussian {
            mean: p,
            scale,
            rotation: random_rotation(&mut rng),
            opacity: rng.random_range(BACKGROUND_OPACITY),
            color: [grey, (grey + 0.1).min(1.0), grey * 0.8],
            gt_label: Some(0),
        });
        background += 1;
    }

    let gaussians = gaussians.iter().map(Gaussian::cast).collect();
    Scene::new(format!("synthetic[{spec}]"), gaussians)
}
