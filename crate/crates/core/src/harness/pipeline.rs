use std::path::Path;
use std::time::Instant;

use log::{debug, info, warn};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    evaluate_2d_miou, evaluate_3d_iou, holdout_cameras, CanonicalStep, HarnessError,
    IterationDetail, IterationRow, RunConfig, RunReport, SceneSource, Strategy, Timing,
    REPORT_SCHEMA,
};
use crate::geometry::Vec3;
use crate::masker::{ExternalMasker, MaskBackend, MaskProvider, MaskRequest, OracleMasker};
use crate::planner::{
    self, camera_on_sphere, entropy_target_for_accuracy, mean_predictive_entropy,
    sample_candidates, should_stop,
};
use crate::posterior::{
    map_labels, object_stats, read_checkpoint, total_entropy, write_checkpoint, ObjectStats,
    PosteriorError, PosteriorState,
};
use crate::render::{
    self, aggregate_evidence, prior_logit_from_render, render, Camera, Mask, RenderOutput,
};
use crate::scene::{generate_synthetic, load_scene, Scene, SplatFormat};

/// Size of the fixed camera rig sampled by [`Strategy::RandomHoldout`].
pub const CAPTURE_CAMERA_COUNT: usize = 32;
/// Canonical and capture cameras sit at this multiple of the scene radius.
const SCENE_DISTANCE_FACTOR: f64 = 2.5;

const STREAM_CANDIDATES: u64 = 0;
const STREAM_STRATEGY: u64 = 1;

fn derived_seed(seed: u64, stream: u64, iteration: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(iteration) * 16);
    rng.next_u64()
}

/// Default first view: on `+x` from the bounding-sphere center at 2.5 radii.
pub fn canonical_camera(
    scene: &Scene<f64>,
    config: &RunConfig,
) -> Result<Camera<f64>, HarnessError> {
    let bs = scene.bounding_sphere();
    let radius = bs.radius.max(crate::posterior::R_MIN);
    let position = config
        .canonical_position
        .unwrap_or(bs.center + Vec3::new(SCENE_DISTANCE_FACTOR * radius, 0.0, 0.0));
    let dir = position - bs.center;
    let dist = dir.norm();
    if !(dist > 0.0 && dist.is_finite()) {
        return Err(HarnessError::Config(
            "canonical camera position coincides with the scene center".into(),
        ));
    }
    Ok(camera_on_sphere(
        bs.center,
        dist,
        dir * (1.0 / dist),
        config.fov,
        config.resolution,
    ))
}

/// Fixed scene-centric rig: a Fibonacci lattice of directions at 2.5 scene
/// radii, independent of the posterior.
pub fn capture_cameras(scene: &Scene<f64>, fov: f64, resolution: (u32, u32)) -> Vec<Camera<f64>> {
    let bs = scene.bounding_sphere();
    let radius = SCENE_DISTANCE_FACTOR * bs.radius.max(crate::posterior::R_MIN);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..CAPTURE_CAMERA_COUNT)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / CAPTURE_CAMERA_COUNT as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            let dir = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
            camera_on_sphere(bs.center, radius, dir, fov, resolution)
        })
        .collect()
}

fn load(config: &RunConfig) -> Result<Scene<f64>, HarnessError> {
    Ok(match &config.source {
        SceneSource::File(path) => load_scene(path, SplatFormat::from_path(path))?,
        SceneSource::Generate(spec) => generate_synthetic(spec)?,
    })
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

struct Run<'a> {
    config: &'a RunConfig,
    scene: Scene<f64>,
    state: PosteriorState,
    masker: Box<dyn MaskProvider<f64>>,
    timing: Timing,
    report: RunReport,
}

impl Run<'_> {
    fn fail(
        &self,
        iteration: usize,
        source: impl Into<Box<dyn std::error::Error + Send + Sync>>,
    ) -> HarnessError {
        HarnessError::Pipeline {
            iteration,
            source: source.into(),
            partial: Box::new(self.snapshot()),
        }
    }

    fn snapshot(&self) -> RunReport {
        let mut r = self.report.clone();
        r.final_total_entropy = total_entropy(&self.state);
        r.posterior_a = (0..self.state.len()).map(|i| self.state.a(i)).collect();
        r.posterior_b = (0..self.state.len()).map(|i| self.state.b(i)).collect();
        r.labels = map_labels(&self.state);
        r.timing = self.timing;
        r
    }

    /// Object sphere from the current posterior, or the scene bounds when
    /// nothing is foreground yet.
    fn stats(&self) -> (ObjectStats, bool) {
        match object_stats(&self.scene, &self.state) {
            Ok(s) => (s, false),
            Err(PosteriorError::NoForeground) => {
                let bs = self.scene.bounding_sphere();
                (
                    ObjectStats {
                        center: bs.center,
                        radius: bs.radius.max(crate::posterior::R_MIN),
                    },
                    true,
                )
            }
            Err(e) => unreachable!("scene and posterior are aligned: {e}"),
        }
    }

    /// Masks `out`, records timing, and applies the evidence.
    /// Returns (mask, exact IG).
    fn observe(
        &mut self,
        iteration: usize,
        out: &RenderOutput<f64>,
        camera: &Camera<f64>,
    ) -> Result<(Mask, f64), HarnessError> {
        let t = Instant::now();
        let prior = (self.config.prior_blend > 0.0 || self.config.debug_images)
            .then(|| prior_logit_from_render(out, &self.state));
        let req = MaskRequest {
            render: out,
            camera,
            target_class: self.config.target_class,
            prior_logit: prior.as_ref(),
        };
        let mask = self
            .masker
            .mask(&req, &self.scene, iteration as u64)
            .map_err(|e| self.fail(iteration, e))?;
        self.timing.mask_ms += ms(t);

        let t = Instant::now();
        let ev = aggregate_evidence(out, &mask, 1).map_err(|e| self.fail(iteration, e))?;
        let ig = planner::information_gain(&self.state, &ev);
        self.state
            .update(&ev)
            .map_err(|e| self.fail(iteration, e))?;
        self.timing.update_ms += ms(t);

        if self.config.debug_images {
            if let Some(dir) = &self.config.output_dir {
                self.dump_debug(dir, iteration, out, &mask, prior.as_ref())
                    .map_err(|e| self.fail(iteration, e))?;
            }
        }
        Ok((mask, ig))
    }

    fn dump_debug(
        &self,
        dir: &Path,
        iteration: usize,
        out: &RenderOutput<f64>,
        mask: &Mask,
        prior: Option<&render::LogitImage>,
    ) -> std::io::Result<()> {
        let dir = dir.join("debug");
        std::fs::create_dir_all(&dir)?;
        render::image::write_rgb_png(out, &dir.join(format!("iter{iteration:03}_rgb.png")))?;
        render::image::write_mask_png(mask, &dir.join(format!("iter{iteration:03}_mask.png")))?;
        if let Some(p) = prior {
            render::image::write_logit_png(p, &dir.join(format!("iter{iteration:03}_prior.png")))?;
        }
        Ok(())
    }

    fn save_checkpoint(&self, iteration: usize) -> Result<(), HarnessError> {
        if let Some(path) = &self.config.checkpoint {
            write_checkpoint(&self.state, path).map_err(|e| self.fail(iteration, e))?;
        }
        Ok(())
    }
}

/// Runs the full loop: initial posterior, canonical view, then `iterations`
/// planned views, each followed by a mask, an evidence update and a refresh
/// of the object sphere.
///
/// With a checkpoint path that already exists the posterior is restored from
/// it and the canonical view is skipped; the checkpoint is rewritten after
/// every update. `B3SEG_THREADS` caps the worker count.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, HarnessError> {
    config.validate()?;
    match std::env::var("B3SEG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
            .install(|| run_inner(config)),
        _ => run_inner(config),
    }
}

fn run_inner(config: &RunConfig) -> Result<RunReport, HarnessError> {
    let start = Instant::now();
    let scene = load(config)?;
    if config.backend == MaskBackend::Oracle && !scene.has_labels() {
        return Err(HarnessError::MissingLabels(format!(
            "scene `{}` carries no labels; the oracle masker needs a generated or labeled scene",
            scene.id()
        )));
    }
    let n = scene.len();
    let resumed = config.checkpoint.as_ref().filter(|p| p.exists());
    let state = match resumed {
        Some(path) => {
            let s = read_checkpoint(path, config.a_init, config.b_init)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            if s.len() != n || s.num_classes() != 2 {
                return Err(HarnessError::Config(format!(
                    "checkpoint {} holds {} gaussians, scene has {n}",
                    path.display(),
                    s.len()
                )));
            }
            info!("resuming from checkpoint {}", path.display());
            s
        }
        None => PosteriorState::new(n, config.a_init, config.b_init)
            .map_err(|e| HarnessError::Config(e.to_string()))?,
    };
    let mut run = Run {
        config,
        masker: match &config.backend {
            MaskBackend::Oracle => Box::new(OracleMasker {
                noise: config.noise,
                prior_blend: config.prior_blend,
            }),
            MaskBackend::External(command) => Box::new(ExternalMasker {
                command: command.clone(),
            }),
        },
        report: RunReport {
            schema: REPORT_SCHEMA,
            scene_id: scene.id().to_string(),
            config: config.clone(),
            canonical: None,
            rows: Vec::new(),
            details: Vec::new(),
            stopped_early: false,
            final_total_entropy: 0.0,
            posterior_a: Vec::new(),
            posterior_b: Vec::new(),
            labels: Vec::new(),
            iou_3d: None,
            miou_2d: None,
            timing: Timing::default(),
        },
        scene,
        state,
        timing: Timing::default(),
    };

    if resumed.is_none() {
        let cam = canonical_camera(&run.scene, config)?;
        let out = render(&run.scene, &cam);
        let before = total_entropy(&run.state);
        let (mask, ig) = run.observe(0, &out, &cam)?;
        let after = total_entropy(&run.state);
        info!("canonical view: IG {ig:.4}, entropy {before:.4} -> {after:.4}");
        run.report.canonical = Some(CanonicalStep {
            camera_position: cam.position(),
            look_at: cam.look_at(),
            exact_ig: ig,
            total_entropy_before: before,
            total_entropy_after: after,
            mask_foreground_pixels: mask.count(1),
        });
        run.save_checkpoint(0)?;
    }

    let capture = (config.strategy == Strategy::RandomHoldout)
        .then(|| capture_cameras(&run.scene, config.fov, config.resolution));
    let stop_target = config.early_stop_accuracy.map(entropy_target_for_accuracy);

    for iteration in 1..=config.iterations {
        let iter_start = Instant::now();
        let (stats, used_fallback) = run.stats();
        if used_fallback {
            warn!(
                "iteration {iteration}: no foreground gaussian, sampling around the scene bounds"
            );
        }
        let before = total_entropy(&run.state);

        let t = Instant::now();
        let cseed = derived_seed(config.seed, STREAM_CANDIDATES, iteration as u64);
        let candidates = sample_candidates::<f64>(
            &stats,
            config.fov,
            config.n_candidates,
            cseed,
            config.resolution,
        );
        let mut pick =
            ChaCha8Rng::seed_from_u64(derived_seed(config.seed, STREAM_STRATEGY, iteration as u64));
        let (selected_index, camera, eig, out) = match config.strategy {
            Strategy::Eig => {
                let (score, out) = planner::select_view(&run.scene, &candidates, &run.state)
                    .map_err(|e| run.fail(iteration, e))?;
                let cam = candidates.cameras[score.camera_index];
                (score.camera_index, cam, score.eig, out)
            }
            Strategy::RandomSphere => {
                let i = pick.random_range(0..candidates.cameras.len());
                let cam = candidates.cameras[i];
                let out = render(&run.scene, &cam);
                (i, cam, planner::eig(&out, &run.state), out)
            }
            Strategy::RandomHoldout => {
                let rig = capture.as_ref().expect("rig built for this strategy");
                let i = pick.random_range(0..rig.len());
                let cam = rig[i];
                let out = render(&run.scene, &cam);
                (i, cam, planner::eig(&out, &run.state), out)
            }
        };
        run.timing.view_select_ms += ms(t);

        let (mask, ig) = run.observe(iteration, &out, &camera)?;
        let after = total_entropy(&run.state);
        let mean_h = mean_predictive_entropy(&run.state);
        debug!("iteration {iteration}: view {selected_index}, EIG {eig:.4}, IG {ig:.4}, entropy {after:.4}");
        run.report.rows.push(IterationRow {
            iter: iteration,
            selected_index,
            eig,
            exact_ig: ig,
            total_entropy_before: before,
            total_entropy_after: after,
            wall_ms: ms(iter_start),
        });
        run.report.details.push(IterationDetail {
            iter: iteration,
            sphere_center: stats.center,
            sphere_radius: candidates.sphere_radius,
            used_fallback,
            candidate_seed: cseed,
            camera_position: camera.position(),
            mask_foreground_pixels: mask.count(1),
            mean_predictive_entropy: mean_h,
        });
        run.save_checkpoint(iteration)?;
        if let Some(target) = stop_target {
            if should_stop(&run.state, target) {
                info!(
                    "early stop after iteration {iteration}: mean predictive entropy {mean_h:.4}"
                );
                run.report.stopped_early = true;
                break;
            }
        }
    }

    let t = Instant::now();
    let labels = map_labels(&run.state);
    let fg: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
    let target = config.target_class;
    if run.scene.has_labels() {
        run.report.iou_3d = Some(evaluate_3d_iou(&fg, &run.scene, target)?);
        let holdout = holdout_cameras(
            &run.scene,
            target,
            config.holdout_views,
            config.fov,
            config.resolution,
        );
        if let Some(cams) = holdout {
            run.report.miou_2d = Some(evaluate_2d_miou(&fg, &run.scene, &cams, target)?);
        }
    }
    let eval_ms = ms(t);
    debug!("evaluation took {eval_ms:.1} ms");

    run.timing.total_ms = ms(start);
    run.timing.other_ms =
        run.timing.total_ms - run.timing.mask_ms - run.timing.view_select_ms - run.timing.update_ms;
    Ok(run.snapshot())
}
