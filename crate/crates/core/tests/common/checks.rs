//! Randomized checks shared by the property tests and the acceptance suite.
//! Each returns the observed extreme so callers decide the tolerance.

use b3seg::harness::{run_pipeline, RunConfig, RunReport, SceneSource, Strategy};
use b3seg::masker::{oracle_mask, MaskRequest, NoiseSpec};
use b3seg::planner::{
    eig, eig_from_responsibilities, expected_evidence, greedy_ratio_check, sample_candidates,
    sample_sphere_directions,
};
use b3seg::posterior::{beta_entropy, map_labels, object_stats, EvidenceMap, PosteriorState};
use b3seg::render::{aggregate_evidence, render, RenderOutput};
use b3seg::scene::{generate_synthetic, Scene, SceneSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{beta_entropy_quadrature, camera_looking_at};

/// Smallest EIG over `trials` random (state, τ) draws. States are reachable
/// from the uniform prior (a, b ≥ 1, hence κ ≥ 2).
pub fn random_state_min_eig(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.random_range(1..64);
        let mut counts = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let b = 10f64.powf(rng.random_range(0.0..4.0));
            let a = 10f64.powf(rng.random_range(0.0..4.0));
            counts.extend([b, a]);
        }
        let state = PosteriorState::from_counts(2, counts, 1.0, 1.0).unwrap();
        let tau: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => 0.0,
                1 => rng.random_range(0.0..1e-3),
                2 => rng.random_range(0.0..5.0),
                _ => 10f64.powf(rng.random_range(-2.0..3.5)),
            })
            .collect();
        worst = worst.min(eig_from_responsibilities(&tau, &state));
    }
    worst
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Largest |beta_entropy − quadrature| on an n×n log-grid of [0.5, 100]².
pub fn beta_entropy_grid_error(n: usize) -> f64 {
    let grid = log_grid(0.5, 100.0, n);
    let mut worst = 0f64;
    for &a in &grid {
        for &b in &grid {
            worst = worst.max((beta_entropy(a, b).unwrap() - beta_entropy_quadrature(a, b)).abs());
        }
    }
    worst
}

/// Splats whose MAP label differs from argmax(Σe0, Σe1) (ties to class 0)
/// over `streams` random evidence streams from a symmetric prior.
pub fn map_rule_mismatches(streams: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for stream in 0..streams {
        let n = 200;
        let views = rng.random_range(1..12);
        // Even streams use a dyadic grid so exact ties occur.
        let dyadic = stream % 2 == 0;
        let mut state = PosteriorState::new(n, 1.0, 1.0).unwrap();
        let mut sum1 = vec![0.0f64; n];
        let mut sum0 = vec![0.0f64; n];
        for _ in 0..views {
            let draw = |rng: &mut ChaCha8Rng| -> f64 {
                if rng.random_bool(0.3) {
                    0.0
                } else if dyadic {
                    rng.random_range(0..8) as f64 / 4.0
                } else {
                    rng.random_range(0.0..5.0)
                }
            };
            let e1: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
            let e0: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
            for i in 0..n {
                sum1[i] += e1[i];
                sum0[i] += e0[i];
            }
            state.update(&EvidenceMap::binary(e1, e0).unwrap()).unwrap();
        }
        let labels = map_labels(&state);
        mismatches += (0..n)
            .filter(|&i| labels[i] != u32::from(sum1[i] > sum0[i]))
            .count();
    }
    mismatches
}

struct View {
    out: RenderOutput<f64>,
    evidence: EvidenceMap,
}

/// Renders `count` views around the scene center with oracle evidence.
fn view_pool(scene: &Scene<f64>, count: usize, seed: u64, flip: f64, res: u32) -> Vec<View> {
    let sphere = scene.bounding_sphere();
    let noise = NoiseSpec {
        pixel_flip_prob: flip,
        ..NoiseSpec::noiseless(seed)
    };
    sample_sphere_directions(count, seed)
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            let dist = 0.6 * sphere.radius * (1.0 + k as f64 / count as f64);
            let cam = camera_looking_at(sphere.center + d * dist, sphere.center, res);
            let out = render(scene, &cam);
            let req = MaskRequest {
                render: &out,
                camera: &cam,
                target_class: 1,
                prior_logit: None,
            };
            let mask = oracle_mask(&req, scene, &noise, k as u64).unwrap();
            let evidence = aggregate_evidence(&out, &mask, 1).unwrap();
            View { out, evidence }
        })
        .collect()
}

/// How `S′` extends `S` in [`diminishing_gaps`].
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Evidence from the oracle masks of the extra views.
    Observed,
    /// The extra views' expected evidence under the current means.
    AtMean,
}

/// Most negative `eig(v | S) − eig(v | S′)` over `trajectories` samples, plus
/// the number of samples below −1e-9. Every splat starts at Beta(prior, prior).
pub fn diminishing_gaps(
    trajectories: usize,
    seed: u64,
    prior: f64,
    extension: Extension,
) -> (f64, usize) {
    const SCENES: usize = 10;
    const POOL: usize = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<(usize, Vec<View>)> = (0..SCENES)
        .map(|s| {
            let scene: Scene<f64> = generate_synthetic(&SceneSpec {
                seed: seed.wrapping_add(s as u64),
                ..SceneSpec::default()
            })
            .unwrap();
            let flip = if s % 2 == 0 { 0.0 } else { 0.1 };
            (
                scene.len(),
                view_pool(&scene, POOL, seed ^ s as u64, flip, 32),
            )
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for t in 0..trajectories {
        let (n, pool) = &pools[t % SCENES];
        let mut order: Vec<usize> = (0..POOL).collect();
        order.shuffle(&mut rng);
        let in_s = rng.random_range(0..5);
        let extra = rng.random_range(1..5);
        let v = order[in_s + extra];
        let mut s = PosteriorState::new(*n, prior, prior).unwrap();
        for &i in &order[..in_s] {
            s.update(&pool[i].evidence).unwrap();
        }
        let mut s2 = s.clone();
        for &i in &order[in_s..in_s + extra] {
            match extension {
                Extension::Observed => s2.update(&pool[i].evidence).unwrap(),
                Extension::AtMean => s2.update(&expected_evidence(&pool[i].out, &s2)).unwrap(),
            }
        }
        let gap = eig(&pool[v].out, &s) - eig(&pool[v].out, &s2);
        worst = worst.min(gap);
        violations += usize::from(gap < -1e-9);
    }
    (worst, violations)
}

/// Posterior after one noiseless oracle view from a random direction.
pub fn observed_state(scene: &Scene<f64>, seed: u64, res: u32) -> PosteriorState {
    let sphere = scene.bounding_sphere();
    let d = sample_sphere_directions(1, seed)[0];
    let cam = camera_looking_at(
        sphere.center + d * (1.5 * sphere.radius),
        sphere.center,
        res,
    );
    let out = render(scene, &cam);
    let req = MaskRequest {
        render: &out,
        camera: &cam,
        target_class: 1,
        prior_logit: None,
    };
    let mask = oracle_mask(&req, scene, &NoiseSpec::noiseless(seed), 0).unwrap();
    let ev = aggregate_evidence(&out, &mask, 1).unwrap();
    PosteriorState::new(scene.len(), 1.0, 1.0)
        .unwrap()
        .updated(&ev)
        .unwrap()
}

/// Greedy / optimal ratios for every k in `ks` and candidate count in
/// `sizes` over `scenes` random scenes. Returns (minimum ratio, checks run).
pub fn greedy_ratio_min(
    scenes: usize,
    ks: &[usize],
    sizes: &[usize],
    seed: u64,
    res: u32,
) -> (f64, usize) {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for s in 0..scenes {
        let scene: Scene<f64> = generate_synthetic(&SceneSpec {
            seed: seed + s as u64,
            gaussians_per_object: 60,
            background_count: 200,
            ..SceneSpec::default()
        })
        .unwrap();
        let state = observed_state(&scene, seed + s as u64, res);
        let stats =
            object_stats(&scene, &state).unwrap_or_else(|_| b3seg::posterior::ObjectStats {
                center: scene.bounding_sphere().center,
                radius: scene.bounding_sphere().radius,
            });
        for &n in sizes {
            let cands = sample_candidates::<f64>(
                &stats,
                60f64.to_radians(),
                n,
                seed ^ (s * 31 + n) as u64,
                (res, res),
            );
            for &k in ks {
                let r = greedy_ratio_check(&scene, &cands, k, &state).unwrap();
                worst = worst.min(r.ratio);
                count += 1;
            }
        }
    }
    (worst, count)
}

pub fn pipeline_config(scene_seed: u64, run_seed: u64, flip: f64, strategy: Strategy) -> RunConfig {
    let mut c = RunConfig::new(
        SceneSource::Generate(SceneSpec {
            seed: scene_seed,
            ..SceneSpec::default()
        }),
        1,
    );
    c.seed = run_seed;
    c.noise = NoiseSpec {
        pixel_flip_prob: flip,
        ..NoiseSpec::noiseless(run_seed)
    };
    c.strategy = strategy;
    c
}

/// The frozen reference run: scene seed 7, default sizes, T = 20, 20 candidates, 128².
pub fn reference_run(flip: f64) -> RunReport {
    run_pipeline(&pipeline_config(7, 7, flip, Strategy::Eig)).unwrap()
}

/// (eig, exact_ig) pairs from the selected views of pipeline runs.
pub fn fidelity_pairs(scene_seeds: std::ops::Range<u64>, flip: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in scene_seeds {
        let report = run_pipeline(&pipeline_config(s, s, flip, Strategy::Eig)).unwrap();
        for row in &report.rows {
            x.push(row.eig);
            y.push(row.exact_ig);
        }
    }
    (x, y)
}

/// Final total entropy of the EIG and random-sphere strategies on one seed.
pub fn strategy_pair(seed: u64) -> (f64, f64) {
    let eig = run_pipeline(&pipeline_config(7, seed, 0.0, Strategy::Eig)).unwrap();
    let rnd = run_pipeline(&pipeline_config(7, seed, 0.0, Strategy::RandomSphere)).unwrap();
    (eig.final_total_entropy, rnd.final_total_entropy)
}

/// Non-increasing total entropy check; returns the largest single-step rise.
pub fn largest_entropy_rise(report: &RunReport) -> f64 {
    report
        .rows
        .iter()
        .map(|r| r.total_entropy_after - r.total_entropy_before)
        .fold(f64::NEG_INFINITY, f64::max)
}
