//! Independent numerical oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

pub mod checks;

use std::f64::consts::FRAC_PI_2;

use b3seg::geometry::Vec3;
use b3seg::posterior::{EvidenceMap, PosteriorState};
use b3seg::render::{Camera, RenderOutput};
use b3seg::scene::{generate_synthetic, Gaussian, Scene, SceneSpec};
use statrs::function::beta::ln_beta;

/// Tanh-sinh quadrature of `f` over `[lo, hi]`. The integrand receives the
/// point together with its distances to both ends, so endpoint singularities
/// can be evaluated without cancellation.
pub fn tanh_sinh(lo: f64, hi: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    const H: f64 = 1.0 / 128.0;
    const T_MAX: f64 = 4.5;
    let width = hi - lo;
    let steps = (T_MAX / H) as i64;
    let mut sum = 0.0;
    for k in -steps..=steps {
        let t = k as f64 * H;
        let u = FRAC_PI_2 * t.sinh();
        let d_lo = width / (1.0 + (-2.0 * u).exp());
        let d_hi = width / (1.0 + (2.0 * u).exp());
        if d_lo <= 0.0 || d_hi <= 0.0 {
            continue;
        }
        let w = 0.5 * width * FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if w == 0.0 || !w.is_finite() {
            continue;
        }
        sum += w * f(lo + d_lo, d_lo, d_hi);
    }
    sum * H
}

/// Differential entropy of Beta(a, b) by direct quadrature of −∫ f ln f,
/// split at the mean so both halves see one endpoint each.
pub fn beta_entropy_quadrature(a: f64, b: f64) -> f64 {
    let ln_norm = ln_beta(a, b);
    let m = a / (a + b);
    let log_pdf =
        |x: f64, one_minus_x: f64| (a - 1.0) * x.ln() + (b - 1.0) * one_minus_x.ln() - ln_norm;
    let left = tanh_sinh(0.0, m, |x, _, d_hi| {
        let lf = log_pdf(x, 1.0 - m + d_hi);
        -lf.exp() * lf
    });
    let right = tanh_sinh(m, 1.0, |_, d_lo, d_hi| {
        let lf = log_pdf(m + d_lo, d_hi);
        -lf.exp() * lf
    });
    left + right
}

/// Textbook digamma form of the Beta entropy.
pub fn beta_entropy_textbook(a: f64, b: f64) -> f64 {
    use statrs::distribution::Beta;
    use statrs::statistics::Distribution;
    Beta::new(a, b).unwrap().entropy().unwrap()
}

/// Textbook digamma form of the Dirichlet entropy.
pub fn dirichlet_entropy_textbook(alpha: &[f64]) -> f64 {
    statrs::distribution::Dirichlet::new(alpha.to_vec())
        .unwrap()
        .entropy()
        .unwrap()
}

/// Σᵢ H(aᵢ, bᵢ) computed independently of the library.
pub fn total_entropy_oracle(state: &PosteriorState) -> f64 {
    (0..state.len())
        .map(|i| beta_entropy_textbook(state.a(i), state.b(i)))
        .sum()
}

pub fn reference_scene() -> Scene<f64> {
    generate_synthetic(&SceneSpec::default()).unwrap()
}

pub fn scene_with_seed(seed: u64) -> Scene<f64> {
    generate_synthetic(&SceneSpec {
        seed,
        ..SceneSpec::default()
    })
    .unwrap()
}

/// Small scene for fast property tests.
pub fn small_scene(seed: u64) -> Scene<f64> {
    generate_synthetic(&SceneSpec {
        seed,
        n_objects: 1,
        gaussians_per_object: 30,
        background_count: 60,
        workspace_extent: 4.0,
    })
    .unwrap()
}

pub fn camera_looking_at(position: Vec3<f64>, target: Vec3<f64>, res: u32) -> Camera<f64> {
    let up = b3seg::planner::up_vector((target - position).normalized().unwrap());
    Camera::new(position, target, up, 60f64.to_radians(), res, res).unwrap()
}

/// Per-Gaussian τ summed directly from the per-pixel contribution lists.
pub fn tau_from_contribs(out: &RenderOutput<f64>) -> Vec<f64> {
    let mut tau = vec![0.0; out.num_gaussians()];
    for p in 0..out.pixel_count() {
        for c in out.contribs(p) {
            tau[c.gaussian as usize] += c.weight;
        }
    }
    tau
}

pub fn isotropic(x: f64, y: f64, z: f64, scale: f64, opacity: f64, label: u32) -> Gaussian<f64> {
    Gaussian::isotropic(Vec3::new(x, y, z), scale, opacity, [0.5, 0.5, 0.5]).with_label(label)
}

/// Binary evidence map from two columns.
pub fn binary_evidence(e1: Vec<f64>, e0: Vec<f64>) -> EvidenceMap {
    EvidenceMap::binary(e1, e0).unwrap()
}
