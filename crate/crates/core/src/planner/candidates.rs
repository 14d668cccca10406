use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::Vec3;
use crate::posterior::ObjectStats;
use crate::real::Real;
use crate::render::Camera;

/// Above this `|cos|` between the view direction and `+z`, `+x` is used as up.
const UP_PARALLEL_COS: f64 = 0.999;

/// Cameras on a sphere, all looking at its center.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<T = f64> {
    pub cameras: Vec<Camera<T>>,
    pub sphere_center: Vec3<f64>,
    pub sphere_radius: f64,
    pub rng_seed: u64,
}

/// `1.5 r_obj / tan(fov / 2)`: distance at which the object fills about
/// two thirds of the vertical field of view.
pub fn sphere_radius(r_obj: f64, fov: f64) -> f64 {
    1.5 * r_obj / (0.5 * fov).tan()
}

/// `n` area-uniform unit vectors from normalized 3D standard normals.
pub fn sample_sphere_directions(n: usize, seed: u64) -> Vec<Vec3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = Vec3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if v.norm() > 1e-9 {
            out.push(v.normalized().expect("non-zero"));
        }
    }
    out
}

/// `+z` made orthogonal to `view_dir`, or `+x` when the two nearly align.
pub fn up_vector(view_dir: Vec3<f64>) -> Vec3<f64> {
    let d = view_dir.normalized().expect("non-zero view direction");
    let z = Vec3::new(0.0, 0.0, 1.0);
    let base = if d.dot(z).abs() > UP_PARALLEL_COS {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        z
    };
    (base - d * base.dot(d))
        .normalized()
        .expect("non-parallel base")
}

/// Camera at `center + radius · dir` looking at `center`.
pub fn camera_on_sphere<T: Real>(
    center: Vec3<f64>,
    radius: f64,
    dir: Vec3<f64>,
    fov: f64,
    resolution: (u32, u32),
) -> Camera<T> {
    let position = center + dir * radius;
    let up = up_vector(center - position);
    Camera::new(position, center, up, fov, resolution.0, resolution.1)
        .expect("sphere camera is valid")
        .cast()
}

/// `n_cand` cameras uniformly placed on the sphere of radius
/// [`sphere_radius`] around `stats.center`. Deterministic per `seed`.
///
/// # Panics
/// If `n_cand == 0` or `fov` is outside `(0, π)`.
pub fn sample_candidates<T: Real>(
    stats: &ObjectStats,
    fov: f64,
    n_cand: usize,
    seed: u64,
    resolution: (u32, u32),
) -> CandidateSet<T> {
    assert!(n_cand >= 1, "need at least one candidate");
    assert!(
        fov > 0.0 && fov < std::f64::consts::PI,
        "fov must lie in (0, π)"
    );
    let radius = sphere_radius(stats.radius, fov);
    let cameras = sample_sphere_directions(n_cand, seed)
        .into_iter()
        .map(|d| camera_on_sphere(stats.center, radius, d, fov, resolution))
        .collect();
    CandidateSet {
        cameras,
        sphere_center: stats.center,
        sphere_radius: radius,
        rng_seed: seed,
    }
}
