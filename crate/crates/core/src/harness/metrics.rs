use log::warn;

use super::HarnessError;
use crate::geometry::Vec3;
use crate::masker::dominant_mask;
use crate::planner::{camera_on_sphere, sphere_radius};
use crate::real::Real;
use crate::render::{render, Camera, Mask};
use crate::scene::Scene;

/// Elevation of the held-out ring for the 2D metric.
const HOLDOUT_ELEVATION_DEG: f64 = 30.0;

fn gt_foreground<T: Real>(scene: &Scene<T>, target: u32) -> Result<Vec<bool>, HarnessError> {
    if !scene.has_labels() {
        return Err(HarnessError::MissingLabels(scene.id().to_string()));
    }
    Ok(scene
        .gaussians()
        .iter()
        .map(|g| g.gt_label == Some(target))
        .collect())
}

fn set_iou(a: impl Iterator<Item = (bool, bool)>) -> Option<f64> {
    let (mut inter, mut union) = (0usize, 0usize);
    for (p, g) in a {
        inter += (p && g) as usize;
        union += (p || g) as usize;
    }
    (union > 0).then(|| inter as f64 / union as f64)
}

/// Intersection over union of predicted and ground-truth target splats.
/// Two empty sets score 1 (with a warning).
pub fn evaluate_3d_iou<T: Real>(
    labels: &[bool],
    scene: &Scene<T>,
    target_class: u32,
) -> Result<f64, HarnessError> {
    let gt = gt_foreground(scene, target_class)?;
    if labels.len() != gt.len() {
        return Err(HarnessError::Config(format!(
            "{} labels for {} gaussians",
            labels.len(),
            gt.len()
        )));
    }
    Ok(set_iou(labels.iter().copied().zip(gt)).unwrap_or_else(|| {
        warn!("3D IoU of two empty sets reported as 1");
        1.0
    }))
}

/// Pixel IoU of two binary masks; 1 when both are empty.
pub fn mask_iou(a: &Mask, b: &Mask) -> f64 {
    set_iou(
        a.labels()
            .iter()
            .zip(b.labels())
            .map(|(&x, &y)| (x == 1, y == 1)),
    )
    .unwrap_or(1.0)
}

/// Mean over `holdout_cameras` of the IoU between dominant-contributor masks
/// of the predicted and the ground-truth labels.
pub fn evaluate_2d_miou<T: Real>(
    labels: &[bool],
    scene: &Scene<T>,
    holdout_cameras: &[Camera<T>],
    target_class: u32,
) -> Result<f64, HarnessError> {
    if holdout_cameras.is_empty() {
        return Err(HarnessError::Config(
            "need at least one held-out camera".into(),
        ));
    }
    let gt = gt_foreground(scene, target_class)?;
    if labels.len() != gt.len() {
        return Err(HarnessError::Config(format!(
            "{} labels for {} gaussians",
            labels.len(),
            gt.len()
        )));
    }
    let total: f64 = holdout_cameras
        .iter()
        .map(|cam| {
            let out = render(scene, cam);
            mask_iou(
                &dominant_mask(&out, |g| labels[g]),
                &dominant_mask(&out, |g| gt[g]),
            )
        })
        .sum();
    Ok(total / holdout_cameras.len() as f64)
}

/// `n` cameras on a 30° elevation ring around the ground-truth object, at
/// the planner's sphere distance for its mean radius. `None` when the scene
/// has no splat of `target_class`.
pub fn holdout_cameras(
    scene: &Scene<f64>,
    target_class: u32,
    n: usize,
    fov: f64,
    resolution: (u32, u32),
) -> Option<Vec<Camera<f64>>> {
    let pts: Vec<Vec3<f64>> = scene
        .gaussians()
        .iter()
        .filter(|g| g.gt_label == Some(target_class))
        .map(|g| g.mean)
        .collect();
    if pts.is_empty() {
        return None;
    }
    let inv = 1.0 / pts.len() as f64;
    let center = pts.iter().fold(Vec3::zero(), |a, &p| a + p) * inv;
    let r_obj =
        (pts.iter().map(|&p| (p - center).norm()).sum::<f64>() * inv).max(crate::posterior::R_MIN);
    let dist = sphere_radius(r_obj, fov);
    let elev = HOLDOUT_ELEVATION_DEG.to_radians();
    Some(
        (0..n)
            .map(|k| {
                let az = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let dir = Vec3::new(elev.cos() * az.cos(), elev.cos() * az.sin(), elev.sin());
                camera_on_sphere(center, dist, dir, fov, resolution)
            })
            .collect(),
    )
}

/// One-sided sign test: `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`.
pub fn sign_test_one_sided(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // ln C(n, k) accumulated incrementally; n stays small in practice.
    let mut ln_c = 0.0;
    let mut p = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            p += (ln_c - n as f64 * std::f64::consts::LN_2).exp();
        }
    }
    p.min(1.0)
}

/// Pearson correlation coefficient; `None` for fewer than two points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Gaussian;

    fn labeled(n_fg: usize, n_bg: usize) -> Scene<f64> {
        let mut gs = Vec::new();
        for i in 0..n_fg + n_bg {
            let label = if i < n_fg { 1 } else { 0 };
            let p = Vec3::new(i as f64 * 0.01, (i % 7) as f64 * 0.1, 0.0);
            gs.push(Gaussian::isotropic(p, 0.05, 0.8, [0.5; 3]).with_label(label));
        }
        Scene::new("l", gs).unwrap()
    }

    #[test]
    fn iou_cases() {
        let scene = labeled(100, 200);
        let gt: Vec<bool> = (0..300).map(|i| i < 100).collect();
        assert_eq!(evaluate_3d_iou(&gt, &scene, 1).unwrap(), 1.0);
        let disjoint: Vec<bool> = (0..300).map(|i| i >= 100).collect();
        assert_eq!(evaluate_3d_iou(&disjoint, &scene, 1).unwrap(), 0.0);
        let extra: Vec<bool> = (0..300).map(|i| i < 110).collect();
        assert!((evaluate_3d_iou(&extra, &scene, 1).unwrap() - 100.0 / 110.0).abs() < 1e-15);
        let none = vec![false; 300];
        assert_eq!(evaluate_3d_iou(&none, &scene, 5).unwrap(), 1.0);
    }

    #[test]
    fn unlabeled_scene_is_an_error() {
        let scene = Scene::new(
            "u",
            vec![Gaussian::isotropic(Vec3::zero(), 0.1, 0.5, [0.5; 3])],
        )
        .unwrap();
        assert!(matches!(
            evaluate_3d_iou(&[true], &scene, 1),
            Err(HarnessError::MissingLabels(_))
        ));
    }

    #[test]
    fn sign_test_values() {
        assert!((sign_test_one_sided(20, 0) - 0.5f64.powi(20)).abs() < 1e-18);
        assert!(sign_test_one_sided(15, 5) < 0.05);
        assert!(sign_test_one_sided(14, 6) > 0.05);
        assert!((sign_test_one_sided(0, 4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_basic() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[8.0, 6.0, 4.0, 2.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&x, &[1.0; 4]).is_none());
    }
}
