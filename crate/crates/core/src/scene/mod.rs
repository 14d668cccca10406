//! Gaussian splat scenes: data model, file formats and a synthetic generator.

mod io;
mod synthetic;

pub use io::{load_scene, save_scene, SplatFormat, BINARY_MAGIC, BINARY_VERSION};
pub use synthetic::{generate_synthetic, SceneSpec};

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{Quat, Vec3};
use crate::real::Real;

/// Tolerance on `|q| - 1` for stored rotations.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("invalid gaussian {index}: field `{field}` {reason}")]
    Invalid {
        index: usize,
        field: &'static str,
        reason: String,
    },
    #[error("scene must contain at least one gaussian")]
    Empty,
    #[error("cannot encode scene: {0}")]
    Encode(String),
    #[error("scene generation failed: {0}")]
    Generation(String),
}

/// One splat. Covariance is kept factored as `R diag(scale²) Rᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian<T = f64> {
    pub mean: Vec3<T>,
    pub scale: Vec3<T>,
    pub rotation: Quat<T>,
    pub opacity: T,
    pub color: [T; 3],
    pub gt_label: Option<u32>,
}

impl<T: Real> Gaussian<T> {
    /// Axis-aligned, unlabeled splat.
    pub fn isotropic(mean: Vec3<T>, scale: T, opacity: T, color: [T; 3]) -> Self {
        Self {
            mean,
            scale: Vec3::new(scale, scale, scale),
            rotation: Quat::identity(),
            opacity,
            color,
            gt_label: None,
        }
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.gt_label = Some(label);
        self
    }

    /// Checks the field invariants, reporting the offending field for `index`.
    pub fn validate(&self, index: usize) -> Result<(), SceneError> {
        let invalid = |field: &'static str, reason: String| SceneError::Invalid {
            index,
            field,
            reason,
        };
        if !self.mean.is_finite() {
            return Err(invalid("mean", "must be finite".into()));
        }
        for s in self.scale.to_array() {
            if !(s.is_finite() && s > T::zero()) {
                return Err(invalid(
                    "scale",
                    format!("components must be positive, got {s}"),
                ));
            }
        }
        let n = self.rotation.norm();
        if !n.is_finite() || (n - T::one()).abs().as_f64() > QUATERNION_NORM_TOLERANCE {
            return Err(invalid("rotation", format!("quaternion norm {n} is not 1")));
        }
        if !(self.opacity >= T::zero() && self.opacity <= T::one()) {
            return Err(invalid(
                "opacity",
                format!("must lie in [0, 1], got {}", self.opacity),
            ));
        }
        for c in self.color {
            if !(c >= T::zero() && c <= T::one()) {
                return Err(invalid(
                    "color",
                    format!("channels must lie in [0, 1], got {c}"),
                ));
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Gaussian<U> {
        Gaussian {
            mean: self.mean.cast(),
            scale: self.scale.cast(),
            rotation: Quat::from_array(self.rotation.to_array().map(|v| U::lit(v.as_f64()))),
            opacity: U::lit(self.opacity.as_f64()),
            color: self.color.map(|v| U::lit(v.as_f64())),
            gt_label: self.gt_label,
        }
    }
}

/// Immutable, index-stable collection of splats.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T = f64> {
    id: String,
    gaussians: Vec<Gaussian<T>>,
}

/// Sphere enclosing every splat mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingSphere<T> {
    pub center: Vec3<T>,
    pub radius: T,
}

impl<T: Real> Scene<T> {
    pub fn new(id: impl Into<String>, gaussians: Vec<Gaussian<T>>) -> Result<Self, SceneError> {
        if gaussians.is_empty() {
            return Err(SceneError::Empty);
        }
        for (i, g) in gaussians.iter().enumerate() {
            g.validate(i)?;
        }
        Ok(Self {
            id: id.into(),
            gaussians,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn gaussian(&self, index: usize) -> &Gaussian<T> {
        &self.gaussians[index]
    }

    pub fn gaussians(&self) -> &[Gaussian<T>] {
        &self.gaussians
    }

    /// True when every splat carries a ground-truth label.
    pub fn has_labels(&self) -> bool {
        self.gaussians.iter().all(|g| g.gt_label.is_some())
    }

    pub fn count_label(&self, label: u32) -> usize {
        self.gaussians
            .iter()
            .filter(|g| g.gt_label == Some(label))
            .count()
    }

    /// Center of the axis-aligned bounds of the means, with the largest
    /// distance from it as radius.
    pub fn bounding_sphere(&self) -> BoundingSphere<T> {
        let first = self.gaussians[0].mean;
        let (mut lo, mut hi) = (first, first);
        for g in &self.gaussians {
            let m = g.mean;
            lo = Vec3::new(lo.x.min(m.x), lo.y.min(m.y), lo.z.min(m.z));
            hi = Vec3::new(hi.x.max(m.x), hi.y.max(m.y), hi.z.max(m.z));
        }
        let center = (lo + hi) * T::lit(0.5);
        let radius = self
            .gaussians
            .iter()
            .map(|g| (g.mean - center).norm())
            .fold(T::zero(), T::max);
        BoundingSphere { center, radius }
    }

    pub fn cast<U: Real>(&self) -> Scene<U> {
        Scene {
            id: self.id.clone(),
            gaussians: self.gaussians.iter().map(Gaussian::cast).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(opacity: f64) -> Gaussian<f64> {
        Gaussian::isotropic(Vec3::zero(), 1.0, opacity, [1.0, 1.0, 1.0])
    }

    #[test]
    fn empty_scene_is_rejected() {
        assert!(matches!(
            Scene::<f64>::new("s", vec![]),
            Err(SceneError::Empty)
        ));
    }

    #[test]
    fn opacity_out_of_range_names_index() {
        let mut gs = vec![unit(0.5); 5];
        gs[3].opacity = 1.5;
        match Scene::new("s", gs) {
            Err(SceneError::Invalid { index, field, .. }) => {
                assert_eq!(index, 3);
                assert_eq!(field, "opacity");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_and_negative_scale_rejected() {
        let mut g = unit(0.5);
        g.scale.y = -1.0;
        assert!(matches!(
            g.validate(0),
            Err(SceneError::Invalid { field: "scale", .. })
        ));
        g.scale.y = f64::NAN;
        assert!(g.validate(0).is_err());
        let mut g = unit(0.5);
        g.opacity = f64::NAN;
        assert!(matches!(
            g.validate(7),
            Err(SceneError::Invalid {
                index: 7,
                field: "opacity",
                ..
            })
        ));
    }

    #[test]
    fn unnormalized_quaternion_rejected() {
        let mut g = unit(0.5);
        g.rotation = Quat::new(1.0, 0.1, 0.0, 0.0);
        assert!(matches!(
            g.validate(0),
            Err(SceneError::Invalid {
                field: "rotation",
                ..
            })
        ));
    }

    #[test]
    fn bounding_sphere_covers_means() {
        let mut a = unit(1.0);
        let mut b = unit(1.0);
        a.mean = Vec3::new(-1.0, 0.0, 0.0);
        b.mean = Vec3::new(3.0, 0.0, 0.0);
        let s = Scene::new("s", vec![a, b]).unwrap();
        let bs = s.bounding_sphere();
        assert_eq!(bs.center, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(bs.radius, 2.0);
    }
}
