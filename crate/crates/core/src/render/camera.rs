use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::geometry::Vec3;
use crate::real::Real;

/// Minimum angle between `up` and the viewing direction.
const MIN_UP_ANGLE: f64 = 1e-4;

/// Pinhole camera with square pixels, principal point at the image center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera<T = f64> {
    position: Vec3<T>,
    look_at: Vec3<T>,
    up: Vec3<T>,
    vertical_fov: T,
    width: u32,
    height: u32,
}

/// Orthonormal camera basis plus intrinsics, in pixels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CameraFrame<T> {
    pub origin: Vec3<T>,
    pub right: Vec3<T>,
    pub down: Vec3<T>,
    pub forward: Vec3<T>,
    pub focal: T,
    pub cx: T,
    pub cy: T,
    pub tan_half_fov_x: T,
    pub tan_half_fov_y: T,
}

impl<T: Real> Camera<T> {
    pub fn new(
        position: Vec3<T>,
        look_at: Vec3<T>,
        up: Vec3<T>,
        vertical_fov: T,
        width: u32,
        height: u32,
    ) -> Result<Self, RenderError> {
        let bad = |m: &str| Err(RenderError::InvalidCamera(m.to_string()));
        if !(position.is_finite() && look_at.is_finite() && up.is_finite()) {
            return bad("non-finite vector");
        }
        let Some(dir) = (look_at - position).normalized() else {
            return bad("position coincides with look_at");
        };
        let Some(up_n) = up.normalized() else {
            return bad("up vector is zero");
        };
        let sin = dir.cross(up_n).norm();
        if sin.as_f64().asin() <= MIN_UP_ANGLE {
            return bad("up vector parallel to the viewing direction");
        }
        if !(vertical_fov > T::zero() && vertical_fov < T::PI()) {
            return bad("vertical field of view must lie in (0, π)");
        }
        if width == 0 || height == 0 {
            return bad("resolution must be at least 1x1");
        }
        Ok(Self {
            position,
            look_at,
            up,
            vertical_fov,
            width,
            height,
        })
    }

    pub fn position(&self) -> Vec3<T> {
        self.position
    }

    pub fn look_at(&self) -> Vec3<T> {
        self.look_at
    }

    pub fn up(&self) -> Vec3<T> {
        self.up
    }

    pub fn vertical_fov(&self) -> T {
        self.vertical_fov
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn cast<U: Real>(&self) -> Camera<U> {
        Camera {
            position: self.position.cast(),
            look_at: self.look_at.cast(),
            up: self.up.cast(),
            vertical_fov: U::lit(self.vertical_fov.as_f64()),
            width: self.width,
            height: self.height,
        }
    }

    pub(crate) fn frame(&self) -> CameraFrame<T> {
        let forward = (self.look_at - self.position)
            .normalized()
            .expect("validated camera");
        let right = forward
            .cross(self.up)
            .normalized()
            .expect("validated camera");
        // Image rows grow downwards.
        let down = forward.cross(right);
        let half = T::lit(0.5);
        let tan_half_fov_y = (self.vertical_fov * half).tan();
        let h = T::lit(self.height as f64);
        let w = T::lit(self.width as f64);
        let focal = h * half / tan_half_fov_y;
        CameraFrame {
            origin: self.position,
            right,
            down,
            forward,
            focal,
            cx: w * half,
            cy: h * half,
            tan_half_fov_x: w * half / focal,
            tan_half_fov_y,
        }
    }
}

impl<T: Real> CameraFrame<T> {
    pub fn to_camera(self, p: Vec3<T>) -> Vec3<T> {
        let d = p - self.origin;
        Vec3::new(d.dot(self.right), d.dot(self.down), d.dot(self.forward))
    }
}
