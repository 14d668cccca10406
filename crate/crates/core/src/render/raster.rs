//! Front-to-back alpha compositing of projected splats.

use super::camera::{Camera, CameraFrame};
use crate::geometry::{covariance_from_scale_rotation, Mat3, Vec3};
use crate::real::Real;
use crate::scene::{Gaussian, Scene};

/// Per-pixel opacity ceiling.
pub const ALPHA_MAX: f64 = 0.999;
/// A pixel stops accepting splats once its transmittance drops below this.
pub const TRANSMITTANCE_EPS: f64 = 1e-4;
/// Footprint cutoff, in standard deviations of the screen-space Gaussian.
pub const FOOTPRINT_SIGMAS: f64 = 3.0;
/// Screen-space low-pass added to the projected covariance, in pixels².
pub const SCREEN_DILATION: f64 = 0.3;
/// Splats closer than this camera depth are skipped.
pub const NEAR_PLANE: f64 = 0.05;
/// Projection Jacobians are evaluated with view-plane offsets clamped to
/// this multiple of the half field of view.
const JACOBIAN_CLAMP: f64 = 1.3;

/// One compositing weight `αᵢ Tᵢ` at a pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution<T> {
    pub gaussian: u32,
    pub weight: T,
}

/// Rendered image together with every per-pixel compositing weight.
///
/// Contributions are stored pixel-major (row-major pixels), each pixel's
/// list in front-to-back order.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput<T = f64> {
    width: u32,
    height: u32,
    rgb: Vec<[T; 3]>,
    offsets: Vec<usize>,
    contribs: Vec<Contribution<T>>,
    responsibilities: Vec<T>,
}

impl<T: Real> RenderOutput<T> {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.rgb.len()
    }

    pub fn num_gaussians(&self) -> usize {
        self.responsibilities.len()
    }

    pub fn rgb(&self) -> &[[T; 3]] {
        &self.rgb
    }

    pub fn pixel_rgb(&self, x: u32, y: u32) -> [T; 3] {
        self.rgb[self.pixel_index(x, y)]
    }

    pub fn pixel_index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Depth-ordered contributions of pixel `p` (row-major index).
    pub fn contribs(&self, p: usize) -> &[Contribution<T>] {
        &self.contribs[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn pixel_contribs(&self, x: u32, y: u32) -> &[Contribution<T>] {
        self.contribs(self.pixel_index(x, y))
    }

    /// Total contribution count over all pixels.
    pub fn contribution_count(&self) -> usize {
        self.contribs.len()
    }

    /// `τᵢ`: each splat's weight summed over all pixels.
    pub fn responsibilities(&self) -> &[T] {
        &self.responsibilities
    }

    /// Largest-weight contributor of pixel `p`; the front-most wins ties.
    pub fn dominant_contributor(&self, p: usize) -> Option<u32> {
        let mut best: Option<Contribution<T>> = None;
        for c in self.contribs(p) {
            if best.is_none_or(|b| c.weight > b.weight) {
                best = Some(*c);
            }
        }
        best.map(|c| c.gaussian)
    }

    /// True when no splat reaches this view.
    pub fn is_empty(&self) -> bool {
        self.contribs.is_empty()
    }
}

struct Projected<T> {
    index: u32,
    depth: T,
    center: [T; 2],
    conic: [T; 3],
    bbox: [u32; 4],
}

fn project<T: Real>(
    index: usize,
    g: &Gaussian<T>,
    frame: &CameraFrame<T>,
    width: u32,
    height: u32,
) -> Option<Projected<T>> {
    let p = frame.to_camera(g.mean);
    if p.z.is_nan() || p.z <= T::lit(NEAR_PLANE) {
        return None;
    }
    let f = frame.focal;
    let u = frame.cx + f * p.x / p.z;
    let v = frame.cy + f * p.y / p.z;

    let clamp = T::lit(JACOBIAN_CLAMP);
    let lim_x = clamp * frame.tan_half_fov_x;
    let lim_y = clamp * frame.tan_half_fov_y;
    let tx = (p.x / p.z).max(-lim_x).min(lim_x) * p.z;
    let ty = (p.y / p.z).max(-lim_y).min(lim_y) * p.z;
    let z2 = p.z * p.z;

    let world_to_cam = Mat3::from_rows(frame.right, frame.down, frame.forward);
    let cov_world = covariance_from_scale_rotation(g.scale, g.rotation);
    let cov = world_to_cam
        .mul_mat(&cov_world)
        .mul_mat(&world_to_cam.transpose());
    // Rows of the 2x3 Jacobian of (u, v) with respect to camera coordinates.
    let j0 = Vec3::new(f / p.z, T::zero(), -f * tx / z2);
    let j1 = Vec3::new(T::zero(), f / p.z, -f * ty / z2);
    let cj0 = cov.mul_vec(j0);
    let cj1 = cov.mul_vec(j1);
    let dil = T::lit(SCREEN_DILATION);
    let a = j0.dot(cj0) + dil;
    let b = j0.dot(cj1);
    let c = j1.dot(cj1) + dil;
    let det = a * c - b * b;
    if !det.is_finite() || det <= T::zero() {
        return None;
    }
    let conic = [c / det, -b / det, a / det];
    let half = T::lit(0.5);
    let mid = half * (a + c);
    let lambda_max = mid + (mid * mid - det).max(T::zero()).sqrt();
    let radius = T::lit(FOOTPRINT_SIGMAS) * lambda_max.sqrt();

    // Pixel (x, y) has its center at (x + 0.5, y + 0.5).
    let x0 = (u - radius - half).ceil().max(T::zero());
    let x1 = (u + radius - half).floor().min(T::lit(width as f64 - 1.0));
    let y0 = (v - radius - half).ceil().max(T::zero());
    let y1 = (v + radius - half).floor().min(T::lit(height as f64 - 1.0));
    if !(x0 <= x1 && y0 <= y1) {
        return None;
    }
    Some(Projected {
        index: index as u32,
        depth: p.z,
        center: [u, v],
        conic,
        bbox: [
            x0.as_f64() as u32,
            x1.as_f64() as u32,
            y0.as_f64() as u32,
            y1.as_f64() as u32,
        ],
    })
}

/// Depth-sorted front-to-back compositing. `sink` receives every
/// (pixel, splat, weight) triple in splat order, pixels row-major within a splat.
fn composite<T: Real>(
    scene: &Scene<T>,
    camera: &Camera<T>,
    mut sink: impl FnMut(usize, &Gaussian<T>, u32, T),
) {
    let frame = camera.frame();
    let (width, height) = (camera.width(), camera.height());

    let mut projected: Vec<Projected<T>> = scene
        .gaussians()
        .iter()
        .enumerate()
        .filter_map(|(i, g)| project(i, g, &frame, width, height))
        .collect();
    projected.sort_by(|p, q| {
        p.depth
            .partial_cmp(&q.depth)
            .expect("finite depths")
            .then(p.index.cmp(&q.index))
    });

    let alpha_max = T::lit(ALPHA_MAX);
    let t_eps = T::lit(TRANSMITTANCE_EPS);
    let cutoff = T::lit(FOOTPRINT_SIGMAS * FOOTPRINT_SIGMAS);
    let half = T::lit(0.5);

    let mut transmittance = vec![T::one(); camera.pixel_count()];
    for pr in &projected {
        let g = scene.gaussian(pr.index as usize);
        let [x0, x1, y0, y1] = pr.bbox;
        for y in y0..=y1 {
            let dy = T::lit(y as f64) + half - pr.center[1];
            for x in x0..=x1 {
                let p = y as usize * width as usize + x as usize;
                let t = transmittance[p];
                if t < t_eps {
                    continue;
                }
                let dx = T::lit(x as f64) + half - pr.center[0];
                let q = pr.conic[0] * dx * dx
                    + T::lit(2.0) * pr.conic[1] * dx * dy
                    + pr.conic[2] * dy * dy;
                if q > cutoff {
                    continue;
                }
                let alpha = (g.opacity * (-half * q).exp()).min(alpha_max);
                if alpha <= T::zero() {
                    continue;
                }
                sink(p, g, pr.index, alpha * t);
                transmittance[p] = t * (T::one() - alpha);
            }
        }
    }
}

/// Per-splat responsibilities τ of a render, without keeping the image or
/// per-pixel lists. Bit-identical to `render(scene, camera).responsibilities()`.
pub fn render_responsibilities<T: Real>(scene: &Scene<T>, camera: &Camera<T>) -> Vec<T> {
    let mut tau = vec![T::zero(); scene.len()];
    composite(scene, camera, |_, _, i, w| tau[i as usize] += w);
    tau
}

/// Renders `scene` from `camera`.
///
/// Splats are globally sorted by camera depth of their means (ties by index)
/// and composited front to back. Splats behind the near plane or entirely
/// off-screen are skipped.
pub fn render<T: Real>(scene: &Scene<T>, camera: &Camera<T>) -> RenderOutput<T> {
    let (width, height) = (camera.width(), camera.height());
    let npix = camera.pixel_count();

    let mut rgb = vec![[T::zero(); 3]; npix];
    // (pixel, contribution) in splat order; regrouped by pixel below.
    let mut raw: Vec<(u32, Contribution<T>)> = Vec::new();
    composite(scene, camera, |p, g, gaussian, weight| {
        for (acc, c) in rgb[p].iter_mut().zip(g.color) {
            *acc += c * weight;
        }
        raw.push((p as u32, Contribution { gaussian, weight }));
    });

    // Stable counting sort by pixel keeps each pixel's depth order.
    let mut offsets = vec![0usize; npix + 1];
    for (p, _) in &raw {
        offsets[*p as usize + 1] += 1;
    }
    for p in 0..npix {
        offsets[p + 1] += offsets[p];
    }
    let mut cursor = offsets.clone();
    let mut contribs = vec![
        Contribution {
            gaussian: 0,
            weight: T::zero()
        };
        raw.len()
    ];
    for (p, c) in raw {
        let slot = &mut cursor[p as usize];
        contribs[*slot] = c;
        *slot += 1;
    }

    let mut responsibilities = vec![T::zero(); scene.len()];
    for c in &contribs {
        responsibilities[c.gaussian as usize] += c.weight;
    }

    RenderOutput {
        width,
        height,
        rgb,
        offsets,
        contribs,
        responsibilities,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn camera(res: u32) -> Camera<f64> {
        Camera::new(
            Vec3::new(-10.0, 0.0, 0.0),
            Vec3::zero(),
            Vec3::new(0.0, 0.0, 1.0),
            std::f64::consts::FRAC_PI_3,
            res,
            res,
        )
        .unwrap()
    }

    fn splat(x: f64, opacity: f64, color: [f64; 3]) -> Gaussian<f64> {
        Gaussian::isotropic(Vec3::new(x, 0.0, 0.0), 0.5, opacity, color)
    }

    #[test]
    fn single_red_splat_at_center() {
        let scene = Scene::new("one", vec![splat(0.0, 1.0, [1.0, 0.0, 0.0])]).unwrap();
        let out = render(&scene, &camera(17));
        let c = out.pixel_rgb(8, 8);
        assert!((c[0] - ALPHA_MAX).abs() < 1e-12, "{c:?}");
        assert_eq!(c[1], 0.0);
        assert!(out.responsibilities()[0] > 0.0);
    }

    #[test]
    fn other_splats_outside_view_get_no_responsibility() {
        let behind = splat(-20.0, 1.0, [0.0, 1.0, 0.0]);
        let scene = Scene::new("two", vec![splat(0.0, 1.0, [1.0, 0.0, 0.0]), behind]).unwrap();
        let out = render(&scene, &camera(17));
        assert_eq!(out.responsibilities()[1], 0.0);
    }

    #[test]
    fn empty_region_is_black() {
        let scene = Scene::new(
            "one",
            vec![Gaussian::isotropic(
                Vec3::new(0.0, 0.0, 4.0),
                0.05,
                1.0,
                [1.0; 3],
            )],
        )
        .unwrap();
        let out = render(&scene, &camera(17));
        assert_eq!(out.pixel_rgb(8, 16), [0.0; 3]);
        assert!(out.pixel_contribs(8, 16).is_empty());
    }

    #[test]
    fn coaxial_pair_weights() {
        let scene = Scene::new(
            "pair",
            vec![
                splat(2.0, 0.8, [0.0, 1.0, 0.0]),
                splat(0.0, 0.6, [1.0, 0.0, 0.0]),
            ],
        )
        .unwrap();
        let out = render(&scene, &camera(17));
        let px = out.pixel_contribs(8, 8);
        assert_eq!(px.len(), 2);
        assert_eq!(px[0].gaussian, 1, "front splat composited first");
        assert!((px[0].weight - 0.6).abs() < 1e-12);
        assert!((px[1].weight - 0.32).abs() < 1e-12);
    }

    #[test]
    fn splat_behind_camera_skipped() {
        let scene = Scene::new("b", vec![splat(-11.0, 1.0, [1.0; 3])]).unwrap();
        let out = render(&scene, &camera(9));
        assert!(out.is_empty());
        assert_eq!(out.responsibilities(), &[0.0]);
    }

    #[test]
    fn early_termination_caps_layers() {
        // Twenty opaque layers: transmittance falls below the floor after two.
        let layers: Vec<_> = (0..20)
            .map(|k| splat(k as f64 * 0.1, 1.0, [1.0; 3]))
            .collect();
        let scene = Scene::new("stack", layers).unwrap();
        let out = render(&scene, &camera(9));
        let px = out.pixel_contribs(4, 4);
        assert_eq!(px.len(), 2);
        let total: f64 = px.iter().map(|c| c.weight).sum();
        assert!(total <= 1.0 + 1e-12);
    }
}
