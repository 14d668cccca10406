//! Sequential Beta–Bernoulli segmentation of Gaussian-splat scenes with
//! expected-information-gain view planning.
//!
//! The scene, camera and rasterizer are generic over the scalar type
//! ([`Real`]: `f32` or `f64`); posterior pseudo-counts are always `f64`.

pub mod geometry;
pub mod harness;
pub mod masker;
pub mod planner;
pub mod posterior;
pub mod real;
pub mod render;
pub mod scene;
pub mod special;

pub use real::Real;

pub type Vec3f = geometry::Vec3<f32>;
pub type Vec3d = geometry::Vec3<f64>;
pub type Gaussian32 = scene::Gaussian<f32>;
pub type Gaussian64 = scene::Gaussian<f64>;
pub type Scene32 = scene::Scene<f32>;
pub type Scene64 = scene::Scene<f64>;
pub type Camera32 = render::Camera<f32>;
pub type Camera64 = render::Camera<f64>;
pub type RenderOutput32 = render::RenderOutput<f32>;
pub type RenderOutput64 = render::RenderOutput<f64>;
