//! Curvature-driven flows of surfaces in the unit 3-sphere.
//!
//! Points of S³ are unit quaternions. Surfaces are triangle meshes with
//! per-vertex normals and quadric-fit curvature; they evolve under
//! `∂x/∂t = −F(κ₁, κ₂)·ν` for symmetric speeds `F`. Alongside the flow the
//! crate provides the translation Gauss maps, Hopf tori and curve-shortening
//! flow on S² used to study flat tori.

pub mod flow;
pub mod gaussmaps;
pub mod mesh;
pub mod s2curves;
pub mod s3core;
pub mod speeds;
