//! Left- and right-translation Gauss maps into S² × S² and a covariance-based
//! measure of how curve-like a point cloud on S² is.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::SurfaceMesh;
use crate::s2curves::{CurveError, S2Curve};
use crate::s3core::{imag, quat_conj, quat_mul, S2Point, Vec3, Vec4};

/// Largest tolerated real part of `x̄ν` before a normal is deemed corrupted.
pub const REAL_PART_TOL: f64 = 1e-6;

pub const MIN_POINTS: usize = 10;

/// Consecutive bin means closer than this are merged by [`image_curve`].
const MERGE_DISTANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("normal at vertex {vertex} is not tangent (real part {real_part:e})")]
    NonTangentNormal { vertex: usize, real_part: f64 },
    #[error("need at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussImage {
    /// `Im(x̄ν)` per vertex.
    pub left: Vec<S2Point>,
    /// `Im(νx̄)` per vertex.
    pub right: Vec<S2Point>,
}

fn translate(product: Vec4, vertex: usize) -> Result<S2Point, GaussError> {
    if product[0].abs() > REAL_PART_TOL {
        return Err(GaussError::NonTangentNormal {
            vertex,
            real_part: product[0],
        });
    }
    Ok(S2Point::normalize(imag(&product)))
}

pub fn gauss_maps(mesh: &SurfaceMesh) -> Result<GaussImage, GaussError> {
    gauss_maps_with_normals(mesh, mesh.normals())
}

/// Gauss maps using the given per-vertex normals (e.g. the refined normals
/// of a curvature fit) instead of the mesh's own.
pub fn gauss_maps_with_normals(mesh: &SurfaceMesh, normals: &[Vec4]) -> Result<GaussImage, GaussError> {
    let pairs: Vec<(S2Point, S2Point)> = mesh
        .vertices()
        .par_iter()
        .zip(normals.par_iter())
        .enumerate()
        .map(|(v, (x, nu))| {
            let xb = quat_conj(x.coords());
            Ok((translate(quat_mul(&xb, nu), v)?, translate(quat_mul(nu, &xb), v)?))
        })
        .collect::<Result<_, GaussError>>()?;
    let (left, right) = pairs.into_iter().unzip();
    Ok(GaussImage { left, right })
}

fn mean(points: &[S2Point]) -> Vec3 {
    points.iter().map(|p| *p.coords()).sum::<Vec3>() / points.len() as f64
}

fn covariance(points: &[S2Point]) -> Matrix3<f64> {
    let c = mean(points);
    let mut m = Matrix3::zeros();
    for p in points {
        let d = p.coords() - c;
        m += d * d.transpose();
    }
    m / points.len() as f64
}

/// `λ₃ / max(λ₂, 1e−15)` for the covariance eigenvalues `λ₁ ≥ λ₂ ≥ λ₃` about
/// the centroid, clipped to `[0, 1]`. Near 0 for points on a planar curve or
/// at a single point; near 1 for an isotropic cloud.
pub fn degeneracy_measure(points: &[S2Point]) -> Result<f64, GaussError> {
    if points.len() < MIN_POINTS {
        return Err(GaussError::TooFewPoints(points.len()));
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(covariance(points)).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok((eig[2] / eig[1].max(1e-15)).clamp(0.0, 1.0))
}

/// Distance of each point from the best-fit plane through the origin
/// (normal = least eigenvector of the second-moment matrix); returns the
/// maximum. Zero exactly for points on a great circle.
pub fn great_circle_residual(points: &[S2Point]) -> f64 {
    let axis = least_moment_axis(points);
    points.iter().map(|p| p.coords().dot(&axis).abs()).fold(0.0, f64::max)
}

fn least_moment_axis(points: &[S2Point]) -> Vec3 {
    let mut m = Matrix3::zeros();
    for p in points {
        m += p.coords() * p.coords().transpose();
    }
    let eig = SymmetricEigen::new(m);
    let k = eig.eigenvalues.imin();
    eig.eigenvectors.column(k).into_owned()
}

/// Orders a curve-like point cloud into a closed curve of `bins` samples.
///
/// Points are binned by their angle about the axis through the centroid
/// direction (or, for clouds centred at the origin such as great circles,
/// the least second-moment axis), and each bin is averaged and projected
/// back to S². Intended for images that wind once around that axis.
pub fn image_curve(points: &[S2Point], bins: usize) -> Result<S2Curve, GaussError> {
    if points.len() < MIN_POINTS {
        return Err(GaussError::TooFewPoints(points.len()));
    }
    let c = mean(points);
    let axis = if c.norm() > 1e-3 { c.normalize() } else { least_moment_axis(points) };
    let seed = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let a = (seed - axis * axis.dot(&seed)).normalize();
    let b = axis.cross(&a);
    let mut sums = vec![Vec3::zeros(); bins];
    let mut counts = vec![0usize; bins];
    for p in points {
        let q = p.coords();
        let angle = q.dot(&b).atan2(q.dot(&a)).rem_euclid(std::f64::consts::TAU);
        let k = ((angle / std::f64::consts::TAU * bins as f64) as usize).min(bins - 1);
        sums[k] += q;
        counts[k] += 1;
    }
    let mut samples: Vec<S2Point> = sums
        .into_iter()
        .zip(counts)
        .filter(|(_, n)| *n > 0)
        .map(|(s, _)| S2Point::normalize(s))
        .collect();
    // A point sitting on a bin boundary can land in both neighbours through
    // roundoff; keep one copy.
    samples.dedup_by(|b, a| a.distance(b) < MERGE_DISTANCE);
    while samples.len() > 1 && samples[0].distance(&samples[samples.len() - 1]) < MERGE_DISTANCE {
        samples.pop();
    }
    Ok(S2Curve::new(samples)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_clifford_torus, make_geodesic_sphere, make_hopf_torus};
    use crate::s2curves::make_latitude_circle;
    use crate::s3core::S3Point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn uniform_sphere(n: usize, seed: u64) -> Vec<S2Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..TAU);
                let s = (1.0 - z * z).sqrt();
                S2Point::normalize(Vec3::new(s * phi.cos(), s * phi.sin(), z))
            })
            .collect()
    }

    #[test]
    fn degeneracy_examples() {
        let same = vec![S2Point::normalize(Vec3::new(0.3, -0.2, 0.9)); 20];
        assert_eq!(degeneracy_measure(&same).unwrap(), 0.0);
        let circle: Vec<S2Point> = (0..100)
            .map(|k| {
                let t = TAU * k as f64 / 100.0;
                S2Point::normalize(Vec3::new(t.cos(), 0.6 * t.sin(), 0.8 * t.sin()))
            })
            .collect();
        assert!(degeneracy_measure(&circle).unwrap() <= 1e-3);
        assert!(degeneracy_measure(&uniform_sphere(1000, 7)).unwrap() >= 0.5);
        assert!(matches!(degeneracy_measure(&same[..5]), Err(GaussError::TooFewPoints(5))));
    }

    #[test]
    fn images_are_unit() {
        let m = make_clifford_torus(24, 24).unwrap();
        let g = gauss_maps(&m).unwrap();
        for p in g.left.iter().chain(&g.right) {
            assert!((p.coords().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn clifford_images_are_great_circles() {
        let m = make_clifford_torus(64, 64).unwrap();
        let g = gauss_maps(&m).unwrap();
        assert!(great_circle_residual(&g.left) <= 1e-2);
        assert!(great_circle_residual(&g.right) <= 1e-2);
        assert!(degeneracy_measure(&g.left).unwrap() <= 2e-2);
        assert!(degeneracy_measure(&g.right).unwrap() <= 2e-2);
    }

    #[test]
    fn hopf_torus_images_are_curves() {
        let curve = make_latitude_circle(1.0, 64).unwrap();
        let h = make_hopf_torus(&curve, 64).unwrap();
        let g = gauss_maps(&h.mesh).unwrap();
        assert!(degeneracy_measure(&g.left).unwrap() <= 2e-2);
        assert!(degeneracy_measure(&g.right).unwrap() <= 2e-2);
    }

    #[test]
    fn geodesic_sphere_images_are_two_dimensional() {
        // For a sphere centred at 1, x̄ν is the radial direction of x, so the
        // left image covers S².
        for r in [0.7, FRAC_PI_2] {
            let m = make_geodesic_sphere(r, 3, S3Point::IDENTITY).unwrap();
            let g = gauss_maps(&m).unwrap();
            assert!(degeneracy_measure(&g.left).unwrap() > 0.5, "r = {r}");
        }
    }

    #[test]
    fn corrupted_normal_is_rejected() {
        let m = make_clifford_torus(16, 16).unwrap();
        let mut normals = m.normals().to_vec();
        normals[5] = *m.vertices()[5].coords();
        assert!(matches!(
            gauss_maps_with_normals(&m, &normals),
            Err(GaussError::NonTangentNormal { vertex: 5, .. })
        ));
    }

    #[test]
    fn image_curve_orders_a_circle() {
        let c = make_latitude_circle(0.8, 50).unwrap();
        let mut shuffled = c.samples().to_vec();
        shuffled.reverse();
        shuffled.rotate_left(17);
        let out = image_curve(&shuffled, 40).unwrap();
        assert_eq!(out.len(), 40);
        assert!((out.length() - c.length()).abs() < 2e-2 * c.length());
    }
}
