//! Test-surface generators: geodesic spheres, the Clifford torus and Hopf tori.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MeshError, SurfaceMesh};
use crate::s2curves::S2Curve;
use crate::s3core::{hopf_lift, quat_mul, tangent_project, unit_complex, S3Point, Vec3, Vec4};

/// Orthonormal frame `(c·i, c·j, c·k)` of the tangent space at `c`.
pub fn sphere_frame(center: &S3Point) -> [Vec4; 3] {
    let c = center.coords();
    [
        quat_mul(c, &Vec4::new(0.0, 1.0, 0.0, 0.0)),
        quat_mul(c, &Vec4::new(0.0, 0.0, 1.0, 0.0)),
        quat_mul(c, &Vec4::new(0.0, 0.0, 0.0, 1.0)),
    ]
}

fn point_at(center: &S3Point, frame: &[Vec4; 3], dir: &Vec3, r: f64) -> S3Point {
    let (s, c) = r.sin_cos();
    let t = frame[0] * dir[0] + frame[1] * dir[1] + frame[2] * dir[2];
    S3Point::normalize(center.coords() * c + t * s)
}

/// Unit icosphere in R³ after `level` midpoint subdivisions; faces wound
/// counter-clockwise seen from outside.
fn icosphere(level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push((verts[a] + verts[b]).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (verts, faces)
}

fn orient_outward(mut mesh: SurfaceMesh, center: &S3Point) -> SurfaceMesh {
    let x = mesh.vertices()[0];
    let outward = tangent_project(&x, &-center.coords()).dir;
    if mesh.normals()[0].dot(&outward) < 0.0 {
        mesh.flip_orientation();
    }
    mesh
}

/// Icosahedral mesh of the geodesic sphere of radius `r ∈ (0, π)` about
/// `center`, with normals pointing away from `center`.
pub fn make_geodesic_sphere(r: f64, level: usize, center: S3Point) -> Result<SurfaceMesh, MeshError> {
    if !(r > 0.0 && r < PI) {
        return Err(MeshError::InvalidParameter(format!(
            "geodesic sphere radius must lie in (0, π), got {r}"
        )));
    }
    let (dirs, faces) = icosphere(level);
    let frame = sphere_frame(&center);
    let verts = dirs.iter().map(|d| point_at(&center, &frame, d, r)).collect();
    let mesh = SurfaceMesh::new(verts, faces)?;
    Ok(orient_outward(mesh, &center))
}

/// Geodesic sphere with a smooth seeded radial perturbation: the radius at
/// direction `u` is `r + δ(u)` where `δ` is a random quadratic polynomial in
/// `u` rescaled so that `max |δ| = amplitude` over the vertices.
pub fn make_perturbed_sphere(
    r: f64,
    level: usize,
    center: S3Point,
    amplitude: f64,
    seed: u64,
) -> Result<SurfaceMesh, MeshError> {
    if !(r > 0.0 && r < PI) || !(r - amplitude.abs() > 0.0 && r + amplitude.abs() < PI) {
        return Err(MeshError::InvalidParameter(format!(
            "perturbed sphere radius {r} ± {amplitude} must stay inside (0, π)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let field = |u: &Vec3| {
        let m = [
            u[0],
            u[1],
            u[2],
            u[0] * u[0],
            u[1] * u[1],
            u[2] * u[2],
            u[0] * u[1],
            u[0] * u[2],
            u[1] * u[2],
        ];
        m.iter().zip(&coeffs).map(|(a, b)| a * b).sum::<f64>()
    };
    let (dirs, faces) = icosphere(level);
    let values: Vec<f64> = dirs.iter().map(field).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { amplitude / scale } else { 0.0 };
    let frame = sphere_frame(&center);
    let verts = dirs
        .iter()
        .zip(&values)
        .map(|(d, v)| point_at(&center, &frame, d, r + scale * v))
        .collect();
    let mesh = SurfaceMesh::new(verts, faces)?;
    Ok(orient_outward(mesh, &center))
}

/// Mean geodesic distance of the vertices from `center`.
pub fn mean_geodesic_radius(mesh: &SurfaceMesh, center: &S3Point) -> f64 {
    let sum: f64 = mesh.vertices().iter().map(|v| v.distance(center)).sum();
    sum / mesh.vertex_count() as f64
}

fn torus_triangles(nu: usize, nv: usize) -> Vec<[usize; 3]> {
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut tris = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    tris
}

/// Grid mesh of the Clifford torus `(cos u, sin u, cos v, sin v)/√2`.
pub fn make_clifford_torus(nu: usize, nv: usize) -> Result<SurfaceMesh, MeshError> {
    if nu < 8 || nv < 8 {
        return Err(MeshError::InvalidParameter(format!(
            "Clifford torus resolution must be at least 8x8, got {nu}x{nv}"
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            verts.push(S3Point::normalize(Vec4::new(s * u.cos(), s * u.sin(), s * v.cos(), s * v.sin())));
        }
    }
    SurfaceMesh::new(verts, torus_triangles(nu, nv))
}

/// A Hopf torus together with the holonomy of the horizontal lift of its
/// base curve.
#[derive(Debug, Clone)]
pub struct HopfTorus {
    pub mesh: SurfaceMesh,
    /// Fiber rotation angle (radians, in (−π, π]) accumulated by the
    /// horizontal lift after one turn around the curve.
    pub holonomy: f64,
}

/// Preimage of a closed curve under the Hopf projection, sampled as a grid of
/// `curve.len()` fibers with `n_fiber` points each.
///
/// The curve is lifted horizontally (each lift is the point of its fiber
/// nearest to the previous one); the holonomy is spread linearly along the
/// curve so the grid closes up at the seam.
pub fn make_hopf_torus(curve: &S2Curve, n_fiber: usize) -> Result<HopfTorus, MeshError> {
    if n_fiber < 8 {
        return Err(MeshError::InvalidParameter(format!(
            "Hopf torus needs at least 8 samples per fiber, got {n_fiber}"
        )));
    }
    let samples = curve.samples();
    let n = samples.len();
    let i_quat = Vec4::new(0.0, 1.0, 0.0, 0.0);
    let align = |q: &S3Point, prev: &S3Point| -> S3Point {
        let iq = quat_mul(&i_quat, q.coords());
        let alpha = iq.dot(prev.coords()).atan2(q.coords().dot(prev.coords()));
        S3Point::normalize(quat_mul(&unit_complex(alpha), q.coords()))
    };
    let mut lifts = Vec::with_capacity(n);
    lifts.push(hopf_lift(&samples[0]));
    for p in &samples[1..] {
        let prev = *lifts.last().expect("nonempty");
        lifts.push(align(&hopf_lift(p), &prev));
    }
    let end = align(&lifts[0], &lifts[n - 1]);
    let q0 = lifts[0].coords();
    let holonomy = quat_mul(&i_quat, q0).dot(end.coords()).atan2(q0.dot(end.coords()));
    let closed = quat_mul(&unit_complex(-holonomy), end.coords());
    let residual = (closed - q0).norm();
    if residual > 1e-9 {
        return Err(MeshError::HopfLiftNotClosed { holonomy, residual });
    }
    let mut verts = Vec::with_capacity(n * n_fiber);
    for (j, q) in lifts.iter().enumerate() {
        let shift = -holonomy * j as f64 / n as f64;
        for k in 0..n_fiber {
            let angle = TAU * k as f64 / n_fiber as f64 + shift;
            verts.push(S3Point::normalize(quat_mul(&unit_complex(angle), q.coords())));
        }
    }
    let mesh = SurfaceMesh::new(verts, torus_triangles(n, n_fiber))?;
    Ok(HopfTorus { mesh, holonomy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s2curves::make_latitude_circle;
    use crate::s3core::hopf_project;

    #[test]
    fn sphere_rejects_bad_radius() {
        assert!(make_geodesic_sphere(0.0, 1, S3Point::IDENTITY).is_err());
        assert!(make_geodesic_sphere(PI, 1, S3Point::IDENTITY).is_err());
        assert!(make_geodesic_sphere(-0.3, 1, S3Point::IDENTITY).is_err());
    }

    #[test]
    fn sphere_vertices_at_radius() {
        let c = S3Point::normalize(Vec4::new(1.0, 1.0, 0.0, -1.0));
        let m = make_geodesic_sphere(0.9, 2, c).unwrap();
        for v in m.vertices() {
            assert!((v.distance(&c) - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_sphere_is_seeded() {
        let a = make_perturbed_sphere(1.0, 2, S3Point::IDENTITY, 0.02, 4).unwrap();
        let b = make_perturbed_sphere(1.0, 2, S3Point::IDENTITY, 0.02, 4).unwrap();
        let c = make_perturbed_sphere(1.0, 2, S3Point::IDENTITY, 0.02, 5).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_ne!(a.vertices(), c.vertices());
        let dev = a
            .vertices()
            .iter()
            .map(|v| (v.distance(&S3Point::IDENTITY) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!((dev - 0.02).abs() < 1e-12);
    }

    #[test]
    fn hopf_torus_projects_onto_curve() {
        let curve = make_latitude_circle(1.0, 48).unwrap();
        let torus = make_hopf_torus(&curve, 32).unwrap();
        assert_eq!(torus.mesh.euler_characteristic(), 0);
        for (j, p) in curve.samples().iter().enumerate() {
            for k in 0..32 {
                let img = hopf_project(&torus.mesh.vertices()[j * 32 + k]);
                assert!((img.coords() - p.coords()).norm() < 1e-12);
            }
        }
        assert!(torus.holonomy.abs() > 1e-3);
    }
}
