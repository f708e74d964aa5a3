//! Triangle meshes immersed in S³.
//!
//! A [`SurfaceMesh`] stores unit-quaternion vertices, consistently wound
//! triangles, per-vertex unit normals tangent to S³, and one- and two-ring
//! adjacency. Normals are computed from the winding: a triangle
//! `(v₀, v₁, v₂)` contributes `cross4(v₀, v₁, v₂)`, which is tangent to S³ at
//! each corner up to O(h). Generators flip the winding when needed so that
//! sphere normals point away from the centre.

mod curvature;
mod generators;

pub use curvature::{estimate_curvature, CurvatureData, FitIssue, PointCurvature};
pub use generators::{
    make_clifford_torus, make_geodesic_sphere, make_hopf_torus, make_perturbed_sphere,
    mean_geodesic_radius, sphere_frame, HopfTorus,
};

use std::collections::HashMap;

use thiserror::Error;

use crate::s3core::{cross4, S3Point, TangentVector, Vec4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("triangle {tri} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { tri: usize, index: usize, count: usize },
    #[error("triangle {tri} repeats a vertex: {corners:?}")]
    DegenerateTriangle { tri: usize, corners: [usize; 3] },
    #[error("boundary edge ({a}, {b}): used by one triangle only")]
    BoundaryEdge { a: usize, b: usize },
    #[error("edge ({a}, {b}) is used twice with the same orientation (non-manifold or inconsistent winding)")]
    InconsistentEdge { a: usize, b: usize },
    #[error("vertex {index} is not on the unit sphere (|x| = {norm})")]
    OffSphere { index: usize, norm: f64 },
    #[error("vertex {index} has a vanishing normal")]
    ZeroNormal { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Hopf lift failed to close (holonomy {holonomy}, residual {residual})")]
    HopfLiftNotClosed { holonomy: f64, residual: f64 },
}

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<S3Point>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec4>,
    one_ring: Vec<Vec<usize>>,
    two_ring: Vec<Vec<usize>>,
    edges: Vec<[usize; 2]>,
}

/// Checks that `triangles` form a closed, consistently oriented 2-manifold
/// (every edge used exactly twice, once in each direction). Returns the
/// undirected edge list in first-seen order.
pub fn check_manifold(vertex_count: usize, triangles: &[[usize; 3]]) -> Result<Vec<[usize; 2]>, MeshError> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for &index in tri {
            if index >= vertex_count {
                return Err(MeshError::IndexOutOfRange { tri: t, index, count: vertex_count });
            }
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(MeshError::DegenerateTriangle { tri: t, corners: *tri });
        }
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if directed.insert((a, b), t).is_some() {
                return Err(MeshError::InconsistentEdge { a, b });
            }
        }
    }
    let mut edges = Vec::with_capacity(directed.len() / 2);
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if !directed.contains_key(&(b, a)) {
                return Err(MeshError::BoundaryEdge { a, b });
            }
            if a < b {
                edges.push([a, b]);
            }
        }
    }
    Ok(edges)
}

impl SurfaceMesh {
    /// Builds a mesh, validating the manifold structure and computing rings
    /// and winding-induced normals.
    pub fn new(vertices: Vec<S3Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        for (index, v) in vertices.iter().enumerate() {
            let norm = v.coords().norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(MeshError::OffSphere { index, norm });
            }
        }
        let edges = check_manifold(vertices.len(), &triangles)?;
        let n = vertices.len();
        let mut one_ring = vec![Vec::new(); n];
        for &[a, b] in &edges {
            one_ring[a].push(b);
            one_ring[b].push(a);
        }
        for ring in &mut one_ring {
            ring.sort_unstable();
        }
        let two_ring = (0..n)
            .map(|v| {
                let mut ring: Vec<usize> = one_ring[v]
                    .iter()
                    .flat_map(|&w| one_ring[w].iter().copied())
                    .chain(one_ring[v].iter().copied())
                    .filter(|&w| w != v)
                    .collect();
                ring.sort_unstable();
                ring.dedup();
                ring
            })
            .collect();
        let mut mesh = SurfaceMesh {
            vertices,
            triangles,
            normals: Vec::new(),
            one_ring,
            two_ring,
            edges,
        };
        mesh.recompute_normals()?;
        Ok(mesh)
    }

    /// Same connectivity, new vertex positions. Normals are recomputed.
    pub fn with_vertices(&self, vertices: Vec<S3Point>) -> Result<Self, MeshError> {
        assert_eq!(vertices.len(), self.vertices.len());
        let mut mesh = SurfaceMesh {
            vertices,
            triangles: self.triangles.clone(),
            normals: Vec::new(),
            one_ring: self.one_ring.clone(),
            two_ring: self.two_ring.clone(),
            edges: self.edges.clone(),
        };
        mesh.recompute_normals()?;
        Ok(mesh)
    }

    fn recompute_normals(&mut self) -> Result<(), MeshError> {
        let mut acc = vec![Vec4::zeros(); self.vertices.len()];
        for tri in &self.triangles {
            let nf = cross4(
                self.vertices[tri[0]].coords(),
                self.vertices[tri[1]].coords(),
                self.vertices[tri[2]].coords(),
            );
            for &v in tri {
                acc[v] += nf;
            }
        }
        self.normals = Vec::with_capacity(acc.len());
        for (index, (a, x)) in acc.iter().zip(&self.vertices).enumerate() {
            let t = a - x.coords() * x.coords().dot(a);
            let norm = t.norm();
            if norm < 1e-300 {
                return Err(MeshError::ZeroNormal { index });
            }
            self.normals.push(t / norm);
        }
        Ok(())
    }

    /// Reverses every triangle's winding, negating all normals.
    pub fn flip_orientation(&mut self) {
        for tri in &mut self.triangles {
            tri.swap(1, 2);
        }
        for n in &mut self.normals {
            *n = -*n;
        }
    }

    /// Replaces the normals (e.g. by refined ones from the curvature fit).
    /// Each must be unit and tangent at its vertex.
    pub fn set_normals(&mut self, normals: Vec<Vec4>) {
        assert_eq!(normals.len(), self.vertices.len());
        self.normals = normals;
    }

    pub fn vertices(&self) -> &[S3Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn normals(&self) -> &[Vec4] {
        &self.normals
    }

    pub fn normal(&self, v: usize) -> TangentVector {
        TangentVector {
            base: self.vertices[v],
            dir: self.normals[v],
        }
    }

    pub fn one_ring(&self, v: usize) -> &[usize] {
        &self.one_ring[v]
    }

    pub fn two_ring(&self, v: usize) -> &[usize] {
        &self.two_ring[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Total area as the sum of geodesic triangle areas (spherical excess in
    /// the great 2-sphere spanned by each triangle).
    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                spherical_triangle_area(
                    self.vertices[t[0]].coords(),
                    self.vertices[t[1]].coords(),
                    self.vertices[t[2]].coords(),
                )
            })
            .sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| self.vertices[a].distance(&self.vertices[b]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| self.vertices[a].distance(&self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle (radians) over all triangles, measured on the
    /// chord triangles in R⁴.
    pub fn min_triangle_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in &self.triangles {
            let p = [
                self.vertices[t[0]].coords(),
                self.vertices[t[1]].coords(),
                self.vertices[t[2]].coords(),
            ];
            for k in 0..3 {
                let a = p[(k + 1) % 3] - p[k];
                let b = p[(k + 2) % 3] - p[k];
                let c = (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
                min = min.min(c.acos());
            }
        }
        min
    }
}

/// Area of the geodesic triangle with unit-vector corners `a`, `b`, `c`
/// (Van Oosterom–Strackee with the 3-volume taken from the Gram determinant).
pub fn spherical_triangle_area(a: &Vec4, b: &Vec4, c: &Vec4) -> f64 {
    let (ab, bc, ca) = (a.dot(b), b.dot(c), c.dot(a));
    let gram = 1.0 + 2.0 * ab * bc * ca - ab * ab - bc * bc - ca * ca;
    let vol = gram.max(0.0).sqrt();
    2.0 * vol.atan2(1.0 + ab + bc + ca)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshQualityReport {
    pub min_edge: f64,
    pub max_edge: f64,
    /// Radians.
    pub min_angle: f64,
    pub vertex_count: usize,
    pub euler_characteristic: i64,
}

pub fn mesh_quality(mesh: &SurfaceMesh) -> MeshQualityReport {
    MeshQualityReport {
        min_edge: mesh.min_edge_length(),
        max_edge: mesh.max_edge_length(),
        min_angle: mesh.min_triangle_angle(),
        vertex_count: mesh.vertex_count(),
        euler_characteristic: mesh.euler_characteristic(),
    }
}
