//! Shape-operator estimation by local quadric fitting.
//!
//! At each vertex `x` with normal `ν`, two-ring neighbours `w` are mapped into
//! `T_x S³` by the gnomonic chart `w ↦ w/⟨w, x⟩ − x` and expressed in an
//! orthonormal frame `(e₁, e₂, ν)`. The chart sends great circles to lines,
//! so geodesic spheres and the product tori become exact quadric surfaces;
//! they are fitted implicitly as
//! `z = d·u + e·v + a·u² + b·uv + c·v² + g·z² + k·uz + l·vz`.
//! The tilt `(d, e)` refines `ν` before refitting, and on the last pass the
//! shape operator is `−Hess z` at the origin. The chart's metric agrees with
//! S³ to second order at `x`, so no correction is needed there.

use nalgebra::{Matrix5, SMatrix, SVector, SymmetricEigen};
use rayon::prelude::*;

use super::SurfaceMesh;
use crate::s3core::{cross4, Vec4};

const MIN_NEIGHBORS: usize = 5;
/// Below this many neighbours the `z`-dependent terms are dropped.
const FULL_MODEL_NEIGHBORS: usize = 8;
const MAX_CONDITION: f64 = 1e8;
/// Tikhonov weight on the column-equilibrated normal equations; only
/// matters for the `z², uz, vz` columns, which vanish on flat patches.
const RIDGE: f64 = 1e-12;
const REFINE_PASSES: usize = 2;

type Matrix8 = SMatrix<f64, 8, 8>;
type Vector8 = SVector<f64, 8>;

/// Why a vertex fit was rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitIssue {
    TooFewNeighbors(usize),
    IllConditioned(f64),
}

/// Curvature at one vertex. The shape operator is stored as
/// `[s₁₁, s₁₂, s₂₂]` in the orthonormal tangent frame `(e1, e2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCurvature {
    pub shape: [f64; 3],
    pub e1: Vec4,
    pub e2: Vec4,
    /// Normal used for the final fit (the refined surface normal).
    pub normal: Vec4,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Principal direction of `kappa1`, a unit vector in `T_x S³`.
    pub dir1: Vec4,
    pub h: f64,
    pub norm_a2: f64,
    pub g: f64,
    pub issue: Option<FitIssue>,
}

impl PointCurvature {
    fn from_shape(shape: [f64; 3], e1: Vec4, e2: Vec4, normal: Vec4, issue: Option<FitIssue>) -> Self {
        let [p, q, r] = shape;
        let mean = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        let (kappa1, kappa2) = (mean + rad, mean - rad);
        let phi = 0.5 * (2.0 * q).atan2(p - r);
        let dir1 = e1 * phi.cos() + e2 * phi.sin();
        PointCurvature {
            shape,
            e1,
            e2,
            normal,
            kappa1,
            kappa2,
            dir1,
            h: kappa1 + kappa2,
            norm_a2: kappa1 * kappa1 + kappa2 * kappa2,
            g: 1.0 + kappa1 * kappa2,
            issue,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub points: Vec<PointCurvature>,
}

impl CurvatureData {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Vertices whose fit was rejected; they carry neighbour-averaged values.
    pub fn issues(&self) -> Vec<(usize, FitIssue)> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.issue.map(|s| (i, s)))
            .collect()
    }

    pub fn normals(&self) -> Vec<Vec4> {
        self.points.iter().map(|p| p.normal).collect()
    }

    pub fn min_g(&self) -> f64 {
        self.points.iter().map(|p| p.g).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_g(&self) -> f64 {
        self.points.iter().map(|p| p.g.abs()).fold(0.0, f64::max)
    }
}

fn tangent_frame(x: &Vec4, n: &Vec4, hint: &Vec4) -> (Vec4, Vec4) {
    let mut e1 = hint - x * x.dot(hint) - n * n.dot(hint);
    if e1.norm() < 1e-12 {
        // Any unit vector orthogonal to x and n.
        for k in 0..4 {
            let mut w = Vec4::zeros();
            w[k] = 1.0;
            e1 = w - x * x.dot(&w) - n * n.dot(&w);
            if e1.norm() > 0.5 {
                break;
            }
        }
    }
    let e1 = e1.normalize();
    let e2 = cross4(x, n, &e1);
    (e1, e2)
}

/// Fitted coefficients in chart coordinates divided by `scale`.
struct Fit {
    coef: Vector8,
}

impl Fit {
    fn slope(&self) -> (f64, f64) {
        (self.coef[0], self.coef[1])
    }

    /// Hessian `[z_uu, z_uv, z_vv]` of the fitted graph at the origin.
    fn hessian(&self, scale: f64) -> [f64; 3] {
        let [d, e, a, b, c, g, k, l] = self.coef.into();
        [
            (2.0 * a + 2.0 * g * d * d + 2.0 * k * d) / scale,
            (b + 2.0 * g * d * e + k * e + l * d) / scale,
            (2.0 * c + 2.0 * g * e * e + 2.0 * l * e) / scale,
        ]
    }
}

fn fit_quadric(frame: [&Vec4; 3], chart: &[Vec4], scale: f64, want_condition: bool) -> Result<Fit, FitIssue> {
    let [e1, e2, n] = frame;
    let full = chart.len() >= FULL_MODEL_NEIGHBORS;
    let mut m = Matrix8::zeros();
    let mut rhs = Vector8::zeros();
    let inv = 1.0 / scale;
    for p in chart {
        let u = p.dot(e1) * inv;
        let v = p.dot(e2) * inv;
        let z = p.dot(n) * inv;
        let row = if full {
            Vector8::from([u, v, u * u, u * v, v * v, z * z, u * z, v * z])
        } else {
            Vector8::from([u, v, u * u, u * v, v * v, 0.0, 0.0, 0.0])
        };
        m.ger(1.0, &row, &row, 1.0);
        rhs.axpy(z, &row, 1.0);
    }
    let core: Matrix5<f64> = m.fixed_view::<5, 5>(0, 0).into_owned();
    if want_condition {
        let eig = SymmetricEigen::new(core).eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        let cond = if lo > 0.0 { (hi / lo).sqrt() } else { f64::INFINITY };
        if cond > MAX_CONDITION {
            return Err(FitIssue::IllConditioned(cond));
        }
    }
    let d = Vector8::from_fn(|i, _| if m[(i, i)] > 0.0 { 1.0 / m[(i, i)].sqrt() } else { 1.0 });
    let mut scaled = Matrix8::from_fn(|i, j| m[(i, j)] * d[i] * d[j]);
    for i in 0..8 {
        scaled[(i, i)] += RIDGE;
    }
    let chol = scaled.cholesky().ok_or(FitIssue::IllConditioned(f64::INFINITY))?;
    let y = chol.solve(&rhs.component_mul(&d));
    Ok(Fit { coef: y.component_mul(&d) })
}

fn estimate_vertex(mesh: &SurfaceMesh, v: usize) -> PointCurvature {
    let xc = *mesh.vertices()[v].coords();
    let chart: Vec<Vec4> = mesh
        .two_ring(v)
        .iter()
        .map(|&w| mesh.vertices()[w].coords())
        .filter(|w| w.dot(&xc) > 1e-3)
        .map(|w| w / w.dot(&xc) - xc)
        .collect();
    let mut n = mesh.normals()[v];
    let hint = chart.first().copied().unwrap_or_else(Vec4::zeros);
    let (mut e1, mut e2) = tangent_frame(&xc, &n, &hint);
    if chart.len() < MIN_NEIGHBORS {
        return PointCurvature::from_shape([0.0; 3], e1, e2, n, Some(FitIssue::TooFewNeighbors(chart.len())));
    }
    let scale = chart.iter().map(|w| w.norm()).sum::<f64>() / chart.len() as f64;
    for pass in 0..=REFINE_PASSES {
        let last = pass == REFINE_PASSES;
        let fit = match fit_quadric([&e1, &e2, &n], &chart, scale, last) {
            Ok(f) => f,
            Err(issue) => return PointCurvature::from_shape([0.0; 3], e1, e2, n, Some(issue)),
        };
        if last {
            let [huu, huv, hvv] = fit.hessian(scale);
            return PointCurvature::from_shape([-huu, -huv, -hvv], e1, e2, n, None);
        }
        let (du, dv) = fit.slope();
        let tilted = n - e1 * du - e2 * dv;
        let tilted = tilted - xc * xc.dot(&tilted);
        n = tilted.normalize();
        let frame = tangent_frame(&xc, &n, &e1);
        e1 = frame.0;
        e2 = frame.1;
    }
    unreachable!("loop returns on the last pass")
}

/// Estimates the shape operator, principal curvatures and derived quantities
/// at every vertex. Rejected fits (too few neighbours or condition number
/// above 1e8) are reported in [`PointCurvature::issue`] and take the average
/// principal curvatures of their accepted one-ring neighbours.
pub fn estimate_curvature(mesh: &SurfaceMesh) -> CurvatureData {
    let mut points: Vec<PointCurvature> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| estimate_vertex(mesh, v))
        .collect();
    let flagged: Vec<usize> = (0..points.len()).filter(|&i| points[i].issue.is_some()).collect();
    for i in flagged {
        let (mut k1, mut k2, mut count) = (0.0, 0.0, 0usize);
        for &w in mesh.one_ring(i) {
            if points[w].issue.is_none() {
                k1 += points[w].kappa1;
                k2 += points[w].kappa2;
                count += 1;
            }
        }
        if count > 0 {
            let p = &points[i];
            let shape = [k1 / count as f64, 0.0, k2 / count as f64];
            points[i] = PointCurvature::from_shape(shape, p.e1, p.e2, p.normal, p.issue);
        }
    }
    CurvatureData { points }
}
