//! Closed curves on S²: discrete geodesic curvature, curve-shortening flow,
//! circle fixtures and the subinterval total-curvature conditions for
//! Gauss images of flat tori.
//!
//! Orientation: S² carries the outward normal, so a positive geodesic
//! curvature means the curve turns left. A circle traversed
//! counter-clockwise about its axis has `κ_g = cot θ` for colatitude `θ`.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::s3core::{S2Point, Vec3};

pub const MIN_SAMPLES: usize = 8;
const MIN_GAP: f64 = 1e-8;
const MAX_GAP: f64 = 0.5;
/// Tolerance on `|∫κ ds|` used by [`weiner_check`].
pub const WEINER_TOTAL_TOL: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("a closed curve needs at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} is not a unit vector (|p| = {norm})")]
    NotUnit { index: usize, norm: f64 },
    #[error("samples {index} and {next} are {gap} rad apart (allowed [{MIN_GAP}, {MAX_GAP}])")]
    BadGap { index: usize, next: usize, gap: f64 },
    #[error("segment collapsed to {length} rad at sample {index}")]
    SegmentCollapse { index: usize, length: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Cyclic polyline of unit vectors joined by minor great-circle arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct S2Curve {
    samples: Vec<S2Point>,
}

impl S2Curve {
    pub fn new(samples: Vec<S2Point>) -> Result<Self, CurveError> {
        if samples.len() < MIN_SAMPLES {
            return Err(CurveError::TooFewSamples(samples.len()));
        }
        for (index, p) in samples.iter().enumerate() {
            let norm = p.coords().norm();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(CurveError::NotUnit { index, norm });
            }
        }
        let n = samples.len();
        for index in 0..n {
            let next = (index + 1) % n;
            let gap = samples[index].distance(&samples[next]);
            if !(MIN_GAP..=MAX_GAP).contains(&gap) {
                return Err(CurveError::BadGap { index, next, gap });
            }
        }
        Ok(S2Curve { samples })
    }

    pub fn samples(&self) -> &[S2Point] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn segment(&self, i: usize) -> f64 {
        let n = self.samples.len();
        self.samples[i].distance(&self.samples[(i + 1) % n])
    }

    pub fn length(&self) -> f64 {
        (0..self.samples.len()).map(|i| self.segment(i)).sum()
    }

    /// Area of the region on the left of the curve, in `[0, 4π)`, computed as
    /// a fan of geodesic triangles from the normalized centroid.
    pub fn enclosed_area(&self) -> f64 {
        let sum: Vec3 = self.samples.iter().map(|p| *p.coords()).sum();
        let c = if sum.norm() > 1e-9 {
            sum.normalize()
        } else {
            // Centroid degenerates for great circles; any point off the curve works.
            let p = self.samples[0].coords();
            let q = self.samples[self.samples.len() / 4].coords();
            p.cross(q).normalize()
        };
        let n = self.samples.len();
        let mut area = 0.0;
        for i in 0..n {
            let a = self.samples[i].coords();
            let b = self.samples[(i + 1) % n].coords();
            let det = c.dot(&a.cross(b));
            area += 2.0 * det.atan2(1.0 + c.dot(a) + a.dot(b) + b.dot(&c));
        }
        area.rem_euclid(2.0 * TAU)
    }
}

/// Circle of colatitude `theta` about `axis`, sampled uniformly and traversed
/// counter-clockwise about the axis.
pub fn make_circle(axis: &S2Point, theta: f64, n: usize) -> Result<S2Curve, CurveError> {
    if n < MIN_SAMPLES {
        return Err(CurveError::TooFewSamples(n));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(CurveError::InvalidParameter(format!("colatitude must lie in (0, π), got {theta}")));
    }
    let z = *axis.coords();
    let helper = if z[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let a = (helper - z * z.dot(&helper)).normalize();
    let b = z.cross(&a);
    let (st, ct) = theta.sin_cos();
    let samples = (0..n)
        .map(|k| {
            let phi = TAU * k as f64 / n as f64;
            S2Point::normalize(z * ct + (a * phi.cos() + b * phi.sin()) * st)
        })
        .collect();
    S2Curve::new(samples)
}

/// Latitude circle of colatitude `theta` about the pole `(0, 0, 1)`.
pub fn make_latitude_circle(theta: f64, n: usize) -> Result<S2Curve, CurveError> {
    make_circle(&S2Point::normalize(Vec3::z()), theta, n)
}

pub fn make_great_circle(axis: &S2Point, n: usize) -> Result<S2Curve, CurveError> {
    make_circle(axis, PI / 2.0, n)
}

/// Per-sample discrete geodesic curvature and arclength weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicCurvature {
    /// Signed curvature (turning angle over `ds`).
    pub kappa: Vec<f64>,
    /// Average length of the two segments adjacent to each sample.
    pub ds: Vec<f64>,
    /// Unit tangent at each sample (bisector of the adjacent segments).
    pub tangent: Vec<Vec3>,
}

impl GeodesicCurvature {
    /// `Σ κ ds`, the total turning.
    pub fn total(&self) -> f64 {
        self.kappa.iter().zip(&self.ds).map(|(k, d)| k * d).sum()
    }

    pub fn weighted(&self) -> Vec<f64> {
        self.kappa.iter().zip(&self.ds).map(|(k, d)| k * d).collect()
    }
}

pub fn geodesic_curvature(curve: &S2Curve) -> Result<GeodesicCurvature, CurveError> {
    let s = curve.samples();
    let n = s.len();
    let mut out = GeodesicCurvature {
        kappa: Vec::with_capacity(n),
        ds: Vec::with_capacity(n),
        tangent: Vec::with_capacity(n),
    };
    for i in 0..n {
        let p = &s[i];
        let back = p.log(&s[(i + n - 1) % n]);
        let fwd = p.log(&s[(i + 1) % n]);
        let (lb, lf) = (back.norm(), fwd.norm());
        if lb < MIN_GAP {
            return Err(CurveError::SegmentCollapse { index: (i + n - 1) % n, length: lb });
        }
        if lf < MIN_GAP {
            return Err(CurveError::SegmentCollapse { index: i, length: lf });
        }
        let t_in = -back / lb;
        let t_out = fwd / lf;
        let turning = p.coords().dot(&t_in.cross(&t_out)).atan2(t_in.dot(&t_out));
        let ds = 0.5 * (lb + lf);
        out.kappa.push(turning / ds);
        out.ds.push(ds);
        out.tangent.push((t_in + t_out).normalize());
    }
    Ok(out)
}

/// Redistributes `n` samples uniformly by arclength along the polyline,
/// starting at the first sample.
pub fn resample_uniform(samples: &[S2Point], n: usize) -> Vec<S2Point> {
    let m = samples.len();
    let seg: Vec<f64> = (0..m).map(|i| samples[i].distance(&samples[(i + 1) % m])).collect();
    let total: f64 = seg.iter().sum();
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let (mut i, mut start) = (0usize, 0.0f64);
    for k in 0..n {
        let target = k as f64 * step;
        while i < m - 1 && start + seg[i] < target {
            start += seg[i];
            i += 1;
        }
        let a = &samples[i];
        let b = &samples[(i + 1) % m];
        let frac = if seg[i] > 0.0 { ((target - start) / seg[i]).clamp(0.0, 1.0) } else { 0.0 };
        out.push(a.exp(&(a.log(b) * frac)));
    }
    out
}

/// One explicit curve-shortening step: each sample moves a geodesic distance
/// `κ_g·dt` along its left normal, then (optionally) the samples are
/// redistributed uniformly by arclength.
pub fn csf_step(curve: &S2Curve, dt: f64, resample: bool) -> Result<S2Curve, CurveError> {
    let gc = geodesic_curvature(curve)?;
    let moved: Vec<S2Point> = curve
        .samples()
        .iter()
        .zip(gc.kappa.iter().zip(&gc.tangent))
        .map(|(p, (k, t))| {
            let normal = p.coords().cross(t);
            p.exp(&(normal * (k * dt)))
        })
        .collect();
    let samples = if resample { resample_uniform(&moved, moved.len()) } else { moved };
    let n = samples.len();
    for index in 0..n {
        let length = samples[index].distance(&samples[(index + 1) % n]);
        if length < MIN_GAP {
            return Err(CurveError::SegmentCollapse { index, length });
        }
    }
    Ok(S2Curve { samples })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = σ·(min ds)²`.
    Cfl { sigma: f64 },
}

#[derive(Debug, Clone)]
pub struct CsfTrajectory {
    /// `(t, curve)` at the sampling cadence; always includes `t = 0` and the end.
    pub snapshots: Vec<(f64, S2Curve)>,
    /// `(t, length)` after every step.
    pub lengths: Vec<(f64, f64)>,
    pub final_curve: S2Curve,
    pub steps: usize,
}

/// Curve-shortening flow until `t_end`, resampling every step. Snapshots are
/// kept every `cadence` steps (0 keeps only the endpoints).
pub fn run_csf(curve: &S2Curve, policy: DtPolicy, t_end: f64, cadence: usize) -> Result<CsfTrajectory, CurveError> {
    let mut current = curve.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut snapshots = vec![(0.0, current.clone())];
    let mut lengths = vec![(0.0, current.length())];
    while t < t_end {
        let dt = match policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl { sigma } => {
                let gc = geodesic_curvature(&current)?;
                let min_ds = gc.ds.iter().copied().fold(f64::INFINITY, f64::min);
                sigma * min_ds * min_ds
            }
        };
        if !(dt > 0.0) {
            return Err(CurveError::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let dt = dt.min(t_end - t);
        current = csf_step(&current, dt, true)?;
        t += dt;
        steps += 1;
        lengths.push((t, current.length()));
        if cadence > 0 && steps % cadence == 0 {
            snapshots.push((t, current.clone()));
        }
    }
    if snapshots.last().map(|s| s.0) != Some(t) {
        snapshots.push((t, current.clone()));
    }
    Ok(CsfTrajectory {
        snapshots,
        lengths,
        final_curve: current,
        steps,
    })
}

/// `max |Σ_{k∈I} a_k|` over all cyclic runs `I` of consecutive entries (the
/// empty run counts as 0).
///
/// A cyclic run is either a linear run `[i, j)` with sum `P_j − P_i`, or the
/// complement of one, with sum `T − (P_j − P_i)`. Both are extremal at the
/// largest or smallest linear run sum, which Kadane's scan finds in O(n).
pub fn sup_subinterval_abs(values: &[f64]) -> f64 {
    let total: f64 = values.iter().sum();
    let (mut best_max, mut best_min) = (0.0f64, 0.0f64);
    let (mut run_max, mut run_min) = (0.0f64, 0.0f64);
    for &a in values {
        run_max = (run_max + a).max(0.0);
        run_min = (run_min + a).min(0.0);
        best_max = best_max.max(run_max);
        best_min = best_min.min(run_min);
    }
    [best_max, -best_min, (total - best_max).abs(), (total - best_min).abs()]
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeinerReport {
    /// `∫κ ds` for γ₁ and γ₂.
    pub total_curvature: [f64; 2],
    /// Largest `|∫_I κ ds|` over subarcs of each curve.
    pub sup_subinterval: [f64; 2],
    pub sup_pair: f64,
    pub verdict: bool,
}

/// Zero total curvature (within [`WEINER_TOTAL_TOL`]) for both curves and
/// `sup_pair < π`.
pub fn weiner_check(gamma1: &S2Curve, gamma2: &S2Curve) -> Result<WeinerReport, CurveError> {
    let g1 = geodesic_curvature(gamma1)?.weighted();
    let g2 = geodesic_curvature(gamma2)?.weighted();
    let total_curvature = [g1.iter().sum(), g2.iter().sum()];
    let sup_subinterval = [sup_subinterval_abs(&g1), sup_subinterval_abs(&g2)];
    let sup_pair = sup_subinterval[0] + sup_subinterval[1];
    let verdict = total_curvature.iter().all(|t: &f64| t.abs() <= WEINER_TOTAL_TOL) && sup_pair < PI;
    Ok(WeinerReport {
        total_curvature,
        sup_subinterval,
        sup_pair,
        verdict,
    })
}

/// Symmetric Hausdorff distance (geodesic) between two finite point sets.
pub fn hausdorff_distance(a: &[S2Point], b: &[S2Point]) -> f64 {
    let one_sided = |x: &[S2Point], y: &[S2Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Geodesic distance from `x` to the minor arc from `p` to `q`.
pub fn segment_distance(x: &S2Point, p: &S2Point, q: &S2Point) -> f64 {
    let (x, a, b) = (x.coords(), p.coords(), q.coords());
    let n = a.cross(b);
    let len = n.norm();
    if len > 1e-15 {
        let n = n / len;
        let foot = x - n * x.dot(&n);
        if a.cross(&foot).dot(&n) >= 0.0 && foot.cross(b).dot(&n) >= 0.0 && foot.norm() > 0.0 {
            return x.dot(&n).abs().min(1.0).asin();
        }
    }
    p.distance(&S2Point::normalize(*x)).min(q.distance(&S2Point::normalize(*x)))
}

/// Symmetric Hausdorff distance between two closed curves taken as
/// piecewise-geodesic polygons, measured from the samples of each curve to
/// the polygon of the other.
pub fn curve_hausdorff_distance(a: &S2Curve, b: &S2Curve) -> f64 {
    let one_sided = |x: &S2Curve, y: &S2Curve| {
        let ys = y.samples();
        x.samples()
            .iter()
            .map(|p| {
                (0..ys.len())
                    .map(|k| segment_distance(p, &ys[k], &ys[(k + 1) % ys.len()]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}
