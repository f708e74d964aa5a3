//! Explicit time integration of `∂x/∂t = −F(κ₁, κ₂)·ν` for meshed surfaces
//! in S³, with ν the mesh normal (outward for spheres, so positive `F`
//! contracts geodesic spheres of radius below π/2).
//!
//! Each step moves every vertex along the great circle through its fitted
//! normal, then rebuilds normals and curvature. Step sizes follow a parabolic
//! CFL rule; the loop stops on stationarity, extinction, a breach of the
//! curvature floor, mesh degeneration or the time limit.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::{estimate_curvature, CurvatureData, MeshError, SurfaceMesh};
use crate::s2curves::DtPolicy;
use crate::s3core::{geodesic_step, GeomError, S3Point, TangentVector, Vec4};
use crate::speeds::{speed_huisken_monitor, Speed, SpeedFunction};

/// Upper bound on any CFL step.
pub const DT_MAX: f64 = 1e-2;
/// Floor on the largest speed derivative in the CFL rule.
pub const LAMBDA_FLOOR: f64 = 1e-8;
/// Smallest interior triangle angle (radians) before the mesh is declared degenerate.
pub const MIN_ANGLE: f64 = PI / 180.0;
pub const MIN_EDGE: f64 = 1e-6;
/// Number of vertices sampled for the diameter proxy.
pub const DIAMETER_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("mesh degenerated at t = {t}: {detail}")]
    MeshDegenerate { t: f64, detail: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub speed: Speed,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    /// Converged once the largest `|F|` drops below this.
    pub speed_tol: f64,
    /// Extinct once the diameter proxy drops below this.
    pub width_tol: f64,
    /// Condition breached once `min G < −g_floor`.
    pub g_floor: f64,
    /// Trajectory rows (and snapshots, if kept) every `cadence` steps.
    pub cadence: usize,
    pub keep_snapshots: bool,
    /// Strength of tangential Laplacian smoothing per step (0 disables it).
    pub smoothing: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            speed: Speed::Mcf,
            dt_policy: DtPolicy::Cfl { sigma: 0.25 },
            t_end: 1.0,
            speed_tol: 1e-6,
            width_tol: 0.1,
            g_floor: 5e-2,
            cadence: 10,
            keep_snapshots: false,
            smoothing: 0.0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: String| Err(FlowError::InvalidConfig(m));
        match self.dt_policy {
            DtPolicy::Cfl { sigma } if !(sigma > 0.0 && sigma <= 1.0) => {
                return bad(format!("CFL factor must lie in (0, 1], got {sigma}"));
            }
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("fixed dt must be positive, got {dt}"));
            }
            _ => {}
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        for (name, v) in [
            ("speed_tol", self.speed_tol),
            ("width_tol", self.width_tol),
            ("g_floor", self.g_floor),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.smoothing >= 0.0 && self.smoothing < 1.0) {
            return bad(format!("smoothing must lie in [0, 1), got {}", self.smoothing));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub mesh: SurfaceMesh,
    pub curvature: CurvatureData,
    pub step: usize,
}

impl FlowState {
    pub fn new(mesh: SurfaceMesh) -> Self {
        let curvature = estimate_curvature(&mesh);
        FlowState {
            t: 0.0,
            mesh,
            curvature,
            step: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchingReport {
    pub min_g: f64,
    pub max_abs_g: f64,
    pub max_a2: f64,
    pub max_speed: f64,
    /// Largest `|κ₁ − κ₂|`.
    pub max_anisotropy: f64,
    pub area: f64,
    /// Largest `ε` with every vertex in `Ω_ε`; `+∞` when all vertices are umbilic.
    pub epsilon_star: f64,
    /// Fractions of vertices satisfying each condition.
    pub simons: f64,
    pub okumura: f64,
    pub huisken2d: f64,
}

/// `(κ₁, κ₂) ∈ Ω_ε`, the union of `{|κ₁−κ₂| ≤ (1+κ₁κ₂)/ε, κ₁κ₂ ≤ 1}` and
/// `{|κ₁−κ₂| ≤ 2/ε, κ₁κ₂ ≥ 1}`.
pub fn omega_epsilon_member(k1: f64, k2: f64, eps: f64) -> bool {
    let d = (k1 - k2).abs();
    let p = k1 * k2;
    (p <= 1.0 && d <= (1.0 + p) / eps) || (p >= 1.0 && d <= 2.0 / eps)
}

/// Largest `ε` for which `(κ₁, κ₂) ∈ Ω_ε` (0 when none, `+∞` at umbilics
/// with `1 + κ₁κ₂ ≥ 0`).
pub fn epsilon_vertex(k1: f64, k2: f64) -> f64 {
    let d = (k1 - k2).abs();
    let p = k1 * k2;
    let ratio = |num: f64| {
        if num < 0.0 {
            0.0
        } else if d == 0.0 {
            f64::INFINITY
        } else {
            num / d
        }
    };
    let low = if p <= 1.0 { ratio(1.0 + p) } else { 0.0 };
    let high = if p >= 1.0 { ratio(2.0) } else { 0.0 };
    low.max(high)
}

pub fn pinching_report(curvature: &CurvatureData, mesh: &SurfaceMesh, speed: &dyn SpeedFunction) -> PinchingReport {
    let n = curvature.len().max(1) as f64;
    let mut r = PinchingReport {
        min_g: f64::INFINITY,
        max_abs_g: 0.0,
        max_a2: 0.0,
        max_speed: 0.0,
        max_anisotropy: 0.0,
        area: mesh.area(),
        epsilon_star: f64::INFINITY,
        simons: 0.0,
        okumura: 0.0,
        huisken2d: 0.0,
    };
    for p in &curvature.points {
        r.min_g = r.min_g.min(p.g);
        r.max_abs_g = r.max_abs_g.max(p.g.abs());
        r.max_a2 = r.max_a2.max(p.norm_a2);
        r.max_speed = r.max_speed.max(speed.eval(p.kappa1, p.kappa2).abs());
        r.max_anisotropy = r.max_anisotropy.max(p.kappa1 - p.kappa2);
        r.epsilon_star = r.epsilon_star.min(epsilon_vertex(p.kappa1, p.kappa2));
        let flags = speed_huisken_monitor(p.kappa1, p.kappa2);
        r.simons += flags.simons as u8 as f64;
        r.okumura += flags.okumura as u8 as f64;
        r.huisken2d += flags.huisken2d as u8 as f64;
    }
    r.simons /= n;
    r.okumura /= n;
    r.huisken2d /= n;
    r
}

/// `σ·h_min² / max(λ_max, 1e−8)`, capped at [`DT_MAX`], where `λ` is
/// `|∂F/∂κ₁| + |∂F/∂κ₂|`.
pub fn cfl_dt(mesh: &SurfaceMesh, curvature: &CurvatureData, speed: &dyn SpeedFunction, sigma: f64) -> f64 {
    let h = mesh.min_edge_length();
    let lambda = curvature
        .points
        .iter()
        .map(|p| {
            let (a, b) = speed.partials(p.kappa1, p.kappa2);
            a.abs() + b.abs()
        })
        .fold(0.0, f64::max);
    (sigma * h * h / lambda.max(LAMBDA_FLOOR)).min(DT_MAX)
}

fn unit_tangent(x: &S3Point, w: &Vec4) -> Result<TangentVector, GeomError> {
    let xc = x.coords();
    let t = w - xc * xc.dot(w);
    TangentVector::new(*x, t / t.norm())
}

/// Moves every vertex by `−F·dt` along its fitted normal and rebuilds the
/// state. Fails with [`FlowError::MeshDegenerate`] if a triangle angle drops
/// below 1° or an edge below 1e−6.
pub fn flow_step(state: &FlowState, speed: &dyn SpeedFunction, dt: f64) -> Result<FlowState, FlowError> {
    let mesh = &state.mesh;
    let moved: Vec<S3Point> = mesh
        .vertices()
        .par_iter()
        .zip(state.curvature.points.par_iter())
        .map(|(x, p)| {
            let nu = unit_tangent(x, &p.normal)?;
            geodesic_step(x, &nu, -speed.eval(p.kappa1, p.kappa2) * dt)
        })
        .collect::<Result<_, GeomError>>()?;
    let next = finish_step(mesh.with_vertices(moved), state.t + dt)?;
    let curvature = estimate_curvature(&next);
    Ok(FlowState {
        t: state.t + dt,
        mesh: next,
        curvature,
        step: state.step + 1,
    })
}

fn finish_step(mesh: Result<SurfaceMesh, MeshError>, t: f64) -> Result<SurfaceMesh, FlowError> {
    let mesh = mesh.map_err(|e| FlowError::MeshDegenerate { t, detail: e.to_string() })?;
    let angle = mesh.min_triangle_angle();
    if !(angle >= MIN_ANGLE) {
        return Err(FlowError::MeshDegenerate {
            t,
            detail: format!("minimum triangle angle {:.3}°", angle.to_degrees()),
        });
    }
    let edge = mesh.min_edge_length();
    if !(edge >= MIN_EDGE) {
        return Err(FlowError::MeshDegenerate {
            t,
            detail: format!("edge length {edge:e}"),
        });
    }
    Ok(mesh)
}

/// Moves each vertex a fraction `strength` of the way towards its one-ring
/// average, after removing the normal component of that displacement.
pub fn tangential_smoothing(state: &FlowState, strength: f64) -> Result<FlowState, FlowError> {
    let mesh = &state.mesh;
    let moved: Vec<S3Point> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| {
            let x = mesh.vertices()[v];
            let ring = mesh.one_ring(v);
            let avg = ring.iter().map(|&w| x.log(&mesh.vertices()[w])).sum::<Vec4>() / ring.len() as f64;
            let n = state.curvature.points[v].normal;
            let d = (avg - n * n.dot(&avg)) * strength;
            let len = d.norm();
            if len == 0.0 {
                return Ok(x);
            }
            geodesic_step(&x, &unit_tangent(&x, &d)?, len)
        })
        .collect::<Result<_, GeomError>>()?;
    let next = finish_step(mesh.with_vertices(moved), state.t)?;
    let curvature = estimate_curvature(&next);
    Ok(FlowState {
        t: state.t,
        mesh: next,
        curvature,
        step: state.step,
    })
}

/// Largest pairwise distance among up to 64 evenly spaced vertices.
pub fn diameter_proxy(mesh: &SurfaceMesh) -> f64 {
    let n = mesh.vertex_count();
    let k = n.min(DIAMETER_SAMPLES);
    let picks: Vec<&S3Point> = (0..k).map(|i| &mesh.vertices()[i * n / k]).collect();
    let mut d = 0.0f64;
    for i in 0..k {
        for j in i + 1..k {
            d = d.max(picks[i].distance(picks[j]));
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    Converged,
    Extinct,
    ConditionBreached,
    TimeExhausted,
    MeshDegenerate,
}

impl StopReason {
    /// Whether the run ended in one of the expected outcomes.
    pub fn is_healthy(self) -> bool {
        matches!(self, StopReason::Converged | StopReason::Extinct | StopReason::TimeExhausted)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StopReason::Converged => "Converged",
            StopReason::Extinct => "Extinct",
            StopReason::ConditionBreached => "ConditionBreached",
            StopReason::TimeExhausted => "TimeExhausted",
            StopReason::MeshDegenerate => "MeshDegenerate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub step: usize,
    pub report: PinchingReport,
    pub diameter: f64,
    /// Set on the final row.
    pub stop: Option<StopReason>,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub trajectory: Vec<TrajectoryRow>,
    pub snapshots: Vec<FlowState>,
    /// Last valid state (before the failing step for `MeshDegenerate`).
    pub final_state: FlowState,
    pub reason: StopReason,
    /// Diagnostic for `MeshDegenerate`.
    pub detail: Option<String>,
}

pub fn run_flow(mesh: SurfaceMesh, config: &FlowConfig) -> Result<FlowRun, FlowError> {
    run_flow_observed(mesh, config, |_, _| {})
}

/// As [`run_flow`], calling `observer` with each sampled state and its report.
pub fn run_flow_observed<O>(mesh: SurfaceMesh, config: &FlowConfig, mut observer: O) -> Result<FlowRun, FlowError>
where
    O: FnMut(&FlowState, &TrajectoryRow),
{
    config.validate()?;
    let speed = &config.speed;
    let mut state = FlowState::new(mesh);
    let mut trajectory = Vec::new();
    let mut snapshots = Vec::new();
    let mut detail = None;
    let reason = loop {
        let report = pinching_report(&state.curvature, &state.mesh, speed);
        let diameter = diameter_proxy(&state.mesh);
        let stop = if report.max_speed < config.speed_tol {
            Some(StopReason::Converged)
        } else if diameter < config.width_tol {
            Some(StopReason::Extinct)
        } else if report.min_g < -config.g_floor {
            Some(StopReason::ConditionBreached)
        } else if state.t >= config.t_end * (1.0 - 1e-12) {
            Some(StopReason::TimeExhausted)
        } else {
            None
        };
        let row = TrajectoryRow {
            t: state.t,
            step: state.step,
            report,
            diameter,
            stop,
        };
        let sampled = stop.is_some() || (config.cadence > 0 && state.step % config.cadence == 0);
        if sampled {
            trajectory.push(row);
            observer(&state, &row);
            if config.keep_snapshots {
                snapshots.push(state.clone());
            }
        }
        if let Some(reason) = stop {
            break reason;
        }
        let dt = match config.dt_policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl { sigma } => cfl_dt(&state.mesh, &state.curvature, speed, sigma),
        };
        let dt = dt.min(config.t_end - state.t);
        let stepped = flow_step(&state, speed, dt).and_then(|s| {
            if config.smoothing > 0.0 {
                tangential_smoothing(&s, config.smoothing)
            } else {
                Ok(s)
            }
        });
        match stepped {
            Ok(next) => state = next,
            Err(FlowError::MeshDegenerate { t, detail: d }) => {
                detail = Some(format!("t = {t}: {d}"));
                let mut row = row;
                row.stop = Some(StopReason::MeshDegenerate);
                if sampled {
                    trajectory.pop();
                }
                trajectory.push(row);
                observer(&state, &row);
                break StopReason::MeshDegenerate;
            }
            Err(e) => return Err(e),
        }
    };
    Ok(FlowRun {
        trajectory,
        snapshots,
        final_state: state,
        reason,
        detail,
    })
}

/// Radius history of a geodesic sphere under `F`, from `dr/dt = −F(cot r, cot r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereOdeTrajectory {
    /// `(t, r)` after every step, starting at `(0, r₀)`.
    pub samples: Vec<(f64, f64)>,
    /// First time with `r < 1e−3` or `r > π − 1e−3`.
    pub extinction: Option<f64>,
}

impl SphereOdeTrajectory {
    /// Linear interpolation of `r(t)`; `None` outside the sampled range.
    pub fn radius_at(&self, t: f64) -> Option<f64> {
        let k = self.samples.partition_point(|s| s.0 < t);
        if k == 0 {
            return (t == self.samples[0].0).then_some(self.samples[0].1);
        }
        let (t1, r1) = *self.samples.get(k)?;
        let (t0, r0) = self.samples[k - 1];
        Some(r0 + (r1 - r0) * (t - t0) / (t1 - t0))
    }
}

pub const ODE_STEP: f64 = 1e-5;
pub const ODE_EXTINCTION: f64 = 1e-3;

/// RK4 integration with step 1e−5 up to `t_end` or extinction.
pub fn sphere_ode_oracle(speed: &dyn SpeedFunction, r0: f64, t_end: f64) -> SphereOdeTrajectory {
    let rhs = |r: f64| {
        let k = r.cos() / r.sin();
        -speed.eval(k, k)
    };
    let inside = |r: f64| r.is_finite() && r > ODE_EXTINCTION && r < PI - ODE_EXTINCTION;
    let mut samples = vec![(0.0, r0)];
    let (mut t, mut r) = (0.0, r0);
    let mut extinction = None;
    while t < t_end {
        let h = ODE_STEP.min(t_end - t);
        let k1 = rhs(r);
        let k2 = rhs(r + 0.5 * h * k1);
        let k3 = rhs(r + 0.5 * h * k2);
        let k4 = rhs(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        if !inside(r) {
            extinction = Some(t);
            break;
        }
        samples.push((t, r));
    }
    SphereOdeTrajectory { samples, extinction }
}
