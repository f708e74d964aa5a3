//! Scenario execution: builds the surface or curves, runs the flow and
//! writes `trajectory.csv`, snapshots and `summary.txt` into the output
//! directory.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use s3flow::flow::{run_flow_observed, FlowRun, StopReason, TrajectoryRow};
use s3flow::gaussmaps::{gauss_maps_with_normals, image_curve};
use s3flow::mesh::{
    make_clifford_torus, make_geodesic_sphere, make_hopf_torus, make_perturbed_sphere, SurfaceMesh,
};
use s3flow::s2curves::{
    curve_hausdorff_distance, geodesic_curvature, make_great_circle, make_latitude_circle, run_csf, weiner_check, S2Curve,
};
use s3flow::s3core::S3Point;

use crate::config::{CurveSpec, Scenario, ScenarioKind, SurfaceSpec};
use crate::io::{export_mesh, fmt17, read_curve_csv, read_raw4, trajectory_line, write_curve_csv, TRAJECTORY_HEADER};

/// Exit status for a finished scenario.
pub fn exit_code(reason: Option<StopReason>) -> i32 {
    match reason {
        None => 0,
        Some(r) if r.is_healthy() => 0,
        Some(StopReason::ConditionBreached) => 2,
        Some(_) => 3,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the scenario's snapshot cadence.
    pub export_cadence: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub output_dir: PathBuf,
    /// Stop reason of the surface flow, if one was run.
    pub reason: Option<StopReason>,
    /// `key = value` lines also written to `summary.txt`.
    pub summary: Vec<(String, String)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.reason)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn build_curve(spec: &CurveSpec) -> Result<S2Curve> {
    Ok(match spec {
        CurveSpec::Latitude { colatitude, samples } => make_latitude_circle(*colatitude, *samples)?,
        CurveSpec::Great { axis, samples } => make_great_circle(axis, *samples)?,
        CurveSpec::File(path) => read_curve_csv(path)?,
    })
}

pub fn build_surface(spec: &SurfaceSpec) -> Result<SurfaceMesh> {
    Ok(match spec {
        SurfaceSpec::GeodesicSphere { radius, level } => make_geodesic_sphere(*radius, *level, S3Point::IDENTITY)?,
        SurfaceSpec::PerturbedSphere {
            radius,
            level,
            amplitude,
            seed,
        } => make_perturbed_sphere(*radius, *level, S3Point::IDENTITY, *amplitude, *seed)?,
        SurfaceSpec::CliffordTorus { nu, nv } => make_clifford_torus(*nu, *nv)?,
        SurfaceSpec::HopfTorus { curve, fibers } => make_hopf_torus(&build_curve(curve)?, *fibers)?.mesh,
        SurfaceSpec::MeshFile(path) => read_raw4(path)?,
    })
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

/// Runs the surface flow, streaming trajectory rows and snapshots to disk.
fn flow_with_artifacts(scenario: &Scenario, mesh: SurfaceMesh, dir: &Path, opts: &RunOptions) -> Result<FlowRun> {
    let cadence = scenario.flow.cadence;
    let export_cadence = opts.export_cadence.unwrap_or(scenario.export_cadence);
    let mut csv = std::io::BufWriter::new(create(&dir.join("trajectory.csv"))?);
    writeln!(csv, "{TRAJECTORY_HEADER}")?;
    let mut failure: Option<anyhow::Error> = None;
    let mut config = scenario.flow.clone();
    config.cadence = 1;
    let run = run_flow_observed(mesh, &config, |state, row: &TrajectoryRow| {
        if failure.is_some() {
            return;
        }
        let last = row.stop.is_some();
        let mut write = || -> Result<()> {
            if last || (cadence > 0 && state.step % cadence == 0) {
                writeln!(csv, "{}", trajectory_line(row))?;
            }
            let snapshot = last || state.step == 0 || (export_cadence > 0 && state.step % export_cadence == 0);
            if snapshot {
                for &format in &scenario.exports {
                    let path = dir.join(format!("snapshot_{:06}.{}", state.step, format.extension()));
                    export_mesh(&state.mesh, Some(&state.curvature), format, &path)?;
                }
            }
            Ok(())
        };
        if let Err(e) = write() {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    csv.flush()?;
    Ok(run)
}

fn flow_summary(run: &FlowRun, summary: &mut Vec<(String, String)>) {
    let last = run.trajectory.last().expect("a run always records its final row");
    let r = &last.report;
    let mut push = |k: &str, v: String| summary.push((k.to_string(), v));
    push("stop_reason", run.reason.to_string());
    if let Some(d) = &run.detail {
        push("detail", d.clone());
    }
    push("t_final", fmt17(run.final_state.t));
    push("steps", run.final_state.step.to_string());
    push("vertices", run.final_state.mesh.vertex_count().to_string());
    push("min_G", fmt17(r.min_g));
    push("max_abs_G", fmt17(r.max_abs_g));
    push("max_A2", fmt17(r.max_a2));
    push("max_speed", fmt17(r.max_speed));
    push("area", fmt17(r.area));
    push("epsilon_star", fmt17(r.epsilon_star));
    push("diameter", fmt17(last.diameter));
}

/// Runs one scenario, writing artifacts into `output_dir` (created if needed).
pub fn run_scenario(scenario: &Scenario, output_dir: &Path, opts: &RunOptions) -> Result<Outcome> {
    fs::create_dir_all(output_dir).with_context(|| format!("creating {}", output_dir.display()))?;
    let mut summary = vec![
        ("scenario".to_string(), scenario.name.clone()),
        ("kind".to_string(), scenario.kind.to_string()),
    ];
    let mut reason = None;
    match scenario.kind {
        ScenarioKind::Flow => {
            let spec = scenario.surface.as_ref().expect("flow scenarios carry a surface");
            summary.push(("speed".into(), scenario.flow.speed.to_string()));
            let run = flow_with_artifacts(scenario, build_surface(spec)?, output_dir, opts)?;
            flow_summary(&run, &mut summary);
            reason = Some(run.reason);
        }
        ScenarioKind::GaussmapCsf => {
            let spec = scenario.surface.as_ref().expect("gaussmap_csf scenarios carry a surface");
            summary.push(("speed".into(), scenario.flow.speed.to_string()));
            let mesh = build_surface(spec)?;
            let initial = s3flow::flow::FlowState::new(mesh.clone());
            let image0 = gauss_maps_with_normals(&initial.mesh, &initial.curvature.normals())?;
            let run = flow_with_artifacts(scenario, mesh, output_dir, opts)?;
            flow_summary(&run, &mut summary);
            reason = Some(run.reason);
            let fin = &run.final_state;
            let image_t = gauss_maps_with_normals(&fin.mesh, &fin.curvature.normals())?;
            let bins = match spec {
                SurfaceSpec::HopfTorus { curve: CurveSpec::Latitude { samples, .. }, .. }
                | SurfaceSpec::HopfTorus { curve: CurveSpec::Great { samples, .. }, .. } => *samples,
                _ => 128,
            };
            let curve0 = image_curve(&image0.left, bins)?;
            let csf = run_csf(&curve0, scenario.flow.dt_policy, fin.t.max(1e-12), 0)?;
            let distance = curve_hausdorff_distance(&image_curve(&image_t.left, bins)?, &csf.final_curve);
            write_curve_csv(&image0.left, &output_dir.join("gauss_left_initial.csv"))?;
            write_curve_csv(&image0.right, &output_dir.join("gauss_right_initial.csv"))?;
            write_curve_csv(&image_t.left, &output_dir.join("gauss_left_final.csv"))?;
            write_curve_csv(&image_t.right, &output_dir.join("gauss_right_final.csv"))?;
            write_curve_csv(csf.final_curve.samples(), &output_dir.join("csf_final.csv"))?;
            summary.push(("csf_steps".into(), csf.steps.to_string()));
            summary.push(("hausdorff_left_vs_csf".into(), fmt17(distance)));
        }
        ScenarioKind::Csf => {
            let curve = build_curve(&scenario.curves[0])?;
            let run = run_csf(&curve, scenario.flow.dt_policy, scenario.flow.t_end, scenario.flow.cadence)?;
            let mut csv = String::from("t,length,total_curvature,max_abs_kappa\n");
            for (t, c) in &run.snapshots {
                let gc = geodesic_curvature(c)?;
                let max_kappa = gc.kappa.iter().map(|k| k.abs()).fold(0.0, f64::max);
                writeln!(csv, "{},{},{},{}", fmt17(*t), fmt17(c.length()), fmt17(gc.total()), fmt17(max_kappa))?;
            }
            fs::write(output_dir.join("curve_trajectory.csv"), csv)?;
            write_curve_csv(curve.samples(), &output_dir.join("curve_initial.csv"))?;
            write_curve_csv(run.final_curve.samples(), &output_dir.join("curve_final.csv"))?;
            summary.push(("t_final".into(), fmt17(run.snapshots.last().map_or(0.0, |s| s.0))));
            summary.push(("steps".into(), run.steps.to_string()));
            summary.push(("length_initial".into(), fmt17(curve.length())));
            summary.push(("length_final".into(), fmt17(run.final_curve.length())));
        }
        ScenarioKind::Weiner => {
            let g1 = build_curve(&scenario.curves[0])?;
            let g2 = build_curve(&scenario.curves[1])?;
            let report = weiner_check(&g1, &g2)?;
            summary.push(("total_curvature_1".into(), fmt17(report.total_curvature[0])));
            summary.push(("total_curvature_2".into(), fmt17(report.total_curvature[1])));
            summary.push(("sup_subinterval_1".into(), fmt17(report.sup_subinterval[0])));
            summary.push(("sup_subinterval_2".into(), fmt17(report.sup_subinterval[1])));
            summary.push(("sup_pair".into(), fmt17(report.sup_pair)));
            summary.push(("verdict".into(), if report.verdict { "pass" } else { "fail" }.into()));
        }
    }
    let mut text = String::new();
    for (k, v) in &summary {
        writeln!(text, "{k} = {v}")?;
    }
    fs::write(output_dir.join("summary.txt"), text)?;
    Ok(Outcome {
        output_dir: output_dir.to_path_buf(),
        reason,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(None), 0);
        assert_eq!(exit_code(Some(StopReason::Converged)), 0);
        assert_eq!(exit_code(Some(StopReason::Extinct)), 0);
        assert_eq!(exit_code(Some(StopReason::TimeExhausted)), 0);
        assert_eq!(exit_code(Some(StopReason::ConditionBreached)), 2);
        assert_eq!(exit_code(Some(StopReason::MeshDegenerate)), 3);
    }
}
