use std::f64::consts::{FRAC_PI_2, PI};

use s3flow::flow::{run_flow, run_flow_observed, sphere_ode_oracle, FlowConfig, StopReason};
use s3flow::mesh::{make_geodesic_sphere, make_hopf_torus, make_perturbed_sphere, mean_geodesic_radius};
use s3flow::s2curves::make_latitude_circle;
use s3flow::s3core::S3Point;
use s3flow::speeds::Speed;

fn config(speed: Speed, t_end: f64) -> FlowConfig {
    FlowConfig {
        speed,
        t_end,
        cadence: 1,
        ..Default::default()
    }
}

#[test]
fn vertices_stay_on_the_sphere() {
    let mesh = make_perturbed_sphere(1.0, 2, S3Point::IDENTITY, 0.02, 11).unwrap();
    let mut worst: f64 = 0.0;
    run_flow_observed(mesh, &config(Speed::Arctan, 0.05), |s, _| {
        for v in s.mesh.vertices() {
            worst = worst.max((v.coords().norm() - 1.0).abs());
        }
    })
    .unwrap();
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn positive_curvature_sphere_stays_umbilic_and_never_breaches() {
    // Level 4, arctan speed: discrete umbilicity until r < 0.2 and no
    // ConditionBreached before the run ends.
    let r0 = 1.2;
    let mesh = make_geodesic_sphere(r0, 4, S3Point::IDENTITY).unwrap();
    let mut worst: f64 = 0.0;
    let run = run_flow_observed(mesh, &config(Speed::Arctan, 2.0), |s, row| {
        if mean_geodesic_radius(&s.mesh, &S3Point::IDENTITY) > 0.2 {
            worst = worst.max(row.report.max_anisotropy);
        }
    })
    .unwrap();
    assert!(run.trajectory[0].report.min_g > 0.1);
    assert!(matches!(run.reason, StopReason::Extinct | StopReason::Converged), "{:?}", run.reason);
    assert!(worst <= 5e-2, "{worst}");
}

#[test]
fn arctan_sphere_radius_follows_the_ode() {
    let r0 = PI / 3.0;
    let oracle = sphere_ode_oracle(&Speed::Arctan, r0, 0.2);
    let mesh = make_geodesic_sphere(r0, 3, S3Point::IDENTITY).unwrap();
    let mut worst: f64 = 0.0;
    run_flow_observed(mesh, &config(Speed::Arctan, 0.2), |s, _| {
        let r = mean_geodesic_radius(&s.mesh, &S3Point::IDENTITY);
        if let Some(exact) = oracle.radius_at(s.t) {
            worst = worst.max((r - exact).abs() / exact);
        }
    })
    .unwrap();
    assert!(worst < 2e-2, "{worst}");
}

#[test]
fn sphere_past_the_equator_expands() {
    let r0 = FRAC_PI_2 + 0.1;
    let mesh = make_geodesic_sphere(r0, 3, S3Point::IDENTITY).unwrap();
    let run = run_flow(mesh, &config(Speed::Arctan, 0.2)).unwrap();
    let r = mean_geodesic_radius(&run.final_state.mesh, &S3Point::IDENTITY);
    assert!(r > r0 + 1e-3, "r = {r}");
}

#[test]
fn hopf_torus_stays_flat() {
    let curve = make_latitude_circle(1.0, 32).unwrap();
    let h = make_hopf_torus(&curve, 32).unwrap();
    let run = run_flow(h.mesh, &config(Speed::Arctan, 0.1)).unwrap();
    let g0 = run.trajectory[0].report.max_abs_g;
    let worst = run.trajectory.iter().map(|r| r.report.max_abs_g).fold(0.0, f64::max);
    assert!(worst <= 3.0 * g0.max(1e-12), "{worst:e} vs {g0:e}");
}

#[test]
fn trajectory_rows_follow_the_cadence() {
    let mesh = make_geodesic_sphere(1.0, 2, S3Point::IDENTITY).unwrap();
    let cfg = FlowConfig {
        cadence: 7,
        ..config(Speed::Mcf, 0.05)
    };
    let run = run_flow(mesh, &cfg).unwrap();
    let (last, rest) = run.trajectory.split_last().unwrap();
    assert!(rest.iter().all(|r| r.step % 7 == 0 && r.stop.is_none()));
    assert_eq!(last.stop, Some(run.reason));
    assert_eq!(last.step, run.final_state.step);
}
