//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use s3flow::flow::{run_flow, run_flow_observed, sphere_ode_oracle, FlowConfig, FlowState, StopReason};
use s3flow::gaussmaps::{degeneracy_measure, gauss_maps, gauss_maps_with_normals, image_curve};
use s3flow::mesh::{
    make_clifford_torus, make_geodesic_sphere, make_hopf_torus, make_perturbed_sphere, mean_geodesic_radius,
};
use s3flow::s2curves::{
    curve_hausdorff_distance, geodesic_curvature, make_latitude_circle, run_csf, sup_subinterval_abs, DtPolicy,
};
use s3flow::s3core::{S2Point, S3Point, Vec3};
use s3flow::speeds::{
    admissibility_bounds, check_admissible, z_term, AffineArctanProfile, FnProfile, Profile, Speed,
    SqrtFourPlusSquare,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn flow_config(speed: Speed, t_end: f64) -> FlowConfig {
    FlowConfig {
        speed,
        t_end,
        cadence: 1,
        ..Default::default()
    }
}

fn admissibility_pinch() -> Verdict {
    let phi = SqrtFourPlusSquare;
    let mut worst: f64 = 0.0;
    for h in grid(-50.0, 50.0, 10_000) {
        let b = admissibility_bounds(&phi, h).unwrap();
        let target = -2.0 * h / (4.0 + h * h);
        worst = worst.max((b.lower - target).abs()).max((b.upper - target).abs());
    }
    let samples = grid(-50.0, 50.0, 2001);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let affine_ok = (0..5).all(|_| {
        let f = AffineArctanProfile {
            c1: rng.gen_range(-3.0..3.0),
            c2: rng.gen_range(0.05..5.0),
        };
        check_admissible(&f, &phi, &samples).unwrap().verdict
    });
    let linear = FnProfile {
        value: |h: f64| h,
        d1: |_: f64| 1.0,
        d2: |_: f64| 0.0,
    };
    let cubic = FnProfile {
        value: |h: f64| h * h * h + h,
        d1: |h: f64| 3.0 * h * h + 1.0,
        d2: |h: f64| 6.0 * h,
    };
    let exp = FnProfile {
        value: f64::exp,
        d1: f64::exp,
        d2: f64::exp,
    };
    let rejected: Vec<bool> = [&linear as &dyn Profile, &cubic, &exp]
        .iter()
        .map(|f| !check_admissible(*f, &phi, &samples).unwrap().verdict)
        .collect();
    let pass = worst <= 1e-12 && affine_ok && rejected.iter().all(|&r| r);
    verdict(
        pass,
        format!("max bound error {worst:.2e}, affine arctan admissible: {affine_ok}, H/H³+H/e^H rejected: {rejected:?}"),
    )
}

fn z_identity() -> Verdict {
    let phi = SqrtFourPlusSquare;
    let f = AffineArctanProfile { c1: 0.0, c2: 2.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_rel: f64 = 0.0;
    let mut count = 0;
    while count < 10_000 {
        let (k1, k2) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let z = z_term(&f, &phi, k1, k2).unwrap();
        if z.g <= 0.0 {
            continue;
        }
        let rel = (z.form_a - z.form_b).abs() / z.form_a.abs().max(z.form_b.abs()).max(1e-300);
        worst_rel = worst_rel.max(rel);
        count += 1;
    }
    // {G = 0}: κ₁ − κ₂ = ±φ(H).
    let mut worst_zero: f64 = 0.0;
    for _ in 0..1000 {
        let h: f64 = rng.gen_range(-10.0..10.0);
        let d = phi.value(h) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let z = z_term(&f, &phi, (h + d) / 2.0, (h - d) / 2.0).unwrap();
        worst_zero = worst_zero.max(z.form_a.abs()).max(z.form_b.abs());
    }
    verdict(
        worst_rel <= 1e-8 && worst_zero <= 1e-10,
        format!("forms at G > 0 agree to {worst_rel:.2e} relative (need 1e-8); max |Z| on G = 0 is {worst_zero:.2e}"),
    )
}

fn sphere_oracle() -> Verdict {
    let r0 = PI / 3.0;
    let mesh = make_geodesic_sphere(r0, 4, S3Point::IDENTITY).unwrap();
    let oracle = sphere_ode_oracle(&Speed::Mcf, r0, 1.0);
    let mut worst: f64 = 0.0;
    let run = run_flow_observed(mesh, &flow_config(Speed::Mcf, 1.0), |s, _| {
        let r = mean_geodesic_radius(&s.mesh, &S3Point::IDENTITY);
        if r > 0.2 {
            if let Some(exact) = oracle.radius_at(s.t) {
                worst = worst.max((r - exact).abs() / exact);
            }
        }
    })
    .unwrap();
    let exact_t = 0.5 * 2f64.ln();
    let t = run.final_state.t;
    let rel_t = (t - exact_t).abs() / exact_t;
    verdict(
        run.reason == StopReason::Extinct && rel_t <= 0.05 && worst <= 2e-2,
        format!("{:?} at t = {t:.5} ({:.2}% off), radius error {worst:.2e} while r > 0.2", run.reason, 100.0 * rel_t),
    )
}

fn clifford_drift(n: usize) -> (f64, f64) {
    let mesh = make_clifford_torus(n, n).unwrap();
    let h = mesh.max_edge_length();
    let start = mesh.vertices().to_vec();
    let cfg = FlowConfig {
        speed_tol: f64::MIN_POSITIVE,
        ..flow_config(Speed::Arctan, 0.1)
    };
    let mut drift: f64 = 0.0;
    run_flow_observed(mesh, &cfg, |s, _| {
        for (a, b) in start.iter().zip(s.mesh.vertices()) {
            drift = drift.max(a.distance(b));
        }
    })
    .unwrap();
    (drift, h)
}

fn stationarity() -> Verdict {
    let great = make_geodesic_sphere(FRAC_PI_2, 4, S3Point::IDENTITY).unwrap();
    let speed0 = run_flow(great, &flow_config(Speed::Arctan, 0.1)).unwrap().trajectory[0].report.max_speed;
    let (d64, h64) = clifford_drift(64);
    let (d128, h128) = clifford_drift(128);
    let halving = d128 <= (0.5 * d64).max(1e-12);
    verdict(
        speed0 < 1e-6 && d64 <= 5.0 * h64 * h64 && d128 <= 5.0 * h128 * h128 && halving,
        format!(
            "great sphere max speed {speed0:.2e}; Clifford drift {d64:.2e} (64², bound {:.2e}), {d128:.2e} (128², bound {:.2e})",
            5.0 * h64 * h64,
            5.0 * h128 * h128
        ),
    )
}

fn flatness() -> Verdict {
    let curve = make_latitude_circle(1.0, 64).unwrap();
    let mesh = make_hopf_torus(&curve, 64).unwrap().mesh;
    let run = run_flow(mesh, &flow_config(Speed::Arctan, 0.1)).unwrap();
    let g0 = run.trajectory[0].report.max_abs_g;
    let worst = run.trajectory.iter().map(|r| r.report.max_abs_g).fold(0.0, f64::max);
    verdict(
        worst <= 3.0 * g0 && run.final_state.t >= 0.1 * (1.0 - 1e-12),
        format!("max|G| {worst:.2e} vs initial {g0:.2e} (ratio {:.2}) up to t = {:.3}", worst / g0, run.final_state.t),
    )
}

fn gauss_csf() -> Verdict {
    let n = 64;
    let curve = make_latitude_circle(1.0, n).unwrap();
    let mesh = make_hopf_torus(&curve, n).unwrap().mesh;
    let start = FlowState::new(mesh.clone());
    let image0 = gauss_maps_with_normals(&start.mesh, &start.curvature.normals()).unwrap();
    let run = run_flow(mesh, &flow_config(Speed::Arctan, 0.05)).unwrap();
    let fin = &run.final_state;
    let image_t = gauss_maps_with_normals(&fin.mesh, &fin.curvature.normals()).unwrap();
    let csf = run_csf(&image_curve(&image0.left, n).unwrap(), DtPolicy::Cfl { sigma: 0.25 }, fin.t, 0).unwrap();
    let d = curve_hausdorff_distance(&image_curve(&image_t.left, n).unwrap(), &csf.final_curve);
    verdict(d <= 5e-2, format!("Hausdorff distance {d:.2e} at t = {:.3}", fin.t))
}

struct DichotomyRun {
    reason: StopReason,
    min_g0: f64,
    worst_g_margin: f64,
    eps_drop: f64,
}

fn dichotomy_runs() -> Vec<DichotomyRun> {
    (1..=10u64)
        .map(|seed| {
            let mesh = make_perturbed_sphere(1.0, 3, S3Point::IDENTITY, 0.02, seed).unwrap();
            let mut min_g0 = None;
            let mut eps0 = None;
            let mut worst_g_margin = f64::INFINITY;
            let mut eps_drop: f64 = f64::NEG_INFINITY;
            let cfg = flow_config(Speed::Arctan, 10.0);
            let run = run_flow_observed(mesh, &cfg, |s, row| {
                let r = &row.report;
                min_g0.get_or_insert(r.min_g);
                let e0 = *eps0.get_or_insert(r.epsilon_star);
                let h = s.mesh.max_edge_length();
                worst_g_margin = worst_g_margin.min(r.min_g + 5e-2 * h);
                eps_drop = eps_drop.max(e0 - r.epsilon_star);
            })
            .unwrap();
            DichotomyRun {
                reason: run.reason,
                min_g0: min_g0.unwrap(),
                worst_g_margin,
                eps_drop,
            }
        })
        .collect()
}

fn dichotomy(runs: &[DichotomyRun]) -> Verdict {
    let healthy = runs
        .iter()
        .all(|r| matches!(r.reason, StopReason::Converged | StopReason::Extinct));
    let positive = runs.iter().all(|r| r.min_g0 > 0.0);
    let margin = runs.iter().map(|r| r.worst_g_margin).fold(f64::INFINITY, f64::min);
    let reasons: Vec<String> = runs.iter().map(|r| format!("{:?}", r.reason)).collect();
    verdict(
        healthy && positive && margin >= 0.0,
        format!("stops {reasons:?}; min over runs of minG + 5e-2·h = {margin:.3e}"),
    )
}

fn omega_preserved(runs: &[DichotomyRun]) -> Verdict {
    let drop = runs.iter().map(|r| r.eps_drop).fold(f64::NEG_INFINITY, f64::max);
    verdict(drop <= 0.05, format!("largest epsilon_star(0) − epsilon_star(t) = {drop:.3e}"))
}

fn degeneracy() -> Verdict {
    let clifford = gauss_maps(&make_clifford_torus(64, 64).unwrap()).unwrap();
    let hopf = gauss_maps(&make_hopf_torus(&make_latitude_circle(1.0, 64).unwrap(), 64).unwrap().mesh).unwrap();
    let flat = [
        degeneracy_measure(&clifford.left).unwrap(),
        degeneracy_measure(&clifford.right).unwrap(),
        degeneracy_measure(&hopf.left).unwrap(),
        degeneracy_measure(&hopf.right).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let uniform: Vec<S2Point> = (0..1000)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let a: f64 = rng.gen_range(0.0..TAU);
            let s = (1.0 - z * z).sqrt();
            S2Point::normalize(Vec3::new(s * a.cos(), s * a.sin(), z))
        })
        .collect();
    let control = degeneracy_measure(&uniform).unwrap();
    let worst = flat.iter().copied().fold(0.0, f64::max);
    verdict(
        worst <= 2e-2 && control >= 0.5,
        format!("flat fixtures max {worst:.2e}; uniform control {control:.3}"),
    )
}

/// Largest `|sum|` over all cyclic runs, by direct enumeration.
fn brute_force_sup(values: &[f64]) -> f64 {
    let n = values.len();
    let mut best: f64 = 0.0;
    for start in 0..n {
        let mut sum = 0.0;
        for len in 1..=n {
            sum += values[(start + len - 1) % n];
            best = best.max(sum.abs());
        }
    }
    best
}

fn weiner_sup() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let values: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        worst = worst.max((sup_subinterval_abs(&values) - brute_force_sup(&values)).abs());
    }
    verdict(worst <= 1e-12, format!("max difference from brute force {worst:.2e}"))
}

fn gauss_bonnet() -> Verdict {
    let mut worst: f64 = 0.0;
    for theta in [0.3, 0.6, FRAC_PI_2 / 2.0, 1.0, 1.3, FRAC_PI_2, 2.0, 2.5, 2.8] {
        let c = make_latitude_circle(theta, 256).unwrap();
        let total = geodesic_curvature(&c).unwrap().total();
        let cap = TAU * (1.0 - f64::cos(theta));
        worst = worst.max((total - (TAU - cap)).abs());
    }
    verdict(worst <= 2e-2, format!("max |turning − (2π − cap area)| = {worst:.2e}"))
}

fn main() {
    let started = Instant::now();
    let mut failures = 0;
    let mut report = |id: &str, limit: Option<Duration>, check: &mut dyn FnMut() -> Verdict| {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let elapsed = t0.elapsed();
        let (mut pass, mut detail) = match outcome {
            Ok(v) => (v.pass, v.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if let Some(limit) = limit {
            if elapsed > limit {
                pass = false;
                detail.push_str(&format!("; over the {:.0} s budget", limit.as_secs_f64()));
            }
        }
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {id}: {detail} [{:.2} s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    };
    let secs = |s| Some(Duration::from_secs(s));
    report("1 (admissibility pinch)", secs(1), &mut admissibility_pinch);
    report("2 (Z-term identity)", secs(1), &mut z_identity);
    report("3 (sphere-flow oracle)", secs(60), &mut sphere_oracle);
    report("4 (stationarity)", secs(60), &mut stationarity);
    report("5 (flatness preservation)", secs(60), &mut flatness);
    report("6 (Gauss map / CSF correspondence)", secs(90), &mut gauss_csf);
    let t0 = Instant::now();
    let runs = catch_unwind(dichotomy_runs);
    let runs_time = t0.elapsed();
    match &runs {
        Ok(runs) => {
            report("7 (Theorem-1 dichotomy)", None, &mut || {
                let mut v = dichotomy(runs);
                if runs_time > Duration::from_secs(600) {
                    v.pass = false;
                    v.detail.push_str("; over the 600 s budget");
                }
                v.detail.push_str(&format!("; 10 runs took {:.1} s", runs_time.as_secs_f64()));
                v
            });
            report("8 (Ω_ε preservation)", None, &mut || omega_preserved(runs));
        }
        Err(_) => {
            report("7 (Theorem-1 dichotomy)", None, &mut || verdict(false, "a run panicked"));
            report("8 (Ω_ε preservation)", None, &mut || verdict(false, "a run panicked"));
        }
    }
    report("9 (degeneracy detection)", None, &mut degeneracy);
    report("10 (Weiner sup-subinterval)", secs(5), &mut weiner_sup);
    report("11 (discrete Gauss–Bonnet)", None, &mut gauss_bonnet);
    println!(
        "{} acceptance criteria failed ({:.1} s total)",
        failures,
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
