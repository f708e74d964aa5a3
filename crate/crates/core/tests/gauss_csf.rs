use s3flow::flow::{run_flow, FlowConfig, FlowState};
use s3flow::gaussmaps::{degeneracy_measure, gauss_maps_with_normals, image_curve};
use s3flow::mesh::make_hopf_torus;
use s3flow::s2curves::{curve_hausdorff_distance, make_latitude_circle, run_csf, DtPolicy};
use s3flow::speeds::Speed;

#[test]
fn flowed_hopf_torus_image_tracks_csf() {
    let n = 48;
    let curve = make_latitude_circle(1.0, n).unwrap();
    let mesh = make_hopf_torus(&curve, n).unwrap().mesh;
    let start = FlowState::new(mesh.clone());
    let image0 = gauss_maps_with_normals(&start.mesh, &start.curvature.normals()).unwrap();
    let cfg = FlowConfig {
        speed: Speed::Arctan,
        t_end: 0.05,
        ..Default::default()
    };
    let run = run_flow(mesh, &cfg).unwrap();
    let fin = &run.final_state;
    let image_t = gauss_maps_with_normals(&fin.mesh, &fin.curvature.normals()).unwrap();
    for image in [&image_t.left, &image_t.right] {
        assert!(degeneracy_measure(image).unwrap() <= 2e-2);
    }
    let csf = run_csf(&image_curve(&image0.left, n).unwrap(), DtPolicy::Cfl { sigma: 0.25 }, fin.t, 0).unwrap();
    let d = curve_hausdorff_distance(&image_curve(&image_t.left, n).unwrap(), &csf.final_curve);
    assert!(d <= 5e-2, "{d}");
}
