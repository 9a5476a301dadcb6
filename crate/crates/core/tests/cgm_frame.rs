use confgauss::cgm::{cgm_frame, orientation_det};
use confgauss::chart::chart_jet;
use confgauss::geometry::JetGeometry;
use confgauss::minkowski::eta_norm2;
use confgauss::suite::{point_identities, pointwise_suite};
use confgauss::surfaces::{make_surface, sample_points, SurfaceKind, SurfaceSpec};

fn frame_at(spec: &SurfaceSpec, seed: u64) -> Vec<confgauss::cgm::CgmFrame> {
    let atlas = make_surface(spec).unwrap();
    sample_points(&atlas, 6, seed)
        .into_iter()
        .map(|(c, u)| {
            let ch = &atlas.charts[c];
            let jg = JetGeometry::new(&chart_jet(ch, u, 3).unwrap(), ch.orientation).unwrap();
            cgm_frame(&jg, false).unwrap()
        })
        .collect()
}

#[test]
fn conformal_gauss_map_lies_in_de_sitter() {
    for f in frame_at(&SurfaceSpec::new(SurfaceKind::PerturbedTorus { major: 2.0, minor: 1.0, amplitude: 0.2 }), 1) {
        assert!((eta_norm2(&f.y) - 1.0).abs() < 1e-12);
        assert!(eta_norm2(&f.nu).abs() < 1e-12 * f.nu.norm_squared());
        let b = f.basic_residuals();
        assert!(b.y_nu < 1e-12 && b.dy_nu < 1e-12 && b.g_bar < 1e-12);
    }
}

#[test]
fn orientation_sign_is_sign_of_det() {
    // torus(2,1): principal curvatures 1, k, k, k with k < 1 so det Å < 0
    for f in frame_at(&SurfaceSpec::torus(2.0, 1.0), 2) {
        assert!(orientation_det(&f) < 0.0);
    }
    for f in frame_at(&SurfaceSpec::torus(2.0, 1.0).flipped(), 2) {
        assert!(orientation_det(&f) < 0.0);
    }
    for f in frame_at(&SurfaceSpec::new(SurfaceKind::PatchRxS3 { length: 1.0 }), 3) {
        assert!(orientation_det(&f) < 0.0);
    }
}

#[test]
fn flipping_orientation_negates_y() {
    let a = frame_at(&SurfaceSpec::torus(2.0, 1.0), 4);
    let b = frame_at(&SurfaceSpec::torus(2.0, 1.0).flipped(), 4);
    for (x, y) in a.iter().zip(&b) {
        assert!((x.y + y.y).amax() < 1e-12);
    }
}

#[test]
fn umbilic_points_have_no_dual_frame() {
    let atlas = make_surface(&SurfaceSpec::unit_sphere()).unwrap();
    let (c, u) = sample_points(&atlas, 1, 0)[0];
    assert!(point_identities(&atlas.charts[c], u).is_err());
    assert!(pointwise_suite(&atlas, &[(c, u)]).is_err());
}

#[test]
fn suite_on_two_surfaces() {
    for spec in [SurfaceSpec::torus(2.0, 1.0), SurfaceSpec::new(SurfaceKind::PerturbedSphere { radius: 1.0, amplitude: 0.2 })] {
        let atlas = make_surface(&spec).unwrap();
        let s = pointwise_suite(&atlas, &sample_points(&atlas, 30, 9)).unwrap();
        assert!(s.pass(), "{s:?}");
    }
}
