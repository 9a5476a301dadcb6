use confgauss::chart::{chart_jet, fd_validate};
use confgauss::geometry::{
    codazzi_residual, curvature_from_christoffel, curvature_from_gauss, curvature_from_metric, laplace_scal_residual,
    shape_data, simons_residual, Depth, JetGeometry,
};
use confgauss::surfaces::{exact_reference, make_surface, sample_points, SurfaceKind, SurfaceSpec};
use nalgebra::SymmetricEigen;

fn specs() -> Vec<SurfaceSpec> {
    vec![
        SurfaceSpec::unit_sphere(),
        SurfaceSpec::new(SurfaceKind::RoundSphere { radius: 2.5, center: [1.0, -2.0, 0.0, 0.5, 3.0] }),
        SurfaceSpec::torus(2.0, 1.0),
        SurfaceSpec::torus(3.0, 0.5).flipped(),
        SurfaceSpec::new(SurfaceKind::PatchR2xS2 { side: 2.0 }),
        SurfaceSpec::new(SurfaceKind::PatchRxS3 { length: 3.0 }),
    ]
}

fn principal(sd: &confgauss::geometry::ShapeData) -> [f64; 4] {
    // eigenvalues of g^{-1/2} A g^{-1/2}
    let l = sd.g.cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let m = li * sd.a * li.transpose();
    let mut k: Vec<f64> = SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.iter().copied().collect();
    k.sort_by(|a, b| a.partial_cmp(b).unwrap());
    [k[0], k[1], k[2], k[3]]
}

#[test]
fn principal_curvatures_match_closed_forms() {
    for spec in specs() {
        let atlas = make_surface(&spec).unwrap();
        for (c, u) in sample_points(&atlas, 20, 3) {
            let chart = &atlas.charts[c];
            let sd = shape_data(&chart_jet(chart, u, 2).unwrap(), chart.orientation, Depth::Basic).unwrap();
            let exact = exact_reference(&spec, c, u).unwrap();
            let k = principal(&sd);
            for i in 0..4 {
                assert!((k[i] - exact.principal[i]).abs() < 1e-10, "{} at {u:?}: {k:?} vs {:?}", spec.label(), exact.principal);
            }
            assert!((sd.h - exact.h).abs() < 1e-10);
        }
    }
}

#[test]
fn jets_agree_with_finite_differences() {
    for spec in [SurfaceSpec::torus(2.0, 1.0), SurfaceSpec::new(SurfaceKind::PerturbedSphere { radius: 1.0, amplitude: 0.2 })] {
        let atlas = make_surface(&spec).unwrap();
        for (c, u) in sample_points(&atlas, 4, 7) {
            let r = fd_validate(&atlas.charts[c], u, 3, 1e-2).unwrap();
            assert!(r.max_rel < 1e-5, "{}: {r:?}", spec.label());
        }
    }
}

#[test]
fn curvature_three_routes_agree() {
    let spec = SurfaceSpec::new(SurfaceKind::PerturbedTorus { major: 2.0, minor: 1.0, amplitude: 0.15 });
    let atlas = make_surface(&spec).unwrap();
    for (c, u) in sample_points(&atlas, 6, 11) {
        let chart = &atlas.charts[c];
        let jet = chart_jet(chart, u, 3).unwrap();
        let jg = JetGeometry::new(&jet, chart.orientation).unwrap();
        let sd = confgauss::geometry::ShapeData::from_jets(&jg, Depth::Basic).unwrap();
        let gauss = curvature_from_gauss(&sd);
        let metric = curvature_from_metric(&jg.g).unwrap();
        let chris = curvature_from_christoffel(&jet).unwrap();
        let scale = gauss.riem.max_abs().max(1.0);
        assert!(gauss.riem.max_abs_diff(&metric.riem) < 1e-9 * scale);
        assert!(gauss.riem.max_abs_diff(&chris.riem) < 1e-9 * scale);
        assert!((gauss.scal - metric.scal).abs() < 1e-9 * gauss.scal.abs().max(1.0));
    }
}

#[test]
fn round_sphere_is_einstein() {
    let atlas = make_surface(&SurfaceSpec::new(SurfaceKind::RoundSphere { radius: 2.0, center: [0.0; 5] })).unwrap();
    let (c, u) = sample_points(&atlas, 1, 0)[0];
    let sd = shape_data(&chart_jet(&atlas.charts[c], u, 2).unwrap(), 1.0, Depth::Basic).unwrap();
    // Scal = n(n−1)/r² with n = 4
    assert!((sd.scal - 3.0).abs() < 1e-12);
    assert!((sd.ric - sd.g * 0.75).amax() < 1e-12);
    assert!(sd.a_ring.amax() < 1e-12);
}

#[test]
fn codazzi_simons_and_laplace_scal() {
    for spec in [
        SurfaceSpec::torus(2.0, 1.0),
        SurfaceSpec::new(SurfaceKind::PerturbedSphere { radius: 1.0, amplitude: 0.2 }),
        SurfaceSpec::new(SurfaceKind::PerturbedTorus { major: 2.0, minor: 1.0, amplitude: 0.1 }),
    ] {
        let atlas = make_surface(&spec).unwrap();
        for (c, u) in sample_points(&atlas, 10, 5) {
            let jet = chart_jet(&atlas.charts[c], u, 4).unwrap();
            assert!(codazzi_residual(&jet).unwrap() < 1e-9, "{}", spec.label());
            assert!(simons_residual(&jet).unwrap() < 1e-8, "{}", spec.label());
            assert!(laplace_scal_residual(&jet).unwrap() < 1e-8, "{}", spec.label());
        }
    }
}

#[test]
fn singular_metric_is_reported() {
    let atlas = make_surface(&SurfaceSpec::unit_sphere()).unwrap();
    let chart = &atlas.charts[0];
    // polar angle 0 collapses the S³ factor
    let err = chart_jet(chart, [0.0, 0.0, 0.0, 0.0], 2).and_then(|j| JetGeometry::new(&j, 1.0).map(|_| ()));
    assert!(err.is_err());
}
