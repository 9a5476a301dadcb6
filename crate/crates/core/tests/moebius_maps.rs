use confgauss::error::GeomError;
use confgauss::minkowski::lorentz_residual;
use confgauss::moebius::{apply_moebius, equivariance_check, MoebiusMap, MoebiusPrimitive};
use confgauss::surfaces::{make_surface, quadrature_grid, sample_points, SurfaceSpec};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = [f64; 5]> {
    proptest::array::uniform5(-3.0f64..3.0)
}

fn dist(a: [f64; 5], b: [f64; 5]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn validation_rejects_bad_primitives() {
    let bad = [
        MoebiusPrimitive::Dilation { lambda: 0.0 },
        MoebiusPrimitive::Dilation { lambda: -2.0 },
        MoebiusPrimitive::Translation { v: [f64::NAN, 0.0, 0.0, 0.0, 0.0] },
        MoebiusPrimitive::Inversion { center: [f64::INFINITY, 0.0, 0.0, 0.0, 0.0] },
        MoebiusPrimitive::Rotation { matrix: [[2.0, 0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0, 1.0]] },
    ];
    for p in bad {
        let m = MoebiusMap::identity().then(p.clone());
        assert!(matches!(m.validate(), Err(GeomError::Validation(_))), "{p:?}");
    }
    assert!(MoebiusMap::identity().then(MoebiusPrimitive::plane_rotation(1, 4, 0.3)).validate().is_ok());
}

#[test]
fn orientation_reversal_counts_inversions() {
    let inv = MoebiusPrimitive::Inversion { center: [5.0, 0.0, 0.0, 0.0, 0.0] };
    let one = MoebiusMap::identity().then(inv.clone());
    assert!(one.reverses_orientation());
    assert!(!one.clone().then(inv).reverses_orientation());
    assert!(!MoebiusMap::identity().then(MoebiusPrimitive::Dilation { lambda: 2.0 }).reverses_orientation());
}

#[test]
fn inversion_center_on_surface_is_rejected() {
    let atlas = make_surface(&SurfaceSpec::torus(2.0, 1.0)).unwrap();
    let (u, _) = quadrature_grid(&atlas, 0).charts[0].node(0);
    let center = atlas.charts[0].point(u).unwrap();
    let m = MoebiusMap::identity().then(MoebiusPrimitive::Inversion { center });
    assert!(matches!(apply_moebius(&m, &atlas), Err(GeomError::AtNode { .. })));
    assert!(matches!(m.apply_point(center), Err(GeomError::Domain(_))));
}

#[test]
fn map_round_trips_through_json() {
    let m = MoebiusMap::identity()
        .then(MoebiusPrimitive::Translation { v: [1.0, 2.0, 3.0, 4.0, 5.0] })
        .then(MoebiusPrimitive::Inversion { center: [0.5, 0.0, 0.0, 0.0, 0.0] })
        .then(MoebiusPrimitive::Dilation { lambda: 1.5 });
    let s = serde_json::to_string(&m).unwrap();
    assert_eq!(serde_json::from_str::<MoebiusMap>(&s).unwrap(), m);
}

#[test]
fn rotated_torus_fits_a_lorentz_matrix() {
    let atlas = make_surface(&SurfaceSpec::torus(2.0, 1.0)).unwrap();
    let m = MoebiusMap::identity()
        .then(MoebiusPrimitive::plane_rotation(0, 4, 0.7))
        .then(MoebiusPrimitive::Translation { v: [0.3, 0.0, -1.0, 0.0, 2.0] });
    let q = equivariance_check(&m, &atlas, &sample_points(&atlas, 30, 3)).unwrap();
    assert_eq!(q.span_rank, 6);
    assert!(q.fit_residual < 1e-9, "{q:?}");
    assert!(q.lorentz_residual < 1e-8 && lorentz_residual(&q.matrix()) < 1e-8, "{q:?}");
}

#[test]
fn equivariance_needs_seven_points() {
    let atlas = make_surface(&SurfaceSpec::torus(2.0, 1.0)).unwrap();
    let m = MoebiusMap::identity().then(MoebiusPrimitive::Dilation { lambda: 2.0 });
    assert!(matches!(equivariance_check(&m, &atlas, &sample_points(&atlas, 6, 1)), Err(GeomError::Validation(_))));
}

proptest! {
    #[test]
    fn inversion_is_an_involution(x in point(), c in point()) {
        prop_assume!(dist(x, c) > 0.1);
        let inv = MoebiusMap::identity().then(MoebiusPrimitive::Inversion { center: c });
        let y = inv.followed_by(&inv).apply_point(x).unwrap();
        prop_assert!(dist(x, y) < 1e-10 * (1.0 + dist(x, [0.0; 5])));
    }

    #[test]
    fn inversion_preserves_distance_ratio(x in point(), y in point(), c in point()) {
        // |x' − y'| = |x − y| / (|x − c||y − c|)
        prop_assume!(dist(x, c) > 0.1 && dist(y, c) > 0.1);
        let inv = MoebiusMap::identity().then(MoebiusPrimitive::Inversion { center: c });
        let (xi, yi) = (inv.apply_point(x).unwrap(), inv.apply_point(y).unwrap());
        let want = dist(x, y) / (dist(x, c) * dist(y, c));
        prop_assert!((dist(xi, yi) - want).abs() < 1e-10 * want.max(1.0));
    }

    #[test]
    fn rotations_are_isometries(x in point(), y in point(), angle in -3.0f64..3.0, i in 0usize..5, j in 0usize..5) {
        prop_assume!(i != j);
        let m = MoebiusMap::identity().then(MoebiusPrimitive::plane_rotation(i, j, angle));
        let (a, b) = (m.apply_point(x).unwrap(), m.apply_point(y).unwrap());
        prop_assert!((dist(a, b) - dist(x, y)).abs() < 1e-12 * (1.0 + dist(x, y)));
    }
}
