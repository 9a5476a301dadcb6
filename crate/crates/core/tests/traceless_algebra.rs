use confgauss::traceless::{conformal_pattern_predicate, TracelessPair};
use nalgebra::Matrix4;
use proptest::prelude::*;

fn spd(m: [f64; 16]) -> Matrix4<f64> {
    let a = Matrix4::from_row_slice(&m);
    a * a.transpose() + Matrix4::identity() * 0.5
}

fn sym(m: [f64; 16]) -> Matrix4<f64> {
    let a = Matrix4::from_row_slice(&m);
    (a + a.transpose()) * 0.5
}

fn pair(g: [f64; 16], a: [f64; 16]) -> TracelessPair {
    TracelessPair::from_symmetric(spd(g), sym(a)).unwrap()
}

#[test]
fn diagonal_pattern_detected() {
    let g = Matrix4::identity();
    let p = TracelessPair::new(g, Matrix4::from_diagonal(&[2.0, 2.0, -2.0, -2.0].into()));
    assert_eq!(p.conformal_pattern(1e-10), Some(2.0));
    let q = TracelessPair::new(g, Matrix4::from_diagonal(&[3.0, 1.0, -2.0, -2.0].into()));
    assert!(q.conformal_pattern(1e-10).is_none());
    assert!(!conformal_pattern_predicate(&q).0);
}

#[test]
fn det_of_diagonal_form() {
    let p = TracelessPair::new(Matrix4::identity(), Matrix4::from_diagonal(&[3.0, 1.0, -2.0, -2.0].into()));
    let ch = p.ch_pack();
    assert!((ch.det - 12.0).abs() < 1e-13);
    assert!((ch.tr2 - 18.0).abs() < 1e-13);
    assert!((ch.tr3 - 12.0).abs() < 1e-13);
}

#[test]
fn umbilic_form_is_singular() {
    let p = TracelessPair::new(Matrix4::identity(), Matrix4::zeros());
    assert!(p.is_singular());
    assert!(p.inv_traceless().is_err());
}

proptest! {
    #[test]
    fn from_symmetric_is_traceless(g in prop::array::uniform16(-1.0f64..1.0), a in prop::array::uniform16(-2.0f64..2.0)) {
        let p = pair(g, a);
        prop_assert!(p.trace_defect() < 1e-12);
    }

    #[test]
    fn cayley_hamilton_pack(g in prop::array::uniform16(-1.0f64..1.0), a in prop::array::uniform16(-2.0f64..2.0)) {
        let ch = pair(g, a).ch_pack();
        prop_assert!(ch.residual < 1e-10);
        prop_assert!(ch.tr4_residual < 1e-10);
        prop_assert!(ch.det8_residual < 1e-10);
    }

    #[test]
    fn closed_inverse(g in prop::array::uniform16(-1.0f64..1.0), a in prop::array::uniform16(-2.0f64..2.0)) {
        let p = pair(g, a);
        prop_assume!(p.ch_pack().det.abs() > 1e-3 * p.ch_pack().tr2.powi(2));
        let inv = p.inv_traceless().unwrap();
        prop_assert!(inv.identity_residual < 1e-8);
        prop_assert!(inv.trace_residual < 1e-8);
        prop_assert!(inv.norm_residual < 1e-8);
    }

    #[test]
    fn det_a_expansion(g in prop::array::uniform16(-1.0f64..1.0), a in prop::array::uniform16(-2.0f64..2.0), h in -3.0f64..3.0) {
        let e = pair(g, a).det_a_expansion(h);
        prop_assert!(e.residual <= 1e-10 * (1.0 + e.lhs.abs().max(e.rhs.abs())));
    }
}
