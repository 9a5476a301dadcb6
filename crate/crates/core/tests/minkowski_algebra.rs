use confgauss::minkowski::{
    boost_generator, eta_dot, eta_norm2, lorentz_residual, null_lift, rotation_generator, wedge, Mat7, MinkowskiVec,
};
use nalgebra::SVector;
use proptest::prelude::*;

fn exp_generator(a: &Mat7) -> Mat7 {
    // generators here are small; a truncated series is exact to rounding
    let mut term = Mat7::identity();
    let mut acc = Mat7::identity();
    for k in 1..40 {
        term = term * a / k as f64;
        acc += term;
    }
    acc
}

#[test]
fn signature_is_six_one() {
    let e = |i: usize| MinkowskiVec::from_fn(|k, _| if k == i { 1.0 } else { 0.0 });
    for i in 0..6 {
        assert_eq!(eta_norm2(&e(i)), 1.0);
    }
    assert_eq!(eta_norm2(&e(6)), -1.0);
}

#[test]
fn generators_exponentiate_to_lorentz() {
    let r = exp_generator(&(rotation_generator(1, 5) * 0.8));
    let b = exp_generator(&(boost_generator(2) * 1.3));
    assert!(lorentz_residual(&r) < 1e-13);
    assert!(lorentz_residual(&(b * r)) < 1e-12);
    assert!(lorentz_residual(&(Mat7::identity() * 2.0)) > 1.0);
}

proptest! {
    #[test]
    fn null_lift_is_null(x in prop::array::uniform5(-5.0f64..5.0)) {
        let p = null_lift(&SVector::from(x));
        prop_assert!(eta_norm2(&p).abs() < 1e-12 * (1.0 + p.norm_squared()));
    }

    #[test]
    fn null_lift_pairing_is_distance(x in prop::array::uniform5(-3.0f64..3.0), y in prop::array::uniform5(-3.0f64..3.0)) {
        let (x, y) = (SVector::from(x), SVector::from(y));
        let d = -0.5 * (x - y).norm_squared();
        prop_assert!((eta_dot(&null_lift(&x), &null_lift(&y)) - d).abs() < 1e-11);
    }

    #[test]
    fn wedge_is_antisymmetric(a in prop::array::uniform7(-1.0f64..1.0), b in prop::array::uniform7(-1.0f64..1.0)) {
        let (a, b) = (MinkowskiVec::from(a), MinkowskiVec::from(b));
        let w = wedge(&a, &b);
        let s = w.entries() + wedge(&b, &a).entries();
        prop_assert!(s.amax() < 1e-15);
        prop_assert!(wedge(&a, &a).entries().amax() < 1e-15);
    }
}
