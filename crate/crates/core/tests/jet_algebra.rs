use confgauss::jet::{coeff_count, multi_indices, seed, Jet, NVARS};
use proptest::prelude::*;

fn poly(u: [f64; NVARS], order: usize) -> Jet {
    let x = seed(u, order);
    &(&x[0] * &x[1]) + &(&x[2] * &x[2]).scale(3.0) - x[3].clone()
}

#[test]
fn coefficient_counts_match_binomials() {
    // C(order + 4, 4)
    assert_eq!(coeff_count(0), 1);
    assert_eq!(coeff_count(2), 15);
    assert_eq!(coeff_count(6), 210);
    assert_eq!(multi_indices(6).len(), 210);
}

#[test]
fn polynomial_partials_are_exact() {
    let p = poly([1.0, 2.0, -0.5, 0.3], 4);
    assert!((p.value() - (2.0 + 0.75 - 0.3)).abs() < 1e-15);
    assert!((p.d(0) - 2.0).abs() < 1e-15);
    assert!((p.d(2) + 3.0).abs() < 1e-15);
    assert!((p.d2(0, 1) - 1.0).abs() < 1e-15);
    assert!((p.d2(2, 2) - 6.0).abs() < 1e-15);
    assert_eq!(p.partial([1, 1, 1, 0]), 0.0);
}

#[test]
fn transcendental_derivatives() {
    let x = seed([0.7, 0.0, 0.0, 0.0], 6);
    let s = x[0].sin();
    let e = x[0].exp();
    for k in 0..=6u8 {
        let ds = match k % 4 {
            0 => 0.7f64.sin(),
            1 => 0.7f64.cos(),
            2 => -0.7f64.sin(),
            _ => -0.7f64.cos(),
        };
        assert!((s.partial([k, 0, 0, 0]) - ds).abs() < 1e-13, "sin order {k}");
        assert!((e.partial([k, 0, 0, 0]) - 0.7f64.exp()).abs() < 1e-12, "exp order {k}");
    }
    let l = x[0].ln().unwrap();
    assert!((l.partial([3, 0, 0, 0]) - 2.0 / 0.7f64.powi(3)).abs() < 1e-10);
}

#[test]
fn recip_of_zero_is_error() {
    let z = Jet::constant(0.0, 3);
    assert!(z.recip().is_err());
}

#[test]
fn order_is_minimum_of_operands() {
    let a = Jet::variable(1.0, 0, 5);
    let b = Jet::variable(2.0, 1, 3);
    assert_eq!((&a * &b).order(), 3);
    assert_eq!((&a + &b).order(), 3);
    assert_eq!(a.deriv(0).order(), 4);
}

fn arb_u() -> impl Strategy<Value = [f64; NVARS]> {
    prop::array::uniform4(-1.0f64..1.0)
}

proptest! {
    #[test]
    fn product_rule(u in arb_u(), v in 0usize..NVARS) {
        let x = seed(u, 5);
        let f = &x[0].sin() * &x[1];
        let g = (&x[2] * &x[3]).add_scalar(2.0).exp();
        let lhs = (&f * &g).deriv(v);
        let rhs = &(&f.deriv(v) * &g) + &(&f * &g.deriv(v));
        for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn recip_inverts(u in arb_u()) {
        let x = seed(u, 6);
        let f = (&x[0] * &x[0]).add_scalar(1.5) + x[1].cos();
        let one = &f * &f.recip().unwrap();
        prop_assert!((one.value() - 1.0).abs() < 1e-13);
        for c in &one.coeffs()[1..] {
            prop_assert!(c.abs() < 1e-11);
        }
    }

    #[test]
    fn sqrt_squares_back(u in arb_u()) {
        let x = seed(u, 6);
        let f = (&x[2] * &x[3]).add_scalar(3.0);
        let r = f.sqrt().unwrap();
        let back = &r * &r;
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn taylor_evaluation_matches_function(u in arb_u(), h in prop::array::uniform4(-1e-2f64..1e-2)) {
        let x = seed(u, 6);
        let f = x[0].sin() * x[1].exp();
        let exact = (u[0] + h[0]).sin() * (u[1] + h[1]).exp();
        // remainder is O(|h|⁷)
        prop_assert!((f.eval_at(h) - exact).abs() < 1e-12);
    }
}
