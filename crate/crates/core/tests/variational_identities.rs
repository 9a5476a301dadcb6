use confgauss::chart::chart_jet;
use confgauss::minkowski::{boost_generator, rotation_generator, Mat7};
use confgauss::suite::{conditioned_points, EL_CONDITIONING};
use confgauss::surfaces::{make_surface, SurfaceKind, SurfaceSpec};
use confgauss::variational::{
    conservation_residual, ey_field, ey_nu_residual, g_vector, lcgm_test_identities, noether_residual,
    variation_constraint_check, BTermSign, ElJets, ScalConstant, ScalarField,
};
use proptest::prelude::*;

fn el_points(spec: &SurfaceSpec, count: usize, seed: u64) -> Vec<(ElJets, [f64; 4])> {
    let atlas = make_surface(spec).unwrap();
    let (pts, _) = conditioned_points(&atlas, count, seed, EL_CONDITIONING).unwrap();
    pts.into_iter()
        .map(|(c, u)| {
            let ch = &atlas.charts[c];
            (ElJets::new(&chart_jet(ch, u, 6).unwrap(), ch.orientation).unwrap(), u)
        })
        .collect()
}

fn perturbed_torus() -> SurfaceSpec {
    SurfaceSpec::new(SurfaceKind::PerturbedTorus { major: 2.0, minor: 1.0, amplitude: 0.1 })
}

fn generators() -> Vec<Mat7> {
    vec![rotation_generator(0, 3), rotation_generator(2, 5), boost_generator(1), boost_generator(5)]
}

#[test]
fn e_y_agrees_with_divergence_of_v() {
    for (el, _) in el_points(&perturbed_torus(), 4, 1) {
        let f = ey_field(&el, BTermSign::Signed).unwrap();
        let d = (f.e_y - f.e_y_from_v).amax() / f.e_y.amax().max(1.0);
        assert!(d < 1e-9, "{d:e}");
    }
}

#[test]
fn noether_identity_holds_with_factor_two() {
    for sign in [BTermSign::Signed, BTermSign::Absolute] {
        for (el, _) in el_points(&perturbed_torus(), 3, 2) {
            for m in generators() {
                let r = noether_residual(&el, &m, sign, 2.0, -1.0).unwrap();
                assert!(r.residual < 1e-9, "{sign:?} {r:?}");
                // A unit current does not balance the pairing.
                let wrong = noether_residual(&el, &m, sign, 1.0, -1.0).unwrap();
                assert!(wrong.residual > 1e-3, "{sign:?} {wrong:?}");
            }
        }
    }
}

#[test]
fn ey_nu_relation_with_signed_b_term() {
    for spec in [SurfaceSpec::torus(2.0, 1.0), perturbed_torus(), SurfaceSpec::new(SurfaceKind::PatchRxS3 { length: 2.0 })] {
        for (el, _) in el_points(&spec, 4, 3) {
            let r = ey_nu_residual(&el, BTermSign::Signed).unwrap();
            assert!(r.residual < 1e-8, "{} {r:?}", spec.label());
            let a = ey_nu_residual(&el, BTermSign::Absolute).unwrap();
            assert!(a.residual < 1e-8, "{} {a:?}", spec.label());
            // ε = −1 on these surfaces; the coefficient −4 + 4ε/3 is off.
            assert_eq!(r.epsilon, -1.0);
            assert!(r.residual_displayed > 1e-2, "{} {r:?}", spec.label());
        }
    }
}

#[test]
fn tangential_part_vanishes_on_symmetric_examples() {
    for spec in [SurfaceSpec::torus(2.0, 1.0), SurfaceSpec::new(SurfaceKind::PatchR2xS2 { side: 2.0 })] {
        for (el, _) in el_points(&spec, 4, 4) {
            let t = ey_field(&el, BTermSign::Signed).unwrap().tangent_residual();
            assert!(t < 1e-8, "{} {t:e}", spec.label());
        }
    }
}

#[test]
fn lcgm_test_identities_hold() {
    let alpha = [
        ScalarField::ChartSine { axis: 0, frequency: 1.0, amplitude: 0.7 },
        ScalarField::Linear { coeffs: [0.3, -0.2, 0.1, 0.5, -0.4], offset: 0.2 },
        ScalarField::Constant { value: 1.5 },
        ScalarField::ChartSine { axis: 3, frequency: 2.0, amplitude: -0.4 },
    ];
    let beta = ScalarField::Linear { coeffs: [1.0, 0.0, -0.5, 0.2, 0.3], offset: -0.1 };
    for (el, u) in el_points(&perturbed_torus(), 4, 5) {
        let r = lcgm_test_identities(&el, u, &alpha, &beta).unwrap();
        assert!(r.alpha_residual() < 1e-9, "{r:?}");
        assert!(r.beta_residual() < 1e-9, "{r:?}");
    }
}

#[test]
fn g_vector_is_normal_to_the_frame() {
    for (el, _) in el_points(&perturbed_torus(), 3, 6) {
        let r = g_vector(&el, ScalConstant::Derived).unwrap();
        assert!(r.formula_residual() < 1e-8, "{r:?}");
        assert!(r.tangency < 1e-8 && r.y_component < 1e-8, "{r:?}");
        assert!((r.trace_bar - r.trace_bar_closed).abs() < 1e-8 * r.trace_bar.abs().max(1.0), "{r:?}");
    }
}

#[test]
fn normal_variations_meet_constraints_to_second_order() {
    let atlas = make_surface(&perturbed_torus()).unwrap();
    let (pts, _) = conditioned_points(&atlas, 4, 7, EL_CONDITIONING).unwrap();
    let r = ScalarField::ChartSine { axis: 1, frequency: 1.0, amplitude: 1.0 };
    let c = variation_constraint_check(&atlas, &pts, &r, 1e-3).unwrap();
    let (lap, grad) = c.richardson_ratios();
    assert!((lap - 4.0).abs() < 0.05 && (grad - 4.0).abs() < 0.05, "{c:?}");
    assert!(c.y_pairing < 1e-6 * c.y_dot, "{c:?}");
}

#[test]
fn current_integrates_to_zero_on_closed_torus() {
    let atlas = make_surface(&SurfaceSpec::torus(2.0, 1.0)).unwrap();
    let test = ScalarField::ChartSine { axis: 0, frequency: 1.0, amplitude: 1.0 };
    let r = conservation_residual(&atlas, &boost_generator(0), 0, &test).unwrap();
    assert!(r.divergence_integral.abs() < 1e-8 * r.flux_scale.max(1.0), "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn noether_identity_is_linear_in_generator(
        rot in proptest::collection::vec(-1.0f64..1.0, 15),
        boost in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        thread_local! {
            static EL: ElJets = el_points(&perturbed_torus(), 1, 9).remove(0).0;
        }
        let mut m = Mat7::zeros();
        let mut k = 0;
        for i in 0..6 {
            for j in i + 1..6 {
                m += rotation_generator(i, j) * rot[k];
                k += 1;
            }
            m += boost_generator(i) * boost[i];
        }
        let r = EL.with(|el| noether_residual(el, &m, BTermSign::Signed, 2.0, -1.0).unwrap());
        prop_assert!(r.residual < 1e-8 || r.pairing.abs().max(r.divergence.abs()) < 1e-10, "{:?}", r);
    }

    #[test]
    fn ey_nu_relation_at_random_points(seed in 0u64..1000) {
        let (el, _) = el_points(&perturbed_torus(), 1, seed).remove(0);
        let r = ey_nu_residual(&el, BTermSign::Signed).unwrap();
        prop_assert!(r.residual < 1e-8, "{:?}", r);
    }
}
