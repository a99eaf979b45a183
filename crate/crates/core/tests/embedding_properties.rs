use std::f64::consts::PI;

use orlicz_capacity::bodies::YoungTuple;
use orlicz_capacity::embedding::sigma::CONSTRUCTION_GRID;
use orlicz_capacity::embedding::{
    build_sigma, embed_report, feasibility_certificate, verify_containment_dual, EmbedSettings, EmbeddingSpec,
    ProductEmbedding, SigmaMap,
};
use orlicz_capacity::{Error, YoungFunction};
use proptest::prelude::*;

fn planar(f: YoungFunction, eps: f64, n: usize) -> orlicz_capacity::Result<SigmaMap> {
    let spec = EmbeddingSpec::new(YoungTuple::uniform(f.clone(), n)?, eps)?;
    let g = f.conjugate()?;
    build_sigma(&f, &g, spec.capacities()[0], eps, n)
}

#[test]
fn area_and_mass_bookkeeping_on_the_grid() {
    let m = planar(YoungFunction::power(2.5).unwrap(), 0.05, 2).unwrap();
    let fam = m.family();
    let mut prev = (0.0, 0.0);
    for k in 1..=CONSTRUCTION_GRID {
        let a = m.capacity() * k as f64 / CONSTRUCTION_GRID as f64;
        let st = fam.state(a).unwrap();
        assert!((4.0 * st.alpha * st.beta - a).abs() <= 1e-12 * a.max(1.0));
        assert!((st.boundary_mass() - 1.0).abs() <= 1e-10);
        assert!(st.alpha > prev.0 && st.beta > prev.1);
        prev = (st.alpha, st.beta);
    }
}

#[test]
fn image_of_a_disc_has_its_area() {
    let m = planar(YoungFunction::power(2.5).unwrap(), 0.05, 2).unwrap();
    for (a, seed) in [(1.0, 5), (m.capacity(), 6)] {
        let est = m.image_area_mc(a, 1_000_000, seed).unwrap();
        assert!((est.estimate - a).abs() <= 3.0 * est.stderr, "{est:?}");
    }
}

#[test]
fn pushforward_of_uniform_is_uniform() {
    let m = planar(YoungFunction::power(3.0).unwrap(), 0.1, 2).unwrap();
    for (a, seed) in [(0.5, 1), (4.0, 2), (m.capacity(), 3)] {
        let z = m.pushforward_uniformity(a, 4, 400_000, seed).unwrap();
        assert!(z < 4.5, "max cell z-score {z} at A = {a}");
    }
}

#[test]
fn self_dual_rectangles_scale_like_squares() {
    // for p = 2 the rectangles are squares of side sqrt(A)
    let m = planar(YoungFunction::power(2.0).unwrap(), 0.05, 2).unwrap();
    let a = 4.0;
    let st = m.family().state(a).unwrap();
    assert!((st.alpha - 1.0).abs() < 1e-12 && (st.beta - 1.0).abs() < 1e-12);
    let inner = m.action_of([0.5 * st.alpha, 0.1]).unwrap();
    assert!((inner - a / 4.0).abs() < 1e-9);
}

#[test]
fn scaled_exp_audit_finding_is_stable() {
    let f = YoungFunction::ScaledExp;
    let g = f.conjugate().unwrap();
    let c = 4.0 * f.inverse_with(1.0, Default::default()).unwrap() * g.inverse_with(1.0, Default::default()).unwrap();
    let a = feasibility_certificate(&f, &g, c, 0.01, 2, 10_000).unwrap();
    let b = feasibility_certificate(&f, &g, c, 0.01, 2, 10_000).unwrap();
    assert_eq!(a, b);
    assert!((a.min_slack - -0.141_458_173_897_521_36).abs() <= 1e-9);
    // a large slack restores feasibility
    assert!(feasibility_certificate(&f, &g, c, 0.5, 2, 1000).unwrap().is_feasible());
}

#[test]
fn mixed_tuple_embedding_report() {
    let spec = mixed_spec();
    assert!((spec.c() - spec.capacities()[1]).abs() < 1e-15);
    let settings = EmbedSettings {
        dual_samples: 20_000,
        polar_samples: 2_000,
        jacobian_points: 2_000,
        ..EmbedSettings::default()
    };
    let r = embed_report(spec, &settings).unwrap();
    assert!(r.built && r.holds(), "{:?}", r.violations);
    let serialized = serde_json::to_string(&r).unwrap();
    let again = serde_json::to_string(&embed_report(mixed_spec(), &settings).unwrap()).unwrap();
    assert_eq!(serialized, again);
}

fn mixed_spec() -> EmbeddingSpec {
    let t = YoungTuple::new(vec![YoungFunction::power(2.0).unwrap(), YoungFunction::power(3.0).unwrap()]).unwrap();
    EmbeddingSpec::new(t, 0.1).unwrap()
}

#[test]
fn three_factor_embedding_contains() {
    let t = YoungTuple::uniform(YoungFunction::power(1.8).unwrap(), 3).unwrap();
    let pm = ProductEmbedding::build(EmbeddingSpec::new(t, 0.2).unwrap()).unwrap();
    let d = verify_containment_dual(&pm, 20_000, 8).unwrap();
    assert!(d.pass());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn power_maps_satisfy_the_constraints(
        p in 1.3f64..6.0,
        eps in 0.02f64..1.0,
        n in 1usize..4,
        r in 0.0f64..1.0,
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let m = planar(YoungFunction::power(p).unwrap(), eps, n).unwrap();
        let radius = (m.capacity() / PI).sqrt() * r;
        let z = [radius * theta.cos(), radius * theta.sin()];
        let (w, mx, my) = m.evaluate_with_margins(z).unwrap();
        prop_assert!(mx > 0.0 && my > 0.0);
        let back = m.inverse(w).unwrap();
        prop_assert!((back[0] - z[0]).abs() < 1e-8 && (back[1] - z[1]).abs() < 1e-8);
    }

    #[test]
    fn power_slack_is_exactly_c_eps_over_n(p in 1.2f64..8.0, eps in 0.01f64..1.0, n in 1usize..5) {
        let f = YoungFunction::power(p).unwrap();
        let g = f.conjugate().unwrap();
        let q = p / (p - 1.0);
        let c = 4.0 * p.powf(1.0 / p) * q.powf(1.0 / q);
        let cert = feasibility_certificate(&f, &g, c, eps, n, 1000).unwrap();
        prop_assert!((cert.min_slack - c * eps / n as f64).abs() <= 1e-9);
    }

    #[test]
    fn jacobian_is_one_away_from_seams(p in 1.3f64..6.0, r in 0.05f64..0.95, theta in 0.0f64..std::f64::consts::TAU) {
        let m = planar(YoungFunction::power(p).unwrap(), 0.05, 2).unwrap();
        let radius = (m.capacity() / PI).sqrt() * r;
        match m.jacobian_check([radius * theta.cos(), radius * theta.sin()], 1e-4) {
            Ok(dev) => prop_assert!(dev <= 1e-4, "deviation {dev}"),
            Err(Error::SeamProximity { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
