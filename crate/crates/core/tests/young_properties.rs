use orlicz_capacity::young::{legendre, registry, young_gap, ClosedForm};
use orlicz_capacity::{ConvexProfile, YoungFunction};
use proptest::prelude::*;

fn log_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| 1e-3 * 1e4f64.powf(k as f64 / (n - 1) as f64))
}

#[test]
fn conjugate_of_conjugate_recovers_phi() {
    for f in registry(7) {
        let conj = f.conjugate().unwrap();
        for t in log_grid(40) {
            let back = legendre(&conj, t).unwrap();
            let phi = f.evaluate(t).unwrap();
            // relative above 1: x y - phi*(y) cancels terms of size t phi'(t)
            assert!((back - phi).abs() <= 1e-8 * phi.max(1.0), "{f}: t = {t}, phi = {phi}, phi** = {back}");
        }
    }
}

#[test]
fn numeric_conjugate_matches_power_closed_form() {
    for p in [1.1, 1.5, 2.0, 3.0, 7.5] {
        let f = YoungFunction::power(p).unwrap();
        let q = p / (p - 1.0);
        let numeric = f.numeric_conjugate().unwrap();
        assert_eq!(f.conjugate().unwrap().closed_form(), Some(ClosedForm::Power { q }));
        for k in 1..=100 {
            let y = 0.05 * k as f64;
            let exact = y.powf(q) / q;
            let got = numeric.evaluate(y).unwrap();
            assert!((got - exact).abs() <= 1e-9 * exact.max(1.0), "p = {p}, y = {y}: {got} vs {exact}");
        }
    }
}

#[test]
fn registry_passes_validation() {
    let reg = registry(7);
    assert_eq!(reg.len(), 72);
    for f in &reg {
        let d = f.validate(10.0, 512);
        assert!(d.is_pass(), "{f}: {:?}", d.violations);
    }
}

#[test]
fn registry_is_reproducible() {
    assert_eq!(registry(3), registry(3));
    assert_ne!(registry(3), registry(4));
}

fn family() -> impl Strategy<Value = YoungFunction> {
    prop_oneof![
        (1.05f64..12.0).prop_map(|p| YoungFunction::power(p).unwrap()),
        Just(YoungFunction::ScaledExp),
        Just(YoungFunction::Exp),
        (0.0f64..2.0, 0.01f64..3.0, 0.0f64..1.0)
            .prop_map(|(a, b, c)| YoungFunction::polynomial(vec![a, b, c]).unwrap()),
        (0.2f64..5.0, 1.2f64..4.0)
            .prop_map(|(c, p)| YoungFunction::scaled(YoungFunction::power(p).unwrap(), c).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn young_inequality_holds(f in family(), x in 0.0f64..10.0, y in 0.0f64..10.0) {
        let gap = young_gap(&f, x, y).unwrap();
        let scale = (f.evaluate(x).unwrap() + f.conjugate().unwrap().evaluate(y).unwrap()).max(1.0);
        prop_assert!(gap / scale >= -1e-12, "gap {gap}");
    }

    #[test]
    fn young_equality_on_the_slope_graph(f in family(), x in 0.0f64..6.0) {
        let y = f.derivative(x).unwrap();
        let gap = young_gap(&f, x, y).unwrap();
        let scale = (f.evaluate(x).unwrap() + x * y).max(1.0);
        prop_assert!(gap.abs() / scale <= 1e-10, "gap {gap} at x = {x}");
    }

    #[test]
    fn inverses_round_trip(f in family(), s in 1e-6f64..50.0) {
        let conj = f.conjugate().unwrap();
        let t = f.inverse(s).unwrap();
        prop_assert!((f.evaluate(t).unwrap() - s).abs() <= 1e-11 * s.max(1.0));
        let u = conj.inverse(s).unwrap();
        prop_assert!((conj.evaluate(u).unwrap() - s).abs() <= 1e-10 * s.max(1.0));
    }

    #[test]
    fn scaling_commutes_with_conjugation(c in 0.1f64..10.0, y in 0.0f64..8.0) {
        let base = YoungFunction::ScaledExp;
        let scaled = YoungFunction::scaled(base.clone(), c).unwrap();
        let direct = scaled.conjugate().unwrap().evaluate(y).unwrap();
        let via_base = c * base.conjugate().unwrap().evaluate(y / c).unwrap();
        prop_assert!((direct - via_base).abs() <= 1e-12 * direct.max(1.0));
    }
}
