use std::sync::Arc;

use folwerk_core::exact_core::{AlgebraMap, AlgebraPresentation};
use folwerk_core::foliation::{
    final_comparison, pullback_foliation, pushout_cotangent, relative_comparison, transitivity_comparison,
    FoliationPresentation,
};
use folwerk_core::graded_mixed::GradedMixedPresentation;
use folwerk_core::Window;
use proptest::prelude::*;

const VARS: [&str; 4] = ["x", "y", "z", "w"];

fn poly(name: &str, n: usize) -> Arc<AlgebraPresentation> {
    AlgebraPresentation::polynomial(name, &VARS[..n]).unwrap()
}

fn inclusion(from: &Arc<AlgebraPresentation>, to: &Arc<AlgebraPresentation>) -> AlgebraMap {
    let pairs: Vec<(&str, &str)> = from.own_indices().map(|i| (VARS[i], VARS[i])).collect();
    AlgebraMap::from_assignments(from.clone(), to.clone(), &pairs).unwrap()
}

fn custom(b: &Arc<AlgebraPresentation>) -> FoliationPresentation {
    let gm = GradedMixedPresentation::builder("F", b.clone()).generator("u", -1, 1).eps("x", "x*u").build().unwrap();
    FoliationPresentation::from_mixed("F", gm).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn constructors_verify(n in 1usize..=3) {
        let b = poly("B", n);
        let w = Window::default();
        for f in [
            FoliationPresentation::final_foliation(&b).unwrap(),
            FoliationPresentation::zero_foliation(&b).unwrap(),
            custom(&b),
        ] {
            let r = f.verify(&w).unwrap();
            prop_assert!(r.passed, "{}: {:?}", f.name, r.mixed.first_failure());
        }
    }

    /// The final foliation pulls back to the final foliation of the target, weights ≤ 2.
    #[test]
    fn pullback_of_final_is_final(n in 1usize..=2, extra in 1usize..=2) {
        let b = poly("B", n);
        let b2 = poly("B2", n + extra);
        let f = inclusion(&b, &b2);
        let pulled = pullback_foliation(&FoliationPresentation::final_foliation(&b).unwrap(), &f).unwrap();
        prop_assert!(pulled.verify(&Window::default()).unwrap().passed);
        let cmp = final_comparison(&pulled, &f).unwrap();
        for w in 0..=2 {
            prop_assert!(cmp.weight_chain_map(w).unwrap().is_quasi_isomorphism(Some(4)).unwrap(), "weight {}", w);
        }
    }

    #[test]
    fn tangent_dual_round_trip(n in 1usize..=3) {
        let b = poly("B", n);
        for f in [FoliationPresentation::final_foliation(&b).unwrap(), custom(&b)] {
            let back = f.tangent().dual();
            prop_assert!(back.same_as(&f.cotangent));
            for k in f.cotangent.degrees() {
                prop_assert_eq!(back.diff(k), f.cotangent.diff(k));
            }
        }
    }
}

#[test]
fn pullback_of_zero_is_relative_cotangent() {
    for (n, m) in [(1, 2), (1, 3), (2, 3)] {
        let (b, b2) = (poly("B", n), poly("B2", m));
        let f = inclusion(&b, &b2);
        let pulled = pullback_foliation(&FoliationPresentation::zero_foliation(&b).unwrap(), &f).unwrap();
        let cmp = relative_comparison(&pulled, &f).unwrap();
        assert!(cmp.is_quasi_isomorphism(Some(4)).unwrap());
        // oracle: Ω_{B'/B} is free on the new coordinates
        assert_eq!(cmp.target.ranks(), [(0, m - n)].into());
    }
}

#[test]
fn pushout_formula_matches_the_pulled_cotangent() {
    let (b, b2) = (poly("B", 1), poly("B2", 2));
    let f = inclusion(&b, &b2);
    for fol in [FoliationPresentation::final_foliation(&b).unwrap(), custom(&b)] {
        let pulled = pullback_foliation(&fol, &f).unwrap();
        let cone = pushout_cotangent(&fol, &f).unwrap();
        for k in -2..=0 {
            assert_eq!(
                cone.homology(k, Some(4)).unwrap().dimension,
                pulled.cotangent.homology(k, Some(4)).unwrap().dimension,
                "{} in degree {k}",
                fol.name
            );
        }
    }
}

/// `(g∘f)^*F` against `g^*(f^*F)` along `ℚ[x] → ℚ[x,y] → ℚ[x,y,z]`.
#[test]
fn pullback_is_transitive() {
    let (b, b2, b3) = (poly("B", 1), poly("B2", 2), poly("B3", 3));
    let (f, g) = (inclusion(&b, &b2), inclusion(&b2, &b3));
    let gf = f.compose(&g).unwrap();
    for fol in [FoliationPresentation::final_foliation(&b).unwrap(), custom(&b)] {
        let nu = fol.gm.generators().len();
        let direct = pullback_foliation(&fol, &gf).unwrap();
        let staged = pullback_foliation(&pullback_foliation(&fol, &f).unwrap(), &g).unwrap();
        let cmp = transitivity_comparison(&direct, &staged, &f, &g, nu).unwrap();
        for w in 0..=2 {
            assert!(cmp.weight_chain_map(w).unwrap().is_quasi_isomorphism(Some(4)).unwrap(), "{} weight {w}", fol.name);
        }
    }
}
