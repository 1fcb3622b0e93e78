use std::collections::BTreeMap;
use std::sync::Arc;

use folwerk_core::cotangent_derham::{cotangent_lci, de_rham, de_rham_cohomology, kaehler, koszul_check};
use folwerk_core::exact_core::{sym, AlgebraPresentation, PerfectComplex};
use folwerk_core::{Error, Window};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x", "y", "z"];

fn lci_examples() -> Vec<Arc<AlgebraPresentation>> {
    [
        (&["x"][..], &["x^2"][..]),
        (&["x"][..], &["x^3 - x"][..]),
        (&["x", "y"][..], &["x*y"][..]),
        (&["x", "y"][..], &["x^2", "y^2"][..]),
        (&["x", "y"][..], &["x^2 - y^3"][..]),
        (&["x", "y", "z"][..], &["x*y - z", "y^2"][..]),
    ]
    .iter()
    .enumerate()
    .map(|(i, (v, r))| AlgebraPresentation::quotient(&format!("B{i}"), v, r).unwrap())
    .collect()
}

fn homology_dims(c: &PerfectComplex, bound: Option<u32>) -> BTreeMap<i32, usize> {
    c.homology_all(bound).unwrap().into_iter().filter(|(_, h)| h.dimension > 0).map(|(k, h)| (k, h.dimension)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn smooth_cotangent_agrees_with_kaehler(n in 1usize..=3) {
        let b = AlgebraPresentation::polynomial("B", &VARS[..n]).unwrap();
        let k = kaehler(&b).unwrap().complex;
        let l = cotangent_lci(&b, None).unwrap().complex;
        prop_assert!(k.same_as(&l));
        for d in k.degrees() {
            prop_assert_eq!(k.diff(d), l.diff(d));
        }
    }

    #[test]
    fn de_rham_of_lci_examples_passes(i in 0usize..6) {
        let b = lci_examples()[i].clone();
        let dr = de_rham(&b, 3).unwrap();
        let r = dr.gm.verify_mixed(Some(&Window::default())).unwrap();
        prop_assert!(r.passed, "{:?}", r.first_failure());
        prop_assert!(dr.provenance.iter().any(|p| p.contains("Koszul")));
    }
}

#[test]
fn koszul_models_resolve_lci_examples() {
    for b in lci_examples() {
        let bound = if b.is_finite_dimensional() { None } else { Some(6) };
        let r = koszul_check(&b, bound).unwrap();
        assert!(r.passed, "{}: {r:?}", b.name);
        assert!(r.higher_homology.values().all(|&h| h == 0));
    }
}

#[test]
fn non_regular_relations_are_caught() {
    let b = AlgebraPresentation::quotient("B", &["x", "y"], &["x*y", "x^2"]).unwrap();
    assert!(!koszul_check(&b, Some(6)).unwrap().passed);
    assert!(cotangent_lci(&b, Some(6)).is_err());
}

/// Poincaré lemma; the oracle is the contraction `ε(x^k) = k x^{k-1} dx`, which
/// leaves only the constants.
#[test]
fn poincare_lemma_for_polynomial_rings() {
    for n in 1..=3 {
        let b = AlgebraPresentation::polynomial("B", &VARS[..n]).unwrap();
        let dr = de_rham(&b, 3).unwrap();
        for (i, v) in VARS[..n].iter().enumerate() {
            for k in 1..=4 {
                let p = dr.gm.parse(&format!("{v}^{k}")).unwrap();
                let want = dr.gm.parse(&format!("{k}*{v}^{}*d{v}", k - 1)).unwrap();
                assert_eq!(dr.gm.eps(&p), want, "ε({v}^{k}) in {n} variables (#{i})");
            }
        }
        let coh = de_rham_cohomology(&dr, Some(&Window::default())).unwrap();
        let nonzero: BTreeMap<i32, usize> = coh.dims.into_iter().filter(|(_, d)| *d > 0).collect();
        assert_eq!(nonzero, [(0, 1)].into(), "n = {n}");
    }
}

/// `B' = ℚ^m` or `ℚ(i)` is étale over `B = ℚ`: weightwise `Sym^n(L_{B'}[1]) ≃ B' ⊗ Sym^n(L_B[1])`.
#[test]
fn etale_base_change_keeps_weightwise_ranks() {
    let base = sym(&kaehler(&AlgebraPresentation::rational()).unwrap().complex, 3).unwrap();
    for (v, r) in [("e", "e^2 - e"), ("e", "e^3 - e"), ("s", "s^2 + 1")] {
        let e = AlgebraPresentation::quotient("E", &[v], &[r]).unwrap();
        let dim = e.standard_monomials(None).unwrap().len();
        let s = sym(&kaehler(&e).unwrap().complex, 3).unwrap();
        for n in 0..=3 {
            let got = homology_dims(s.piece(n).unwrap(), None);
            let want: BTreeMap<i32, usize> =
                homology_dims(base.piece(n).unwrap(), None).into_iter().map(|(k, d)| (k, d * dim)).collect();
            assert_eq!(got, want, "{r}, weight {n}");
        }
    }
}

#[test]
fn quotients_need_a_flag() {
    let b = Arc::new(AlgebraPresentation::builder("B").generators(&["x"]).relation("x^2").build().unwrap());
    assert!(matches!(kaehler(&b), Err(Error::AmbiguousInput(_))));
}
