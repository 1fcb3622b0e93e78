use std::collections::BTreeMap;
use std::sync::Arc;

use folwerk_core::exact_core::{q, sym, AlgebraPresentation, ChainMap, PerfectComplex, PolyMatrix, Scalar};
use num::{One, Zero};
use proptest::prelude::*;

fn rationals() -> Arc<AlgebraPresentation> {
    AlgebraPresentation::rational()
}

fn matrix(owner: &AlgebraPresentation, rows: usize, cols: usize, entries: &[i64]) -> PolyMatrix {
    let one = owner.ring().one();
    let data = (0..rows)
        .map(|r| (0..cols).map(|c| one.scale(&q(entries[r * cols + c]))).collect())
        .collect();
    PolyMatrix::from_rows(data, cols)
}

/// Rank by Gaussian elimination over ℚ, kept separate from the library's linear algebra.
fn rank(rows: &[Vec<Scalar>]) -> usize {
    let mut m: Vec<Vec<Scalar>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone() / pivot.clone();
                for j in 0..cols {
                    let v = m[r][j].clone() * f.clone();
                    m[i][j] -= v;
                }
            }
        }
        r += 1;
    }
    r
}

fn scalars(owner: &AlgebraPresentation, m: &PolyMatrix) -> Vec<Vec<Scalar>> {
    (0..m.rows).map(|r| (0..m.cols).map(|c| m.get(r, c).constant_term(owner.nvars())).collect()).collect()
}

/// `dim H^n = rank C^n − rank d^n − rank d^{n−1}`.
fn homology_oracle(c: &PerfectComplex) -> BTreeMap<i32, usize> {
    let owner = c.owner().clone();
    let rk = |n: i32| {
        let d = c.diff(n);
        if d.rows == 0 || d.cols == 0 {
            0
        } else {
            rank(&scalars(&owner, &d))
        }
    };
    c.degrees().into_iter().map(|n| (n, c.rank(n) - rk(n) - rk(n - 1))).collect()
}

fn two_term(owner: &Arc<AlgebraPresentation>, a: usize, b: usize, entries: &[i64], tag: &str) -> PerfectComplex {
    PerfectComplex::new(
        owner.clone(),
        vec![(-1, (0..a).map(|i| format!("{tag}{i}")).collect()), (0, (0..b).map(|i| format!("{tag}'{i}")).collect())],
        vec![(-1, matrix(owner, b, a, entries))],
    )
    .unwrap()
}

fn small_matrix(max: usize) -> impl Strategy<Value = (usize, usize, Vec<i64>)> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(-2i64..=2, r * c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensor_products_square_to_zero((a, b, x) in small_matrix(3), (c, d, y) in small_matrix(3)) {
        let qq = rationals();
        let k1 = two_term(&qq, b, a, &transposed(&x, a, b), "u");
        let k2 = two_term(&qq, d, c, &transposed(&y, c, d), "v");
        let t = k1.tensor(&k2).unwrap();
        for n in t.degrees() {
            let prod = t.diff(n + 1).mul(&qq, &t.diff(n));
            prop_assert!(prod.is_zero(), "d^{} ∘ d^{} ≠ 0", n + 1, n);
        }
    }

    #[test]
    fn homology_matches_rank_oracle((a, b, x) in small_matrix(4), (c, d, y) in small_matrix(3)) {
        let qq = rationals();
        let t = two_term(&qq, b, a, &transposed(&x, a, b), "u").tensor(&two_term(&qq, d, c, &transposed(&y, c, d), "v")).unwrap();
        let got: BTreeMap<i32, usize> =
            t.homology_all(None).unwrap().into_iter().map(|(n, h)| (n, h.dimension)).collect();
        prop_assert_eq!(got, homology_oracle(&t));
    }

    #[test]
    fn double_dual_is_entrywise_identity((a, b, x) in small_matrix(4)) {
        let qq = rationals();
        let c = two_term(&qq, b, a, &transposed(&x, a, b), "e");
        let dd = c.dual().dual();
        prop_assert!(dd.same_as(&c));
        for n in c.degrees() {
            prop_assert_eq!(dd.diff(n), c.diff(n));
        }
    }

    /// `id_A ⊕ (0 → K)` is a quasi-isomorphism exactly when `K = [ℚ^k →M ℚ^k]` is acyclic.
    #[test]
    fn cone_acyclic_iff_quasi_isomorphism(
        (a, b, x) in small_matrix(3),
        k in 1usize..=3,
        m in prop::collection::vec(-2i64..=2, 9),
    ) {
        let qq = rationals();
        let big_a = two_term(&qq, b, a, &transposed(&x, a, b), "a");
        let kk = two_term(&qq, k, k, &m[..k * k], "k");
        let f = ChainMap::identity(&big_a)
            .direct_sum(&ChainMap::zero(&PerfectComplex::zero(qq.clone()), &kk))
            .unwrap();
        let k_rows: Vec<Vec<Scalar>> = (0..k).map(|r| (0..k).map(|c| q(m[r * k + c])).collect()).collect();
        let oracle = rank(&k_rows) == k;
        prop_assert_eq!(f.is_quasi_isomorphism(None).unwrap(), oracle);
        let cone = f.cone().unwrap();
        let cone_zero = homology_oracle(&cone).values().all(|&h| h == 0);
        prop_assert_eq!(cone_zero, oracle);
    }

    /// Ranks of `Sym^n(L[1])` against a brute-force count of graded monomials.
    #[test]
    fn sym_ranks_match_monomial_count(degrees in prop::collection::vec(-2i32..=0, 0..=4)) {
        let qq = rationals();
        let mut terms: BTreeMap<i32, Vec<String>> = BTreeMap::new();
        for (i, d) in degrees.iter().enumerate() {
            terms.entry(*d).or_default().push(format!("g{i}"));
        }
        let l = PerfectComplex::new(qq, terms.into_iter().collect(), vec![]).unwrap();
        let s = sym(&l, 3).unwrap();
        // after the shift a generator of degree k sits in degree k - 1
        let odd: Vec<bool> = degrees.iter().map(|d| (d - 1).rem_euclid(2) == 1).collect();
        for n in 0..=3u32 {
            prop_assert_eq!(s.rank(n), count_monomials(&odd, n), "weight {}", n);
        }
    }
}

fn transposed(x: &[i64], rows: usize, cols: usize) -> Vec<i64> {
    (0..cols).flat_map(|c| (0..rows).map(move |r| x[r * cols + c])).collect()
}

fn count_monomials(odd: &[bool], n: u32) -> usize {
    fn go(odd: &[bool], left: u32) -> usize {
        match odd.split_first() {
            None => usize::from(left == 0),
            Some((&o, rest)) => {
                let max = if o { left.min(1) } else { left };
                (0..=max).map(|e| go(rest, left - e)).sum()
            }
        }
    }
    go(odd, n)
}

#[test]
fn cone_of_identity_is_acyclic_on_a_nontrivial_complex() {
    let qq = rationals();
    let c = two_term(&qq, 2, 2, &[1, 2, 2, 4], "c");
    assert_eq!(homology_oracle(&c), [(-1, 1), (0, 1)].into());
    assert!(ChainMap::identity(&c).is_quasi_isomorphism(None).unwrap());
}

#[test]
fn reduction_in_dual_numbers() {
    let d = AlgebraPresentation::quotient("D", &["t"], &["t^2"]).unwrap();
    let p = d.parse("(1 + t)^3").unwrap();
    assert_eq!(d.fmt(&d.reduce(&p)), "3*t + 1");
    assert!(d.is_finite_dimensional());
    assert!(q(1).is_one());
}
