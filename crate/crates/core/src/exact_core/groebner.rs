//! Completion of relation ideals to reduced Gröbner bases (Buchberger), with a
//! step budget, and normal forms modulo the completed basis.
//!
//! Relations only ever involve even variables, which are central, so the usual
//! commutative algorithm applies verbatim inside a graded-commutative ring.

use num::Zero;

use super::poly::{Monomial, Poly, PolyRing};
use crate::error::{Error, Result};

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GroebnerBasis {
    /// Monic, interreduced, sorted by leading monomial.
    pub basis: Vec<Poly>,
}

impl GroebnerBasis {
    pub fn empty() -> Self {
        Self { basis: Vec::new() }
    }

    pub fn is_unit_ideal(&self) -> bool {
        self.basis
            .iter()
            .any(|g| g.leading().is_some_and(|(m, _)| m.is_one()))
    }

    pub fn leading_monomials(&self) -> Vec<Monomial> {
        self.basis
            .iter()
            .filter_map(|g| g.leading().map(|(m, _)| m.clone()))
            .collect()
    }

    /// Whether `m` is a standard monomial (not divisible by any leading monomial).
    pub fn is_standard(&self, m: &Monomial) -> bool {
        self.basis
            .iter()
            .all(|g| !g.leading().is_some_and(|(lm, _)| lm.divides(m)))
    }

    /// Full normal form of `p`. The basis is complete, so this terminates without a budget.
    pub fn reduce(&self, ring: &PolyRing, p: &Poly) -> Poly {
        let mut steps = 0usize;
        reduce_with(ring, &self.basis, p, &mut steps, usize::MAX).expect("unbounded reduction")
    }

    pub fn contains(&self, ring: &PolyRing, p: &Poly) -> bool {
        self.reduce(ring, p).is_zero()
    }
}

fn reduce_with(
    ring: &PolyRing,
    basis: &[Poly],
    p: &Poly,
    steps: &mut usize,
    budget: usize,
) -> Result<Poly> {
    let mut rem = Poly::zero();
    let mut work = p.clone();
    while let Some((m, c)) = work
        .terms
        .iter()
        .next_back()
        .map(|(m, c)| (m.clone(), c.clone()))
    {
        let divisor = basis
            .iter()
            .find(|g| g.leading().is_some_and(|(lm, _)| lm.divides(&m)));
        match divisor {
            Some(g) => {
                *steps += 1;
                if *steps > budget {
                    return Err(Error::BudgetExceeded {
                        budget,
                        during: "reducing modulo the relation ideal".into(),
                    });
                }
                let (lm, lc) = g.leading().unwrap();
                let factor = lm.quotient(&m);
                let scaled = ring.mul_monomial(&factor, g).scale(&(c / lc));
                work = work.sub(&scaled);
            }
            None => {
                work.terms.remove(&m);
                rem.add_term(m, c);
            }
        }
    }
    Ok(rem)
}

fn s_polynomial(ring: &PolyRing, f: &Poly, g: &Poly) -> Poly {
    let (fm, fc) = f.leading().unwrap();
    let (gm, gc) = g.leading().unwrap();
    let l = fm.lcm(gm);
    let a = ring.mul_monomial(&fm.quotient(&l), f).scale(&fc.recip());
    let b = ring.mul_monomial(&gm.quotient(&l), g).scale(&gc.recip());
    a.sub(&b)
}

/// Buchberger completion with the product criterion; `budget` bounds the total
/// number of reduction steps.
pub fn groebner_basis(ring: &PolyRing, gens: &[Poly], budget: usize) -> Result<GroebnerBasis> {
    for g in gens {
        for m in g.terms.keys() {
            if m.0
                .iter()
                .enumerate()
                .any(|(i, e)| *e > 0 && ring.vars[i].degree != 0)
            {
                return Err(Error::InvalidPresentation(format!(
                    "relation `{}` involves a variable of nonzero degree",
                    ring.fmt(g)
                )));
            }
        }
    }
    let mut steps = 0usize;
    let mut basis: Vec<Poly> = Vec::new();
    let unit = |r: &Poly| r.leading().is_some_and(|(m, _)| m.is_one());
    for g in gens {
        let r = reduce_with(ring, &basis, g, &mut steps, budget)?;
        if unit(&r) {
            return Ok(GroebnerBasis { basis: vec![ring.one()] });
        }
        if !r.is_zero() {
            basis.push(r.monic());
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..basis.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    // normal strategy: the pair with the smallest lcm first
    let lcm_of = |basis: &[Poly], (i, j): (usize, usize)| {
        basis[i].leading().unwrap().0.lcm(basis[j].leading().unwrap().0)
    };
    while !pairs.is_empty() {
        let pick = (0..pairs.len())
            .min_by_key(|&k| lcm_of(&basis, pairs[k]))
            .unwrap();
        let (i, j) = pairs.swap_remove(pick);
        let (fm, _) = basis[i].leading().unwrap();
        let (gm, _) = basis[j].leading().unwrap();
        if fm.is_coprime(gm) {
            continue;
        }
        let s = s_polynomial(ring, &basis[i], &basis[j]);
        let r = reduce_with(ring, &basis, &s, &mut steps, budget)?;
        if unit(&r) {
            return Ok(GroebnerBasis { basis: vec![ring.one()] });
        }
        if !r.is_zero() {
            basis.push(r.monic());
            let k = basis.len() - 1;
            for i in 0..k {
                pairs.push((i, k));
            }
        }
    }
    // minimalise
    let mut minimal: Vec<Poly> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        let (gm, _) = g.leading().unwrap();
        let redundant = basis.iter().enumerate().any(|(j, h)| {
            let (hm, _) = h.leading().unwrap();
            j != i && hm.divides(gm) && (hm != gm || j < i)
        });
        if !redundant {
            minimal.push(g.clone());
        }
    }
    // interreduce
    let mut reduced = Vec::with_capacity(minimal.len());
    for i in 0..minimal.len() {
        let others: Vec<Poly> = minimal
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| p.clone())
            .collect();
        let (lm, lc) = minimal[i]
            .leading()
            .map(|(m, c)| (m.clone(), c.clone()))
            .unwrap();
        let mut tail = minimal[i].clone();
        tail.terms.remove(&lm);
        let tail = reduce_with(ring, &others, &tail, &mut steps, budget)?;
        let mut g = Poly::from_term(lm, lc);
        g = g.add(&tail);
        reduced.push(g.monic());
    }
    reduced.sort_by(|a, b| a.leading().unwrap().0.cmp(b.leading().unwrap().0));
    if reduced
        .iter()
        .any(|g| g.leading().is_some_and(|(m, _)| m.is_one()))
    {
        reduced = vec![ring.one()];
    }
    debug_assert!(reduced
        .iter()
        .all(|g| !g.terms.values().any(|c| c.is_zero())));
    Ok(GroebnerBasis { basis: reduced })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_zero_relation_reduces_itself() {
        let r = PolyRing::discrete(&["x"]);
        let gb = groebner_basis(&r, &[r.parse("x^2").unwrap()], DEFAULT_BUDGET).unwrap();
        assert!(gb.reduce(&r, &r.parse("x^2").unwrap()).is_zero());
        assert_eq!(
            gb.reduce(&r, &r.parse("x^3 + x + 1").unwrap()),
            r.parse("x + 1").unwrap()
        );
    }

    #[test]
    fn no_relations_is_identity() {
        let r = PolyRing::discrete(&["x"]);
        let gb = groebner_basis(&r, &[], DEFAULT_BUDGET).unwrap();
        let p = r.parse("x + 1").unwrap();
        assert_eq!(gb.reduce(&r, &p), p);
    }

    #[test]
    fn unit_ideal_detected() {
        let r = PolyRing::discrete(&["a", "b"]);
        let gens = [r.parse("a^2").unwrap(), r.parse("2*a*b - 1").unwrap()];
        let gb = groebner_basis(&r, &gens, DEFAULT_BUDGET).unwrap();
        assert!(gb.is_unit_ideal());
    }

    #[test]
    fn completion_adds_s_polynomials() {
        // (x^2 - y, x*y - 1): the completed basis contains y^2 - x
        let r = PolyRing::discrete(&["x", "y"]);
        let gens = [r.parse("x^2 - y").unwrap(), r.parse("x*y - 1").unwrap()];
        let gb = groebner_basis(&r, &gens, DEFAULT_BUDGET).unwrap();
        assert!(gb.contains(&r, &r.parse("y^2 - x").unwrap()));
        assert!(gb.contains(&r, &r.parse("y^3 - 1").unwrap()));
        assert!(!gb.contains(&r, &r.parse("y - 1").unwrap()));
    }

    #[test]
    fn tiny_budget_is_reported() {
        let r = PolyRing::discrete(&["x", "y"]);
        // x^5 needs five rewrites x -> y before it is reduced
        let gens = [r.parse("x - y").unwrap(), r.parse("x^5").unwrap()];
        let e = groebner_basis(&r, &gens, 3).unwrap_err();
        assert!(matches!(e, Error::BudgetExceeded { budget: 3, .. }));
    }
}
