//! Graded-symmetric powers of a shifted perfect complex.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::algebra::AlgebraPresentation;
use super::complex::{PerfectComplex, PolyMatrix};
use super::poly::{Monomial, Poly, PolyRing, VarSpec};
use super::scalar::q;
use crate::error::Result;

/// `Sym^n_B(L[1])` for `n = 0..=weight_bound`, each a complex of free B-modules.
#[derive(Clone, Debug)]
pub struct SymFamily {
    pub owner: Arc<AlgebraPresentation>,
    /// Owner variables followed by one generator per basis vector of `L[1]`.
    pub ring: PolyRing,
    /// Index of the first shifted generator in `ring`.
    pub shift_start: usize,
    /// Per weight: the monomial basis (in shifted generators) and the complex.
    pub pieces: BTreeMap<u32, (Vec<Monomial>, PerfectComplex)>,
}

impl SymFamily {
    pub fn piece(&self, n: u32) -> Option<&PerfectComplex> {
        self.pieces.get(&n).map(|(_, c)| c)
    }

    /// Total rank of the weight-`n` piece over the owner.
    pub fn rank(&self, n: u32) -> usize {
        self.pieces.get(&n).map_or(0, |(b, _)| b.len())
    }

    pub fn generator_names(&self) -> Vec<String> {
        self.ring.vars[self.shift_start..]
            .iter()
            .map(|v| v.name.clone())
            .collect()
    }
}

/// Exponent vectors over `vars` of total weight `n`, odd variables at most once.
pub fn graded_monomials(vars: &[VarSpec], n: u32) -> Vec<Vec<u32>> {
    fn go(vars: &[VarSpec], i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == vars.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let w = vars[i].weight.max(1);
        let max = if vars[i].is_odd() { 1 } else { left / w };
        for e in 0..=max.min(left / w) {
            cur.push(e);
            go(vars, i + 1, left - e * w, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(vars, 0, n, &mut Vec::new(), &mut out);
    out
}

/// Dimension of the weight-`n` graded-symmetric power on `even` even and `odd`
/// odd generators: `Σ_{a+b=n} C(even+a-1, a) · C(odd, b)`.
pub fn graded_sym_dim(even: usize, odd: usize, n: usize) -> usize {
    (0..=n)
        .map(|a| {
            let b = n - a;
            let sym = if even == 0 {
                usize::from(a == 0)
            } else {
                binomial(even + a - 1, a)
            };
            sym * binomial(odd, b)
        })
        .sum()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Builds `Sym^n(L[1])` for all `n ≤ weight_bound`. The generator of `L[1]` for a
/// basis vector `e` of `L^k` is named after `e`'s label and sits in degree `k-1`;
/// the differential is `δ(s_j) = -Σ_i d_{ij} s_i`, extended as an odd derivation.
pub fn sym(l: &PerfectComplex, weight_bound: u32) -> Result<SymFamily> {
    let owner = l.owner().clone();
    let base = owner.ring().clone();
    let nb = base.nvars();
    let mut shifted = Vec::new();
    let mut position: BTreeMap<(i32, usize), usize> = BTreeMap::new();
    for k in l.degrees() {
        for (j, label) in l.labels(k).iter().enumerate() {
            let mut name = label.clone();
            if base.index_of(&name).is_some() || shifted.iter().any(|v: &VarSpec| v.name == name) {
                name = format!("s_{name}");
            }
            position.insert((k, j), nb + shifted.len());
            shifted.push(VarSpec::new(name, k - 1, 1));
        }
    }
    let ring = base.extended(shifted.clone());
    let n = ring.nvars();
    let mut images = vec![Poly::zero(); n];
    for k in l.degrees() {
        let d = l.diff(k);
        for j in 0..d.cols {
            let mut img = Poly::zero();
            for i in 0..d.rows {
                let coeff = d.get(i, j).padded(n);
                if coeff.is_zero() {
                    continue;
                }
                let s_i = ring.var(position[&(k + 1, i)]);
                img = img.sub(&ring.mul(&coeff, &s_i));
            }
            images[position[&(k, j)]] = img;
        }
    }
    let mut pieces = BTreeMap::new();
    for w in 0..=weight_bound {
        let mut basis: Vec<Monomial> = graded_monomials(&shifted, w)
            .into_iter()
            .map(|e| {
                let mut full = vec![0; nb];
                full.extend(e);
                Monomial(full)
            })
            .collect();
        basis.sort_by_key(|m| (ring.monomial_degree(m), m.clone()));
        let mut by_degree: BTreeMap<i32, Vec<Monomial>> = BTreeMap::new();
        for m in &basis {
            by_degree
                .entry(ring.monomial_degree(m))
                .or_default()
                .push(m.clone());
        }
        let mut terms = Vec::new();
        let mut diffs = Vec::new();
        for (&k, src) in &by_degree {
            terms.push((k, src.iter().map(|m| ring.fmt_monomial(m)).collect()));
            let Some(tgt) = by_degree.get(&(k + 1)) else {
                continue;
            };
            let pos: BTreeMap<&Monomial, usize> =
                tgt.iter().enumerate().map(|(r, m)| (m, r)).collect();
            let mut mat = PolyMatrix::zeros(tgt.len(), src.len());
            for (c, m) in src.iter().enumerate() {
                let img = ring.apply_derivation(&images, true, &Poly::from_term(m.clone(), q(1)));
                let mut col: BTreeMap<usize, Poly> = BTreeMap::new();
                for (mono, coeff) in &img.terms {
                    let (b_part, s_part) = split(mono, nb);
                    let r = pos[&s_part];
                    col.entry(r).or_default().add_term(b_part, coeff.clone());
                }
                for (r, p) in col {
                    mat.set(r, c, owner.reduce(&p));
                }
            }
            diffs.push((k, mat));
        }
        let complex = PerfectComplex::new(owner.clone(), terms, diffs)?;
        pieces.insert(w, (basis, complex));
    }
    Ok(SymFamily {
        owner,
        ring,
        shift_start: nb,
        pieces,
    })
}

fn split(m: &Monomial, nb: usize) -> (Monomial, Monomial) {
    let b = Monomial(m.0[..nb].to_vec());
    let mut s = m.clone();
    for e in &mut s.0[..nb] {
        *e = 0;
    }
    (b, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_of_zero_is_owner_in_weight_zero() {
        let b = AlgebraPresentation::polynomial("B", &["x"]).unwrap();
        let s = sym(&PerfectComplex::zero(b), 3).unwrap();
        assert_eq!(s.rank(0), 1);
        assert_eq!(
            (1..=3).map(|n| s.rank(n)).collect::<Vec<_>>(),
            vec![0, 0, 0]
        );
    }

    #[test]
    fn free_rank_two_in_degree_zero_gives_exterior_ranks() {
        let b = AlgebraPresentation::polynomial("B", &["x", "y"]).unwrap();
        let l = PerfectComplex::free(b, 0, vec!["dx".into(), "dy".into()]).unwrap();
        let s = sym(&l, 2).unwrap();
        let ranks: Vec<usize> = (0..=2).map(|n| s.rank(n)).collect();
        let oracle: Vec<usize> = (0..=2).map(|k| binomial(2, k)).collect();
        assert_eq!(ranks, oracle);
    }

    #[test]
    fn two_term_complex_mixed_square() {
        let b = AlgebraPresentation::quotient("B", &["x"], &["x^2"]).unwrap();
        let l = PerfectComplex::new(
            b.clone(),
            vec![(-1, vec!["e".into()]), (0, vec!["dx".into()])],
            vec![(-1, PolyMatrix::parse(&b, &[&["2*x"]]).unwrap())],
        )
        .unwrap();
        let s = sym(&l, 2).unwrap();
        // shifted: e in degree -2 (even), dx in degree -1 (odd); weight 2 = {e², e·dx}
        let w2 = s.piece(2).unwrap();
        assert_eq!(w2.ranks(), BTreeMap::from([(-4, 1), (-3, 1)]));
        assert!(w2.labels(-3).contains(&"e*dx".to_string()));
        // oracle: δ(e) = -2x·dx, δ(e²) = 2e·δ(e) = -4x·e·dx
        assert_eq!(w2.diff(-4).render(&b), vec![vec!["-4*x".to_string()]]);
        // δ(e·dx) = δ(e)·dx = -2x·dx·dx = 0
        assert!(w2.diff(-3).is_zero());
    }

    #[test]
    fn rank_formula_examples() {
        assert_eq!(graded_sym_dim(1, 1, 2), 2);
        assert_eq!(graded_sym_dim(0, 3, 2), 3);
        assert_eq!(graded_sym_dim(2, 0, 3), 4);
        assert_eq!(graded_sym_dim(0, 0, 0), 1);
    }
}
