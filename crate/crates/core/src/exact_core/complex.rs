//! Bounded complexes of finite free modules over a discrete presentation, chain
//! maps between them, the standard constructions, and homology.
//!
//! Degrees are cohomological: `d^n : C^n -> C^{n+1}`. Matrices are
//! `rank(target) × rank(source)`, columns being images of source basis vectors.
//! Sign conventions are listed in `docs/signs.md`:
//!
//! * `C[k]^n = C^{n+k}`, `d_{C[k]} = (-1)^k d_C`;
//! * `(C ⊗ D)`: `d(c ⊗ e) = dc ⊗ e + (-1)^p c ⊗ de` for `c ∈ C^p`;
//! * `C^∨` has `(C^∨)^n = (C^{-n})^∨` and `d^n_{C^∨} = (d^{-n-1}_C)^T`, so the
//!   double dual is the original complex on the nose;
//! * `cone(f)^n = C^{n+1} ⊕ D^n` with `d(c, e) = (-dc, f(c) + de)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::Serialize;

use super::algebra::{AlgebraMap, AlgebraPresentation};
use super::linalg::{intersection_dim, QMatrix};
use super::poly::{Monomial, Poly};
use super::scalar::{q, sign, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Poly::zero(); rows * cols],
        }
    }

    pub fn identity(owner: &AlgebraPresentation, n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, owner.ring().one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Poly>>, cols: usize) -> Self {
        let r = rows.len();
        let entries: Vec<Poly> = rows.into_iter().flatten().collect();
        assert_eq!(entries.len(), r * cols);
        Self {
            rows: r,
            cols,
            entries,
        }
    }

    /// Parses a row-major list of entries in the owner's ring.
    pub fn parse(owner: &AlgebraPresentation, rows: &[&[&str]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut out = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidPresentation("ragged matrix".into()));
            }
            for (j, src) in row.iter().enumerate() {
                out.set(i, j, owner.parse(src)?);
            }
        }
        Ok(out)
    }

    pub fn get(&self, r: usize, c: usize) -> &Poly {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, p: Poly) {
        self.entries[r * self.cols + c] = p;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Poly::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn map_entries(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        self.map_entries(|p| p.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn mul(&self, owner: &AlgebraPresentation, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Poly::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc.add(&owner.ring().mul(a, b));
                    }
                }
                out.set(i, j, owner.reduce(&acc));
            }
        }
        out
    }

    /// Copies `block` into position `(r0, c0)`.
    pub fn put(&mut self, r0: usize, c0: usize, block: &Self) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(r0 + r, c0 + c, block.get(r, c).clone());
            }
        }
    }

    /// Entries as rendered strings, row-major.
    pub fn render(&self, owner: &AlgebraPresentation) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| owner.fmt(self.get(r, c))).collect())
            .collect()
    }
}

/// A bounded complex of finite free modules over a discrete presentation.
#[derive(Clone, Debug)]
pub struct PerfectComplex {
    owner: Arc<AlgebraPresentation>,
    terms: BTreeMap<i32, Vec<String>>,
    diffs: BTreeMap<i32, PolyMatrix>,
}

impl PerfectComplex {
    /// Validates shapes and `d∘d = 0` after reduction. Terms of rank zero are dropped.
    pub fn new(
        owner: Arc<AlgebraPresentation>,
        terms: Vec<(i32, Vec<String>)>,
        diffs: Vec<(i32, PolyMatrix)>,
    ) -> Result<Self> {
        if !owner.is_discrete() {
            return Err(Error::UnsupportedInput(format!(
                "perfect complexes live over discrete algebras; `{}` is not",
                owner.name
            )));
        }
        let mut t = BTreeMap::new();
        for (n, labels) in terms {
            if t.insert(n, labels).is_some() {
                return Err(Error::NotAComplex(format!(
                    "term in degree {n} given twice"
                )));
            }
        }
        t.retain(|_, l: &mut Vec<String>| !l.is_empty());
        let mut d = BTreeMap::new();
        for (n, m) in diffs {
            let src = t.get(&n).map_or(0, |l| l.len());
            let tgt = t.get(&(n + 1)).map_or(0, |l| l.len());
            if (m.rows, m.cols) != (tgt, src) {
                if m.is_zero() {
                    continue;
                }
                return Err(Error::NotAComplex(format!(
                    "d^{n} has shape {}×{}, expected {tgt}×{src}",
                    m.rows, m.cols
                )));
            }
            let m = m.map_entries(|p| owner.reduce(p));
            if src > 0 && tgt > 0 && !m.is_zero() {
                d.insert(n, m);
            }
        }
        let c = PerfectComplex {
            owner,
            terms: t,
            diffs: d,
        };
        for (&n, dn) in &c.diffs {
            if let Some(dn1) = c.diffs.get(&(n + 1)) {
                if !dn1.mul(&c.owner, dn).is_zero() {
                    return Err(Error::NotAComplex(format!("d^{} ∘ d^{n} ≠ 0", n + 1)));
                }
            }
        }
        Ok(c)
    }

    pub fn zero(owner: Arc<AlgebraPresentation>) -> Self {
        PerfectComplex {
            owner,
            terms: BTreeMap::new(),
            diffs: BTreeMap::new(),
        }
    }

    /// Free module with the given basis labels, concentrated in one degree.
    pub fn free(owner: Arc<AlgebraPresentation>, degree: i32, labels: Vec<String>) -> Result<Self> {
        Self::new(owner, vec![(degree, labels)], vec![])
    }

    pub fn owner(&self) -> &Arc<AlgebraPresentation> {
        &self.owner
    }

    pub fn rank(&self, n: i32) -> usize {
        self.terms.get(&n).map_or(0, Vec::len)
    }

    pub fn labels(&self, n: i32) -> &[String] {
        self.terms.get(&n).map_or(&[], Vec::as_slice)
    }

    pub fn degrees(&self) -> Vec<i32> {
        self.terms.keys().copied().collect()
    }

    /// Smallest and largest nonzero degree.
    pub fn amplitude(&self) -> Option<(i32, i32)> {
        Some((*self.terms.keys().next()?, *self.terms.keys().next_back()?))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn diff(&self, n: i32) -> PolyMatrix {
        self.diffs
            .get(&n)
            .cloned()
            .unwrap_or_else(|| PolyMatrix::zeros(self.rank(n + 1), self.rank(n)))
    }

    pub fn ranks(&self) -> BTreeMap<i32, usize> {
        self.terms.iter().map(|(n, l)| (*n, l.len())).collect()
    }

    /// Same complex with basis labels rewritten by `(degree, index, old label)`.
    pub fn relabeled(&self, f: impl Fn(i32, usize, &str) -> String) -> PerfectComplex {
        let terms = self
            .terms
            .iter()
            .map(|(n, l)| (*n, l.iter().enumerate().map(|(j, x)| f(*n, j, x)).collect()))
            .collect();
        PerfectComplex { owner: self.owner.clone(), terms, diffs: self.diffs.clone() }
    }

    fn check_owner(&self, other: &PerfectComplex) -> Result<()> {
        if !self.owner.same_as(&other.owner) {
            return Err(Error::IncompatibleOwner {
                left: self.owner.name.clone(),
                right: other.owner.name.clone(),
            });
        }
        Ok(())
    }

    fn span(&self, other: &PerfectComplex) -> Vec<i32> {
        let mut s: BTreeSet<i32> = self.terms.keys().copied().collect();
        s.extend(other.terms.keys().copied());
        s.into_iter().collect()
    }

    pub fn shift(&self, k: i32) -> PerfectComplex {
        let s = sign(k as i64);
        PerfectComplex {
            owner: self.owner.clone(),
            terms: self.terms.iter().map(|(n, l)| (n - k, l.clone())).collect(),
            diffs: self
                .diffs
                .iter()
                .map(|(n, m)| (n - k, m.scale(&s)))
                .collect(),
        }
    }

    pub fn dual(&self) -> PerfectComplex {
        let terms = self
            .terms
            .iter()
            .map(|(n, l)| (-n, l.iter().map(|x| format!("{x}^∨")).map(undual).collect()))
            .collect();
        // d^n_{dual} = (d^{-n-1})^T
        let diffs = self
            .diffs
            .iter()
            .map(|(n, m)| (-n - 1, m.transpose()))
            .collect();
        PerfectComplex {
            owner: self.owner.clone(),
            terms,
            diffs,
        }
    }

    pub fn direct_sum(&self, other: &PerfectComplex) -> Result<PerfectComplex> {
        self.check_owner(other)?;
        let mut terms = Vec::new();
        let mut diffs = Vec::new();
        for n in self.span(other) {
            let mut labels = self.labels(n).to_vec();
            labels.extend(other.labels(n).iter().cloned());
            terms.push((n, labels));
            let (a, b) = (self.diff(n), other.diff(n));
            let mut m = PolyMatrix::zeros(a.rows + b.rows, a.cols + b.cols);
            m.put(0, 0, &a);
            m.put(a.rows, a.cols, &b);
            diffs.push((n, m));
        }
        PerfectComplex::new(self.owner.clone(), terms, diffs)
    }

    pub fn tensor(&self, other: &PerfectComplex) -> Result<PerfectComplex> {
        self.check_owner(other)?;
        let ring = self.owner.ring();
        // basis of (C⊗D)^n: pairs (p, i, q, j) in lexicographic order
        let mut index: BTreeMap<i32, Vec<(i32, usize, i32, usize)>> = BTreeMap::new();
        for (&p, lc) in &self.terms {
            for (&qd, ld) in &other.terms {
                let e = index.entry(p + qd).or_default();
                for i in 0..lc.len() {
                    for j in 0..ld.len() {
                        e.push((p, i, qd, j));
                    }
                }
            }
        }
        let mut terms = Vec::new();
        let mut diffs = Vec::new();
        for (&n, basis) in &index {
            terms.push((
                n,
                basis
                    .iter()
                    .map(|&(p, i, qd, j)| format!("{}⊗{}", self.labels(p)[i], other.labels(qd)[j]))
                    .collect(),
            ));
            let Some(target) = index.get(&(n + 1)) else {
                continue;
            };
            let pos: BTreeMap<_, _> = target.iter().enumerate().map(|(k, b)| (*b, k)).collect();
            let mut m = PolyMatrix::zeros(target.len(), basis.len());
            for (col, &(p, i, qd, j)) in basis.iter().enumerate() {
                let dc = self.diff(p);
                for r in 0..dc.rows {
                    let e = dc.get(r, i);
                    if !e.is_zero() {
                        let row = pos[&(p + 1, r, qd, j)];
                        m.set(row, col, m.get(row, col).add(e));
                    }
                }
                let dd = other.diff(qd);
                let s = sign(p as i64);
                for r in 0..dd.rows {
                    let e = dd.get(r, j);
                    if !e.is_zero() {
                        let row = pos[&(p, i, qd + 1, r)];
                        m.set(row, col, m.get(row, col).add(&e.scale(&s)));
                    }
                }
            }
            let _ = ring;
            diffs.push((n, m));
        }
        PerfectComplex::new(self.owner.clone(), terms, diffs)
    }

    /// Base change along an algebra map out of the owner.
    pub fn base_change(&self, f: &AlgebraMap) -> Result<PerfectComplex> {
        if !f.source.same_as(&self.owner) {
            return Err(Error::IncompatibleOwner {
                left: self.owner.name.clone(),
                right: f.source.name.clone(),
            });
        }
        PerfectComplex::new(
            f.target.clone(),
            self.terms.iter().map(|(n, l)| (*n, l.clone())).collect(),
            self.diffs
                .iter()
                .map(|(n, m)| (*n, m.map_entries(|p| f.apply(p))))
                .collect(),
        )
    }

    /// Identical ranks, labels and matrices.
    pub fn same_as(&self, other: &PerfectComplex) -> bool {
        self.owner.same_as(&other.owner)
            && self.ranks() == other.ranks()
            && self
                .span(other)
                .iter()
                .all(|&n| self.diff(n) == other.diff(n))
    }

    /// Homology in every degree of the complex.
    pub fn homology_all(&self, bound: Option<u32>) -> Result<BTreeMap<i32, HomologyReport>> {
        let lo = self.terms.keys().next().copied().unwrap_or(0);
        let hi = self.terms.keys().next_back().copied().unwrap_or(0);
        (lo..=hi)
            .map(|n| Ok((n, self.homology(n, bound)?)))
            .collect()
    }

    /// ℚ-dimension of `H^n`, exact for finite-dimensional owners and computed on
    /// polynomial-degree truncations otherwise.
    pub fn homology(&self, n: i32, bound: Option<u32>) -> Result<HomologyReport> {
        if self.owner.is_finite_dimensional() {
            let basis = self.owner.standard_monomials(None)?;
            let dim = self.q_homology_on(n, &|_, _| true, &basis, &basis)?;
            return Ok(HomologyReport {
                degree: n,
                dimension: dim,
                truncation: Truncation::Exact,
            });
        }
        let bound = bound.ok_or_else(|| Error::MissingBound {
            owner: self.owner.name.clone(),
        })?;
        match self.grading() {
            Some(tw) => {
                let basis = self
                    .owner
                    .standard_monomials(Some(bound + self.max_twist(&tw)))?;
                let mut total = 0;
                for k in 0..=(bound as i64) {
                    let keep = |deg: i32, j: usize| -> Box<dyn Fn(&Monomial) -> bool> {
                        let t = tw[&(deg, j)];
                        Box::new(move |m: &Monomial| m.total_degree() as i64 + t == k)
                    };
                    total += self.graded_piece_homology(n, &keep, &basis)?;
                }
                Ok(HomologyReport {
                    degree: n,
                    dimension: total,
                    truncation: Truncation::Graded { bound },
                })
            }
            None => {
                let dim = self.naive_homology(n, bound)?;
                Ok(HomologyReport {
                    degree: n,
                    dimension: dim,
                    truncation: Truncation::Naive { bound },
                })
            }
        }
    }

    fn max_twist(&self, tw: &BTreeMap<(i32, usize), i64>) -> u32 {
        tw.values().copied().max().unwrap_or(0).max(0) as u32
    }

    /// Internal polynomial grading making every differential homogeneous of
    /// degree 0, normalised to be ≥ 0 on each connected component.
    fn grading(&self) -> Option<BTreeMap<(i32, usize), i64>> {
        let ring = self.owner.ring();
        for g in &self.owner.gb().basis {
            let mut degs = g.terms.keys().map(|m| m.total_degree());
            let first = degs.next()?;
            if !degs.all(|d| d == first) {
                return None;
            }
        }
        let _ = ring;
        // adjacency: ((n, j), (n+1, i), delta)
        let mut adj: BTreeMap<(i32, usize), Vec<((i32, usize), i64)>> = BTreeMap::new();
        for (&n, labels) in &self.terms {
            for j in 0..labels.len() {
                adj.entry((n, j)).or_default();
            }
        }
        for (&n, m) in &self.diffs {
            for i in 0..m.rows {
                for j in 0..m.cols {
                    let e = m.get(i, j);
                    if e.is_zero() {
                        continue;
                    }
                    let mut ds = e.terms.keys().map(|m| m.total_degree() as i64);
                    let d0 = ds.next().unwrap();
                    if !ds.all(|d| d == d0) {
                        return None;
                    }
                    adj.entry((n, j)).or_default().push(((n + 1, i), -d0));
                    adj.entry((n + 1, i)).or_default().push(((n, j), d0));
                }
            }
        }
        let mut tw: BTreeMap<(i32, usize), i64> = BTreeMap::new();
        let nodes: Vec<(i32, usize)> = adj.keys().copied().collect();
        for start in nodes {
            if tw.contains_key(&start) {
                continue;
            }
            let mut comp = vec![start];
            tw.insert(start, 0);
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                let tu = tw[&u];
                for &(v, delta) in &adj[&u] {
                    match tw.get(&v) {
                        Some(&tv) if tv != tu + delta => return None,
                        Some(_) => {}
                        None => {
                            tw.insert(v, tu + delta);
                            comp.push(v);
                            queue.push_back(v);
                        }
                    }
                }
            }
            let min = comp.iter().map(|u| tw[u]).min().unwrap();
            for u in comp {
                *tw.get_mut(&u).unwrap() -= min;
            }
        }
        Some(tw)
    }

    fn graded_piece_homology(
        &self,
        n: i32,
        keep: &dyn Fn(i32, usize) -> Box<dyn Fn(&Monomial) -> bool>,
        basis: &[Monomial],
    ) -> Result<usize> {
        let piece = |deg: i32| -> Vec<(usize, Monomial)> {
            let mut v = Vec::new();
            for j in 0..self.rank(deg) {
                let k = keep(deg, j);
                for m in basis {
                    if k(m) {
                        v.push((j, m.clone()));
                    }
                }
            }
            v
        };
        let (bp, bn, bs) = (piece(n - 1), piece(n), piece(n + 1));
        let dim = bn.len();
        if dim == 0 {
            return Ok(0);
        }
        let r_out = self.expand(n, &bn, &bs)?.rank();
        let r_in = self.expand(n - 1, &bp, &bn)?.rank();
        Ok(dim - r_out - r_in)
    }

    fn q_homology_on(
        &self,
        n: i32,
        _keep: &dyn Fn(i32, usize) -> bool,
        src_basis: &[Monomial],
        _tgt: &[Monomial],
    ) -> Result<usize> {
        let piece = |deg: i32| -> Vec<(usize, Monomial)> {
            (0..self.rank(deg))
                .flat_map(|j| src_basis.iter().map(move |m| (j, m.clone())))
                .collect()
        };
        let (bp, bn, bs) = (piece(n - 1), piece(n), piece(n + 1));
        if bn.is_empty() {
            return Ok(0);
        }
        let r_out = self.expand(n, &bn, &bs)?.rank();
        let r_in = self.expand(n - 1, &bp, &bn)?.rank();
        Ok(bn.len() - r_out - r_in)
    }

    /// ℚ-matrix of `d^n` from the span of `src` into the span of `tgt`; fails if an
    /// image leaves the target span.
    fn expand(
        &self,
        n: i32,
        src: &[(usize, Monomial)],
        tgt: &[(usize, Monomial)],
    ) -> Result<QMatrix> {
        let pos: BTreeMap<&(usize, Monomial), usize> =
            tgt.iter().enumerate().map(|(k, b)| (b, k)).collect();
        let d = self.diff(n);
        let ring = self.owner.ring();
        let mut out = QMatrix::zeros(tgt.len(), src.len());
        for (col, (j, m)) in src.iter().enumerate() {
            let mono = Poly::from_term(m.clone(), q(1));
            for i in 0..d.rows {
                let e = d.get(i, *j);
                if e.is_zero() {
                    continue;
                }
                let img = self.owner.reduce(&ring.mul(e, &mono));
                for (mm, c) in &img.terms {
                    let row = pos.get(&(i, mm.clone())).ok_or_else(|| {
                        Error::NotAComplex("graded truncation is not closed under d".into())
                    })?;
                    out.add_to(*row, col, c);
                }
            }
        }
        Ok(out)
    }

    fn naive_homology(&self, n: i32, bound: u32) -> Result<usize> {
        let basis = self.owner.standard_monomials(Some(bound))?;
        let piece = |deg: i32| -> Vec<(usize, Monomial)> {
            (0..self.rank(deg))
                .flat_map(|j| basis.iter().map(move |m| (j, m.clone())))
                .collect()
        };
        let bn = piece(n);
        if bn.is_empty() {
            return Ok(0);
        }
        let extra = self
            .diffs
            .values()
            .flat_map(|m| m.entries.iter().filter_map(Poly::max_total_degree))
            .max()
            .unwrap_or(0);
        let big = self.owner.standard_monomials(Some(bound + extra))?;
        let big_piece = |deg: i32| -> Vec<(usize, Monomial)> {
            (0..self.rank(deg))
                .flat_map(|j| big.iter().map(move |m| (j, m.clone())))
                .collect()
        };
        let kernel_dim = bn.len() - self.expand(n, &bn, &big_piece(n + 1))?.rank();
        let big_n = big_piece(n);
        let image = self.expand(n - 1, &piece(n - 1), &big_n)?;
        let pos: BTreeMap<&(usize, Monomial), usize> =
            big_n.iter().enumerate().map(|(k, b)| (b, k)).collect();
        let mut sub = QMatrix::zeros(big_n.len(), bn.len());
        for (c, b) in bn.iter().enumerate() {
            sub.set(pos[b], c, q(1));
        }
        Ok(kernel_dim - intersection_dim(&image, &sub))
    }

    /// Every homology group vanishes (within the bound, for infinite owners).
    pub fn is_acyclic(&self, bound: Option<u32>) -> Result<bool> {
        Ok(self.homology_all(bound)?.values().all(|h| h.dimension == 0))
    }
}

fn undual(s: String) -> String {
    s.strip_suffix("^∨^∨").map(str::to_string).unwrap_or(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    /// Owner finite-dimensional over ℚ; no truncation.
    Exact,
    /// Homogeneous complex; graded pieces of internal degree ≤ bound.
    Graded { bound: u32 },
    /// Inhomogeneous complex; kernels and images cut at polynomial degree ≤ bound.
    Naive { bound: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomologyReport {
    pub degree: i32,
    pub dimension: usize,
    pub truncation: Truncation,
}

/// A map of complexes over the same owner.
#[derive(Clone, Debug)]
pub struct ChainMap {
    pub source: PerfectComplex,
    pub target: PerfectComplex,
    maps: BTreeMap<i32, PolyMatrix>,
}

impl ChainMap {
    pub fn new(
        source: PerfectComplex,
        target: PerfectComplex,
        maps: Vec<(i32, PolyMatrix)>,
    ) -> Result<Self> {
        source.check_owner(&target)?;
        let owner = source.owner.clone();
        let mut m = BTreeMap::new();
        for (n, f) in maps {
            if (f.rows, f.cols) != (target.rank(n), source.rank(n)) {
                if f.is_zero() {
                    continue;
                }
                return Err(Error::NotAChainMap(format!(
                    "component in degree {n} has shape {}×{}, expected {}×{}",
                    f.rows,
                    f.cols,
                    target.rank(n),
                    source.rank(n)
                )));
            }
            m.insert(n, f.map_entries(|p| owner.reduce(p)));
        }
        let cm = ChainMap {
            source,
            target,
            maps: m,
        };
        for n in cm.source.span(&cm.target) {
            let lhs = cm.target.diff(n).mul(&owner, &cm.component(n));
            let rhs = cm.component(n + 1).mul(&owner, &cm.source.diff(n));
            if lhs != rhs {
                return Err(Error::NotAChainMap(format!("d∘f ≠ f∘d in degree {n}")));
            }
        }
        Ok(cm)
    }

    pub fn identity(c: &PerfectComplex) -> Self {
        let maps = c
            .terms
            .iter()
            .map(|(n, l)| (*n, PolyMatrix::identity(&c.owner, l.len())))
            .collect();
        ChainMap {
            source: c.clone(),
            target: c.clone(),
            maps,
        }
    }

    pub fn zero(source: &PerfectComplex, target: &PerfectComplex) -> Self {
        ChainMap {
            source: source.clone(),
            target: target.clone(),
            maps: BTreeMap::new(),
        }
    }

    pub fn component(&self, n: i32) -> PolyMatrix {
        self.maps
            .get(&n)
            .cloned()
            .unwrap_or_else(|| PolyMatrix::zeros(self.target.rank(n), self.source.rank(n)))
    }

    pub fn compose(&self, after: &ChainMap) -> Result<ChainMap> {
        let owner = self.source.owner.clone();
        let maps = self
            .source
            .span(&after.target)
            .into_iter()
            .map(|n| (n, after.component(n).mul(&owner, &self.component(n))))
            .collect();
        ChainMap::new(self.source.clone(), after.target.clone(), maps)
    }

    pub fn base_change(&self, f: &AlgebraMap) -> Result<ChainMap> {
        ChainMap::new(
            self.source.base_change(f)?,
            self.target.base_change(f)?,
            self.maps
                .iter()
                .map(|(n, m)| (*n, m.map_entries(|p| f.apply(p))))
                .collect(),
        )
    }

    pub fn dual(&self) -> Result<ChainMap> {
        ChainMap::new(
            self.target.dual(),
            self.source.dual(),
            self.maps.iter().map(|(n, m)| (-n, m.transpose())).collect(),
        )
    }

    /// Mapping cone; `cone(f)^n = C^{n+1} ⊕ D^n`.
    pub fn cone(&self) -> Result<PerfectComplex> {
        let (c, d) = (&self.source, &self.target);
        let mut degrees: BTreeSet<i32> = d.terms.keys().copied().collect();
        degrees.extend(c.terms.keys().map(|n| n - 1));
        let mut terms = Vec::new();
        let mut diffs = Vec::new();
        for &n in &degrees {
            let mut labels: Vec<String> =
                c.labels(n + 1).iter().map(|l| format!("s({l})")).collect();
            labels.extend(d.labels(n).iter().cloned());
            terms.push((n, labels));
            let (cs, ds) = (c.rank(n + 1), d.rank(n));
            let (ct, dt) = (c.rank(n + 2), d.rank(n + 1));
            let mut m = PolyMatrix::zeros(ct + dt, cs + ds);
            m.put(0, 0, &c.diff(n + 1).scale(&q(-1)));
            m.put(ct, 0, &self.component(n + 1));
            m.put(ct, cs, &d.diff(n));
            diffs.push((n, m));
        }
        PerfectComplex::new(c.owner.clone(), terms, diffs)
    }

    /// Quasi-isomorphism test: the cone is acyclic (inside the bound).
    pub fn is_quasi_isomorphism(&self, bound: Option<u32>) -> Result<bool> {
        self.cone()?.is_acyclic(bound)
    }

    /// Block matrix `[f g]` out of a direct sum, or `[f; g]` into one.
    pub fn direct_sum(&self, other: &ChainMap) -> Result<ChainMap> {
        let source = self.source.direct_sum(&other.source)?;
        let target = self.target.direct_sum(&other.target)?;
        let maps = source
            .span(&target)
            .into_iter()
            .map(|n| {
                let (a, b) = (self.component(n), other.component(n));
                let mut m = PolyMatrix::zeros(a.rows + b.rows, a.cols + b.cols);
                m.put(0, 0, &a);
                m.put(a.rows, a.cols, &b);
                (n, m)
            })
            .collect();
        ChainMap::new(source, target, maps)
    }
}

/// Whether `c` lives over ℚ itself.
pub fn is_rational_owner(c: &PerfectComplex) -> bool {
    c.owner.nvars() == 0 && !c.owner.is_zero_ring()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qq() -> Arc<AlgebraPresentation> {
        AlgebraPresentation::rational()
    }

    fn lbl(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identity_map_is_exact() {
        let o = qq();
        let c = PerfectComplex::new(
            o.clone(),
            vec![(-1, lbl(&["a"])), (0, lbl(&["b"]))],
            vec![(-1, PolyMatrix::parse(&o, &[&["1"]]).unwrap())],
        )
        .unwrap();
        assert_eq!(c.homology(0, None).unwrap().dimension, 0);
        assert_eq!(c.homology(-1, None).unwrap().dimension, 0);
    }

    #[test]
    fn koszul_complex_of_x_has_cokernel_of_dimension_one() {
        let b = AlgebraPresentation::polynomial("B", &["x"]).unwrap();
        let c = PerfectComplex::new(
            b.clone(),
            vec![(-1, lbl(&["e"])), (0, lbl(&["1"]))],
            vec![(-1, PolyMatrix::parse(&b, &[&["x"]]).unwrap())],
        )
        .unwrap();
        // oracle: multiplication by x on span{1..x^D} → cokernel spanned by 1, kernel 0
        for d in 1..5u32 {
            let rows: Vec<Vec<Scalar>> = (0..=d)
                .map(|i| {
                    (0..d)
                        .map(|j| if i == j + 1 { q(1) } else { q(0) })
                        .collect()
                })
                .collect();
            let mult = QMatrix::from_rows(rows);
            let coker = (d as usize + 1) - mult.rank();
            assert_eq!(c.homology(0, Some(d)).unwrap().dimension, coker);
            assert_eq!(c.homology(-1, Some(d)).unwrap().dimension, 0);
        }
        assert!(matches!(
            c.homology(0, None),
            Err(Error::MissingBound { .. })
        ));
    }

    #[test]
    fn annihilator_of_two_x_on_dual_numbers() {
        let b = AlgebraPresentation::quotient("B", &["x"], &["x^2"]).unwrap();
        let c = PerfectComplex::new(
            b.clone(),
            vec![(-1, lbl(&["e"])), (0, lbl(&["dx"]))],
            vec![(-1, PolyMatrix::parse(&b, &[&["2*x"]]).unwrap())],
        )
        .unwrap();
        // oracle: basis {1, x}; 2x·1 = 2x, 2x·x = 0 → rank 1
        let m = QMatrix::from_rows(vec![vec![q(0), q(0)], vec![q(2), q(0)]]);
        assert_eq!(c.homology(-1, None).unwrap().dimension, 2 - m.rank());
        assert_eq!(c.homology(0, None).unwrap().dimension, 2 - m.rank());
        assert_eq!(c.homology(0, None).unwrap().truncation, Truncation::Exact);
    }

    #[test]
    fn double_dual_is_identity_entrywise() {
        let b = AlgebraPresentation::polynomial("B", &["x"]).unwrap();
        let e = PerfectComplex::new(
            b.clone(),
            vec![(-1, lbl(&["e"])), (0, lbl(&["1"]))],
            vec![(-1, PolyMatrix::parse(&b, &[&["x"]]).unwrap())],
        )
        .unwrap();
        let dd = e.dual().dual();
        assert!(dd.same_as(&e));
        assert_eq!(dd.labels(-1), e.labels(-1));
        assert_eq!(e.dual().rank(1), 1);
    }

    #[test]
    fn cone_of_identity_is_acyclic() {
        let b = AlgebraPresentation::quotient("B", &["x"], &["x^2"]).unwrap();
        let e = PerfectComplex::new(
            b.clone(),
            vec![(-1, lbl(&["e"])), (0, lbl(&["dx"]))],
            vec![(-1, PolyMatrix::parse(&b, &[&["2*x"]]).unwrap())],
        )
        .unwrap();
        assert!(ChainMap::identity(&e)
            .cone()
            .unwrap()
            .is_acyclic(None)
            .unwrap());
        assert!(!ChainMap::zero(&e, &e).is_quasi_isomorphism(None).unwrap());
    }

    #[test]
    fn shift_moves_degree_zero_to_minus_one() {
        let b = AlgebraPresentation::polynomial("B", &["x"]).unwrap();
        let c = PerfectComplex::free(b, 0, lbl(&["1"])).unwrap();
        assert_eq!(c.shift(1).degrees(), vec![-1]);
        assert_eq!(c.shift(-1).degrees(), vec![1]);
    }

    #[test]
    fn tensor_of_koszul_complexes_squares_to_zero() {
        let b = AlgebraPresentation::polynomial("B", &["x", "y"]).unwrap();
        let kx = PerfectComplex::new(
            b.clone(),
            vec![(-1, lbl(&["e"])), (0, lbl(&["1"]))],
            vec![(-1, PolyMatrix::parse(&b, &[&["x"]]).unwrap())],
        )
        .unwrap();
        let ky = PerfectComplex::new(
            b.clone(),
            vec![(-1, lbl(&["f"])), (0, lbl(&["1"]))],
            vec![(-1, PolyMatrix::parse(&b, &[&["y"]]).unwrap())],
        )
        .unwrap();
        let k = kx.tensor(&ky).unwrap();
        assert_eq!(k.ranks(), BTreeMap::from([(-2, 1), (-1, 2), (0, 1)]));
        // Koszul complex of a regular sequence resolves ℚ[x,y]/(x,y): H^0 = ℚ
        assert_eq!(k.homology(0, Some(4)).unwrap().dimension, 1);
        assert_eq!(k.homology(-1, Some(4)).unwrap().dimension, 0);
        assert_eq!(k.homology(-2, Some(4)).unwrap().dimension, 0);
    }

    #[test]
    fn owner_mismatch_is_rejected() {
        let a = AlgebraPresentation::polynomial("A", &["x"]).unwrap();
        let b = AlgebraPresentation::polynomial("B", &["y"]).unwrap();
        let ca = PerfectComplex::free(a, 0, lbl(&["1"])).unwrap();
        let cb = PerfectComplex::free(b, 0, lbl(&["1"])).unwrap();
        assert!(matches!(
            ca.tensor(&cb),
            Err(Error::IncompatibleOwner { .. })
        ));
    }
}
