//! Graded mixed algebras over a presentation: generators with (degree, weight),
//! an internal differential `d` and a mixed differential `ε` given on generators
//! and extended by the Leibniz rule.
//!
//! `d` raises the cohomological degree by one and keeps the weight; `ε` lowers
//! the degree by one and raises the weight by one. Both are odd derivations.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::cotangent_derham::de_rham;
use crate::error::{Error, Result};
use crate::exact_core::complex::{ChainMap, PerfectComplex, PolyMatrix};
use crate::exact_core::groebner::GroebnerBasis;
use crate::exact_core::linalg::QMatrix;
use crate::exact_core::sym::graded_sym_dim;
use crate::exact_core::{AlgebraMap, AlgebraPresentation, Monomial, Poly, PolyRing, VarSpec};
use crate::exact_core::scalar::{q, sign};
use crate::Window;

/// Structure map out of another graded mixed algebra, typically a de Rham algebra.
#[derive(Clone, Debug)]
pub struct Structure {
    pub source: Arc<GradedMixedPresentation>,
    /// Image of every variable of `source`, in the ring of the owning algebra.
    pub images: Vec<Poly>,
}

#[derive(Clone, Debug)]
pub struct GradedMixedPresentation {
    pub name: String,
    pub owner: Arc<AlgebraPresentation>,
    ring: PolyRing,
    gb: GroebnerBasis,
    d: Vec<Poly>,
    eps: Vec<Poly>,
    pub structure: Option<Structure>,
    pub provenance: Vec<String>,
}

/// Builder taking generator data as text.
pub struct GradedMixedBuilder {
    name: String,
    owner: Arc<AlgebraPresentation>,
    gens: Vec<VarSpec>,
    d: Vec<(String, String)>,
    eps: Vec<(String, String)>,
}

impl GradedMixedBuilder {
    pub fn generator(mut self, name: &str, degree: i32, weight: u32) -> Self {
        self.gens.push(VarSpec::new(name, degree, weight));
        self
    }

    pub fn d(mut self, gen: &str, image: &str) -> Self {
        self.d.push((gen.into(), image.into()));
        self
    }

    pub fn eps(mut self, gen: &str, image: &str) -> Self {
        self.eps.push((gen.into(), image.into()));
        self
    }

    pub fn build(self) -> Result<GradedMixedPresentation> {
        let ring = self.owner.ring().extended(self.gens.clone());
        let n = ring.nvars();
        let start = self.owner.nvars();
        let mut d = vec![Poly::zero(); self.gens.len()];
        for (g, src) in &self.d {
            let i = ring
                .index_of(g)
                .filter(|&i| i >= start)
                .ok_or_else(|| Error::InvalidPresentation(format!("d on unknown generator `{g}`")))?;
            d[i - start] = ring.parse(src)?;
        }
        let mut eps = vec![Poly::zero(); n];
        for (g, src) in &self.eps {
            let i = ring
                .index_of(g)
                .ok_or_else(|| Error::InvalidPresentation(format!("ε on unknown generator `{g}`")))?;
            eps[i] = ring.parse(src)?;
        }
        GradedMixedPresentation::new(&self.name, self.owner, self.gens, d, eps)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub passed: bool,
    pub checked: usize,
    pub first_failure: Option<String>,
    pub residue: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MixedVerificationReport {
    pub window: Window,
    pub monomials: usize,
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
}

impl MixedVerificationReport {
    pub fn first_failure(&self) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuasiFreeRow {
    pub weight: u32,
    pub rank: usize,
    pub sym_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuasiFreeReport {
    pub weight_zero_is_owner: bool,
    pub rows: Vec<QuasiFreeRow>,
    pub passed: bool,
}

/// The underlying graded algebra of a graded mixed algebra.
#[derive(Clone, Debug)]
pub struct GradedAlgebra {
    pub name: String,
    pub owner: Arc<AlgebraPresentation>,
    pub ring: PolyRing,
    pub d: Vec<Poly>,
}

impl GradedAlgebra {
    pub fn with_zero_mixed(&self) -> Result<GradedMixedPresentation> {
        let start = self.owner.nvars();
        let gens = self.ring.vars[start..].to_vec();
        let d = self.d[start..].to_vec();
        let eps = vec![Poly::zero(); self.ring.nvars()];
        GradedMixedPresentation::new(&self.name, self.owner.clone(), gens, d, eps)
    }

    pub fn generators(&self) -> &[VarSpec] {
        &self.ring.vars[self.owner.nvars()..]
    }
}

impl GradedMixedPresentation {
    pub fn builder(name: &str, owner: Arc<AlgebraPresentation>) -> GradedMixedBuilder {
        GradedMixedBuilder { name: name.into(), owner, gens: vec![], d: vec![], eps: vec![] }
    }

    /// `d_gens` gives `d` on the new generators (the owner's own differential is
    /// inherited); `eps` gives `ε` on every variable, owner variables first.
    pub fn new(
        name: &str,
        owner: Arc<AlgebraPresentation>,
        gens: Vec<VarSpec>,
        d_gens: Vec<Poly>,
        eps: Vec<Poly>,
    ) -> Result<Self> {
        let ring = owner.ring().extended(gens.clone());
        let n = ring.nvars();
        let names: BTreeSet<&str> = ring.vars.iter().map(|v| v.name.as_str()).collect();
        if names.len() != n {
            return Err(Error::InvalidPresentation(format!("duplicate generator name in `{name}`")));
        }
        if d_gens.len() != gens.len() || eps.len() != n {
            return Err(Error::InvalidPresentation("generator data of the wrong length".into()));
        }
        for v in &gens {
            if v.weight == 0 && v.degree != 0 {
                return Err(Error::InvalidPresentation(format!(
                    "weight-0 generator `{}` must have degree 0",
                    v.name
                )));
            }
        }
        let gb = GroebnerBasis { basis: owner.gb().basis.iter().map(|p| p.padded(n)).collect() };
        let mut d: Vec<Poly> = owner.differential().iter().map(|p| p.padded(n)).collect();
        d.extend(d_gens);
        let mut out = GradedMixedPresentation {
            name: name.into(),
            owner,
            ring,
            gb,
            d,
            eps,
            structure: None,
            provenance: Vec::new(),
        };
        out.d = out.d.iter().map(|p| out.reduce(p)).collect();
        out.eps = out.eps.iter().map(|p| out.reduce(p)).collect();
        Ok(out)
    }

    pub fn ring(&self) -> &PolyRing {
        &self.ring
    }

    pub fn nvars(&self) -> usize {
        self.ring.nvars()
    }

    pub fn gen_start(&self) -> usize {
        self.owner.nvars()
    }

    pub fn generators(&self) -> &[VarSpec] {
        &self.ring.vars[self.gen_start()..]
    }

    pub fn d_images(&self) -> &[Poly] {
        &self.d
    }

    pub fn eps_images(&self) -> &[Poly] {
        &self.eps
    }

    pub fn reduce(&self, p: &Poly) -> Poly {
        self.gb.reduce(&self.ring, p)
    }

    pub fn parse(&self, src: &str) -> Result<Poly> {
        Ok(self.reduce(&self.ring.parse(src)?))
    }

    pub fn fmt(&self, p: &Poly) -> String {
        self.ring.fmt(p)
    }

    pub fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        self.reduce(&self.ring.mul(a, b))
    }

    pub fn d(&self, p: &Poly) -> Poly {
        self.reduce(&self.ring.apply_derivation(&self.d, true, p))
    }

    pub fn eps(&self, p: &Poly) -> Poly {
        self.reduce(&self.ring.apply_derivation(&self.eps, true, p))
    }

    pub fn var(&self, name: &str) -> Result<Poly> {
        self.ring.var_named(name)
    }

    /// Indices of the variables coming from the base `A` of the owner.
    pub fn base_indices(&self) -> std::ops::Range<usize> {
        0..self.owner.own_start()
    }

    /// Same ring and differentials.
    pub fn same_data(&self, other: &GradedMixedPresentation) -> bool {
        self.owner.same_as(&other.owner)
            && self.ring == other.ring
            && self.d == other.d
            && self.eps == other.eps
    }

    /// The `mixed NAME over OWNER { ... }` block that rebuilds this presentation.
    pub fn to_dsl(&self) -> String {
        let mut out = format!("mixed {} over {} {{\n", self.name, self.owner.name);
        for v in self.generators() {
            out.push_str(&format!("  gen {} : {}, {}\n", v.name, v.degree, v.weight));
        }
        let start = self.gen_start();
        for (k, v) in self.generators().iter().enumerate() {
            let p = &self.d[start + k];
            if !p.is_zero() {
                out.push_str(&format!("  d {} -> {}\n", v.name, self.fmt(p)));
            }
        }
        for (i, p) in self.eps.iter().enumerate() {
            if !p.is_zero() {
                out.push_str(&format!("  eps {} -> {}\n", self.ring.vars[i].name, self.fmt(p)));
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn forget_gr(&self) -> GradedAlgebra {
        GradedAlgebra {
            name: self.name.clone(),
            owner: self.owner.clone(),
            ring: self.ring.clone(),
            d: self.d.clone(),
        }
    }

    pub fn with_structure(mut self, source: Arc<GradedMixedPresentation>, images: Vec<Poly>) -> Result<Self> {
        let images: Vec<Poly> = images.iter().map(|p| self.reduce(p)).collect();
        let me = Arc::new(self.clone());
        GmMap::new(source.clone(), me, images.clone())?;
        self.structure = Some(Structure { source, images });
        Ok(self)
    }

    /// Monomials inside the window, standard modulo the owner's relations, in
    /// the order (weight, polynomial degree, monomial).
    pub fn window_monomials(&self, w: &Window) -> Vec<Monomial> {
        let n = self.nvars();
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        self.enumerate(0, w.poly_degree, w.weight, &mut cur, &mut out);
        out.retain(|m| w.contains_degree(self.ring.monomial_degree(m)));
        out.sort_by(|a, b| {
            (self.ring.monomial_weight(a), a.clone()).cmp(&(self.ring.monomial_weight(b), b.clone()))
        });
        out
    }

    fn enumerate(&self, i: usize, deg_left: u32, w_left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == cur.len() {
            let m = Monomial(cur.clone());
            if self.gb.is_standard(&m) {
                out.push(m);
            }
            return;
        }
        let v = &self.ring.vars[i];
        let mut e = 0;
        loop {
            if e > deg_left || e * v.weight > w_left || (v.is_odd() && e > 1) {
                break;
            }
            cur[i] = e;
            self.enumerate(i + 1, deg_left - e, w_left - e * v.weight, cur, out);
            e += 1;
        }
        cur[i] = 0;
    }

    /// Finitely many nonzero monomials: every even variable is nilpotent.
    fn finite_bound(&self) -> Option<u32> {
        let lms = self.gb.leading_monomials();
        let mut total = 0;
        for (i, v) in self.ring.vars.iter().enumerate() {
            if v.is_odd() {
                total += 1;
                continue;
            }
            let pure = lms
                .iter()
                .filter(|m| m.0[i] > 0 && m.0.iter().enumerate().all(|(j, e)| j == i || *e == 0))
                .map(|m| m.0[i])
                .min()?;
            total += pure - 1;
        }
        Some(total)
    }

    /// Checks `d² = 0`, `ε² = 0`, `dε + εd = 0`, both Leibniz rules, homogeneity
    /// of the generator data, `ε = 0` on the base, and compatibility with the
    /// relations, on every monomial of the window.
    pub fn verify_mixed(&self, window: Option<&Window>) -> Result<MixedVerificationReport> {
        let window = match window {
            Some(w) => *w,
            None => {
                let b = self
                    .finite_bound()
                    .ok_or_else(|| Error::MissingBound { owner: self.name.clone() })?;
                let w = self.ring.vars.iter().map(|v| v.weight).sum::<u32>() * b.max(1);
                Window { weight: w, poly_degree: b, degree_lo: i32::MIN / 2, degree_hi: i32::MAX / 2 }
            }
        };
        let monos = self.window_monomials(&window);
        let polys: Vec<Poly> = monos.iter().map(|m| Poly::from_term(m.clone(), q(1))).collect();
        let mut checks = Vec::new();

        checks.push(self.check_homogeneity());
        checks.push(self.check_base_linearity());
        checks.push(self.check_relations());
        checks.push(self.check_each("d∘d = 0", &monos, &polys, |p| self.d(&self.d(p))));
        checks.push(self.check_each("ε∘ε = 0", &monos, &polys, |p| self.eps(&self.eps(p))));
        checks.push(self.check_each("d∘ε + ε∘d = 0", &monos, &polys, |p| {
            self.d(&self.eps(p)).add(&self.eps(&self.d(p)))
        }));
        checks.push(self.check_leibniz("leibniz d", &window, &monos, |p| self.d(p)));
        checks.push(self.check_leibniz("leibniz ε", &window, &monos, |p| self.eps(p)));
        let passed = checks.iter().all(|c| c.passed);
        Ok(MixedVerificationReport { window, monomials: monos.len(), checks, passed })
    }

    fn check_each(
        &self,
        identity: &str,
        monos: &[Monomial],
        polys: &[Poly],
        f: impl Fn(&Poly) -> Poly,
    ) -> IdentityCheck {
        for (m, p) in monos.iter().zip(polys) {
            let r = f(p);
            if !r.is_zero() {
                return IdentityCheck {
                    identity: identity.into(),
                    passed: false,
                    checked: monos.len(),
                    first_failure: Some(self.ring.fmt_monomial(m)),
                    residue: Some(self.fmt(&r)),
                };
            }
        }
        pass(identity, monos.len())
    }

    fn check_leibniz(
        &self,
        identity: &str,
        w: &Window,
        monos: &[Monomial],
        op: impl Fn(&Poly) -> Poly,
    ) -> IdentityCheck {
        let mut checked = 0;
        let image: Vec<Poly> = monos.iter().map(|m| op(&Poly::from_term(m.clone(), q(1)))).collect();
        for (ia, a) in monos.iter().enumerate() {
            if a.is_one() {
                continue;
            }
            for (ib, b) in monos.iter().enumerate().skip(ia) {
                if b.is_one()
                    || a.total_degree() + b.total_degree() > w.poly_degree
                    || self.ring.monomial_weight(a) + self.ring.monomial_weight(b) > w.weight
                {
                    continue;
                }
                let pa = Poly::from_term(a.clone(), q(1));
                let pb = Poly::from_term(b.clone(), q(1));
                let prod = self.mul(&pa, &pb);
                let lhs = op(&prod);
                let s = sign(self.ring.monomial_degree(a) as i64);
                let rhs = self.mul(&image[ia], &pb).add(&self.mul(&pa, &image[ib]).scale(&s));
                checked += 1;
                let diff = lhs.sub(&rhs);
                if !diff.is_zero() {
                    return IdentityCheck {
                        identity: identity.into(),
                        passed: false,
                        checked,
                        first_failure: Some(format!(
                            "{} · {}",
                            self.ring.fmt_monomial(a),
                            self.ring.fmt_monomial(b)
                        )),
                        residue: Some(self.fmt(&diff)),
                    };
                }
            }
        }
        pass(identity, checked)
    }

    fn check_homogeneity(&self) -> IdentityCheck {
        let n = self.nvars();
        for i in 0..n {
            let v = &self.ring.vars[i];
            for (img, want, what) in [
                (&self.d[i], (v.degree + 1, v.weight), "d"),
                (&self.eps[i], (v.degree - 1, v.weight + 1), "ε"),
            ] {
                match self.ring.bidegree(img) {
                    Some(None) => {}
                    Some(Some(bd)) if bd == want => {}
                    _ => {
                        return IdentityCheck {
                            identity: "homogeneity".into(),
                            passed: false,
                            checked: n,
                            first_failure: Some(v.name.clone()),
                            residue: Some(format!("{what}({}) = {}", v.name, self.fmt(img))),
                        }
                    }
                }
            }
        }
        pass("homogeneity", n)
    }

    fn check_base_linearity(&self) -> IdentityCheck {
        let r = self.base_indices();
        for i in r.clone() {
            if !self.eps[i].is_zero() {
                return IdentityCheck {
                    identity: "ε vanishes on the base".into(),
                    passed: false,
                    checked: r.len(),
                    first_failure: Some(self.ring.vars[i].name.clone()),
                    residue: Some(self.fmt(&self.eps[i])),
                };
            }
        }
        pass("ε vanishes on the base", r.len())
    }

    fn check_relations(&self) -> IdentityCheck {
        let rels: Vec<Poly> = self.owner.relations().iter().map(|p| p.padded(self.nvars())).collect();
        for r in &rels {
            for (what, img) in [("d", self.d(r)), ("ε", self.eps(r))] {
                if !img.is_zero() {
                    return IdentityCheck {
                        identity: "relations preserved".into(),
                        passed: false,
                        checked: rels.len(),
                        first_failure: Some(self.fmt(r)),
                        residue: Some(format!("{what} = {}", self.fmt(&img))),
                    };
                }
            }
        }
        pass("relations preserved", rels.len())
    }

    /// Weight-0 piece equals the owner and `Sym_{F(0)} F(1) → F` is a rank
    /// equality in every weight `≤ max_weight`.
    pub fn quasi_free(&self, max_weight: u32) -> QuasiFreeReport {
        let gens = self.generators();
        let weight_zero_is_owner = gens.iter().all(|v| v.weight > 0);
        let positive: Vec<VarSpec> = gens.iter().filter(|v| v.weight > 0).cloned().collect();
        let even1 = positive.iter().filter(|v| v.weight == 1 && !v.is_odd()).count();
        let odd1 = positive.iter().filter(|v| v.weight == 1 && v.is_odd()).count();
        let rows: Vec<QuasiFreeRow> = (0..=max_weight)
            .map(|n| QuasiFreeRow {
                weight: n,
                rank: crate::exact_core::sym::graded_monomials(&positive, n)
                    .into_iter()
                    .filter(|e| weighted(&positive, e) == n)
                    .count(),
                sym_rank: graded_sym_dim(even1, odd1, n as usize),
            })
            .collect();
        let passed = weight_zero_is_owner && rows.iter().all(|r| r.rank == r.sym_rank);
        QuasiFreeReport { weight_zero_is_owner, rows, passed }
    }

    /// Monomials of weight `n` in the generators, grouped by degree.
    pub fn weight_basis(&self, n: u32) -> Result<BTreeMap<i32, Vec<Monomial>>> {
        let start = self.gen_start();
        if self.generators().iter().any(|v| v.weight == 0) {
            return Err(Error::UnsupportedInput(format!(
                "`{}` has weight-0 generators; weight pieces are not finite over the owner",
                self.name
            )));
        }
        let mut out: BTreeMap<i32, Vec<Monomial>> = BTreeMap::new();
        for e in crate::exact_core::sym::graded_monomials(self.generators(), n) {
            if weighted(self.generators(), &e) != n {
                continue;
            }
            let mut full = vec![0; start];
            full.extend(e);
            let m = Monomial(full);
            out.entry(self.ring.monomial_degree(&m)).or_default().push(m);
        }
        for v in out.values_mut() {
            v.sort_by(|a, b| b.cmp(a));
        }
        Ok(out)
    }

    /// The weight-`n` piece as a complex of free modules over a discrete owner.
    pub fn weight_complex(&self, n: u32) -> Result<PerfectComplex> {
        let by_degree = self.weight_basis(n)?;
        let nb = self.gen_start();
        let mut terms = Vec::new();
        let mut diffs = Vec::new();
        for (&k, src) in &by_degree {
            terms.push((k, src.iter().map(|m| self.ring.fmt_monomial(m)).collect()));
            let tgt = by_degree.get(&(k + 1)).cloned().unwrap_or_default();
            let pos: BTreeMap<&Monomial, usize> = tgt.iter().enumerate().map(|(r, m)| (m, r)).collect();
            let mut mat = PolyMatrix::zeros(tgt.len(), src.len());
            for (c, m) in src.iter().enumerate() {
                let img = self.d(&Poly::from_term(m.clone(), q(1)));
                let mut col: BTreeMap<usize, Poly> = BTreeMap::new();
                for (mono, coeff) in &img.terms {
                    let (b, s) = split_monomial(mono, nb);
                    let r = *pos.get(&s).ok_or_else(|| {
                        Error::UnsupportedInput("d does not preserve the weight pieces".into())
                    })?;
                    col.entry(r).or_default().add_term(b, coeff.clone());
                }
                for (r, p) in col {
                    mat.set(r, c, p);
                }
            }
            if !tgt.is_empty() {
                diffs.push((k, mat));
            }
        }
        PerfectComplex::new(self.owner.clone(), terms, diffs)
    }

    /// Cotangent complex `F(1)[-1]`.
    pub fn cotangent(&self) -> Result<PerfectComplex> {
        Ok(self.weight_complex(1)?.shift(-1))
    }

    /// Cohomology of the totalisation `d + (-1)^w ε`, graded by
    /// `degree + 2·weight`, on the ℚ-span of the window monomials.
    pub fn total_cohomology(&self, w: &Window) -> Result<BTreeMap<i32, usize>> {
        let monos = self.window_monomials(w);
        let total = |m: &Monomial| self.ring.monomial_degree(m) + 2 * self.ring.monomial_weight(m) as i32;
        let mut by_total: BTreeMap<i32, Vec<Monomial>> = BTreeMap::new();
        for m in &monos {
            by_total.entry(total(m)).or_default().push(m.clone());
        }
        let delta = |m: &Monomial| {
            let p = Poly::from_term(m.clone(), q(1));
            let s = sign(self.ring.monomial_weight(m) as i64);
            self.d(&p).add(&self.eps(&p).scale(&s))
        };
        // images of each total degree, with coordinates over every monomial hit
        let mut images: BTreeMap<i32, Vec<Poly>> = BTreeMap::new();
        for (t, ms) in &by_total {
            images.insert(*t, ms.iter().map(delta).collect());
        }
        let mut out = BTreeMap::new();
        for (t, ms) in &by_total {
            // coordinates of C^{t+1}: window monomials plus anything δ reaches
            let mut next: BTreeSet<Monomial> = by_total.get(&(t + 1)).cloned().unwrap_or_default().into_iter().collect();
            for p in &images[t] {
                next.extend(p.terms.keys().cloned());
            }
            let next: Vec<Monomial> = next.into_iter().collect();
            let d_out = columns(&next, &images[t]);
            let kernel = ms.len() - d_out.rank();
            let here: BTreeSet<Monomial> = ms.iter().cloned().collect();
            let mut amb: BTreeSet<Monomial> = here.clone();
            let prev = images.get(&(t - 1)).cloned().unwrap_or_default();
            for p in &prev {
                amb.extend(p.terms.keys().cloned());
            }
            let amb: Vec<Monomial> = amb.into_iter().collect();
            let img = columns(&amb, &prev);
            let inside: Vec<Poly> = ms.iter().map(|m| Poly::from_term(m.clone(), q(1))).collect();
            let sub = columns(&amb, &inside);
            let boundary = crate::exact_core::linalg::intersection_dim(&img, &sub);
            out.insert(*t, kernel - boundary);
        }
        Ok(out)
    }
}

fn pass(identity: &str, checked: usize) -> IdentityCheck {
    IdentityCheck { identity: identity.into(), passed: true, checked, first_failure: None, residue: None }
}

fn weighted(vars: &[VarSpec], e: &[u32]) -> u32 {
    vars.iter().zip(e).map(|(v, x)| v.weight * x).sum()
}

fn columns(basis: &[Monomial], vs: &[Poly]) -> QMatrix {
    let pos: BTreeMap<&Monomial, usize> = basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut m = QMatrix::zeros(basis.len(), vs.len());
    for (c, p) in vs.iter().enumerate() {
        for (mono, v) in &p.terms {
            m.set(pos[mono], c, v.clone());
        }
    }
    m
}

pub(crate) fn split_monomial(m: &Monomial, nb: usize) -> (Monomial, Monomial) {
    let b = Monomial(m.0[..nb].to_vec());
    let mut s = m.clone();
    for e in &mut s.0[..nb] {
        *e = 0;
    }
    (b, s)
}

/// A map of graded mixed algebras given on generators.
#[derive(Clone, Debug)]
pub struct GmMap {
    pub source: Arc<GradedMixedPresentation>,
    pub target: Arc<GradedMixedPresentation>,
    pub images: Vec<Poly>,
}

impl GmMap {
    /// Checks bidegrees, relations, and commutation with `d` and `ε` on generators.
    pub fn new(
        source: Arc<GradedMixedPresentation>,
        target: Arc<GradedMixedPresentation>,
        images: Vec<Poly>,
    ) -> Result<Self> {
        if images.len() != source.nvars() {
            return Err(Error::NotAMap(format!(
                "{} images given for {} generators",
                images.len(),
                source.nvars()
            )));
        }
        let images: Vec<Poly> = images.iter().map(|p| target.reduce(p)).collect();
        let map = GmMap { source, target, images };
        let (s, t) = (&map.source, &map.target);
        for (i, v) in s.ring.vars.iter().enumerate() {
            match t.ring.bidegree(&map.images[i]) {
                Some(None) => {}
                Some(Some(bd)) if bd == (v.degree, v.weight) => {}
                _ => {
                    return Err(Error::NotAMap(format!(
                        "image of `{}` is not of bidegree ({}, {})",
                        v.name, v.degree, v.weight
                    )))
                }
            }
        }
        for r in s.owner.relations() {
            let img = map.apply(&r.padded(s.nvars()));
            if !img.is_zero() {
                return Err(Error::NotAMap(format!("relation `{}` is not preserved", s.fmt(&r))));
            }
        }
        for (i, v) in s.ring.vars.iter().enumerate() {
            if map.apply(&s.d[i]) != t.d(&map.images[i]) {
                return Err(Error::NotAMap(format!("does not commute with d on `{}`", v.name)));
            }
            if map.apply(&s.eps[i]) != t.eps(&map.images[i]) {
                return Err(Error::NotAMap(format!("does not commute with ε on `{}`", v.name)));
            }
        }
        Ok(map)
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        self.target.reduce(&self.source.ring.substitute(p, &self.images, &self.target.ring))
    }

    pub fn identity(f: Arc<GradedMixedPresentation>) -> GmMap {
        let images = (0..f.nvars()).map(|i| f.ring.var(i)).collect();
        GmMap { source: f.clone(), target: f, images }
    }

    pub fn compose(&self, after: &GmMap) -> Result<GmMap> {
        let images = self.images.iter().map(|p| after.apply(p)).collect();
        GmMap::new(self.source.clone(), after.target.clone(), images)
    }

    /// The induced map on weight-`n` pieces, for a map that is the identity on a
    /// shared discrete owner.
    pub fn weight_chain_map(&self, n: u32) -> Result<ChainMap> {
        let (s, t) = (&self.source, &self.target);
        if !s.owner.same_as(&t.owner) || (0..s.gen_start()).any(|i| self.images[i] != t.ring.var(i)) {
            return Err(Error::NotAMap("weight pieces compare only over a fixed owner".into()));
        }
        let sc = s.weight_complex(n)?;
        let tc = t.weight_complex(n)?;
        let sb = s.weight_basis(n)?;
        let tb = t.weight_basis(n)?;
        let nb = t.gen_start();
        let mut maps = Vec::new();
        for (k, src) in &sb {
            let tgt = tb.get(k).cloned().unwrap_or_default();
            let pos: BTreeMap<&Monomial, usize> = tgt.iter().enumerate().map(|(r, m)| (m, r)).collect();
            let mut mat = PolyMatrix::zeros(tgt.len(), src.len());
            for (c, m) in src.iter().enumerate() {
                let img = self.apply(&Poly::from_term(m.clone(), q(1)));
                for (mono, coeff) in &img.terms {
                    let (b, g) = split_monomial(mono, nb);
                    let r = *pos.get(&g).ok_or_else(|| Error::NotAMap("map leaves the weight piece".into()))?;
                    let e = mat.get(r, c).add(&Poly::from_term(b, coeff.clone()));
                    mat.set(r, c, e);
                }
            }
            maps.push((*k, mat));
        }
        ChainMap::new(sc, tc, maps)
    }

    /// Restriction to weight 0 as a map of the underlying owners.
    pub fn on_owners(&self) -> Result<AlgebraMap> {
        let nb = self.target.gen_start();
        let images = (0..self.source.owner.nvars())
            .map(|i| {
                let p = &self.images[i];
                let mut out = Poly::zero();
                for (m, c) in &p.terms {
                    out.add_term(Monomial(m.0[..nb].to_vec()), c.clone());
                }
                out
            })
            .collect();
        AlgebraMap::new(self.source.owner.clone(), self.target.owner.clone(), images)
    }
}

/// `g_*F'`: the same bigraded data with the structure map precomposed with `g`.
pub fn pushforward_gm(f_prime: &GradedMixedPresentation, g: &GmMap) -> Result<GradedMixedPresentation> {
    let st = f_prime.structure.as_ref().ok_or_else(|| {
        Error::NotAMap(format!("`{}` carries no structure map to push forward", f_prime.name))
    })?;
    if !st.source.same_data(&g.target) {
        return Err(Error::NotAMap(format!(
            "structure of `{}` starts at `{}`, not at the target `{}` of the map",
            f_prime.name, st.source.name, g.target.name
        )));
    }
    let structure = GmMap { source: st.source.clone(), target: Arc::new(f_prime.clone()), images: st.images.clone() };
    let composite = g.compose(&structure)?;
    let mut out = f_prime.clone();
    out.name = format!("{}_*{}", g.source.name, f_prime.name);
    out.structure = Some(Structure { source: g.source.clone(), images: composite.images });
    out.provenance.push(format!("structure restricted along {} -> {}", g.source.name, g.target.name));
    Ok(out)
}

/// Base change of a quasi-free `F = Sym_B(F(1))` along `g : B -> B'`, realised
/// on generators: `F`'s weight-1 generators `u`, de Rham generators `v_y` of
/// `B'`, and one generator `s_x` per generator of `B`, sitting one degree below
/// `dx`, with `d(s_x) = g(ε_F x) - d_{dR}(g x)`.
pub fn pullback_gm(f: &GradedMixedPresentation, g: &AlgebraMap) -> Result<GradedMixedPresentation> {
    let b = &f.owner;
    let bp = &g.target;
    if !g.source.same_as(b) {
        return Err(Error::IncompatibleOwner { left: b.name.clone(), right: g.source.name.clone() });
    }
    if !f.quasi_free(3).passed || f.generators().iter().any(|v| v.weight != 1) {
        return Err(Error::UnsupportedInput(format!(
            "`{}` is not quasi-free on weight-1 generators; resolving it is out of scope",
            f.name
        )));
    }
    for (who, alg) in [("source", b), ("target", bp)] {
        if !alg.is_discrete() || alg.has_relations() {
            return Err(Error::UnsupportedInput(format!(
                "pull-back needs a smooth polynomial {who}; `{}` has relations or a differential",
                alg.name
            )));
        }
    }
    let nbp = bp.nvars();
    let mut names: BTreeSet<String> = bp.ring().vars.iter().map(|v| v.name.clone()).collect();
    let mut fresh = |base: String| {
        let mut n = base;
        while names.contains(&n) {
            n.push('\'');
        }
        names.insert(n.clone());
        n
    };
    let mut gens = Vec::new();
    for v in f.generators() {
        gens.push(VarSpec::new(fresh(v.name.clone()), v.degree, 1));
    }
    let nu = gens.len();
    let bp_own: Vec<usize> = bp.own_indices().collect();
    for &y in &bp_own {
        gens.push(VarSpec::new(fresh(format!("d{}", bp.ring().vars[y].name)), -1, 1));
    }
    let b_own: Vec<usize> = b.own_indices().collect();
    for &x in &b_own {
        gens.push(VarSpec::new(fresh(format!("s_{}", b.ring().vars[x].name)), -2, 1));
    }
    let ring = bp.ring().extended(gens.clone());
    let n = ring.nvars();
    let u_idx = |j: usize| nbp + j;
    let v_idx = |k: usize| nbp + nu + k;
    let s_idx = |k: usize| nbp + nu + bp_own.len() + k;

    // transport F's ring into the new ring
    let mut tau: Vec<Poly> = g.images.iter().map(|p| p.padded(n)).collect();
    for j in 0..nu {
        tau.push(ring.var(u_idx(j)));
    }
    let transport = |p: &Poly| f.ring.substitute(p, &tau, &ring);
    let dr = |p: &Poly| -> Poly {
        let mut out = Poly::zero();
        for (k, &y) in bp_own.iter().enumerate() {
            let dp = ring.partial(p, y);
            if !dp.is_zero() {
                out = out.add(&ring.mul(&dp, &ring.var(v_idx(k))));
            }
        }
        out
    };

    let mut d = vec![Poly::zero(); gens.len()];
    let mut eps = vec![Poly::zero(); n];
    for (k, &y) in bp_own.iter().enumerate() {
        eps[y] = ring.var(v_idx(k));
    }
    for j in 0..nu {
        let src = f.gen_start() + j;
        d[j] = transport(&f.d[src]);
        eps[u_idx(j)] = transport(&f.eps[src]);
    }
    for (k, &x) in b_own.iter().enumerate() {
        let gx = g.images[x].padded(n);
        d[nu + bp_own.len() + k] = transport(&f.eps[x]).sub(&dr(&gx));
    }
    let mut out = GradedMixedPresentation::new(
        &format!("{}^*{}", bp.name, f.name),
        bp.clone(),
        gens.clone(),
        d,
        eps.clone(),
    )?;
    // strict correction of ε: inherited generators first, then the s-generators
    let mut todo: Vec<(usize, Poly, String)> = (0..nu)
        .map(|j| (u_idx(j), f.d[f.gen_start() + j].clone(), gens[j].name.clone()))
        .collect();
    for (k, &x) in b_own.iter().enumerate() {
        todo.push((s_idx(k), f.eps[x].clone(), format!("s_{}", b.ring().vars[x].name)));
    }
    for (w, source, name) in todo {
        let var = out.ring.var(w);
        let target = out.eps(&out.d(&var)).add(&out.d(&out.eps(&var))).neg();
        if target.is_zero() {
            continue;
        }
        let mut cand = Poly::zero();
        for (k2, &x2) in b_own.iter().enumerate() {
            let da = f.ring.partial(&source, x2);
            if !da.is_zero() {
                cand = cand.add(&ring.mul(&ring.var(s_idx(k2)), &transport(&da)));
            }
        }
        let dc = out.d(&cand);
        let fixed = if dc == target {
            cand
        } else if dc == target.neg() {
            cand.neg()
        } else {
            return Err(Error::UnsupportedInput(format!("no strict transport of ε to `{name}`")));
        };
        eps[w] = eps[w].add(&fixed);
        out.eps = eps.iter().map(|p| out.reduce(p)).collect();
    }
    let report = out.verify_mixed(Some(&Window::default()))?;
    if let Some(c) = report.first_failure() {
        return Err(Error::UnsupportedInput(format!(
            "transported mixed structure fails `{}` at {}",
            c.identity,
            c.first_failure.clone().unwrap_or_default()
        )));
    }
    let drp = Arc::new(de_rham(bp, 3)?.gm.as_ref().clone());
    let mut images: Vec<Poly> = (0..nbp).map(|i| ring.var(i)).collect();
    for k in 0..bp_own.len() {
        images.push(ring.var(v_idx(k)));
    }
    let mut out = out.with_structure(drp, images)?;
    out.provenance.push(format!("pull-back along {} -> {} via the cotangent pushout", b.name, bp.name));
    Ok(out)
}

/// Coefficient of the generator `j` in a polynomial linear in the generators.
pub(crate) fn coefficient_of(f: &GradedMixedPresentation, p: &Poly, j: usize) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        if m.0[j] == 1 && m.0[f.gen_start()..].iter().sum::<u32>() == 1 {
            let mut b = m.clone();
            b.0[j] = 0;
            out.add_term(b, c.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qx() -> Arc<AlgebraPresentation> {
        AlgebraPresentation::polynomial("B", &["x"]).unwrap()
    }

    #[test]
    fn zero_mixed_structure_passes() {
        let f = GradedMixedPresentation::builder("F", qx()).generator("u", -1, 1).build().unwrap();
        assert!(f.verify_mixed(Some(&Window::default())).unwrap().passed);
    }

    #[test]
    fn de_rham_of_line_passes_and_eps_matches_power_rule() {
        let f = GradedMixedPresentation::builder("DR", qx())
            .generator("dx", -1, 1)
            .eps("x", "dx")
            .build()
            .unwrap();
        let r = f.verify_mixed(Some(&Window::default())).unwrap();
        assert!(r.passed, "{r:?}");
        for k in 1..=4i64 {
            let xk = f.parse(&format!("x^{k}")).unwrap();
            let want = f.parse(&format!("{k}*x^{}*dx", k - 1)).unwrap();
            assert_eq!(f.eps(&xk), want);
        }
    }

    #[test]
    fn corrupted_eps_is_caught_at_a_named_monomial() {
        let f = GradedMixedPresentation::builder("bad", qx())
            .generator("dx", -1, 1)
            .generator("w", -2, 2)
            .eps("x", "dx")
            .eps("dx", "w")
            .eps("w", "0")
            .build()
            .unwrap();
        let r = f.verify_mixed(Some(&Window::default())).unwrap();
        assert!(!r.passed);
        let e2 = r.checks.iter().find(|c| c.identity == "ε∘ε = 0").unwrap();
        assert_eq!(e2.first_failure.as_deref(), Some("x"));
        assert_eq!(e2.residue.as_deref(), Some("w"));
    }

    #[test]
    fn missing_window_on_infinite_presentation() {
        let f = GradedMixedPresentation::builder("F", qx()).build().unwrap();
        assert!(matches!(f.verify_mixed(None), Err(Error::MissingBound { .. })));
        let b = AlgebraPresentation::quotient("D", &["t"], &["t^2"]).unwrap();
        let g = GradedMixedPresentation::builder("G", b).generator("dt", -1, 1).eps("t", "dt").build().unwrap();
        // ε(t²) = 2t·dt is not zero, so the naive de Rham algebra of D is rejected
        let r = g.verify_mixed(None).unwrap();
        assert_eq!(r.first_failure().unwrap().identity, "relations preserved");
    }

    #[test]
    fn forget_then_reattach_is_identity_on_zero_mixed_objects() {
        let f = GradedMixedPresentation::builder("F", qx()).generator("u", -1, 1).build().unwrap();
        let back = f.forget_gr().with_zero_mixed().unwrap();
        assert!(back.same_data(&f));
    }

    #[test]
    fn quasi_free_fails_with_a_weight_two_generator() {
        let f = GradedMixedPresentation::builder("F", qx())
            .generator("u", -1, 1)
            .generator("w", -2, 2)
            .build()
            .unwrap();
        let r = f.quasi_free(3);
        assert!(!r.passed);
        assert_eq!(r.rows[2].rank, 1);
        assert_eq!(r.rows[2].sym_rank, 0);
    }
}
