//! Finitely presented (dg-)algebras over ℚ or over another presentation.

use std::sync::Arc;

use num::Zero;

use super::groebner::{groebner_basis, GroebnerBasis, DEFAULT_BUDGET};
use super::linalg::QMatrix;
use super::poly::{Monomial, Poly, PolyRing, VarSpec};
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// A presentation `base[own generators] / (relations)` with a differential on
/// generators. Variables of the base come first in the ring, in their own order.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraPresentation {
    pub name: String,
    pub base: Option<Arc<AlgebraPresentation>>,
    ring: PolyRing,
    own_start: usize,
    own_relations: Vec<Poly>,
    differential: Vec<Poly>,
    gb: GroebnerBasis,
    /// Set by the user when a quotient is asserted to be smooth.
    pub smooth: bool,
    /// Set when the relations are asserted to form a regular sequence.
    pub lci: bool,
}

#[derive(Clone, Debug)]
pub struct AlgebraBuilder {
    name: String,
    base: Option<Arc<AlgebraPresentation>>,
    gens: Vec<(String, i32)>,
    relations: Vec<String>,
    differential: Vec<(String, String)>,
    smooth: bool,
    lci: bool,
    budget: usize,
}

impl AlgebraBuilder {
    pub fn base(mut self, base: Arc<AlgebraPresentation>) -> Self {
        self.base = Some(base);
        self
    }

    pub fn generator(mut self, name: &str, degree: i32) -> Self {
        self.gens.push((name.to_string(), degree));
        self
    }

    pub fn generators(mut self, names: &[&str]) -> Self {
        for n in names {
            self.gens.push((n.to_string(), 0));
        }
        self
    }

    pub fn relation(mut self, src: &str) -> Self {
        self.relations.push(src.to_string());
        self
    }

    pub fn differential(mut self, gen: &str, image: &str) -> Self {
        self.differential.push((gen.to_string(), image.to_string()));
        self
    }

    pub fn smooth(mut self, yes: bool) -> Self {
        self.smooth = yes;
        self
    }

    pub fn lci(mut self, yes: bool) -> Self {
        self.lci = yes;
        self
    }

    pub fn budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn build(self) -> Result<AlgebraPresentation> {
        let mut vars = self
            .base
            .as_ref()
            .map(|b| b.ring.vars.clone())
            .unwrap_or_default();
        let own_start = vars.len();
        for (g, deg) in &self.gens {
            if *deg > 0 {
                return Err(Error::InvalidPresentation(format!(
                    "generator `{g}` has positive degree {deg}; presentations are connective"
                )));
            }
            if vars.iter().any(|v| &v.name == g) {
                return Err(Error::InvalidPresentation(format!(
                    "duplicate generator `{g}`"
                )));
            }
            vars.push(VarSpec::new(g.clone(), *deg, 0));
        }
        let ring = PolyRing::new(vars);
        let own_relations = self
            .relations
            .iter()
            .map(|r| ring.parse(r))
            .collect::<Result<Vec<_>>>()?;
        let mut differential: Vec<Poly> = match &self.base {
            Some(b) => b
                .differential
                .iter()
                .map(|p| p.padded(ring.nvars()))
                .collect(),
            None => Vec::new(),
        };
        differential.resize(ring.nvars(), Poly::zero());
        for (g, img) in &self.differential {
            let i = ring
                .index_of(g)
                .filter(|&i| i >= own_start)
                .ok_or_else(|| {
                    Error::InvalidPresentation(format!("differential on unknown generator `{g}`"))
                })?;
            differential[i] = ring.parse(img)?;
        }
        AlgebraPresentation::assemble(
            self.name,
            self.base,
            ring,
            own_start,
            own_relations,
            differential,
            self.smooth,
            self.lci,
            self.budget,
        )
    }
}

impl AlgebraPresentation {
    pub fn builder(name: &str) -> AlgebraBuilder {
        AlgebraBuilder {
            name: name.to_string(),
            base: None,
            gens: Vec::new(),
            relations: Vec::new(),
            differential: Vec::new(),
            smooth: false,
            lci: false,
            budget: DEFAULT_BUDGET,
        }
    }

    /// The ground field ℚ.
    pub fn rational() -> Arc<Self> {
        Arc::new(
            Self::builder("Q")
                .build()
                .expect("ℚ is a valid presentation"),
        )
    }

    /// ℚ[names].
    pub fn polynomial(name: &str, names: &[&str]) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::builder(name).generators(names).build()?))
    }

    /// ℚ[names]/(relations), flagged lci.
    pub fn quotient(name: &str, names: &[&str], relations: &[&str]) -> Result<Arc<Self>> {
        let mut b = Self::builder(name).generators(names).lci(true);
        for r in relations {
            b = b.relation(r);
        }
        Ok(Arc::new(b.build()?))
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        name: String,
        base: Option<Arc<AlgebraPresentation>>,
        ring: PolyRing,
        own_start: usize,
        own_relations: Vec<Poly>,
        differential: Vec<Poly>,
        smooth: bool,
        lci: bool,
        budget: usize,
    ) -> Result<Self> {
        let n = ring.nvars();
        for (i, d) in differential.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            match ring.bidegree(d) {
                Some(Some((deg, _))) if deg == ring.vars[i].degree + 1 => {}
                _ => {
                    return Err(Error::InvalidPresentation(format!(
                        "differential of `{}` is not homogeneous of degree +1",
                        ring.vars[i].name
                    )))
                }
            }
        }
        let mut relations: Vec<Poly> = base
            .as_ref()
            .map(|b| b.relations().iter().map(|p| p.padded(n)).collect())
            .unwrap_or_default();
        relations.extend(own_relations.iter().cloned());
        for r in &relations {
            if r.terms
                .keys()
                .any(|m| ring.monomial_degree(m) != 0 || ring.monomial_parity(m))
            {
                return Err(Error::InvalidPresentation(format!(
                    "relation `{}` must be built from even degree-0 generators",
                    ring.fmt(r)
                )));
            }
        }
        let gb = groebner_basis(&ring, &relations, budget)?;
        let alg = AlgebraPresentation {
            name,
            base,
            ring,
            own_start,
            own_relations,
            differential,
            gb,
            smooth,
            lci,
        };
        for i in 0..n {
            let dd = alg.d(&alg.differential[i]);
            if !dd.is_zero() {
                return Err(Error::InvalidPresentation(format!(
                    "d∘d ≠ 0 on generator `{}`: {}",
                    alg.ring.vars[i].name,
                    alg.ring.fmt(&dd)
                )));
            }
        }
        for r in &relations {
            if !alg.d(r).is_zero() {
                return Err(Error::InvalidPresentation(format!(
                    "differential does not preserve relation `{}`",
                    alg.ring.fmt(r)
                )));
            }
        }
        Ok(alg)
    }

    pub fn ring(&self) -> &PolyRing {
        &self.ring
    }

    pub fn nvars(&self) -> usize {
        self.ring.nvars()
    }

    pub fn own_start(&self) -> usize {
        self.own_start
    }

    pub fn own_indices(&self) -> std::ops::Range<usize> {
        self.own_start..self.ring.nvars()
    }

    pub fn own_relations(&self) -> &[Poly] {
        &self.own_relations
    }

    /// All relations, base first.
    pub fn relations(&self) -> Vec<Poly> {
        let mut rs: Vec<Poly> = match &self.base {
            Some(b) => b
                .relations()
                .iter()
                .map(|p| p.padded(self.nvars()))
                .collect(),
            None => Vec::new(),
        };
        rs.extend(self.own_relations.iter().cloned());
        rs
    }

    pub fn gb(&self) -> &GroebnerBasis {
        &self.gb
    }

    pub fn differential(&self) -> &[Poly] {
        &self.differential
    }

    /// Normal form modulo the relation ideal.
    pub fn reduce(&self, p: &Poly) -> Poly {
        self.gb.reduce(&self.ring, p)
    }

    pub fn parse(&self, src: &str) -> Result<Poly> {
        Ok(self.reduce(&self.ring.parse(src)?))
    }

    pub fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        self.reduce(&self.ring.mul(a, b))
    }

    /// Internal differential, extended as an odd derivation.
    pub fn d(&self, p: &Poly) -> Poly {
        self.reduce(&self.ring.apply_derivation(&self.differential, true, p))
    }

    pub fn fmt(&self, p: &Poly) -> String {
        self.ring.fmt(p)
    }

    /// All generators of degree 0 and zero differential.
    pub fn is_discrete(&self) -> bool {
        self.ring.vars.iter().all(|v| v.degree == 0) && self.differential.iter().all(Poly::is_zero)
    }

    pub fn has_relations(&self) -> bool {
        !self.relations().is_empty()
    }

    pub fn is_zero_ring(&self) -> bool {
        self.gb.is_unit_ideal()
    }

    /// Finite-dimensional over ℚ: every even generator has a pure power among
    /// the leading monomials (odd generators square to zero anyway).
    pub fn is_finite_dimensional(&self) -> bool {
        if self.is_zero_ring() {
            return true;
        }
        let lms = self.gb.leading_monomials();
        (0..self.nvars()).all(|i| {
            self.ring.is_odd(i)
                || lms
                    .iter()
                    .any(|m| m.0[i] > 0 && m.0.iter().enumerate().all(|(j, e)| j == i || *e == 0))
        })
    }

    /// Standard monomials of total degree ≤ `bound` (all of them when the
    /// algebra is finite-dimensional and `bound` is `None`).
    pub fn standard_monomials(&self, bound: Option<u32>) -> Result<Vec<Monomial>> {
        if self.is_zero_ring() {
            return Ok(Vec::new());
        }
        let bound = match bound {
            Some(b) => b,
            None if self.is_finite_dimensional() => u32::MAX,
            None => {
                return Err(Error::MissingBound {
                    owner: self.name.clone(),
                })
            }
        };
        let n = self.nvars();
        let mut out = Vec::new();
        let mut frontier = vec![Monomial::one(n)];
        let mut seen = std::collections::BTreeSet::new();
        while let Some(m) = frontier.pop() {
            if !seen.insert(m.clone()) {
                continue;
            }
            if !self.gb.is_standard(&m) || !self.ring.is_legal(&m) {
                continue;
            }
            out.push(m.clone());
            if m.total_degree() >= bound {
                continue;
            }
            for i in 0..n {
                let mut next = m.clone();
                next.0[i] += 1;
                frontier.push(next);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Coordinates of the normal form of `p` against a list of standard monomials.
    pub fn coords(&self, p: &Poly, basis: &[Monomial]) -> Vec<Scalar> {
        let nf = self.reduce(p);
        basis
            .iter()
            .map(|m| nf.terms.get(m).cloned().unwrap_or_else(Scalar::zero))
            .collect()
    }

    /// Matrix of multiplication by `p` on a finite ℚ-basis (columns are images).
    pub fn multiplication_matrix(&self, p: &Poly, basis: &[Monomial]) -> QMatrix {
        let mut m = QMatrix::zeros(basis.len(), basis.len());
        for (c, b) in basis.iter().enumerate() {
            let img = self.mul(
                p,
                &Poly::from_term(b.clone(), Scalar::from_integer(1.into())),
            );
            for (r, v) in self.coords(&img, basis).into_iter().enumerate() {
                m.set(r, c, v);
            }
        }
        m
    }

    /// Evaluates a degree-0 polynomial at a ℚ-point given for every generator.
    pub fn evaluate(&self, p: &Poly, point: &[Scalar]) -> Scalar {
        let mut acc = Scalar::zero();
        for (m, c) in &p.terms {
            let mut t = c.clone();
            for (i, e) in m.0.iter().enumerate() {
                for _ in 0..*e {
                    t *= &point[i];
                }
            }
            acc += t;
        }
        acc
    }

    /// Same underlying presentation data (names aside).
    pub fn same_as(&self, other: &AlgebraPresentation) -> bool {
        self.ring == other.ring && self.gb == other.gb
    }
}

/// An algebra map given by images of every generator of the source.
#[derive(Clone, Debug)]
pub struct AlgebraMap {
    pub source: Arc<AlgebraPresentation>,
    pub target: Arc<AlgebraPresentation>,
    pub images: Vec<Poly>,
}

impl AlgebraMap {
    pub fn new(
        source: Arc<AlgebraPresentation>,
        target: Arc<AlgebraPresentation>,
        images: Vec<Poly>,
    ) -> Result<Self> {
        if images.len() != source.nvars() {
            return Err(Error::InvalidPresentation(format!(
                "map {} -> {} needs {} images, got {}",
                source.name,
                target.name,
                source.nvars(),
                images.len()
            )));
        }
        let images: Vec<Poly> = images.iter().map(|p| target.reduce(p)).collect();
        let map = AlgebraMap {
            source,
            target,
            images,
        };
        map.validate()?;
        Ok(map)
    }

    /// Builds a map from `(generator, image source text)` pairs; base generators
    /// shared with the target by name default to themselves.
    pub fn from_assignments(
        source: Arc<AlgebraPresentation>,
        target: Arc<AlgebraPresentation>,
        assignments: &[(&str, &str)],
    ) -> Result<Self> {
        let mut images = Vec::with_capacity(source.nvars());
        for v in &source.ring().vars {
            let img = match assignments.iter().find(|(g, _)| *g == v.name) {
                Some((_, src)) => target.ring().parse(src)?,
                None => match target.ring().index_of(&v.name) {
                    Some(j) => target.ring().var(j),
                    None => {
                        return Err(Error::InvalidPresentation(format!(
                            "no image given for generator `{}`",
                            v.name
                        )))
                    }
                },
            };
            images.push(img);
        }
        Self::new(source, target, images)
    }

    pub fn identity(alg: Arc<AlgebraPresentation>) -> Self {
        let images = (0..alg.nvars()).map(|i| alg.ring().var(i)).collect();
        AlgebraMap {
            source: alg.clone(),
            target: alg,
            images,
        }
    }

    /// Structure map `base -> alg`.
    pub fn structure(alg: Arc<AlgebraPresentation>) -> Result<Self> {
        let base = alg
            .base
            .clone()
            .ok_or_else(|| Error::InvalidPresentation(format!("`{}` has no base", alg.name)))?;
        let images = (0..base.nvars()).map(|i| alg.ring().var(i)).collect();
        Self::new(base, alg, images)
    }

    fn validate(&self) -> Result<()> {
        for (i, img) in self.images.iter().enumerate() {
            let want = self.source.ring().vars[i].degree;
            let name = &self.source.ring().vars[i].name;
            match self.target.ring().bidegree(img) {
                None => {
                    return Err(Error::InvalidPresentation(format!(
                        "image of `{name}` is not homogeneous"
                    )))
                }
                Some(Some((deg, _))) if deg != want => {
                    return Err(Error::InvalidPresentation(format!(
                        "image of `{name}` has degree {deg}, expected {want}"
                    )))
                }
                _ => {}
            }
        }
        for r in self.source.relations() {
            let img = self.apply(&r);
            if !img.is_zero() {
                return Err(Error::InvalidPresentation(format!(
                    "relation `{}` maps to nonzero `{}`",
                    self.source.fmt(&r),
                    self.target.fmt(&img)
                )));
            }
        }
        for i in 0..self.source.nvars() {
            let lhs = self.apply(&self.source.differential()[i]);
            let rhs = self.target.d(&self.images[i]);
            if lhs != rhs {
                return Err(Error::InvalidPresentation(format!(
                    "map does not commute with d on `{}`",
                    self.source.ring().vars[i].name
                )));
            }
        }
        Ok(())
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        self.target.reduce(
            &self
                .source
                .ring()
                .substitute(p, &self.images, self.target.ring()),
        )
    }

    pub fn compose(&self, after: &AlgebraMap) -> Result<AlgebraMap> {
        if !self.target.same_as(&after.source) {
            return Err(Error::IncompatibleOwner {
                left: self.target.name.clone(),
                right: after.source.name.clone(),
            });
        }
        let images = self.images.iter().map(|p| after.apply(p)).collect();
        AlgebraMap::new(self.source.clone(), after.target.clone(), images)
    }

    /// Jacobian entry `∂ image(source generator i) / ∂ target generator j`.
    pub fn jacobian(&self, i: usize, j: usize) -> Poly {
        self.target
            .reduce(&self.target.ring().partial(&self.images[i], j))
    }
}
