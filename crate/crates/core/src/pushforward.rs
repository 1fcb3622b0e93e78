//! Push-forward along finite free maps: Weil restriction by coefficient
//! extraction, the perfect push-forward `f₊E = f_*(E^∨)^∨`, the evaluation
//! co-unit, mapping schemes, and the tangent formula for induced foliations.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{BigInt, Integer, One, Signed, Zero};
use serde::Serialize;

use crate::cotangent_derham::kaehler;
use crate::error::{Error, Result};
use crate::exact_core::complex::{ChainMap, PerfectComplex, PolyMatrix};
use crate::exact_core::groebner::{groebner_basis, GroebnerBasis, DEFAULT_BUDGET};
use crate::exact_core::linalg::QMatrix;
use crate::exact_core::scalar::fmt_scalar;
use crate::exact_core::{
    qf, AlgebraMap, AlgebraPresentation, Monomial, Poly, PolyRing, Scalar, VarSpec,
};
use crate::foliation::FoliationPresentation;

/// `A → B` with `B` free over `A` on monomials `b_1 = 1, b_2, ..` in the own
/// generators of `B`.
#[derive(Clone, Debug)]
pub struct FiniteFreeMap {
    pub source: Arc<AlgebraPresentation>,
    pub target: Arc<AlgebraPresentation>,
    pub basis: Vec<Monomial>,
    /// `table[i][j][k]` is the coefficient of `b_k` in `b_i·b_j`, in `A`.
    pub table: Vec<Vec<Vec<Poly>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteFreeReport {
    pub source: String,
    pub target: String,
    pub basis: Vec<String>,
    pub unital: bool,
    pub commutative: bool,
    pub associative: bool,
    pub passed: bool,
}

fn join_label(label: &str, k: usize) -> String {
    if label.ends_with(|c: char| c.is_ascii_digit()) {
        format!("{label}_{k}")
    } else {
        format!("{label}{k}")
    }
}

impl FiniteFreeMap {
    /// The structure map `A → B` with `A` the base of `B` (ℚ when `B` has none).
    pub fn new(target: Arc<AlgebraPresentation>, basis: &[Poly]) -> Result<Self> {
        let source = target.base.clone().unwrap_or_else(AlgebraPresentation::rational);
        if !source.is_discrete() || !target.is_discrete() {
            return Err(Error::UnsupportedInput("finite free maps need discrete algebras".into()));
        }
        let na = source.nvars();
        let zero = target.is_zero_ring();
        let mut monos: Vec<Monomial> = Vec::new();
        for p in basis {
            let p = if zero { p.clone() } else { target.reduce(p) };
            let bad = || {
                Error::UnsupportedInput(format!(
                    "basis element `{}` is not a standard monomial in the generators of `{}`",
                    target.fmt(&p),
                    target.name
                ))
            };
            if p.terms.len() != 1 {
                return Err(bad());
            }
            let (m, c) = p.terms.iter().next().expect("one term");
            if !c.is_one() || m.0[..na].iter().any(|&e| e > 0) || monos.contains(m) {
                return Err(bad());
            }
            monos.push(m.clone());
        }
        if monos.first().is_none_or(|m| !m.is_one()) {
            return Err(Error::UnsupportedInput("the first basis element must be 1".into()));
        }
        for lm in target.gb().leading_monomials().into_iter().filter(|_| !zero) {
            let a_part = Monomial(lm.0[..na].to_vec());
            let mut own = lm.clone();
            own.0[..na].iter_mut().for_each(|e| *e = 0);
            if source.gb().is_standard(&a_part) && monos.iter().any(|b| own.divides(b)) {
                return Err(Error::UnsupportedInput(format!(
                    "`{}` is not free over `{}` on the given basis",
                    target.name, source.name
                )));
            }
        }
        let n = monos.len();
        let mut map = FiniteFreeMap { source, target, basis: monos, table: Vec::new() };
        if zero {
            map.table = vec![vec![vec![Poly::zero(); n]; n]; n];
            return Ok(map);
        }
        let ring = map.target.ring().clone();
        for x in map.target.own_indices() {
            for b in &map.basis {
                map.coords(&ring.mul(&ring.var(x), &map.basis_poly_of(b)))?;
            }
        }
        let mut table = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                table[i][j] = map.coords(&map.target.mul(&map.basis_poly(i), &map.basis_poly(j)))?;
            }
        }
        map.table = table;
        Ok(map)
    }

    /// `new` for an explicit map, which must be the structure map of its target.
    pub fn from_map(f: &AlgebraMap, basis: &[Poly]) -> Result<Self> {
        let out = Self::new(f.target.clone(), basis)?;
        let structural = f.source.same_as(&out.source)
            && f.images.iter().enumerate().all(|(i, p)| *p == out.target.ring().var(i));
        if !structural {
            return Err(Error::UnsupportedInput(format!(
                "`{}` → `{}` is not the structure map of `{}`",
                f.source.name, f.target.name, f.target.name
            )));
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn basis_poly_of(&self, m: &Monomial) -> Poly {
        Poly::from_term(m.clone(), Scalar::one())
    }

    pub fn basis_poly(&self, i: usize) -> Poly {
        self.basis_poly_of(&self.basis[i])
    }

    pub fn basis_labels(&self) -> Vec<String> {
        self.basis.iter().map(|m| self.target.ring().fmt_monomial(m)).collect()
    }

    /// Coordinates of `p ∈ B` over `A`.
    pub fn coords(&self, p: &Poly) -> Result<Vec<Poly>> {
        let na = self.source.nvars();
        let mut out = vec![Poly::zero(); self.basis.len()];
        for (m, c) in &self.target.reduce(p).terms {
            let mut own = m.clone();
            own.0[..na].iter_mut().for_each(|e| *e = 0);
            let k = self.basis.iter().position(|b| *b == own).ok_or_else(|| {
                Error::UnsupportedInput(format!(
                    "`{}` is not free over `{}` on the given basis",
                    self.target.name, self.source.name
                ))
            })?;
            out[k].add_term(Monomial(m.0[..na].to_vec()), c.clone());
        }
        Ok(out)
    }

    /// Matrix of multiplication by `p` in the basis; column `j` holds `p·b_j`.
    pub fn mult_matrix(&self, p: &Poly) -> Result<PolyMatrix> {
        let n = self.rank();
        let mut m = PolyMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.coords(&self.target.mul(p, &self.basis_poly(j)))?;
            for (i, c) in col.into_iter().enumerate() {
                m.set(i, j, c);
            }
        }
        Ok(m)
    }

    fn expand(&self, m: &PolyMatrix) -> Result<PolyMatrix> {
        let n = self.rank();
        let mut out = PolyMatrix::zeros(m.rows * n, m.cols * n);
        for r in 0..m.rows {
            for c in 0..m.cols {
                if !m.get(r, c).is_zero() {
                    out.put(r * n, c * n, &self.mult_matrix(m.get(r, c))?);
                }
            }
        }
        Ok(out)
    }

    fn check_owner(&self, e: &PerfectComplex) -> Result<()> {
        if !e.owner().same_as(&self.target) {
            return Err(Error::IncompatibleOwner {
                left: e.owner().name.clone(),
                right: self.target.name.clone(),
            });
        }
        Ok(())
    }

    /// Restriction of scalars: a free term of rank `r` becomes rank `r·n` over `A`.
    pub fn restrict(&self, e: &PerfectComplex) -> Result<PerfectComplex> {
        self.check_owner(e)?;
        let n = self.rank();
        let terms = e
            .degrees()
            .into_iter()
            .map(|d| {
                let labels = e.labels(d).iter().flat_map(|l| (0..n).map(move |k| join_label(l, k))).collect();
                (d, labels)
            })
            .collect();
        let diffs = e
            .degrees()
            .into_iter()
            .map(|d| Ok((d, self.expand(&e.diff(d))?)))
            .collect::<Result<Vec<_>>>()?;
        PerfectComplex::new(self.source.clone(), terms, diffs)
    }

    pub fn restrict_map(&self, phi: &ChainMap) -> Result<ChainMap> {
        let source = self.restrict(&phi.source)?;
        let target = self.restrict(&phi.target)?;
        let mut degrees = phi.source.degrees();
        degrees.extend(phi.target.degrees());
        degrees.sort_unstable();
        degrees.dedup();
        let maps = degrees
            .into_iter()
            .map(|d| Ok((d, self.expand(&phi.component(d))?)))
            .collect::<Result<Vec<_>>>()?;
        ChainMap::new(source, target, maps)
    }

    /// `f₊E = f_*(E^∨)^∨`. Basis vector `k` over the copy of `e` is labelled `e{k}`.
    pub fn f_plus(&self, e: &PerfectComplex) -> Result<PerfectComplex> {
        let out = self.restrict(&e.dual())?.dual();
        let n = self.rank();
        Ok(out.relabeled(|d, j, _| join_label(&e.labels(d)[j / n], j % n)))
    }

    pub fn f_plus_map(&self, phi: &ChainMap) -> Result<ChainMap> {
        let m = self.restrict_map(&phi.dual()?)?.dual()?;
        let source = self.f_plus(&phi.source)?;
        let target = self.f_plus(&phi.target)?;
        let mut degrees = source.degrees();
        degrees.extend(target.degrees());
        ChainMap::new(source, target, degrees.into_iter().map(|d| (d, m.component(d))).collect())
    }

    /// Unit, commutativity and associativity of the multiplication table.
    pub fn report(&self) -> FiniteFreeReport {
        let n = self.rank();
        let a = &self.source;
        let unital = (0..n).all(|j| {
            (0..n).all(|k| {
                let want = if j == k { a.ring().one() } else { Poly::zero() };
                self.table[0][j][k] == want
            })
        });
        let commutative = (0..n).all(|i| (0..n).all(|j| self.table[i][j] == self.table[j][i]));
        let mut associative = true;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut lhs = Poly::zero();
                        let mut rhs = Poly::zero();
                        for l in 0..n {
                            lhs = lhs.add(&a.mul(&self.table[i][j][l], &self.table[l][k][m]));
                            rhs = rhs.add(&a.mul(&self.table[j][k][l], &self.table[i][l][m]));
                        }
                        associative &= a.reduce(&lhs) == a.reduce(&rhs);
                    }
                }
            }
        }
        FiniteFreeReport {
            source: self.source.name.clone(),
            target: self.target.name.clone(),
            basis: self.basis_labels(),
            unital,
            commutative,
            associative,
            passed: unital && commutative && associative,
        }
    }
}

/// `f_*Z` for `Z = Spec C` over `X = Spec B`, with the co-unit stored as the
/// universal expansion `g ↦ Σ z_{g,i} b_i`.
#[derive(Clone, Debug)]
pub struct WeilRestriction {
    pub map: FiniteFreeMap,
    pub source: Arc<AlgebraPresentation>,
    /// `f_*C` over `A`: generators `z_{g,i}`, relations from coefficient extraction.
    pub presentation: Arc<AlgebraPresentation>,
    /// Own generator of `C` and the names of its coordinates.
    pub expansion: Vec<(String, Vec<String>)>,
    /// `f_*C ⊗_A B`.
    pub pulled: Arc<AlgebraPresentation>,
    /// `ev : C → f_*C ⊗_A B`.
    pub ev: AlgebraMap,
    /// `f_*C → f_*C ⊗_A B`, free on the same basis as `f`.
    pub pi: FiniteFreeMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeilReport {
    pub name: String,
    pub generators: Vec<String>,
    pub relations: Vec<String>,
    pub expansion: Vec<(String, String)>,
    pub pi_basis: Vec<String>,
    pub pi_free: bool,
}

impl WeilRestriction {
    pub fn generator_names(&self) -> Vec<String> {
        let w = &self.presentation;
        w.own_indices().map(|i| w.ring().vars[i].name.clone()).collect()
    }

    pub fn report(&self) -> WeilReport {
        let w = &self.presentation;
        let source_ring = self.source.ring();
        let expansion = self
            .source
            .own_indices()
            .map(|i| (source_ring.vars[i].name.clone(), self.pulled.fmt(&self.ev.images[i])))
            .collect();
        WeilReport {
            name: w.name.clone(),
            generators: self.generator_names(),
            relations: w.own_relations().iter().map(|r| w.fmt(r)).collect(),
            expansion,
            pi_basis: self.pi.basis_labels(),
            pi_free: self.pi.report().passed,
        }
    }
}

fn coordinate_name(g: &str, i: usize, taken: &[String]) -> String {
    let mut name = join_label(g, i);
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// Monomial in `[A | B own | z]` to `[A | z | B own]`.
fn reorder(m: &Monomial, na: usize, nb: usize) -> Monomial {
    let mut out = m.0[..na].to_vec();
    out.extend_from_slice(&m.0[nb..]);
    out.extend_from_slice(&m.0[na..nb]);
    Monomial(out)
}

pub fn weil_restrict(c: &Arc<AlgebraPresentation>, f: &FiniteFreeMap) -> Result<WeilRestriction> {
    let b = &f.target;
    if !c.base.as_ref().is_some_and(|base| base.same_as(b)) {
        return Err(Error::IncompatibleOwner { left: c.name.clone(), right: b.name.clone() });
    }
    if !c.is_discrete() {
        return Err(Error::UnsupportedInput(format!("`{}` is not discrete", c.name)));
    }
    let (na, nb, n) = (f.source.nvars(), b.nvars(), f.rank());
    let mut taken: Vec<String> = c.ring().vars.iter().map(|v| v.name.clone()).collect();
    let mut expansion = Vec::new();
    let mut zvars = Vec::new();
    for g in c.own_indices() {
        let gname = c.ring().vars[g].name.clone();
        let mut names = Vec::new();
        for i in 0..n {
            let z = coordinate_name(&gname, i, &taken);
            taken.push(z.clone());
            zvars.push(VarSpec::even(z.clone()));
            names.push(z);
        }
        expansion.push((gname, names));
    }
    let nz = zvars.len();
    // work in [A | B own | z], where B's relations are still a Gröbner basis
    let r = b.ring().extended(zvars.clone());
    let gb_r = GroebnerBasis { basis: b.gb().basis.iter().map(|p| p.padded(r.nvars())).collect() };
    let mut images: Vec<Poly> = (0..nb).map(|i| r.var(i)).collect();
    for gi in 0..expansion.len() {
        let mut img = Poly::zero();
        for i in 0..n {
            let bi = f.basis_poly(i).padded(r.nvars());
            img = img.add(&r.mul(&r.var(nb + gi * n + i), &bi));
        }
        images.push(img);
    }
    let w_ring = f.source.ring().extended(zvars);
    let mut relations = Vec::new();
    for rel in c.own_relations() {
        let p = gb_r.reduce(&r, &c.ring().substitute(rel, &images, &r));
        let mut coeffs = vec![Poly::zero(); n];
        for (m, coeff) in &p.terms {
            let mut own = Monomial(m.0[..nb].to_vec());
            own.0[..na].iter_mut().for_each(|e| *e = 0);
            let k = f.basis.iter().position(|x| *x == own).ok_or_else(|| {
                Error::UnsupportedInput(format!("`{}` is not free on the given basis", b.name))
            })?;
            let mut wm = m.0[..na].to_vec();
            wm.extend_from_slice(&m.0[nb..]);
            coeffs[k].add_term(Monomial(wm), coeff.clone());
        }
        relations.extend(coeffs.into_iter().filter(|p| !p.is_zero()));
    }
    let w_n = w_ring.nvars();
    let w = Arc::new(AlgebraPresentation::assemble(
        format!("Res({})", c.name),
        Some(f.source.clone()),
        w_ring.clone(),
        na,
        relations,
        vec![Poly::zero(); w_n],
        false,
        false,
        DEFAULT_BUDGET,
    )?);
    let p_ring = w_ring.extended(b.ring().vars[na..].iter().cloned());
    let to_p = |p: &Poly| {
        let mut out = Poly::zero();
        for (m, coeff) in &p.padded(r.nvars()).terms {
            out.add_term(reorder(m, na, nb), coeff.clone());
        }
        out
    };
    let pulled = Arc::new(AlgebraPresentation::assemble(
        format!("{}⊗{}", w.name, b.name),
        Some(w.clone()),
        p_ring.clone(),
        na + nz,
        b.own_relations().iter().map(to_p).collect(),
        vec![Poly::zero(); p_ring.nvars()],
        false,
        false,
        DEFAULT_BUDGET,
    )?);
    let ev = AlgebraMap::new(c.clone(), pulled.clone(), images.iter().map(to_p).collect())?;
    let pi_basis: Vec<Poly> = (0..n).map(|i| to_p(&f.basis_poly(i))).collect();
    let pi = FiniteFreeMap::new(pulled.clone(), &pi_basis)?;
    Ok(WeilRestriction { map: f.clone(), source: c.clone(), presentation: w, expansion, pulled, ev, pi })
}

/// `X ×_S Y` as an algebra over `X`.
pub fn fibre_product(x: &FiniteFreeMap, y: &Arc<AlgebraPresentation>) -> Result<Arc<AlgebraPresentation>> {
    let over_s = match &y.base {
        Some(base) => base.same_as(&x.source),
        None => x.source.nvars() == 0,
    };
    if !over_s {
        return Err(Error::IncompatibleOwner { left: y.name.clone(), right: x.source.name.clone() });
    }
    let mut builder =
        AlgebraPresentation::builder(&format!("{}×{}", x.target.name, y.name)).base(x.target.clone());
    for i in y.own_indices() {
        builder = builder.generator(&y.ring().vars[i].name, y.ring().vars[i].degree);
    }
    for r in y.own_relations() {
        builder = builder.relation(&y.fmt(r));
    }
    Ok(Arc::new(builder.build()?))
}

/// `Map_S(X, Y) = f_*(X ×_S Y)`.
pub fn mapping_scheme(x: &FiniteFreeMap, y: &Arc<AlgebraPresentation>) -> Result<WeilRestriction> {
    weil_restrict(&fibre_product(x, y)?, x)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointCount {
    Finite { count: usize },
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointsReport {
    pub test_algebra: String,
    pub test_dim: usize,
    pub unknowns: usize,
    pub restricted_equations: usize,
    pub original_equations: usize,
    pub ideals_equal: bool,
    pub restricted_points: PointCount,
    pub original_points: PointCount,
    pub sampled: usize,
    pub round_trip: bool,
    pub passed: bool,
}

/// ℚ, ℚ[s]/(s²), ℚ×ℚ, ℚ(i), ℚ[s]/(s³), ℚ[s,u]/(s²,u²).
pub fn test_algebras() -> Vec<Arc<AlgebraPresentation>> {
    let specs: [(&str, &[&str], &[&str]); 6] = [
        ("Q", &[], &[]),
        ("Q[s]/(s^2)", &["s"], &["s^2"]),
        ("Q[e]/(e^2-e)", &["e"], &["e^2 - e"]),
        ("Q[s]/(s^2+1)", &["s"], &["s^2 + 1"]),
        ("Q[s]/(s^3)", &["s"], &["s^3"]),
        ("Q[s,u]/(s^2,u^2)", &["s", "u"], &["s^2", "u^2"]),
    ];
    specs
        .iter()
        .map(|(name, vars, rels)| {
            AlgebraPresentation::quotient(name, vars, rels).expect("test algebras are valid")
        })
        .collect()
}

fn shifted(m: &Monomial, before: usize, total: usize) -> Monomial {
    let mut out = vec![0; before];
    out.extend_from_slice(&m.0);
    out.resize(total, 0);
    Monomial(out)
}

fn shift_poly(p: &Poly, before: usize, total: usize) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        out.add_term(shifted(m, before, total), c.clone());
    }
    out
}

/// Points of `f_*C` with values in `T` against points of `C` with values in
/// `T ⊗ B`. Both are solution sets in the same unknowns `a_{g,i,k}`: the
/// coefficient of `τ_k` in `z_{g,i}`, resp. of `τ_k b_i` in `g`; composing with
/// `ev` is the identity on these coordinates.
pub fn check_functor_of_points(w: &WeilRestriction, t: &Arc<AlgebraPresentation>) -> Result<PointsReport> {
    let f = &w.map;
    if f.source.nvars() != 0 {
        return Err(Error::UnsupportedInput("points are enumerated over S = Spec Q only".into()));
    }
    if !t.is_discrete() || !t.is_finite_dimensional() || t.base.is_some() {
        return Err(Error::UnsupportedInput(format!("`{}` is not a finite-dimensional Q-algebra", t.name)));
    }
    let tau = t.standard_monomials(None)?;
    let (mt, nt, nb, n) = (tau.len(), t.nvars(), f.target.nvars(), f.rank());
    let ng = w.expansion.len();
    let unknown = |g: usize, i: usize, k: usize| (g * n + i) * mt + k;
    let mut uvars = Vec::new();
    for (_, names) in &w.expansion {
        for z in names {
            for k in 0..mt {
                uvars.push(VarSpec::even(format!("{z}_{k}")));
            }
        }
    }
    let nu = uvars.len();
    let u_ring = PolyRing::new(uvars);

    // f_*C with values in T
    let rw = u_ring.extended(t.ring().vars.iter().cloned());
    let gb_t = GroebnerBasis { basis: t.gb().basis.iter().map(|p| shift_poly(p, nu, nu + nt)).collect() };
    let tau_w: Vec<Poly> = tau.iter().map(|m| Poly::from_term(shifted(m, nu, nu + nt), Scalar::one())).collect();
    let mut images = Vec::new();
    for g in 0..ng {
        for i in 0..n {
            let mut img = Poly::zero();
            for (k, tk) in tau_w.iter().enumerate() {
                img = img.add(&rw.mul(&rw.var(unknown(g, i, k)), tk));
            }
            images.push(img);
        }
    }
    let mut restricted = Vec::new();
    for rel in w.presentation.own_relations() {
        let p = gb_t.reduce(&rw, &w.presentation.ring().substitute(rel, &images, &rw));
        let mut coeffs = vec![Poly::zero(); mt];
        for (m, c) in &p.terms {
            let k = tau.iter().position(|x| x.0[..] == m.0[nu..]).expect("normal forms are standard");
            coeffs[k].add_term(Monomial(m.0[..nu].to_vec()), c.clone());
        }
        restricted.extend(coeffs.into_iter().filter(|p| !p.is_zero()));
    }

    // C with values in T ⊗ B
    let rz = rw.extended(f.target.ring().vars.iter().cloned());
    let total = rz.nvars();
    let mut rels: Vec<Poly> = t.relations().iter().map(|p| shift_poly(p, nu, total)).collect();
    rels.extend(f.target.relations().iter().map(|p| shift_poly(p, nu + nt, total)));
    let gb_z = groebner_basis(&rz, &rels, DEFAULT_BUDGET)?;
    let pairs: Vec<(usize, usize, Monomial)> = (0..mt)
        .flat_map(|k| (0..n).map(move |i| (k, i)))
        .map(|(k, i)| {
            let mut m = shifted(&tau[k], nu, total);
            for (j, e) in f.basis[i].0.iter().enumerate() {
                m.0[nu + nt + j] += e;
            }
            (k, i, m)
        })
        .collect();
    let c = &w.source;
    let mut c_images: Vec<Poly> = (0..nb).map(|j| rz.var(nu + nt + j)).collect();
    for g in 0..ng {
        let mut img = Poly::zero();
        for (k, i, m) in &pairs {
            img = img.add(&rz.mul(&rz.var(unknown(g, *i, *k)), &Poly::from_term(m.clone(), Scalar::one())));
        }
        c_images.push(img);
    }
    let extract = |p: &Poly| -> Vec<Poly> {
        let mut coeffs = vec![Poly::zero(); pairs.len()];
        for (m, coeff) in &p.terms {
            let mut rest = m.clone();
            rest.0[..nu].iter_mut().for_each(|e| *e = 0);
            let slot = pairs.iter().position(|(_, _, x)| *x == rest).expect("normal forms are standard");
            coeffs[slot].add_term(Monomial(m.0[..nu].to_vec()), coeff.clone());
        }
        coeffs
    };
    let mut original = Vec::new();
    for rel in c.own_relations() {
        let p = gb_z.reduce(&rz, &c.ring().substitute(rel, &c_images, &rz));
        original.extend(extract(&p).into_iter().filter(|p| !p.is_zero()));
    }

    let gw = groebner_basis(&u_ring, &restricted, DEFAULT_BUDGET)?;
    let gz = groebner_basis(&u_ring, &original, DEFAULT_BUDGET)?;
    let ideals_equal = restricted.iter().all(|p| gz.contains(&u_ring, p))
        && original.iter().all(|p| gw.contains(&u_ring, p));
    let (restricted_points, w_sols) = count_points(&u_ring, &restricted)?;
    let (original_points, z_sols) = count_points(&u_ring, &original)?;

    let holds = |eqs: &[Poly], pt: &[Scalar]| eqs.iter().all(|e| evaluate(e, pt).is_zero());
    let mut round_trip = w_sols.iter().all(|pt| holds(&original, pt)) && z_sols.iter().all(|pt| holds(&restricted, pt));
    let mut sampled = 0;
    if restricted.is_empty() && original.is_empty() && nu > 0 {
        for s in 0..5i64 {
            let pt: Vec<Scalar> = (0..nu as i64).map(|j| qf((s + 1) * (j + 2) - 3, j + 1)).collect();
            // push the point through ev and read the coordinates back off T ⊗ B
            let zero_u: Vec<Poly> = (0..total)
                .map(|v| if v < nu { rz.constant(pt[v].clone()) } else { rz.var(v) })
                .collect();
            let concrete: Vec<Poly> = c_images.iter().map(|p| gb_z.reduce(&rz, &rz.substitute(p, &zero_u, &rz))).collect();
            let is_map = c
                .own_relations()
                .iter()
                .all(|rel| gb_z.reduce(&rz, &c.ring().substitute(rel, &concrete, &rz)).is_zero());
            let mut back = vec![Scalar::zero(); nu];
            for (g, img) in concrete[nb..].iter().enumerate() {
                for (slot, coeff) in extract(img).into_iter().enumerate() {
                    let (k, i, _) = pairs[slot];
                    back[unknown(g, i, k)] = coeff.constant_term(nu);
                }
            }
            round_trip &= is_map && back == pt;
            sampled += 1;
        }
    }
    let counts_agree = restricted_points == original_points;
    Ok(PointsReport {
        test_algebra: t.name.clone(),
        test_dim: mt,
        unknowns: nu,
        restricted_equations: restricted.len(),
        original_equations: original.len(),
        ideals_equal,
        restricted_points,
        original_points,
        sampled,
        round_trip,
        passed: ideals_equal && counts_agree && round_trip,
    })
}

fn evaluate(p: &Poly, pt: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero();
    for (m, c) in &p.terms {
        let mut t = c.clone();
        for (i, e) in m.0.iter().enumerate() {
            for _ in 0..*e {
                t *= &pt[i];
            }
        }
        acc += t;
    }
    acc
}

/// Number of ℚ-points of `V(eqs)`, with the points when finitely many.
fn count_points(ring: &PolyRing, eqs: &[Poly]) -> Result<(PointCount, Vec<Vec<Scalar>>)> {
    let nu = ring.nvars();
    let alg = AlgebraPresentation::assemble(
        "points".into(),
        None,
        ring.clone(),
        0,
        eqs.to_vec(),
        vec![Poly::zero(); nu],
        false,
        false,
        DEFAULT_BUDGET,
    )?;
    if alg.is_zero_ring() {
        return Ok((PointCount::Finite { count: 0 }, Vec::new()));
    }
    if !alg.is_finite_dimensional() {
        return Ok((PointCount::Infinite, Vec::new()));
    }
    let basis = alg.standard_monomials(None)?;
    let mut candidates = Vec::new();
    for j in 0..nu {
        let m = alg.multiplication_matrix(&ring.var(j), &basis);
        candidates.push(rational_roots(&minimal_polynomial(&m))?);
    }
    let mut points: Vec<Vec<Scalar>> = vec![Vec::new()];
    for roots in &candidates {
        points = points
            .into_iter()
            .flat_map(|p| {
                roots.iter().map(move |r| {
                    let mut q = p.clone();
                    q.push(r.clone());
                    q
                })
            })
            .collect();
        if points.len() > 100_000 {
            return Err(Error::BudgetExceeded { budget: 100_000, during: "enumerating candidate points".into() });
        }
    }
    points.retain(|pt| alg.gb().basis.iter().all(|g| evaluate(g, pt).is_zero()));
    Ok((PointCount::Finite { count: points.len() }, points))
}

/// Coefficients `c_0..c_d` (monic) of the minimal polynomial of a square matrix.
fn minimal_polynomial(m: &QMatrix) -> Vec<Scalar> {
    let n = m.rows;
    let flatten = |a: &QMatrix| (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| a.get(r, c).clone()).collect::<Vec<_>>();
    let mut powers = vec![flatten(&QMatrix::identity(n))];
    let mut cur = QMatrix::identity(n);
    loop {
        cur = m.mul(&cur);
        powers.push(flatten(&cur));
        let k = QMatrix::from_columns(n * n, &powers).kernel();
        if let Some(v) = k.first() {
            let lead = v.last().expect("nonempty").clone();
            return v.iter().map(|c| c / &lead).collect();
        }
    }
}

/// Rational roots of `Σ c_i x^i`.
fn rational_roots(coeffs: &[Scalar]) -> Result<Vec<Scalar>> {
    let lcm = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let mut ints: Vec<BigInt> = coeffs.iter().map(|c| (c * Scalar::from_integer(lcm.clone())).to_integer()).collect();
    let mut roots = Vec::new();
    if ints.first().is_some_and(|c| c.is_zero()) {
        roots.push(Scalar::zero());
        while ints.first().is_some_and(|c| c.is_zero()) {
            ints.remove(0);
        }
    }
    if ints.len() <= 1 {
        return Ok(roots);
    }
    let (a0, an) = (ints[0].abs(), ints[ints.len() - 1].abs());
    for p in divisors(&a0)? {
        for q in divisors(&an)? {
            for s in [1, -1] {
                let r = Scalar::new(p.clone() * s, q.clone());
                let value = ints.iter().rev().fold(Scalar::zero(), |acc, c| acc * &r + Scalar::from_integer(c.clone()));
                if value.is_zero() && !roots.contains(&r) {
                    roots.push(r);
                }
            }
        }
    }
    roots.sort();
    Ok(roots)
}

fn divisors(n: &BigInt) -> Result<Vec<BigInt>> {
    if *n > BigInt::from(1_000_000_000_000i64) {
        return Err(Error::UnsupportedInput(format!("coefficient {n} too large for root search")));
    }
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            out.push(d.clone());
            let e = n / &d;
            if e != d {
                out.push(e);
            }
        }
        d += 1;
    }
    Ok(out)
}

/// The induced foliation on `f_*Z`, together with the Weil restriction it lives on.
#[derive(Clone, Debug)]
pub struct PushedFoliation {
    pub weil: WeilRestriction,
    pub foliation: FoliationPresentation,
}

/// `L' = π₊(ev^* L)` and anchor `π₊(ev^* anchor)`, whose source is identified
/// with the Kähler complex of `f_*C` by `dz_{g,i} ↦ (∂_g ⊗ b_i)^∨`.
fn transport(name: &str, weil: &WeilRestriction, l: &PerfectComplex, anchor: &ChainMap) -> Result<FoliationPresentation> {
    let w = &weil.presentation;
    if !w.own_relations().is_empty() {
        return Err(Error::UnsupportedInput(format!("`{}` is not smooth over `{}`", w.name, weil.map.source.name)));
    }
    let lp = weil.pi.f_plus(&l.base_change(&weil.ev)?)?;
    let ap = weil.pi.f_plus_map(&anchor.base_change(&weil.ev)?)?;
    let omega = kaehler(w)?.complex;
    if omega.ranks() != ap.source.ranks() {
        return Err(Error::TypeMismatch("transported anchor has the wrong source".into()));
    }
    let anchor = ChainMap::new(omega.clone(), lp.clone(), omega.degrees().into_iter().map(|d| (d, ap.component(d))).collect())?;
    let mut out = FoliationPresentation::from_cotangent(name, &lp, &anchor)?;
    out.provenance.push(format!("cotangent is π₊ ev^* of the cotangent on `{}`", weil.source.name));
    Ok(out)
}

/// `f_{*,Fol}F` for a foliation `F` on `Z` relative to `X`. Only foliations
/// with `ε = 0` on the generators of `L_F` are transported.
pub fn pushforward_foliation(fol: &FoliationPresentation, f: &FiniteFreeMap) -> Result<PushedFoliation> {
    let gm = &fol.gm;
    if gm.eps_images()[gm.gen_start()..].iter().any(|p| !p.is_zero()) {
        return Err(Error::UnsupportedInput(format!(
            "`{}` has a nonzero mixed differential on its cotangent generators",
            fol.name
        )));
    }
    let weil = weil_restrict(&fol.owner, f)?;
    let foliation = transport(&format!("f_*{}", fol.name), &weil, &fol.cotangent, &fol.anchor)?;
    Ok(PushedFoliation { weil, foliation })
}

/// The foliation on `Map_S(X, Y)` induced by a foliation `F` on `Y`: the
/// push-forward of `L_{X/S} ⊞ p_Y^* L_F` on `X ×_S Y`.
#[derive(Clone, Debug)]
pub struct MappingFoliation {
    pub weil: WeilRestriction,
    pub target_foliation: FoliationPresentation,
    pub foliation: FoliationPresentation,
}

pub fn mapping_foliation(x: &FiniteFreeMap, fol: &FoliationPresentation) -> Result<MappingFoliation> {
    if x.source.nvars() != 0 {
        return Err(Error::UnsupportedInput("S must be Spec Q".into()));
    }
    let y = &fol.owner;
    let c = fibre_product(x, y)?;
    let weil = weil_restrict(&c, x)?;
    let nb = x.target.nvars();
    let p_y = AlgebraMap::new(y.clone(), c.clone(), (0..y.nvars()).map(|k| c.ring().var(nb + k)).collect())?;
    let p_x = AlgebraMap::structure(c.clone())?;
    let l_xs = kaehler(&x.target)?.complex.base_change(&p_x)?;
    let l_f = fol.cotangent.base_change(&p_y)?;
    let l = l_xs.direct_sum(&l_f)?;
    let a_y = fol.anchor.base_change(&p_y)?;
    let omega = kaehler(&c)?.complex;
    let mut maps = Vec::new();
    for d in l.degrees() {
        let mut m = PolyMatrix::zeros(l.rank(d), omega.rank(d));
        m.put(l_xs.rank(d), 0, &a_y.component(d));
        maps.push((d, m));
    }
    let anchor = ChainMap::new(omega, l.clone(), maps)?;
    let foliation = transport(&format!("Map({},{})", x.target.name, fol.name), &weil, &l, &anchor)?;
    Ok(MappingFoliation { weil, target_foliation: fol.clone(), foliation })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TangentComparison {
    pub point: Vec<(String, String)>,
    /// `dim H^n` of the dual of `L_{F'}` specialised at the point.
    pub lhs: BTreeMap<i32, usize>,
    /// `dim H^n Γ(X, T_{X/S} ⊕ g^*T_F)`.
    pub rhs: BTreeMap<i32, usize>,
    pub passed: bool,
}

fn homology_dims(c: &PerfectComplex) -> Result<BTreeMap<i32, usize>> {
    Ok(c.homology_all(None)?
        .into_iter()
        .filter(|(_, h)| h.dimension > 0)
        .map(|(n, h)| (n, h.dimension))
        .collect())
}

/// Both sides of `T_g F' ≃ Γ_S(X, T_{X/S} ⊕ g^*T_F)` at a ℚ-point `g` of the
/// mapping scheme, given by its coordinates `z_{y,i}`.
pub fn tangent_at_point(m: &MappingFoliation, point: &[Scalar]) -> Result<TangentComparison> {
    let w = &m.weil.presentation;
    let x = &m.weil.map;
    if point.len() != w.nvars() {
        return Err(Error::InvalidPresentation(format!(
            "a point of `{}` needs {} coordinates, got {}",
            w.name,
            w.nvars(),
            point.len()
        )));
    }
    if w.relations().iter().any(|r| !w.evaluate(r, point).is_zero()) {
        return Err(Error::InvalidPresentation(format!("not a point of `{}`", w.name)));
    }
    let q = AlgebraPresentation::rational();
    let at = AlgebraMap::new(w.clone(), q.clone(), point.iter().map(|v| q.ring().constant(v.clone())).collect())?;
    let lhs = homology_dims(&m.foliation.cotangent.base_change(&at)?.dual())?;

    let y = &m.target_foliation.owner;
    let b = &x.target;
    let n = x.rank();
    let mut images = Vec::new();
    for k in 0..y.nvars() {
        let mut img = Poly::zero();
        for i in 0..n {
            img = img.add(&x.basis_poly(i).scale(&point[k * n + i]));
        }
        images.push(img);
    }
    let g = AlgebraMap::new(y.clone(), b.clone(), images)?;
    let t_xs = kaehler(b)?.complex.dual();
    let g_tf = m.target_foliation.cotangent.dual().base_change(&g)?;
    let rhs = homology_dims(&x.restrict(&t_xs.direct_sum(&g_tf)?)?)?;
    let names = w.ring().vars.iter().map(|v| v.name.clone());
    Ok(TangentComparison {
        point: names.zip(point.iter().map(fmt_scalar)).collect(),
        passed: lhs == rhs,
        lhs,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_core::q;

    fn dual_numbers() -> FiniteFreeMap {
        let b = AlgebraPresentation::quotient("D", &["t"], &["t^2"]).unwrap();
        let basis = [b.parse("1").unwrap(), b.parse("t").unwrap()];
        FiniteFreeMap::new(b, &basis).unwrap()
    }

    fn split() -> FiniteFreeMap {
        let b = AlgebraPresentation::quotient("E", &["e"], &["e^2 - e"]).unwrap();
        let basis = [b.parse("1").unwrap(), b.parse("e").unwrap()];
        FiniteFreeMap::new(b, &basis).unwrap()
    }

    fn over(b: &FiniteFreeMap, gens: &[&str], rels: &[&str]) -> Arc<AlgebraPresentation> {
        let mut builder = AlgebraPresentation::builder("C").base(b.target.clone()).generators(gens);
        for r in rels {
            builder = builder.relation(r);
        }
        Arc::new(builder.build().unwrap())
    }

    #[test]
    fn dual_numbers_table() {
        let f = dual_numbers();
        assert!(f.report().passed);
        // t·t = 0
        assert!(f.table[1][1].iter().all(Poly::is_zero));
    }

    #[test]
    fn non_basis_is_rejected() {
        let b = AlgebraPresentation::quotient("D", &["t"], &["t^2"]).unwrap();
        let only_one = [b.parse("1").unwrap()];
        assert!(matches!(FiniteFreeMap::new(b.clone(), &only_one), Err(Error::UnsupportedInput(_))));
        let poly = AlgebraPresentation::polynomial("P", &["t"]).unwrap();
        let basis = [poly.parse("1").unwrap(), poly.parse("t").unwrap()];
        assert!(matches!(FiniteFreeMap::new(poly, &basis), Err(Error::UnsupportedInput(_))));
    }

    #[test]
    fn restriction_of_affine_line_is_the_plane() {
        let f = dual_numbers();
        let w = weil_restrict(&over(&f, &["z"], &[]), &f).unwrap();
        assert_eq!(w.generator_names(), vec!["z0", "z1"]);
        assert!(w.presentation.own_relations().is_empty());
        assert_eq!(w.report().expansion, vec![("z".to_string(), "z1*t + z0".to_string())]);
    }

    #[test]
    fn restriction_of_square_root_of_t() {
        let f = dual_numbers();
        let w = weil_restrict(&over(&f, &["z"], &["z^2 - t"]), &f).unwrap();
        // oracle: (z0 + z1 t)^2 - t = z0^2 + (2 z0 z1 - 1) t
        let p = &w.presentation;
        let mut rels: Vec<String> = p.own_relations().iter().map(|r| p.fmt(r)).collect();
        rels.sort();
        assert_eq!(rels, vec!["2*z0*z1 - 1", "z0^2"]);
    }

    #[test]
    fn restriction_of_base_is_terminal() {
        let f = dual_numbers();
        let w = weil_restrict(&over(&f, &[], &[]), &f).unwrap();
        assert_eq!(w.presentation.nvars(), 0);
        for t in test_algebras() {
            let r = check_functor_of_points(&w, &t).unwrap();
            assert_eq!(r.restricted_points, PointCount::Finite { count: 1 });
            assert!(r.passed);
        }
    }

    #[test]
    fn square_root_of_t_has_no_points() {
        let f = dual_numbers();
        let w = weil_restrict(&over(&f, &["z"], &["z^2 - t"]), &f).unwrap();
        for t in test_algebras() {
            let r = check_functor_of_points(&w, &t).unwrap();
            assert_eq!(r.restricted_points, PointCount::Finite { count: 0 }, "{}", t.name);
            assert!(r.passed);
        }
    }

    #[test]
    fn affine_line_points_round_trip() {
        let f = dual_numbers();
        let w = weil_restrict(&over(&f, &["z"], &[]), &f).unwrap();
        let r = check_functor_of_points(&w, &AlgebraPresentation::rational()).unwrap();
        assert_eq!(r.restricted_points, PointCount::Infinite);
        assert_eq!(r.sampled, 5);
        assert!(r.passed);
    }

    #[test]
    fn finite_point_count_over_split_algebra() {
        // z^2 = e over Q×Q: z = ±1 on the second factor, 0 on the first
        let f = split();
        let w = weil_restrict(&over(&f, &["z"], &["z^2 - e"]), &f).unwrap();
        let r = check_functor_of_points(&w, &AlgebraPresentation::rational()).unwrap();
        assert_eq!(r.restricted_points, PointCount::Finite { count: 2 });
        assert!(r.passed);
    }

    #[test]
    fn f_plus_of_free_modules() {
        let f = dual_numbers();
        let e = PerfectComplex::free(f.target.clone(), 0, vec!["a".into(), "b".into()]).unwrap();
        let out = f.f_plus(&e).unwrap();
        assert_eq!(out.ranks(), [(0, 4)].into());
        assert_eq!(out.labels(0), ["a0", "a1", "b0", "b1"]);
    }

    #[test]
    fn f_plus_of_multiplication_by_t() {
        let f = dual_numbers();
        let b = f.target.clone();
        let e = PerfectComplex::new(
            b.clone(),
            vec![(-1, vec!["u".into()]), (0, vec!["v".into()])],
            vec![(-1, PolyMatrix::parse(&b, &[&["t"]]).unwrap())],
        )
        .unwrap();
        let out = f.f_plus(&e).unwrap();
        // oracle: t·1 = t, t·t = 0 gives [[0, 0], [1, 0]] of rank 1; f₊ sees it in the dual basis
        assert_eq!(f.mult_matrix(&b.parse("t").unwrap()).unwrap().render(&f.source), vec![vec!["0", "0"], vec!["1", "0"]]);
        assert_eq!(out.diff(-1).render(&f.source), vec![vec!["0", "1"], vec!["0", "0"]]);
        assert_eq!(out.homology(-1, None).unwrap().dimension, 1);
        assert_eq!(out.homology(0, None).unwrap().dimension, 1);
    }

    #[test]
    fn mapping_schemes() {
        let y = AlgebraPresentation::polynomial("Y", &["y"]).unwrap();
        for f in [dual_numbers(), split()] {
            let w = mapping_scheme(&f, &y).unwrap();
            assert_eq!(w.generator_names(), vec!["y0", "y1"]);
            assert!(w.presentation.own_relations().is_empty());
        }
        let s = AlgebraPresentation::rational();
        let w = mapping_scheme(&dual_numbers(), &s).unwrap();
        assert_eq!(w.presentation.nvars(), 0);
    }

    #[test]
    fn pushforward_of_final_foliation_over_split_algebra() {
        let f = split();
        let c = over(&f, &["z"], &[]);
        let fol = FoliationPresentation::final_foliation(&c).unwrap();
        let pushed = pushforward_foliation(&fol, &f).unwrap();
        assert_eq!(pushed.foliation.cotangent.ranks(), [(0, 2)].into());
        assert!(pushed.foliation.verify(&crate::Window::default()).unwrap().passed);
        let zero = FoliationPresentation::zero_foliation(&c).unwrap();
        let pushed = pushforward_foliation(&zero, &f).unwrap();
        assert!(pushed.foliation.cotangent.is_zero());
    }

    #[test]
    fn tangent_formula_over_dual_numbers() {
        let y = AlgebraPresentation::polynomial("Y", &["y"]).unwrap();
        let fin = FoliationPresentation::final_foliation(&y).unwrap();
        let m = mapping_foliation(&dual_numbers(), &fin).unwrap();
        assert!(m.foliation.verify(&crate::Window::default()).unwrap().passed);
        for pt in [[q(0), q(0)], [q(1), q(2)], [qf(-1, 2), q(3)]] {
            let r = tangent_at_point(&m, &pt).unwrap();
            // oracle: T_{X/S} restricted is [Q^2 → Q^2] with matrix of 2t (rank 1), plus Q^2 from g^*T_F
            assert_eq!(r.rhs, [(0, 3), (1, 1)].into());
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn tangent_formula_over_split_algebra() {
        let y = AlgebraPresentation::polynomial("Y", &["y"]).unwrap();
        let fin = FoliationPresentation::final_foliation(&y).unwrap();
        let m = mapping_foliation(&split(), &fin).unwrap();
        let r = tangent_at_point(&m, &[q(1), q(-1)]).unwrap();
        assert_eq!(r.lhs, [(0, 2)].into());
        assert!(r.passed);
        let zero = FoliationPresentation::zero_foliation(&y).unwrap();
        let m = mapping_foliation(&split(), &zero).unwrap();
        let r = tangent_at_point(&m, &[q(1), q(-1)]).unwrap();
        assert!(r.lhs.is_empty() && r.passed);
    }
}
