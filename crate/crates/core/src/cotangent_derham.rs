//! Kähler differentials, conormal cotangent complexes of complete intersections,
//! Koszul semi-free models, and de Rham graded mixed algebras.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_core::complex::{PerfectComplex, PolyMatrix, Truncation};
use crate::exact_core::{AlgebraPresentation, Poly, VarSpec};
use crate::graded_mixed::GradedMixedPresentation;
use crate::Window;

/// `L_{B/A}` as a perfect complex over `B`, with the class of `dg` for every
/// own generator `g` of `B` (a column over the degree-0 basis).
#[derive(Clone, Debug)]
pub struct CotangentModel {
    pub owner: Arc<AlgebraPresentation>,
    pub complex: PerfectComplex,
    pub classes: Vec<(String, Vec<Poly>)>,
}

impl CotangentModel {
    /// Chain-level anchor `dg ↦ class(dg)` needs this: index of `dg` in degree 0.
    pub fn class_of(&self, gen: &str) -> Option<&[Poly]> {
        self.classes.iter().find(|(g, _)| g == gen).map(|(_, c)| c.as_slice())
    }
}

fn differential_name(alg: &AlgebraPresentation, i: usize) -> String {
    format!("d{}", alg.ring().vars[i].name)
}

/// Own generators of `b` and `d`-labels for them.
fn own_dx(b: &AlgebraPresentation) -> Vec<(usize, String)> {
    b.own_indices().map(|i| (i, differential_name(b, i))).collect()
}

/// Free module on `dg` for each own generator; quotients flagged smooth or lci
/// get the conormal two-term complex instead.
pub fn kaehler(b: &Arc<AlgebraPresentation>) -> Result<CotangentModel> {
    if !b.own_relations().is_empty() {
        if !(b.smooth || b.lci) {
            return Err(Error::AmbiguousInput(format!(
                "`{}` has relations but is flagged neither smooth nor lci",
                b.name
            )));
        }
        return cotangent_lci(b, None);
    }
    free_cotangent(b)
}

fn free_cotangent(b: &Arc<AlgebraPresentation>) -> Result<CotangentModel> {
    if !b.is_discrete() {
        return Err(Error::UnsupportedInput(format!("`{}` is not discrete", b.name)));
    }
    let dx = own_dx(b);
    let complex =
        PerfectComplex::free(b.clone(), 0, dx.iter().map(|(_, n)| n.clone()).collect())?;
    let classes = unit_classes(b, &dx);
    Ok(CotangentModel { owner: b.clone(), complex, classes })
}

fn unit_classes(b: &AlgebraPresentation, dx: &[(usize, String)]) -> Vec<(String, Vec<Poly>)> {
    dx.iter()
        .enumerate()
        .map(|(k, (i, _))| {
            let col = (0..dx.len())
                .map(|r| if r == k { b.ring().one() } else { Poly::zero() })
                .collect();
            (b.ring().vars[*i].name.clone(), col)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KoszulReport {
    pub relations: usize,
    /// Koszul homology in degrees `-r..-1` (must vanish for a regular sequence).
    pub higher_homology: BTreeMap<i32, usize>,
    /// `dim H^0` of the Koszul complex against `dim B`, both up to the bound.
    pub h0: usize,
    pub owner_dim: usize,
    pub bound: Option<u32>,
    pub truncation: Option<Truncation>,
    pub passed: bool,
}

/// The ambient polynomial presentation `P` of `B = P/(f)`.
fn ambient(b: &AlgebraPresentation) -> Result<Arc<AlgebraPresentation>> {
    let mut builder = AlgebraPresentation::builder(&format!("P({})", b.name));
    if let Some(base) = &b.base {
        builder = builder.base(base.clone());
    }
    for i in b.own_indices() {
        builder = builder.generator(&b.ring().vars[i].name, b.ring().vars[i].degree);
    }
    Ok(Arc::new(builder.build()?))
}

/// Koszul complex of the own relations over the ambient polynomial ring, and
/// its homology up to `bound` (exact when `B` is finite-dimensional).
pub fn koszul_check(b: &Arc<AlgebraPresentation>, bound: Option<u32>) -> Result<KoszulReport> {
    let p = ambient(b)?;
    let rels = b.own_relations().to_vec();
    let mut k = PerfectComplex::free(p.clone(), 0, vec!["1".into()])?;
    for (i, f) in rels.iter().enumerate() {
        let step = PerfectComplex::new(
            p.clone(),
            vec![(-1, vec![format!("e{}", i + 1)]), (0, vec!["1".into()])],
            vec![(-1, PolyMatrix::from_rows(vec![vec![f.clone()]], 1))],
        )?;
        k = k.tensor(&step)?;
    }
    // Koszul homology of a finite-dimensional quotient sits below the socle
    // degree plus the total degree of the relations
    let bound = if b.is_finite_dimensional() {
        let shift: u32 = rels.iter().filter_map(Poly::max_total_degree).sum();
        Some(bound.unwrap_or(0).max(total_degree_bound(b)? + shift))
    } else {
        Some(bound.unwrap_or(Window::default().poly_degree))
    };
    let mut higher = BTreeMap::new();
    let mut truncation = None;
    for n in -(rels.len() as i32)..0 {
        let h = k.homology(n, bound)?;
        truncation = Some(h.truncation.clone());
        higher.insert(n, h.dimension);
    }
    let h0 = k.homology(0, bound)?;
    let owner_dim = b.standard_monomials(bound)?.len();
    let passed = higher.values().all(|&d| d == 0) && h0.dimension == owner_dim;
    Ok(KoszulReport {
        relations: rels.len(),
        higher_homology: higher,
        h0: h0.dimension,
        owner_dim,
        bound,
        truncation: truncation.or(Some(h0.truncation)),
        passed,
    })
}

fn total_degree_bound(b: &AlgebraPresentation) -> Result<u32> {
    Ok(b.standard_monomials(None)?.iter().map(|m| m.total_degree()).max().unwrap_or(0))
}

/// `[B^r → ⊕ B·dx_j]`, `e_i ↦ Σ_j ∂f_i/∂x_j dx_j`, after checking that the own
/// relations form a regular sequence (exactly when `B` is finite-dimensional,
/// inside the bound otherwise).
pub fn cotangent_lci(b: &Arc<AlgebraPresentation>, bound: Option<u32>) -> Result<CotangentModel> {
    let rels = b.own_relations().to_vec();
    if rels.is_empty() {
        return free_cotangent(b);
    }
    let report = koszul_check(b, bound)?;
    if !report.passed {
        return Err(Error::NotRegular(format!(
            "Koszul homology of `{}`: higher {:?}, H^0 {} vs {}",
            b.name, report.higher_homology, report.h0, report.owner_dim
        )));
    }
    let dx = own_dx(b);
    let mut m = PolyMatrix::zeros(dx.len(), rels.len());
    for (i, f) in rels.iter().enumerate() {
        for (r, (j, _)) in dx.iter().enumerate() {
            m.set(r, i, b.reduce(&b.ring().partial(f, *j)));
        }
    }
    let complex = PerfectComplex::new(
        b.clone(),
        vec![
            (-1, (1..=rels.len()).map(|i| format!("e{i}")).collect()),
            (0, dx.iter().map(|(_, n)| n.clone()).collect()),
        ],
        vec![(-1, m)],
    )?;
    Ok(CotangentModel { owner: b.clone(), complex, classes: unit_classes(b, &dx) })
}

/// `P[e_1..e_r]` with `d(e_i) = f_i`; `B` itself when there are no relations.
pub fn koszul_model(b: &Arc<AlgebraPresentation>) -> Result<Arc<AlgebraPresentation>> {
    if b.own_relations().is_empty() {
        return Ok(b.clone());
    }
    let mut builder = AlgebraPresentation::builder(&format!("K({})", b.name));
    if let Some(base) = &b.base {
        builder = builder.base(base.clone());
    }
    for i in b.own_indices() {
        builder = builder.generator(&b.ring().vars[i].name, b.ring().vars[i].degree);
    }
    let names: Vec<String> = (1..=b.own_relations().len()).map(|i| format!("e{i}")).collect();
    for n in &names {
        builder = builder.generator(n, -1);
    }
    let probe = ambient(b)?;
    for (n, f) in names.iter().zip(b.own_relations()) {
        let src = probe.fmt(&f.clone());
        builder = builder.differential(n, &src);
    }
    Ok(Arc::new(builder.build()?))
}

/// The de Rham algebra with the presentation it was built on.
#[derive(Clone, Debug)]
pub struct DeRhamAlgebra {
    pub gm: Arc<GradedMixedPresentation>,
    /// `B` itself, or its Koszul model when `B` has relations.
    pub model: Arc<AlgebraPresentation>,
    pub cotangent: Option<CotangentModel>,
    pub weight_bound: u32,
    pub provenance: Vec<String>,
}

/// `DR(B/A) = Sym_B(L_{B/A}[1])` with `ε(g) = dg`; quotients go through their
/// Koszul model, where `ε(e_i) = de_i` and `d(de_i) = -Σ ∂f_i/∂x_j dx_j`.
pub fn de_rham(b: &Arc<AlgebraPresentation>, weight_bound: u32) -> Result<DeRhamAlgebra> {
    let model = koszul_model(b)?;
    let routed = !Arc::ptr_eq(&model, b);
    let cotangent = if b.is_discrete() { Some(kaehler(b)?) } else { None };
    let ring = model.ring();
    let own: Vec<usize> = model.own_indices().collect();
    let mut gens = Vec::new();
    for &i in &own {
        let v = &ring.vars[i];
        gens.push(VarSpec::new(differential_name(&model, i), v.degree - 1, 1));
    }
    let full = ring.extended(gens.clone());
    let n = full.nvars();
    let start = model.nvars();
    let mut eps = vec![Poly::zero(); n];
    let mut d_gens = vec![Poly::zero(); gens.len()];
    for (k, &i) in own.iter().enumerate() {
        eps[i] = full.var(start + k);
    }
    // d(dg) = -ε(d g), with ε(d g) the de Rham differential of a polynomial in the x's
    for (k, &i) in own.iter().enumerate() {
        let dg = model.differential()[i].padded(n);
        let eps_dg = full.apply_derivation(&eps, true, &dg);
        d_gens[k] = eps_dg.neg();
    }
    let name = match &b.base {
        Some(a) => format!("DR({}/{})", b.name, a.name),
        None => format!("DR({}/Q)", b.name),
    };
    let mut gm = GradedMixedPresentation::new(&name, model.clone(), gens, d_gens, eps)?;
    let mut provenance = vec![format!("weight-n piece is Sym^n of the cotangent of `{}` shifted by one", model.name)];
    if routed {
        provenance.push(format!("strict model via Koszul resolution `{}` of `{}`", model.name, b.name));
    }
    gm.provenance = provenance.clone();
    Ok(DeRhamAlgebra { gm: Arc::new(gm), model, cotangent, weight_bound, provenance })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeRhamCohomology {
    pub window: Window,
    /// `dim H^t` by total degree `t = degree + 2·weight`.
    pub dims: BTreeMap<i32, usize>,
    pub provenance: Vec<String>,
}

pub fn de_rham_cohomology(dr: &DeRhamAlgebra, window: Option<&Window>) -> Result<DeRhamCohomology> {
    let infinite = !dr.model.is_finite_dimensional() || dr.gm.generators().iter().any(|v| !v.is_odd());
    let window = match window {
        Some(w) => *w,
        None if !infinite => Window { poly_degree: u32::MAX / 4, ..Window::default() },
        None => return Err(Error::MissingBound { owner: dr.gm.name.clone() }),
    };
    let dims = dr.gm.total_cohomology(&window)?;
    Ok(DeRhamCohomology { window, dims, provenance: dr.provenance.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kaehler_of_polynomial_rings() {
        let b = AlgebraPresentation::polynomial("B", &["x", "y"]).unwrap();
        assert_eq!(kaehler(&b).unwrap().complex.rank(0), 2);
        let q = AlgebraPresentation::rational();
        assert!(kaehler(&q).unwrap().complex.is_zero());
    }

    #[test]
    fn relative_kaehler_of_identity_is_zero() {
        let b = AlgebraPresentation::polynomial("B", &["x"]).unwrap();
        let bb = Arc::new(AlgebraPresentation::builder("B/B").base(b).build().unwrap());
        assert!(kaehler(&bb).unwrap().complex.is_zero());
    }

    #[test]
    fn unflagged_quotient_is_ambiguous() {
        let b = Arc::new(
            AlgebraPresentation::builder("B").generators(&["x"]).relation("x^2").build().unwrap(),
        );
        assert!(matches!(kaehler(&b), Err(Error::AmbiguousInput(_))));
    }

    #[test]
    fn dual_numbers_conormal_homology() {
        let b = AlgebraPresentation::quotient("B", &["x"], &["x^2"]).unwrap();
        let l = cotangent_lci(&b, None).unwrap();
        assert_eq!(l.complex.diff(-1).render(&b), vec![vec!["2*x".to_string()]]);
        assert_eq!(l.complex.homology(0, None).unwrap().dimension, 1);
        assert_eq!(l.complex.homology(-1, None).unwrap().dimension, 1);
    }

    #[test]
    fn non_regular_sequence_is_rejected() {
        let b = AlgebraPresentation::quotient("B", &["x"], &["x^2", "x^3"]).unwrap();
        assert!(matches!(cotangent_lci(&b, None), Err(Error::NotRegular(_))));
    }

    #[test]
    fn koszul_model_of_dual_numbers() {
        let b = AlgebraPresentation::quotient("B", &["x"], &["x^2"]).unwrap();
        let k = koszul_model(&b).unwrap();
        assert_eq!(k.fmt(&k.d(&k.parse("e1").unwrap())), "x^2");
        let r = koszul_check(&b, None).unwrap();
        assert!(r.passed);
        assert_eq!(r.h0, 2);
    }

    #[test]
    fn de_rham_of_two_variables_passes_verification() {
        let b = AlgebraPresentation::polynomial("B", &["x", "y"]).unwrap();
        let dr = de_rham(&b, 3).unwrap();
        let rep = dr.gm.verify_mixed(Some(&Window::default())).unwrap();
        assert!(rep.passed);
        assert_eq!(dr.gm.fmt(&dr.gm.eps(&dr.gm.parse("x").unwrap())), "dx");
    }

    #[test]
    fn de_rham_of_koszul_model_has_d_of_de() {
        let b = AlgebraPresentation::quotient("B", &["x"], &["x^2"]).unwrap();
        let dr = de_rham(&b, 3).unwrap();
        let g = &dr.gm;
        let names: Vec<&str> = g.generators().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, vec!["dx", "de1"]);
        assert_eq!(g.fmt(&g.d(&g.parse("de1").unwrap())), "-2*x*dx");
        assert!(g.verify_mixed(Some(&Window::default())).unwrap().passed);
    }
}
