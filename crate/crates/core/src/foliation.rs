//! Derived foliations on affine bases: `Sym_B(L_F[1])` with a strict mixed
//! structure, the checks defining them, tangent complexes, and pull-back along
//! maps of smooth bases via the cotangent pushout.

use std::sync::Arc;

use serde::Serialize;

use crate::cotangent_derham::{de_rham, kaehler};
use crate::error::{Error, Result};
use crate::exact_core::complex::{ChainMap, PerfectComplex, PolyMatrix};
use crate::exact_core::{AlgebraMap, AlgebraPresentation, Poly, VarSpec};
use crate::graded_mixed::{
    coefficient_of, pullback_gm, GmMap, GradedMixedPresentation, MixedVerificationReport,
    QuasiFreeReport,
};
use crate::Window;

#[derive(Clone, Debug)]
pub struct FoliationPresentation {
    pub name: String,
    pub owner: Arc<AlgebraPresentation>,
    /// `L_F = F(1)[-1]`.
    pub cotangent: PerfectComplex,
    /// `L_{B/A} → L_F`, read off from `ε` on the generators of `B`.
    pub anchor: ChainMap,
    pub gm: Arc<GradedMixedPresentation>,
    pub provenance: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FoliationReport {
    pub weight_zero_is_base: bool,
    pub quasi_free: QuasiFreeReport,
    pub perfect: bool,
    pub amplitude: Option<(i32, i32)>,
    pub mixed: MixedVerificationReport,
    pub passed: bool,
}

fn require_smooth(b: &AlgebraPresentation) -> Result<()> {
    if !b.is_discrete() || !b.own_relations().is_empty() {
        return Err(Error::UnsupportedInput(format!(
            "`{}` must be polynomial over its base (no own relations, no differential)",
            b.name
        )));
    }
    Ok(())
}

impl FoliationPresentation {
    /// Wraps a graded mixed algebra generated in weight 1 over a discrete base.
    /// The structure map from the de Rham algebra is attached when it is a map
    /// of graded mixed algebras.
    pub fn from_mixed(name: &str, gm: GradedMixedPresentation) -> Result<Self> {
        let b = gm.owner.clone();
        if !b.is_discrete() {
            return Err(Error::UnsupportedInput(format!("`{}` is not discrete", b.name)));
        }
        if gm.generators().iter().any(|v| v.weight != 1) {
            return Err(Error::UnsupportedInput(format!(
                "`{}` must be generated in weight 1",
                gm.name
            )));
        }
        let cotangent = gm.cotangent()?;
        let source = kaehler(&b)?.complex;
        let start = gm.gen_start();
        let l0: Vec<usize> = gm
            .generators()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.degree == -1)
            .map(|(j, _)| start + j)
            .collect();
        let own: Vec<usize> = b.own_indices().collect();
        let mut m = PolyMatrix::zeros(l0.len(), own.len());
        // row order of L^0 follows the weight basis, which lists generators in declaration order
        for (c, &x) in own.iter().enumerate() {
            for (r, &j) in l0.iter().enumerate() {
                let coeff = coefficient_of(&gm, &gm.eps_images()[x], j);
                m.set(r, c, truncate(&coeff, b.nvars()));
            }
        }
        let anchor = ChainMap::new(source, cotangent.clone(), vec![(0, m)])?;
        let mut gm = gm;
        if gm.structure.is_none() && b.own_relations().is_empty() {
            let dr = Arc::new(de_rham(&b, 3)?.gm.as_ref().clone());
            let mut images: Vec<Poly> = (0..b.nvars()).map(|i| gm.ring().var(i)).collect();
            for &x in &own {
                images.push(gm.eps_images()[x].clone());
            }
            if let Ok(with) = gm.clone().with_structure(dr, images) {
                gm = with;
            } else {
                gm.provenance.push("no structure map from the de Rham algebra".into());
            }
        }
        let provenance = gm.provenance.clone();
        Ok(FoliationPresentation {
            name: name.into(),
            owner: b,
            cotangent,
            anchor,
            gm: Arc::new(gm),
            provenance,
        })
    }

    /// `L_F = L_{B/A}`, anchor the identity, `ε` the de Rham differential.
    pub fn final_foliation(b: &Arc<AlgebraPresentation>) -> Result<Self> {
        require_smooth(b)?;
        let dr = de_rham(b, 3)?;
        let mut gm = dr.gm.as_ref().clone();
        gm.name = format!("final({})", b.name);
        Self::from_mixed(&gm.name.clone(), gm)
    }

    /// `L_F = 0`, `ε = 0`.
    pub fn zero_foliation(b: &Arc<AlgebraPresentation>) -> Result<Self> {
        require_smooth(b)?;
        let gm = GradedMixedPresentation::new(
            &format!("zero({})", b.name),
            b.clone(),
            vec![],
            vec![],
            vec![Poly::zero(); b.nvars()],
        )?;
        Self::from_mixed(&gm.name.clone(), gm)
    }

    /// `Sym_B(L[1])` with `ε(x) = anchor(dx)` on the own generators of `B` and
    /// `ε = 0` on the generators coming from `L`. The anchor's source must be
    /// the Kähler complex of `B` over its base.
    pub fn from_cotangent(name: &str, l: &PerfectComplex, anchor: &ChainMap) -> Result<Self> {
        let b = l.owner().clone();
        let omega = kaehler(&b)?.complex;
        if omega.ranks() != anchor.source.ranks() || !anchor.target.same_as(l) {
            return Err(Error::TypeMismatch(format!(
                "anchor of `{name}` must run from the Kähler complex of `{}` to L",
                b.name
            )));
        }
        let nb = b.nvars();
        let mut gens = Vec::new();
        let mut position = std::collections::BTreeMap::new();
        for k in l.degrees() {
            for (j, label) in l.labels(k).iter().enumerate() {
                let mut name = label.clone();
                while b.ring().index_of(&name).is_some() || gens.iter().any(|v: &VarSpec| v.name == name) {
                    name = format!("s_{name}");
                }
                position.insert((k, j), nb + gens.len());
                gens.push(VarSpec::new(name, k - 1, 1));
            }
        }
        let ring = b.ring().extended(gens.clone());
        let n = ring.nvars();
        let mut d_gens = Vec::new();
        for k in l.degrees() {
            let d = l.diff(k);
            for j in 0..d.cols {
                let mut img = Poly::zero();
                for i in 0..d.rows {
                    let s_i = ring.var(position[&(k + 1, i)]);
                    img = img.sub(&ring.mul(&d.get(i, j).padded(n), &s_i));
                }
                d_gens.push(img);
            }
        }
        let mut eps = vec![Poly::zero(); n];
        let a0 = anchor.component(0);
        for (c, x) in b.own_indices().enumerate() {
            let mut img = Poly::zero();
            for r in 0..a0.rows {
                img = img.add(&ring.mul(&a0.get(r, c).padded(n), &ring.var(position[&(0, r)])));
            }
            eps[x] = img;
        }
        let gm = GradedMixedPresentation::new(name, b, gens, d_gens, eps)?;
        Self::from_mixed(name, gm)
    }

    pub fn tangent(&self) -> PerfectComplex {
        self.cotangent.dual()
    }

    /// Weight 0 is the base, `Sym_{F(0)} F(1) → F` has equal ranks, `L_F` is
    /// perfect in nonpositive degrees, and the mixed identities hold.
    pub fn verify(&self, window: &Window) -> Result<FoliationReport> {
        let quasi_free = self.gm.quasi_free(window.weight);
        let weight_zero_is_base = quasi_free.weight_zero_is_owner && self.gm.owner.same_as(&self.owner);
        let amplitude = self.cotangent.amplitude();
        let perfect = amplitude.is_none_or(|(_, hi)| hi <= 0);
        let mixed = self.gm.verify_mixed(Some(window))?;
        let passed = weight_zero_is_base && quasi_free.passed && perfect && mixed.passed;
        Ok(FoliationReport { weight_zero_is_base, quasi_free, perfect, amplitude, mixed, passed })
    }
}

fn truncate(p: &Poly, n: usize) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        out.add_term(crate::exact_core::Monomial(m.0[..n].to_vec()), c.clone());
    }
    out
}

/// `f^*F`, with `L_{f^*F} ≃ L_{B'/A} ⊕_{f^*L_{B/A}} f^*L_F` realised as a cone.
pub fn pullback_foliation(f_fol: &FoliationPresentation, f: &AlgebraMap) -> Result<FoliationPresentation> {
    let gm = pullback_gm(&f_fol.gm, f)?;
    let name = format!("{}^*{}", f.target.name, f_fol.name);
    let mut out = FoliationPresentation::from_mixed(&name, gm)?;
    out.provenance.push("cotangent realised as cone(f^*L_B -> f^*L_F ⊕ L_B')".into());
    Ok(out)
}

/// `cone(f^*L_{B/A} → f^*L_F ⊕ L_{B'/A})` with the map `(f^*anchor, -df)`.
pub fn pushout_cotangent(f_fol: &FoliationPresentation, f: &AlgebraMap) -> Result<PerfectComplex> {
    let lb = f_fol.anchor.source.base_change(f)?;
    let lf = f_fol.cotangent.base_change(f)?;
    let lbp = kaehler(&f.target)?.complex;
    let target = lf.direct_sum(&lbp)?;
    let anchor = f_fol.anchor.base_change(f)?;
    let own_b: Vec<usize> = f.source.own_indices().collect();
    let own_bp: Vec<usize> = f.target.own_indices().collect();
    let mut maps = Vec::new();
    for n in target.degrees() {
        let a = anchor.component(n);
        let mut m = PolyMatrix::zeros(target.rank(n), lb.rank(n));
        m.put(0, 0, &a);
        if n == 0 {
            for (c, &x) in own_b.iter().enumerate() {
                for (r, &y) in own_bp.iter().enumerate() {
                    m.set(lf.rank(0) + r, c, f.jacobian(x, y).neg());
                }
            }
        }
        maps.push((n, m));
    }
    ChainMap::new(lb, target, maps)?.cone()
}

/// Map from `f^*final(B)` to the de Rham algebra of `B'`: `u_x ↦ d(f x)`,
/// `v_y ↦ dy`, `s_x ↦ 0`.
pub fn final_comparison(pulled: &FoliationPresentation, f: &AlgebraMap) -> Result<GmMap> {
    let bp = &f.target;
    let dr = de_rham(bp, 3)?.gm;
    let src = pulled.gm.clone();
    let nbp = bp.nvars();
    let own_b: Vec<usize> = f.source.own_indices().collect();
    let own_bp: Vec<usize> = bp.own_indices().collect();
    let ring = dr.ring();
    let mut images: Vec<Poly> = (0..nbp).map(|i| ring.var(i)).collect();
    let dr_of = |p: &Poly| dr.eps(&p.padded(ring.nvars()));
    for &x in &own_b {
        images.push(dr_of(&f.images[x]));
    }
    for k in 0..own_bp.len() {
        images.push(ring.var(nbp + k));
    }
    for _ in &own_b {
        images.push(Poly::zero());
    }
    if images.len() != src.nvars() {
        return Err(Error::TypeMismatch("pulled-back foliation is not a pulled-back final foliation".into()));
    }
    GmMap::new(src, dr, images)
}

/// Map from `(g∘f)^*F` to `g^*(f^*F)`: identity on `F`'s generators and on the
/// de Rham generators of the final base, `s_x ↦ s_x + Σ_y g(∂f(x)/∂y) t_y`.
pub fn transitivity_comparison(
    direct: &FoliationPresentation,
    staged: &FoliationPresentation,
    f: &AlgebraMap,
    g: &AlgebraMap,
    nu: usize,
) -> Result<GmMap> {
    let (b, bp, bpp) = (&f.source, &f.target, &g.target);
    let nb = b.own_indices().len();
    let nbp = bp.own_indices().len();
    let nbpp = bpp.own_indices().len();
    let base = bpp.nvars();
    let t = staged.gm.ring();
    let n = t.nvars();
    let mut images: Vec<Poly> = (0..base).map(|i| t.var(i)).collect();
    for j in 0..nu {
        images.push(t.var(base + j));
    }
    let v_z = base + nu + nbp + nb;
    for k in 0..nbpp {
        images.push(t.var(v_z + k));
    }
    let t_y = v_z + nbpp;
    let s_x = base + nu + nbp;
    for (k, x) in b.own_indices().enumerate() {
        let mut img = t.var(s_x + k);
        for (l, y) in bp.own_indices().enumerate() {
            let c = g.apply(&f.jacobian(x, y)).padded(n);
            img = img.add(&t.mul(&c, &t.var(t_y + l)));
        }
        images.push(img);
    }
    GmMap::new(direct.gm.clone(), staged.gm.clone(), images)
}

/// For an inclusion sending every generator of `B` to a generator of `B'` (in
/// order, first), the map from the pulled-back zero foliation's cotangent to
/// Kähler differentials of `B'` relative to `B`.
pub fn relative_comparison(pulled_zero: &FoliationPresentation, f: &AlgebraMap) -> Result<ChainMap> {
    let (b, bp) = (&f.source, &f.target);
    let own_b: Vec<usize> = b.own_indices().collect();
    for (k, &x) in own_b.iter().enumerate() {
        if f.images[x] != bp.ring().var(bp.own_start() + k) {
            return Err(Error::UnsupportedInput("not a coordinate inclusion".into()));
        }
    }
    let mut builder = AlgebraPresentation::builder(&format!("{}/{}", bp.name, b.name)).base(b.clone());
    for i in (bp.own_start() + own_b.len())..bp.nvars() {
        builder = builder.generator(&bp.ring().vars[i].name, 0);
    }
    let rel = Arc::new(builder.build()?);
    if !rel.same_as(bp) {
        return Err(Error::UnsupportedInput("base variables of the target differ".into()));
    }
    let target = kaehler(&rel)?.complex;
    let l = &pulled_zero.cotangent;
    // L^0 lists v_y for every own generator of B'; the new ones map to dy
    let mut m = PolyMatrix::zeros(target.rank(0), l.rank(0));
    for r in 0..target.rank(0) {
        m.set(r, own_b.len() + r, bp.ring().one());
    }
    ChainMap::new(l.clone(), target, vec![(0, m)])
}
