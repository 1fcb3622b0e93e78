use serde::Serialize;

use super::diagram::{normalize, TraceStep};
use super::{join_word, AdjunctionContext, MateTerm, Word};
use crate::error::{Error, Result};

/// A square with verticals `u : 𝒞′ → 𝒞`, `v : 𝒟′ → 𝒟`, adjunctions `top` (L′ ⊣ R′)
/// and `bottom` (L ⊣ R), and right transformation `phi : V∘R′ ⇒ R∘U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Square {
    pub name: String,
    pub u: Word,
    pub v: Word,
    pub top: usize,
    pub bottom: usize,
    pub phi: MateTerm,
}

impl Square {
    pub fn new(
        ctx: &AdjunctionContext,
        name: &str,
        u: Word,
        v: Word,
        top: usize,
        bottom: usize,
        phi: MateTerm,
    ) -> Result<Self> {
        let adj = ctx.adjunctions();
        if top >= adj.len() || bottom >= adj.len() {
            return Err(Error::InvalidPresentation(format!("square `{name}` names a missing adjunction")));
        }
        let sq = Square { name: name.to_string(), u, v, top, bottom, phi };
        let (r, r1) = (ctx.one_cell(&adj[bottom].right)?, ctx.one_cell(&adj[top].right)?);
        let check = |w: &Word, from: &str, to: &str, label: &str| -> Result<()> {
            match ctx.word_ends(w)? {
                Some((f, t)) if f == from && t == to => Ok(()),
                None if from == to => Ok(()),
                _ => Err(Error::TypeMismatch(format!(
                    "square `{name}`: {label} must go {from} -> {to}"
                ))),
            }
        };
        check(&sq.u, &r1.from, &r.from, "U")?;
        check(&sq.v, &r1.to, &r.to, "V")?;
        let b = ctx.boundary(&sq.phi)?;
        if b.src != sq.right_source(ctx) || b.tgt != sq.right_target(ctx) {
            return Err(Error::TypeMismatch(format!(
                "square `{name}`: φ must be {} ⇒ {}, got {} ⇒ {}",
                join_word(&sq.right_source(ctx)),
                join_word(&sq.right_target(ctx)),
                join_word(&b.src),
                join_word(&b.tgt)
            )));
        }
        Ok(sq)
    }

    fn names(&self, ctx: &AdjunctionContext) -> Names {
        let (b, t) = (&ctx.adjunctions()[self.bottom], &ctx.adjunctions()[self.top]);
        Names {
            l: b.left.clone(),
            r: b.right.clone(),
            eta: b.unit.clone(),
            eps: b.counit.clone(),
            l1: t.left.clone(),
            r1: t.right.clone(),
            eta1: t.unit.clone(),
            eps1: t.counit.clone(),
        }
    }

    /// `V∘R′`.
    pub fn right_source(&self, ctx: &AdjunctionContext) -> Word {
        let n = self.names(ctx);
        cat(&[&self.v, &[n.r1]])
    }

    /// `R∘U`.
    pub fn right_target(&self, ctx: &AdjunctionContext) -> Word {
        let n = self.names(ctx);
        cat(&[&[n.r], &self.u])
    }

    /// `L∘V ⇒ U∘L′`.
    pub fn left_boundary(&self, ctx: &AdjunctionContext) -> (Word, Word) {
        let n = self.names(ctx);
        (cat(&[&[n.l], &self.v]), cat(&[&self.u, &[n.l1]]))
    }
}

struct Names {
    l: String,
    r: String,
    eta: String,
    eps: String,
    l1: String,
    r1: String,
    eta1: String,
    eps1: String,
}

fn cat(parts: &[&[String]]) -> Word {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn one(s: &str) -> Word {
    vec![s.to_string()]
}

/// `φ^L := (ε ⋆ (U∘L′)) ∘ (L ⋆ φ ⋆ L′) ∘ ((L∘V) ⋆ η′)`.
pub fn mate_left(ctx: &AdjunctionContext, sq: &Square, phi: &MateTerm) -> Result<MateTerm> {
    let b = ctx.boundary(phi)?;
    if b.src != sq.right_source(ctx) || b.tgt != sq.right_target(ctx) {
        return Err(Error::TypeMismatch(format!(
            "`{phi}` is not a right transformation of square `{}`",
            sq.name
        )));
    }
    let n = sq.names(ctx);
    Ok(MateTerm::compose(vec![
        MateTerm::gen(&n.eps).whisker(&[], &cat(&[&sq.u, &one(&n.l1)])),
        phi.clone().whisker(&one(&n.l), &one(&n.l1)),
        MateTerm::gen(&n.eta1).whisker(&cat(&[&one(&n.l), &sq.v]), &[]),
    ]))
}

/// `ψ^R := ((R∘U) ⋆ ε′) ∘ (R ⋆ ψ ⋆ R′) ∘ (η ⋆ (V∘R′))`.
pub fn mate_right(ctx: &AdjunctionContext, sq: &Square, psi: &MateTerm) -> Result<MateTerm> {
    let b = ctx.boundary(psi)?;
    let (src, tgt) = sq.left_boundary(ctx);
    if b.src != src || b.tgt != tgt {
        return Err(Error::TypeMismatch(format!(
            "`{psi}` is not a left transformation of square `{}`",
            sq.name
        )));
    }
    let n = sq.names(ctx);
    Ok(MateTerm::compose(vec![
        MateTerm::gen(&n.eps1).whisker(&cat(&[&one(&n.r), &sq.u]), &[]),
        psi.clone().whisker(&one(&n.r), &one(&n.r1)),
        MateTerm::gen(&n.eta).whisker(&[], &cat(&[&sq.v, &one(&n.r1)])),
    ]))
}

/// Outcome of comparing two normal forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MateCheck {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub lhs_normal: String,
    pub rhs_normal: String,
    pub passed: bool,
    pub steps: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lhs_trace: Vec<TraceStep>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rhs_trace: Vec<TraceStep>,
}

pub fn check_equal(
    ctx: &AdjunctionContext,
    name: &str,
    lhs: &MateTerm,
    rhs: &MateTerm,
    budget: usize,
    tracing: bool,
) -> Result<MateCheck> {
    let (bl, br) = (ctx.boundary(lhs)?, ctx.boundary(rhs)?);
    let nl = normalize(ctx, lhs, budget, tracing)?;
    let nr = normalize(ctx, rhs, budget, tracing)?;
    Ok(MateCheck {
        name: name.to_string(),
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        lhs_normal: nl.rendered,
        rhs_normal: nr.rendered,
        passed: bl.src == br.src && bl.tgt == br.tgt && nl.diagram == nr.diagram,
        steps: nl.steps + nr.steps,
        lhs_trace: nl.trace,
        rhs_trace: nr.trace,
    })
}

/// `mate_right(mate_left(φ))` against `φ`.
pub fn check_roundtrip(ctx: &AdjunctionContext, sq: &Square, budget: usize, tracing: bool) -> Result<MateCheck> {
    let back = mate_right(ctx, sq, &mate_left(ctx, sq, &sq.phi)?)?;
    check_equal(ctx, &format!("{}: mate round trip", sq.name), &back, &sq.phi, budget, tracing)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BcUnitReport {
    pub square: String,
    pub psi: String,
    pub counit: MateCheck,
    pub unit: MateCheck,
    pub passed: bool,
}

/// Both halves of the unit/co-unit compatibility for `psi` standing in for the mate of `φ`:
/// `(U ⋆ ε′) ∘ (ψ ⋆ R′) = (ε ⋆ U) ∘ (L ⋆ φ)` and `(R ⋆ ψ) ∘ (η ⋆ V) = (φ ⋆ L′) ∘ (V ⋆ η′)`.
pub fn check_bc_unit(
    ctx: &AdjunctionContext,
    sq: &Square,
    psi: &MateTerm,
    budget: usize,
    tracing: bool,
) -> Result<BcUnitReport> {
    let n = sq.names(ctx);
    let b = ctx.boundary(psi)?;
    let (src, tgt) = sq.left_boundary(ctx);
    if b.src != src || b.tgt != tgt {
        return Err(Error::TypeMismatch(format!(
            "`{psi}` is not a left transformation of square `{}`",
            sq.name
        )));
    }
    let counit_lhs = MateTerm::compose(vec![
        MateTerm::gen(&n.eps1).whisker(&sq.u, &[]),
        psi.clone().whisker(&[], &one(&n.r1)),
    ]);
    let counit_rhs = MateTerm::compose(vec![
        MateTerm::gen(&n.eps).whisker(&[], &sq.u),
        sq.phi.clone().whisker(&one(&n.l), &[]),
    ]);
    let unit_lhs = MateTerm::compose(vec![
        psi.clone().whisker(&one(&n.r), &[]),
        MateTerm::gen(&n.eta).whisker(&[], &sq.v),
    ]);
    let unit_rhs = MateTerm::compose(vec![
        sq.phi.clone().whisker(&[], &one(&n.l1)),
        MateTerm::gen(&n.eta1).whisker(&sq.v, &[]),
    ]);
    let counit = check_equal(ctx, "U sends the co-unit", &counit_lhs, &counit_rhs, budget, tracing)?;
    let unit = check_equal(ctx, "V sends the unit", &unit_lhs, &unit_rhs, budget, tracing)?;
    Ok(BcUnitReport {
        square: sq.name.clone(),
        psi: psi.to_string(),
        passed: counit.passed && unit.passed,
        counit,
        unit,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pasting {
    pub square: Square,
    pub psi: MateTerm,
    pub check: MateCheck,
}

/// The exterior of `top` stacked on `bottom`, carrying `Φ := (φ ⋆ U′) ∘ (V ⋆ φ′)`.
pub fn pasted_square(ctx: &AdjunctionContext, top: &Square, bottom: &Square) -> Result<Square> {
    if top.bottom != bottom.top {
        let a = &ctx.adjunctions()[top.bottom];
        let b = &ctx.adjunctions()[bottom.top];
        return Err(Error::BoundaryMismatch(format!(
            "`{}` ends at {} ⊣ {} but `{}` starts at {} ⊣ {}",
            top.name, a.left, a.right, bottom.name, b.left, b.right
        )));
    }
    let phi = MateTerm::compose(vec![
        bottom.phi.clone().whisker(&[], &top.u),
        top.phi.clone().whisker(&bottom.v, &[]),
    ]);
    Square::new(
        ctx,
        &format!("{}|{}", top.name, bottom.name),
        cat(&[&bottom.u, &top.u]),
        cat(&[&bottom.v, &top.v]),
        top.top,
        bottom.bottom,
        phi,
    )
}

/// Stacks `top` on `bottom` and compares the mate of the exterior with
/// `Ψ := (U ⋆ ψ′) ∘ (ψ ⋆ V′)`.
pub fn paste_squares(
    ctx: &AdjunctionContext,
    top: &Square,
    bottom: &Square,
    budget: usize,
    tracing: bool,
) -> Result<Pasting> {
    let square = pasted_square(ctx, top, bottom)?;
    let psi = mate_left(ctx, bottom, &bottom.phi)?;
    let psi1 = mate_left(ctx, top, &top.phi)?;
    let big_psi = MateTerm::compose(vec![psi1.whisker(&bottom.u, &[]), psi.whisker(&[], &top.v)]);
    let mate = mate_left(ctx, &square, &square.phi)?;
    let check = check_equal(
        ctx,
        &format!("{}: mate of pasting", square.name),
        &mate,
        &big_psi,
        budget,
        tracing,
    )?;
    Ok(Pasting { square, psi: big_psi, check })
}

/// `(a | b) | c` against `a | (b | c)` on the right transformations.
pub fn check_paste_associative(
    ctx: &AdjunctionContext,
    a: &Square,
    b: &Square,
    c: &Square,
    budget: usize,
) -> Result<MateCheck> {
    let left = pasted_square(ctx, &pasted_square(ctx, a, b)?, c)?;
    let right = pasted_square(ctx, a, &pasted_square(ctx, b, c)?)?;
    check_equal(ctx, "pasting is associative", &left.phi, &right.phi, budget, false)
}

/// The generic context: `L ⊣ R` on `𝒞, 𝒟`, `L′ ⊣ R′` on `𝒞′, 𝒟′`, verticals `U, V`
/// and an invertible `phi : V∘R′ ⇒ R∘U`.
pub fn free_square() -> Result<(AdjunctionContext, Square)> {
    let mut ctx = AdjunctionContext::new();
    for o in ["C", "D", "C'", "D'"] {
        ctx.add_object(o)?;
    }
    ctx.add_one_cell("L", "D", "C")?;
    ctx.add_one_cell("R", "C", "D")?;
    ctx.add_one_cell("L'", "D'", "C'")?;
    ctx.add_one_cell("R'", "C'", "D'")?;
    ctx.add_one_cell("U", "C'", "C")?;
    ctx.add_one_cell("V", "D'", "D")?;
    let bottom = ctx.add_adjunction("L", "R", "eta", "eps")?;
    let top = ctx.add_adjunction("L'", "R'", "eta'", "eps'")?;
    ctx.add_two_cell("phi", &["V", "R'"], &["R", "U"], true)?;
    let sq = Square::new(&ctx, "S", one("U"), one("V"), top, bottom, MateTerm::gen("phi"))?;
    Ok((ctx, sq))
}

/// `levels` adjunctions `Lk ⊣ Rk` on `Ck, Dk` with squares `Sk` from level `k+1` down to `k`,
/// each carrying an invertible `phik : Vk∘R(k+1) ⇒ Rk∘Uk`. Squares are listed top first.
pub fn free_tower(levels: usize) -> Result<(AdjunctionContext, Vec<Square>)> {
    let mut ctx = AdjunctionContext::new();
    let mut adj = Vec::new();
    for k in 0..levels {
        ctx.add_object(&format!("C{k}"))?;
        ctx.add_object(&format!("D{k}"))?;
        ctx.add_one_cell(&format!("L{k}"), &format!("D{k}"), &format!("C{k}"))?;
        ctx.add_one_cell(&format!("R{k}"), &format!("C{k}"), &format!("D{k}"))?;
        adj.push(ctx.add_adjunction(
            &format!("L{k}"),
            &format!("R{k}"),
            &format!("eta{k}"),
            &format!("eps{k}"),
        )?);
    }
    let mut squares = Vec::new();
    for k in (0..levels.saturating_sub(1)).rev() {
        let (u, v) = (format!("U{k}"), format!("V{k}"));
        ctx.add_one_cell(&u, &format!("C{}", k + 1), &format!("C{k}"))?;
        ctx.add_one_cell(&v, &format!("D{}", k + 1), &format!("D{k}"))?;
        let phi = format!("phi{k}");
        ctx.add_two_cell(&phi, &[&v, &format!("R{}", k + 1)], &[&format!("R{k}"), &u], true)?;
        squares.push(Square::new(&ctx, &format!("S{k}"), one(&u), one(&v), adj[k + 1], adj[k], MateTerm::gen(&phi))?);
    }
    Ok((ctx, squares))
}

#[cfg(test)]
mod tests {
    use super::super::DEFAULT_BUDGET;
    use super::*;

    fn rules(t: &[TraceStep]) -> Vec<&str> {
        t.iter().map(|s| s.rule.as_str()).collect()
    }

    #[test]
    fn mate_left_is_the_composite() {
        let (ctx, sq) = free_square().unwrap();
        let psi = mate_left(&ctx, &sq, &sq.phi).unwrap();
        assert_eq!(psi, ctx.parse_term("(eps ⋆ (U∘L')) ∘ (L ⋆ phi ⋆ L') ∘ ((L∘V) ⋆ eta')").unwrap());
        let back = mate_right(&ctx, &sq, &psi).unwrap();
        assert_eq!(
            back,
            ctx.parse_term("((R∘U) ⋆ eps') ∘ (R ⋆ ((eps ⋆ (U∘L')) ∘ (L ⋆ phi ⋆ L') ∘ ((L∘V) ⋆ eta')) ⋆ R') ∘ (eta ⋆ (V∘R'))")
                .unwrap()
        );
    }

    #[test]
    fn mates_are_inverse() {
        let (ctx, sq) = free_square().unwrap();
        assert!(check_roundtrip(&ctx, &sq, DEFAULT_BUDGET, false).unwrap().passed);
        let mut ctx = ctx;
        ctx.add_two_cell("psi0", &["L", "V"], &["U", "L'"], false).unwrap();
        let psi = MateTerm::gen("psi0");
        let phi = mate_right(&ctx, &sq, &psi).unwrap();
        let again = mate_left(&ctx, &sq, &phi).unwrap();
        assert!(check_equal(&ctx, "left of right", &again, &psi, DEFAULT_BUDGET, false).unwrap().passed);
    }

    #[test]
    fn identity_square_mate_is_identity() {
        let (mut ctx, _) = free_square().unwrap();
        let a = ctx.find_adjunction("L", "R").unwrap();
        let sq = Square::new(&ctx, "I", vec![], vec![], a, a, MateTerm::id(&["R"])).unwrap();
        let psi = mate_left(&ctx, &sq, &sq.phi).unwrap();
        let n = normalize(&ctx, &psi, DEFAULT_BUDGET, false).unwrap();
        assert_eq!(n.term, MateTerm::id(&["L"]));
        ctx.define("unused", psi).unwrap();
    }

    #[test]
    fn bc_unit_holds_with_the_expected_trace() {
        let (mut ctx, sq) = free_square().unwrap();
        ctx.define("psi", mate_left(&ctx, &sq, &sq.phi).unwrap()).unwrap();
        let r = check_bc_unit(&ctx, &sq, &MateTerm::named("psi"), DEFAULT_BUDGET, true).unwrap();
        assert!(r.counit.passed, "{:#?}", r.counit);
        assert!(r.unit.passed, "{:#?}", r.unit);
        assert_eq!(
            rules(&r.counit.lhs_trace),
            [
                "unfold-definition",
                "distribute-whiskering",
                "interchange",
                "collect-whiskering",
                "triangle-identity",
                "identity-whiskering",
                "identity-absorb",
            ]
        );
        assert_eq!(r.counit.lhs_normal, "(eps ⋆ U) ∘ (L ⋆ phi)");
        assert_eq!(r.counit.lhs_trace.len() + 1, 8);
        assert!(rules(&r.unit.lhs_trace).contains(&"triangle-identity"));
    }

    #[test]
    fn corrupted_psi_fails() {
        let mut ctx = AdjunctionContext::new();
        for o in ["C", "D"] {
            ctx.add_object(o).unwrap();
        }
        ctx.add_one_cell("L", "D", "C").unwrap();
        ctx.add_one_cell("R", "C", "D").unwrap();
        let a = ctx.add_adjunction("L", "R", "eta", "eps").unwrap();
        ctx.add_two_cell("alpha", &["R"], &["R"], true).unwrap();
        ctx.add_two_cell("beta", &["R"], &["R"], true).unwrap();
        let phi = ctx.parse_term("beta ∘ alpha").unwrap();
        let sq = Square::new(&ctx, "E", vec![], vec![], a, a, phi).unwrap();
        let good = mate_left(&ctx, &sq, &sq.phi).unwrap();
        assert!(check_bc_unit(&ctx, &sq, &good, DEFAULT_BUDGET, false).unwrap().passed);
        let swapped = ctx.parse_term("alpha ∘ beta").unwrap();
        let bad = mate_left(&ctx, &sq, &swapped).unwrap();
        let r = check_bc_unit(&ctx, &sq, &bad, DEFAULT_BUDGET, false).unwrap();
        assert!(!r.passed);
        assert_ne!(r.counit.lhs_normal, r.counit.rhs_normal);
    }

    #[test]
    fn pasting_with_identity() {
        let (ctx, sq) = free_square().unwrap();
        let top = ctx.find_adjunction("L'", "R'").unwrap();
        let id = Square::new(&ctx, "I", vec![], vec![], top, top, MateTerm::id(&["R'"])).unwrap();
        let p = paste_squares(&ctx, &id, &sq, DEFAULT_BUDGET, false).unwrap();
        assert!(p.check.passed);
        let same = check_equal(&ctx, "identity", &p.square.phi, &sq.phi, DEFAULT_BUDGET, false).unwrap();
        assert!(same.passed);
    }

    #[test]
    fn pasting_two_squares() {
        let (ctx, sq) = free_tower(3).unwrap();
        let p = paste_squares(&ctx, &sq[0], &sq[1], DEFAULT_BUDGET, false).unwrap();
        assert!(p.check.passed, "{:#?}", p.check);
        assert_eq!(p.square.phi.to_string(), "(phi0 ⋆ U1) ∘ (V0 ⋆ phi1)");
        assert!(matches!(
            paste_squares(&ctx, &sq[1], &sq[0], DEFAULT_BUDGET, false),
            Err(Error::BoundaryMismatch(_))
        ));
    }

    #[test]
    fn pasting_is_associative() {
        let (ctx, sq) = free_tower(4).unwrap();
        assert!(check_paste_associative(&ctx, &sq[0], &sq[1], &sq[2], DEFAULT_BUDGET).unwrap().passed);
    }
}
