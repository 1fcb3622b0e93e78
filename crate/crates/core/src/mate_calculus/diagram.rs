use serde::Serialize;

use super::{join_word, AdjunctionContext, CellKind, MateTerm, Word};
use crate::error::{Error, Result};

pub const DEFAULT_BUDGET: usize = 10_000;

/// One generator applied at `offset` of the current word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Layer {
    pub cell: String,
    pub offset: usize,
}

/// A flattened pasting: layers applied bottom-up to `source`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagram {
    pub source: Word,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: String,
    pub term: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub diagram: Diagram,
    pub term: MateTerm,
    pub rendered: String,
    pub trace: Vec<TraceStep>,
    pub steps: usize,
}

impl Diagram {
    pub fn compile(ctx: &AdjunctionContext, t: &MateTerm) -> Result<Diagram> {
        let b = ctx.boundary(t)?;
        let mut layers = Vec::new();
        emit(ctx, t, 0, &mut layers)?;
        Ok(Diagram { source: b.src, layers })
    }

    /// Words before each layer, plus the final target.
    pub fn words(&self, ctx: &AdjunctionContext) -> Result<Vec<Word>> {
        let mut out = vec![self.source.clone()];
        let mut w = self.source.clone();
        for l in &self.layers {
            let c = ctx.two_cell(&l.cell)?;
            let end = l.offset + c.src.len();
            if end > w.len() || w[l.offset..end] != c.src[..] {
                return Err(Error::TypeMismatch(format!(
                    "`{}` does not apply at offset {} of {}",
                    l.cell,
                    l.offset,
                    join_word(&w)
                )));
            }
            w.splice(l.offset..end, c.tgt.iter().cloned());
            out.push(w.clone());
        }
        Ok(out)
    }

    pub fn target(&self, ctx: &AdjunctionContext) -> Result<Word> {
        Ok(self.words(ctx)?.pop().unwrap_or_default())
    }

    /// Back to a term: a vertical chain of whiskered generators.
    pub fn to_term(&self, ctx: &AdjunctionContext) -> Result<MateTerm> {
        let words = self.words(ctx)?;
        if self.layers.is_empty() {
            return Ok(MateTerm::Id(self.source.clone()));
        }
        let parts = self
            .layers
            .iter()
            .zip(&words)
            .rev()
            .map(|(l, w)| {
                let len = ctx.two_cell(&l.cell).map(|c| c.src.len())?;
                Ok(MateTerm::gen(&l.cell).whisker(&w[..l.offset], &w[l.offset + len..]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MateTerm::compose(parts))
    }

    pub fn render(&self, ctx: &AdjunctionContext) -> Result<String> {
        let words = self.words(ctx)?;
        let mut pieces = Vec::new();
        for (l, w) in self.layers.iter().zip(&words) {
            let len = ctx.two_cell(&l.cell)?.src.len();
            pieces.push(piece(&w[..l.offset], &l.cell, &w[l.offset + len..]));
        }
        Ok(compose_pieces(pieces, &self.source))
    }
}

fn emit(ctx: &AdjunctionContext, t: &MateTerm, shift: usize, out: &mut Vec<Layer>) -> Result<()> {
    match t {
        MateTerm::Id(_) => Ok(()),
        MateTerm::Gen(g) => {
            out.push(Layer { cell: g.clone(), offset: shift });
            Ok(())
        }
        MateTerm::Named(_) => emit(ctx, &ctx.unfold(t)?, shift, out),
        MateTerm::Vert(a, b) => {
            emit(ctx, b, shift, out)?;
            emit(ctx, a, shift, out)
        }
        MateTerm::Hor(a, b) => {
            let left = ctx.boundary(a)?;
            emit(ctx, b, shift + left.src.len(), out)?;
            emit(ctx, a, shift, out)
        }
    }
}

fn piece(prefix: &[String], inner: &str, suffix: &[String]) -> String {
    let wrap = |w: &[String]| {
        if w.len() > 1 {
            format!("({})", join_word(w))
        } else {
            join_word(w)
        }
    };
    let mut parts = Vec::new();
    if !prefix.is_empty() {
        parts.push(wrap(prefix));
    }
    parts.push(inner.to_string());
    if !suffix.is_empty() {
        parts.push(wrap(suffix));
    }
    parts.join(" ⋆ ")
}

fn identity_of(w: &[String]) -> String {
    if w.is_empty() {
        "Id".to_string()
    } else {
        format!("Id_{{{}}}", join_word(w))
    }
}

fn compose_pieces(pieces: Vec<String>, source: &[String]) -> String {
    match pieces.len() {
        0 => identity_of(source),
        1 => pieces.into_iter().next().unwrap_or_default(),
        _ => pieces
            .into_iter()
            .rev()
            .map(|p| if p.contains(" ⋆ ") { format!("({p})") } else { p })
            .collect::<Vec<_>>()
            .join(" ∘ "),
    }
}

struct Arity {
    src: usize,
    tgt: usize,
}

fn arity(ctx: &AdjunctionContext, l: &Layer) -> Result<Arity> {
    let c = ctx.two_cell(&l.cell)?;
    Ok(Arity { src: c.src.len(), tgt: c.tgt.len() })
}

/// Interchange of two consecutive layers acting on disjoint wires.
fn swap(ctx: &AdjunctionContext, p: &Layer, q: &Layer) -> Result<Option<(Layer, Layer)>> {
    let (ap, aq) = (arity(ctx, p)?, arity(ctx, q)?);
    if q.offset + aq.src <= p.offset {
        let moved = Layer { cell: p.cell.clone(), offset: p.offset + aq.tgt - aq.src };
        Ok(Some((q.clone(), moved)))
    } else if q.offset >= p.offset + ap.tgt {
        let moved = Layer { cell: q.cell.clone(), offset: q.offset + ap.src - ap.tgt };
        Ok(Some((moved, p.clone())))
    } else {
        Ok(None)
    }
}

struct Engine<'a> {
    ctx: &'a AdjunctionContext,
    budget: usize,
    steps: usize,
    tracing: bool,
    trace: Vec<TraceStep>,
}

enum Redex {
    Triangle { adjunction: usize, right_side: bool },
    Inverse,
}

impl Engine<'_> {
    fn tick(&mut self, during: &str) -> Result<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget, during: during.to_string() });
        }
        Ok(())
    }

    fn record(&mut self, rule: &str, term: String) {
        if self.tracing {
            self.trace.push(TraceStep { rule: rule.to_string(), term });
        }
    }

    /// Moves layer `j` down to sit right after layer `i`.
    fn sink(&mut self, layers: &mut [Layer], i: usize, j: usize) -> Result<bool> {
        let mut k = j;
        while k > i + 1 {
            match swap(self.ctx, &layers[k - 1], &layers[k])? {
                Some((a, b)) => {
                    self.tick("normalizing")?;
                    layers[k - 1] = a;
                    layers[k] = b;
                    k -= 1;
                }
                None => return Ok(false),
            }
        }
        Ok(true)
    }

    /// Tries to make layers `i < j` adjacent; returns the new list and the index of the first.
    /// Layers in between that do not depend on `i` sink below it; `j` then sinks through
    /// the rest, which fails exactly when some layer depends on `i` and feeds `j`.
    fn adjacent(&mut self, layers: &[Layer], i: usize, j: usize) -> Result<Option<(Vec<Layer>, usize)>> {
        let mut v = layers.to_vec();
        let (mut lo, mut hi) = (i, i);
        for m in i + 1..j {
            debug_assert_eq!(m, hi + 1);
            let mut trial = v.clone();
            let mut k = m;
            let mut ok = true;
            while k > lo {
                match swap(self.ctx, &trial[k - 1], &trial[k])? {
                    Some((a, b)) => {
                        self.tick("normalizing")?;
                        trial[k - 1] = a;
                        trial[k] = b;
                        k -= 1;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                v = trial;
                lo += 1;
            }
            hi += 1;
        }
        if self.sink(&mut v, lo, j)? {
            Ok(Some((v, lo)))
        } else {
            Ok(None)
        }
    }

    fn redex(&self, first: &Layer, second: &Layer) -> Result<Option<Redex>> {
        let a = self.ctx.two_cell(&first.cell)?;
        let b = self.ctx.two_cell(&second.cell)?;
        Ok(match (&a.kind, &b.kind) {
            (CellKind::Unit(x), CellKind::Counit(y)) if x == y => {
                if second.offset == first.offset + 1 {
                    Some(Redex::Triangle { adjunction: *x, right_side: true })
                } else if second.offset + 1 == first.offset {
                    Some(Redex::Triangle { adjunction: *x, right_side: false })
                } else {
                    None
                }
            }
            (CellKind::Inverse(g), _) if *g == second.cell && first.offset == second.offset => {
                Some(Redex::Inverse)
            }
            (_, CellKind::Inverse(g)) if *g == first.cell && first.offset == second.offset => {
                Some(Redex::Inverse)
            }
            _ => None,
        })
    }

    fn could_cancel(&self, first: &Layer, second: &Layer) -> Result<bool> {
        let a = self.ctx.two_cell(&first.cell)?;
        let b = self.ctx.two_cell(&second.cell)?;
        Ok(match (&a.kind, &b.kind) {
            (CellKind::Unit(x), CellKind::Counit(y)) => x == y,
            (CellKind::Inverse(g), _) => *g == second.cell,
            (_, CellKind::Inverse(g)) => *g == first.cell,
            _ => false,
        })
    }

    fn reduce_once(&mut self, d: &mut Diagram) -> Result<bool> {
        let n = d.layers.len();
        for j in 1..n {
            for i in (0..j).rev() {
                if !self.could_cancel(&d.layers[i], &d.layers[j])? {
                    continue;
                }
                let before = self.steps;
                let Some((layers, at)) = self.adjacent(&d.layers, i, j)? else {
                    continue;
                };
                let Some(kind) = self.redex(&layers[at], &layers[at + 1])? else {
                    continue;
                };
                let moved = Diagram { source: d.source.clone(), layers };
                if self.steps > before && moved.layers != d.layers {
                    let r = moved.render(self.ctx)?;
                    self.record("interchange", r);
                }
                self.cancel(d, moved, at, kind)?;
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn cancel(&mut self, d: &mut Diagram, moved: Diagram, at: usize, kind: Redex) -> Result<()> {
        self.tick("normalizing")?;
        let mut rest = moved.clone();
        rest.layers.drain(at..at + 2);
        match kind {
            Redex::Inverse => {
                let r = rest.render(self.ctx)?;
                self.record("inverse-cancellation", r);
            }
            Redex::Triangle { adjunction, right_side } if self.tracing => {
                let adj = &self.ctx.adjunctions()[adjunction];
                let words = moved.words(self.ctx)?;
                let w = &words[at];
                let k = moved.layers[at].offset;
                let (lo, hi, grouped, wire) = if right_side {
                    let g = format!(
                        "({} ⋆ {}) ∘ ({} ⋆ {})",
                        adj.right, adj.counit, adj.unit, adj.right
                    );
                    (k, k + 1, g, adj.right.clone())
                } else {
                    let g = format!(
                        "({} ⋆ {}) ∘ ({} ⋆ {})",
                        adj.counit, adj.left, adj.left, adj.unit
                    );
                    (k - 1, k, g, adj.left.clone())
                };
                let show = |inner: String, whole: bool| -> Result<String> {
                    let mut pieces = Vec::new();
                    for (idx, (l, lw)) in moved.layers.iter().zip(&words).enumerate() {
                        if idx == at + 1 {
                            continue;
                        }
                        if idx == at {
                            pieces.push(if whole {
                                inner.clone()
                            } else {
                                piece(&w[..lo], &inner, &w[hi..])
                            });
                            continue;
                        }
                        let len = self.ctx.two_cell(&l.cell)?.src.len();
                        pieces.push(piece(&lw[..l.offset], &l.cell, &lw[l.offset + len..]));
                    }
                    Ok(compose_pieces(pieces, &moved.source))
                };
                let collected = show(format!("({grouped})"), false)?;
                let triangle = show(format!("Id_{{{wire}}}"), false)?;
                let whiskered = show(identity_of(w), true)?;
                self.record("collect-whiskering", collected);
                self.record("triangle-identity", triangle);
                self.record("identity-whiskering", whiskered);
                if !rest.layers.is_empty() {
                    let r = rest.render(self.ctx)?;
                    self.record("identity-absorb", r);
                }
            }
            Redex::Triangle { .. } => {}
        }
        *d = rest;
        Ok(())
    }

    /// Moves layer `j` to the front if it commutes with everything below it.
    fn to_front(&mut self, layers: &[Layer], j: usize) -> Result<Option<Vec<Layer>>> {
        let mut v = layers.to_vec();
        let mut k = j;
        while k > 0 {
            match swap(self.ctx, &v[k - 1], &v[k])? {
                Some((a, b)) => {
                    self.tick("ordering")?;
                    v[k - 1] = a;
                    v[k] = b;
                    k -= 1;
                }
                None => return Ok(None),
            }
        }
        Ok(Some(v))
    }

    /// Lexicographically least linear extension, compared on `(offset, cell)`.
    fn canonical(&mut self, layers: &[Layer]) -> Result<Vec<Layer>> {
        if layers.is_empty() {
            return Ok(Vec::new());
        }
        let mut fronts: Vec<Vec<Layer>> = Vec::new();
        for j in 0..layers.len() {
            if let Some(v) = self.to_front(layers, j)? {
                fronts.push(v);
            }
        }
        let key = |l: &Layer| (l.offset, l.cell.clone());
        let best = fronts.iter().map(|v| key(&v[0])).min().expect("some layer is minimal");
        let mut winner: Option<Vec<Layer>> = None;
        for v in fronts.into_iter().filter(|v| key(&v[0]) == best) {
            let mut full = vec![v[0].clone()];
            full.extend(self.canonical(&v[1..])?);
            if winner.as_ref().is_none_or(|w| {
                full.iter().map(key).lt(w.iter().map(key))
            }) {
                winner = Some(full);
            }
        }
        Ok(winner.unwrap_or_default())
    }
}

/// Normal form modulo triangle identities, inverse cancellation and interchange.
pub fn normalize(
    ctx: &AdjunctionContext,
    t: &MateTerm,
    budget: usize,
    tracing: bool,
) -> Result<Normalized> {
    let mut e = Engine { ctx, budget, steps: 0, tracing, trace: Vec::new() };
    let mut term = t.clone();
    if t.has_named() {
        term = ctx.unfold(t)?;
        e.record("unfold-definition", term.to_string());
    }
    let mut d = Diagram::compile(ctx, &term)?;
    let flat = d.render(ctx)?;
    if flat != term.to_string() {
        e.record("distribute-whiskering", flat);
    }
    while e.reduce_once(&mut d)? {}
    let ordered = e.canonical(&d.layers)?;
    if ordered != d.layers {
        d.layers = ordered;
        let r = d.render(ctx)?;
        e.record("canonical-order", r);
    }
    Ok(Normalized {
        term: d.to_term(ctx)?,
        rendered: d.render(ctx)?,
        diagram: d,
        trace: e.trace,
        steps: e.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::super::free_square;
    use super::*;

    #[test]
    fn triangle_reduces_to_identity() {
        let (ctx, _) = free_square().unwrap();
        let t = ctx.parse_term("(R ⋆ eps) ∘ (eta ⋆ R)").unwrap();
        let n = normalize(&ctx, &t, DEFAULT_BUDGET, true).unwrap();
        assert!(n.diagram.layers.is_empty());
        assert_eq!(n.rendered, "Id_{R}");
        let rules: Vec<_> = n.trace.iter().map(|s| s.rule.as_str()).collect();
        assert_eq!(rules, ["collect-whiskering", "triangle-identity", "identity-whiskering"]);
    }

    #[test]
    fn left_triangle_reduces_to_identity() {
        let (ctx, _) = free_square().unwrap();
        let t = ctx.parse_term("(eps ⋆ L) ∘ (L ⋆ eta)").unwrap();
        let n = normalize(&ctx, &t, DEFAULT_BUDGET, false).unwrap();
        assert_eq!(n.term, MateTerm::id(&["L"]));
    }

    #[test]
    fn identities_collapse() {
        let (ctx, _) = free_square().unwrap();
        let t = ctx.parse_term("L ⋆ V").unwrap();
        assert_eq!(t, MateTerm::id(&["L", "V"]));
        let n = normalize(&ctx, &MateTerm::id(&["L"]).star(MateTerm::id(&["V"])), 10, false).unwrap();
        assert!(n.diagram.layers.is_empty());
        assert_eq!(n.rendered, "Id_{L∘V}");
    }

    #[test]
    fn normal_term_is_fixed() {
        let (ctx, _) = free_square().unwrap();
        let t = ctx.parse_term("(L∘V) ⋆ eta'").unwrap();
        let n = normalize(&ctx, &t, DEFAULT_BUDGET, true).unwrap();
        assert_eq!(n.term, t);
        assert!(n.trace.is_empty());
        assert_eq!(n.rendered, t.to_string());
    }

    #[test]
    fn budget_is_reported() {
        let (ctx, _) = free_square().unwrap();
        let t = ctx.parse_term("(R ⋆ eps) ∘ (eta ⋆ R)").unwrap();
        let err = normalize(&ctx, &t, 0, false).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 0, .. }));
    }

    #[test]
    fn inverse_cancels() {
        let (ctx, _) = free_square().unwrap();
        let t = ctx.parse_term("phi^-1 ∘ phi").unwrap();
        let n = normalize(&ctx, &t, DEFAULT_BUDGET, false).unwrap();
        assert_eq!(n.term, MateTerm::id(&["V", "R'"]));
        let t = ctx.parse_term("(L ⋆ phi) ∘ (L ⋆ phi^-1)").unwrap();
        assert!(normalize(&ctx, &t, DEFAULT_BUDGET, false).unwrap().diagram.layers.is_empty());
    }

    #[test]
    fn interchange_orders_independent_cells() {
        let (ctx, _) = free_square().unwrap();
        let a = ctx.parse_term("(eta ⋆ (V∘R'∘L')) ∘ (V ⋆ eta')").unwrap();
        let b = ctx.parse_term("(R ⋆ L ⋆ V ⋆ eta') ∘ (eta ⋆ V)").unwrap();
        let na = normalize(&ctx, &a, DEFAULT_BUDGET, false).unwrap();
        let nb = normalize(&ctx, &b, DEFAULT_BUDGET, false).unwrap();
        assert_eq!(na.diagram, nb.diagram);
    }

    #[test]
    fn type_errors_surface() {
        let (ctx, _) = free_square().unwrap();
        assert!(matches!(ctx.parse_term("eps ∘ eta"), Err(Error::TypeMismatch(_))));
        assert!(matches!(ctx.parse_term("phi ⋆ U"), Err(Error::TypeMismatch(_))));
        assert!(matches!(ctx.parse_term("nope"), Err(Error::InvalidPresentation(_))));
    }
}
