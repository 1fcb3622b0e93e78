//! A strict 2-categorical term engine over free adjunction data.
//!
//! Terms are pastings of units, co-units and declared 2-cells. They are
//! normalised by flattening to a layered string diagram, cancelling triangle
//! and inverse redexes, then sorting layers into a canonical staircase.

mod diagram;
mod square;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use diagram::{normalize, Diagram, Layer, Normalized, TraceStep, DEFAULT_BUDGET};
pub use square::{
    check_bc_unit, check_equal, check_paste_associative, check_roundtrip, free_square,
    free_tower, mate_left, mate_right, paste_squares, pasted_square, BcUnitReport, MateCheck, Pasting, Square,
};

/// A composable string of 1-cells in applicative order: `[F, G]` is `F∘G`.
pub type Word = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OneCell {
    pub name: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Adjunction {
    pub left: String,
    pub right: String,
    pub unit: String,
    pub counit: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "of", rename_all = "snake_case")]
pub enum CellKind {
    Declared,
    Unit(usize),
    Counit(usize),
    Inverse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwoCell {
    pub name: String,
    pub src: Word,
    pub tgt: Word,
    pub kind: CellKind,
}

/// Formal pasting expression. `Vert(a, b)` is `a ∘ b`, so `b` happens first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MateTerm {
    Id(Word),
    Gen(String),
    Named(String),
    Vert(Box<MateTerm>, Box<MateTerm>),
    Hor(Box<MateTerm>, Box<MateTerm>),
}

impl MateTerm {
    pub fn id<S: AsRef<str>>(word: &[S]) -> Self {
        MateTerm::Id(word.iter().map(|s| s.as_ref().to_string()).collect())
    }

    pub fn gen(name: &str) -> Self {
        MateTerm::Gen(name.to_string())
    }

    pub fn named(name: &str) -> Self {
        MateTerm::Named(name.to_string())
    }

    /// `self ∘ first`.
    pub fn after(self, first: MateTerm) -> Self {
        MateTerm::Vert(Box::new(self), Box::new(first))
    }

    /// `self ⋆ right`.
    pub fn star(self, right: MateTerm) -> Self {
        MateTerm::Hor(Box::new(self), Box::new(right))
    }

    /// `left ⋆ self ⋆ right`, skipping empty words.
    pub fn whisker<S: AsRef<str>>(self, left: &[S], right: &[S]) -> Self {
        let mut t = self;
        if !left.is_empty() {
            t = MateTerm::id(left).star(t);
        }
        if !right.is_empty() {
            t = t.star(MateTerm::id(right));
        }
        t
    }

    /// Vertical composite of `parts`, written left to right as in `a ∘ b ∘ c`.
    pub fn compose(parts: Vec<MateTerm>) -> Self {
        let mut it = parts.into_iter().rev();
        let first = it.next().unwrap_or(MateTerm::Id(Vec::new()));
        it.fold(first, |acc, t| t.after(acc))
    }

    pub fn size(&self) -> usize {
        match self {
            MateTerm::Id(_) | MateTerm::Gen(_) | MateTerm::Named(_) => 1,
            MateTerm::Vert(a, b) | MateTerm::Hor(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn has_named(&self) -> bool {
        match self {
            MateTerm::Named(_) => true,
            MateTerm::Id(_) | MateTerm::Gen(_) => false,
            MateTerm::Vert(a, b) | MateTerm::Hor(a, b) => a.has_named() || b.has_named(),
        }
    }
}

pub(crate) fn join_word(w: &[String]) -> String {
    w.join("∘")
}

impl fmt::Display for MateTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn hor_part(t: &MateTerm) -> String {
            match t {
                MateTerm::Id(w) if w.len() > 1 => format!("({})", join_word(w)),
                MateTerm::Vert(..) => format!("({t})"),
                _ => t.to_string(),
            }
        }
        fn vert_part(t: &MateTerm) -> String {
            match t {
                MateTerm::Hor(..) => format!("({t})"),
                MateTerm::Id(w) if w.len() > 1 => format!("Id_{{{}}}", join_word(w)),
                _ => t.to_string(),
            }
        }
        match self {
            MateTerm::Id(w) if w.is_empty() => write!(f, "Id"),
            MateTerm::Id(w) => write!(f, "{}", join_word(w)),
            MateTerm::Gen(g) | MateTerm::Named(g) => write!(f, "{g}"),
            MateTerm::Hor(a, b) => write!(f, "{} ⋆ {}", hor_part(a), hor_part(b)),
            MateTerm::Vert(a, b) => write!(f, "{} ∘ {}", vert_part(a), vert_part(b)),
        }
    }
}

/// Source and target words of a term with its outer 0-cells.
/// `None` ends belong to identities of the empty word and unify with anything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundary {
    pub src: Word,
    pub tgt: Word,
    pub from: Option<String>,
    pub to: Option<String>,
}

fn unify(a: &Option<String>, b: &Option<String>, what: &str) -> Result<Option<String>> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(Error::TypeMismatch(format!(
            "{what}: 0-cells `{x}` and `{y}` differ"
        ))),
        (Some(x), _) | (None, Some(x)) => Ok(Some(x.clone())),
        (None, None) => Ok(None),
    }
}

/// Free adjunction data: 0-cells, 1-cells, adjunctions, 2-cells and bound names.
#[derive(Debug, Clone, Default)]
pub struct AdjunctionContext {
    objects: Vec<String>,
    one_cells: BTreeMap<String, OneCell>,
    adjunctions: Vec<Adjunction>,
    two_cells: BTreeMap<String, TwoCell>,
    definitions: BTreeMap<String, MateTerm>,
}

impl AdjunctionContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn adjunctions(&self) -> &[Adjunction] {
        &self.adjunctions
    }

    pub fn two_cells(&self) -> impl Iterator<Item = &TwoCell> {
        self.two_cells.values()
    }

    pub fn definition(&self, name: &str) -> Option<&MateTerm> {
        self.definitions.get(name)
    }

    fn taken(&self, name: &str) -> bool {
        self.one_cells.contains_key(name)
            || self.two_cells.contains_key(name)
            || self.definitions.contains_key(name)
    }

    fn fresh(&self, name: &str) -> Result<()> {
        if self.taken(name) {
            return Err(Error::InvalidPresentation(format!("name `{name}` declared twice")));
        }
        Ok(())
    }

    pub fn add_object(&mut self, name: &str) -> Result<()> {
        if self.objects.iter().any(|o| o == name) {
            return Err(Error::InvalidPresentation(format!("0-cell `{name}` declared twice")));
        }
        self.objects.push(name.to_string());
        Ok(())
    }

    fn object(&self, name: &str) -> Result<()> {
        if self.objects.iter().any(|o| o == name) {
            Ok(())
        } else {
            Err(Error::InvalidPresentation(format!("unknown 0-cell `{name}`")))
        }
    }

    pub fn add_one_cell(&mut self, name: &str, from: &str, to: &str) -> Result<()> {
        self.fresh(name)?;
        self.object(from)?;
        self.object(to)?;
        self.one_cells.insert(
            name.to_string(),
            OneCell { name: name.to_string(), from: from.to_string(), to: to.to_string() },
        );
        Ok(())
    }

    pub fn one_cell(&self, name: &str) -> Result<&OneCell> {
        self.one_cells
            .get(name)
            .ok_or_else(|| Error::InvalidPresentation(format!("unknown 1-cell `{name}`")))
    }

    pub fn is_one_cell(&self, name: &str) -> bool {
        self.one_cells.contains_key(name)
    }

    /// Outer 0-cells `(from, to)` of a word, `None` for the empty word.
    pub fn word_ends(&self, w: &[String]) -> Result<Option<(String, String)>> {
        if w.is_empty() {
            return Ok(None);
        }
        for pair in w.windows(2) {
            let (outer, inner) = (self.one_cell(&pair[0])?, self.one_cell(&pair[1])?);
            if inner.to != outer.from {
                return Err(Error::TypeMismatch(format!(
                    "cannot compose {}∘{}: `{}` lands in {} but `{}` starts at {}",
                    outer.name, inner.name, inner.name, inner.to, outer.name, outer.from
                )));
            }
        }
        let first = self.one_cell(&w[0])?;
        let last = self.one_cell(&w[w.len() - 1])?;
        Ok(Some((last.from.clone(), first.to.clone())))
    }

    fn parallel(&self, src: &[String], tgt: &[String], what: &str) -> Result<()> {
        let (a, b) = (self.word_ends(src)?, self.word_ends(tgt)?);
        let ok = match (&a, &b) {
            (Some(x), Some(y)) => x == y,
            (Some((f, t)), None) | (None, Some((f, t))) => f == t,
            (None, None) => false,
        };
        if !ok {
            return Err(Error::TypeMismatch(format!(
                "{what}: `{}` and `{}` are not parallel",
                join_word(src),
                join_word(tgt)
            )));
        }
        Ok(())
    }

    /// Declares `left ⊣ right` with unit `Id ⇒ right∘left` and co-unit `left∘right ⇒ Id`.
    pub fn add_adjunction(
        &mut self,
        left: &str,
        right: &str,
        unit: &str,
        counit: &str,
    ) -> Result<usize> {
        let (l, r) = (self.one_cell(left)?.clone(), self.one_cell(right)?.clone());
        if l.from != r.to || l.to != r.from {
            return Err(Error::TypeMismatch(format!(
                "{left} : {} -> {} and {right} : {} -> {} cannot be adjoint",
                l.from, l.to, r.from, r.to
            )));
        }
        if self.adjunctions.iter().any(|a| a.left == left && a.right == right) {
            return Err(Error::InvalidPresentation(format!("adjunction {left} ⊣ {right} declared twice")));
        }
        self.fresh(unit)?;
        self.fresh(counit)?;
        if unit == counit {
            return Err(Error::InvalidPresentation(format!("unit and co-unit share the name `{unit}`")));
        }
        let idx = self.adjunctions.len();
        self.two_cells.insert(
            unit.to_string(),
            TwoCell {
                name: unit.to_string(),
                src: vec![],
                tgt: vec![right.to_string(), left.to_string()],
                kind: CellKind::Unit(idx),
            },
        );
        self.two_cells.insert(
            counit.to_string(),
            TwoCell {
                name: counit.to_string(),
                src: vec![left.to_string(), right.to_string()],
                tgt: vec![],
                kind: CellKind::Counit(idx),
            },
        );
        self.adjunctions.push(Adjunction {
            left: left.to_string(),
            right: right.to_string(),
            unit: unit.to_string(),
            counit: counit.to_string(),
        });
        Ok(idx)
    }

    pub fn find_adjunction(&self, left: &str, right: &str) -> Result<usize> {
        self.adjunctions
            .iter()
            .position(|a| a.left == left && a.right == right)
            .ok_or_else(|| Error::InvalidPresentation(format!("no adjunction {left} ⊣ {right}")))
    }

    /// Declares a 2-cell. Invertible cells also get `name^-1`.
    pub fn add_two_cell(&mut self, name: &str, src: &[&str], tgt: &[&str], invertible: bool) -> Result<()> {
        let src: Word = src.iter().map(|s| s.to_string()).collect();
        let tgt: Word = tgt.iter().map(|s| s.to_string()).collect();
        self.fresh(name)?;
        self.parallel(&src, &tgt, name)?;
        let inv = inverse_name(name);
        if invertible {
            self.fresh(&inv)?;
            self.two_cells.insert(
                inv.clone(),
                TwoCell {
                    name: inv,
                    src: tgt.clone(),
                    tgt: src.clone(),
                    kind: CellKind::Inverse(name.to_string()),
                },
            );
        }
        self.two_cells.insert(
            name.to_string(),
            TwoCell { name: name.to_string(), src, tgt, kind: CellKind::Declared },
        );
        Ok(())
    }

    pub fn two_cell(&self, name: &str) -> Result<&TwoCell> {
        self.two_cells
            .get(name)
            .ok_or_else(|| Error::InvalidPresentation(format!("unknown 2-cell `{name}`")))
    }

    /// Binds `name` to a well-typed term; later occurrences unfold to it.
    pub fn define(&mut self, name: &str, term: MateTerm) -> Result<()> {
        self.fresh(name)?;
        self.boundary(&term)?;
        self.definitions.insert(name.to_string(), term);
        Ok(())
    }

    pub fn boundary(&self, t: &MateTerm) -> Result<Boundary> {
        match t {
            MateTerm::Id(w) => {
                let ends = self.word_ends(w)?;
                Ok(Boundary {
                    src: w.clone(),
                    tgt: w.clone(),
                    from: ends.as_ref().map(|e| e.0.clone()),
                    to: ends.map(|e| e.1),
                })
            }
            MateTerm::Gen(g) => {
                let c = self.two_cell(g)?;
                let ends = match self.word_ends(&c.src)? {
                    Some(e) => e,
                    None => self.word_ends(&c.tgt)?.expect("declared cells are not both empty"),
                };
                Ok(Boundary {
                    src: c.src.clone(),
                    tgt: c.tgt.clone(),
                    from: Some(ends.0),
                    to: Some(ends.1),
                })
            }
            MateTerm::Named(n) => {
                let body = self
                    .definitions
                    .get(n)
                    .ok_or_else(|| Error::InvalidPresentation(format!("unknown name `{n}`")))?;
                self.boundary(body)
            }
            MateTerm::Vert(a, b) => {
                let (ba, bb) = (self.boundary(a)?, self.boundary(b)?);
                if bb.tgt != ba.src {
                    return Err(Error::TypeMismatch(format!(
                        "in `{t}`: `{b}` ends at {} but `{a}` starts at {}",
                        show_word(&bb.tgt),
                        show_word(&ba.src)
                    )));
                }
                let what = format!("in `{t}`");
                Ok(Boundary {
                    src: bb.src,
                    tgt: ba.tgt,
                    from: unify(&ba.from, &bb.from, &what)?,
                    to: unify(&ba.to, &bb.to, &what)?,
                })
            }
            MateTerm::Hor(a, b) => {
                let (ba, bb) = (self.boundary(a)?, self.boundary(b)?);
                unify(&ba.from, &bb.to, &format!("in `{t}`"))?;
                let mut src = ba.src;
                src.extend(bb.src);
                let mut tgt = ba.tgt;
                tgt.extend(bb.tgt);
                Ok(Boundary { src, tgt, from: bb.from.or(ba.from.clone()), to: ba.to.or(bb.to) })
            }
        }
    }

    /// Replaces every bound name by its definition.
    pub fn unfold(&self, t: &MateTerm) -> Result<MateTerm> {
        Ok(match t {
            MateTerm::Named(n) => {
                let body = self
                    .definitions
                    .get(n)
                    .ok_or_else(|| Error::InvalidPresentation(format!("unknown name `{n}`")))?;
                self.unfold(body)?
            }
            MateTerm::Vert(a, b) => self.unfold(a)?.after(self.unfold(b)?),
            MateTerm::Hor(a, b) => self.unfold(a)?.star(self.unfold(b)?),
            other => other.clone(),
        })
    }

    /// Parses `∘`/`.` (vertical) and `⋆`/`*` (horizontal) expressions over
    /// declared names. A `∘`-chain of bare 1-cells is read as one word.
    pub fn parse_term(&self, src: &str) -> Result<MateTerm> {
        let mut p = TermParser { ctx: self, chars: src.char_indices().collect(), pos: 0, src };
        let t = p.vert()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        self.boundary(&t)?;
        Ok(t)
    }
}

pub(crate) fn inverse_name(name: &str) -> String {
    format!("{name}^-1")
}

fn show_word(w: &[String]) -> String {
    if w.is_empty() {
        "Id".to_string()
    } else {
        join_word(w)
    }
}

struct TermParser<'a> {
    ctx: &'a AdjunctionContext,
    chars: Vec<(usize, char)>,
    pos: usize,
    src: &'a str,
}

impl TermParser<'_> {
    fn error(&self, msg: &str) -> Error {
        let col = self.chars.get(self.pos).map(|c| c.0).unwrap_or(self.src.len()) + 1;
        Error::InvalidPresentation(format!("{msg} at column {col} of `{}`", self.src))
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.1.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn vert(&mut self) -> Result<MateTerm> {
        let mut parts = vec![self.hor()?];
        while matches!(self.peek(), Some('∘') | Some('.')) {
            self.pos += 1;
            parts.push(self.hor()?);
        }
        if parts.len() > 1 && parts.iter().all(|p| matches!(p, MateTerm::Id(_))) {
            let word = parts
                .into_iter()
                .flat_map(|p| match p {
                    MateTerm::Id(w) => w,
                    _ => unreachable!(),
                })
                .collect();
            return Ok(MateTerm::Id(word));
        }
        Ok(MateTerm::compose(parts))
    }

    fn hor(&mut self) -> Result<MateTerm> {
        let mut t = self.atom()?;
        while matches!(self.peek(), Some('⋆') | Some('*')) {
            self.pos += 1;
            let next = self.atom()?;
            t = match (t, next) {
                (MateTerm::Id(mut a), MateTerm::Id(b)) => {
                    a.extend(b);
                    MateTerm::Id(a)
                }
                (a, b) => a.star(b),
            };
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<MateTerm> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let t = self.vert()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(t)
            }
            Some(c) if is_name_char(c) => {
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|c| is_name_char(c.1)) {
                    self.pos += 1;
                }
                let mut name: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
                let rest: String = self.chars[self.pos..].iter().take(3).map(|c| c.1).collect();
                if rest == "^-1" {
                    self.pos += 3;
                    name = inverse_name(&name);
                }
                if name == "Id" {
                    Ok(MateTerm::Id(Vec::new()))
                } else if self.ctx.one_cells.contains_key(&name) {
                    Ok(MateTerm::Id(vec![name]))
                } else if self.ctx.two_cells.contains_key(&name) {
                    Ok(MateTerm::Gen(name))
                } else if self.ctx.definitions.contains_key(&name) {
                    Ok(MateTerm::Named(name))
                } else {
                    self.pos = start;
                    Err(self.error(&format!("unknown name `{name}`")))
                }
            }
            _ => Err(self.error("expected a name or `(`")),
        }
    }
}

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '′'
}
