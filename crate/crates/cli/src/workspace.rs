//! Declarations of a presentation file, built eagerly so that type errors
//! surface with their source position.

use std::collections::BTreeMap;
use std::sync::Arc;

use folwerk_core::cotangent_derham::{kaehler, CotangentModel};
use folwerk_core::exact_core::{AlgebraMap, AlgebraPresentation, PerfectComplex, PolyMatrix, Scalar};
use folwerk_core::foliation::{pullback_foliation, FoliationPresentation};
use folwerk_core::graded_mixed::GradedMixedPresentation;
use folwerk_core::mate_calculus::{
    mate_left, mate_right, pasted_square, AdjunctionContext, MateTerm, Square,
};
use folwerk_core::pushforward::{
    mapping_foliation, pushforward_foliation, weil_restrict, FiniteFreeMap, MappingFoliation,
    PushedFoliation, WeilRestriction,
};
use folwerk_core::{Error, Window};

use crate::error::{CliError, CliResult};
use crate::source::{statements, Cursor, Pos};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FoliationOrigin {
    Final,
    Zero,
    Mixed,
}

/// A finite free structure on a map or on an algebra's structure map.
#[derive(Clone, Debug)]
pub struct Finite {
    pub map: FiniteFreeMap,
    pub asserted: Vec<(String, String)>,
    pub line: usize,
}

#[derive(Clone, Debug)]
pub enum MateOp {
    Roundtrip(String),
    BcUnit { square: String, psi: MateTerm },
    Paste { top: String, bottom: String },
    Assoc(String, String, String),
    Equal(MateTerm, MateTerm),
}

#[derive(Clone, Debug)]
pub struct MateCommand {
    pub name: String,
    pub line: usize,
    pub op: MateOp,
}

#[derive(Clone, Debug)]
pub struct MateBlock {
    pub ctx: AdjunctionContext,
    pub squares: BTreeMap<String, Square>,
    pub commands: Vec<MateCommand>,
}

#[derive(Clone, Debug)]
pub enum Item {
    Algebra(Arc<AlgebraPresentation>),
    Map(AlgebraMap),
    Mixed(Arc<GradedMixedPresentation>),
    Cotangent(CotangentModel),
    Foliation { foliation: FoliationPresentation, origin: FoliationOrigin },
    DeRham { algebra: Arc<AlgebraPresentation>, weight: Option<u32>, degree: Option<u32> },
    Pullback { map: String, source: String, origin: FoliationOrigin, foliation: FoliationPresentation },
    Weil { algebra: String, map: String, weil: WeilRestriction },
    PushedFoliation { map: String, source: String, pushed: PushedFoliation },
    MappingScheme { map: String, source: String, mapping: MappingFoliation },
    Tangent { scheme: String, points: Vec<Vec<Scalar>> },
    FPlus { map: String, shape: String, complex: PerfectComplex },
    Mates(MateBlock),
    MateCheck { block: String, index: usize },
}

impl Item {
    pub fn kind(&self) -> &'static str {
        match self {
            Item::Algebra(_) => "algebra",
            Item::Map(_) => "map",
            Item::Mixed(_) => "mixed",
            Item::Cotangent(_) => "cotangent",
            Item::Foliation { .. } => "foliation",
            Item::DeRham { .. } => "derham",
            Item::Pullback { .. } => "pullback",
            Item::Weil { .. } => "weilres",
            Item::PushedFoliation { .. } => "pushfol",
            Item::MappingScheme { .. } => "mapsch",
            Item::Tangent { .. } => "tangent",
            Item::FPlus { .. } => "fplus",
            Item::Mates(_) => "mates",
            Item::MateCheck { .. } => "mate-check",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Declaration {
    pub name: String,
    pub line: usize,
    pub item: Item,
}

#[derive(Clone, Debug)]
pub struct CheckCommand {
    pub name: String,
    pub line: usize,
}

#[derive(Clone, Debug)]
#[derive(Default)]
pub struct Workspace {
    decls: Vec<Declaration>,
    index: BTreeMap<String, usize>,
    pub finite: BTreeMap<String, Finite>,
    pub checks: Vec<CheckCommand>,
    pub window: Window,
    pub budget: Option<usize>,
}


fn build_err(p: Pos) -> impl Fn(Error) -> CliError {
    move |e| match e {
        Error::TypeMismatch(msg) => CliError::Type { line: p.line, col: p.col, msg },
        other => CliError::Build { line: p.line, col: p.col, source: other },
    }
}

fn type_err(p: Pos, msg: impl Into<String>) -> CliError {
    CliError::Type { line: p.line, col: p.col, msg: msg.into() }
}

fn unknown(p: Pos, what: &str, name: &str) -> CliError {
    CliError::UnknownName { line: p.line, col: p.col, what: what.into(), name: name.into() }
}

/// Parses source text with default budgets.
pub fn parse(src: &str) -> CliResult<Workspace> {
    parse_with_budget(src, None)
}

/// Parses source text; `budget` overrides the Gröbner and rewrite budgets.
pub fn parse_with_budget(src: &str, budget: Option<usize>) -> CliResult<Workspace> {
    let mut ws = Workspace { budget, ..Workspace::default() };
    for mut st in statements(src)? {
        ws.statement(&mut st)?;
    }
    Ok(ws)
}

impl Workspace {
    pub fn declarations(&self) -> &[Declaration] {
        &self.decls
    }

    pub fn get(&self, name: &str) -> Option<&Declaration> {
        self.index.get(name).map(|&i| &self.decls[i])
    }

    fn declare(&mut self, name: String, line: usize, item: Item) -> CliResult<()> {
        if let Some(&i) = self.index.get(&name) {
            return Err(CliError::Duplicate { name, first: self.decls[i].line, second: line });
        }
        if name == "Q" {
            return Err(type_err(Pos { line, col: 1 }, "`Q` is reserved for the rationals"));
        }
        self.index.insert(name.clone(), self.decls.len());
        self.decls.push(Declaration { name, line, item });
        Ok(())
    }

    fn algebra(&self, name: &str, p: Pos) -> CliResult<Arc<AlgebraPresentation>> {
        if name == "Q" {
            return Ok(AlgebraPresentation::rational());
        }
        match self.get(name).map(|d| &d.item) {
            Some(Item::Algebra(a)) => Ok(a.clone()),
            Some(_) => Err(type_err(p, format!("`{name}` is not an algebra"))),
            None => Err(unknown(p, "algebra", name)),
        }
    }

    fn map(&self, name: &str, p: Pos) -> CliResult<&AlgebraMap> {
        match self.get(name).map(|d| &d.item) {
            Some(Item::Map(m)) => Ok(m),
            Some(_) => Err(type_err(p, format!("`{name}` is not a map"))),
            None => Err(unknown(p, "map", name)),
        }
    }

    fn finite_map(&self, name: &str, p: Pos) -> CliResult<&FiniteFreeMap> {
        match self.finite.get(name) {
            Some(f) => Ok(&f.map),
            None if self.get(name).is_some() => {
                Err(type_err(p, format!("`{name}` has no declared basis")))
            }
            None => Err(unknown(p, "map", name)),
        }
    }

    fn foliation(&self, name: &str, p: Pos) -> CliResult<(&FoliationPresentation, FoliationOrigin)> {
        match self.get(name).map(|d| &d.item) {
            Some(Item::Foliation { foliation, origin }) => Ok((foliation, *origin)),
            Some(Item::Pullback { foliation, .. }) => Ok((foliation, FoliationOrigin::Mixed)),
            Some(Item::PushedFoliation { pushed, .. }) => Ok((&pushed.foliation, FoliationOrigin::Mixed)),
            Some(_) => Err(type_err(p, format!("`{name}` is not a foliation"))),
            None => Err(unknown(p, "foliation", name)),
        }
    }

    fn statement(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (kw, kp) = st.ident()?;
        match kw.as_str() {
            "algebra" => self.parse_algebra(st),
            "map" => self.parse_map(st),
            "basis" => self.parse_basis(st),
            "mixed" => self.parse_mixed(st),
            "foliation" => self.parse_foliation(st),
            "derham" => self.parse_derham(st),
            "cotangent" => self.parse_cotangent(st),
            "pullback" => self.parse_pullback(st),
            "weilres" => self.parse_weilres(st),
            "pushfol" => self.parse_pushfol(st),
            "mapsch" => self.parse_mapsch(st),
            "tangentat" => self.parse_tangent(st),
            "fplus" => self.parse_fplus(st),
            "mates" => self.parse_mates(st),
            "window" => self.parse_window(st),
            "check" => {
                let (name, p) = st.ident()?;
                st.finish()?;
                if self.get(&name).is_none() {
                    return Err(unknown(p, "declaration", &name));
                }
                self.checks.push(CheckCommand { name, line: p.line });
                Ok(())
            }
            _ => Err(CliError::Syntax { line: kp.line, col: kp.col, msg: format!("unknown directive `{kw}`") }),
        }
    }

    fn head(st: &mut Cursor) -> CliResult<(String, Pos)> {
        let (name, p) = st.ident()?;
        st.expect("=")?;
        Ok((name, p))
    }

    fn parse_window(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (text, p) = st.rest();
        self.window = parse_window_spec(&text, self.window)
            .map_err(|msg| CliError::Syntax { line: p.line, col: p.col, msg })?;
        Ok(())
    }

    fn parse_algebra(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        let (base, bp) = st.ident()?;
        let base = self.algebra(&base, bp)?;
        let mut gens = st.group('[', ']')?;
        let gens: Vec<String> = gens.split(&[',']).into_iter().map(|mut c| c.rest().0).collect();
        let mut rels = Vec::new();
        let mut rp = st.here();
        if st.eat("/") {
            rp = st.here();
            let mut g = st.group('(', ')')?;
            rels = g.split(&[',']).into_iter().map(|mut c| c.rest().0).collect();
        }
        let (mut smooth, mut lci) = (false, !rels.is_empty());
        while !st.at_end() {
            let (flag, fp) = st.ident()?;
            match flag.as_str() {
                "smooth" => {
                    smooth = true;
                    lci = false;
                }
                "lci" => lci = true,
                _ => return Err(CliError::Syntax { line: fp.line, col: fp.col, msg: format!("unknown flag `{flag}`") }),
            }
        }
        let mut b = AlgebraPresentation::builder(&name);
        if base.nvars() > 0 || base.base.is_some() {
            b = b.base(base);
        }
        for g in &gens {
            if g.is_empty() || !g.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(CliError::Syntax { line: p.line, col: p.col, msg: format!("bad generator name `{g}`") });
            }
            b = b.generator(g, 0);
        }
        for r in &rels {
            b = b.relation(r);
        }
        if let Some(n) = self.budget {
            b = b.budget(n);
        }
        let alg = b.smooth(smooth).lci(lci).build().map_err(build_err(rp))?;
        self.declare(name, p.line, Item::Algebra(Arc::new(alg)))
    }

    fn parse_map(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = st.ident()?;
        st.expect(":")?;
        let (src, sp) = st.ident()?;
        st.expect("->")?;
        let (tgt, tp) = st.ident()?;
        let (src, tgt) = (self.algebra(&src, sp)?, self.algebra(&tgt, tp)?);
        let mut body = st.group('{', '}')?;
        st.finish()?;
        let mut pairs = Vec::new();
        for mut piece in body.split(&[',', '\n']) {
            let (g, _) = piece.ident()?;
            piece.expect("->")?;
            let (img, _) = piece.rest();
            pairs.push((g, img));
        }
        let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let map = AlgebraMap::from_assignments(src, tgt, &refs).map_err(build_err(p))?;
        self.declare(name, p.line, Item::Map(map))
    }

    fn parse_basis(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        let mut g = st.group('{', '}')?;
        let elems: Vec<String> = g.split(&[',']).into_iter().map(|mut c| c.rest().0).collect();
        let mut asserted = Vec::new();
        if st.eat("mult") {
            let mut m = st.group('{', '}')?;
            for mut eq in m.split(&[',', ';', '\n']) {
                let (lhs, _) = eq.until(&['=']);
                eq.expect("=")?;
                let (rhs, _) = eq.rest();
                asserted.push((lhs, rhs));
            }
        }
        st.finish()?;
        if let Some(prev) = self.finite.get(&name) {
            return Err(CliError::Duplicate { name: format!("basis {name}"), first: prev.line, second: p.line });
        }
        let finite = match self.get(&name).map(|d| &d.item) {
            Some(Item::Map(m)) => {
                let polys = elems
                    .iter()
                    .map(|e| m.target.parse(e))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(build_err(p))?;
                FiniteFreeMap::from_map(m, &polys).map_err(build_err(p))?
            }
            Some(Item::Algebra(a)) => {
                let polys = elems
                    .iter()
                    .map(|e| a.parse(e))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(build_err(p))?;
                FiniteFreeMap::new(a.clone(), &polys).map_err(build_err(p))?
            }
            Some(_) => return Err(type_err(p, format!("`{name}` is neither a map nor an algebra"))),
            None => return Err(unknown(p, "map", &name)),
        };
        self.finite.insert(name, Finite { map: finite, asserted, line: p.line });
        Ok(())
    }

    fn parse_mixed(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = st.ident()?;
        st.expect("over")?;
        let (owner, op) = st.ident()?;
        let owner = self.algebra(&owner, op)?;
        let mut body = st.group('{', '}')?;
        st.finish()?;
        let mut b = GradedMixedPresentation::builder(&name, owner);
        for mut item in body.split(&[';', '\n']) {
            let (kw, kp) = item.ident()?;
            match kw.as_str() {
                "gen" => {
                    let (g, _) = item.ident()?;
                    item.expect(":")?;
                    let deg: i32 = item.number()?;
                    item.expect(",")?;
                    let w: u32 = item.number()?;
                    item.finish()?;
                    b = b.generator(&g, deg, w);
                }
                "d" | "eps" => {
                    let (g, _) = item.ident()?;
                    item.expect("->")?;
                    let (img, _) = item.rest();
                    b = if kw == "d" { b.d(&g, &img) } else { b.eps(&g, &img) };
                }
                _ => return Err(CliError::Syntax { line: kp.line, col: kp.col, msg: format!("expected `gen`, `d` or `eps`, found `{kw}`") }),
            }
        }
        let gm = b.build().map_err(build_err(p))?;
        self.declare(name, p.line, Item::Mixed(Arc::new(gm)))
    }

    /// `B` or `B/A`, where `A` must be the base of `B` (`Q` when it has none).
    fn relative(&self, st: &mut Cursor) -> CliResult<Arc<AlgebraPresentation>> {
        let (b, bp) = st.ident()?;
        let alg = self.algebra(&b, bp)?;
        if st.eat("/") {
            let (a, ap) = st.ident()?;
            let base = alg.base.as_ref().map(|x| x.name.clone()).unwrap_or_else(|| "Q".into());
            if a != base {
                return Err(type_err(ap, format!("`{b}` is an algebra over `{base}`, not over `{a}`")));
            }
        }
        Ok(alg)
    }

    fn parse_foliation(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        let (kind, kp) = st.ident()?;
        let mut arg = st.group('(', ')')?;
        st.finish()?;
        let (foliation, origin) = match kind.as_str() {
            "final" => {
                let b = self.relative(&mut arg)?;
                (FoliationPresentation::final_foliation(&b).map_err(build_err(p))?, FoliationOrigin::Final)
            }
            "zero" => {
                let b = self.relative(&mut arg)?;
                (FoliationPresentation::zero_foliation(&b).map_err(build_err(p))?, FoliationOrigin::Zero)
            }
            "mixed" | "custom" => {
                let (g, gp) = arg.ident()?;
                let gm = match self.get(&g).map(|d| &d.item) {
                    Some(Item::Mixed(gm)) => gm.as_ref().clone(),
                    Some(_) => return Err(type_err(gp, format!("`{g}` is not a mixed algebra"))),
                    None => return Err(unknown(gp, "mixed algebra", &g)),
                };
                (FoliationPresentation::from_mixed(&name, gm).map_err(build_err(p))?, FoliationOrigin::Mixed)
            }
            _ => {
                return Err(CliError::Syntax {
                    line: kp.line,
                    col: kp.col,
                    msg: format!("expected `final`, `zero`, `mixed` or `custom`, found `{kind}`"),
                })
            }
        };
        arg.finish()?;
        self.declare(name, p.line, Item::Foliation { foliation, origin })
    }

    fn parse_derham(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        st.expect("DR")?;
        let mut arg = st.group('(', ')')?;
        let b = self.relative(&mut arg)?;
        arg.finish()?;
        let (mut weight, mut degree) = (None, None);
        loop {
            if st.eat("weight") {
                st.expect("<=")?;
                weight = Some(st.number()?);
            } else if st.eat("deg") {
                st.expect("<=")?;
                degree = Some(st.number()?);
            } else {
                break;
            }
        }
        st.finish()?;
        self.declare(name, p.line, Item::DeRham { algebra: b, weight, degree })
    }

    fn parse_cotangent(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        st.expect("L")?;
        let mut arg = st.group('(', ')')?;
        let b = self.relative(&mut arg)?;
        arg.finish()?;
        st.finish()?;
        let model = kaehler(&b).map_err(build_err(p))?;
        self.declare(name, p.line, Item::Cotangent(model))
    }

    fn parse_pullback(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        let (f, fp) = st.ident()?;
        st.expect("^*")?;
        let (fol, folp) = st.ident()?;
        st.finish()?;
        let map = self.map(&f, fp)?.clone();
        let (source, origin) = self.foliation(&fol, folp)?;
        if !map.source.same_as(&source.owner) {
            return Err(type_err(fp, format!("`{f}` starts at `{}` but `{fol}` lives on `{}`", map.source.name, source.owner.name)));
        }
        let mut foliation = pullback_foliation(source, &map).map_err(build_err(p))?;
        foliation.name = name.clone();
        self.declare(name, p.line, Item::Pullback { map: f, source: fol, origin, foliation })
    }

    fn parse_weilres(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        st.expect("pushforward")?;
        let mut args = st.group('(', ')')?;
        st.finish()?;
        let (z, zp) = args.ident()?;
        args.expect(",")?;
        let (f, fp) = args.ident()?;
        args.finish()?;
        let c = self.algebra(&z, zp)?;
        let fm = self.finite_map(&f, fp)?;
        let weil = weil_restrict(&c, fm).map_err(build_err(p))?;
        self.declare(name, p.line, Item::Weil { algebra: z, map: f, weil })
    }

    fn split_star(st: &mut Cursor, op: &str) -> CliResult<(String, Pos, String, Pos)> {
        let (text, p) = st.rest();
        let Some((f, rest)) = text.split_once(op) else {
            return Err(CliError::Syntax { line: p.line, col: p.col, msg: format!("expected `<map>{op} <argument>`") });
        };
        let arg_col = p.col + f.chars().count() + op.chars().count() + (rest.len() - rest.trim_start().len());
        Ok((f.trim().to_string(), p, rest.trim().to_string(), Pos { line: p.line, col: arg_col }))
    }

    fn parse_pushfol(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        let (f, fp, fol, folp) = Self::split_star(st, "_*")?;
        let fm = self.finite_map(&f, fp)?.clone();
        let (source, _) = self.foliation(&fol, folp)?;
        let pushed = pushforward_foliation(source, &fm).map_err(build_err(p))?;
        self.declare(name, p.line, Item::PushedFoliation { map: f, source: fol, pushed })
    }

    fn parse_mapsch(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        st.expect("Map")?;
        let mut args = st.group('(', ')')?;
        st.finish()?;
        let (f, fp) = args.ident()?;
        args.expect(",")?;
        let (fol, folp) = args.ident()?;
        args.finish()?;
        let fm = self.finite_map(&f, fp)?.clone();
        let (source, _) = self.foliation(&fol, folp)?;
        let mapping = mapping_foliation(&fm, source).map_err(build_err(p))?;
        self.declare(name, p.line, Item::MappingScheme { map: f, source: fol, mapping })
    }

    fn parse_tangent(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        let (scheme, sp) = st.ident()?;
        let nvars = match self.get(&scheme).map(|d| &d.item) {
            Some(Item::MappingScheme { mapping, .. }) => mapping.weil.presentation.nvars(),
            Some(_) => return Err(type_err(sp, format!("`{scheme}` is not a mapping scheme"))),
            None => return Err(unknown(sp, "mapping scheme", &scheme)),
        };
        st.expect("at")?;
        let mut points = Vec::new();
        while !st.at_end() {
            let gp = st.here();
            let mut g = st.group('(', ')')?;
            let mut point = Vec::new();
            for mut c in g.split(&[',']) {
                let (text, cp) = c.rest();
                let s: Scalar = text
                    .parse()
                    .map_err(|_| CliError::Syntax { line: cp.line, col: cp.col, msg: format!("`{text}` is not a rational number") })?;
                point.push(s);
            }
            if point.len() != nvars {
                return Err(type_err(gp, format!("`{scheme}` needs points with {nvars} coordinates")));
            }
            points.push(point);
        }
        if points.is_empty() {
            return Err(st.syntax("expected at least one point"));
        }
        self.declare(name, p.line, Item::Tangent { scheme, points })
    }

    fn parse_fplus(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = Self::head(st)?;
        let (f, fp, arg, ap) = Self::split_star(st, "_+")?;
        let target = self.finite_map(&f, fp)?.target.clone();
        let mut c = Cursor::new(&arg, ap.line);
        let (kind, _) = c.ident()?;
        let mut inner = c.group('(', ')')?;
        c.finish()?;
        let (inner_text, _) = inner.rest();
        let complex = match kind.as_str() {
            "free" => {
                let r: usize = inner_text
                    .parse()
                    .map_err(|_| CliError::Syntax { line: ap.line, col: ap.col, msg: "expected `free(<rank>)`".into() })?;
                PerfectComplex::free(target, 0, (1..=r).map(|i| format!("e{i}")).collect()).map_err(build_err(p))?
            }
            "cone" => {
                let poly = target.parse(&inner_text).map_err(build_err(ap))?;
                let d = PolyMatrix::from_rows(vec![vec![poly]], 1);
                PerfectComplex::new(target, vec![(-1, vec!["a".into()]), (0, vec!["b".into()])], vec![(-1, d)])
                    .map_err(build_err(p))?
            }
            _ => return Err(CliError::Syntax { line: ap.line, col: ap.col, msg: format!("expected `free(r)` or `cone(p)`, found `{kind}`") }),
        };
        self.declare(name, p.line, Item::FPlus { map: f, shape: arg, complex })
    }

    fn parse_mates(&mut self, st: &mut Cursor) -> CliResult<()> {
        let (name, p) = st.ident()?;
        let mut body = st.group('{', '}')?;
        st.finish()?;
        let mut block = MateBlock { ctx: AdjunctionContext::new(), squares: BTreeMap::new(), commands: Vec::new() };
        let mut local_names: BTreeMap<String, usize> = BTreeMap::new();
        for mut line in body.split(&['\n', ';']) {
            let lp = line.start();
            let (kw, kp) = line.ident()?;
            let err = build_err(lp);
            match kw.as_str() {
                "objects" => {
                    while !line.at_end() {
                        let (o, _) = line.ident()?;
                        block.ctx.add_object(&o).map_err(&err)?;
                    }
                }
                "cell" => {
                    let (c, _) = line.ident()?;
                    line.expect(":")?;
                    let (from, _) = line.ident()?;
                    line.expect("->")?;
                    let (to, _) = line.ident()?;
                    line.finish()?;
                    block.ctx.add_one_cell(&c, &from, &to).map_err(&err)?;
                }
                "adjunction" => {
                    let (l, r) = adjoint_pair(&mut line)?;
                    line.expect("unit")?;
                    let (unit, _) = line.ident()?;
                    line.expect("counit")?;
                    let (counit, _) = line.ident()?;
                    line.finish()?;
                    block.ctx.add_adjunction(&l, &r, &unit, &counit).map_err(&err)?;
                }
                "twocell" => {
                    let (c, _) = line.ident()?;
                    line.expect(":")?;
                    let (src, _) = line.until(&['=']);
                    line.expect("=>")?;
                    let (rest, _) = line.rest();
                    let mut tgt: Vec<&str> = rest.split_whitespace().collect();
                    let invertible = tgt.last() == Some(&"invertible");
                    if invertible {
                        tgt.pop();
                    }
                    let src = word(&src);
                    let tgt: Vec<&str> = tgt.into_iter().filter(|w| *w != "Id").collect();
                    block.ctx.add_two_cell(&c, &src, &tgt, invertible).map_err(&err)?;
                }
                "square" => {
                    let (s, _) = line.ident()?;
                    line.expect("=")?;
                    let mut uv = line.group('(', ')')?;
                    let (u, _) = uv.until(&[',']);
                    uv.expect(",")?;
                    let (v, _) = uv.rest();
                    let (l1, r1) = adjoint_pair(&mut line)?;
                    line.expect("over")?;
                    let (l, r) = adjoint_pair(&mut line)?;
                    line.expect("with")?;
                    let (phi, php) = line.rest();
                    let phi = block.ctx.parse_term(&phi).map_err(build_err(php))?;
                    let top = block.ctx.find_adjunction(&l1, &r1).map_err(&err)?;
                    let bottom = block.ctx.find_adjunction(&l, &r).map_err(&err)?;
                    let owned = |w: &str| word(w).into_iter().map(String::from).collect();
                    let sq = Square::new(&block.ctx, &s, owned(&u), owned(&v), top, bottom, phi).map_err(&err)?;
                    if block.squares.insert(s.clone(), sq).is_some() {
                        return Err(CliError::Duplicate { name: s, first: lp.line, second: lp.line });
                    }
                }
                "let" => {
                    let (n, _) = line.ident()?;
                    line.expect("=")?;
                    let term = if line.eat("mate_left") {
                        let mut a = line.group('(', ')')?;
                        let (s, sp) = a.ident()?;
                        a.finish()?;
                        let sq = block.squares.get(&s).ok_or_else(|| unknown(sp, "square", &s))?;
                        mate_left(&block.ctx, sq, &sq.phi).map_err(&err)?
                    } else if line.eat("mate_right") {
                        let mut a = line.group('(', ')')?;
                        let (s, sp) = a.ident()?;
                        a.expect(",")?;
                        let (t, tp) = a.rest();
                        let sq = block.squares.get(&s).ok_or_else(|| unknown(sp, "square", &s))?;
                        let psi = block.ctx.parse_term(&t).map_err(build_err(tp))?;
                        mate_right(&block.ctx, sq, &psi).map_err(&err)?
                    } else {
                        let (t, tp) = line.rest();
                        block.ctx.parse_term(&t).map_err(build_err(tp))?
                    };
                    line.finish()?;
                    block.ctx.define(&n, term).map_err(&err)?;
                }
                "roundtrip" | "bcunit" | "paste" | "assoc" | "equal" => {
                    let (n, np) = line.ident()?;
                    let op = self.mate_op(&kw, &mut line, &mut block)?;
                    line.finish()?;
                    if let MateOp::Paste { top, bottom } = &op {
                        let (t, b) = (&block.squares[top], &block.squares[bottom]);
                        let mut sq = pasted_square(&block.ctx, t, b).map_err(&err)?;
                        sq.name = n.clone();
                        block.squares.insert(n.clone(), sq);
                    }
                    if let Some(first) = local_names.insert(n.clone(), np.line) {
                        return Err(CliError::Duplicate { name: n, first, second: np.line });
                    }
                    block.commands.push(MateCommand { name: n, line: np.line, op });
                }
                _ => {
                    return Err(CliError::Syntax {
                        line: kp.line,
                        col: kp.col,
                        msg: format!("unknown mates directive `{kw}`"),
                    })
                }
            }
        }
        let commands: Vec<(String, usize)> =
            block.commands.iter().map(|c| (c.name.clone(), c.line)).collect();
        self.declare(name.clone(), p.line, Item::Mates(block))?;
        for (index, (n, line)) in commands.into_iter().enumerate() {
            self.declare(n, line, Item::MateCheck { block: name.clone(), index })?;
        }
        Ok(())
    }

    fn mate_op(&self, kw: &str, line: &mut Cursor, block: &mut MateBlock) -> CliResult<MateOp> {
        let square = |line: &mut Cursor, block: &MateBlock| -> CliResult<String> {
            let (s, sp) = line.ident()?;
            if !block.squares.contains_key(&s) {
                return Err(unknown(sp, "square", &s));
            }
            Ok(s)
        };
        match kw {
            "equal" => {
                line.expect(":")?;
                let (lhs, lp) = line.until(&['=']);
                line.expect("=")?;
                let (rhs, rp) = line.rest();
                let lhs = block.ctx.parse_term(&lhs).map_err(build_err(lp))?;
                let rhs = block.ctx.parse_term(&rhs).map_err(build_err(rp))?;
                Ok(MateOp::Equal(lhs, rhs))
            }
            _ => {
                line.expect("=")?;
                let first = square(line, block)?;
                match kw {
                    "roundtrip" => Ok(MateOp::Roundtrip(first)),
                    "bcunit" => {
                        line.expect("with")?;
                        let (t, tp) = line.rest();
                        let psi = block.ctx.parse_term(&t).map_err(build_err(tp))?;
                        Ok(MateOp::BcUnit { square: first, psi })
                    }
                    "paste" => {
                        line.expect("over")?;
                        let bottom = square(line, block)?;
                        Ok(MateOp::Paste { top: first, bottom })
                    }
                    _ => {
                        line.expect("over")?;
                        let b = square(line, block)?;
                        line.expect("over")?;
                        let c = square(line, block)?;
                        Ok(MateOp::Assoc(first, b, c))
                    }
                }
            }
        }
    }
}

fn adjoint_pair(line: &mut Cursor) -> CliResult<(String, String)> {
    let (l, _) = line.ident()?;
    line.expect("-|")?;
    let (r, _) = line.ident()?;
    Ok((l, r))
}

/// Whitespace- or `∘`-separated 1-cells; `Id` is the empty word.
fn word(text: &str) -> Vec<&str> {
    text.split(|c: char| c.is_whitespace() || c == '∘' || c == '.')
        .filter(|w| !w.is_empty() && *w != "Id")
        .collect()
}

/// Applies `w=<W>,d=<D>` (either part optional) on top of `base`.
pub fn parse_window_spec(spec: &str, base: Window) -> Result<Window, String> {
    let mut w = base;
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected `key=value`, found `{part}`"))?;
        let v: u32 = v.trim().parse().map_err(|_| format!("`{}` is not a bound", v.trim()))?;
        match k.trim() {
            "w" | "weight" => w.weight = v,
            "d" | "deg" => w.poly_degree = v,
            other => return Err(format!("unknown window key `{other}`")),
        }
    }
    Ok(w)
}
