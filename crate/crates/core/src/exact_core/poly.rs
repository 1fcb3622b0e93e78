//! Graded-commutative polynomials over ℚ.
//!
//! Variables carry a cohomological degree and a weight. Odd-degree variables
//! anticommute and square to zero; everything else commutes. Monomials are
//! compared degree-lexicographically with variable order equal to declaration
//! order, so the last key of a [`Poly`] is its leading monomial.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use super::scalar::{fmt_scalar, q, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarSpec {
    pub name: String,
    /// Cohomological degree; connective objects live in degrees ≤ 0.
    pub degree: i32,
    pub weight: u32,
}

impl VarSpec {
    pub fn new(name: impl Into<String>, degree: i32, weight: u32) -> Self {
        Self {
            name: name.into(),
            degree,
            weight,
        }
    }

    pub fn even(name: impl Into<String>) -> Self {
        Self::new(name, 0, 0)
    }

    pub fn is_odd(&self) -> bool {
        self.degree.rem_euclid(2) == 1
    }
}

/// Exponent vector. Ordered degree-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming divisibility.
    pub fn quotient(&self, other: &Monomial) -> Monomial {
        Monomial(other.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.max(b))
                .collect(),
        )
    }

    pub fn is_coprime(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }

    pub fn padded(&self, n: usize) -> Monomial {
        let mut e = self.0.clone();
        e.resize(n, 0);
        Monomial(e)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial; the number of variables is fixed by the ring it lives in.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn from_term(m: Monomial, c: Scalar) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.add_term(m.clone(), -c.clone());
        }
        r
    }

    pub fn neg(&self) -> Poly {
        self.scale(&q(-1))
    }

    pub fn scale(&self, s: &Scalar) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn leading(&self) -> Option<(&Monomial, &Scalar)> {
        self.terms.iter().next_back()
    }

    pub fn constant_term(&self, n: usize) -> Scalar {
        self.terms
            .get(&Monomial::one(n))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    pub fn max_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.total_degree()).max()
    }

    /// Pads every exponent vector to `n` variables (appending new variables).
    pub fn padded(&self, n: usize) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.padded(n), c.clone()))
                .collect(),
        }
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
            None => Poly::zero(),
        }
    }
}

/// A graded-commutative polynomial ring over ℚ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolyRing {
    pub vars: Vec<VarSpec>,
}

impl PolyRing {
    pub fn new(vars: Vec<VarSpec>) -> Self {
        Self { vars }
    }

    /// Ring of even degree-0 variables with the given names.
    pub fn discrete(names: &[&str]) -> Self {
        Self {
            vars: names.iter().map(|n| VarSpec::even(*n)).collect(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.vars[i].is_odd()
    }

    pub fn extended(&self, more: impl IntoIterator<Item = VarSpec>) -> PolyRing {
        let mut vars = self.vars.clone();
        vars.extend(more);
        PolyRing { vars }
    }

    pub fn one(&self) -> Poly {
        Poly::from_term(Monomial::one(self.nvars()), q(1))
    }

    pub fn constant(&self, c: Scalar) -> Poly {
        Poly::from_term(Monomial::one(self.nvars()), c)
    }

    pub fn var(&self, i: usize) -> Poly {
        Poly::from_term(Monomial::var(self.nvars(), i), q(1))
    }

    pub fn var_named(&self, name: &str) -> Result<Poly> {
        self.index_of(name)
            .map(|i| self.var(i))
            .ok_or_else(|| Error::InvalidPresentation(format!("unknown variable `{name}`")))
    }

    pub fn monomial_degree(&self, m: &Monomial) -> i32 {
        m.0.iter()
            .zip(&self.vars)
            .map(|(e, v)| *e as i32 * v.degree)
            .sum()
    }

    pub fn monomial_weight(&self, m: &Monomial) -> u32 {
        m.0.iter().zip(&self.vars).map(|(e, v)| e * v.weight).sum()
    }

    pub fn monomial_parity(&self, m: &Monomial) -> bool {
        self.monomial_degree(m).rem_euclid(2) == 1
    }

    /// Number of odd variables in `m` (the monomial's parity count).
    fn odd_count(&self, m: &Monomial) -> usize {
        m.0.iter()
            .enumerate()
            .filter(|(i, e)| **e > 0 && self.is_odd(*i))
            .count()
    }

    /// Whether `m` is a legal monomial (odd variables appear at most once).
    pub fn is_legal(&self, m: &Monomial) -> bool {
        m.0.iter()
            .enumerate()
            .all(|(i, e)| !self.is_odd(i) || *e <= 1)
    }

    /// Product of two monomials with its Koszul sign, or `None` if it vanishes.
    pub fn mul_monomials(&self, a: &Monomial, b: &Monomial) -> Option<(Monomial, bool)> {
        let mut negative = false;
        let mut odd_after = 0usize;
        // walk from the last variable down, counting odd variables of `a` above index j
        for j in (0..self.nvars()).rev() {
            if self.is_odd(j) {
                if a.0[j] > 0 && b.0[j] > 0 {
                    return None;
                }
                if b.0[j] > 0 && odd_after % 2 == 1 {
                    negative = !negative;
                }
                if a.0[j] > 0 {
                    odd_after += 1;
                }
            }
        }
        let e = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
        Some((Monomial(e), negative))
    }

    pub fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                if let Some((m, neg)) = self.mul_monomials(ma, mb) {
                    let c = ca * cb;
                    r.add_term(m, if neg { -c } else { c });
                }
            }
        }
        r
    }

    pub fn mul_monomial(&self, m: &Monomial, p: &Poly) -> Poly {
        self.mul(&Poly::from_term(m.clone(), q(1)), p)
    }

    pub fn pow(&self, p: &Poly, e: u32) -> Poly {
        let mut r = self.one();
        for _ in 0..e {
            r = self.mul(&r, p);
        }
        r
    }

    pub fn product<'a>(&self, factors: impl IntoIterator<Item = &'a Poly>) -> Poly {
        factors
            .into_iter()
            .fold(self.one(), |acc, f| self.mul(&acc, f))
    }

    /// Partial derivative with respect to an even variable.
    pub fn partial(&self, p: &Poly, i: usize) -> Poly {
        assert!(
            !self.is_odd(i),
            "partial derivatives are taken along even variables"
        );
        let mut r = Poly::zero();
        for (m, c) in &p.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut mm = m.clone();
            mm.0[i] -= 1;
            r.add_term(mm, c * q(e as i64));
        }
        r
    }

    /// Applies the derivation determined by `images` (one per variable). An odd
    /// derivation picks up `(-1)^{|prefix|}` when it passes a prefix.
    pub fn apply_derivation(&self, images: &[Poly], odd: bool, p: &Poly) -> Poly {
        let n = self.nvars();
        let mut r = Poly::zero();
        for (m, c) in &p.terms {
            for i in 0..n {
                let e = m.0[i];
                if e == 0 || images[i].is_zero() {
                    continue;
                }
                let mut prefix = Monomial::one(n);
                prefix.0[..i].copy_from_slice(&m.0[..i]);
                let mut suffix = m.clone();
                for k in 0..i {
                    suffix.0[k] = 0;
                }
                suffix.0[i] = e - 1;
                let mut coeff = c * q(e as i64);
                if odd && self.odd_count(&prefix) % 2 == 1 {
                    coeff = -coeff;
                }
                let left = self.mul_monomial(&prefix, &images[i]);
                let term = self.mul(&left, &Poly::from_term(suffix, q(1)));
                r = r.add(&term.scale(&coeff));
            }
        }
        r
    }

    /// Substitutes `images[i]` (polynomials in `target`) for variable `i`.
    pub fn substitute(&self, p: &Poly, images: &[Poly], target: &PolyRing) -> Poly {
        let mut r = Poly::zero();
        for (m, c) in &p.terms {
            let mut t = target.one();
            for (i, e) in m.0.iter().enumerate() {
                for _ in 0..*e {
                    t = target.mul(&t, &images[i]);
                }
            }
            r = r.add(&t.scale(c));
        }
        r
    }

    /// Whether every term of `p` has the same (degree, weight), returning it.
    pub fn bidegree(&self, p: &Poly) -> Option<Option<(i32, u32)>> {
        let mut it = p
            .terms
            .keys()
            .map(|m| (self.monomial_degree(m), self.monomial_weight(m)));
        let first = match it.next() {
            None => return Some(None),
            Some(f) => f,
        };
        if it.all(|x| x == first) {
            Some(Some(first))
        } else {
            None
        }
    }

    pub fn fmt_monomial(&self, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for (i, e) in m.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(self.vars[i].name.clone()),
                e => parts.push(format!("{}^{}", self.vars[i].name, e)),
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    pub fn fmt(&self, p: &Poly) -> String {
        if p.is_zero() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, (m, c)) in p.terms.iter().rev().enumerate() {
            let neg = c < &Scalar::zero();
            let a = if neg { -c.clone() } else { c.clone() };
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if m.is_one() {
                s.push_str(&fmt_scalar(&a));
            } else if a.is_one() {
                s.push_str(&self.fmt_monomial(m));
            } else {
                let _ = write!(s, "{}*{}", fmt_scalar(&a), self.fmt_monomial(m));
            }
        }
        s
    }

    /// Parses `+ - * ^`, integers, `a/b` rational literals, parentheses and
    /// variable names of the ring.
    pub fn parse(&self, src: &str) -> Result<Poly> {
        let mut p = Parser {
            ring: self,
            chars: src.chars().collect(),
            pos: 0,
        };
        let r = p.expr()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(Error::InvalidPresentation(format!(
                "unexpected `{}` at offset {} in `{src}`",
                p.chars[p.pos], p.pos
            )));
        }
        Ok(r)
    }
}

struct Parser<'a> {
    ring: &'a PolyRing,
    chars: Vec<char>,
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn err(&self, what: &str) -> Error {
        let s: String = self.chars.iter().collect();
        Error::InvalidPresentation(format!("{what} at offset {} in `{s}`", self.pos))
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = match self.peek() {
            Some('-') => {
                self.pos += 1;
                self.term()?.neg()
            }
            Some('+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some('-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        while let Some('*') = self.peek() {
            self.pos += 1;
            let f = self.factor()?;
            acc = self.ring.mul(&acc, &f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if let Some('^') = self.peek() {
            self.pos += 1;
            self.skip_ws();
            let n = self
                .integer()
                .ok_or_else(|| self.err("expected exponent"))?;
            return Ok(self.ring.pow(&base, n as u32));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Option<i64> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        self.chars[start..self.pos]
            .iter()
            .collect::<String>()
            .parse()
            .ok()
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some('-') => {
                self.pos += 1;
                Ok(self.atom()?.neg())
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer().ok_or_else(|| self.err("expected number"))?;
                // `a/b` directly after a literal is a rational constant
                if self.chars.get(self.pos) == Some(&'/') {
                    self.pos += 1;
                    let d = self
                        .integer()
                        .ok_or_else(|| self.err("expected denominator"))?;
                    if d == 0 {
                        return Err(self.err("zero denominator"));
                    }
                    return Ok(self.ring.constant(Scalar::new(n.into(), d.into())));
                }
                Ok(self.ring.constant(q(n)))
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_alphanumeric()
                        || self.chars[self.pos] == '_'
                        || self.chars[self.pos] == '\'')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                self.ring.var_named(&name)
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> PolyRing {
        PolyRing::new(vec![
            VarSpec::even("x"),
            VarSpec::even("y"),
            VarSpec::new("dx", -1, 1),
            VarSpec::new("dy", -1, 1),
        ])
    }

    #[test]
    fn deglex_orders_by_degree_then_declaration_order() {
        let r = ring();
        let p = r.parse("y^2 + x*y + x + x^2").unwrap();
        let (lead, _) = p.leading().unwrap();
        assert_eq!(r.fmt_monomial(lead), "x^2");
        assert_eq!(r.fmt(&p), "x^2 + x*y + y^2 + x");
    }

    #[test]
    fn odd_variables_anticommute() {
        let r = ring();
        let a = r.parse("dy*dx").unwrap();
        let b = r.parse("dx*dy").unwrap();
        assert_eq!(a, b.neg());
        assert!(r.parse("dx*dx").unwrap().is_zero());
        assert!(r.parse("dx*y*dx").unwrap().is_zero());
    }

    #[test]
    fn odd_derivation_obeys_leibniz_sign() {
        let r = ring();
        // de Rham: x -> dx, y -> dy, dx -> 0, dy -> 0
        let imgs = vec![r.var(2), r.var(3), Poly::zero(), Poly::zero()];
        let p = r.parse("x^3*y").unwrap();
        let dp = r.apply_derivation(&imgs, true, &p);
        assert_eq!(dp, r.parse("3*x^2*y*dx + x^3*dy").unwrap());
        let w = r.parse("y*dx").unwrap();
        let dw = r.apply_derivation(&imgs, true, &w);
        assert_eq!(dw, r.parse("dy*dx").unwrap());
        let dd = r.apply_derivation(&imgs, true, &dp);
        assert!(dd.is_zero());
    }

    #[test]
    fn parses_rationals_and_parentheses() {
        let r = ring();
        let p = r.parse("1/2*(x - y)^2").unwrap();
        assert_eq!(r.fmt(&p), "1/2*x^2 - x*y + 1/2*y^2");
    }
}
