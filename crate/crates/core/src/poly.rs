//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded lexicographic, so iteration (and therefore serialization) is
//! deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub type Rational = BigRational;

/// Builds the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exponent vector of a monomial, one entry per variable.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Rational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut p = Poly::zero(nvars);
        p.add_term(Monomial::var(nvars, i), Rational::one());
        p
    }

    /// `c * z^exponents`.
    pub fn monomial(exponents: Vec<u32>, c: Rational) -> Self {
        let nvars = exponents.len();
        let mut p = Poly::zero(nvars);
        p.add_term(Monomial(exponents), c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Returns the constant value if the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                (m.degree() == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        assert_eq!(m.0.len(), self.nvars, "monomial arity mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[i] -= 1;
            out.add_term(dm, c * Rational::from_integer(BigInt::from(e)));
        }
        out
    }

    pub fn eval_rational(&self, z: &[Rational]) -> Rational {
        assert_eq!(z.len(), self.nvars);
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (zi, &e) in z.iter().zip(&m.0) {
                for _ in 0..e {
                    v *= zi;
                }
            }
            acc += v;
        }
        acc
    }

    pub fn eval_f64(&self, z: &[f64]) -> f64 {
        self.compile().eval(z)
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let powers = m
                        .0
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| e > 0)
                        .map(|(i, &e)| (i, e as i32))
                        .collect();
                    (rat_to_f64(c), powers)
                })
                .collect(),
        }
    }

    /// Substitutes `args[i]` for variable `i`; all arguments share an arity.
    pub fn compose(&self, args: &[Poly]) -> Poly {
        assert_eq!(args.len(), self.nvars);
        let out_vars = args.first().map(Poly::nvars).unwrap_or(0);
        let mut out = Poly::zero(out_vars);
        for (m, c) in &self.terms {
            let mut term = Poly::constant(out_vars, c.clone());
            for (arg, &e) in args.iter().zip(&m.0) {
                if e > 0 {
                    term = &term * &arg.pow(e);
                }
            }
            out = &out + &term;
        }
        out
    }

    pub fn to_serial(&self) -> Vec<PolyTerm> {
        self.terms
            .iter()
            .map(|(m, c)| PolyTerm {
                exponents: m.0.clone(),
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect()
    }

    pub fn from_serial(nvars: usize, terms: &[PolyTerm]) -> Result<Poly, Error> {
        let mut p = Poly::zero(nvars);
        for t in terms {
            if t.exponents.len() != nvars {
                return Err(Error::Parse(format!(
                    "polynomial term has {} exponents, expected {nvars}",
                    t.exponents.len()
                )));
            }
            let num: BigInt = t
                .num
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator {:?}", t.num)))?;
            let den: BigInt = t
                .den
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator {:?}", t.den)))?;
            if den.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            p.add_term(Monomial(t.exponents.clone()), Rational::new(num, den));
        }
        Ok(p)
    }
}

/// One term of the canonical serialization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub exponents: Vec<u32>,
    pub num: String,
    pub den: String,
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("z{i}") } else { format!("z{i}^{e}") })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

/// Float evaluator for a [`Poly`].
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub fn eval(&self, z: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, powers) in &self.terms {
            let mut v = *c;
            for &(i, e) in powers {
                v *= if e == 1 { z[i] } else { z[i].powi(e) };
            }
            acc += v;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Coordinate names `x1..xn, y1..yn, t` (also `x, y` when `n = 1`).
pub fn coordinate_names(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    v.extend((1..=n).map(|j| format!("y{j}")));
    v.push("t".into());
    v
}

/// Parameter names `s1..sm` (also `s` when `m = 1`).
pub fn parameter_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("s{j}")).collect()
}

fn resolve_var(name: &str, vars: &[String]) -> Option<usize> {
    if let Some(i) = vars.iter().position(|v| v == name) {
        return Some(i);
    }
    // single-index shorthands: `x`, `y` in H^1, `s` for curves
    let alias = format!("{name}1");
    let hits: Vec<usize> = vars.iter().enumerate().filter(|(_, v)| **v == alias).map(|(i, _)| i).collect();
    let family = vars.iter().filter(|v| v.starts_with(name) && v[name.len()..].parse::<usize>().is_ok()).count();
    (hits.len() == 1 && family == 1).then(|| hits[0])
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>, Error> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Num(parse_decimal(&text)?));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}' in \"{src}\"")));
        }
    }
    Ok(out)
}

fn parse_decimal(text: &str) -> Result<Rational, Error> {
    let bad = || Error::Parse(format!("bad number \"{text}\""));
    let (int, frac) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if (int.is_empty() && frac.is_empty()) || frac.contains('.') {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    Ok(Rational::new(num, den))
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [String],
    src: &'a str,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} in \"{}\"", self.src))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly, Error> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly, Error> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                let c = d.as_constant().filter(|c| !c.is_zero()).ok_or_else(|| self.err("division by a non-constant or zero"))?;
                acc = acc.scale(&(Rational::one() / c));
            } else if matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Num(_)) | Some(Tok::Op('('))) {
                acc = &acc * &self.power()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Poly, Error> {
        if self.eat('-') {
            return Ok(-&self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Poly, Error> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(e)) if e.is_integer() && !e.is_negative() => {
                    self.pos += 1;
                    let e = e.to_integer().to_u32().ok_or_else(|| self.err("exponent too large"))?;
                    return Ok(base.pow(e));
                }
                _ => return Err(self.err("exponent must be a non-negative integer")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly, Error> {
        let nv = self.vars.len();
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(c)) => {
                self.pos += 1;
                Ok(Poly::constant(nv, c))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let i = resolve_var(&name, self.vars).ok_or_else(|| {
                    self.err(&format!("unknown variable '{name}' (expected one of {})", self.vars.join(", ")))
                })?;
                Ok(Poly::var(nv, i))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("missing ')'"));
                }
                Ok(e)
            }
            _ => Err(self.err("expected a number, variable or '('")),
        }
    }
}

impl Poly {
    /// Parses an expression such as `x1 - t^2/4 + 3/2*y1*t` over the named variables.
    pub fn parse(src: &str, vars: &[String]) -> Result<Poly, Error> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let mut p = Parser { toks, pos: 0, vars, src };
        let out = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(p.err("trailing input"));
        }
        Ok(out)
    }

    /// Parses an exact constant such as `-3/4` or `0.25`.
    pub fn parse_constant(src: &str) -> Result<Rational, Error> {
        Poly::parse(src, &[])?
            .as_constant()
            .ok_or_else(|| Error::Parse(format!("\"{src}\" is not a constant")))
    }

    /// Renders with the given variable names.
    pub fn display_with(&self, vars: &[String]) -> String {
        let mut s = self.to_string();
        // replace longest indices first so z10 is not read as z1 followed by 0
        for i in (0..self.nvars()).rev() {
            s = s.replace(&format!("z{i}"), &vars[i]);
        }
        s
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::var(3, 0)
    }
    fn y() -> Poly {
        Poly::var(3, 1)
    }
    fn t() -> Poly {
        Poly::var(3, 2)
    }

    #[test]
    fn difference_of_squares() {
        let lhs = &(&x() + &y()) * &(&x() - &y());
        let rhs = &(&x() * &x()) - &(&y() * &y());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn zero_is_additive_identity() {
        let p = &(&x() * &t()) + &Poly::constant(3, rat(5, 7));
        assert_eq!(&p + &Poly::zero(3), p);
    }

    #[test]
    fn scaling() {
        let p = x().scale(&rat(3, 1));
        assert_eq!(p.scale(&rat(2, 3)), x().scale(&rat(2, 1)));
    }

    #[test]
    fn partial_of_x_t_squared() {
        let p = &x() * &(&t() * &t());
        assert_eq!(p.partial(2), (&x() * &t()).scale(&rat(2, 1)));
        assert!(Poly::constant(3, rat(4, 1)).partial(0).is_zero());
    }

    #[test]
    fn evaluation() {
        let p = &(&x() * &x()) + &t();
        let z = [rat(2, 1), rat(0, 1), rat(3, 1)];
        assert_eq!(p.eval_rational(&z), rat(7, 1));
        assert_eq!(p.eval_f64(&[2.0, 0.0, 3.0]), 7.0);
    }

    #[test]
    fn serial_roundtrip_and_order() {
        let p = &(&(&x() * &x()) + &t().scale(&rat(-1, 2))) + &Poly::one(3);
        let s = p.to_serial();
        // graded order: constant first, then degree one, then degree two
        assert_eq!(s[0].exponents, vec![0, 0, 0]);
        assert_eq!(s[1].exponents, vec![0, 0, 1]);
        assert_eq!(s[1].num, "-1");
        assert_eq!(s[1].den, "2");
        assert_eq!(Poly::from_serial(3, &s).unwrap(), p);
    }

    #[test]
    fn compose_substitutes() {
        // x*t with x = s, t = s^2  ->  s^3
        let s = Poly::var(1, 0);
        let p = &x() * &t();
        let out = p.compose(&[s.clone(), Poly::zero(1), &s * &s]);
        assert_eq!(out, s.pow(3));
    }

    #[test]
    fn parse_examples() {
        let v = coordinate_names(1);
        let p = Poly::parse("x + t^2/4", &v).unwrap();
        let expect = &Poly::var(3, 0) + &Poly::var(3, 2).pow(2).scale(&rat(1, 4));
        assert_eq!(p, expect);
        assert_eq!(Poly::parse("x1 + t*t/4", &v).unwrap(), expect);
        assert_eq!(Poly::parse("-(y - 1)*2", &v).unwrap(), &Poly::var(3, 1).scale(&rat(-2, 1)) + &Poly::constant(3, rat(2, 1)));
        assert_eq!(Poly::parse("3/2 y t", &v).unwrap(), (&Poly::var(3, 1) * &Poly::var(3, 2)).scale(&rat(3, 2)));
        assert_eq!(Poly::parse_constant("0.25").unwrap(), rat(1, 4));
        assert_eq!(Poly::parse_constant("-9/10").unwrap(), rat(-9, 10));
        assert!(Poly::parse("x/y", &v).is_err());
        assert!(Poly::parse("z", &v).is_err());
        assert!(Poly::parse("x^y", &v).is_err());
        assert!(Poly::parse("(x", &v).is_err());
        let v2 = coordinate_names(2);
        assert!(Poly::parse("x", &v2).is_err());
        let p = Poly::parse("x2*y1 - t", &v2).unwrap();
        assert_eq!(p.display_with(&v2), Poly::parse(&p.display_with(&v2), &v2).unwrap().display_with(&v2));
        assert_eq!(Poly::parse("s", &parameter_names(1)).unwrap(), Poly::var(1, 0));
    }
}
