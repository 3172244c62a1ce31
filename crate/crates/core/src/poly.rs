//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are keyed by [`Exponent`] in a `BTreeMap`; zero coefficients are
//! never stored. Variable names live outside the polynomial in
//! [`VarNames`], which fixes the variable order for parsing and printing.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational coefficient type used everywhere.
pub type Rational = num_rational::BigRational;

/// Shorthand for `p/q` as a [`Rational`].
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Shorthand for an integer [`Rational`].
pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Nearest `f64` to a rational (saturating on overflow).
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Rounds `x` to the nearest multiple of `2^-bits`.
pub fn dyadic(x: f64, bits: u32) -> Rational {
    let scale = (1u64 << bits) as f64;
    let n = (x * scale).round();
    let num = BigInt::from(n as i128);
    Rational::new(num, BigInt::from(1u64 << bits))
}

/// A point of `Z_+^n`, the exponent of a monomial.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(coords: Vec<u32>) -> Self {
        Exponent(coords)
    }

    pub fn zero(nvars: usize) -> Self {
        Exponent(vec![0; nvars])
    }

    /// `k * e_i`.
    pub fn axis(nvars: usize, i: usize, k: u32) -> Self {
        let mut v = vec![0; nvars];
        v[i] = k;
        Exponent(v)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|c| c % 2 == 0)
    }

    pub fn dot(&self, weights: &[i64]) -> i64 {
        self.0.iter().zip(weights).map(|(&c, &w)| c as i64 * w).sum()
    }

    /// Componentwise `self <= other`, i.e. `x^self` divides `x^other`.
    pub fn divides(&self, other: &Exponent) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_add(&self, other: &Exponent) -> Result<Exponent> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::ExponentOverflow))
            .collect::<Result<Vec<_>>>()
            .map(Exponent)
    }

    /// `self - other` when `other` divides `self`.
    pub fn checked_sub(&self, other: &Exponent) -> Option<Exponent> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Exponent)
    }

    pub fn scale(&self, k: u32) -> Result<Exponent> {
        self.0
            .iter()
            .map(|a| a.checked_mul(k).ok_or(Error::ExponentOverflow))
            .collect::<Result<Vec<_>>>()
            .map(Exponent)
    }

    /// `self / 2` when every coordinate is even.
    pub fn half(&self) -> Option<Exponent> {
        self.is_even()
            .then(|| Exponent(self.0.iter().map(|c| c / 2).collect()))
    }

    /// Indices of the variables with nonzero exponent.
    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i)
    }

    pub fn to_i64(&self) -> Vec<i64> {
        self.0.iter().map(|&c| c as i64).collect()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for Exponent {
    fn from(v: Vec<u32>) -> Self {
        Exponent(v)
    }
}

/// Anti-graded lex: lower total degree is larger, ties broken with
/// `x_1 > x_2 > ...`. This is the default printing order.
pub fn anti_graded_lex(a: &Exponent, b: &Exponent) -> Ordering {
    b.degree().cmp(&a.degree()).then_with(|| a.0.cmp(&b.0))
}

/// Integer weight vector `A` together with the weighted minimum `v`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct WeightVector {
    pub a: Vec<i64>,
    pub v: i64,
}

impl WeightVector {
    /// Weight vector attached to `f`: `v = min A.alpha` over `supp f`.
    pub fn for_polynomial(a: Vec<i64>, f: &Polynomial) -> Result<Self> {
        if a.len() != f.nvars() {
            return Err(Error::DimensionMismatch {
                expected: f.nvars(),
                found: a.len(),
            });
        }
        if a.iter().any(|&x| x < 0) || a.iter().all(|&x| x == 0) {
            return Err(Error::Input("weights must be nonnegative and not all zero".into()));
        }
        let v = f.support().map(|e| e.dot(&a)).min().ok_or(Error::ZeroPolynomial)?;
        Ok(WeightVector { a, v })
    }

    pub fn weight(&self, e: &Exponent) -> i64 {
        e.dot(&self.a)
    }
}

/// Ordered variable names; index `i` names `x_{i+1}`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct VarNames(Vec<String>);

impl VarNames {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        VarNames(names.into_iter().map(Into::into).collect())
    }

    /// `x1, ..., xn`.
    pub fn indexed(n: usize) -> Self {
        VarNames((1..=n).map(|i| format!("x{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    /// Infers variables from polynomial text. Single letters from
    /// `x y z w u v s t` keep that conventional order, `x1..xn` style names
    /// become `x1..x_max`, anything else is ordered by first appearance.
    pub fn infer<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut seen: Vec<String> = Vec::new();
        for text in texts {
            let bytes = text.as_bytes();
            let mut i = 0;
            while i < bytes.len() {
                let c = bytes[i] as char;
                if c.is_ascii_alphabetic() || c == '_' {
                    let start = i;
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    let name = &text[start..i];
                    if !seen.iter().any(|s| s == name) {
                        seen.push(name.to_string());
                    }
                } else {
                    i += 1;
                }
            }
        }
        const CONVENTIONAL: &str = "xyzwuvst";
        if !seen.is_empty()
            && seen
                .iter()
                .all(|s| s.len() == 1 && CONVENTIONAL.contains(s.as_str()))
        {
            seen.sort_by_key(|s| CONVENTIONAL.find(s.as_str()));
            return VarNames(seen);
        }
        let indexed: Option<Vec<usize>> = seen
            .iter()
            .map(|s| s.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()))
            .collect();
        if let Some(idx) = indexed {
            if let Some(&max) = idx.iter().max() {
                if idx.iter().all(|&i| i >= 1) {
                    return VarNames::indexed(max);
                }
            }
        }
        VarNames(seen)
    }
}

/// Multivariate polynomial over the rationals.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponent, Rational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::monomial(Exponent::zero(nvars), c)
    }

    pub fn monomial(e: Exponent, c: Rational) -> Self {
        let nvars = e.nvars();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        Polynomial { nvars, terms }
    }

    /// `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(Exponent::axis(nvars, i, 1), Rational::one())
    }

    /// Builds a polynomial, merging repeated exponents and dropping zeros.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, Rational)>) -> Result<Self> {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            if e.nvars() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    found: e.nvars(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Convenience constructor from integer exponent rows and coefficients.
    pub fn from_ints(nvars: usize, terms: &[(&[u32], i64)]) -> Self {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length");
            p.add_term(Exponent::new(e.to_vec()), int(*c));
        }
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

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Rational)> {
        self.terms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Exponent> {
        self.terms.keys()
    }

    pub fn coeff(&self, e: &Exponent) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn contains(&self, e: &Exponent) -> bool {
        self.terms.contains_key(e)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Exponent::zero(self.nvars))
    }

    pub fn add_term(&mut self, e: Exponent, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Largest total degree, `None` for zero.
    pub fn degree(&self) -> Option<u64> {
        self.terms.keys().map(Exponent::degree).max()
    }

    /// Smallest total degree, `None` for zero.
    pub fn min_degree(&self) -> Option<u64> {
        self.terms.keys().map(Exponent::degree).min()
    }

    /// Terms whose exponent satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Exponent, &Rational) -> bool) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, c)| keep(e, c))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous component of degree `k`.
    pub fn homogeneous_part(&self, k: u64) -> Polynomial {
        self.filter(|e, _| e.degree() == k)
    }

    /// Terms of degree at most `k`.
    pub fn truncate(&self, k: u64) -> Polynomial {
        self.filter(|e, _| e.degree() <= k)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.degree() == self.min_degree()
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    /// `c * x^e * self`.
    pub fn mul_term(&self, e: &Exponent, c: &Rational) -> Result<Polynomial> {
        let mut out = Polynomial::zero(self.nvars);
        if c.is_zero() {
            return Ok(out);
        }
        for (k, v) in &self.terms {
            out.terms.insert(k.checked_add(e)?, v * c);
        }
        Ok(out)
    }

    fn check_dims(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        let mut out = Polynomial::zero(self.nvars);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                out.add_term(a.checked_add(b)?, x * y);
            }
        }
        Ok(out)
    }

    pub fn square(&self) -> Result<Polynomial> {
        self.try_mul(self)
    }

    pub fn pow(&self, k: u32) -> Result<Polynomial> {
        let mut out = Polynomial::constant(self.nvars, Rational::one());
        for _ in 0..k {
            out = out.try_mul(self)?;
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        if point.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: point.len(),
            });
        }
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e.coords()) {
                if k > 0 {
                    t *= num_traits::pow(x.clone(), k as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                to_f64(c)
                    * e.coords()
                        .iter()
                        .zip(point)
                        .map(|(&k, x)| x.powi(k as i32))
                        .product::<f64>()
            })
            .sum()
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            let k = e.coords()[i];
            if k == 0 {
                continue;
            }
            let mut v = e.coords().to_vec();
            v[i] -= 1;
            out.add_term(Exponent(v), c * int(k as i64));
        }
        out
    }

    pub fn gradient_at(&self, point: &[Rational]) -> Result<Vec<Rational>> {
        (0..self.nvars).map(|i| self.derivative(i).eval(point)).collect()
    }

    pub fn hessian_at(&self, point: &[Rational]) -> Result<Vec<Vec<Rational>>> {
        (0..self.nvars)
            .map(|i| {
                let di = self.derivative(i);
                (0..self.nvars).map(|j| di.derivative(j).eval(point)).collect()
            })
            .collect()
    }

    /// `f(x + z) - f(z)`.
    pub fn shift_to_point(&self, z: &[Rational]) -> Result<Polynomial> {
        if z.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: z.len(),
            });
        }
        let n = self.nvars;
        // (x_i + z_i)^k expanded once per (i, k)
        let mut cache: BTreeMap<(usize, u32), Polynomial> = BTreeMap::new();
        let mut out = Polynomial::zero(n);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(n, c.clone());
            for (i, &k) in e.coords().iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let factor = cache.entry((i, k)).or_insert_with(|| {
                    let lin = Polynomial::var(n, i)
                        .try_add(&Polynomial::constant(n, z[i].clone()))
                        .expect("same dimension");
                    lin.pow(k).expect("small exponent")
                });
                term = term.try_mul(factor)?;
            }
            out = out.try_add(&term)?;
        }
        let f0 = self.eval(z)?;
        out.add_term(Exponent::zero(n), -f0);
        Ok(out)
    }

    /// Grades `f` by `A.alpha`, returning components by increasing weight.
    pub fn weighted_components(&self, a: &[i64]) -> Result<Vec<(i64, Polynomial)>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if a.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: a.len(),
            });
        }
        let mut parts: BTreeMap<i64, Polynomial> = BTreeMap::new();
        for (e, c) in &self.terms {
            parts
                .entry(e.dot(a))
                .or_insert_with(|| Polynomial::zero(self.nvars))
                .add_term(e.clone(), c.clone());
        }
        Ok(parts.into_iter().collect())
    }

    /// Restricts to the listed variables (others must not occur).
    pub fn restrict_variables(&self, vars: &[usize]) -> Result<Polynomial> {
        let mut out = Polynomial::zero(vars.len());
        for (e, c) in &self.terms {
            if e
                .coords()
                .iter()
                .enumerate()
                .any(|(i, &k)| k > 0 && !vars.contains(&i))
            {
                return Err(Error::Input(format!("monomial {e} uses a dropped variable")));
            }
            out.add_term(
                Exponent(vars.iter().map(|&i| e.coords()[i]).collect()),
                c.clone(),
            );
        }
        Ok(out)
    }

    /// Variables that occur in some monomial.
    pub fn appearing_variables(&self) -> Vec<usize> {
        (0..self.nvars)
            .filter(|&i| self.terms.keys().any(|e| e.coords()[i] > 0))
            .collect()
    }

    /// Terms in anti-graded lex order (lowest degree first).
    pub fn sorted_terms(&self) -> Vec<(&Exponent, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| anti_graded_lex(b.0, a.0));
        v
    }

    /// L1 norm of the coefficient vector as `f64`.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| to_f64(c).abs()).sum()
    }

    pub fn display_with<'a>(&'a self, names: &'a VarNames) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }

    /// Prints with the given names, falling back to `x1..xn` on mismatch.
    pub fn to_string_with(&self, names: &VarNames) -> String {
        if names.len() == self.nvars {
            self.display_with(names).to_string()
        } else {
            self.display_with(&VarNames::indexed(self.nvars)).to_string()
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = VarNames::indexed(self.nvars);
        write!(f, "{}", self.display_with(&names))
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    names: &'a VarNames,
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.poly.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (idx, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mono: Vec<String> = e
                .coords()
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| {
                    let name = &self.names.names()[i];
                    if k == 1 {
                        name.clone()
                    } else {
                        format!("{name}^{k}")
                    }
                })
                .collect();
            if mono.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{abs}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                self.$inner(rhs).expect("polynomials over the same variables")
            }
        }
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

/// One summand of [`expand_combination`]: `c * p^2` or `c * p`.
#[derive(Clone, Debug)]
pub struct CombinationPart {
    pub coeff: Rational,
    pub poly: Polynomial,
    pub squared: bool,
}

/// Expands `sum c * p^2` (squared parts) plus `sum c * p` (plain parts).
pub fn expand_combination(nvars: usize, parts: &[CombinationPart]) -> Result<Polynomial> {
    let mut out = Polynomial::zero(nvars);
    for part in parts {
        let body = if part.squared {
            part.poly.square()?
        } else {
            part.poly.clone()
        };
        out = out.try_add(&body.scale(&part.coeff))?;
    }
    Ok(out)
}

// ----------------------------------------------------------------------
// parsing

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a VarNames,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(s.parse::<BigInt>().expect("digits parse"))
    }

    fn rational(&mut self) -> Result<Rational> {
        let p = self.integer()?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let q = self.integer()?;
            if q.is_zero() {
                return Err(self.err("zero denominator"));
            }
            return Ok(Rational::new(p, q));
        }
        Ok(Rational::from_integer(p))
    }

    fn factor(&mut self, exps: &mut [u32]) -> Result<()> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && ((self.src[self.pos] as char).is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected variable"));
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let idx = self.vars.index_of(name).ok_or_else(|| Error::UnknownVariable {
            name: name.to_string(),
            pos: start,
        })?;
        let mut k: u32 = 1;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            if self.peek() == Some(b'-') {
                return Err(Error::NegativeExponent { pos: self.pos });
            }
            let here = self.pos;
            let big = self.integer()?;
            k = big.to_u32().ok_or(Error::Syntax {
                pos: here,
                msg: "exponent too large".into(),
            })?;
        }
        exps[idx] = exps[idx].checked_add(k).ok_or(Error::ExponentOverflow)?;
        Ok(())
    }

    fn term(&mut self) -> Result<(Exponent, Rational)> {
        let mut exps = vec![0u32; self.vars.len()];
        let mut coeff = Rational::one();
        let mut have_factor = false;
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                coeff = self.rational()?;
                match self.peek() {
                    Some(b'*') => {
                        self.pos += 1;
                        self.factor(&mut exps)?;
                        have_factor = true;
                    }
                    Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                        self.factor(&mut exps)?;
                        have_factor = true;
                    }
                    _ => {}
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                self.factor(&mut exps)?;
                have_factor = true;
            }
            _ => return Err(self.err("expected term")),
        }
        if have_factor {
            while self.peek() == Some(b'*') {
                self.pos += 1;
                self.factor(&mut exps)?;
            }
        }
        Ok((Exponent(exps), coeff))
    }

    fn polynomial(&mut self) -> Result<Polynomial> {
        let mut p = Polynomial::zero(self.vars.len());
        let mut sign = Rational::one();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            sign = -sign;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        loop {
            let (e, c) = self.term()?;
            p.add_term(e, c * &sign);
            match self.peek() {
                None => break,
                Some(b'+') => {
                    self.pos += 1;
                    sign = Rational::one();
                }
                Some(b'-') => {
                    self.pos += 1;
                    sign = -Rational::one();
                }
                Some(_) => return Err(self.err("expected `+`, `-` or end of input")),
            }
        }
        Ok(p)
    }
}

/// Parses polynomial text over the given variables.
///
/// ```
/// use newton_sos::poly::{parse_polynomial, VarNames};
/// let vars = VarNames::new(["x", "y"]);
/// let f = parse_polynomial("x^16 + y^10 - x^13*y^2", &vars).unwrap();
/// assert_eq!(f.len(), 3);
/// assert_eq!(f.display_with(&vars).to_string(), "y^10 - x^13*y^2 + x^16");
/// ```
pub fn parse_polynomial(text: &str, vars: &VarNames) -> Result<Polynomial> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars,
    };
    p.polynomial()
}

/// Parses a comma- or whitespace-separated rational vector such as `-1, -1, 0, 1/2`.
pub fn parse_rational_vector(text: &str) -> Result<Vec<Rational>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|tok| {
            let (neg, body) = match tok.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, tok.strip_prefix('+').unwrap_or(tok)),
            };
            let vars = VarNames::new(Vec::<String>::new());
            let mut p = Parser {
                src: body.as_bytes(),
                pos: 0,
                vars: &vars,
            };
            let r = p.rational()?;
            if p.peek().is_some() {
                return Err(Error::Input(format!("bad rational `{tok}`")));
            }
            Ok(if neg { -r } else { r })
        })
        .collect()
}

/// Parses an exponent like `(13,2)` or `13 2`.
pub fn parse_exponent(text: &str) -> Result<Exponent> {
    let body = text.trim().trim_start_matches('(').trim_end_matches(')');
    body.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .map_err(|_| Error::Input(format!("bad exponent coordinate `{s}`")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Exponent::new)
}


/// Serializers writing rationals as `"p/q"` strings.
pub mod rational_str {
    use super::Rational;
    use serde::ser::{SerializeSeq, Serializer};

    pub fn one<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn option<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.collect_str(v),
            None => s.serialize_none(),
        }
    }

    pub fn vec<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| x.to_string()))
    }

    pub fn matrix<S: Serializer>(m: &Option<Vec<Vec<Rational>>>, s: S) -> Result<S::Ok, S::Error> {
        let Some(rows) = m else { return s.serialize_none() };
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for r in rows {
            seq.serialize_element(&r.iter().map(|x| x.to_string()).collect::<Vec<_>>())?;
        }
        seq.end()
    }
}
