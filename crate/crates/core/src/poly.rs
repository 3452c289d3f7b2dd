//! Formal model parameters and exact multivariate polynomial coefficients.
//!
//! Every parameter carries an α-dimension weight: a symbol of weight `w`
//! has units `[α]^w` with `[α] = [p]^-1`. A polynomial is homogeneous when
//! all of its monomials share the same total weight.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Formats a rational as `num/den`, always with an explicit denominator.
pub fn rational_canonical(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Formats a rational in the shortest readable form (`3`, `-2/15`).
pub fn rational_short(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Very large components: scale down by a common power of two.
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// A formal model parameter such as `beta` (weight 2) or `N` (weight 0).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamSymbol {
    pub name: String,
    pub weight: u32,
}

impl ParamSymbol {
    pub fn new(name: impl Into<String>, weight: u32) -> Self {
        ParamSymbol {
            name: name.into(),
            weight,
        }
    }
}

/// An ordered set of parameter declarations shared by every coefficient in
/// one computation context.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolTable {
    symbols: Vec<ParamSymbol>,
}

impl SymbolTable {
    pub fn new(symbols: Vec<ParamSymbol>) -> Result<Arc<Self>> {
        for (i, s) in symbols.iter().enumerate() {
            if !is_identifier(&s.name) || s.name == "p" {
                return Err(Error::InvalidSymbol(s.name.clone()));
            }
            if symbols[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::DuplicateSymbol(s.name.clone()));
            }
        }
        Ok(Arc::new(SymbolTable { symbols }))
    }

    pub fn empty() -> Arc<Self> {
        Arc::new(SymbolTable {
            symbols: Vec::new(),
        })
    }

    /// `alpha1 .. alphaN` with weights `1 .. N`.
    pub fn alphas(n: usize) -> Arc<Self> {
        let symbols = (1..=n)
            .map(|i| ParamSymbol::new(format!("alpha{i}"), i as u32))
            .collect();
        SymbolTable::new(symbols).expect("generated names are unique")
    }

    pub fn symbols(&self) -> &[ParamSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn var(&self, name: &str) -> Result<PolyCoeff> {
        self.index_of(name)
            .map(PolyCoeff::var)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    /// Returns a table extended by `extra`, keeping existing indices stable.
    pub fn with(&self, extra: &[ParamSymbol]) -> Result<Arc<Self>> {
        let mut symbols = self.symbols.clone();
        symbols.extend(extra.iter().cloned());
        SymbolTable::new(symbols)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn same_table(a: &Arc<SymbolTable>, b: &Arc<SymbolTable>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Exponent vector over the symbols of a table; trailing zeros are trimmed
/// so that equal monomials compare equal regardless of table size.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn from_exponents(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn var(index: usize) -> Self {
        let mut e = vec![0; index + 1];
        e[index] = 1;
        Monomial(e)
    }

    pub fn exponent(&self, index: usize) -> u32 {
        self.0.get(index).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self, table: &SymbolTable) -> u32 {
        self.0
            .iter()
            .zip(table.symbols())
            .map(|(e, s)| e * s.weight)
            .sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        let exps = (0..n)
            .map(|i| self.exponent(i) + other.exponent(i))
            .collect();
        Monomial(exps)
    }
}

impl Ord for Monomial {
    // Lexicographic on exponents, higher powers of earlier symbols first.
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.0.len().max(other.0.len());
        for i in 0..n {
            match other.exponent(i).cmp(&self.exponent(i)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total α-weight of a polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    /// The zero polynomial, compatible with every weight.
    Zero,
    Homogeneous(u32),
    /// Monomials of different weights; carries two of them as a witness.
    Mixed(u32, u32),
}

/// Sparse polynomial in the symbols of a [`SymbolTable`] with exact rational
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PolyCoeff {
    terms: BTreeMap<Monomial, Rational>,
}

pub(crate) static ZERO_POLY: PolyCoeff = PolyCoeff {
    terms: BTreeMap::new(),
};

impl PolyCoeff {
    pub fn zero() -> Self {
        PolyCoeff::default()
    }

    pub fn one() -> Self {
        PolyCoeff::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        PolyCoeff::term(c, Monomial::one())
    }

    pub fn var(index: usize) -> Self {
        PolyCoeff::term(Rational::one(), Monomial::var(index))
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        PolyCoeff { terms }
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = PolyCoeff::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .is_some_and(|c| c.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The rational value if the polynomial has no symbol dependence.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
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

    pub fn scale(&self, c: &Rational) -> PolyCoeff {
        if c.is_zero() {
            return PolyCoeff::zero();
        }
        PolyCoeff {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> PolyCoeff {
        let mut acc = PolyCoeff::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn weight(&self, table: &SymbolTable) -> Weight {
        let mut weights = self.terms.keys().map(|m| m.weight(table));
        let Some(first) = weights.next() else {
            return Weight::Zero;
        };
        for w in weights {
            if w != first {
                return Weight::Mixed(first, w);
            }
        }
        Weight::Homogeneous(first)
    }

    /// True when the polynomial is zero or homogeneous of weight `w`.
    pub fn has_weight(&self, table: &SymbolTable, w: i64) -> bool {
        match self.weight(table) {
            Weight::Zero => true,
            Weight::Homogeneous(x) => x as i64 == w,
            Weight::Mixed(..) => false,
        }
    }

    pub fn max_symbol_index(&self) -> Option<usize> {
        self.terms
            .keys()
            .filter_map(|m| m.exponents().len().checked_sub(1))
            .max()
    }

    /// Evaluates with `values[i]` bound to symbol `i`.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mono: f64 = m
                    .exponents()
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| values.get(i).copied().unwrap_or(f64::NAN).powi(e as i32))
                    .product();
                rational_to_f64(c) * mono
            })
            .sum()
    }

    /// Replaces symbol `index` by the polynomial `value`.
    pub fn substitute(&self, index: usize, value: &PolyCoeff) -> PolyCoeff {
        let mut out = PolyCoeff::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(index);
            if e == 0 {
                out.add_term(m.clone(), c.clone());
                continue;
            }
            let mut rest = m.0.clone();
            rest[index] = 0;
            let rest = PolyCoeff::term(c.clone(), Monomial::from_exponents(rest));
            out += &(&rest * &value.pow(e));
        }
        out
    }

    /// Canonical monomial-product text such as `beta^2*alphap^1`; empty for
    /// the unit monomial.
    pub fn monomial_canonical(m: &Monomial, table: &SymbolTable) -> String {
        m.exponents()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, e)| format!("{}^{}", symbol_name(table, i), e))
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Human-readable form, e.g. `-5*alpha1^3 + 5*alpha1*alpha2 - alpha3`.
    pub fn display<'a>(&'a self, table: &'a SymbolTable) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, table }
    }
}

fn symbol_name(table: &SymbolTable, i: usize) -> String {
    table
        .symbols()
        .get(i)
        .map(|s| s.name.clone())
        .unwrap_or_else(|| format!("x{i}"))
}

pub struct PolyDisplay<'a> {
    poly: &'a PolyCoeff,
    table: &'a SymbolTable,
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.poly.terms.iter().enumerate() {
            let mono = m
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        symbol_name(self.table, i)
                    } else {
                        format!("{}^{}", symbol_name(self.table, i), e)
                    }
                })
                .collect::<Vec<_>>()
                .join("*");
            let mag = c.abs();
            let sign = if c.is_negative() {
                if k == 0 {
                    "-"
                } else {
                    " - "
                }
            } else if k == 0 {
                ""
            } else {
                " + "
            };
            write!(f, "{sign}")?;
            if mono.is_empty() {
                write!(f, "{}", rational_short(&mag))?;
            } else if mag.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{}*{mono}", rational_short(&mag))?;
            }
        }
        Ok(())
    }
}

impl AddAssign<&PolyCoeff> for PolyCoeff {
    fn add_assign(&mut self, rhs: &PolyCoeff) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&PolyCoeff> for PolyCoeff {
    fn sub_assign(&mut self, rhs: &PolyCoeff) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add for &PolyCoeff {
    type Output = PolyCoeff;
    fn add(self, rhs: &PolyCoeff) -> PolyCoeff {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &PolyCoeff {
    type Output = PolyCoeff;
    fn sub(self, rhs: &PolyCoeff) -> PolyCoeff {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &PolyCoeff {
    type Output = PolyCoeff;
    fn neg(self) -> PolyCoeff {
        PolyCoeff {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl Mul for &PolyCoeff {
    type Output = PolyCoeff;
    fn mul(self, rhs: &PolyCoeff) -> PolyCoeff {
        if self.is_zero() || rhs.is_zero() {
            return PolyCoeff::zero();
        }
        let mut out = PolyCoeff::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl From<Rational> for PolyCoeff {
    fn from(c: Rational) -> Self {
        PolyCoeff::constant(c)
    }
}
