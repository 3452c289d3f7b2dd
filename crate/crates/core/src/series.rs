//! Truncated power series in the momentum magnitude `p`.
//!
//! A [`MomentumSeries`] stores the coefficients of `p^k` for
//! `min_power <= k <= order`; everything above `order` is unknown. The only
//! negative power allowed is a single `p^-1` slot. Coefficients are
//! polynomials in the parameters of a shared [`SymbolTable`].
//!
//! Binary operations truncate to the highest power both operands determine.
//! For a product that is `min(order_a + val_b, order_b + val_a)` where `val`
//! is the lowest nonzero power.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{
    int, rational_canonical, same_table, Monomial, ParamSymbol, PolyCoeff, Rational, SymbolTable, Weight, ZERO_POLY,
};

/// Lowest power a series may carry.
pub const MIN_POWER: i32 = -1;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentumSeries {
    table: Arc<SymbolTable>,
    /// Either 0 or -1.
    min_power: i32,
    /// Highest determined power, inclusive.
    order: i32,
    /// `coeffs[i]` multiplies `p^(min_power + i)`.
    coeffs: Vec<PolyCoeff>,
}

/// Grading status of a series: every coefficient of `p^k` should carry
/// α-weight `k + offset` for one common offset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Grading {
    /// All coefficients vanish; compatible with any offset.
    Trivial,
    Offset(i64),
    Broken { power: i32, reason: String },
}

impl MomentumSeries {
    /// Builds a series from coefficients starting at `p^min_power`, padding
    /// with zeros or dropping terms so that exactly `min_power..=order` is
    /// stored.
    pub fn from_coeffs(
        table: Arc<SymbolTable>,
        min_power: i32,
        coeffs: Vec<PolyCoeff>,
        order: i32,
    ) -> Result<Self> {
        let mut s = MomentumSeries {
            table,
            min_power,
            order,
            coeffs,
        };
        s.normalize()?;
        Ok(s)
    }

    pub fn zero(table: Arc<SymbolTable>, order: i32) -> Self {
        MomentumSeries::from_coeffs(table, 0, Vec::new(), order).expect("zero is well formed")
    }

    pub fn constant(table: Arc<SymbolTable>, c: PolyCoeff, order: i32) -> Self {
        MomentumSeries::from_coeffs(table, 0, vec![c], order).expect("constant is well formed")
    }

    pub fn one(table: Arc<SymbolTable>, order: i32) -> Self {
        MomentumSeries::constant(table, PolyCoeff::one(), order)
    }

    /// `c * p^power`, known through `order`.
    pub fn monomial(
        table: Arc<SymbolTable>,
        c: PolyCoeff,
        power: i32,
        order: i32,
    ) -> Result<Self> {
        if power < MIN_POWER {
            return Err(Error::PowerOutOfRange {
                op: "monomial",
                power,
                allowed: MIN_POWER,
            });
        }
        let min_power = power.min(0);
        let mut coeffs = vec![PolyCoeff::zero(); (power - min_power) as usize];
        coeffs.push(c);
        MomentumSeries::from_coeffs(table, min_power, coeffs, order)
    }

    /// Builds a series from `(power, coefficient)` pairs.
    pub fn from_terms(
        table: Arc<SymbolTable>,
        terms: impl IntoIterator<Item = (i32, PolyCoeff)>,
        order: i32,
    ) -> Result<Self> {
        let terms: Vec<(i32, PolyCoeff)> = terms.into_iter().collect();
        let min_power = terms.iter().map(|(k, _)| *k).min().unwrap_or(0).min(0);
        if min_power < MIN_POWER {
            return Err(Error::PowerOutOfRange {
                op: "from_terms",
                power: min_power,
                allowed: MIN_POWER,
            });
        }
        let len = terms
            .iter()
            .map(|(k, _)| (k - min_power + 1) as usize)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![PolyCoeff::zero(); len];
        for (k, c) in terms {
            coeffs[(k - min_power) as usize] += &c;
        }
        MomentumSeries::from_coeffs(table, min_power, coeffs, order)
    }

    fn normalize(&mut self) -> Result<()> {
        if self.min_power > 0 {
            let pad = self.min_power as usize;
            let mut c = vec![PolyCoeff::zero(); pad];
            c.append(&mut self.coeffs);
            self.coeffs = c;
            self.min_power = 0;
        }
        while self.min_power < 0 {
            match self.coeffs.first() {
                Some(c) if !c.is_zero() => break,
                Some(_) => {
                    self.coeffs.remove(0);
                }
                None => {}
            }
            self.min_power += 1;
        }
        if self.min_power < MIN_POWER {
            return Err(Error::PowerOutOfRange {
                op: "series",
                power: self.min_power,
                allowed: MIN_POWER,
            });
        }
        let len = (self.order - self.min_power + 1).max(0) as usize;
        self.coeffs.resize(len, PolyCoeff::zero());
        Ok(())
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn min_power(&self) -> i32 {
        self.min_power
    }

    /// Coefficient of `p^power`; zero outside the stored range.
    pub fn coeff(&self, power: i32) -> &PolyCoeff {
        if power < self.min_power || power > self.order {
            return &ZERO_POLY;
        }
        &self.coeffs[(power - self.min_power) as usize]
    }

    /// `(power, coefficient)` for every stored power, ascending.
    pub fn iter(&self) -> impl Iterator<Item = (i32, &PolyCoeff)> {
        let m = self.min_power;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (m + i as i32, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(PolyCoeff::is_zero)
    }

    /// Lowest power with a nonzero coefficient, or `order + 1` if none.
    pub fn valuation(&self) -> i32 {
        self.iter()
            .find(|(_, c)| !c.is_zero())
            .map(|(k, _)| k)
            .unwrap_or(self.order + 1)
    }

    pub fn truncate(&self, order: i32) -> MomentumSeries {
        let mut s = self.clone();
        if order < s.order {
            s.order = order;
            s.normalize().expect("truncation keeps the power range");
        }
        s
    }

    fn check_table(&self, other: &MomentumSeries) -> Result<()> {
        if same_table(&self.table, &other.table) {
            Ok(())
        } else {
            Err(Error::SymbolTableMismatch)
        }
    }

    fn build(&self, min_power: i32, coeffs: Vec<PolyCoeff>, order: i32) -> Result<Self> {
        MomentumSeries::from_coeffs(self.table.clone(), min_power, coeffs, order)
    }

    pub fn add(&self, other: &MomentumSeries) -> Result<MomentumSeries> {
        self.check_table(other)?;
        let min_power = self.min_power.min(other.min_power);
        let order = self.order.min(other.order);
        let coeffs = (min_power..=order)
            .map(|k| self.coeff(k) + other.coeff(k))
            .collect();
        self.build(min_power, coeffs, order)
    }

    pub fn sub(&self, other: &MomentumSeries) -> Result<MomentumSeries> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> MomentumSeries {
        MomentumSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            ..self.clone()
        }
    }

    /// Multiplies every coefficient by a polynomial.
    pub fn scale(&self, c: &PolyCoeff) -> MomentumSeries {
        let coeffs = self.coeffs.iter().map(|x| x * c).collect();
        self.build(self.min_power, coeffs, self.order)
            .expect("scaling keeps the power range")
    }

    /// Multiplies by `p^k` exactly.
    pub fn shift(&self, k: i32) -> Result<MomentumSeries> {
        self.build(self.min_power + k, self.coeffs.clone(), self.order + k)
    }

    /// Cauchy product.
    pub fn mul(&self, other: &MomentumSeries) -> Result<MomentumSeries> {
        self.check_table(other)?;
        let (va, vb) = (self.valuation(), other.valuation());
        let order = (self.order + vb).min(other.order + va);
        let min_power = self.min_power + other.min_power;
        if min_power < MIN_POWER && va + vb < MIN_POWER {
            return Err(Error::PowerOutOfRange {
                op: "mul",
                power: va + vb,
                allowed: MIN_POWER,
            });
        }
        let len = (order - min_power + 1).max(0) as usize;
        let mut coeffs = vec![PolyCoeff::zero(); len];
        for (i, a) in self.iter().filter(|(_, c)| !c.is_zero()) {
            for (j, b) in other.iter().filter(|(_, c)| !c.is_zero()) {
                let k = i + j;
                if k > order {
                    break;
                }
                coeffs[(k - min_power) as usize] += &(a * b);
            }
        }
        self.build(min_power, coeffs, order)
    }

    /// Integer power by repeated squaring; works for any series.
    pub fn powi(&self, n: u32) -> Result<MomentumSeries> {
        let mut result = MomentumSeries::one(self.table.clone(), self.order);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    fn require_unit_constant(&self, op: &'static str) -> Result<()> {
        if self.min_power < 0 && !self.coeff(-1).is_zero() {
            return Err(Error::PowerOutOfRange {
                op,
                power: -1,
                allowed: 0,
            });
        }
        let c0 = self.coeff(0);
        if !c0.is_one() {
            return Err(Error::NonUnitConstant {
                op,
                found: c0.display(&self.table).to_string(),
            });
        }
        Ok(())
    }

    /// `a^n` via the power recurrence
    /// `c_m = (1/m) Σ_{s=1}^{m} (s n − m + s) A_s c_{m−s}`, `c_0 = 1`.
    /// Requires a unit constant term.
    pub fn pow(&self, n: u32) -> Result<MomentumSeries> {
        self.pow_general(&PolyCoeff::constant(int(n as i64)))
    }

    /// Same recurrence with an arbitrary exponent, which may be a rational
    /// or a polynomial in weight-0 parameters.
    pub fn pow_general(&self, exponent: &PolyCoeff) -> Result<MomentumSeries> {
        self.require_unit_constant("pow")?;
        let order = self.order;
        if order < 0 {
            return Ok(self.build(0, Vec::new(), order)?);
        }
        let n = order as usize;
        let mut c: Vec<PolyCoeff> = Vec::with_capacity(n + 1);
        c.push(PolyCoeff::one());
        for m in 1..=n {
            let mut acc = PolyCoeff::zero();
            for s in 1..=m {
                let a_s = self.coeff(s as i32);
                if a_s.is_zero() || c[m - s].is_zero() {
                    continue;
                }
                // (s n − m + s)
                let mut factor = exponent.scale(&int(s as i64));
                factor += &PolyCoeff::constant(int(s as i64 - m as i64));
                acc += &(&(&factor * a_s) * &c[m - s]);
            }
            c.push(acc.scale(&Rational::new(BigInt::one(), BigInt::from(m))));
        }
        self.build(0, c, order)
    }

    /// Multiplicative inverse; the constant term must be a nonzero rational.
    pub fn reciprocal(&self) -> Result<MomentumSeries> {
        if self.min_power < 0 && !self.coeff(-1).is_zero() {
            return Err(Error::PowerOutOfRange {
                op: "reciprocal",
                power: -1,
                allowed: 0,
            });
        }
        let c0 = match self.coeff(0).as_constant() {
            Some(c) if !c.is_zero() => c,
            _ => {
                return Err(Error::NonInvertibleConstant {
                    op: "reciprocal",
                    found: self.coeff(0).display(&self.table).to_string(),
                })
            }
        };
        let inv0 = c0.recip();
        let order = self.order;
        let mut b: Vec<PolyCoeff> = Vec::new();
        for m in 0..=order.max(-1) {
            if m == 0 {
                b.push(PolyCoeff::constant(inv0.clone()));
                continue;
            }
            let mut acc = PolyCoeff::zero();
            for k in 1..=m {
                let a = self.coeff(k);
                if !a.is_zero() {
                    acc += &(a * &b[(m - k) as usize]);
                }
            }
            b.push(acc.scale(&-inv0.clone()));
        }
        self.build(0, b, order)
    }

    /// Term-by-term integral with zero constant of integration.
    pub fn antiderivative(&self) -> Result<MomentumSeries> {
        if !self.coeff(-1).is_zero() {
            return Err(Error::PowerOutOfRange {
                op: "antiderivative",
                power: -1,
                allowed: 0,
            });
        }
        let mut coeffs = vec![PolyCoeff::zero()];
        for (k, c) in self.iter().filter(|(k, _)| *k >= 0) {
            coeffs.push(c.scale(&Rational::new(BigInt::one(), BigInt::from(k + 1))));
        }
        self.build(0, coeffs, self.order + 1)
    }

    pub fn derivative(&self) -> Result<MomentumSeries> {
        if !self.coeff(-1).is_zero() {
            return Err(Error::PowerOutOfRange {
                op: "derivative",
                power: -1,
                allowed: 0,
            });
        }
        let coeffs = (1..=self.order)
            .map(|k| self.coeff(k).scale(&int(k as i64)))
            .collect();
        self.build(0, coeffs, self.order - 1)
    }

    /// Series reversion for a multiplier series.
    ///
    /// `self` is `h` with `p = h(ρ) ρ`. Returns `A` with `ρ = p Σ A_r p^r`,
    /// computed as `A_r = Σ_s C(r+s+1, s) (−1)^s/(r+s+1) q_{r,s}` where
    /// `q_{r,s} = Σ_i α_i q_{r−i,s−1}`, `q_{0,0} = 1`, `q_{r,0} = 0`.
    pub fn revert(&self) -> Result<MomentumSeries> {
        self.require_unit_constant("revert")?;
        let order = self.order;
        if order < 0 {
            return self.build(0, Vec::new(), order);
        }
        let n = order as usize;
        // q[r][s] = [ρ^r] (h − 1)^s
        let mut q = vec![vec![PolyCoeff::zero(); n + 1]; n + 1];
        q[0][0] = PolyCoeff::one();
        for s in 1..=n {
            for r in s..=n {
                let mut acc = PolyCoeff::zero();
                for i in 1..=(r + 1 - s) {
                    let a = self.coeff(i as i32);
                    if a.is_zero() || q[r - i][s - 1].is_zero() {
                        continue;
                    }
                    acc += &(a * &q[r - i][s - 1]);
                }
                q[r][s] = acc;
            }
        }
        let mut coeffs = Vec::with_capacity(n + 1);
        for r in 0..=n {
            let mut acc = PolyCoeff::zero();
            for (s, q_rs) in q[r].iter().enumerate().take(r + 1) {
                if q_rs.is_zero() {
                    continue;
                }
                let top = (r + s + 1) as u64;
                let mut w = Rational::new(binomial(top, s as u64), BigInt::from(top));
                if s % 2 == 1 {
                    w = -w;
                }
                acc += &q_rs.scale(&w);
            }
            coeffs.push(acc);
        }
        self.build(0, coeffs, order)
    }

    /// Substitutes `v → inner(v)` into `self`. `inner` must have no constant
    /// term.
    pub fn substitute(&self, inner: &MomentumSeries) -> Result<MomentumSeries> {
        self.check_table(inner)?;
        if !self.coeff(-1).is_zero() {
            return Err(Error::PowerOutOfRange {
                op: "substitute",
                power: -1,
                allowed: 0,
            });
        }
        let v = inner.valuation();
        if v < 1 {
            return Err(Error::NonInvertibleConstant {
                op: "substitute",
                found: "inner series has a constant or negative-power term".into(),
            });
        }
        let top = self.order.max(0);
        let mut acc = MomentumSeries::constant(self.table.clone(), self.coeff(top).clone(), inner.order);
        for k in (0..top).rev() {
            acc = acc.mul(inner)?;
            let c = MomentumSeries::constant(self.table.clone(), self.coeff(k).clone(), acc.order);
            acc = acc.add(&c)?;
        }
        // Unknown outer terms start at v^(order+1) → p^(v (order+1)).
        let cap = if self.order < 0 {
            -1
        } else {
            v.saturating_mul(self.order + 1) - 1
        };
        Ok(acc.truncate(acc.order.min(cap)))
    }

    /// `outer(p · inner_map(p))` for a multiplier series `inner_map` with
    /// unit constant term.
    pub fn compose(&self, inner_map: &MomentumSeries) -> Result<MomentumSeries> {
        inner_map.require_unit_constant("compose")?;
        self.substitute(&inner_map.shift(1)?)
    }

    /// Replaces a parameter by a polynomial in every coefficient.
    pub fn substitute_symbol(&self, index: usize, value: &PolyCoeff) -> MomentumSeries {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.substitute(index, value))
            .collect();
        self.build(self.min_power, coeffs, self.order)
            .expect("substitution keeps the power range")
    }

    pub fn grading(&self) -> Grading {
        let mut offset: Option<i64> = None;
        for (k, c) in self.iter() {
            match c.weight(&self.table) {
                Weight::Zero => {}
                Weight::Mixed(a, b) => {
                    return Grading::Broken {
                        power: k,
                        reason: format!("mixed weights {a} and {b}"),
                    }
                }
                Weight::Homogeneous(w) => {
                    let off = w as i64 - k as i64;
                    match offset {
                        None => offset = Some(off),
                        Some(o) if o == off => {}
                        Some(o) => {
                            return Grading::Broken {
                                power: k,
                                reason: format!("weight {w}, expected {}", k as i64 + o),
                            }
                        }
                    }
                }
            }
        }
        offset.map_or(Grading::Trivial, Grading::Offset)
    }

    /// Checks that the coefficient of `p^k` has α-weight `k + offset` for
    /// every stored power.
    pub fn check_graded(&self, offset: i64, what: &str) -> Result<()> {
        for (k, c) in self.iter() {
            let expected = k as i64 + offset;
            if !c.has_weight(&self.table, expected) {
                let found = match c.weight(&self.table) {
                    Weight::Homogeneous(w) => w.to_string(),
                    Weight::Mixed(a, b) => format!("mixed ({a}, {b})"),
                    Weight::Zero => "0".into(),
                };
                return Err(Error::Grading {
                    what: what.to_string(),
                    power: k,
                    expected,
                    found,
                });
            }
        }
        Ok(())
    }

    /// Binds every parameter to a float; `values[i]` is symbol `i`.
    pub fn to_numeric(&self, values: &[f64]) -> NumericSeries {
        NumericSeries {
            min_power: self.min_power,
            coeffs: self.coeffs.iter().map(|c| c.eval(values)).collect(),
        }
    }

    /// Canonical text form:
    /// `1/1*p^0 + -1/3*beta^1*p^2 + O(p^5)`.
    pub fn to_canonical_string(&self) -> String {
        let mut parts = Vec::new();
        for (k, c) in self.iter() {
            for (m, r) in c.terms() {
                let mono = PolyCoeff::monomial_canonical(m, &self.table);
                if mono.is_empty() {
                    parts.push(format!("{}*p^{k}", rational_canonical(r)));
                } else {
                    parts.push(format!("{}*{mono}*p^{k}", rational_canonical(r)));
                }
            }
        }
        if parts.is_empty() {
            parts.push("0".to_string());
        }
        parts.push(format!("O(p^{})", self.order + 1));
        parts.join(" + ")
    }

    /// Readable form such as `1 + 1/3*beta*p^2 - 4/45*beta^2*p^4 + O(p^5)`.
    pub fn to_pretty_string(&self) -> String {
        let mut out = String::new();
        for (k, c) in self.iter() {
            if c.is_zero() {
                continue;
            }
            let body = c.display(&self.table).to_string();
            let negated_body = (-c).display(&self.table).to_string();
            let single = c.num_terms() == 1;
            let (sign, body) = if single && body.starts_with('-') {
                ("-", negated_body)
            } else {
                ("+", body)
            };
            let factor = if single {
                body
            } else {
                format!("({body})")
            };
            let term = match k {
                0 => factor,
                _ => {
                    let pw = if k == 1 { "p".to_string() } else { format!("p^{k}") };
                    if factor == "1" {
                        pw
                    } else {
                        format!("{factor}*{pw}")
                    }
                }
            };
            if out.is_empty() {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(if sign == "-" { " - " } else { " + " });
            }
            out.push_str(&term);
        }
        if out.is_empty() {
            out.push('0');
        }
        out.push_str(&format!(" + O(p^{})", self.order + 1));
        out
    }
}

impl fmt::Display for MomentumSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

/// Machine-readable form of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredSeries {
    pub order: i32,
    pub min_power: i32,
    pub symbols: Vec<ParamSymbol>,
    pub coeffs: Vec<StructuredCoeff>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredCoeff {
    pub power: i32,
    pub terms: Vec<StructuredTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredTerm {
    /// Rational as `num/den`.
    pub coeff: String,
    /// Symbol name to exponent; empty for the constant monomial.
    pub monomial: BTreeMap<String, u32>,
}

impl MomentumSeries {
    /// Structured form; only nonzero coefficients are listed.
    pub fn to_structured(&self) -> StructuredSeries {
        let coeffs = self
            .iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(power, c)| StructuredCoeff {
                power,
                terms: c
                    .terms()
                    .map(|(m, r)| StructuredTerm {
                        coeff: rational_canonical(r),
                        monomial: m
                            .exponents()
                            .iter()
                            .enumerate()
                            .filter(|(_, &e)| e > 0)
                            .map(|(i, &e)| (self.table.symbols()[i].name.clone(), e))
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        StructuredSeries {
            order: self.order,
            min_power: self.min_power,
            symbols: self.table.symbols().to_vec(),
            coeffs,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_structured()).expect("series serializes")
    }

    pub fn from_structured(s: &StructuredSeries) -> Result<MomentumSeries> {
        let table = SymbolTable::new(s.symbols.clone())?;
        let mut terms = Vec::new();
        for c in &s.coeffs {
            let mut poly = PolyCoeff::zero();
            for t in &c.terms {
                let r: Rational = t.coeff.parse().map_err(|_| Error::Parse {
                    pos: 0,
                    expected: "rational num/den".into(),
                    found: t.coeff.clone(),
                })?;
                let mut exps = vec![0u32; table.len()];
                for (name, e) in &t.monomial {
                    let i = table
                        .index_of(name)
                        .ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
                    exps[i] = *e;
                }
                poly.add_term(Monomial::from_exponents(exps), r);
            }
            terms.push((c.power, poly));
        }
        MomentumSeries::from_terms(table, terms, s.order)
    }
}

/// A series with every parameter bound to a float.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericSeries {
    pub min_power: i32,
    pub coeffs: Vec<f64>,
}

impl NumericSeries {
    pub fn coeff(&self, power: i32) -> f64 {
        let i = power - self.min_power;
        if i < 0 {
            return 0.0;
        }
        self.coeffs.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * p + c;
        }
        acc * p.powi(self.min_power)
    }

    /// Highest power with a nonzero coefficient.
    pub fn degree(&self) -> Option<i32> {
        self.coeffs
            .iter()
            .rposition(|c| *c != 0.0)
            .map(|i| i as i32 + self.min_power)
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn table() -> Arc<SymbolTable> {
        SymbolTable::new(vec![ParamSymbol::new("beta", 2), ParamSymbol::new("alpha", 1)]).unwrap()
    }

    fn numeric(coeffs: &[i64], order: i32) -> MomentumSeries {
        let t = SymbolTable::empty();
        MomentumSeries::from_coeffs(
            t,
            0,
            coeffs.iter().map(|&c| PolyCoeff::constant(int(c))).collect(),
            order,
        )
        .unwrap()
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(40, 20), BigInt::from(137_846_528_820u64));
        assert_eq!(binomial(3, 4), BigInt::zero());
    }

    #[test]
    fn difference_of_squares() {
        let t = table();
        let b = t.var("beta").unwrap();
        let plus = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (2, b.clone())], 4).unwrap();
        let minus = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (2, -&b)], 4).unwrap();
        let prod = plus.mul(&minus).unwrap();
        let expected =
            MomentumSeries::from_terms(t, [(0, PolyCoeff::one()), (4, -&b.pow(2))], 4).unwrap();
        assert_eq!(prod, expected);
    }

    #[test]
    fn product_order_uses_valuation() {
        // p^2 known through p^6 times a series known through p^4 is known through p^6.
        let a = numeric(&[0, 0, 1], 6);
        let b = numeric(&[1, 1, 1, 1, 1], 4);
        assert_eq!(a.mul(&b).unwrap().order(), 6);
    }

    #[test]
    fn reciprocal_geometric() {
        let r = numeric(&[1, -2], 3).reciprocal().unwrap();
        assert_eq!(r, numeric(&[1, 2, 4, 8], 3));
        assert!(matches!(
            numeric(&[0, 1], 3).reciprocal(),
            Err(Error::NonInvertibleConstant { .. })
        ));
    }

    #[test]
    fn reciprocal_of_non_unit_rational_constant() {
        let r = numeric(&[2, 1], 2).reciprocal().unwrap();
        let t = SymbolTable::empty();
        let expected = MomentumSeries::from_coeffs(
            t,
            0,
            vec![rat(1, 2).into(), rat(-1, 4).into(), rat(1, 8).into()],
            2,
        )
        .unwrap();
        assert_eq!(r, expected);
    }

    #[test]
    fn pow_zero_is_one_and_nonunit_rejected() {
        let a = numeric(&[1, 3, 5], 4);
        assert_eq!(a.pow(0).unwrap(), MomentumSeries::one(SymbolTable::empty(), 4));
        assert!(matches!(numeric(&[2, 1], 3).pow(2), Err(Error::NonUnitConstant { .. })));
    }

    #[test]
    fn binomial_half_power() {
        // sqrt(1 + 4x) = 1 + 2x − 2x^2 + 4x^3 − 10x^4
        let s = numeric(&[1, 4], 4).pow_general(&rat(1, 2).into()).unwrap();
        assert_eq!(s, numeric(&[1, 2, -2, 4, -10], 4));
    }

    #[test]
    fn antiderivative_and_derivative() {
        let a = numeric(&[1, 2, 3], 2);
        let i = a.antiderivative().unwrap();
        assert_eq!(i, numeric(&[0, 1, 1, 1], 3));
        assert_eq!(i.derivative().unwrap(), a);
    }

    #[test]
    fn pole_handling() {
        let t = table();
        let alpha = t.var("alpha").unwrap();
        let g = MomentumSeries::from_terms(t.clone(), [(-1, -&alpha), (0, alpha.pow(2).scale(&int(3)))], 2)
            .unwrap();
        assert_eq!(g.min_power(), -1);
        assert!(matches!(g.antiderivative(), Err(Error::PowerOutOfRange { .. })));
        assert!(matches!(g.mul(&g), Err(Error::PowerOutOfRange { .. })));
        let shifted = g.shift(2).unwrap();
        assert_eq!(shifted.min_power(), 0);
        assert_eq!(shifted.coeff(1), &-&alpha);
        assert!(MomentumSeries::monomial(t, PolyCoeff::one(), -2, 3).is_err());
    }

    #[test]
    fn compose_examples() {
        let t = SymbolTable::alphas(3);
        let a1 = t.var("alpha1").unwrap();
        // outer = 1 + ρ^2, inner map = 1
        let outer = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (2, PolyCoeff::one())], 4).unwrap();
        let id = MomentumSeries::one(t.clone(), 4);
        assert_eq!(outer.compose(&id).unwrap(), outer);
        // outer = 1 + α1 ρ with inner A-series (A1 = −α1)
        let outer = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (1, a1.clone())], 2).unwrap();
        let h = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (1, a1.clone())], 2).unwrap();
        let a = h.revert().unwrap();
        let got = outer.compose(&a).unwrap();
        let expected =
            MomentumSeries::from_terms(t, [(0, PolyCoeff::one()), (1, a1.clone()), (2, -&a1.pow(2))], 2).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn revert_symbolic_multiplier() {
        let t = SymbolTable::alphas(3);
        let a: Vec<PolyCoeff> = (1..=3).map(|i| t.var(&format!("alpha{i}")).unwrap()).collect();
        let h = MomentumSeries::from_terms(
            t.clone(),
            [(0, PolyCoeff::one()), (1, a[0].clone()), (2, a[1].clone()), (3, a[2].clone())],
            3,
        )
        .unwrap();
        let r = h.revert().unwrap();
        assert_eq!(r.coeff(1), &-&a[0]);
        assert_eq!(r.coeff(2), &(&a[0].pow(2).scale(&int(2)) - &a[1]));
        let a3 = &(&a[0].pow(3).scale(&int(-5)) + &(&a[0] * &a[1]).scale(&int(5))) - &a[2];
        assert_eq!(r.coeff(3), &a3);
    }

    #[test]
    fn revert_tangent_multiplier() {
        // p = tan(ρ) → ρ = arctan(p) = p(1 − p^2/3 + p^4/5)
        let t = SymbolTable::empty();
        let h = MomentumSeries::from_coeffs(
            t.clone(),
            0,
            vec![
                int(1).into(),
                int(0).into(),
                rat(1, 3).into(),
                int(0).into(),
                rat(2, 15).into(),
            ],
            4,
        )
        .unwrap();
        let expected = MomentumSeries::from_coeffs(
            t,
            0,
            vec![int(1).into(), int(0).into(), rat(-1, 3).into(), int(0).into(), rat(1, 5).into()],
            4,
        )
        .unwrap();
        assert_eq!(h.revert().unwrap(), expected);
    }

    #[test]
    fn grading_detection() {
        let t = table();
        let b = t.var("beta").unwrap();
        let a = t.var("alpha").unwrap();
        let good = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (1, a.clone()), (2, b.clone())], 3).unwrap();
        assert_eq!(good.grading(), Grading::Offset(0));
        good.check_graded(0, "f").unwrap();
        let bad = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (2, a.clone())], 3).unwrap();
        assert!(matches!(bad.grading(), Grading::Broken { power: 2, .. }));
        assert!(matches!(bad.check_graded(0, "f"), Err(Error::Grading { power: 2, .. })));
        let g = MomentumSeries::from_terms(t.clone(), [(-1, a.clone()), (0, b)], 1).unwrap();
        assert_eq!(g.grading(), Grading::Offset(2));
        assert_eq!(MomentumSeries::zero(t, 3).grading(), Grading::Trivial);
    }

    #[test]
    fn canonical_text() {
        let t = table();
        let b = t.var("beta").unwrap();
        let s = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (2, b.scale(&rat(-1, 3)))], 4).unwrap();
        assert_eq!(s.to_canonical_string(), "1/1*p^0 + -1/3*beta^1*p^2 + O(p^5)");
        assert_eq!(s.to_pretty_string(), "1 - 1/3*beta*p^2 + O(p^5)");
        assert_eq!(MomentumSeries::zero(t, 2).to_canonical_string(), "0 + O(p^3)");
    }

    #[test]
    fn structured_round_trip() {
        let t = table();
        let b = t.var("beta").unwrap();
        let a = t.var("alpha").unwrap();
        let s = MomentumSeries::from_terms(
            t,
            [(-1, -&a), (0, PolyCoeff::one()), (2, &b.scale(&rat(2, 3)) - &a.pow(2))],
            3,
        )
        .unwrap();
        let json = serde_json::to_string(&s.to_structured()).unwrap();
        let back: StructuredSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(MomentumSeries::from_structured(&back).unwrap(), s);
        assert_eq!(s.to_json()["coeffs"][0]["terms"][0]["coeff"], "-1/1");
    }

    #[test]
    fn table_mismatch_is_an_error() {
        let a = MomentumSeries::one(table(), 2);
        let b = MomentumSeries::one(SymbolTable::alphas(2), 2);
        assert_eq!(a.mul(&b), Err(Error::SymbolTableMismatch));
        assert_eq!(a.add(&b), Err(Error::SymbolTableMismatch));
    }

    #[test]
    fn numeric_evaluation() {
        let t = table();
        let b = t.var("beta").unwrap();
        let s = MomentumSeries::from_terms(t, [(0, PolyCoeff::one()), (2, b)], 2).unwrap();
        let n = s.to_numeric(&[0.5, 0.0]);
        assert!((n.eval(2.0) - 3.0).abs() < 1e-15);
        assert_eq!(n.degree(), Some(2));
    }
}
