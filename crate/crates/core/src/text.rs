//! Expression syntax for inline series and closed-form evaluators.
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := ("-" | "+") unary | power
//! power := atom ("^" unary)?
//! atom  := number | name | name "(" expr ")" | "(" expr ")" | "O(p^k)"
//! ```
//!
//! Numbers may be integers, decimals (`0.25`, `1e-3`) or are built with `/`.
//! The canonical series text (`1/1*p^0 + -1/3*beta^1*p^2 + O(p^5)`) is a
//! valid expression. Functions: `sqrt exp log sin cos tan atan asin` and the
//! even kernels `tanc sinc atanc asinc`, where `tanc(u) = tan(√u)/√u`.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};

use crate::error::{Error, Result};
use crate::poly::{int, ParamSymbol, PolyCoeff, Rational, SymbolTable};
use crate::series::MomentumSeries;

/// Extra orders carried internally so that divisions by `p^k` do not lose
/// requested terms.
const WORKING_SLACK: i32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// `O(p^k)`: terms from `p^k` on are unknown.
    BigO(i32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Atan,
    Asin,
    Tanc,
    Sinc,
    Atanc,
    Asinc,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "asin" => Func::Asin,
            "tanc" => Func::Tanc,
            "sinc" => Func::Sinc,
            "atanc" => Func::Atanc,
            "asinc" => Func::Asinc,
            _ => return None,
        })
    }
}

/// Symbols available to inline expressions unless overridden.
pub fn default_inline_symbols() -> Vec<ParamSymbol> {
    vec![
        ParamSymbol::new("alpha", 1),
        ParamSymbol::new("beta", 2),
        ParamSymbol::new("betap", 2),
        ParamSymbol::new("N", 0),
    ]
}

/// Default inline symbols with `overrides` replacing same-named entries or
/// appended.
pub fn inline_table(overrides: &[ParamSymbol]) -> Result<Arc<SymbolTable>> {
    let mut symbols = default_inline_symbols();
    for o in overrides {
        match symbols.iter_mut().find(|s| s.name == o.name) {
            Some(s) => s.weight = o.weight,
            None => symbols.push(o.clone()),
        }
    }
    SymbolTable::new(symbols)
}

/// Parses `name:weight`.
pub fn parse_symbol_decl(s: &str) -> Result<ParamSymbol> {
    let (name, w) = s.split_once(':').ok_or_else(|| Error::Parse {
        pos: 0,
        expected: "name:weight".into(),
        found: s.into(),
    })?;
    let weight = w.trim().parse().map_err(|_| Error::Parse {
        pos: name.len() + 1,
        expected: "nonnegative integer weight".into(),
        found: w.into(),
    })?;
    Ok(ParamSymbol::new(name.trim(), weight))
}

pub fn parse(src: &str) -> Result<Expr> {
    let tokens = lex(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let e = parser.expr()?;
    match parser.peek() {
        Tok::End => Ok(e),
        t => Err(parser.error("operator or end of input", &t.describe())),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(r) => format!("number `{r}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // exponent part: e.g. 1e-3
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    while j < chars.len() && chars[j].1.is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let end = if i < chars.len() { chars[i].0 } else { src.len() };
            let text = &src[chars[start].0..end];
            out.push((pos, Tok::Num(parse_decimal(text, pos)?)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = if i < chars.len() { chars[i].0 } else { src.len() };
            out.push((pos, Tok::Ident(src[chars[start].0..end].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((pos, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse {
                pos,
                expected: "number, name, operator or parenthesis".into(),
                found: format!("`{c}`"),
            });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

/// Exact value of a decimal literal such as `2.5e-3`.
fn parse_decimal(text: &str, pos: usize) -> Result<Rational> {
    let bad = || Error::Parse {
        pos,
        expected: "number".into(),
        found: format!("`{text}`"),
    };
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    let (whole, frac) = match mantissa.split_once('.') {
        Some((w, f)) => (w, f),
        None => (mantissa, ""),
    };
    if (whole.is_empty() && frac.is_empty()) || frac.contains('.') {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if shift >= 0 {
        Rational::from_integer(n * Pow::pow(&ten, shift as u32))
    } else {
        Rational::new(n, Pow::pow(&ten, (-shift) as u32))
    })
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Tok {
        self.tokens[self.pos].1.clone()
    }

    fn here(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str, found: &str) -> Error {
        Error::Parse {
            pos: self.here(),
            expected: expected.into(),
            found: found.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Tok::Op(x) if x == c => {
                self.bump();
                Ok(())
            }
            t => Err(self.error(&format!("`{c}`"), &t.describe())),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Tok::Num(r) => Ok(Expr::Num(r)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek() != Tok::Op('(') {
                    return Ok(Expr::Var(name));
                }
                if name == "O" {
                    return self.big_o();
                }
                let func = Func::from_name(&name).ok_or_else(|| Error::Parse {
                    pos: self.tokens[self.pos - 1].0,
                    expected: "known function".into(),
                    found: format!("`{name}`"),
                })?;
                self.bump();
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            t => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.error("number, name or `(`", &t.describe()))
            }
        }
    }

    fn big_o(&mut self) -> Result<Expr> {
        self.expect('(')?;
        match self.bump() {
            Tok::Ident(p) if p == "p" => {}
            t => {
                self.pos -= 1;
                return Err(self.error("`p`", &t.describe()));
            }
        }
        let k = if self.peek() == Tok::Op('^') {
            self.bump();
            match self.bump() {
                Tok::Num(r) if r.is_integer() => r
                    .numer()
                    .try_into()
                    .map_err(|_| self.error("small integer", "large number"))?,
                t => {
                    self.pos -= 1;
                    return Err(self.error("integer power", &t.describe()));
                }
            }
        } else {
            1
        };
        self.expect(')')?;
        Ok(Expr::BigO(k))
    }
}

impl Expr {
    /// Names referenced by the expression, excluding `p`.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(n) if n != "p" => {
                out.insert(n.clone());
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_symbols(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            _ => {}
        }
    }

    /// Expands the expression as a series in `p` known through `order`, or
    /// through a lower order if an `O(p^k)` term says so.
    pub fn to_series(&self, table: &Arc<SymbolTable>, order: i32) -> Result<MomentumSeries> {
        let working = order + WORKING_SLACK;
        let s = self.series(table, working)?;
        Ok(s.truncate(order))
    }

    fn series(&self, table: &Arc<SymbolTable>, n: i32) -> Result<MomentumSeries> {
        Ok(match self {
            Expr::Num(r) => MomentumSeries::constant(table.clone(), r.clone().into(), n),
            Expr::Var(name) if name == "p" => {
                MomentumSeries::monomial(table.clone(), PolyCoeff::one(), 1, n)?
            }
            Expr::Var(name) => MomentumSeries::constant(table.clone(), table.var(name)?, n),
            Expr::BigO(k) => MomentumSeries::zero(table.clone(), k - 1),
            Expr::Neg(a) => a.series(table, n)?.neg(),
            Expr::Add(a, b) => a.series(table, n)?.add(&b.series(table, n)?)?,
            Expr::Sub(a, b) => a.series(table, n)?.sub(&b.series(table, n)?)?,
            Expr::Mul(a, b) => a.series(table, n)?.mul(&b.series(table, n)?)?,
            Expr::Div(a, b) => divide(&a.series(table, n)?, &b.series(table, n)?)?,
            Expr::Pow(a, b) => {
                let base = a.series(table, n)?;
                let exp = b.series(table, n)?;
                if exp.iter().any(|(k, c)| k != 0 && !c.is_zero()) {
                    return Err(Error::Expression(
                        "exponent must not depend on p".into(),
                    ));
                }
                power(&base, exp.coeff(0))?
            }
            Expr::Call(f, a) => apply(*f, &a.series(table, n)?)?,
        })
    }

    /// Evaluates with floats; `p` and every parameter come from `lookup`.
    pub fn eval_f64(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        Ok(match self {
            Expr::Num(r) => crate::poly::rational_to_f64(r),
            Expr::Var(name) => lookup(name).ok_or_else(|| Error::MissingBinding(name.clone()))?,
            Expr::BigO(_) => 0.0,
            Expr::Neg(a) => -a.eval_f64(lookup)?,
            Expr::Add(a, b) => a.eval_f64(lookup)? + b.eval_f64(lookup)?,
            Expr::Sub(a, b) => a.eval_f64(lookup)? - b.eval_f64(lookup)?,
            Expr::Mul(a, b) => a.eval_f64(lookup)? * b.eval_f64(lookup)?,
            Expr::Div(a, b) => a.eval_f64(lookup)? / b.eval_f64(lookup)?,
            Expr::Pow(a, b) => {
                let base = a.eval_f64(lookup)?;
                let e = b.eval_f64(lookup)?;
                if e.fract() == 0.0 && e.abs() < 1e9 {
                    base.powi(e as i32)
                } else {
                    base.powf(e)
                }
            }
            Expr::Call(f, a) => eval_func(*f, a.eval_f64(lookup)?),
        })
    }
}

fn divide(a: &MomentumSeries, b: &MomentumSeries) -> Result<MomentumSeries> {
    let v = b.valuation();
    if v > b.order() {
        return Err(Error::Expression("division by a series with no known nonzero term".into()));
    }
    let unit = b.shift(-v)?;
    a.mul(&unit.reciprocal()?)?.shift(-v)
}

fn power(base: &MomentumSeries, exp: &PolyCoeff) -> Result<MomentumSeries> {
    if let Some(r) = exp.as_constant() {
        if r.is_integer() {
            let k: i64 = r
                .numer()
                .try_into()
                .map_err(|_| Error::Expression("exponent too large".into()))?;
            let mag = u32::try_from(k.unsigned_abs())
                .map_err(|_| Error::Expression("exponent too large".into()))?;
            let v = base.valuation();
            // Pure powers of p, including p^-1.
            if v <= base.order() && k < 0 {
                let unit = base.shift(-v)?;
                return unit.reciprocal()?.powi(mag)?.shift(-v * mag as i32);
            }
            return base.powi(mag);
        }
    }
    // Non-integer exponent: factor out a nonunit rational constant when its
    // power is rational.
    let c0 = base.coeff(0).as_constant();
    match c0 {
        Some(c) if !c.is_one() && !c.is_zero() && base.coeff(-1).is_zero() => {
            let scaled = base.scale(&PolyCoeff::constant(c.recip()));
            let r = exp.as_constant().ok_or_else(|| {
                Error::Expression("symbolic exponent needs a unit constant term".into())
            })?;
            let factor = rational_power(&c, &r).ok_or_else(|| {
                Error::Expression(format!("{c}^({r}) is not rational"))
            })?;
            Ok(scaled.pow_general(exp)?.scale(&PolyCoeff::constant(factor)))
        }
        _ => base.pow_general(exp),
    }
}

/// `c^r` when it is rational.
fn rational_power(c: &Rational, r: &Rational) -> Option<Rational> {
    if c.numer().sign() == num_bigint::Sign::Minus {
        return None;
    }
    let den: u32 = r.denom().try_into().ok()?;
    let num: i32 = r.numer().try_into().ok()?;
    let root = |x: &BigInt| -> Option<BigInt> {
        let y = x.nth_root(den);
        (Pow::pow(&y, den) == *x).then_some(y)
    };
    let base = Rational::new(root(c.numer())?, root(c.denom())?);
    Some(if num >= 0 {
        Pow::pow(&base, num.unsigned_abs())
    } else {
        Pow::pow(&base.recip(), num.unsigned_abs())
    })
}

/// Coefficients `c_k` of `Σ c_k v^k` for the elementary functions, as
/// series in a small argument.
fn kernel(f: Func, k: u32) -> Rational {
    let fact = |n: u32| -> BigInt { (1..=n).fold(BigInt::one(), |a, i| a * i) };
    let sign = if k % 2 == 0 { int(1) } else { int(-1) };
    match f {
        Func::Exp => Rational::new(BigInt::one(), fact(k)),
        Func::Log => {
            if k == 0 {
                Rational::zero()
            } else {
                -sign / int(k as i64)
            }
        }
        Func::Sin => {
            if k % 2 == 1 {
                let s = if (k / 2) % 2 == 0 { 1 } else { -1 };
                Rational::new(BigInt::from(s), fact(k))
            } else {
                Rational::zero()
            }
        }
        Func::Cos => {
            if k % 2 == 0 {
                let s = if (k / 2) % 2 == 0 { 1 } else { -1 };
                Rational::new(BigInt::from(s), fact(k))
            } else {
                Rational::zero()
            }
        }
        Func::Atan => {
            if k % 2 == 1 {
                let s = if (k / 2) % 2 == 0 { 1 } else { -1 };
                int(s) / int(k as i64)
            } else {
                Rational::zero()
            }
        }
        Func::Asin => {
            if k % 2 == 1 {
                let m = k / 2;
                Rational::new(fact(2 * m), Pow::pow(BigInt::from(4), m as u32) * fact(m).pow(2u32) * (2 * m + 1))
            } else {
                Rational::zero()
            }
        }
        // Kernels in u = x^2.
        Func::Sinc => sign * Rational::new(BigInt::one(), fact(2 * k + 1)),
        Func::Atanc => sign / int(2 * k as i64 + 1),
        Func::Asinc => Rational::new(
            fact(2 * k),
            Pow::pow(BigInt::from(4), k as u32) * fact(k).pow(2u32) * (2 * k + 1),
        ),
        Func::Sqrt | Func::Tan | Func::Tanc => unreachable!("derived from other kernels"),
    }
}

fn kernel_series(f: Func, table: &Arc<SymbolTable>, n: i32) -> MomentumSeries {
    let coeffs = (0..=n.max(0) as u32)
        .map(|k| PolyCoeff::constant(kernel(f, k)))
        .collect();
    MomentumSeries::from_coeffs(table.clone(), 0, coeffs, n).expect("kernel series is well formed")
}

/// Cosine kernel in u = x^2: cos(√u).
fn cos_kernel(table: &Arc<SymbolTable>, n: i32) -> MomentumSeries {
    let coeffs = (0..=n.max(0) as u32)
        .map(|k| {
            let fact: BigInt = (1..=2 * k).fold(BigInt::one(), |a, i| a * i);
            let s = if k % 2 == 0 { 1 } else { -1 };
            PolyCoeff::constant(Rational::new(BigInt::from(s), fact))
        })
        .collect();
    MomentumSeries::from_coeffs(table.clone(), 0, coeffs, n).expect("kernel series is well formed")
}

fn apply(f: Func, x: &MomentumSeries) -> Result<MomentumSeries> {
    let table = x.table().clone();
    match f {
        Func::Sqrt => power(x, &Rational::new(BigInt::one(), BigInt::from(2)).into()),
        Func::Log => {
            if !x.coeff(0).is_one() {
                return Err(Error::NonUnitConstant {
                    op: "log",
                    found: x.coeff(0).display(&table).to_string(),
                });
            }
            let y = x.sub(&MomentumSeries::one(table.clone(), x.order()))?;
            kernel_series(Func::Log, &table, x.order()).substitute(&y)
        }
        Func::Tan => {
            let s = apply(Func::Sin, x)?;
            let c = apply(Func::Cos, x)?;
            divide(&s, &c)
        }
        Func::Tanc => {
            let s = kernel_series(Func::Sinc, &table, x.order()).substitute(x)?;
            let c = cos_kernel(&table, x.order()).substitute(x)?;
            divide(&s, &c)
        }
        _ => kernel_series(f, &table, x.order()).substitute(x),
    }
}

fn eval_func(f: Func, x: f64) -> f64 {
    // Even kernels continue analytically to negative arguments.
    let even = |pos: fn(f64) -> f64, neg: fn(f64) -> f64, x: f64| -> f64 {
        if x.abs() < 1e-300 {
            1.0
        } else if x > 0.0 {
            let r = x.sqrt();
            pos(r) / r
        } else {
            let r = (-x).sqrt();
            neg(r) / r
        }
    };
    match f {
        Func::Sqrt => x.sqrt(),
        Func::Exp => x.exp(),
        Func::Log => x.ln(),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Atan => x.atan(),
        Func::Asin => x.asin(),
        Func::Tanc => even(f64::tan, f64::tanh, x),
        Func::Sinc => even(f64::sin, f64::sinh, x),
        Func::Atanc => even(f64::atan, f64::atanh, x),
        Func::Asinc => even(f64::asin, f64::asinh, x),
    }
}

/// Parses and expands in one step.
pub fn parse_series(src: &str, table: &Arc<SymbolTable>, order: i32) -> Result<MomentumSeries> {
    parse(src)?.to_series(table, order)
}
