//! Model catalog.
//!
//! Models are declared in small text files:
//!
//! ```text
//! name: Kempf
//! summary: one line
//! param: beta 2            # name and α-weight
//! representation: ab       # ab | alpha | gen1d
//! a[2]: beta               # or f: / g: expressions
//! b[0]: betap
//! closed_form: free text
//! evaluator: 1 + beta*p^2  # float F(|p|) for the uncertainty module
//! domain: 1/sqrt(beta)     # largest |p|, default unbounded
//! claim: iso3d sqrt(3*beta + betap) [informational]
//! ```
//!
//! The `alpha` representation takes `h:` or `alpha[k]:`, `gen1d` takes `F:`
//! or `F[k]:`. Claims are `Δx_min/ħ` as an expression, or `none` when no
//! positive minimum is expected.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::commutators::{
    commutativity_check, xp_commutative, xp_noncommutative, xx_noncommutative,
    xx_position_momentum_basis, XPCommutator, XXCommutator,
};
use crate::convert::{a_to_alpha, alpha_to_a, alpha_to_b, extend_1d_commutative, reduce_1d};
use crate::error::{Error, Result};
use crate::poly::{ParamSymbol, PolyCoeff, Rational, SymbolTable};
use crate::series::MomentumSeries;
use crate::text::{parse, Expr};

const BUILTIN: &[(&str, &str)] = &[
    ("canonical.model", include_str!("../data/models/canonical.model")),
    ("kmm1d.model", include_str!("../data/models/kmm1d.model")),
    ("kmm3d.model", include_str!("../data/models/kmm3d.model")),
    ("kmm3d-commutative.model", include_str!("../data/models/kmm3d-commutative.model")),
    ("kempf.model", include_str!("../data/models/kempf.model")),
    ("kempf-mangano.model", include_str!("../data/models/kempf-mangano.model")),
    ("adv.model", include_str!("../data/models/adv.model")),
    ("pedram.model", include_str!("../data/models/pedram.model")),
    ("chung-hassanabadi.model", include_str!("../data/models/chung-hassanabadi.model")),
    ("petruzziello.model", include_str!("../data/models/petruzziello.model")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepresentationKind {
    AB,
    Alpha,
    Gen1D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClaimKind {
    /// One-dimensional generator `F`.
    OneD,
    /// Isotropic three-dimensional closure on `D + T/3`.
    Iso3D,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Claim {
    pub kind: ClaimKind,
    /// `Δx_min / ħ`; `None` when no positive minimum exists.
    pub value: Option<Expr>,
    pub informational: bool,
    pub text: String,
}

/// Coefficient source: a whole expression or an explicit index list.
#[derive(Clone, Debug, PartialEq)]
enum SeriesDef {
    Expr(Expr, String),
    List(BTreeMap<i32, (Expr, String)>),
}

/// A parsed model file, expanded lazily to any order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDef {
    pub name: String,
    pub summary: String,
    pub aliases: Vec<String>,
    pub params: Vec<ParamSymbol>,
    pub kind: RepresentationKind,
    series: BTreeMap<&'static str, SeriesDef>,
    pub closed_forms: Vec<String>,
    pub evaluator: Option<Expr>,
    pub domain: Option<Expr>,
    pub claims: Vec<Claim>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    AB { f: MomentumSeries, g: MomentumSeries },
    Alpha { h: MomentumSeries },
    Gen1D { big_f: MomentumSeries },
}

/// A model expanded to a truncation order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub def: Arc<ModelDef>,
    pub table: Arc<SymbolTable>,
    pub order: i32,
    pub representation: Representation,
}

fn slot_name(key: &str) -> Option<&'static str> {
    Some(match key {
        "f" | "a" => "f",
        "g" | "b" => "g",
        "h" | "alpha" => "h",
        "F" => "F",
        _ => return None,
    })
}

impl ModelDef {
    pub fn parse(file: &str, src: &str) -> Result<ModelDef> {
        let err = |line: usize, message: String| Error::ModelFile {
            file: file.to_string(),
            line,
            message,
        };
        let mut name = None;
        let mut summary = String::new();
        let mut aliases = Vec::new();
        let mut params = Vec::new();
        let mut kind = None;
        let mut series: BTreeMap<&'static str, SeriesDef> = BTreeMap::new();
        let mut closed_forms = Vec::new();
        let mut evaluator = None;
        let mut domain = None;
        let mut claims = Vec::new();

        for (i, raw) in src.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| err(line_no, "expected `key: value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let expr = |v: &str| parse(v).map_err(|e| err(line_no, e.to_string()));
            match key {
                "name" => name = Some(value.to_string()),
                "summary" => summary = value.to_string(),
                "alias" => aliases.push(value.to_string()),
                "param" => {
                    let mut it = value.split_whitespace();
                    let (Some(n), Some(w), None) = (it.next(), it.next(), it.next()) else {
                        return Err(err(line_no, "expected `param: <name> <weight>`".into()));
                    };
                    let w = w
                        .parse()
                        .map_err(|_| err(line_no, format!("bad weight `{w}`")))?;
                    params.push(ParamSymbol::new(n, w));
                }
                "representation" => {
                    kind = Some(match value {
                        "ab" => RepresentationKind::AB,
                        "alpha" => RepresentationKind::Alpha,
                        "gen1d" => RepresentationKind::Gen1D,
                        v => return Err(err(line_no, format!("unknown representation `{v}`"))),
                    })
                }
                "closed_form" => closed_forms.push(value.to_string()),
                "evaluator" => evaluator = Some(expr(value)?),
                "domain" => {
                    if value != "inf" {
                        domain = Some(expr(value)?)
                    }
                }
                "claim" => {
                    let mut words: Vec<&str> = value.split_whitespace().collect();
                    let informational = words.last() == Some(&"informational");
                    if informational {
                        words.pop();
                    }
                    if words.len() < 2 {
                        return Err(err(line_no, "expected `claim: <1d|iso3d> <expr>`".into()));
                    }
                    let kind = match words[0] {
                        "1d" => ClaimKind::OneD,
                        "iso3d" => ClaimKind::Iso3D,
                        k => return Err(err(line_no, format!("unknown claim kind `{k}`"))),
                    };
                    let text = words[1..].join(" ");
                    let value = if text == "none" { None } else { Some(expr(&text)?) };
                    claims.push(Claim {
                        kind,
                        value,
                        informational,
                        text,
                    });
                }
                _ => {
                    if let Some(slot) = slot_name(key) {
                        if series.insert(slot, SeriesDef::Expr(expr(value)?, value.into())).is_some() {
                            return Err(err(line_no, format!("`{key}` given twice")));
                        }
                    } else if let Some((base, idx)) = key.strip_suffix(']').and_then(|k| k.split_once('[')) {
                        let slot = slot_name(base)
                            .ok_or_else(|| err(line_no, format!("unknown coefficient `{base}`")))?;
                        let idx: i32 = idx
                            .trim()
                            .parse()
                            .map_err(|_| err(line_no, format!("bad index `{idx}`")))?;
                        let entry = series
                            .entry(slot)
                            .or_insert_with(|| SeriesDef::List(BTreeMap::new()));
                        match entry {
                            SeriesDef::List(m) => {
                                m.insert(idx, (expr(value)?, value.into()));
                            }
                            SeriesDef::Expr(..) => {
                                return Err(err(line_no, format!("`{base}` already given as an expression")))
                            }
                        }
                    } else {
                        return Err(err(line_no, format!("unknown key `{key}`")));
                    }
                }
            }
        }

        let name = name.ok_or_else(|| err(0, "missing `name`".into()))?;
        let kind = kind.ok_or_else(|| err(0, "missing `representation`".into()))?;
        let allowed: &[&str] = match kind {
            RepresentationKind::AB => &["f", "g"],
            RepresentationKind::Alpha => &["h"],
            RepresentationKind::Gen1D => &["F"],
        };
        if let Some(extra) = series.keys().find(|k| !allowed.contains(k)) {
            return Err(err(0, format!("`{extra}` does not belong to this representation")));
        }
        SymbolTable::new(params.clone()).map_err(|e| err(0, e.to_string()))?;
        Ok(ModelDef {
            name,
            summary,
            aliases,
            params,
            kind,
            series,
            closed_forms,
            evaluator,
            domain,
            claims,
        })
    }

    fn expand(&self, table: &Arc<SymbolTable>, slot: &str, order: i32) -> Result<MomentumSeries> {
        match self.series.get(slot) {
            None => Ok(if slot == "g" {
                MomentumSeries::zero(table.clone(), order)
            } else {
                MomentumSeries::one(table.clone(), order)
            }),
            Some(SeriesDef::Expr(e, _)) => e.to_series(table, order),
            Some(SeriesDef::List(m)) => {
                let mut terms = Vec::new();
                if slot != "g" && !m.contains_key(&0) {
                    terms.push((0, PolyCoeff::one()));
                }
                for (k, (e, src)) in m {
                    let c = e.to_series(table, 2)?;
                    if c.iter().any(|(j, x)| j != 0 && !x.is_zero()) {
                        return Err(Error::Expression(format!("coefficient `{src}` depends on p")));
                    }
                    terms.push((*k, c.coeff(0).clone()));
                }
                MomentumSeries::from_terms(table.clone(), terms, order)
            }
        }
    }

    /// Expands every series to `order` (the `g` series to `order − 2`).
    pub fn instantiate(self: &Arc<Self>, order: i32) -> Result<ModelSpec> {
        if order < 1 {
            return Err(Error::Unsupported(format!("order {order} is below 1")));
        }
        let table = SymbolTable::new(self.params.clone())?;
        let representation = match self.kind {
            RepresentationKind::AB => Representation::AB {
                f: self.expand(&table, "f", order)?,
                g: self.expand(&table, "g", order - 2)?,
            },
            RepresentationKind::Alpha => Representation::Alpha {
                h: self.expand(&table, "h", order)?,
            },
            RepresentationKind::Gen1D => Representation::Gen1D {
                big_f: self.expand(&table, "F", order)?,
            },
        };
        Ok(ModelSpec {
            def: self.clone(),
            table,
            order,
            representation,
        })
    }

    /// Float expression for `F(|p|)`: the evaluator, else the defining
    /// expressions, else `None` (use the series).
    pub fn generator_expr(&self) -> Option<Expr> {
        if let Some(e) = &self.evaluator {
            return Some(e.clone());
        }
        match (self.kind, self.series.get("F"), self.series.get("f"), self.series.get("g")) {
            (RepresentationKind::Gen1D, Some(SeriesDef::Expr(e, _)), _, _) => Some(e.clone()),
            (RepresentationKind::AB, _, Some(SeriesDef::Expr(f, _)), g) => {
                let g = match g {
                    Some(SeriesDef::Expr(g, _)) => g.clone(),
                    None => Expr::Num(crate::poly::int(0)),
                    _ => return None,
                };
                let p2 = Expr::Pow(Box::new(Expr::Var("p".into())), Box::new(Expr::Num(crate::poly::int(2))));
                Some(Expr::Add(Box::new(f.clone()), Box::new(Expr::Mul(Box::new(g), Box::new(p2)))))
            }
            _ => None,
        }
    }

    /// Builds an unnamed model from expressions given on the command line.
    /// `slots` are `(key, expression)` pairs such as `("f", "1 + beta*p^2")`;
    /// symbol weights come from `symbols`.
    pub fn inline(
        kind: RepresentationKind,
        slots: &[(&str, &str)],
        domain: Option<&str>,
        symbols: &SymbolTable,
    ) -> Result<ModelDef> {
        let mut names = std::collections::BTreeSet::new();
        for (_, src) in slots.iter().chain(domain.map(|d| ("domain", d)).iter()) {
            names.extend(parse(src)?.symbols());
        }
        let representation = match kind {
            RepresentationKind::AB => "ab",
            RepresentationKind::Alpha => "alpha",
            RepresentationKind::Gen1D => "gen1d",
        };
        let mut text = format!("name: inline\nrepresentation: {representation}\n");
        for n in &names {
            let s = symbols
                .symbols()
                .iter()
                .find(|s| &s.name == n)
                .ok_or_else(|| Error::UnknownSymbol(n.clone()))?;
            text.push_str(&format!("param: {} {}\n", s.name, s.weight));
        }
        for (key, src) in slots {
            text.push_str(&format!("{key}: {src}\n"));
        }
        if let Some(d) = domain {
            text.push_str(&format!("domain: {d}\n"));
        }
        ModelDef::parse("<inline>", &text)
    }

    pub fn matches(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name) || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(name))
    }
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        &self.def.name
    }

    /// `[x_i, p_j]` for the model. A 1D generator is represented by its
    /// unique commutative extension.
    pub fn commutator(&self) -> Result<XPCommutator> {
        match &self.representation {
            Representation::AB { f, g } => xp_noncommutative(f, g, self.order),
            Representation::Alpha { h } => xp_commutative(h, self.order),
            Representation::Gen1D { big_f } => xp_commutative(&extend_1d_commutative(big_f, self.order)?.h, self.order),
        }
    }

    /// `(f, g)` of the noncommutative representation.
    pub fn f_and_g(&self) -> Result<(MomentumSeries, MomentumSeries)> {
        match &self.representation {
            Representation::AB { f, g } => Ok((f.clone(), g.clone())),
            _ => {
                let h = self.alphas()?;
                Ok((alpha_to_a(&h, self.order)?, alpha_to_b(&h, self.order)?))
            }
        }
    }

    pub fn xx(&self) -> Result<XXCommutator> {
        let (f, g) = self.f_and_g()?;
        xx_noncommutative(&f, &g, self.order)
    }

    /// The 1D reduction `F = D + T`.
    pub fn generator_1d(&self) -> Result<MomentumSeries> {
        match &self.representation {
            Representation::Gen1D { big_f } => Ok(big_f.clone()),
            _ => reduce_1d(&self.commutator()?),
        }
    }

    /// `α` family. For an `ab` model this is the triangular inverse of the
    /// `a` series, which describes the model only when it is commutative.
    pub fn alphas(&self) -> Result<MomentumSeries> {
        match &self.representation {
            Representation::AB { f, .. } => a_to_alpha(f, self.order),
            Representation::Alpha { h } => Ok(h.clone()),
            Representation::Gen1D { big_f } => Ok(extend_1d_commutative(big_f, self.order)?.h),
        }
    }

    /// Binds parameters by name; missing names are an error.
    pub fn bindings(&self, values: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        self.table
            .symbols()
            .iter()
            .map(|s| values.get(&s.name).copied().ok_or_else(|| Error::MissingBinding(s.name.clone())))
            .collect()
    }
}

/// The set of known models.
#[derive(Clone, Debug)]
pub struct Catalog {
    defs: Vec<Arc<ModelDef>>,
}

impl Catalog {
    pub fn builtin() -> Catalog {
        let defs = BUILTIN
            .iter()
            .map(|(file, src)| Arc::new(ModelDef::parse(file, src).expect("shipped model files parse")))
            .collect();
        Catalog { defs }
    }

    /// Built-in models plus every `*.model` file in `dir`; later files with
    /// an existing name replace the earlier definition.
    pub fn with_dir(dir: &Path) -> Result<Catalog> {
        let mut cat = Catalog::builtin();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "model"))
            .collect();
        paths.sort();
        for p in paths {
            let src = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            let def = Arc::new(ModelDef::parse(&p.display().to_string(), &src)?);
            cat.defs.retain(|d| !d.name.eq_ignore_ascii_case(&def.name));
            cat.defs.push(def);
        }
        Ok(cat)
    }

    pub fn defs(&self) -> &[Arc<ModelDef>] {
        &self.defs
    }

    pub fn names(&self) -> Vec<&str> {
        self.defs.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&Arc<ModelDef>> {
        self.defs
            .iter()
            .find(|d| d.matches(name))
            .ok_or_else(|| Error::UnknownModel(name.to_string()))
    }

    pub fn instantiate(&self, name: &str, order: i32) -> Result<ModelSpec> {
        self.get(name)?.instantiate(order)
    }
}

/// Closed-form momentum magnitude of the commutative Pedram extension as a
/// function of the translation generator magnitude, using principal
/// complex roots. Real for `0 < rho <= 2/(3 sqrt(beta))`.
pub fn pedram_momentum(rho: f64, beta: f64) -> Complex64 {
    let third = 1.0 / 3.0;
    let disc = Complex64::new(9.0 * rho * rho - 4.0 / beta, 0.0).sqrt();
    let w = Complex64::new(3.0 * rho, 0.0) + disc;
    let cube_root_neg = Complex64::new(-2.0 * beta, 0.0).powf(third);
    let num = Complex64::new(1.0, -3f64.sqrt()) + cube_root_neg * w.powf(2.0 * third);
    let den = Complex64::new(2.0 * beta, 0.0).powf(2.0 * third) * w.powf(third);
    num / den
}

/// One printed identity checked by [`regression_suite`].
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

struct Suite<'a> {
    spec: &'a ModelSpec,
    checks: Vec<Check>,
}

impl Suite<'_> {
    fn series(&self, src: &str, order: i32) -> Result<MomentumSeries> {
        crate::text::parse_series(src, &self.spec.table, order)
    }

    fn poly(&self, src: &str) -> Result<PolyCoeff> {
        Ok(self.series(src, 0)?.coeff(0).clone())
    }

    fn record(&mut self, name: &str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn eq_series(&mut self, name: &str, got: Result<MomentumSeries>, expected: &str) {
        let outcome = got.and_then(|g| {
            let e = self.series(expected, g.order())?;
            Ok((g == e, format!("got {}", g.to_pretty_string())))
        });
        self.record(name, outcome);
    }

    fn eq_coeff(&mut self, name: &str, got: Result<MomentumSeries>, power: i32, expected: &str) {
        let outcome = got.and_then(|g| {
            let e = self.poly(expected)?;
            let c = g.coeff(power);
            Ok((c == &e, format!("got {}", c.display(&self.spec.table))))
        });
        self.record(name, outcome);
    }
}

/// Checks every printed identity of a catalog model. Unknown names get the
/// generic checks only.
pub fn regression_suite(spec: &ModelSpec) -> Vec<Check> {
    let mut s = Suite {
        spec,
        checks: Vec::new(),
    };
    let n = spec.order;
    let comm = |order: i32| -> Result<(bool, String)> {
        let (f, g) = spec.f_and_g()?;
        let r = commutativity_check(&f, &g, order)?;
        Ok((r.commutative, r.render().trim_end().to_string()))
    };

    let graded = (|| -> Result<(bool, String)> {
        let xp = spec.commutator()?;
        xp.delta.check_graded(0, "delta")?;
        xp.tensor.check_graded(0, "pp")?;
        Ok((xp.delta.coeff(0).is_one() && xp.tensor.coeff(0).is_zero(), "D(0) = 1, T(0) = 0".into()))
    })();
    s.record("commutator graded with canonical limit", graded);

    match spec.name() {
        "canonical" => {
            s.eq_series("delta = 1", spec.commutator().map(|x| x.delta), "1");
            s.eq_series("pp = 0", spec.commutator().map(|x| x.tensor), "0");
            s.record("commutative", comm(n));
        }
        "KMM1D" => {
            s.eq_coeff("alpha2 = beta/3", spec.alphas(), 2, "beta/3");
            if n >= 4 {
                s.eq_coeff("alpha4 = 2 beta^2/15", spec.alphas(), 4, "2/15*beta^2");
            }
            s.eq_series("h = tan multiplier", spec.alphas(), "tanc(beta*p^2)");
            s.eq_series("revert(h) = arctan multiplier", spec.alphas().and_then(|h| h.revert()), "atanc(beta*p^2)");
            s.eq_series("f = sqrt(beta) p / atan(sqrt(beta) p)", spec.commutator().map(|x| x.delta), "1/atanc(beta*p^2)");
            s.record("commutative extension", comm(n));
        }
        "KMM3D" => {
            s.eq_series("delta = 1 + beta p^2", spec.commutator().map(|x| x.delta), "1 + beta*p^2");
            s.eq_series("pp = 0", spec.commutator().map(|x| x.tensor), "0");
            s.eq_series("F = 1 + beta p^2", spec.generator_1d(), "1 + beta*p^2");
            let k = spec.f_and_g().and_then(|(f, g)| xx_position_momentum_basis(&f, &g, n));
            s.eq_series("[x_i, x_j] coefficient 2 beta", k, "2*beta");
        }
        "KMM3D-commutative" => {
            s.eq_series("F = 1 + beta p^2", spec.generator_1d(), "1 + beta*p^2");
            s.eq_series("f = sqrt(beta) p / atan(sqrt(beta) p)", spec.commutator().map(|x| x.delta), "1/atanc(beta*p^2)");
            s.record("commutative", comm(n));
        }
        "Kempf" => {
            s.eq_series("delta = 1 + beta p^2", spec.commutator().map(|x| x.delta), "1 + beta*p^2");
            s.eq_series("pp = betap p^2", spec.commutator().map(|x| x.tensor), "betap*p^2");
            s.eq_coeff("xx leading coefficient -(2 beta - betap)", spec.xx().map(|x| x.coeff), 0, "-(2*beta - betap)");
            let k = spec
                .f_and_g()
                .and_then(|(f, g)| Ok(xx_position_momentum_basis(&f, &g, n)?.mul(&f)?.truncate(n - 2)));
            s.eq_series("xx numerator (2b - b') + (2b + b') b p^2", k, "(2*beta - betap) + (2*beta + betap)*beta*p^2");
            s.eq_series("F = 1 + (beta + betap) p^2", spec.generator_1d(), "1 + (beta + betap)*p^2");
            let bp = spec.table.index_of("betap");
            let special = (|| -> Result<(bool, String)> {
                let (f, g) = spec.f_and_g()?;
                let idx = bp.ok_or_else(|| Error::UnknownSymbol("betap".into()))?;
                let g2 = g.substitute_symbol(idx, &self_poly(spec, "2*beta")?);
                let first = commutativity_check(&f, &g2, 2)?.commutative;
                let second = commutativity_check(&f, &g2, 4.min(n))?.commutative;
                Ok((first && !second, format!("first order {first}, second order {second}")))
            })();
            s.record("betap = 2 beta commutes only to first order", special);
            s.eq_coeff("alpha2 = beta", spec.alphas(), 2, "beta");
        }
        "KempfMangano" => {
            // f (sqrt(1 + 4βp²) − 1) = 2βp²
            let cross = spec.f_and_g().and_then(|(f, _)| {
                let d = self_series(spec, "sqrt(1 + 4*beta*p^2) - 1", n)?;
                Ok(f.mul(&d)?.truncate(n))
            });
            s.eq_series("f reciprocal form", cross, "2*beta*p^2");
            s.eq_series("pp = 2 beta p^2", spec.commutator().map(|x| x.tensor), "2*beta*p^2");
            s.record("commutative", comm(n));
            s.eq_series("h = 1/(1 - beta rho^2)", spec.alphas(), "1/(1 - beta*p^2)");
            let round = spec.alphas().and_then(|h| {
                let back = h.revert()?.revert()?;
                // ρ = p A(p) with p = ρ h(ρ) gives h · A(ρ h) = 1
                let id = h.mul(&h.revert()?.compose(&h)?)?;
                Ok((back == h && id == MomentumSeries::one(spec.table.clone(), id.order()), "revert twice and compose".into()))
            });
            s.record("reversion round trip", round);
        }
        "ADV" => {
            s.eq_series("f = 1 - alpha p + alpha^2 p^2", spec.f_and_g().map(|x| x.0), "1 - alpha*p + alpha^2*p^2");
            s.eq_series("g = -alpha/p + 3 alpha^2", spec.f_and_g().map(|x| x.1), "-alpha/p + 3*alpha^2");
            let h2 = spec.alphas().map(|h| h.truncate(2));
            s.eq_series("alpha1 = -alpha, alpha2 = 2 alpha^2", h2, "1 - alpha*p + 2*alpha^2*p^2");
            s.record("commutative to second order", comm(2));
            let same = (|| -> Result<(bool, String)> {
                let (f, g) = spec.f_and_g()?;
                let h = spec.alphas()?;
                Ok((xp_commutative(&h, 2)? == xp_noncommutative(&f, &g, 2)?, "second order".into()))
            })();
            s.record("commutative representation matches", same);
        }
        "Pedram" => {
            s.eq_series("F = 1/(1 - beta p^2)", spec.generator_1d(), "1/(1 - beta*p^2)");
            let k = spec.f_and_g().and_then(|(f, g)| xx_position_momentum_basis(&f, &g, n));
            s.eq_series("[x_i, x_j] coefficient 2 beta/(1 - beta p^2)^2", k, "2*beta/(1 - beta*p^2)^2");
            let ext = spec.generator_1d().and_then(|f| extend_1d_commutative(&f, n));
            s.eq_series("extension delta", ext.clone().map(|e| e.f), "1/(1 - beta*p^2/3)");
            let tensor = ext.clone().and_then(|e| xp_commutative(&e.h, n)).map(|x| x.tensor);
            s.eq_series("extension pp", tensor, "2/3*beta*p^2/((1 - beta*p^2/3)*(1 - beta*p^2))");
            s.eq_coeff("alpha2 = beta/3", ext.clone().map(|e| e.h), 2, "beta/3");
            if n >= 4 {
                s.eq_coeff("alpha4 = beta^2/3", ext.clone().map(|e| e.h), 4, "beta^2/3");
            }
            if n >= 6 {
                s.eq_coeff("alpha6 = 4 beta^3/9", ext.clone().map(|e| e.h), 6, "4/9*beta^3");
            }
            let bound = (|| -> Result<(bool, String)> {
                let mut worst: f64 = 0.0;
                for beta in [0.25, 1.0, 4.0] {
                    let p = pedram_momentum(2.0 / (3.0 * f64::sqrt(beta)), beta);
                    let target = 1.0 / f64::sqrt(beta);
                    worst = worst.max((p.re - target).abs() / target).max(p.im.abs() / target);
                }
                Ok((worst < 1e-9, format!("max relative deviation {worst:.2e}")))
            })();
            s.record("closed form gives p = 1/sqrt(beta) at the rho bound", bound);
            let small = ext.and_then(|e| {
                let idx = spec.table.index_of("beta").ok_or_else(|| Error::UnknownSymbol("beta".into()))?;
                let mut vals = vec![0.0; spec.table.len()];
                vals[idx] = 1.0;
                let h = e.h.to_numeric(&vals);
                let rho = 0.05;
                let exact = pedram_momentum(rho, 1.0).re / rho;
                let approx = h.eval(rho);
                let err = (exact - approx).abs();
                Ok((err < 10.0 * rho.powi(n + 2), format!("|closed - series| = {err:.2e} at rho = {rho}")))
            });
            s.record("closed form matches the series near zero", small);
        }
        "ChungHassanabadi" => {
            s.eq_coeff("alpha1 = N beta/2", spec.alphas(), 1, "N*beta/2");
            s.eq_coeff("alpha2 = N(1 + 2N) beta^2/6", spec.alphas(), 2, "N*(1 + 2*N)*beta^2/6");
            // Σ C(1/(1+N), n+1) (−1)^n (1+N)^(n+1) (βρ)^n with the binomial
            // expanded as a polynomial in N.
            let binom = (|| -> Result<(bool, String)> {
                let h = spec.alphas()?;
                let mut all = true;
                for k in 0..=n {
                    let mut c = PolyCoeff::one();
                    for j in 0..=k {
                        c = &c * &self_poly(spec, &format!("1 - {j}*(1 + N)"))?;
                    }
                    let fact: i64 = (1..=(k + 1) as i64).product();
                    let sign = if k % 2 == 0 { 1 } else { -1 };
                    let expected = &c.scale(&Rational::new(sign.into(), fact.into()))
                        * &self_poly(spec, &format!("beta^{k}"))?;
                    all &= h.coeff(k) == &expected;
                }
                Ok((all, format!("through order {n}")))
            })();
            s.record("binomial series form", binom);
            let closed = (|| -> Result<(bool, String)> {
                let h = spec.alphas()?;
                let idx_n = spec.table.index_of("N").ok_or_else(|| Error::UnknownSymbol("N".into()))?;
                let mut ok = true;
                for nv in [1i64, 2, 3] {
                    // β ρ h(ρ) = 1 − (1 − (1+N) β ρ)^(1/(1+N))
                    let src = format!("1 - (1 - {}*beta*p)^(1/{})", nv + 1, nv + 1);
                    let expected = self_series(spec, &src, n + 1)?;
                    let got = h
                        .substitute_symbol(idx_n, &PolyCoeff::constant(crate::poly::int(nv)))
                        .shift(1)?
                        .scale(&self_poly(spec, "beta")?);
                    ok &= got == expected;
                }
                Ok((ok, "N = 1, 2, 3".into()))
            })();
            s.record("closed form with exponent 1/(1 + N)", closed);
            s.record("commutative extension", comm(n));
        }
        "Petruzziello" => {
            s.eq_coeff("alpha2 = -beta/3", spec.alphas(), 2, "-beta/3");
            s.eq_series("h = sin multiplier", spec.alphas(), "sinc(2*beta*p^2)");
            s.eq_series("f = sqrt(2 beta) p / asin(sqrt(2 beta) p)", spec.commutator().map(|x| x.delta), "1/asinc(2*beta*p^2)");
            let low = spec.commutator().map(|x| x.delta.truncate(2));
            s.eq_series("delta to first order", low, "1 - beta*p^2/3");
            let low = spec.commutator().map(|x| x.tensor.truncate(2));
            s.eq_series("pp to first order", low, "-2/3*beta*p^2");
            s.record("commutative extension", comm(n));
        }
        _ => {}
    }
    s.checks
}

fn self_poly(spec: &ModelSpec, src: &str) -> Result<PolyCoeff> {
    Ok(crate::text::parse_series(src, &spec.table, 0)?.coeff(0).clone())
}

fn self_series(spec: &ModelSpec, src: &str, order: i32) -> Result<MomentumSeries> {
    crate::text::parse_series(src, &spec.table, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_loads() {
        let cat = Catalog::builtin();
        assert_eq!(cat.names().len(), 10);
        assert!(cat.get("kmm3dc").is_ok());
        assert_eq!(cat.get("nope").unwrap_err(), Error::UnknownModel("nope".into()));
    }

    #[test]
    fn every_builtin_regression_passes() {
        let cat = Catalog::builtin();
        for name in cat.names() {
            let spec = cat.instantiate(name, 6).unwrap();
            for c in regression_suite(&spec) {
                assert!(c.passed, "{name}: {} ({})", c.name, c.detail);
            }
        }
    }

    #[test]
    fn kempf_mangano_f_series() {
        let spec = Catalog::builtin().instantiate("KempfMangano", 4).unwrap();
        let (f, _) = spec.f_and_g().unwrap();
        let expected = crate::text::parse_series("1 + beta*p^2 - beta^2*p^4", &spec.table, 4).unwrap();
        assert_eq!(f, expected);
    }

    #[test]
    fn pedram_closed_form_real_in_range() {
        for rho in [0.1, 0.3, 0.6] {
            let p = pedram_momentum(rho, 1.0);
            assert!(p.im.abs() < 1e-12, "{rho}: {p}");
            // inverse relation rho = p − p^3/3
            assert!((p.re - p.re.powi(3) / 3.0 - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn model_file_errors() {
        let e = ModelDef::parse("x", "name: a\nrepresentation: ab\nfoo: 1\n").unwrap_err();
        assert!(matches!(e, Error::ModelFile { line: 3, .. }));
        let e = ModelDef::parse("x", "name: a\nrepresentation: ab\nh: 1\n").unwrap_err();
        assert!(matches!(e, Error::ModelFile { line: 0, .. }));
        let e = ModelDef::parse("x", "name: a\nrepresentation: ab\nf: 1 +\n").unwrap_err();
        assert!(matches!(e, Error::ModelFile { line: 3, .. }));
        let e = ModelDef::parse("x", "representation: ab\n").unwrap_err();
        assert!(matches!(e, Error::ModelFile { .. }));
    }

    #[test]
    fn user_model_from_text() {
        let def = Arc::new(
            ModelDef::parse(
                "quartic.model",
                "name: quartic\nparam: gamma 4\nrepresentation: gen1d\nF[4]: gamma  # quartic only\n",
            )
            .unwrap(),
        );
        let spec = def.instantiate(4).unwrap();
        let h = spec.alphas().unwrap();
        // (1 + 4) α4 = γ
        assert_eq!(h.coeff(4), &self_poly(&spec, "gamma/5").unwrap());
    }

    #[test]
    fn list_coefficients_must_be_constant() {
        let def = Arc::new(ModelDef::parse("x", "name: a\nparam: beta 2\nrepresentation: ab\na[2]: beta*p\n").unwrap());
        assert!(matches!(def.instantiate(4), Err(Error::Expression(_))));
    }
}
