//! Experimental bounds on model parameters and their translation into
//! bounds on the isotropic series coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub const BUILTIN_DATASET: &str = include_str!("../data/bounds.tsv");

/// How an experiment's bound parameter enters the commutator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Convention {
    /// `[x, p] = iħ(1 + βp²)`.
    Kmm1dBeta,
    /// Kempf's `β` with `β' = 0`.
    KempfBeta,
    /// Commutative Kempf model, `[x, p] = iħ(1 + 3βp²)` in 1D.
    KempfCommutativeBeta,
    /// `[x, p] = iħ(1 − αp + 2α²p²)`.
    AdvAlpha,
    /// Gravitational `β` in the KMM form.
    GravitationalBeta,
}

impl Convention {
    pub const ALL: [Convention; 5] = [
        Convention::Kmm1dBeta,
        Convention::KempfBeta,
        Convention::KempfCommutativeBeta,
        Convention::AdvAlpha,
        Convention::GravitationalBeta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Convention::Kmm1dBeta => "KMM1D-beta0",
            Convention::KempfBeta => "Kempf-beta0",
            Convention::KempfCommutativeBeta => "Kempf-commutative-beta0",
            Convention::AdvAlpha => "ADV-alpha0",
            Convention::GravitationalBeta => "gravitational-beta",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('₀', "0").replace('β', "beta").replace('α', "alpha");
        Convention::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(&key))
            .ok_or_else(|| Error::UnknownConvention(s.trim().to_string()))
    }
}

/// Whether a bound was obtained in a 1D or a 3D setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Any,
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "3d")]
    ThreeD,
}

impl Scope {
    pub fn name(self) -> &'static str {
        match self {
            Scope::Any => "any",
            Scope::OneD => "1d",
            Scope::ThreeD => "3d",
        }
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "any" | "" => Ok(Scope::Any),
            "1d" => Ok(Scope::OneD),
            "3d" => Ok(Scope::ThreeD),
            other => Err(Error::Unsupported(format!("unknown scope `{other}`"))),
        }
    }
}

/// Bounded coefficient combination, in table column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Target {
    #[serde(rename = "alpha1")]
    Alpha1,
    #[serde(rename = "alpha2")]
    Alpha2,
    #[serde(rename = "a1+b-1")]
    A1B,
    #[serde(rename = "a2+b0")]
    A2B,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::Alpha1, Target::Alpha2, Target::A1B, Target::A2B];

    pub fn name(self) -> &'static str {
        match self {
            Target::Alpha1 => "alpha1",
            Target::Alpha2 => "alpha2",
            Target::A1B => "a1+b-1",
            Target::A2B => "a2+b0",
        }
    }
}

/// A bound value, possibly known only to order of magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Value {
    pub value: f64,
    pub magnitude_only: bool,
    /// Significant figures as written; 0 for magnitude-only values.
    pub sig_figs: usize,
}

impl Value {
    pub fn parse(s: &str) -> Result<Value> {
        let s = s.trim();
        let (body, magnitude_only) = match s.strip_prefix('~') {
            Some(rest) => (rest.trim(), true),
            None => (s, false),
        };
        let value: f64 = body
            .parse()
            .map_err(|_| Error::Unsupported(format!("`{s}` is not a number")))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Unsupported(format!("bound `{s}` must be positive")));
        }
        let mantissa = body.split(['e', 'E']).next().unwrap_or("");
        let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        let sig_figs = if magnitude_only { 0 } else { digits.trim_start_matches('0').len().max(1) };
        Ok(Value {
            value,
            magnitude_only,
            sig_figs,
        })
    }

    pub fn exponent(&self) -> i32 {
        self.value.log10().floor() as i32
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.magnitude_only {
            write!(f, "~1e{}", self.exponent())
        } else {
            write!(f, "{}", sig_fig_string(self.value, self.sig_figs))
        }
    }
}

fn sig_fig_string(x: f64, figs: usize) -> String {
    let s = format!("{:.*e}", figs.saturating_sub(1), x);
    let (m, e) = s.split_once('e').unwrap_or((&s, "0"));
    format!("{m}e{e}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRecord {
    pub part: u32,
    pub source: String,
    pub reference: String,
    pub convention: Convention,
    pub scope: Scope,
    pub value: Value,
    /// Entries as printed, per target; `None` where nothing is printed.
    pub printed: BTreeMap<Target, Value>,
    pub notes: String,
}

/// Derived bounds on the coefficient combinations, from the convention
/// and value alone. Values are absolute.
pub fn translate(convention: Convention, scope: Scope, value: f64) -> BTreeMap<Target, f64> {
    let mut out = BTreeMap::new();
    match convention {
        Convention::Kmm1dBeta | Convention::GravitationalBeta => {
            out.insert(Target::Alpha2, value / 3.0);
            out.insert(Target::A2B, value);
        }
        Convention::KempfBeta => {
            out.insert(Target::Alpha2, value);
            out.insert(Target::A2B, value);
        }
        Convention::KempfCommutativeBeta => {
            out.insert(Target::Alpha2, value);
            if scope != Scope::ThreeD {
                out.insert(Target::A2B, 3.0 * value);
            }
        }
        Convention::AdvAlpha => {
            out.insert(Target::Alpha1, value);
            out.insert(Target::Alpha2, 2.0 * value * value);
            if scope != Scope::ThreeD {
                out.insert(Target::A1B, 2.0 * value);
                out.insert(Target::A2B, 4.0 * value * value);
            }
        }
    }
    out
}

impl BoundRecord {
    pub fn targets(&self) -> BTreeMap<Target, f64> {
        translate(self.convention, self.scope, self.value.value)
    }

    /// Computed against printed cells, one per target either side has.
    pub fn cells(&self) -> Vec<Cell> {
        let computed = self.targets();
        Target::ALL
            .into_iter()
            .filter_map(|t| {
                let c = computed.get(&t).copied();
                let p = self.printed.get(&t).copied();
                if c.is_none() && p.is_none() {
                    return None;
                }
                let status = match (c, p) {
                    (Some(c), Some(p)) => {
                        if agrees(c, &p) {
                            CellStatus::Match
                        } else {
                            CellStatus::Mismatch
                        }
                    }
                    (Some(_), None) => CellStatus::NotPrinted,
                    _ => CellStatus::NotDerived,
                };
                Some(Cell {
                    target: t,
                    computed: c,
                    printed: p,
                    magnitude_only: self.value.magnitude_only,
                    status,
                })
            })
            .collect()
    }
}

/// Whether a computed value reproduces a printed entry within its precision.
pub fn agrees(computed: f64, printed: &Value) -> bool {
    if printed.magnitude_only {
        let l = computed.log10();
        let e = printed.exponent();
        return l.floor() as i32 == e || l.round() as i32 == e;
    }
    let rounded: f64 = sig_fig_string(computed, printed.sig_figs).parse().unwrap_or(f64::NAN);
    ((rounded - printed.value) / printed.value).abs() < 1e-9
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Match,
    Mismatch,
    NotPrinted,
    NotDerived,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub target: Target,
    pub computed: Option<f64>,
    pub printed: Option<Value>,
    pub magnitude_only: bool,
    pub status: CellStatus,
}

impl Cell {
    /// Computed value as shown in the table.
    pub fn display(&self) -> String {
        let Some(c) = self.computed else {
            return "-".into();
        };
        if self.magnitude_only {
            let e = match self.printed {
                Some(p) if self.status == CellStatus::Match => p.exponent(),
                _ => c.log10().floor() as i32,
            };
            format!("~1e{e}")
        } else {
            sig_fig_string(c, 2)
        }
    }
}

/// Parses the pipe-separated dataset format.
pub fn parse_dataset(src: &str) -> Result<Vec<BoundRecord>> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Dataset { line, message };
        let fields: Vec<&str> = text.split('|').map(str::trim).collect();
        if fields.len() < 10 {
            return Err(err(format!("expected at least 10 fields, found {}", fields.len())));
        }
        let part = fields[0].parse().map_err(|_| err(format!("bad part number `{}`", fields[0])))?;
        let convention: Convention = fields[3].parse()?;
        let scope: Scope = fields[4].parse().map_err(|e: Error| err(e.to_string()))?;
        let value = Value::parse(fields[5]).map_err(|e| err(e.to_string()))?;
        let mut printed = BTreeMap::new();
        for (t, cell) in Target::ALL.into_iter().zip(&fields[6..10]) {
            if *cell != "-" && !cell.is_empty() {
                printed.insert(t, Value::parse(cell).map_err(|e| err(e.to_string()))?);
            }
        }
        out.push(BoundRecord {
            part,
            source: fields[1].to_string(),
            reference: fields[2].to_string(),
            convention,
            scope,
            value,
            printed,
            notes: fields.get(10).map(|s| s.to_string()).unwrap_or_default(),
        });
    }
    Ok(out)
}

pub fn builtin_dataset() -> Vec<BoundRecord> {
    parse_dataset(BUILTIN_DATASET).expect("shipped dataset parses")
}

/// A disagreement between a computed and a printed entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flag {
    pub source: String,
    pub target: Target,
    pub computed: f64,
    pub printed: String,
}

pub fn flags(records: &[BoundRecord]) -> Vec<Flag> {
    records
        .iter()
        .flat_map(|r| {
            r.cells().into_iter().filter(|c| c.status == CellStatus::Mismatch).map(|c| Flag {
                source: r.source.clone(),
                target: c.target,
                computed: c.computed.unwrap_or(f64::NAN),
                printed: c.printed.map(|p| p.to_string()).unwrap_or_default(),
            })
        })
        .collect()
}

const LEGEND: &str = "\
legend:
  values are upper limits on absolute values, in units of (l_P/hbar)^n
  numbers are shown to 2 significant figures; a printed entry matches when the
    computed value rounded to the printed significant figures equals it
  ~1eN marks an order-of-magnitude entry; it matches when N is floor(log10 x)
    or the nearest integer to log10 x
  ! marks a computed value that disagrees with the printed entry shown in brackets
";

/// Plain-text table with one row per record, parts separated by rules.
pub fn render_table(records: &[BoundRecord]) -> String {
    let header = ["source", "alpha1", "alpha2", "a1+b-1", "a2+b0", "ref", "convention"];
    let mut rows: Vec<(u32, [String; 7])> = Vec::new();
    for r in records {
        let cells = r.cells();
        let col = |t: Target| -> String {
            match cells.iter().find(|c| c.target == t) {
                None => "-".into(),
                Some(c) => match c.status {
                    CellStatus::Mismatch => format!(
                        "{} ! [{}]",
                        c.display(),
                        c.printed.map(|p| p.to_string()).unwrap_or_default()
                    ),
                    CellStatus::NotDerived => format!("- [{}]", c.printed.map(|p| p.to_string()).unwrap_or_default()),
                    _ => c.display(),
                },
            }
        };
        rows.push((
            r.part,
            [
                r.source.clone(),
                col(Target::Alpha1),
                col(Target::Alpha2),
                col(Target::A1B),
                col(Target::A2B),
                r.reference.clone(),
                format!("{} {} {}", r.convention, r.scope.name(), r.value),
            ],
        ));
    }
    let mut widths = header.map(|h| h.chars().count());
    for (_, row) in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let fmt_row = |cells: &[String]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        parts.join(" | ").trim_end().to_string() + "\n"
    };
    let rule = "-".repeat(widths.iter().sum::<usize>() + 3 * (widths.len() - 1)) + "\n";
    let mut out = fmt_row(&header.map(String::from));
    if rows.is_empty() {
        return out;
    }
    out.push_str(&rule.replace('-', "="));
    let mut last_part = None;
    for (part, row) in &rows {
        if last_part.is_some_and(|p| p != *part) {
            out.push_str(&rule);
        }
        last_part = Some(*part);
        out.push_str(&fmt_row(row));
    }
    out.push_str(&rule.replace('-', "="));
    out.push_str(LEGEND);
    let f = flags(records);
    if !f.is_empty() {
        out.push_str("flags:\n");
        for fl in f {
            out.push_str(&format!(
                "  {}: {} computed {} printed {}\n",
                fl.source,
                fl.target.name(),
                sig_fig_string(fl.computed, 3),
                fl.printed
            ));
        }
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    part: u32,
    source: &'a str,
    reference: &'a str,
    convention: Convention,
    scope: Scope,
    value: Value,
    targets: BTreeMap<Target, f64>,
    cells: Vec<Cell>,
    notes: &'a str,
}

/// Machine-readable rows.
pub fn to_json(records: &[BoundRecord]) -> serde_json::Value {
    let rows: Vec<JsonRow> = records
        .iter()
        .map(|r| JsonRow {
            part: r.part,
            source: &r.source,
            reference: &r.reference,
            convention: r.convention,
            scope: r.scope,
            value: r.value,
            targets: r.targets(),
            cells: r.cells(),
            notes: &r.notes,
        })
        .collect();
    serde_json::json!({ "rows": rows, "flags": flags(records) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_has_seventeen_rows_in_five_parts() {
        let d = builtin_dataset();
        assert_eq!(d.len(), 17);
        let parts: std::collections::BTreeSet<u32> = d.iter().map(|r| r.part).collect();
        assert_eq!(parts.into_iter().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn sapphire_row() {
        let t = translate(Convention::Kmm1dBeta, Scope::Any, 5.2e6);
        assert!((t[&Target::Alpha2] - 5.2e6 / 3.0).abs() < 1e-6);
        assert_eq!(t[&Target::A2B], 5.2e6);
    }

    #[test]
    fn cold_atom_adv_row() {
        let t = translate(Convention::AdvAlpha, Scope::OneD, 2.4e14);
        assert!((t[&Target::A2B] / 2.304e29 - 1.0).abs() < 1e-12);
        assert!((t[&Target::Alpha2] / 1.152e29 - 1.0).abs() < 1e-12);
        assert!((t[&Target::A1B] / 4.8e14 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adv_three_dimensional_has_alphas_only() {
        let t = translate(Convention::AdvAlpha, Scope::ThreeD, 1e10);
        assert_eq!(t.keys().copied().collect::<Vec<_>>(), vec![Target::Alpha1, Target::Alpha2]);
    }

    #[test]
    fn exactly_two_flags() {
        let f = flags(&builtin_dataset());
        let got: Vec<(&str, Target)> = f.iter().map(|f| (f.source.as_str(), f.target)).collect();
        assert_eq!(
            got,
            vec![("Cold atom recoil experiment*", Target::Alpha2), ("Torsion pendulum", Target::A2B)]
        );
    }

    #[test]
    fn printed_precision_rules() {
        assert!(agrees(1.0e7, &Value::parse("1e7").unwrap()));
        assert!(agrees(5.0e70 / 3.0, &Value::parse("2e70").unwrap()));
        assert!(!agrees(1.152e29, &Value::parse("1.2e31").unwrap()));
        assert!(agrees(2.0e34, &Value::parse("~1e34").unwrap()));
        assert!(agrees(4.0e34, &Value::parse("~1e34").unwrap()));
        assert!(agrees(1e51 / 3.0, &Value::parse("~1e51").unwrap()));
        assert!(!agrees(1e51, &Value::parse("~1e-51").unwrap()));
        assert_eq!(Value::parse("2.23e34").unwrap().sig_figs, 3);
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = render_table(&[]);
        assert_eq!(t.lines().count(), 1);
        assert!(t.starts_with("source"));
    }

    #[test]
    fn charmonium_alpha2_rendered_as_magnitude() {
        let d = builtin_dataset();
        let row = d.iter().find(|r| r.source.starts_with("Ground state")).unwrap();
        let cell = row.cells().into_iter().find(|c| c.target == Target::Alpha2).unwrap();
        assert_eq!(cell.display(), "~1e34");
        assert_eq!(cell.status, CellStatus::Match);
    }

    #[test]
    fn unknown_convention() {
        assert!(matches!("KMM2D".parse::<Convention>(), Err(Error::UnknownConvention(_))));
        assert_eq!("ADV-α₀".parse::<Convention>().unwrap(), Convention::AdvAlpha);
    }

    #[test]
    fn dataset_errors_carry_line() {
        let e = parse_dataset("# c\n1 | x | r | KMM1D-beta0 | any | -3 | - | - | - | - |\n").unwrap_err();
        assert!(matches!(e, Error::Dataset { line: 2, .. }), "{e}");
    }
}
