//! Conversions between the `a`/`b`, `α` and 1D-generator descriptions.

use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::commutators::{validate_alpha, xp_commutative, XPCommutator};
use crate::error::{Error, Result};
use crate::poly::{int, PolyCoeff, Rational, SymbolTable};
use crate::series::MomentumSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    AlphaToA,
    AlphaToB,
    AToAlpha,
}

impl Direction {
    fn label(self) -> &'static str {
        match self {
            Direction::AlphaToA => "a",
            Direction::AlphaToB => "b",
            Direction::AToAlpha => "alpha",
        }
    }
}

/// Labeled coefficient table produced by a conversion. Entry `P` depends
/// only on inputs of index `<= P`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyMap {
    pub direction: Direction,
    pub order: i32,
    pub entries: Vec<(i32, PolyCoeff)>,
    pub table: Arc<SymbolTable>,
}

impl FamilyMap {
    fn from_series(direction: Direction, order: i32, s: &MomentumSeries, from: i32) -> Self {
        FamilyMap {
            direction,
            order,
            entries: (from..=s.order()).map(|k| (k, s.coeff(k).clone())).collect(),
            table: s.table().clone(),
        }
    }

    pub fn get(&self, index: i32) -> Option<&PolyCoeff> {
        self.entries.iter().find(|(k, _)| *k == index).map(|(_, c)| c)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "family": self.direction.label(),
            "order": self.order,
            "entries": self.entries.iter().map(|(k, c)| json!({
                "index": k,
                "coeff": c.display(&self.table).to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for FamilyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = self.direction.label();
        for (k, c) in &self.entries {
            writeln!(f, "{label}[{k}] = {}", c.display(&self.table))?;
        }
        Ok(())
    }
}

/// `f` with `a_P = Σ_{n=0}^{P} α_n c^(n)_(P−n)`.
pub fn alpha_to_a(h: &MomentumSeries, order: i32) -> Result<MomentumSeries> {
    Ok(xp_commutative(h, order)?.delta)
}

/// `g` with `b_(P−2) = Σ n α_n c^(n)_(P−n)`, starting at `b_-1`.
pub fn alpha_to_b(h: &MomentumSeries, order: i32) -> Result<MomentumSeries> {
    xp_commutative(h, order)?.tensor.shift(-2)
}

pub fn alpha_to_a_map(h: &MomentumSeries, order: i32) -> Result<FamilyMap> {
    Ok(FamilyMap::from_series(Direction::AlphaToA, order, &alpha_to_a(h, order)?, 1))
}

pub fn alpha_to_b_map(h: &MomentumSeries, order: i32) -> Result<FamilyMap> {
    Ok(FamilyMap::from_series(Direction::AlphaToB, order, &alpha_to_b(h, order)?, -1))
}

pub fn a_to_alpha_map(f: &MomentumSeries, order: i32) -> Result<FamilyMap> {
    Ok(FamilyMap::from_series(Direction::AToAlpha, order, &a_to_alpha(f, order)?, 1))
}

/// Solves `Σ_n w(n) α_n c^(n)_(P−n) = target_P` order by order, where the
/// weight of the leading `α_P` term is `w(P)`.
fn solve_triangular(
    target: &MomentumSeries,
    order: i32,
    weight: impl Fn(i32) -> Rational,
    value: impl Fn(&XPCommutator, i32) -> PolyCoeff,
) -> Result<MomentumSeries> {
    let table = target.table().clone();
    let mut alphas = vec![PolyCoeff::one()];
    for big_p in 1..=order {
        // α_P = 0 for now; its contribution is w(P) α_P exactly.
        let mut trial = alphas.clone();
        trial.push(PolyCoeff::zero());
        let h = MomentumSeries::from_coeffs(table.clone(), 0, trial, big_p)?;
        let xp = xp_commutative(&h, big_p)?;
        let rest = value(&xp, big_p);
        let lead = weight(big_p);
        alphas.push((target.coeff(big_p) - &rest).scale(&lead.recip()));
    }
    MomentumSeries::from_coeffs(table, 0, alphas, order)
}

/// Inverts [`alpha_to_a`]: the unique `h` whose `a`-series is `f`.
pub fn a_to_alpha(f: &MomentumSeries, order: i32) -> Result<MomentumSeries> {
    validate_alpha(f, order).map_err(rename("f"))?;
    solve_triangular(f, order, |_| int(1), |xp, p| xp.delta.coeff(p).clone())
}

fn rename(what: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonUnitConstant { found, .. } => Error::NonUnitConstant { op: what, found },
        Error::InsufficientOrder { needed, available, .. } => Error::InsufficientOrder {
            op: what,
            needed,
            available,
        },
        Error::Grading { power, expected, found, .. } => Error::Grading {
            what: what.to_string(),
            power,
            expected,
            found,
        },
        other => other,
    }
}

/// 1D generator `F = D + T`, i.e. `F_P = a_P + b_(P−2)`.
pub fn reduce_1d(xp: &XPCommutator) -> Result<MomentumSeries> {
    xp.delta.add(&xp.tensor)
}

/// The unique commutative 3D model reducing to a given `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutativeExtension {
    /// Multiplier `h` (the `α` family).
    pub h: MomentumSeries,
    /// `f = p / ∫ F⁻¹ dp`.
    pub f: MomentumSeries,
    /// `g` from the `α` family.
    pub g: MomentumSeries,
}

impl CommutativeExtension {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in 1..=self.h.order() {
            out.push_str(&format!("alpha[{k}] = {}\n", self.h.coeff(k).display(self.h.table())));
        }
        out.push_str(&format!("f: {}\n", self.f.to_canonical_string()));
        out.push_str(&format!("g: {}\n", self.g.to_canonical_string()));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "h": self.h.to_json(), "f": self.f.to_json(), "g": self.g.to_json() })
    }
}

/// Solves `Σ (1+n) α_n c^(n)_(P−n) = F_P` and cross-checks against the
/// integral formula `f = p / ∫ F⁻¹ dp`.
pub fn extend_1d_commutative(big_f: &MomentumSeries, order: i32) -> Result<CommutativeExtension> {
    validate_alpha(big_f, order).map_err(rename("F"))?;
    let big_f = big_f.truncate(order);
    let h = solve_triangular(
        &big_f,
        order,
        |p| int(1 + p as i64),
        |xp, p| xp.delta.coeff(p) + xp.tensor.coeff(p),
    )?;
    let xp = xp_commutative(&h, order)?;
    let f_integral = big_f
        .reciprocal()?
        .antiderivative()?
        .shift(-1)?
        .reciprocal()?
        .truncate(order);
    if f_integral != xp.delta {
        return Err(Error::CrossCheck(format!(
            "integral formula gives {} but the alpha solution gives {}",
            f_integral, xp.delta
        )));
    }
    if reduce_1d(&xp)? != big_f {
        return Err(Error::CrossCheck("commutative extension does not reduce to F".into()));
    }
    Ok(CommutativeExtension {
        h,
        f: f_integral,
        g: xp.tensor.shift(-2)?,
    })
}

/// Noncommutative family member `D = f`, `T = F − f`.
pub fn extend_1d_noncommutative(
    big_f: &MomentumSeries,
    f: &MomentumSeries,
) -> Result<XPCommutator> {
    for (name, s) in [("F", big_f), ("f", f)] {
        if !s.coeff(0).is_one() || !s.coeff(-1).is_zero() {
            return Err(Error::NonUnitConstant {
                op: name,
                found: s.coeff(0).display(s.table()).to_string(),
            });
        }
    }
    let order = big_f.order().min(f.order());
    let f = f.truncate(order);
    let tensor = big_f.truncate(order).sub(&f)?;
    Ok(XPCommutator { delta: f, tensor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutators::generic_multiplier;
    use crate::poly::{rat, ParamSymbol};
    use crate::text::parse_series;

    fn beta_table() -> Arc<SymbolTable> {
        SymbolTable::new(vec![ParamSymbol::new("beta", 2), ParamSymbol::new("alpha", 1)]).unwrap()
    }

    #[test]
    fn listed_a_and_b_formulas() {
        let t = SymbolTable::alphas(4);
        let h = generic_multiplier(&t, 4).unwrap();
        let v = |s: &str| parse_series(s, &t, 0).unwrap().coeff(0).clone();
        let a = alpha_to_a(&h, 4).unwrap();
        assert_eq!(a.coeff(1), &v("alpha1"));
        assert_eq!(a.coeff(2), &v("alpha2 - alpha1^2"));
        assert_eq!(a.coeff(3), &v("alpha3 - 3*alpha2*alpha1 + 2*alpha1^3"));
        assert_eq!(
            a.coeff(4),
            &v("alpha4 - 4*alpha3*alpha1 - 2*alpha2^2 + 10*alpha2*alpha1^2 - 5*alpha1^4")
        );
        let b = alpha_to_b(&h, 4).unwrap();
        assert_eq!(b.coeff(-1), &v("alpha1"));
        assert_eq!(b.coeff(0), &v("2*alpha2 - alpha1^2"));
        assert_eq!(b.coeff(1), &v("3*alpha3 - 5*alpha2*alpha1 + 2*alpha1^3"));
        assert_eq!(
            b.coeff(2),
            &v("4*alpha4 - 10*alpha3*alpha1 - 4*alpha2^2 + 15*alpha2*alpha1^2 - 5*alpha1^4")
        );
    }

    #[test]
    fn a_to_alpha_examples() {
        let t = beta_table();
        let f = parse_series("1 + beta*p^2", &t, 4).unwrap();
        let h = a_to_alpha(&f, 4).unwrap();
        assert_eq!(h.coeff(2), &t.var("beta").unwrap());
        assert!(h.coeff(1).is_zero());
        assert_eq!(alpha_to_a(&h, 4).unwrap(), f);
        let f = parse_series("1 - alpha*p + alpha^2*p^2", &t, 2).unwrap();
        let h = a_to_alpha(&f, 2).unwrap();
        assert_eq!(h, parse_series("1 - alpha*p + 2*alpha^2*p^2", &t, 2).unwrap());
        let one = MomentumSeries::one(t.clone(), 3);
        assert_eq!(a_to_alpha(&one, 3).unwrap(), one);
        let two = parse_series("2 + beta*p^2", &t, 2).unwrap();
        assert!(matches!(a_to_alpha(&two, 2), Err(Error::NonUnitConstant { op: "f", .. })));
    }

    #[test]
    fn a_to_alpha_matches_reversion_oracle() {
        // D = h(ρ(p)) = f gives ρ = p/f, so h is the reversion of 1/f.
        let t = SymbolTable::new((1..=5).map(|k| ParamSymbol::new(format!("a{k}"), k)).collect()).unwrap();
        let mut terms = vec![(0, PolyCoeff::one())];
        for k in 1..=5 {
            terms.push((k, t.var(&format!("a{k}")).unwrap()));
        }
        let f = MomentumSeries::from_terms(t, terms, 5).unwrap();
        let oracle = f.reciprocal().unwrap().revert().unwrap();
        assert_eq!(a_to_alpha(&f, 5).unwrap(), oracle);
    }

    #[test]
    fn kmm_commutative_extension() {
        let t = beta_table();
        let big_f = parse_series("1 + beta*p^2", &t, 4).unwrap();
        let ext = extend_1d_commutative(&big_f, 4).unwrap();
        let b = t.var("beta").unwrap();
        assert_eq!(ext.h.coeff(2), &b.scale(&rat(1, 3)));
        assert_eq!(ext.h.coeff(4), &b.pow(2).scale(&rat(2, 15)));
        assert_eq!(ext.f, parse_series("1 + beta*p^2/3 - 4/45*beta^2*p^4", &t, 4).unwrap());
        // closed form √β p / atan(√β p)
        assert_eq!(ext.f, parse_series("1/atanc(beta*p^2)", &t, 4).unwrap());
    }

    #[test]
    fn adv_and_pedram_extensions() {
        let t = beta_table();
        let ext = extend_1d_commutative(&parse_series("1 - 2*alpha*p + 4*alpha^2*p^2", &t, 2).unwrap(), 2).unwrap();
        assert_eq!(ext.h, parse_series("1 - alpha*p + 2*alpha^2*p^2", &t, 2).unwrap());
        let ext = extend_1d_commutative(&parse_series("1/(1 - beta*p^2)", &t, 6).unwrap(), 6).unwrap();
        let b = t.var("beta").unwrap();
        assert_eq!(ext.h.coeff(2), &b.scale(&rat(1, 3)));
        assert_eq!(ext.h.coeff(4), &b.pow(2).scale(&rat(1, 3)));
        assert_eq!(ext.h.coeff(6), &b.pow(3).scale(&rat(4, 9)));
        assert_eq!(ext.f, parse_series("1/(1 - beta*p^2/3)", &t, 6).unwrap());
    }

    #[test]
    fn noncommutative_family() {
        let t = beta_table();
        let big_f = parse_series("1 + beta*p^2", &t, 4).unwrap();
        let one = MomentumSeries::one(t.clone(), 4);
        let xp = extend_1d_noncommutative(&big_f, &one).unwrap();
        assert_eq!(xp.tensor, parse_series("beta*p^2", &t, 4).unwrap());
        assert_eq!(reduce_1d(&xp).unwrap(), big_f);
        let same = extend_1d_noncommutative(&big_f, &big_f).unwrap();
        assert!(same.tensor.is_zero());
        let big_f = parse_series("1/(1 - beta*p^2)", &t, 6).unwrap();
        let f = parse_series("1/(1 - beta*p^2/3)", &t, 6).unwrap();
        let xp = extend_1d_noncommutative(&big_f, &f).unwrap();
        assert_eq!(reduce_1d(&xp).unwrap(), big_f);
        assert!(extend_1d_noncommutative(&big_f, &f.scale(&int(2).into())).is_err());
    }

    #[test]
    fn family_map_rendering() {
        let t = SymbolTable::alphas(2);
        let h = generic_multiplier(&t, 2).unwrap();
        let m = alpha_to_b_map(&h, 2).unwrap();
        assert_eq!(m.to_string(), "b[-1] = alpha1\nb[0] = -alpha1^2 + 2*alpha2\n");
        assert_eq!(m.get(0).unwrap(), &parse_series("2*alpha2 - alpha1^2", &t, 0).unwrap().coeff(0).clone());
    }
}
