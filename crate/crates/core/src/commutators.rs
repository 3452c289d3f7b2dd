//! Tensor-decomposed commutator expansions.
//!
//! `[x_i, p_j] = iħ [D(p) δ_ij + T(p) p_i p_j / p²]` and
//! `[x_i, x_j] = iħ C(p) ε_ijk L_k` with `L_k = (1/f) ε_ijk x_i p_j`.
//!
//! In the noncommutative representation `x_i = i ħ (f ∂_i + g k_i k_j ∂_j)`
//! with `f = Σ a_n p^n` (`a_0 = 1`) and `g = Σ b_n p^n` starting at `p^-1`.
//! In the commutative representation `p_i = h(ρ) ρ_i` with
//! `h = Σ α_n ρ^n` (`α_0 = 1`).
//!
//! Every `order` argument is a maximum α-weight: `D` and `T` are returned
//! through `p^order`, `C` through `p^(order-2)`.

use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::poly::{int, PolyCoeff, SymbolTable};
use crate::series::MomentumSeries;

/// `iħ [D δ_ij + T p_i p_j / p²]`.
#[derive(Clone, Debug, PartialEq)]
pub struct XPCommutator {
    pub delta: MomentumSeries,
    pub tensor: MomentumSeries,
}

/// `iħ C ε_ijk L_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct XXCommutator {
    pub coeff: MomentumSeries,
}

impl XPCommutator {
    pub fn render(&self) -> String {
        format!(
            "delta: {}\npp: {}\n",
            self.delta.to_canonical_string(),
            self.tensor.to_canonical_string()
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "delta": self.delta.to_json(), "pp": self.tensor.to_json() })
    }
}

impl XXCommutator {
    pub fn render(&self) -> String {
        format!("xx: {}\n", self.coeff.to_canonical_string())
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.coeff.to_json()
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }
}

fn require_order(op: &'static str, s: &MomentumSeries, needed: i32) -> Result<()> {
    if s.order() < needed {
        return Err(Error::InsufficientOrder {
            op,
            needed,
            available: s.order(),
        });
    }
    Ok(())
}

fn require_unit(op: &'static str, s: &MomentumSeries) -> Result<()> {
    if !s.coeff(0).is_one() || !s.coeff(-1).is_zero() {
        return Err(Error::NonUnitConstant {
            op,
            found: s.coeff(0).display(s.table()).to_string(),
        });
    }
    Ok(())
}

/// Validates an `(f, g)` pair: shared table, grading, `a_0 = 1`, and enough
/// terms for the requested weight.
pub fn validate_ab(f: &MomentumSeries, g: &MomentumSeries, order: i32) -> Result<()> {
    if !crate::poly::same_table(f.table(), g.table()) {
        return Err(Error::SymbolTableMismatch);
    }
    require_unit("f", f)?;
    if f.min_power() < 0 {
        return Err(Error::PowerOutOfRange {
            op: "f",
            power: -1,
            allowed: 0,
        });
    }
    f.check_graded(0, "f")?;
    g.check_graded(2, "g")?;
    require_order("f", f, order)?;
    require_order("g", g, order - 2)?;
    Ok(())
}

/// Validates a commutative multiplier series `h`.
pub fn validate_alpha(h: &MomentumSeries, order: i32) -> Result<()> {
    require_unit("h", h)?;
    h.check_graded(0, "h")?;
    require_order("h", h, order)
}

/// `c^(n)_(P−n)`: coefficient of `p^(P−n)` in `A(p)^n` where `A` is the
/// reversion of the multiplier `h`.
pub fn table_coefficient(big_p: i32, n: i32, h: &MomentumSeries) -> Result<PolyCoeff> {
    if n < 0 || n > big_p {
        return Err(Error::IndexOutOfRange(format!("n = {n} with P = {big_p}")));
    }
    require_order("table_coefficient", h, big_p - n)?;
    let a = h.truncate(big_p - n).revert()?;
    Ok(a.pow(n as u32)?.coeff(big_p - n).clone())
}

/// Table of `c^(n)_(P−n)` for `0 <= n <= P <= max_order` over symbols
/// `alpha1..alpha{max_order}`. Row `P` has `P + 1` entries.
pub fn table_one(max_order: i32) -> Result<(Arc<SymbolTable>, Vec<Vec<PolyCoeff>>)> {
    let table = SymbolTable::alphas(max_order.max(0) as usize);
    let h = generic_multiplier(&table, max_order)?;
    let a = h.revert()?;
    let mut rows = Vec::new();
    for big_p in 0..=max_order {
        let row = (0..=big_p)
            .map(|n| Ok(a.pow(n as u32)?.coeff(big_p - n).clone()))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((table, rows))
}

/// `1 + α1 p + α2 p² + …` over a table of `alpha1..alphaN`.
pub fn generic_multiplier(table: &Arc<SymbolTable>, order: i32) -> Result<MomentumSeries> {
    let mut terms = vec![(0, PolyCoeff::one())];
    for k in 1..=order {
        terms.push((k, table.var(&format!("alpha{k}"))?));
    }
    MomentumSeries::from_terms(table.clone(), terms, order)
}

pub fn render_table_one(table: &SymbolTable, rows: &[Vec<PolyCoeff>]) -> String {
    let mut out = String::from("P  n  c^(n)_(P-n)\n");
    for (p, row) in rows.iter().enumerate() {
        for (n, c) in row.iter().enumerate() {
            out.push_str(&format!("{p}  {n}  {}\n", c.display(table)));
        }
    }
    out
}

/// `D = f`, `T` at `p^P` = `b_(P−2)`.
pub fn xp_noncommutative(
    f: &MomentumSeries,
    g: &MomentumSeries,
    order: i32,
) -> Result<XPCommutator> {
    validate_ab(f, g, order)?;
    Ok(XPCommutator {
        delta: f.truncate(order),
        tensor: g.shift(2)?.truncate(order),
    })
}

/// `C` at `p^(P−1)` = `−Σ_{n=0}^{P} a_n [(P−n+1) a_(P−n+1) + (n−1) b_(P−n−1)]`.
pub fn xx_noncommutative(
    f: &MomentumSeries,
    g: &MomentumSeries,
    order: i32,
) -> Result<XXCommutator> {
    validate_ab(f, g, order)?;
    let mut terms = Vec::new();
    for big_p in 0..order {
        let mut acc = PolyCoeff::zero();
        for n in 0..=big_p {
            let an = f.coeff(n);
            if an.is_zero() {
                continue;
            }
            let mut inner = f.coeff(big_p - n + 1).scale(&int((big_p - n + 1) as i64));
            inner += &g.coeff(big_p - n - 1).scale(&int((n - 1) as i64));
            acc -= &(an * &inner);
        }
        terms.push((big_p - 1, acc));
    }
    Ok(XXCommutator {
        coeff: MomentumSeries::from_terms(f.table().clone(), terms, order - 2)?,
    })
}

/// Same `C` from the closed relation `C = g (f − p f') − f f'/p`.
pub fn xx_functional(f: &MomentumSeries, g: &MomentumSeries, order: i32) -> Result<XXCommutator> {
    validate_ab(f, g, order)?;
    let f = f.truncate(order);
    let g = g.truncate(order - 2);
    let df = f.derivative()?;
    let p_df = df.shift(1)?;
    let first = g.mul(&f.sub(&p_df)?)?;
    let second = f.mul(&df)?.shift(-1)?;
    Ok(XXCommutator {
        coeff: first.sub(&second)?.truncate(order - 2),
    })
}

/// `K` in `[x_i, x_j] = iħ K (p_i x_j − p_j x_i)`; related by `C = −f K`.
pub fn xx_position_momentum_basis(
    f: &MomentumSeries,
    g: &MomentumSeries,
    order: i32,
) -> Result<MomentumSeries> {
    let c = xx_noncommutative(f, g, order)?;
    let inv_f = f.truncate(order).reciprocal()?;
    Ok(c.coeff.mul(&inv_f)?.neg().truncate(order - 2))
}

/// `D_P = Σ α_n c^(n)_(P−n)`, `T_P = Σ n α_n c^(n)_(P−n)`.
pub fn xp_commutative(h: &MomentumSeries, order: i32) -> Result<XPCommutator> {
    validate_alpha(h, order)?;
    let h = h.truncate(order);
    let a = h.revert()?;
    let table = h.table().clone();
    let mut delta = vec![PolyCoeff::zero(); order.max(0) as usize + 1];
    let mut tensor = delta.clone();
    let mut a_pow = MomentumSeries::one(table.clone(), order);
    for n in 0..=order {
        if n > 0 {
            a_pow = a_pow.mul(&a)?;
        }
        let alpha_n = h.coeff(n);
        if alpha_n.is_zero() {
            continue;
        }
        for big_p in n..=order {
            let c = a_pow.coeff(big_p - n);
            if c.is_zero() {
                continue;
            }
            let term = alpha_n * c;
            tensor[big_p as usize] += &term.scale(&int(n as i64));
            delta[big_p as usize] += &term;
        }
    }
    Ok(XPCommutator {
        delta: MomentumSeries::from_coeffs(table.clone(), 0, delta, order)?,
        tensor: MomentumSeries::from_coeffs(table, 0, tensor, order)?,
    })
}

/// `D = h(p A)`, `T = (ρ h'(ρ))(p A)` by direct composition.
pub fn xp_commutative_by_composition(h: &MomentumSeries, order: i32) -> Result<XPCommutator> {
    validate_alpha(h, order)?;
    let h = h.truncate(order);
    let a = h.revert()?;
    let rho_dh = h.derivative()?.shift(1)?;
    Ok(XPCommutator {
        delta: h.compose(&a)?.truncate(order),
        tensor: rho_dh.compose(&a)?.truncate(order),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutativityReport {
    pub commutative: bool,
    /// First nonvanishing `C` coefficient as `(power, coefficient)`.
    pub witness: Option<(i32, PolyCoeff)>,
    pub table: Arc<SymbolTable>,
    pub order: i32,
}

impl CommutativityReport {
    pub fn render(&self) -> String {
        match &self.witness {
            None => format!("commutative: true (through weight {})\n", self.order),
            Some((k, c)) => format!(
                "commutative: false\nwitness: p^{k}: {}\n",
                c.display(&self.table)
            ),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "commutative": self.commutative,
            "order": self.order,
            "witness": self.witness.as_ref().map(|(k, c)| json!({
                "power": k,
                "coeff": c.display(&self.table).to_string(),
            })),
        })
    }
}

pub fn commutativity_check(
    f: &MomentumSeries,
    g: &MomentumSeries,
    order: i32,
) -> Result<CommutativityReport> {
    let c = xx_noncommutative(f, g, order)?;
    let witness = c
        .coeff
        .iter()
        .find(|(_, x)| !x.is_zero())
        .map(|(k, x)| (k, x.clone()));
    Ok(CommutativityReport {
        commutative: witness.is_none(),
        witness,
        table: f.table().clone(),
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, ParamSymbol};

    fn kempf() -> (MomentumSeries, MomentumSeries, PolyCoeff, PolyCoeff) {
        let t = SymbolTable::new(vec![ParamSymbol::new("beta", 2), ParamSymbol::new("betap", 2)]).unwrap();
        let b = t.var("beta").unwrap();
        let bp = t.var("betap").unwrap();
        let f = MomentumSeries::from_terms(t.clone(), [(0, PolyCoeff::one()), (2, b.clone())], 6).unwrap();
        let g = MomentumSeries::from_terms(t, [(0, bp.clone())], 4).unwrap();
        (f, g, b, bp)
    }

    fn adv(order: i32) -> (MomentumSeries, MomentumSeries, PolyCoeff) {
        let t = SymbolTable::new(vec![ParamSymbol::new("alpha", 1)]).unwrap();
        let a = t.var("alpha").unwrap();
        let f = MomentumSeries::from_terms(
            t.clone(),
            [(0, PolyCoeff::one()), (1, -&a), (2, a.pow(2))],
            order,
        )
        .unwrap();
        let g = MomentumSeries::from_terms(t, [(-1, -&a), (0, a.pow(2).scale(&int(3)))], order - 2).unwrap();
        (f, g, a)
    }

    #[test]
    fn table_entries() {
        let (t, rows) = table_one(4).unwrap();
        let a1 = t.var("alpha1").unwrap();
        let a2 = t.var("alpha2").unwrap();
        assert_eq!(rows[2][1], -&a1);
        assert_eq!(rows[4][2], &a1.pow(2).scale(&int(5)) - &a2.scale(&int(2)));
        assert_eq!(rows[3][3], PolyCoeff::one());
        assert!(rows[3][0].is_zero());
        assert_eq!(rows[0][0], PolyCoeff::one());
        let h = generic_multiplier(&t, 4).unwrap();
        assert_eq!(table_coefficient(4, 2, &h).unwrap(), rows[4][2]);
        assert!(matches!(table_coefficient(2, 3, &h), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn kempf_xp_and_xx() {
        let (f, g, b, bp) = kempf();
        let xp = xp_noncommutative(&f, &g, 4).unwrap();
        assert_eq!(xp.delta, f.truncate(4));
        assert_eq!(xp.tensor.coeff(2), &bp);
        assert!(xp.tensor.coeff(0).is_zero() && xp.tensor.coeff(4).is_zero());
        let xx = xx_noncommutative(&f, &g, 4).unwrap();
        let lead = &b.scale(&int(2)) - &bp;
        assert_eq!(xx.coeff.coeff(0), &-&lead);
        // −(2β + β′)β at p^2
        assert_eq!(xx.coeff.coeff(2), &-&(&(&b.scale(&int(2)) + &bp) * &b));
    }

    #[test]
    fn kempf_position_momentum_basis() {
        let (f, g, b, bp) = kempf();
        // K (1 + βp²) = (2β − β′) + (2β + β′)βp²
        let k = xx_position_momentum_basis(&f, &g, 6).unwrap();
        let num = k.mul(&f).unwrap();
        assert_eq!(num.coeff(0), &(&b.scale(&int(2)) - &bp));
        assert_eq!(num.coeff(2), &(&(&b.scale(&int(2)) + &bp) * &b));
        assert!(num.coeff(4).is_zero());
    }

    #[test]
    fn kempf_at_twice_beta_commutes_to_first_order() {
        let (f, _, b, _) = kempf();
        let g = MomentumSeries::from_terms(f.table().clone(), [(0, b.scale(&int(2)))], 4).unwrap();
        let r = commutativity_check(&f, &g, 2).unwrap();
        assert!(r.commutative);
        let r = commutativity_check(&f, &g, 4).unwrap();
        assert_eq!(r.witness.unwrap().0, 2);
    }

    #[test]
    fn kempf_generic_witness() {
        let (f, g, b, bp) = kempf();
        let r = commutativity_check(&f, &g, 4).unwrap();
        assert!(!r.commutative);
        let (k, c) = r.witness.unwrap();
        assert_eq!(k, 0);
        assert_eq!(c, -&(&b.scale(&int(2)) - &bp));
    }

    #[test]
    fn adv_commutes_through_second_order() {
        let (f, g, a) = adv(4);
        assert!(commutativity_check(&f, &g, 2).unwrap().commutative);
        let xx = xx_noncommutative(&f, &g, 4).unwrap();
        assert_eq!(xx.coeff.coeff(1), &a.pow(3).scale(&int(4)));
        assert_eq!(xx.coeff.coeff(2), &a.pow(4).scale(&int(-5)));
    }

    #[test]
    fn functional_route_agrees() {
        let (f, g, _, _) = kempf();
        assert_eq!(xx_functional(&f, &g, 6).unwrap(), xx_noncommutative(&f, &g, 6).unwrap());
        let (f, g, _) = adv(6);
        assert_eq!(xx_functional(&f, &g, 6).unwrap(), xx_noncommutative(&f, &g, 6).unwrap());
    }

    #[test]
    fn commutative_second_order() {
        let t = SymbolTable::alphas(2);
        let h = generic_multiplier(&t, 2).unwrap();
        let xp = xp_commutative(&h, 2).unwrap();
        let a1 = t.var("alpha1").unwrap();
        let a2 = t.var("alpha2").unwrap();
        assert_eq!(xp.delta.coeff(1), &a1);
        assert_eq!(xp.delta.coeff(2), &(&a2 - &a1.pow(2)));
        assert_eq!(xp.tensor.coeff(1), &a1);
        assert_eq!(xp.tensor.coeff(2), &(&a2.scale(&int(2)) - &a1.pow(2)));
        assert_eq!(xp, xp_commutative_by_composition(&h, 2).unwrap());
    }

    #[test]
    fn adv_from_commutative_alphas() {
        let (f, g, a) = adv(2);
        let h = MomentumSeries::from_terms(
            f.table().clone(),
            [(0, PolyCoeff::one()), (1, -&a), (2, a.pow(2).scale(&int(2)))],
            2,
        )
        .unwrap();
        let xp = xp_commutative(&h, 2).unwrap();
        assert_eq!(xp, xp_noncommutative(&f, &g, 2).unwrap());
    }

    #[test]
    fn canonical_is_trivial() {
        let t = SymbolTable::empty();
        let f = MomentumSeries::one(t.clone(), 4);
        let g = MomentumSeries::zero(t, 2);
        let xp = xp_noncommutative(&f, &g, 4).unwrap();
        assert_eq!(xp.render(), "delta: 1/1*p^0 + O(p^5)\npp: 0 + O(p^5)\n");
        assert!(xx_noncommutative(&f, &g, 4).unwrap().is_zero());
        assert!(xp_commutative(&f, 4).unwrap().tensor.is_zero());
    }

    #[test]
    fn input_validation() {
        let (f, g, b, _) = kempf();
        assert!(matches!(
            xp_noncommutative(&f, &g, 8),
            Err(Error::InsufficientOrder { .. })
        ));
        let bad = MomentumSeries::from_terms(f.table().clone(), [(0, PolyCoeff::one()), (1, b)], 4).unwrap();
        assert!(matches!(xp_noncommutative(&bad, &g, 4), Err(Error::Grading { .. })));
        let two = f.scale(&rat(2, 1).into());
        assert!(matches!(xp_noncommutative(&two, &g, 4), Err(Error::NonUnitConstant { .. })));
    }
}
