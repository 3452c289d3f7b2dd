#![allow(dead_code)]

use std::sync::Arc;

use igup::poly::{rat, Monomial};
use igup::{MomentumSeries, ParamSymbol, PolyCoeff, SymbolTable};
use rand::Rng;

/// `alpha` of weight 1 and `beta` of weight 2.
pub fn table() -> Arc<SymbolTable> {
    SymbolTable::new(vec![ParamSymbol::new("alpha", 1), ParamSymbol::new("beta", 2)]).unwrap()
}

/// Monomials `alpha^(k-2j) beta^j` of weight `k`.
pub fn monomials(k: u32) -> Vec<Monomial> {
    (0..=k / 2).map(|j| Monomial::from_exponents(vec![k - 2 * j, j])).collect()
}

/// Unit-constant graded series whose coefficients are small rationals drawn
/// from `ints`, reused cyclically.
pub fn graded_from_ints(table: &Arc<SymbolTable>, ints: &[i64], order: i32) -> MomentumSeries {
    let mut terms = vec![(0, PolyCoeff::one())];
    let mut i = 0;
    let mut next = || {
        let v = if ints.is_empty() { 0 } else { ints[i % ints.len()] };
        i += 1;
        v
    };
    for k in 1..=order {
        let mut c = PolyCoeff::zero();
        for m in monomials(k as u32) {
            let num = next();
            let den = 1 + next().rem_euclid(3);
            c.add_term(m, rat(num, den));
        }
        terms.push((k, c));
    }
    MomentumSeries::from_terms(table.clone(), terms, order).unwrap()
}

pub fn random_graded(rng: &mut impl Rng, table: &Arc<SymbolTable>, order: i32) -> MomentumSeries {
    let ints: Vec<i64> = (0..4 * (order.max(1) as usize + 1) * (order.max(1) as usize + 1))
        .map(|_| rng.gen_range(-3..=3))
        .collect();
    graded_from_ints(table, &ints, order)
}
