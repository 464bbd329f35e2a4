//! Expansion of an [`Expr`] into a truncated series.

use std::collections::HashMap;

use super::parse::Expr;
use crate::error::{Error, Result};
use crate::series::{FormalSeries, HbarSeries, Mono, Scalar, VarSet};

/// Largest total degree (ħ counted twice) allowed while expanding.
const MAX_EXPANSION_DEGREE: u32 = 255;

type Poly = HashMap<(u32, Mono), Scalar>;

/// Result of lowering: the series plus diagnostics for terms that did not fit.
#[derive(Clone, Debug)]
pub struct Lowered {
    pub value: HbarSeries,
    pub uses_hbar: bool,
    pub warnings: Vec<String>,
}

impl Lowered {
    /// The ħ⁰ part, refusing expressions that mention `hbar`.
    pub fn into_formal(self) -> Result<FormalSeries> {
        if self.uses_hbar {
            return Err(Error::Invalid("`hbar` is not allowed in this expression".into()));
        }
        Ok(self.value.coeff(0).clone())
    }
}

fn weight(k: &(u32, Mono)) -> u32 {
    k.1.degree() + 2 * k.0
}

fn add_into(acc: &mut Poly, k: (u32, Mono), c: Scalar) {
    use std::collections::hash_map::Entry;
    match acc.entry(k) {
        Entry::Occupied(mut e) => {
            *e.get_mut() += &c;
            if e.get().is_zero() {
                e.remove();
            }
        }
        Entry::Vacant(e) => {
            if !c.is_zero() {
                e.insert(c);
            }
        }
    }
}

fn mul(a: &Poly, b: &Poly) -> Result<Poly> {
    let mut out = Poly::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            if weight(ka) + weight(kb) > MAX_EXPANSION_DEGREE {
                return Err(Error::Invalid(format!("expression degree exceeds {MAX_EXPANSION_DEGREE}")));
            }
            add_into(&mut out, (ka.0 + kb.0, ka.1.mul(kb.1)), ca * cb);
        }
    }
    Ok(out)
}

fn expand(e: &Expr, vars: &VarSet) -> Result<Poly> {
    let single = |k: (u32, Mono), c: Scalar| {
        let mut p = Poly::new();
        add_into(&mut p, k, c);
        p
    };
    Ok(match e {
        Expr::Num(c) => single((0, Mono::ONE), c.clone()),
        Expr::Hbar => single((1, Mono::ONE), Scalar::one()),
        Expr::Var(v) => {
            let i = vars.index_of(*v).ok_or_else(|| Error::UnknownVariable(v.to_string()))?;
            single((0, Mono::unit(i)), Scalar::one())
        }
        Expr::Neg(inner) => expand(inner, vars)?.into_iter().map(|(k, c)| (k, -c)).collect(),
        Expr::Sum(items) => {
            let mut acc = Poly::new();
            for it in items {
                for (k, c) in expand(it, vars)? {
                    add_into(&mut acc, k, c);
                }
            }
            acc
        }
        Expr::Product(items) => {
            let mut acc = single((0, Mono::ONE), Scalar::one());
            for it in items {
                acc = mul(&acc, &expand(it, vars)?)?;
            }
            acc
        }
        Expr::Div(inner, d) => {
            let inv = Scalar::real(d.recip());
            expand(inner, vars)?.into_iter().map(|(k, c)| (k, &c * &inv)).collect()
        }
        Expr::Pow(inner, n) => {
            let base = expand(inner, vars)?;
            let mut acc = single((0, Mono::ONE), Scalar::one());
            for _ in 0..*n {
                acc = mul(&acc, &base)?;
            }
            acc
        }
    })
}

/// Expands `e` over `vars` with weighted truncation `trunc` and ħ-order at most
/// `hbar_order` (further capped at `trunc / 2`). Terms beyond either bound are
/// dropped and reported in `warnings`.
pub fn lower(e: &Expr, vars: &VarSet, trunc: u32, hbar_order: u32) -> Result<Lowered> {
    let poly = expand(e, vars)?;
    let order = HbarSeries::max_order(trunc, hbar_order);
    let mut value = HbarSeries::zero(vars, trunc, order);
    let mut dropped = 0usize;
    for ((j, m), c) in poly {
        if j > order || weight(&(j, m)) > trunc {
            dropped += 1;
        } else {
            value.add_term(j as usize, m, c);
        }
    }
    let mut warnings = Vec::new();
    if dropped > 0 {
        warnings.push(format!(
            "dropped {dropped} term(s) beyond truncation {trunc} (hbar order {order}, hbar counts as degree 2)"
        ));
    }
    Ok(Lowered { value, uses_hbar: e.contains_hbar(), warnings })
}

/// Parses and lowers in one step.
pub fn parse_series(text: &str, vars: &VarSet, trunc: u32, hbar_order: u32) -> Result<Lowered> {
    lower(&super::parse::parse(text, vars)?, vars, trunc, hbar_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Var;

    #[test]
    fn square_expands() {
        let vs = VarSet::positions(1);
        let l = parse_series("(1+x1)^2", &vs, 4, 0).unwrap();
        assert!(l.warnings.is_empty());
        let s = l.into_formal().unwrap();
        assert_eq!(s.coeff_of(&[0]), Scalar::one());
        assert_eq!(s.coeff_of(&[1]), Scalar::from(2));
        assert_eq!(s.coeff_of(&[2]), Scalar::one());
    }

    #[test]
    fn hbar_is_separated() {
        let vs = VarSet::phase_space(1, 1);
        let l = parse_series("hbar*p1 + x1", &vs, 4, 2).unwrap();
        assert!(l.uses_hbar);
        assert_eq!(l.value.coeff(0), &FormalSeries::var(&vs, 4, Var::x(1)).unwrap());
        assert_eq!(l.value.coeff(1), &FormalSeries::var(&vs, 2, Var::p(1)).unwrap());
        assert!(l.into_formal().is_err());
    }

    #[test]
    fn overflow_warns() {
        let vs = VarSet::positions(1);
        let l = parse_series("(1+x1)^3", &vs, 2, 0).unwrap();
        assert_eq!(l.warnings.len(), 1);
        let s = l.into_formal().unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.coeff_of(&[2]), Scalar::from(3));
    }

    #[test]
    fn cancellation_is_not_a_drop() {
        let vs = VarSet::positions(1);
        let l = parse_series("x1^3 - x1^3 + 1/2", &vs, 2, 0).unwrap();
        assert!(l.warnings.is_empty());
        assert_eq!(l.into_formal().unwrap().constant_term(), Scalar::ratio(1, 2));
    }

    #[test]
    fn huge_degree_is_an_error() {
        let vs = VarSet::positions(1);
        assert!(parse_series("x1^300", &vs, 2, 0).is_err());
    }
}
