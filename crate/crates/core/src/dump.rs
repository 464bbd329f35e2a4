//! Structured JSON dumps.
//!
//! A term is `[[e1, .., en], [num, den, num_i, den_i]]`: the exponent vector over
//! `vars` and the reduced Gaussian-rational coefficient. Integers are written as
//! JSON numbers of arbitrary length. Terms appear in canonical monomial order.
//!
//! ```text
//! series:    {"vars": [..], "truncation": N, "terms": [..]}
//! hbar:      {"vars": [..], "truncation": N, "order": K, "coeffs": {"0": [..], ..}}
//! genfun:    {"vars": [..], "dims": [k, l], "truncation": N, "exact": b,
//!             "core": [[..], ..], "f": [..]}
//! enhanced:  genfun fields plus "amplitude": {"0": [..], "1": [..], ..}
//! ```
//! `core` entries are over `x1..xl`; `f` and the amplitude over `p1..pk, x1..xl`.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::Number;

use crate::calculus::Enhanced;
use crate::error::{Error, Result};
use crate::genfun::GenFun;
use crate::series::{FormalSeries, HbarSeries, Mono, Scalar, VarSet};

pub type Term = (Vec<u32>, [Number; 4]);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDump {
    pub vars: Vec<String>,
    pub truncation: u32,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HbarDump {
    pub vars: Vec<String>,
    pub truncation: u32,
    pub order: u32,
    pub coeffs: BTreeMap<u32, Vec<Term>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenFunDump {
    pub vars: Vec<String>,
    pub dims: [usize; 2],
    pub truncation: u32,
    pub exact: bool,
    pub core: Vec<Vec<Term>>,
    pub f: Vec<Term>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub amplitude: Option<BTreeMap<u32, Vec<Term>>>,
}

fn var_names(vs: &VarSet) -> Vec<String> {
    vs.vars().iter().map(|v| v.to_string()).collect()
}

fn num(n: &BigInt) -> Number {
    Number::from_str(&n.to_string()).expect("integer literal")
}

fn terms(s: &FormalSeries) -> Vec<Term> {
    let n = s.vars().len();
    s.terms().iter().map(|(m, c)| (m.exps(n), c.parts().map(|p| num(&p)))).collect()
}

fn read_terms(vs: &VarSet, trunc: u32, ts: &[Term]) -> Result<FormalSeries> {
    let mut s = FormalSeries::zero(vs, trunc);
    for (exps, parts) in ts {
        if exps.len() != vs.len() {
            return Err(Error::Dimension(format!("exponent vector {exps:?} does not match {} variables", vs.len())));
        }
        if exps.iter().any(|&e| e > u8::MAX as u32) {
            return Err(Error::Invalid(format!("exponent vector {exps:?} out of range")));
        }
        let ints: Vec<BigInt> = parts
            .iter()
            .map(|p| BigInt::from_str(&p.to_string()).map_err(|_| Error::Invalid(format!("coefficient part `{p}` is not an integer"))))
            .collect::<Result<_>>()?;
        let c = Scalar::from_parts([ints[0].clone(), ints[1].clone(), ints[2].clone(), ints[3].clone()])
            .ok_or_else(|| Error::Invalid(format!("zero denominator in {parts:?}")))?;
        s.add_term(Mono::from_exps(exps), c);
    }
    Ok(s)
}

fn check_vars(found: &[String], vs: &VarSet) -> Result<()> {
    if found != var_names(vs).as_slice() {
        return Err(Error::Dimension(format!("dump lists variables {found:?}, expected {:?}", var_names(vs))));
    }
    Ok(())
}

fn coeff_map(s: &HbarSeries) -> BTreeMap<u32, Vec<Term>> {
    s.coeffs().iter().enumerate().map(|(j, c)| (j as u32, terms(c))).collect()
}

fn read_coeffs(vs: &VarSet, trunc: u32, order: u32, m: &BTreeMap<u32, Vec<Term>>) -> Result<HbarSeries> {
    if let Some(j) = m.keys().find(|&&j| j > order || 2 * j > trunc) {
        return Err(Error::Invalid(format!("hbar power {j} exceeds order {order} at truncation {trunc}")));
    }
    let coeffs = (0..=order.min(trunc / 2))
        .map(|j| read_terms(vs, trunc - 2 * j, m.get(&j).map_or(&[][..], |v| v.as_slice())))
        .collect::<Result<Vec<_>>>()?;
    HbarSeries::from_coeffs(vs, trunc, coeffs)
}

pub fn series_dump(s: &FormalSeries) -> SeriesDump {
    SeriesDump { vars: var_names(s.vars()), truncation: s.trunc(), terms: terms(s) }
}

pub fn hbar_dump(s: &HbarSeries) -> HbarDump {
    HbarDump { vars: var_names(s.vars()), truncation: s.trunc(), order: s.order(), coeffs: coeff_map(s) }
}

pub fn genfun_dump(g: &GenFun) -> GenFunDump {
    GenFunDump {
        vars: var_names(&g.vars()),
        dims: [g.k(), g.l()],
        truncation: g.trunc(),
        exact: g.is_poly(),
        core: g.core().iter().map(terms).collect(),
        f: terms(g.f()),
        amplitude: None,
    }
}

pub fn enhanced_dump(e: &Enhanced) -> GenFunDump {
    GenFunDump { amplitude: Some(coeff_map(e.amplitude())), ..genfun_dump(e.gen()) }
}

pub fn read_series(d: &SeriesDump, vs: &VarSet) -> Result<FormalSeries> {
    check_vars(&d.vars, vs)?;
    read_terms(vs, d.truncation, &d.terms)
}

pub fn read_hbar(d: &HbarDump, vs: &VarSet) -> Result<HbarSeries> {
    check_vars(&d.vars, vs)?;
    read_coeffs(vs, d.truncation, d.order, &d.coeffs)
}

pub fn read_genfun(d: &GenFunDump) -> Result<GenFun> {
    let [k, l] = d.dims;
    let vs = VarSet::phase_space(k, l);
    check_vars(&d.vars, &vs)?;
    if d.core.len() != k {
        return Err(Error::Dimension(format!("{} core components for dims [{k}, {l}]", d.core.len())));
    }
    let xs = VarSet::positions(l);
    let core = d.core.iter().map(|c| read_terms(&xs, d.truncation, c)).collect::<Result<Vec<_>>>()?;
    let g = GenFun::new(core, read_terms(&vs, d.truncation, &d.f)?)?;
    Ok(if d.exact { g } else { g.as_truncated() })
}

pub fn read_enhanced(d: &GenFunDump) -> Result<Enhanced> {
    let g = read_genfun(d)?;
    let amp = d.amplitude.as_ref().ok_or_else(|| Error::Invalid("dump has no amplitude section".into()))?;
    let order = amp.keys().max().copied().unwrap_or(0);
    Enhanced::new(g.clone(), read_coeffs(&g.vars(), d.truncation, order, amp)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("dump serializes");
    s.push('\n');
    s
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Declaration;

    #[test]
    fn enhanced_round_trip() {
        let text = "dims: 1 2\nphi: x1 + x2^2\nf: p1^2*x2 - 1/3*p1^3\namplitude: 1 + i*p1*x1 + hbar*(2/7 - x2)\n";
        let e = Enhanced::from_declaration(&Declaration::parse(text, 6, 2).unwrap()).unwrap();
        let json = to_json(&enhanced_dump(&e));
        let back = read_enhanced(&from_json(&json).unwrap()).unwrap();
        assert_eq!(back, e);
        assert_eq!(to_json(&enhanced_dump(&back)), json);
        assert!(json.contains("[\n          2,\n          7,"), "{json}");
    }

    #[test]
    fn big_coefficients_survive() {
        let xs = VarSet::positions(1);
        let big: BigInt = BigInt::from(3).pow(80);
        let mut s = FormalSeries::zero(&xs, 4);
        s.add_term(Mono::from_exps(&[2]), Scalar::from_bigint(big.clone()));
        let json = to_json(&series_dump(&s));
        assert!(json.contains(&big.to_string()));
        assert_eq!(read_series(&from_json(&json).unwrap(), &xs).unwrap(), s);
    }

    #[test]
    fn wrong_variables_rejected() {
        let d: SeriesDump = from_json(r#"{"vars": ["x1"], "truncation": 3, "terms": [[[1], [1, 1, 0, 1]]]}"#).unwrap();
        assert!(matches!(read_series(&d, &VarSet::positions(2)), Err(Error::Dimension(_))));
        assert!(matches!(from_json::<SeriesDump>("{"), Err(Error::Parse { .. })));
    }
}
