//! Truncated multivariate formal power series over Gaussian rationals.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::scalar::Scalar;
use super::vars::{Mono, Var, VarSet};
use crate::error::{Error, Result};

/// A power series truncated at total degree `trunc`.
///
/// Invariants: every stored monomial has degree `<= trunc` and no stored
/// coefficient is zero, so structural equality is value equality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FormalSeries {
    vars: VarSet,
    trunc: u32,
    terms: BTreeMap<Mono, Scalar>,
}

impl FormalSeries {
    pub fn zero(vars: &VarSet, trunc: u32) -> Self {
        FormalSeries { vars: vars.clone(), trunc, terms: BTreeMap::new() }
    }

    pub fn constant(vars: &VarSet, trunc: u32, c: Scalar) -> Self {
        let mut s = FormalSeries::zero(vars, trunc);
        s.add_term(Mono::ONE, c);
        s
    }

    pub fn one(vars: &VarSet, trunc: u32) -> Self {
        FormalSeries::constant(vars, trunc, Scalar::one())
    }

    /// The series consisting of the single variable `v`.
    pub fn var(vars: &VarSet, trunc: u32, v: Var) -> Result<Self> {
        let i = vars.index_of(v).ok_or_else(|| Error::UnknownVariable(v.to_string()))?;
        let mut s = FormalSeries::zero(vars, trunc);
        s.add_term(Mono::unit(i), Scalar::one());
        Ok(s)
    }

    pub fn monomial(vars: &VarSet, trunc: u32, exps: &[u32], c: Scalar) -> Self {
        assert_eq!(exps.len(), vars.len());
        let mut s = FormalSeries::zero(vars, trunc);
        s.add_term(Mono::from_exps(exps), c);
        s
    }

    pub fn from_terms(vars: &VarSet, trunc: u32, terms: impl IntoIterator<Item = (Mono, Scalar)>) -> Self {
        let mut s = FormalSeries::zero(vars, trunc);
        for (m, c) in terms {
            s.add_term(m, c);
        }
        s
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn terms(&self) -> &BTreeMap<Mono, Scalar> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: Mono) -> Scalar {
        self.terms.get(&m).cloned().unwrap_or_default()
    }

    pub fn coeff_of(&self, exps: &[u32]) -> Scalar {
        self.coeff(Mono::from_exps(exps))
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(Mono::ONE)
    }

    /// Largest total degree among stored terms (`None` for the zero series).
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).min()
    }

    /// True when every term has degree strictly below the truncation, so the
    /// stored terms can be read as an exact polynomial.
    pub fn fits_below_truncation(&self) -> bool {
        self.max_degree().is_none_or(|d| d < self.trunc)
    }

    /// Adds `c·m`, dropping it if it lies above the truncation.
    pub fn add_term(&mut self, m: Mono, c: Scalar) {
        if c.is_zero() || m.degree() > self.trunc {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Lowers the truncation to `n` (dropping terms) or raises it. Raising is
    /// only meaningful when the stored terms are an exact polynomial.
    pub fn with_trunc(&self, n: u32) -> Self {
        FormalSeries {
            vars: self.vars.clone(),
            trunc: n,
            terms: self.terms.iter().filter(|(m, _)| m.degree() <= n).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    pub fn filter(&self, mut keep: impl FnMut(Mono) -> bool) -> Self {
        FormalSeries {
            vars: self.vars.clone(),
            trunc: self.trunc,
            terms: self.terms.iter().filter(|(m, _)| keep(**m)).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    fn check_vars(&self, other: &FormalSeries) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::VarMismatch {
                left: format!("{:?}", self.vars),
                right: format!("{:?}", other.vars),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &FormalSeries) -> Result<Self> {
        self.check_vars(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut out = self.with_trunc(trunc);
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FormalSeries) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Scalar::one())
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return FormalSeries::zero(&self.vars, self.trunc);
        }
        FormalSeries {
            vars: self.vars.clone(),
            trunc: self.trunc,
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    /// Cauchy product truncated at the smaller truncation.
    pub fn mul(&self, other: &FormalSeries) -> Result<Self> {
        self.check_vars(other)?;
        let trunc = self.trunc.min(other.trunc);
        Ok(self.mul_unchecked(other, trunc))
    }

    pub(crate) fn mul_unchecked(&self, other: &FormalSeries, trunc: u32) -> Self {
        let rhs: Vec<(Mono, u32, &Scalar)> = other.terms.iter().map(|(m, c)| (*m, m.degree(), c)).collect();
        let mut acc: HashMap<Mono, Scalar> = HashMap::new();
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            if da > trunc {
                continue;
            }
            for &(mb, db, cb) in &rhs {
                if da + db > trunc {
                    continue;
                }
                let prod = ca * cb;
                match acc.entry(ma.mul(mb)) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(prod);
                    }
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += &prod;
                    }
                }
            }
        }
        FormalSeries {
            vars: self.vars.clone(),
            trunc,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = FormalSeries::one(&self.vars, self.trunc);
        for _ in 0..n {
            acc = acc.mul_unchecked(self, self.trunc);
        }
        acc
    }

    /// Partial derivative with respect to `v`. The truncation is kept; see
    /// [`FormalSeries::reliable_degree_after`] for the degree that stays exact.
    pub fn derive(&self, v: Var) -> Result<Self> {
        let i = self.vars.index_of(v).ok_or_else(|| Error::UnknownVariable(v.to_string()))?;
        Ok(self.derive_index(i))
    }

    pub(crate) fn derive_index(&self, i: usize) -> Self {
        let mut out = FormalSeries::zero(&self.vars, self.trunc);
        for (m, c) in &self.terms {
            let e = m.exp(i);
            if e > 0 {
                out.add_term(m.lower(i).unwrap(), c * &Scalar::from(e as i64));
            }
        }
        out
    }

    /// Degree up to which a result obtained after `n_derivatives` is still exact,
    /// for a non-polynomial (genuinely truncated) input.
    pub fn reliable_degree_after(&self, n_derivatives: u32) -> u32 {
        self.trunc.saturating_sub(n_derivatives)
    }

    /// Formal composition: every variable of `self` (in order) is replaced by the
    /// corresponding series of `images`, all over `target`.
    ///
    /// Images with a nonzero constant term are accepted only when `self` is an exact
    /// polynomial (all terms below its truncation). The result is truncated at the
    /// smallest truncation among the images, further capped by `self.trunc` when all
    /// images vanish at the origin.
    pub fn compose(&self, target: &VarSet, images: &[FormalSeries]) -> Result<Self> {
        if images.len() != self.vars.len() {
            return Err(Error::Dimension(format!(
                "compose: {} images for {} variables",
                images.len(),
                self.vars.len()
            )));
        }
        for img in images {
            if img.vars != *target {
                return Err(Error::VarMismatch {
                    left: format!("{:?}", img.vars),
                    right: format!("{:?}", target),
                });
            }
        }
        let mut trunc = images.iter().map(|s| s.trunc).min().unwrap_or(self.trunc);
        let shifts: Vec<bool> = images.iter().map(|s| !s.constant_term().is_zero()).collect();
        if shifts.iter().any(|&b| b) {
            if !self.fits_below_truncation() {
                let i = shifts.iter().position(|&b| b).unwrap();
                return Err(Error::InfiniteSubstitution { var: self.vars.vars()[i].to_string() });
            }
        } else {
            trunc = trunc.min(self.trunc);
        }
        let n = self.vars.len();
        let mut powers: Vec<Vec<FormalSeries>> = images
            .iter()
            .map(|s| vec![FormalSeries::one(target, trunc), s.with_trunc(trunc)])
            .collect();
        let mut out = FormalSeries::zero(target, trunc);
        for (m, c) in &self.terms {
            // with zero-constant images the product has degree >= deg(m)
            if !shifts.iter().any(|&b| b) && m.degree() > trunc {
                continue;
            }
            let mut prod = FormalSeries::constant(target, trunc, c.clone());
            for i in 0..n {
                let e = m.exp(i) as usize;
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e {
                    let next = powers[i].last().unwrap().mul_unchecked(&powers[i][1], trunc);
                    powers[i].push(next);
                }
                prod = prod.mul_unchecked(&powers[i][e], trunc);
                if prod.is_zero() {
                    break;
                }
            }
            for (pm, pc) in prod.terms {
                out.add_term(pm, pc);
            }
        }
        Ok(out)
    }

    /// Substitutes series (over the same variables) for some of the variables.
    pub fn substitute(&self, assignment: &[(Var, FormalSeries)]) -> Result<Self> {
        let mut images = Vec::with_capacity(self.vars.len());
        for &v in self.vars.vars() {
            match assignment.iter().find(|(w, _)| *w == v) {
                Some((_, s)) => {
                    if s.vars != self.vars {
                        return Err(Error::VarMismatch {
                            left: format!("{:?}", s.vars),
                            right: format!("{:?}", self.vars),
                        });
                    }
                    images.push(s.clone())
                }
                None => images.push(FormalSeries::var(&self.vars, self.trunc, v)?),
            }
        }
        for (w, _) in assignment {
            if !self.vars.contains(*w) {
                return Err(Error::UnknownVariable(w.to_string()));
            }
        }
        self.compose(&self.vars, &images)
    }

    /// Moves the series to another variable set, mapping variable `i` of `self`
    /// to position `map[i]` of `target`. Exact, no arithmetic.
    pub fn relabel(&self, target: &VarSet, map: &[usize], trunc: u32) -> Self {
        assert_eq!(map.len(), self.vars.len());
        let n = self.vars.len();
        let terms = self.terms.iter().filter(|(m, _)| m.degree() <= trunc).map(|(m, c)| {
            let mut out = Mono::ONE;
            for (i, &j) in map.iter().enumerate().take(n) {
                out = out.with_exp(j, out.exp(j) + m.exp(i));
            }
            (out, c.clone())
        });
        FormalSeries::from_terms(target, trunc, terms)
    }

    /// Relabels by variable identity: each variable of `self` must occur in `target`.
    pub fn embed(&self, target: &VarSet) -> Result<Self> {
        let map = self
            .vars
            .vars()
            .iter()
            .map(|v| target.index_of(*v).ok_or_else(|| Error::UnknownVariable(v.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.relabel(target, &map, self.trunc))
    }

    /// `exp(s)` for `s` without constant term.
    pub fn exp_zero(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::NonzeroConstant);
        }
        let mut out = FormalSeries::one(&self.vars, self.trunc);
        let mut term = out.clone();
        for m in 1..=self.trunc {
            term = term.mul_unchecked(self, self.trunc).scale(&Scalar::ratio(1, m as i64));
            if term.is_zero() {
                break;
            }
            for (k, c) in &term.terms {
                out.add_term(*k, c.clone());
            }
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        assert_eq!(point.len(), self.vars.len());
        let n = point.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = c.to_complex();
            for (i, z) in point.iter().enumerate().take(n) {
                let e = m.exp(i);
                if e > 0 {
                    v *= z.powu(e);
                }
            }
            acc += v;
        }
        acc
    }

    pub fn eval_real(&self, point: &[f64]) -> Complex64 {
        let pt: Vec<Complex64> = point.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.eval(&pt)
    }

    /// Degree of each term restricted to the variables selected by `mask`.
    pub fn max_degree_in(&self, mask: &[bool]) -> Option<u32> {
        self.terms.keys().map(|m| m.degree_in(mask)).max()
    }

    pub fn min_degree_in(&self, mask: &[bool]) -> Option<u32> {
        self.terms.keys().map(|m| m.degree_in(mask)).min()
    }

    pub fn mask_of(&self, pred: impl Fn(Var) -> bool) -> Vec<bool> {
        self.vars.vars().iter().map(|&v| pred(v)).collect()
    }
}

impl Add for &FormalSeries {
    type Output = FormalSeries;
    fn add(self, rhs: &FormalSeries) -> FormalSeries {
        FormalSeries::add(self, rhs).expect("series addition")
    }
}

impl Sub for &FormalSeries {
    type Output = FormalSeries;
    fn sub(self, rhs: &FormalSeries) -> FormalSeries {
        FormalSeries::sub(self, rhs).expect("series subtraction")
    }
}

impl Mul for &FormalSeries {
    type Output = FormalSeries;
    fn mul(self, rhs: &FormalSeries) -> FormalSeries {
        FormalSeries::mul(self, rhs).expect("series multiplication")
    }
}

impl Neg for &FormalSeries {
    type Output = FormalSeries;
    fn neg(self) -> FormalSeries {
        FormalSeries::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(n: u32) -> (VarSet, FormalSeries) {
        let vs = VarSet::positions(1);
        let x = FormalSeries::var(&vs, n, Var::x(1)).unwrap();
        (vs, x)
    }

    fn c(n: i64) -> Scalar {
        Scalar::from(n)
    }

    #[test]
    fn additive_inverse_and_disjoint_sum() {
        let (vs, x) = xs(4);
        assert!((&x + &x.neg()).is_zero());
        let one = FormalSeries::one(&vs, 4);
        let lhs = &(&one + &x) + &x.pow(2);
        let expected = FormalSeries::from_terms(
            &vs,
            4,
            [(Mono::ONE, c(1)), (Mono::from_exps(&[1]), c(1)), (Mono::from_exps(&[2]), c(1))],
        );
        assert_eq!(lhs, expected);
    }

    #[test]
    fn boundary_degree_is_kept() {
        let (vs, _) = xs(3);
        let top = FormalSeries::monomial(&vs, 3, &[3], c(7));
        assert_eq!(&top + &FormalSeries::zero(&vs, 3), top);
    }

    #[test]
    fn products() {
        let (vs, x) = xs(2);
        let one = FormalSeries::one(&vs, 2);
        assert_eq!(&(&one + &x) * &(&one - &x), &one - &x.pow(2));
        assert!((&x.pow(2) * &x).is_zero());
        // (1+x+x^2)(1+x) at N=2, by brute-force convolution of coefficient lists
        let a = [1i64, 1, 1];
        let b = [1i64, 1];
        let mut conv = [0i64; 3];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if i + j <= 2 {
                    conv[i + j] += ai * bj;
                }
            }
        }
        let lhs = &(&(&one + &x) + &x.pow(2)) * &(&one + &x);
        for (k, v) in conv.iter().enumerate() {
            assert_eq!(lhs.coeff_of(&[k as u32]), c(*v));
        }
        assert_eq!(conv, [1, 2, 2]);
    }

    #[test]
    fn derivatives() {
        let vs = VarSet::phase_space(1, 1);
        let p = FormalSeries::var(&vs, 5, Var::p(1)).unwrap();
        let x = FormalSeries::var(&vs, 5, Var::x(1)).unwrap();
        assert_eq!((&x * &p).derive(Var::x(1)).unwrap(), p);
        assert!(FormalSeries::constant(&vs, 5, c(3)).derive(Var::x(1)).unwrap().is_zero());
        let s = &(&(&p * &p) * &x) + &(&p * &(&x * &x));
        let expected = &(&p * &x).scale(&c(2)) + &(&x * &x);
        assert_eq!(s.derive(Var::p(1)).unwrap(), expected);
        assert!(matches!(s.derive(Var::t(0)), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn substitution() {
        let vs = VarSet::phase_space(1, 1);
        let p = FormalSeries::var(&vs, 4, Var::p(1)).unwrap();
        let x = FormalSeries::var(&vs, 4, Var::x(1)).unwrap();
        let one = FormalSeries::one(&vs, 4);
        let s = &(&one + &x) + &(&x * &p);
        let zero = FormalSeries::zero(&vs, 4);
        assert_eq!(s.substitute(&[(Var::x(1), zero)]).unwrap(), one);
        assert_eq!(s.substitute(&[(Var::x(1), x.clone())]).unwrap(), s);

        // y -> x + x^2 in y^2 at N=3; hand expansion x^2 + 2x^3
        let vy = VarSet::new(vec![Var::x(2)]);
        let y2 = FormalSeries::monomial(&vy, 3, &[2], c(1));
        let (vx, xx) = xs(3);
        let out = y2.compose(&vx, &[&xx + &xx.pow(2)]).unwrap();
        assert_eq!(out, FormalSeries::from_terms(&vx, 3, [(Mono::from_exps(&[2]), c(1)), (Mono::from_exps(&[3]), c(2))]));
    }

    #[test]
    fn constant_shift_only_into_polynomials() {
        let (vs, x) = xs(3);
        let one = FormalSeries::one(&vs, 3);
        // x^3 at truncation 3 may carry unknown higher terms
        let full = x.pow(3);
        assert!(matches!(full.compose(&vs, &[&one + &x]), Err(Error::InfiniteSubstitution { .. })));
        // x^2 at truncation 3 is an exact polynomial: (1+x)^2
        let poly = x.pow(2);
        let shifted = poly.compose(&vs, &[&one + &x]).unwrap();
        assert_eq!(shifted, &(&one + &x.scale(&c(2))) + &x.pow(2));
    }

    #[test]
    fn exp_zero_cases() {
        let vs = VarSet::new(vec![Var::x(1), Var::x(2)]);
        let x = FormalSeries::var(&vs, 3, Var::x(1)).unwrap();
        let y = FormalSeries::var(&vs, 3, Var::x(2)).unwrap();
        assert_eq!(FormalSeries::zero(&vs, 3).exp_zero().unwrap(), FormalSeries::one(&vs, 3));
        let ex = x.exp_zero().unwrap();
        for (k, d) in [(0u32, 1i64), (1, 1), (2, 2), (3, 6)] {
            assert_eq!(ex.coeff_of(&[k, 0]), Scalar::ratio(1, d));
        }
        let s = &x + &y;
        let prod = &s.exp_zero().unwrap() * &s.neg().exp_zero().unwrap();
        assert_eq!(prod, FormalSeries::one(&vs, 3));
        assert!(FormalSeries::one(&vs, 3).exp_zero().is_err());
    }
}
