//! Power series in ħ with [`FormalSeries`] coefficients.
//!
//! ħ carries weight 2 in the truncation: the coefficient of `ħ^j` is truncated
//! at total degree `trunc - 2j`. Under this grading the symbol-calculus
//! operators `ħ ∂_p ∂_x` are weight preserving, so products and compositions
//! lose nothing to truncation.

use super::formal::FormalSeries;
use super::scalar::Scalar;
use super::vars::{Var, VarSet};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HbarSeries {
    vars: VarSet,
    trunc: u32,
    coeffs: Vec<FormalSeries>,
}

impl HbarSeries {
    /// Zero series with ħ-order `order`; requires `2 * order <= trunc`.
    pub fn zero(vars: &VarSet, trunc: u32, order: u32) -> Self {
        assert!(2 * order <= trunc, "hbar order {order} needs truncation >= {}", 2 * order);
        HbarSeries {
            vars: vars.clone(),
            trunc,
            coeffs: (0..=order).map(|j| FormalSeries::zero(vars, trunc - 2 * j)).collect(),
        }
    }

    /// Largest ħ-order compatible with the truncation, capped at `order`.
    pub fn max_order(trunc: u32, order: u32) -> u32 {
        order.min(trunc / 2)
    }

    pub fn from_formal(s: &FormalSeries, order: u32) -> Self {
        let mut out = HbarSeries::zero(s.vars(), s.trunc(), order);
        out.coeffs[0] = s.clone();
        out
    }

    /// Builds from per-order coefficients, re-truncating coefficient `j` at `trunc - 2j`.
    pub fn from_coeffs(vars: &VarSet, trunc: u32, coeffs: Vec<FormalSeries>) -> Result<Self> {
        let order = coeffs.len().saturating_sub(1) as u32;
        let mut out = HbarSeries::zero(vars, trunc, order);
        for (j, c) in coeffs.into_iter().enumerate() {
            if c.vars() != vars {
                return Err(Error::VarMismatch { left: format!("{:?}", c.vars()), right: format!("{vars:?}") });
            }
            let t = trunc - 2 * j as u32;
            if c.trunc() < t {
                return Err(Error::Invalid(format!(
                    "coefficient of hbar^{j} is truncated at {} but {t} is required",
                    c.trunc()
                )));
            }
            out.coeffs[j] = c.with_trunc(t);
        }
        Ok(out)
    }

    pub fn one(vars: &VarSet, trunc: u32, order: u32) -> Self {
        HbarSeries::from_formal(&FormalSeries::one(vars, trunc), order)
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn order(&self) -> u32 {
        self.coeffs.len() as u32 - 1
    }

    pub fn coeffs(&self) -> &[FormalSeries] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> &FormalSeries {
        &self.coeffs[j]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Adds `c · ħ^j · m`, dropping it if it falls outside the weighted truncation.
    pub fn add_term(&mut self, j: usize, m: super::vars::Mono, c: Scalar) {
        if j < self.coeffs.len() {
            self.coeffs[j].add_term(m, c);
        }
    }

    /// Re-truncates to weighted degree `trunc` and ħ-order `order` (both may only shrink).
    pub fn truncated(&self, trunc: u32, order: u32) -> Self {
        let trunc = trunc.min(self.trunc);
        let order = order.min(self.order()).min(trunc / 2);
        HbarSeries {
            vars: self.vars.clone(),
            trunc,
            coeffs: (0..=order as usize).map(|j| self.coeffs[j].with_trunc(trunc - 2 * j as u32)).collect(),
        }
    }

    /// Reinterprets exact-polynomial coefficients at a larger truncation.
    pub fn lifted(&self, trunc: u32) -> Self {
        HbarSeries {
            vars: self.vars.clone(),
            trunc,
            coeffs: self.coeffs.iter().enumerate().map(|(j, c)| c.with_trunc(trunc - 2 * j as u32)).collect(),
        }
    }

    fn check(&self, other: &HbarSeries) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::VarMismatch { left: format!("{:?}", self.vars), right: format!("{:?}", other.vars) });
        }
        Ok(())
    }

    pub fn add(&self, other: &HbarSeries) -> Result<Self> {
        self.check(other)?;
        let trunc = self.trunc.min(other.trunc);
        let order = self.order().min(other.order());
        let a = self.truncated(trunc, order);
        let b = other.truncated(trunc, order);
        Ok(HbarSeries {
            vars: self.vars.clone(),
            trunc,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        })
    }

    pub fn sub(&self, other: &HbarSeries) -> Result<Self> {
        self.add(&other.scale(&-Scalar::one()))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        HbarSeries {
            vars: self.vars.clone(),
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|s| s.scale(c)).collect(),
        }
    }

    /// Multiplies by `ħ^k` (coefficients shift up, the top ones fall off).
    pub fn shift(&self, k: u32) -> Self {
        let mut out = HbarSeries::zero(&self.vars, self.trunc, self.order());
        for j in 0..self.coeffs.len() {
            let t = j + k as usize;
            if t < out.coeffs.len() {
                out.coeffs[t] = self.coeffs[j].with_trunc(out.coeffs[t].trunc());
            }
        }
        out
    }

    pub fn mul(&self, other: &HbarSeries) -> Result<Self> {
        self.check(other)?;
        let trunc = self.trunc.min(other.trunc);
        let order = self.order().min(other.order()).min(trunc / 2);
        let mut out = HbarSeries::zero(&self.vars, trunc, order);
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = i + j;
                if k > order as usize {
                    continue;
                }
                let t = trunc - 2 * k as u32;
                let prod = a.mul_unchecked(b, t);
                out.coeffs[k] = &out.coeffs[k] + &prod;
            }
        }
        Ok(out)
    }

    pub fn derive(&self, v: Var) -> Result<Self> {
        Ok(HbarSeries {
            vars: self.vars.clone(),
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|c| c.derive(v)).collect::<Result<_>>()?,
        })
    }

    /// Applies [`FormalSeries::compose`] to each coefficient. The result keeps the
    /// weighted truncation `min(self.trunc, image truncation)`.
    pub fn compose(&self, target: &VarSet, images: &[FormalSeries]) -> Result<Self> {
        let img_trunc = images.iter().map(|s| s.trunc()).min().unwrap_or(self.trunc);
        let trunc = self.trunc.min(img_trunc);
        let order = self.order().min(trunc / 2);
        let mut coeffs = Vec::new();
        for j in 0..=order as usize {
            let t = trunc - 2 * j as u32;
            let imgs: Vec<FormalSeries> = images.iter().map(|s| s.with_trunc(t)).collect();
            coeffs.push(self.coeffs[j].compose(target, &imgs)?.with_trunc(t));
        }
        Ok(HbarSeries { vars: target.clone(), trunc, coeffs })
    }

    pub fn embed(&self, target: &VarSet) -> Result<Self> {
        Ok(HbarSeries {
            vars: target.clone(),
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|c| c.embed(target)).collect::<Result<_>>()?,
        })
    }

    /// Numeric value at a point for a given ħ.
    pub fn eval(&self, point: &[num_complex::Complex64], hbar: f64) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        let mut h = 1.0;
        for c in &self.coeffs {
            acc += c.eval(point) * h;
            h *= hbar;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_truncation_per_order() {
        let vs = VarSet::positions(1);
        let z = HbarSeries::zero(&vs, 6, 3);
        let t: Vec<u32> = z.coeffs().iter().map(|c| c.trunc()).collect();
        assert_eq!(t, vec![6, 4, 2, 0]);
    }

    #[test]
    fn product_respects_grading() {
        let vs = VarSet::positions(1);
        let x = FormalSeries::var(&vs, 4, Var::x(1)).unwrap();
        let a = HbarSeries::from_formal(&x, 2).shift(1); // hbar*x
        let sq = a.mul(&a).unwrap(); // hbar^2 x^2 has weight 6 > 4
        assert!(sq.is_zero());
        let b = HbarSeries::from_formal(&x, 2);
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.coeff(1).coeff_of(&[2]), Scalar::one());
    }
}
