//! Exact Gaussian rationals `a + b·i`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A Gaussian rational number. Arithmetic never rounds.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Scalar {
    re: BigRational,
    im: BigRational,
}

impl Scalar {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Scalar { re, im }
    }

    pub fn zero() -> Self {
        Scalar { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn one() -> Self {
        Scalar::from(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Scalar { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::real(BigRational::new(num.into(), den.into()))
    }

    pub fn real(re: BigRational) -> Self {
        Scalar { re, im: BigRational::zero() }
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Scalar { re: self.re.clone(), im: -self.im.clone() }
    }

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => Scalar::one(),
            1 => Scalar::i(),
            2 => -Scalar::one(),
            _ => -Scalar::i(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Scalar::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(Scalar::real(self.re.recip()));
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(Scalar { re: &self.re / &norm, im: -(&self.im / &norm) })
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }

    /// `[num, den, num_i, den_i]` with reduced fractions.
    pub fn parts(&self) -> [BigInt; 4] {
        [
            self.re.numer().clone(),
            self.re.denom().clone(),
            self.im.numer().clone(),
            self.im.denom().clone(),
        ]
    }

    pub fn from_parts(parts: [BigInt; 4]) -> Option<Self> {
        let [a, b, c, d] = parts;
        if b.is_zero() || d.is_zero() {
            return None;
        }
        Some(Scalar { re: BigRational::new(a, b), im: BigRational::new(c, d) })
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Scalar::real(BigRational::from_integer(n))
    }
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => r.to_f64().unwrap_or(f64::NAN),
    }
}

fn small(r: &BigRational) -> Option<(i64, i64)> {
    Some((r.numer().to_i64()?, r.denom().to_i64()?))
}

fn from_small(n: i128, d: i128) -> BigRational {
    BigRational::new_raw(BigInt::from(n), BigInt::from(d))
}

/// Product on machine integers when both operands fit; cross-cancellation keeps it reduced.
fn rmul(a: &BigRational, b: &BigRational) -> BigRational {
    if let (Some((an, ad)), Some((bn, bd))) = (small(a), small(b)) {
        if an == 0 || bn == 0 {
            return BigRational::zero();
        }
        let (an, ad, bn, bd) = (an as i128, ad as i128, bn as i128, bd as i128);
        let g1 = an.gcd(&bd);
        let g2 = bn.gcd(&ad);
        return from_small((an / g1) * (bn / g2), (ad / g2) * (bd / g1));
    }
    a * b
}

fn radd(a: &BigRational, b: &BigRational) -> BigRational {
    if let (Some((an, ad)), Some((bn, bd))) = (small(a), small(b)) {
        let (an, ad, bn, bd) = (an as i128, ad as i128, bn as i128, bd as i128);
        let g = ad.gcd(&bd);
        let n = an * (bd / g) + bn * (ad / g);
        let d = ad / g * bd;
        if n == 0 {
            return BigRational::zero();
        }
        let h = n.gcd(&d);
        return from_small(n / h, d / h);
    }
    a + b
}

fn rsub(a: &BigRational, b: &BigRational) -> BigRational {
    match small(b) {
        Some((bn, bd)) if bn != i64::MIN => radd(a, &BigRational::new_raw(BigInt::from(-bn), BigInt::from(bd))),
        _ => a - b,
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::real(BigRational::from_integer(n.into()))
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::real(r)
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        if self.im.is_zero() && rhs.im.is_zero() {
            return Scalar::real(radd(&self.re, &rhs.re));
        }
        Scalar { re: radd(&self.re, &rhs.re), im: radd(&self.im, &rhs.im) }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        if self.im.is_zero() && rhs.im.is_zero() {
            return Scalar::real(rsub(&self.re, &rhs.re));
        }
        Scalar { re: rsub(&self.re, &rhs.re), im: rsub(&self.im, &rhs.im) }
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        match (self.im.is_zero(), rhs.im.is_zero()) {
            (true, true) => Scalar::real(rmul(&self.re, &rhs.re)),
            (true, false) => Scalar { re: rmul(&self.re, &rhs.re), im: rmul(&self.re, &rhs.im) },
            (false, true) => Scalar { re: rmul(&self.re, &rhs.re), im: rmul(&self.im, &rhs.re) },
            (false, false) => Scalar {
                re: rsub(&rmul(&self.re, &rhs.re), &rmul(&self.im, &rhs.im)),
                im: radd(&rmul(&self.re, &rhs.im), &rmul(&self.im, &rhs.re)),
            },
        }
    }
}

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        let inv = rhs.inv().expect("division by zero scalar");
        self * &inv
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -self.re, im: -self.im }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        self.re = radd(&self.re, &rhs.re);
        if !rhs.im.is_zero() {
            self.im = radd(&self.im, &rhs.im);
        }
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        self.re = rsub(&self.re, &rhs.re);
        if !rhs.im.is_zero() {
            self.im = rsub(&self.im, &rhs.im);
        }
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Prints in the expression grammar: `3/2`, `-i`, `1/2*i`, `(1 + 2*i)`.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let im_part = |im: &BigRational| -> String {
            if im.abs().is_one() {
                "i".to_string()
            } else {
                format!("{}*i", fmt_rat(&im.abs()))
            }
        };
        if self.im.is_zero() {
            return write!(f, "{}", fmt_rat(&self.re));
        }
        if self.re.is_zero() {
            let sign = if self.im.is_negative() { "-" } else { "" };
            return write!(f, "{}{}", sign, im_part(&self.im));
        }
        let sign = if self.im.is_negative() { "-" } else { "+" };
        write!(f, "({} {} {})", fmt_rat(&self.re), sign, im_part(&self.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_squared_is_minus_one() {
        assert_eq!(&Scalar::i() * &Scalar::i(), -Scalar::one());
        assert_eq!(Scalar::i_pow(6), -Scalar::one());
        assert_eq!(Scalar::i_pow(-1), -Scalar::i());
    }

    #[test]
    fn division_is_exact() {
        let a = Scalar::new(BigRational::from_integer(1.into()), BigRational::from_integer(2.into()));
        let b = Scalar::new(BigRational::from_integer(3.into()), BigRational::from_integer((-1).into()));
        let q = &a / &b;
        assert_eq!(&q * &b, a);
        assert!(Scalar::zero().inv().is_none());
    }

    #[test]
    fn display_forms() {
        assert_eq!(Scalar::ratio(3, 2).to_string(), "3/2");
        assert_eq!((-Scalar::i()).to_string(), "-i");
        assert_eq!((Scalar::ratio(1, 2) * Scalar::i()).to_string(), "1/2*i");
        assert_eq!((Scalar::one() - Scalar::i()).to_string(), "(1 - i)");
    }
}
