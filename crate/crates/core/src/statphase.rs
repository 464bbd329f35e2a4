//! Formal stationary phase for `∫ a(e, ζ) exp((i/ħ)(½⟨Qζ,ζ⟩ + R(e, ζ))) dζ / (2πħ)^{d/2}`.
//!
//! The reference Gaussian integrates to `|det Q|^{-1/2} e^{iπσ/4}` ([`SigNorm`]); the
//! expansion itself is pure Wick calculus with covariance `iħ Q^{-1}`.
//!
//! Weights: ħ counts 2, every fiber or external variable counts 1. A term of `R`
//! of total degree `D` raises the weight by `D - 2 >= 1`, so the expansion up to
//! weight `W` needs `R` to degree `W + 2` and terminates after at most `W` factors.
//! `R` may contain fiber-quadratic terms that depend on the externals.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::series::{FormalSeries, HbarSeries, Mono, Scalar, VarSet};

/// `|det Q|`, the signature `σ = n₊ - n₋` and the fiber dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigNorm {
    pub det_abs: BigRational,
    pub signature: i64,
    pub dim: usize,
}

impl SigNorm {
    pub fn of(q: &Matrix) -> Result<SigNorm> {
        let (pos, neg, zero) = q.inertia().map_err(|_| Error::Degenerate("fiber Hessian must be real symmetric".into()))?;
        if zero > 0 {
            return Err(Error::Degenerate(format!("fiber Hessian has a {zero}-dimensional kernel")));
        }
        Ok(SigNorm { det_abs: q.det().re().abs(), signature: pos as i64 - neg as i64, dim: q.rows() })
    }

    /// `σ mod 8`, the exponent of the eighth root of unity `e^{iπσ/4}`.
    pub fn maslov_class(&self) -> u8 {
        self.signature.rem_euclid(8) as u8
    }

    /// `|det Q|^{-1/2} e^{iπσ/4}` when it lies in the Gaussian rationals
    /// (`|det Q|` a rational square and `σ` even).
    pub fn scalar(&self) -> Option<Scalar> {
        if self.signature % 2 != 0 {
            return None;
        }
        let sqrt = |n: &BigInt| {
            let r = n.sqrt();
            (&r * &r == *n).then_some(r)
        };
        let num = sqrt(self.det_abs.numer())?;
        let den = sqrt(self.det_abs.denom())?;
        let inv_sqrt = Scalar::real(BigRational::new(den, num));
        Some(&inv_sqrt * &Scalar::i_pow(self.signature / 2))
    }

    pub fn to_complex(&self) -> Complex64 {
        let det = crate::series::scalar::rat_to_f64(&self.det_abs);
        let phase = std::f64::consts::PI * self.signature as f64 / 4.0;
        Complex64::from_polar(det.powf(-0.5), phase)
    }
}

/// Wick moment of `ζ^α` against the normalized Gaussian with covariance `i Q^{-1}`
/// per ħ: returns the pairing value and the ħ-weight `|α|/2` (0 for odd `|α|`).
pub fn gaussian_moment(alpha: &[u32], qinv: &Matrix) -> (Scalar, u32) {
    let total: u32 = alpha.iter().sum();
    let mut cache = HashMap::new();
    let cov = covariance(qinv);
    (moment(alpha, &cov, &mut cache), total / 2)
}

fn covariance(qinv: &Matrix) -> Matrix {
    let n = qinv.rows();
    let mut c = Matrix::zeros(n, n);
    let i = Scalar::i();
    for a in 0..n {
        for b in 0..n {
            c[(a, b)] = &i * &qinv[(a, b)];
        }
    }
    c
}

/// `E[ζ_a ζ^β] = Σ_b C_ab β_b E[ζ^{β - e_b}]` with `a` the first nonzero index.
fn moment(alpha: &[u32], cov: &Matrix, cache: &mut HashMap<Vec<u32>, Scalar>) -> Scalar {
    let total: u32 = alpha.iter().sum();
    if total == 0 {
        return Scalar::one();
    }
    if total % 2 == 1 {
        return Scalar::zero();
    }
    if let Some(v) = cache.get(alpha) {
        return v.clone();
    }
    let a = alpha.iter().position(|&e| e > 0).unwrap();
    let mut rest = alpha.to_vec();
    rest[a] -= 1;
    let mut acc = Scalar::zero();
    for b in 0..alpha.len() {
        if rest[b] == 0 || cov[(a, b)].is_zero() {
            continue;
        }
        let mult = Scalar::from(rest[b] as i64);
        let mut sub = rest.clone();
        sub[b] -= 1;
        let m = moment(&sub, cov, cache);
        if !m.is_zero() {
            acc += &(&(&cov[(a, b)] * &mult) * &m);
        }
    }
    cache.insert(alpha.to_vec(), acc.clone());
    acc
}

/// Input of the stationary-phase engine.
#[derive(Clone, Debug)]
pub struct PhaseProblem {
    /// Externals and fiber variables together.
    pub vars: VarSet,
    /// Positions in `vars` of the fiber variables, in the order used by `q`.
    pub fiber: Vec<usize>,
    pub q: Matrix,
    pub r: FormalSeries,
    pub amplitude: HbarSeries,
    /// Highest ħ power kept.
    pub order: u32,
    /// Weighted truncation of the result.
    pub trunc: u32,
}

impl PhaseProblem {
    /// Splits a phase with vanishing constant and linear fiber part into `Q` and `R`.
    pub fn from_phase(phase: &FormalSeries, fiber: Vec<usize>, amplitude: HbarSeries, order: u32, trunc: u32) -> Result<Self> {
        let vars = phase.vars().clone();
        let d = fiber.len();
        let mut q = Matrix::zeros(d, d);
        let mut r = FormalSeries::zero(&vars, phase.trunc());
        let mask: Vec<bool> = (0..vars.len()).map(|i| fiber.contains(&i)).collect();
        for (m, c) in phase.terms() {
            let fd = m.degree_in(&mask);
            if fd < 2 {
                return Err(Error::Degenerate(format!(
                    "phase term `{}` has fiber degree {fd}; the critical point must sit at the origin",
                    crate::genfun::mono_text(*m, &vars)
                )));
            }
            if fd == 2 && m.degree() == 2 {
                let idx: Vec<usize> = (0..d).flat_map(|a| std::iter::repeat_n(a, m.exp(fiber[a]) as usize)).collect();
                let (a, b) = (idx[0], idx[1]);
                if a == b {
                    q[(a, a)] = c * &Scalar::from(2);
                } else {
                    q[(a, b)] = c.clone();
                    q[(b, a)] = c.clone();
                }
            } else {
                r.add_term(*m, c.clone());
            }
        }
        Ok(PhaseProblem { vars, fiber, q, r, amplitude, order, trunc })
    }

    pub fn externals(&self) -> VarSet {
        VarSet::new(
            self.vars.vars().iter().enumerate().filter(|(i, _)| !self.fiber.contains(i)).map(|(_, v)| *v).collect(),
        )
    }
}

/// Result of [`stationary_phase_expand`]: the Wick expansion before the prefactor.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub series: HbarSeries,
    pub norm: SigNorm,
}

impl Expansion {
    /// The expansion times `|det Q|^{-1/2} e^{iπσ/4}`, when that factor is exact.
    pub fn normalized(&self) -> Result<HbarSeries> {
        let c = self.norm.scalar().ok_or_else(|| {
            Error::Invalid(format!(
                "normalization |det Q|^(-1/2) e^(i pi sigma/4) with |det Q| = {}, sigma = {} is not a Gaussian rational",
                self.norm.det_abs, self.norm.signature
            ))
        })?;
        Ok(self.series.scale(&c))
    }
}

/// The ħ-expansion of the normalized oscillatory integral, in the externals only.
pub fn stationary_phase_expand(p: &PhaseProblem) -> Result<Expansion> {
    let d = p.fiber.len();
    if !p.q.is_symmetric() || p.q.rows() != d {
        return Err(Error::Degenerate("fiber Hessian must be a symmetric d x d matrix".into()));
    }
    let norm = SigNorm::of(&p.q)?;
    let qinv = p.q.inverse().map_err(|_| Error::Degenerate("fiber Hessian is singular".into()))?;
    let cov = covariance(&qinv);
    let n = p.vars.len();
    let fmask: Vec<bool> = (0..n).map(|i| p.fiber.contains(&i)).collect();
    for m in p.r.terms().keys() {
        let fd = m.degree_in(&fmask);
        if fd < 2 || m.degree() < 3 {
            return Err(Error::Degenerate(format!(
                "R term `{}` must have fiber degree >= 2 and total degree >= 3",
                crate::genfun::mono_text(*m, &p.vars)
            )));
        }
    }
    let w = p.trunc;
    let order = HbarSeries::max_order(w, p.order) as i64;
    // weight 2h + |ζ| + |e| and ħ lower bound 2h + |ζ|
    let keep = |h: i64, m: Mono| {
        let fd = m.degree_in(&fmask) as i64;
        let ed = m.degree() as i64 - fd;
        2 * h + fd <= 2 * order && 2 * h + fd + ed <= w as i64
    };
    let mut term: HashMap<(i64, Mono), Scalar> = HashMap::new();
    for (j, c) in p.amplitude.coeffs().iter().enumerate() {
        for (m, v) in c.terms() {
            if keep(j as i64, *m) {
                term.insert((j as i64, *m), v.clone());
            }
        }
    }
    let r_terms: Vec<(Mono, Scalar)> = p.r.terms().iter().map(|(m, c)| (*m, c * &Scalar::i())).collect();
    let mut total = term.clone();
    let mut mm = 1i64;
    while !term.is_empty() {
        let inv_m = Scalar::ratio(1, mm);
        let mut next: HashMap<(i64, Mono), Scalar> = HashMap::new();
        for ((h, m), c) in &term {
            for (rm, rc) in &r_terms {
                if m.degree() + rm.degree() > 255 {
                    continue;
                }
                let nm = m.mul(*rm);
                let nh = h - 1;
                if !keep(nh, nm) {
                    continue;
                }
                let v = &(c * rc) * &inv_m;
                let e = next.entry((nh, nm)).or_insert_with(Scalar::zero);
                *e += &v;
            }
        }
        next.retain(|_, v| !v.is_zero());
        for (k, v) in &next {
            let e = total.entry(*k).or_insert_with(Scalar::zero);
            *e += v;
        }
        term = next;
        mm += 1;
    }
    let ext = p.externals();
    let ext_idx: Vec<usize> = (0..n).filter(|i| !fmask[*i]).collect();
    let mut out = HbarSeries::zero(&ext, w, order as u32);
    let mut cache = HashMap::new();
    for ((h, m), c) in total {
        let alpha: Vec<u32> = p.fiber.iter().map(|&i| m.exp(i)).collect();
        let a: u32 = alpha.iter().sum();
        if a % 2 == 1 || c.is_zero() {
            continue;
        }
        let j = h + (a / 2) as i64;
        assert!(j >= 0, "negative power of hbar in the stationary phase expansion");
        if j > order {
            continue;
        }
        let mom = moment(&alpha, &cov, &mut cache);
        if mom.is_zero() {
            continue;
        }
        let em = Mono::from_exps(&ext_idx.iter().map(|&i| m.exp(i)).collect::<Vec<_>>());
        out.add_term(j as usize, em, &c * &mom);
    }
    Ok(Expansion { series: out, norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_series;
    use crate::series::Var;
    use num_traits::Zero;

    fn m2(rows: [[i64; 2]; 2]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| Scalar::from(v)).collect()).collect())
    }

    #[test]
    fn moments() {
        let q = m2([[0, -1], [-1, 0]]);
        let qinv = q.inverse().unwrap();
        assert_eq!(gaussian_moment(&[1, 1], &qinv), (-Scalar::i(), 1));
        assert_eq!(gaussian_moment(&[1, 0], &qinv).0, Scalar::zero());
        assert_eq!(gaussian_moment(&[2, 0], &qinv).0, Scalar::zero());
        // 1D: E[ζ^4] = 3 (i)^2
        let one = Matrix::identity(1);
        assert_eq!(gaussian_moment(&[4], &one), (Scalar::from(-3), 2));
    }

    fn fiber2() -> VarSet {
        VarSet::new(vec![Var::z(1), Var::z(2)])
    }

    #[test]
    fn pure_gaussian_is_one() {
        let vs = fiber2();
        let phase = parse_series("-z1*z2", &vs, 6, 0).unwrap().into_formal().unwrap();
        let p = PhaseProblem::from_phase(&phase, vec![0, 1], HbarSeries::one(&vs, 6, 3), 3, 6).unwrap();
        let e = stationary_phase_expand(&p).unwrap();
        assert_eq!(e.norm.scalar(), Some(Scalar::one()));
        let s = e.normalized().unwrap();
        assert_eq!(crate::expr::print_hbar(&s), "1");
    }

    #[test]
    fn pairing_gives_minus_i_hbar() {
        let vs = fiber2();
        let phase = parse_series("-z1*z2", &vs, 6, 0).unwrap().into_formal().unwrap();
        let amp = parse_series("z1*z2", &vs, 6, 3).unwrap().value;
        let p = PhaseProblem::from_phase(&phase, vec![0, 1], amp, 3, 6).unwrap();
        let s = stationary_phase_expand(&p).unwrap().normalized().unwrap();
        assert_eq!(crate::expr::print_hbar(&s), "hbar*(-i)");
    }

    #[test]
    fn cubic_phase_first_correction() {
        // ½ζ² + cζ³: first correction (i/ħ)^2 c² E[ζ^6]/2 = -c²/(2ħ²)·15(iħ)^3 = (15/2) i c² ħ
        let vs = VarSet::new(vec![Var::z(1)]);
        let phase = parse_series("1/2*z1^2 + z1^3", &vs, 8, 0).unwrap().into_formal().unwrap();
        let p = PhaseProblem::from_phase(&phase, vec![0], HbarSeries::one(&vs, 8, 4), 1, 2).unwrap();
        let e = stationary_phase_expand(&p).unwrap();
        assert_eq!(e.norm.signature, 1);
        let s = e.series;
        assert_eq!(s.coeff(0).constant_term(), Scalar::one());
        assert_eq!(s.coeff(1).constant_term(), Scalar::new(BigRational::zero(), BigRational::new(15.into(), 2.into())));
    }

    #[test]
    fn signorm_cases() {
        let sn = SigNorm::of(&Matrix::identity(1)).unwrap();
        assert_eq!(sn.signature, 1);
        assert!(sn.scalar().is_none());
        assert!((sn.to_complex() - Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        let q = m2([[4, 0], [0, 1]]);
        let sn = SigNorm::of(&q).unwrap();
        assert_eq!(sn.scalar(), Some(&Scalar::ratio(1, 2) * &Scalar::i()));
        assert!(SigNorm::of(&m2([[1, 0], [0, 0]])).is_err());
    }

    #[test]
    fn rejects_low_degree_r() {
        let vs = fiber2();
        let phase = parse_series("-z1*z2 + z1", &vs, 6, 0).unwrap().into_formal().unwrap();
        assert!(PhaseProblem::from_phase(&phase, vec![0, 1], HbarSeries::one(&vs, 6, 3), 3, 6).is_err());
    }
}
