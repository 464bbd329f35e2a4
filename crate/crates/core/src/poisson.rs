//! Star products from monoid generating functions.
//!
//! A monoid on `T*P` is given by `S(p, q, x) = <p + q, x> + T(p, q, x)` with the two
//! momentum blocks `p` and `q`. Its star product is the formal Fourier evaluation
//!
//! ```text
//! f ⋆ g = Σ c_{αβ}(x) (-iħ∂)^α f (-iħ∂)^β g,   exp((i/ħ) T) = Σ c_{αβ}(x) p^α q^β,
//! ```
//!
//! the reconstruction `f(x) = ∫ f̂(p) e^{i<p,x>/ħ} dp/(2πħ)^n` turning `p` into `-iħ∂`.
//! Constant structures use `T = ½ <p, π q>`, linear ones `T = <x, BCH(p, q)> - <x, p + q>`;
//! both give `f ⋆ g - g ⋆ f = -iħ {f, g} + O(ħ²)`.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{print_formal, Sections};
use crate::linalg::Matrix;
use crate::series::{FormalSeries, HbarSeries, Mono, Scalar, Var, VarSet, MAX_VARS};

/// Structure constants `c^k_{ij}` of a Lie algebra: `[e_i, e_j] = Σ_k c^k_{ij} e_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebra {
    n: usize,
    c: Vec<Scalar>,
}

impl LieAlgebra {
    /// `c[(i*n + j)*n + k] = c^k_{ij}`; checks antisymmetry and the Jacobi identity.
    pub fn new(n: usize, c: Vec<Scalar>) -> Result<Self> {
        if c.len() != n * n * n {
            return Err(Error::Dimension(format!("{n}-dimensional structure constants need {} entries", n * n * n)));
        }
        let lie = LieAlgebra { n, c };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if lie.at(i, j, k) != -lie.at(j, i, k) {
                        return Err(Error::Constraint(format!("[e{}, e{}] is not antisymmetric", i + 1, j + 1)));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = Scalar::zero();
                        for m in 0..n {
                            s += &(&lie.at(i, j, m) * &lie.at(m, k, l));
                            s += &(&lie.at(j, k, m) * &lie.at(m, i, l));
                            s += &(&lie.at(k, i, m) * &lie.at(m, j, l));
                        }
                        if !s.is_zero() {
                            return Err(Error::Constraint(format!(
                                "Jacobi identity fails for (e{}, e{}, e{})",
                                i + 1,
                                j + 1,
                                k + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(lie)
    }

    /// From `(i, j, k, c)` entries (1-based) meaning `c^k_{ij} = c`; `c^k_{ji}` is filled in.
    pub fn from_entries(n: usize, entries: &[(usize, usize, usize, Scalar)]) -> Result<Self> {
        let mut c = vec![Scalar::zero(); n * n * n];
        for (i, j, k, v) in entries {
            let (i, j, k) = (*i, *j, *k);
            if i == 0 || j == 0 || k == 0 || i > n || j > n || k > n {
                return Err(Error::Dimension(format!("index ({i}, {j}, {k}) out of range 1..{n}")));
            }
            let (i, j, k) = (i - 1, j - 1, k - 1);
            c[(i * n + j) * n + k] = v.clone();
            c[(j * n + i) * n + k] = -v.clone();
        }
        LieAlgebra::new(n, c)
    }

    pub fn abelian(n: usize) -> Self {
        LieAlgebra { n, c: vec![Scalar::zero(); n * n * n] }
    }

    /// `[e1, e2] = e3`.
    pub fn heisenberg() -> Self {
        LieAlgebra::from_entries(3, &[(1, 2, 3, Scalar::one())]).unwrap()
    }

    /// `[e1, e2] = e3` and cyclic.
    pub fn so3() -> Self {
        LieAlgebra::from_entries(3, &[(1, 2, 3, Scalar::one()), (2, 3, 1, Scalar::one()), (3, 1, 2, Scalar::one())]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> Scalar {
        self.c[(i * self.n + j) * self.n + k].clone()
    }

    fn bracket_basis(&self, u: &[Scalar], v: &[Scalar]) -> Vec<Scalar> {
        let n = self.n;
        let mut out = vec![Scalar::zero(); n];
        for i in 0..n {
            if u[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if v[j].is_zero() {
                    continue;
                }
                let uv = &u[i] * &v[j];
                for (k, o) in out.iter_mut().enumerate() {
                    let c = &self.c[(i * n + j) * n + k];
                    if !c.is_zero() {
                        *o += &(&uv * c);
                    }
                }
            }
        }
        out
    }

    /// Bracket of algebra-valued series.
    pub fn bracket(&self, u: &[FormalSeries], v: &[FormalSeries]) -> Vec<FormalSeries> {
        let n = self.n;
        let vs = u[0].vars().clone();
        let t = u[0].trunc().min(v[0].trunc());
        let mut out = vec![FormalSeries::zero(&vs, t); n];
        for i in 0..n {
            for j in 0..n {
                if u[i].is_zero() || v[j].is_zero() || (0..n).all(|k| self.c[(i * n + j) * n + k].is_zero()) {
                    continue;
                }
                let uv = &u[i] * &v[j];
                for (k, o) in out.iter_mut().enumerate() {
                    let c = &self.c[(i * n + j) * n + k];
                    if !c.is_zero() {
                        *o = &*o + &uv.scale(c);
                    }
                }
            }
        }
        out
    }

    /// Length of the lower central series, `None` when the algebra is not nilpotent.
    pub fn nilpotency_step(&self) -> Option<usize> {
        let n = self.n;
        let mut basis: Vec<Vec<Scalar>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect())
            .collect();
        let mut step = 0;
        loop {
            if basis.is_empty() {
                return Some(step);
            }
            step += 1;
            let mut next: Vec<Vec<Scalar>> = Vec::new();
            for i in 0..n {
                let e: Vec<Scalar> = (0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect();
                for b in &basis {
                    let w = self.bracket_basis(&e, b);
                    let mut trial = next.clone();
                    trial.push(w);
                    if Matrix::from_rows(trial.clone()).rank() > next.len() {
                        next = trial;
                    }
                }
            }
            if next.len() == basis.len() {
                return None;
            }
            basis = next;
        }
    }
}

/// `B_0, …, B_m`.
pub fn bernoulli(m: usize) -> Vec<BigRational> {
    let mut b = vec![BigRational::one()];
    for k in 1..=m {
        // Σ_{j<k} C(k+1, j) B_j + (k+1) B_k = 0
        let mut s = BigRational::zero();
        let mut binom = BigRational::one();
        for (j, bj) in b.iter().enumerate() {
            s += &binom * bj;
            binom = binom * BigRational::from_integer((k + 1 - j).into()) / BigRational::from_integer((j + 1).into());
        }
        b.push(-s / BigRational::from_integer((k + 1).into()));
    }
    b
}

/// `p1..pn, q1..qn`.
pub fn bch_vars(n: usize) -> VarSet {
    let mut v: Vec<Var> = (1..=n as u16).map(Var::p).collect();
    v.extend((1..=n as u16).map(Var::q));
    VarSet::new(v)
}

/// Compositions of `n` into `parts` positive integers.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(parts - 1) {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `BCH(X, Y)` with `X = Σ p_i e_i`, `Y = Σ q_i e_i`, as `n` component series over
/// `(p, q)` truncated at degree `order`. Uses the recursion
/// `(m+1) Z_{m+1} = ½[X - Y, Z_m] + Σ_p B_{2p}/(2p)! Σ_{k_1+…+k_{2p} = m} [Z_{k_1}, […, [Z_{k_{2p}}, X + Y]]]`.
pub fn bch(lie: &LieAlgebra, order: u32) -> Vec<FormalSeries> {
    let n = lie.n;
    let vs = bch_vars(n);
    let order = order.max(1);
    let xs: Vec<FormalSeries> = (0..n).map(|i| FormalSeries::var(&vs, order, Var::p(i as u16 + 1)).unwrap()).collect();
    let ys: Vec<FormalSeries> = (0..n).map(|i| FormalSeries::var(&vs, order, Var::q(i as u16 + 1)).unwrap()).collect();
    let sum: Vec<FormalSeries> = xs.iter().zip(&ys).map(|(a, b)| a + b).collect();
    let diff: Vec<FormalSeries> = xs.iter().zip(&ys).map(|(a, b)| a - b).collect();
    let step = lie.nilpotency_step();
    let bern = bernoulli(order as usize + 1);
    let mut z: Vec<Vec<FormalSeries>> = vec![vec![FormalSeries::zero(&vs, order); n], sum.clone()];
    let half = Scalar::ratio(1, 2);
    for m in 1..order as usize {
        if step.is_some_and(|s| m + 1 > s) {
            z.push(vec![FormalSeries::zero(&vs, order); n]);
            continue;
        }
        let mut acc: Vec<FormalSeries> = lie.bracket(&diff, &z[m]).iter().map(|s| s.scale(&half)).collect();
        let mut fact = BigRational::one();
        for p in 1..=m / 2 {
            fact *= BigRational::from_integer(((2 * p - 1) * 2 * p).into());
            let coef = Scalar::real(&bern[2 * p] / &fact);
            if coef.is_zero() {
                continue;
            }
            for ks in compositions(m, 2 * p) {
                let mut inner = sum.clone();
                for &k in ks.iter().rev() {
                    inner = lie.bracket(&z[k], &inner);
                }
                for (a, b) in acc.iter_mut().zip(&inner) {
                    *a = &*a + &b.scale(&coef);
                }
            }
        }
        let inv = Scalar::ratio(1, m as i64 + 1);
        z.push(acc.iter().map(|s| s.scale(&inv)).collect());
    }
    (0..n).map(|i| z.iter().fold(FormalSeries::zero(&vs, order), |a, zm| &a + &zm[i])).collect()
}

/// A constant (`π^{ij}`) or linear (`c^k_{ij} x_k`) Poisson structure on `R^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PoissonStructure {
    Constant(Matrix),
    Linear(LieAlgebra),
}

impl PoissonStructure {
    pub fn constant(pi: Matrix) -> Result<Self> {
        if !pi.is_square() || !pi.is_antisymmetric() {
            return Err(Error::Constraint("a constant Poisson structure needs an antisymmetric square matrix".into()));
        }
        Ok(PoissonStructure::Constant(pi))
    }

    pub fn dim(&self) -> usize {
        match self {
            PoissonStructure::Constant(m) => m.rows(),
            PoissonStructure::Linear(l) => l.n,
        }
    }

    /// Sections `pi:` (rows) or `bracket:` (lines `i j k c` for `c^k_{ij} = c`) plus `dims: n`.
    pub fn parse(text: &str) -> Result<Self> {
        let secs = Sections::parse(text)?;
        secs.only(&["dims", "pi", "bracket"])?;
        let n = secs.dims(1)?[0];
        if 3 * n > MAX_VARS {
            return Err(Error::Dimension(format!("dimension {n} exceeds the supported size")));
        }
        match (secs.get("pi"), secs.get("bracket")) {
            (Some(s), None) => {
                let rows = s.rational_rows()?;
                if rows.len() != n || rows.iter().any(|(_, r)| r.len() != n) {
                    return Err(Error::Dimension(format!("`pi:` must be {n} x {n}")));
                }
                let m = Matrix::from_rows(rows.into_iter().map(|(_, r)| r.into_iter().map(Scalar::real).collect()).collect());
                PoissonStructure::constant(m)
            }
            (None, Some(s)) => {
                let mut entries = Vec::new();
                for (line, row) in s.rational_rows()? {
                    if row.len() != 4 || (0..3).any(|i| !row[i].is_integer()) {
                        return Err(Error::parse(line, 1, "bracket lines read `i j k c`"));
                    }
                    let idx = |i: usize| row[i].to_integer().try_into().unwrap_or(0usize);
                    entries.push((idx(0), idx(1), idx(2), Scalar::real(row[3].clone())));
                }
                Ok(PoissonStructure::Linear(LieAlgebra::from_entries(n, &entries)?))
            }
            _ => Err(Error::parse(1, 1, "give exactly one of `pi:` or `bracket:`")),
        }
    }

    /// `{f, g}` computed directly from the structure.
    pub fn bracket(&self, f: &FormalSeries, g: &FormalSeries) -> FormalSeries {
        let n = self.dim();
        let vs = f.vars().clone();
        let t = f.trunc().max(g.trunc());
        let (f, g) = (f.with_trunc(t), g.with_trunc(t));
        let mut out = FormalSeries::zero(&vs, t);
        for i in 0..n {
            for j in 0..n {
                let w = match self {
                    PoissonStructure::Constant(m) => FormalSeries::constant(&vs, t, m[(i, j)].clone()),
                    PoissonStructure::Linear(l) => (0..n).fold(FormalSeries::zero(&vs, t), |a, k| {
                        &a + &FormalSeries::var(&vs, t, Var::x(k as u16 + 1)).unwrap().scale(&l.at(i, j, k))
                    }),
                };
                if w.is_zero() {
                    continue;
                }
                out = &out + &(&w * &(&f.derive_index(i) * &g.derive_index(j)));
            }
        }
        out
    }
}

/// `p1..pn, q1..qn, x1..xn`.
pub fn monoid_vars(n: usize) -> VarSet {
    let mut v: Vec<Var> = (1..=n as u16).map(Var::p).collect();
    v.extend((1..=n as u16).map(Var::q));
    v.extend((1..=n as u16).map(Var::x));
    VarSet::new(v)
}

/// `S(p, q, x) = <p + q, x> + T(p, q, x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonoidGenFun {
    pub n: usize,
    pub s: FormalSeries,
    /// Momentum degree through which `S` is known; `None` for an exact polynomial.
    pub momentum_order: Option<u32>,
}

impl MonoidGenFun {
    pub fn new(s: FormalSeries, momentum_order: Option<u32>) -> Result<Self> {
        let n = s.vars().len() / 3;
        if *s.vars() != monoid_vars(n) {
            return Err(Error::Dimension(format!("a monoid generating function lives over p, q, x, got {:?}", s.vars())));
        }
        let m = MonoidGenFun { n, s, momentum_order };
        let t = m.t_part();
        let mask_p: Vec<bool> = (0..3 * n).map(|i| i < n).collect();
        let mask_q: Vec<bool> = (0..3 * n).map(|i| (n..2 * n).contains(&i)).collect();
        if t.terms().keys().any(|mo| mo.degree_in(&mask_p) == 0 || mo.degree_in(&mask_q) == 0) {
            return Err(Error::Constraint("unit law T(p, 0, x) = T(0, q, x) = 0 fails".into()));
        }
        Ok(m)
    }

    /// `T = S - <p + q, x>`.
    pub fn t_part(&self) -> FormalSeries {
        let n = self.n;
        let mut t = self.s.clone();
        for i in 0..n {
            for block in [0, n] {
                let mut e = vec![0; 3 * n];
                e[block + i] = 1;
                e[2 * n + i] = 1;
                t.add_term(Mono::from_exps(&e), -Scalar::one());
            }
        }
        t
    }
}

fn pairing_pq_x(vs: &VarSet, n: usize, trunc: u32) -> FormalSeries {
    let mut s = FormalSeries::zero(vs, trunc);
    for i in 0..n {
        for block in [0, n] {
            let mut e = vec![0; 3 * n];
            e[block + i] = 1;
            e[2 * n + i] = 1;
            s.add_term(Mono::from_exps(&e), Scalar::one());
        }
    }
    s
}

/// `S = <p + q, x> + ½ <p, π q>`.
pub fn monoid_genfun_constant(pi: &Matrix) -> Result<MonoidGenFun> {
    if !pi.is_square() || !pi.is_antisymmetric() {
        return Err(Error::Constraint("π must be an antisymmetric square matrix".into()));
    }
    let n = pi.rows();
    if 3 * n > MAX_VARS {
        return Err(Error::Dimension(format!("dimension {n} exceeds the supported size")));
    }
    let vs = monoid_vars(n);
    let mut s = pairing_pq_x(&vs, n, 2);
    let half = Scalar::ratio(1, 2);
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0; 3 * n];
            e[i] += 1;
            e[n + j] += 1;
            s.add_term(Mono::from_exps(&e), &half * &pi[(i, j)]);
        }
    }
    MonoidGenFun::new(s, None)
}

/// `S = <x, BCH(p, q)>` through momentum degree `order` (exact for nilpotent algebras of step ≤ `order`).
pub fn monoid_genfun_linear(lie: &LieAlgebra, order: u32) -> Result<MonoidGenFun> {
    let n = lie.n;
    if 3 * n > MAX_VARS {
        return Err(Error::Dimension(format!("dimension {n} exceeds the supported size")));
    }
    let step = lie.nilpotency_step();
    let exact = step.is_some_and(|s| s as u32 <= order);
    let order = match step {
        Some(s) if exact => (s as u32).max(1),
        _ => order,
    };
    let z = bch(lie, order);
    let vs = monoid_vars(n);
    let map: Vec<usize> = (0..2 * n).collect();
    let mut s = FormalSeries::zero(&vs, order + 1);
    for (k, zk) in z.iter().enumerate() {
        let xk = FormalSeries::var(&vs, order + 1, Var::x(k as u16 + 1)).unwrap();
        s = &s + &(&xk * &zk.relabel(&vs, &map, order + 1));
    }
    MonoidGenFun::new(s, if exact { None } else { Some(order) })
}

fn max_coeff_degree(f: &HbarSeries) -> u32 {
    f.coeffs().iter().filter_map(|c| c.max_degree()).max().unwrap_or(0)
}

/// The star product of two polynomial (ħ-dependent) functions over `x1..xn` up to ħ^`order`.
pub fn star_product(m: &MonoidGenFun, f: &HbarSeries, g: &HbarSeries, order: u32) -> Result<HbarSeries> {
    let n = m.n;
    let xs = VarSet::positions(n);
    if *f.vars() != xs || *g.vars() != xs {
        return Err(Error::Dimension(format!("star product on R^{n} needs functions of x1..x{n}")));
    }
    let (df, dg) = (max_coeff_degree(f), max_coeff_degree(g));
    if let Some(mo) = m.momentum_order {
        if df + dg > mo {
            return Err(Error::Invalid(format!(
                "degrees {df} + {dg} need the generating function through momentum degree {}, it is known through {mo}",
                df + dg
            )));
        }
    }
    let trunc = df + dg + 2 * order;
    let mut out = HbarSeries::zero(&xs, trunc, order);
    for (a, fa) in f.coeffs().iter().enumerate() {
        for (b, gb) in g.coeffs().iter().enumerate() {
            let shift = (a + b) as u32;
            if shift > order || fa.is_zero() || gb.is_zero() {
                continue;
            }
            let r = star_poly(m, fa, gb, order - shift, trunc)?;
            out = out.add(&r.shift(shift))?;
        }
    }
    Ok(out)
}

/// Star product of two exact polynomials.
fn star_poly(m: &MonoidGenFun, f: &FormalSeries, g: &FormalSeries, order: u32, trunc: u32) -> Result<HbarSeries> {
    let n = m.n;
    let xs = VarSet::positions(n);
    let (df, dg) = (f.max_degree().unwrap_or(0), g.max_degree().unwrap_or(0));
    let mask_p: Vec<bool> = (0..3 * n).map(|i| i < n).collect();
    let mask_q: Vec<bool> = (0..3 * n).map(|i| (n..2 * n).contains(&i)).collect();
    let keep = |mo: Mono| mo.degree_in(&mask_p) <= df && mo.degree_in(&mask_q) <= dg;
    let big = 2 * (df + dg) + 2;
    let t_part = m.t_part().filter(keep);
    let t = FormalSeries::from_terms(t_part.vars(), big, t_part.terms().iter().map(|(k, v)| (*k, v.clone())));
    let f = f.with_trunc(df);
    let g = g.with_trunc(dg);
    let mut df_cache: HashMap<Mono, FormalSeries> = HashMap::new();
    let mut dg_cache: HashMap<Mono, FormalSeries> = HashMap::new();
    let mut coeffs = vec![FormalSeries::zero(&xs, trunc); order as usize + 1];
    let mut power = FormalSeries::one(t.vars(), big);
    let mut k = 0u32;
    loop {
        for (mo, c) in power.terms() {
            let exps = mo.exps(3 * n);
            let na: u32 = exps[..n].iter().sum();
            let nb: u32 = exps[n..2 * n].iter().sum();
            assert!(na + nb >= k, "negative ħ power in the star product");
            let hp = na + nb - k;
            if hp > order {
                continue;
            }
            let alpha = Mono::from_exps(&exps[..n]);
            let beta = Mono::from_exps(&exps[n..2 * n]);
            let gamma = Mono::from_exps(&exps[2 * n..]);
            let da = df_cache.entry(alpha).or_insert_with(|| derivative(&f, &exps[..n])).clone();
            let db = dg_cache.entry(beta).or_insert_with(|| derivative(&g, &exps[n..2 * n])).clone();
            if da.is_zero() || db.is_zero() {
                continue;
            }
            // i^k (-i)^{|α|+|β|}
            let phase = Scalar::i_pow(k as i64 - (na + nb) as i64);
            let xg = FormalSeries::from_terms(&xs, trunc, [(gamma, c * &phase)]);
            let prod = &(&xg * &da.with_trunc(trunc)) * &db.with_trunc(trunc);
            let slot = &mut coeffs[hp as usize];
            *slot = &*slot + &prod.with_trunc(slot.trunc());
        }
        k += 1;
        if 2 * k > df + dg {
            break;
        }
        power = (&power * &t).filter(keep).scale(&Scalar::ratio(1, k as i64));
        if power.is_zero() {
            break;
        }
    }
    let coeffs = coeffs.into_iter().enumerate().map(|(j, c)| c.with_trunc(trunc - 2 * j as u32)).collect();
    HbarSeries::from_coeffs(&xs, trunc, coeffs)
}

fn derivative(f: &FormalSeries, alpha: &[u32]) -> FormalSeries {
    let mut d = f.clone();
    for (i, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            d = d.derive_index(i);
        }
    }
    d
}

/// Closed-form Moyal product `exp(-(iħ/2) π^{ij} ∂_i ⊗ ∂_j)(f ⊗ g)` up to ħ^`order`.
pub fn moyal_closed_form(pi: &Matrix, f: &FormalSeries, g: &FormalSeries, order: u32) -> Result<HbarSeries> {
    let n = pi.rows();
    let xs = VarSet::positions(n);
    let (df, dg) = (f.max_degree().unwrap_or(0), g.max_degree().unwrap_or(0));
    let trunc = df + dg + 2 * order;
    let f = f.with_trunc(trunc);
    let g = g.with_trunc(trunc);
    let mut coeffs = vec![FormalSeries::zero(&xs, trunc); order as usize + 1];
    // level k: list of (coefficient, ∂f, ∂g)
    let mut level = vec![(Scalar::one(), f, g)];
    let step = &-Scalar::i() * &Scalar::ratio(1, 2);
    for (k, slot) in coeffs.iter_mut().enumerate() {
        for (c, a, b) in &level {
            *slot = &*slot + &(a * b).scale(c);
        }
        let mut next = Vec::new();
        for (c, a, b) in &level {
            for i in 0..n {
                for j in 0..n {
                    if pi[(i, j)].is_zero() {
                        continue;
                    }
                    let (da, db) = (a.derive_index(i), b.derive_index(j));
                    if da.is_zero() || db.is_zero() {
                        continue;
                    }
                    let w = &(&(c * &step) * &pi[(i, j)]) * &Scalar::ratio(1, k as i64 + 1);
                    next.push((w, da, db));
                }
            }
        }
        level = next;
    }
    let coeffs = coeffs.into_iter().enumerate().map(|(j, c)| c.with_trunc(trunc - 2 * j as u32)).collect();
    HbarSeries::from_coeffs(&xs, trunc, coeffs)
}

/// An element of the enveloping algebra with `ν`: `(sorted word, ν power) -> coefficient`.
type Uea = HashMap<(Vec<usize>, u32), Scalar>;

fn uea_add(out: &mut Uea, key: (Vec<usize>, u32), c: Scalar) {
    let e = out.entry(key).or_insert_with(Scalar::zero);
    *e += &c;
}

/// Rewrites a word in PBW order with `e_j e_i = e_i e_j + ν [e_j, e_i]`.
fn normal_order(lie: &LieAlgebra, word: Vec<usize>, nu: u32, c: Scalar, out: &mut Uea) {
    if c.is_zero() {
        return;
    }
    match word.windows(2).position(|w| w[0] > w[1]) {
        None => uea_add(out, (word, nu), c),
        Some(i) => {
            let (a, b) = (word[i], word[i + 1]);
            let mut swapped = word.clone();
            swapped.swap(i, i + 1);
            normal_order(lie, swapped, nu, c.clone(), out);
            for k in 0..lie.n {
                let ck = lie.at(a, b, k);
                if ck.is_zero() {
                    continue;
                }
                let mut w = word[..i].to_vec();
                w.push(k);
                w.extend_from_slice(&word[i + 2..]);
                normal_order(lie, w, nu + 1, &c * &ck, out);
            }
        }
    }
}

fn permutations(word: &[usize]) -> Vec<Vec<usize>> {
    if word.len() <= 1 {
        return vec![word.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..word.len() {
        let mut rest = word.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Symmetrization of `ξ^word` in PBW form.
fn symmetrize(lie: &LieAlgebra, word: &[usize], nu: u32, c: &Scalar) -> Uea {
    let perms = permutations(word);
    let w = c * &Scalar::ratio(1, perms.len() as i64);
    let mut out = Uea::new();
    for p in perms {
        normal_order(lie, p, nu, w.clone(), &mut out);
    }
    out
}

fn word_of(m: Mono, n: usize) -> Vec<usize> {
    (0..n).flat_map(|i| std::iter::repeat_n(i, m.exp(i) as usize)).collect()
}

/// Gutt's product through the enveloping algebra: `σ⁻¹(σ(f) σ(g))` with `ν = -iħ`
/// and PBW-symmetrization `σ`. Degrees up to 3.
pub fn gutt_oracle(lie: &LieAlgebra, f: &FormalSeries, g: &FormalSeries, order: u32) -> Result<HbarSeries> {
    let n = lie.n;
    let (df, dg) = (f.max_degree().unwrap_or(0), g.max_degree().unwrap_or(0));
    if df > 3 || dg > 3 {
        return Err(Error::Invalid("the enveloping-algebra oracle supports degree <= 3".into()));
    }
    let mut prod = Uea::new();
    for (mf, cf) in f.terms() {
        for (mg, cg) in g.terms() {
            let sf = symmetrize(lie, &word_of(*mf, n), 0, cf);
            let sg = symmetrize(lie, &word_of(*mg, n), 0, cg);
            for ((wa, na), ca) in &sf {
                for ((wb, nb), cb) in &sg {
                    let mut w = wa.clone();
                    w.extend_from_slice(wb);
                    normal_order(lie, w, na + nb, ca * cb, &mut prod);
                }
            }
        }
    }
    let xs = VarSet::positions(n);
    let trunc = df + dg + 2 * order;
    let mut coeffs = vec![FormalSeries::zero(&xs, trunc); order as usize + 1];
    // peel off the highest-degree PBW term each time
    loop {
        prod.retain(|_, c| !c.is_zero());
        let Some(key) = prod.keys().max_by_key(|(w, nu)| (w.len(), std::cmp::Reverse(*nu), w.clone())).cloned() else {
            break;
        };
        let c = prod[&key].clone();
        let (w, nu) = key;
        let mut exps = vec![0u32; n];
        for &i in &w {
            exps[i] += 1;
        }
        if nu <= order {
            // ν^nu = (-i)^nu ħ^nu
            let slot = &mut coeffs[nu as usize];
            slot.add_term(Mono::from_exps(&exps), &c * &Scalar::i_pow(-(nu as i64)));
        }
        for (k, v) in symmetrize(lie, &w, nu, &c) {
            uea_add(&mut prod, k, -v);
        }
    }
    let coeffs = coeffs.into_iter().enumerate().map(|(j, c)| c.with_trunc(trunc - 2 * j as u32)).collect();
    HbarSeries::from_coeffs(&xs, trunc, coeffs)
}

/// Outcome of [`associativity_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssocReport {
    pub trials: usize,
    pub order: u32,
    /// First failing trial: index, the three inputs, and the lowest ħ power that differs.
    pub failure: Option<(usize, [String; 3], u32)>,
}

impl AssocReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for AssocReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "associative in {} trials to hbar^{}", self.trials, self.order),
            Some((i, [a, b, c], j)) => {
                write!(f, "trial {i}: (f*g)*h != f*(g*h) at hbar^{j} for f = {a}, g = {b}, h = {c}")
            }
        }
    }
}

/// Random polynomial of degree ≤ `deg` with small integer coefficients.
pub fn random_poly(rng: &mut impl Rng, n: usize, deg: u32) -> FormalSeries {
    let xs = VarSet::positions(n);
    let mut s = FormalSeries::zero(&xs, deg);
    for _ in 0..4 {
        let mut e = vec![0u32; n];
        let d = rng.gen_range(0..=deg);
        for _ in 0..d {
            e[rng.gen_range(0..n)] += 1;
        }
        s.add_term(Mono::from_exps(&e), Scalar::from(rng.gen_range(-3i64..=3)));
    }
    s
}

/// Randomized `(f⋆g)⋆h = f⋆(g⋆h)` to ħ^`order` with inputs of degree ≤ `deg`.
pub fn associativity_check(m: &MonoidGenFun, order: u32, trials: usize, deg: u32, seed: u64) -> Result<AssocReport> {
    let n = m.n;
    let inputs: Vec<[FormalSeries; 3]> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..trials).map(|_| [0, 1, 2].map(|_| random_poly(&mut rng, n, deg))).collect()
    };
    let lift = |s: &FormalSeries| {
        let d = s.max_degree().unwrap_or(0);
        let t = d + 2 * order;
        let mut coeffs = vec![s.with_trunc(t)];
        coeffs.extend((1..=order).map(|j| FormalSeries::zero(s.vars(), t - 2 * j)));
        HbarSeries::from_coeffs(s.vars(), t, coeffs)
    };
    let results: Vec<Result<Option<u32>>> = inputs
        .par_iter()
        .map(|[a, b, c]| {
            let (a, b, c) = (lift(a)?, lift(b)?, lift(c)?);
            let left = star_product(m, &star_product(m, &a, &b, order)?, &c, order)?;
            let right = star_product(m, &a, &star_product(m, &b, &c, order)?, order)?;
            let t = left.trunc().min(right.trunc());
            let d = left.truncated(t, order).sub(&right.truncated(t, order))?;
            Ok((0..=d.order()).find(|&j| !d.coeff(j as usize).is_zero()))
        })
        .collect();
    for (i, r) in results.into_iter().enumerate() {
        if let Some(j) = r? {
            let [a, b, c] = &inputs[i];
            return Ok(AssocReport {
                trials,
                order,
                failure: Some((i, [print_formal(a), print_formal(b), print_formal(c)], j)),
            });
        }
    }
    Ok(AssocReport { trials, order, failure: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_series, print_hbar};

    fn poly(s: &str, n: usize) -> FormalSeries {
        let xs = VarSet::positions(n);
        parse_series(s, &xs, 12, 0).unwrap().into_formal().unwrap()
    }

    fn hpoly(s: &str, n: usize, order: u32) -> HbarSeries {
        let f = poly(s, n);
        let d = f.max_degree().unwrap_or(0);
        let t = d + 2 * order;
        let mut coeffs = vec![f.with_trunc(t)];
        coeffs.extend((1..=order).map(|j| FormalSeries::zero(f.vars(), t - 2 * j)));
        HbarSeries::from_coeffs(f.vars(), t, coeffs).unwrap()
    }

    fn symplectic() -> Matrix {
        Matrix::from_rows(vec![vec![Scalar::zero(), Scalar::one()], vec![-Scalar::one(), Scalar::zero()]])
    }

    #[test]
    fn bernoulli_numbers() {
        let b = bernoulli(6);
        let r = |a: i64, d: i64| BigRational::new(a.into(), d.into());
        assert_eq!(b[1], r(-1, 2));
        assert_eq!(b[2], r(1, 6));
        assert_eq!(b[4], r(-1, 30));
        assert_eq!(b[6], r(1, 42));
    }

    #[test]
    fn bch_low_orders() {
        let ab = bch(&LieAlgebra::abelian(2), 5);
        assert_eq!(print_formal(&ab[0]), "p1 + q1");
        let h = bch(&LieAlgebra::heisenberg(), 6);
        assert_eq!(print_formal(&h[2]), "p3 + q3 + 1/2*p1*q2 - 1/2*p2*q1");
        assert_eq!(LieAlgebra::heisenberg().nilpotency_step(), Some(2));
        assert_eq!(LieAlgebra::so3().nilpotency_step(), None);
        assert_eq!(LieAlgebra::abelian(3).nilpotency_step(), Some(1));
    }

    #[test]
    fn jacobi_is_enforced() {
        // [e1,e2] = e1, [e2,e3] = e2, [e1,e3] = e3 violates Jacobi
        let one = Scalar::one();
        let bad = LieAlgebra::from_entries(3, &[(1, 2, 1, one.clone()), (2, 3, 2, one.clone()), (1, 3, 3, one)]);
        assert!(matches!(bad, Err(Error::Constraint(_))));
    }

    #[test]
    fn zero_structure_is_pointwise() {
        let m = monoid_genfun_constant(&Matrix::zeros(2, 2)).unwrap();
        let s = star_product(&m, &hpoly("x1^2 + x1*x2", 2, 3), &hpoly("x2^3 - 2*x1", 2, 3), 3).unwrap();
        let prod = &poly("x1^2 + x1*x2", 2) * &poly("x2^3 - 2*x1", 2);
        assert_eq!(s.coeff(0).clone(), prod.with_trunc(s.trunc()));
        assert!((1..=3).all(|j| s.coeff(j).is_zero()));
    }

    #[test]
    fn moyal_matches_closed_form() {
        let pi = symplectic();
        let m = monoid_genfun_constant(&pi).unwrap();
        for (a, b) in [("x1", "x2"), ("x1^2*x2", "x2^2 + x1^3"), ("x1^3*x2 + x2", "x1*x2^2")] {
            let s = star_product(&m, &hpoly(a, 2, 4), &hpoly(b, 2, 4), 4).unwrap();
            let c = moyal_closed_form(&pi, &poly(a, 2), &poly(b, 2), 4).unwrap();
            assert_eq!(s, c, "{a} * {b}");
        }
        let xp = star_product(&m, &hpoly("x1", 2, 2), &hpoly("x2", 2, 2), 2).unwrap();
        let px = star_product(&m, &hpoly("x2", 2, 2), &hpoly("x1", 2, 2), 2).unwrap();
        assert_eq!(print_hbar(&xp.sub(&px).unwrap()), "hbar*(-i)");
    }

    #[test]
    fn linear_matches_gutt() {
        for lie in [LieAlgebra::heisenberg(), LieAlgebra::so3()] {
            let m = monoid_genfun_linear(&lie, 6).unwrap();
            for (a, b) in [("x1", "x2"), ("x1*x2", "x3^2"), ("x1^2*x3", "x2 + x1*x2")] {
                let s = star_product(&m, &hpoly(a, 3, 3), &hpoly(b, 3, 3), 3).unwrap();
                let g = gutt_oracle(&lie, &poly(a, 3), &poly(b, 3), 3).unwrap();
                let t = s.trunc().min(g.trunc());
                assert_eq!(s.truncated(t, 3), g.truncated(t, 3), "{a} * {b}");
            }
        }
    }

    #[test]
    fn first_order_bracket() {
        let f = poly("x1^2*x2 + x3", 3);
        let g = poly("x2*x3 + x1", 3);
        let lie = LieAlgebra::so3();
        let m = monoid_genfun_linear(&lie, 6).unwrap();
        let hf = hpoly("x1^2*x2 + x3", 3, 2);
        let hg = hpoly("x2*x3 + x1", 3, 2);
        let c = star_product(&m, &hf, &hg, 2).unwrap().sub(&star_product(&m, &hg, &hf, 2).unwrap()).unwrap();
        let br = PoissonStructure::Linear(lie).bracket(&f, &g);
        assert_eq!(c.coeff(1).clone(), br.scale(&-Scalar::i()).with_trunc(c.coeff(1).trunc()));
    }

    #[test]
    fn unit_and_associativity() {
        let m = monoid_genfun_linear(&LieAlgebra::heisenberg(), 6).unwrap();
        let one = hpoly("1", 3, 3);
        let f = hpoly("x1^2 + x2*x3", 3, 3);
        let t = f.trunc();
        assert_eq!(star_product(&m, &one, &f, 3).unwrap().truncated(t, 3), f);
        assert_eq!(star_product(&m, &f, &one, 3).unwrap().truncated(t, 3), f);
        assert!(associativity_check(&m, 3, 4, 2, 7).unwrap().passed());
        let moyal = monoid_genfun_constant(&symplectic()).unwrap();
        assert!(associativity_check(&moyal, 4, 4, 3, 11).unwrap().passed());
    }

    #[test]
    fn truncated_generating_function_refuses_high_degree() {
        let m = monoid_genfun_linear(&LieAlgebra::so3(), 3).unwrap();
        assert!(star_product(&m, &hpoly("x1^2", 3, 1), &hpoly("x2^2", 3, 1), 1).is_err());
    }
}
