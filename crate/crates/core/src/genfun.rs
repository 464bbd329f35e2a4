//! Local generating functions of symplectic micromorphisms and their composition.
//!
//! A micromorphism `U -> V` with `U ⊂ R^k`, `V ⊂ R^l` is encoded by its core map
//! `φ: V -> U` (k position jets in `x1..xl`) and a deformation `f(p, x)` with
//! momentum degree at least 2. The full generating function is
//! `F(p, x) = <p, φ(x)> + f(p, x)` and the phase of the quantization is
//! `S(p1, x1, x2) = <p1, φ(x2) - x1> + f(p1, x2)`.
//!
//! Core maps vanish at the origin. A costate's base point is carried separately
//! by the calculus layer.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::series::{solve_implicit, FormalSeries, Mono, Role, Scalar, Var, VarSet};

#[derive(Clone, Debug)]
pub struct GenFun {
    k: usize,
    l: usize,
    trunc: u32,
    core: Vec<FormalSeries>,
    f: FormalSeries,
    /// `F` is exactly the stored polynomial (no unknown terms above the truncation).
    poly: bool,
}

impl PartialEq for GenFun {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.l == other.l && self.trunc == other.trunc && self.core == other.core && self.f == other.f
    }
}

impl Eq for GenFun {}

fn momentum_mask(vars: &VarSet) -> Vec<bool> {
    vars.vars().iter().map(|v| v.role == Role::Momentum).collect()
}

/// Term `m` of a series over `vars` as printable text.
pub(crate) fn mono_text(m: Mono, vars: &VarSet) -> String {
    let s = FormalSeries::from_terms(vars, m.degree(), [(m, Scalar::one())]);
    crate::expr::print_formal(&s)
}

impl GenFun {
    /// Validated generating function from a core map and a deformation over
    /// `phase_space(k, l)`. The result is treated as an exact polynomial.
    pub fn new(core: Vec<FormalSeries>, f: FormalSeries) -> Result<Self> {
        let k = f.vars().count_role(Role::Momentum);
        let l = f.vars().count_role(Role::Position);
        if *f.vars() != VarSet::phase_space(k, l) {
            return Err(Error::Dimension(format!("deformation must live over p1..pk, x1..xl, got {:?}", f.vars())));
        }
        if core.len() != k {
            return Err(Error::Dimension(format!("core map has {} components, expected {k}", core.len())));
        }
        let xs = VarSet::positions(l);
        let mut trunc = f.trunc();
        for (i, c) in core.iter().enumerate() {
            if *c.vars() != xs {
                return Err(Error::Dimension(format!("core component {} must live over x1..x{l}", i + 1)));
            }
            if !c.constant_term().is_zero() {
                return Err(Error::Constraint(format!(
                    "core component {} has constant term {}; core maps must vanish at the origin",
                    i + 1,
                    c.constant_term()
                )));
            }
            trunc = trunc.min(c.trunc());
        }
        let mask = momentum_mask(f.vars());
        for m in f.terms().keys() {
            let d = m.degree_in(&mask);
            if d < 2 {
                return Err(Error::Constraint(format!(
                    "deformation term `{}` has momentum degree {d}; f(0,x) = 0 and d_p f(0,x) = 0 need degree >= 2",
                    mono_text(*m, f.vars())
                )));
            }
        }
        Ok(GenFun {
            k,
            l,
            trunc,
            core: core.iter().map(|c| c.with_trunc(trunc)).collect(),
            f: f.with_trunc(trunc),
            poly: true,
        })
    }

    /// Splits a full generating function `F = <p, φ(x)> + f` into core and deformation.
    pub fn from_big_f(big_f: &FormalSeries, poly: bool) -> Result<Self> {
        let vars = big_f.vars();
        let k = vars.count_role(Role::Momentum);
        let l = vars.count_role(Role::Position);
        let xs = VarSet::positions(l);
        let mask = momentum_mask(vars);
        let mut core = vec![FormalSeries::zero(&xs, big_f.trunc()); k];
        let mut f = FormalSeries::zero(vars, big_f.trunc());
        for (m, c) in big_f.terms() {
            match m.degree_in(&mask) {
                0 => {
                    return Err(Error::Constraint(format!(
                        "generating function term `{}` has no momentum factor",
                        mono_text(*m, vars)
                    )))
                }
                1 => {
                    let i = (0..k).find(|&i| m.exp(i) == 1).unwrap();
                    let rest = m.lower(i).unwrap();
                    let exps: Vec<u32> = (k..k + l).map(|j| rest.exp(j)).collect();
                    core[i].add_term(Mono::from_exps(&exps), c.clone());
                }
                _ => f.add_term(*m, c.clone()),
            }
        }
        let mut g = GenFun::new(core, f)?;
        g.trunc = big_f.trunc();
        g.poly = poly;
        Ok(g)
    }

    pub fn identity(n: usize, trunc: u32) -> Self {
        let xs = VarSet::positions(n);
        let core = (1..=n).map(|i| FormalSeries::var(&xs, trunc, Var::x(i as u16)).unwrap()).collect();
        GenFun::new(core, FormalSeries::zero(&VarSet::phase_space(n, n), trunc)).unwrap()
    }

    /// The cotangent lift of a core map (`f = 0`).
    pub fn cotangent_lift(core: Vec<FormalSeries>, l: usize, trunc: u32) -> Result<Self> {
        let k = core.len();
        GenFun::new(core, FormalSeries::zero(&VarSet::phase_space(k, l), trunc))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn core(&self) -> &[FormalSeries] {
        &self.core
    }

    pub fn f(&self) -> &FormalSeries {
        &self.f
    }

    pub fn is_poly(&self) -> bool {
        self.poly
    }

    pub fn vars(&self) -> VarSet {
        VarSet::phase_space(self.k, self.l)
    }

    /// Marks the stored data as a truncation of an unknown series.
    pub fn as_truncated(mut self) -> Self {
        self.poly = false;
        self
    }

    /// `f = 0` and a linear core: composing with it keeps polynomials polynomial.
    pub fn is_linear_lift(&self) -> bool {
        self.f.is_zero() && self.core.iter().all(|c| c.max_degree().is_none_or(|d| d <= 1))
    }

    /// `F = <p, φ(x)> + f` at truncation `trunc`.
    pub fn big_f(&self) -> FormalSeries {
        self.big_f_at(self.trunc)
    }

    /// `F` at a working truncation; polynomial data is lifted, truncated data is capped.
    pub fn big_f_at(&self, nw: u32) -> FormalSeries {
        let t = if self.poly { nw } else { nw.min(self.trunc) };
        let vs = self.vars();
        let mut out = self.f.with_trunc(t);
        for (i, c) in self.core.iter().enumerate() {
            let p = FormalSeries::var(&vs, t, Var::p(i as u16 + 1)).unwrap();
            let phi = c.with_trunc(t).embed(&vs).unwrap();
            out = &out + &p.mul_unchecked(&phi, t);
        }
        out
    }

    /// The phase `S(p1, x1, x2) = <p1, φ(x2) - x1> + f(p1, x2)` over `(p1..pk, x1..xl, z1..zk)`,
    /// where `z` stands for the source position `x1` and `x` for the target position `x2`.
    pub fn phase(&self) -> FormalSeries {
        let vs = self.vars();
        let mut all: Vec<Var> = vs.vars().to_vec();
        all.extend((1..=self.k).map(|i| Var::z(i as u16)));
        let target = VarSet::new(all);
        let mut s = self.big_f().embed(&target).unwrap();
        for i in 1..=self.k as u16 {
            let p = FormalSeries::var(&target, self.trunc, Var::p(i)).unwrap();
            let z = FormalSeries::var(&target, self.trunc, Var::z(i)).unwrap();
            s = &s - &(&p * &z);
        }
        s
    }

    /// Re-truncates (only downwards for truncated data).
    pub fn with_trunc(&self, n: u32) -> Self {
        let n = if self.poly { n } else { n.min(self.trunc) };
        GenFun {
            k: self.k,
            l: self.l,
            trunc: n,
            core: self.core.iter().map(|c| c.with_trunc(n)).collect(),
            f: self.f.with_trunc(n),
            poly: self.poly,
        }
    }
}

/// The critical section `γ(p1, x3) = (p̄, x̄)` of a composable pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalSection {
    /// `(p1..pk, x1..xm)`: source momenta and target positions.
    pub vars: VarSet,
    pub p_bar: Vec<FormalSeries>,
    pub x_bar: Vec<FormalSeries>,
}

fn check_composable(f: &GenFun, g: &GenFun) -> Result<()> {
    if f.l != g.k {
        return Err(Error::Dimension(format!(
            "cannot compose {}->{} with {}->{}: middle dimensions {} and {} differ",
            f.k, f.l, g.k, g.l, f.l, g.k
        )));
    }
    let n = f.k + f.l + g.k + g.l;
    if n > crate::series::MAX_VARS {
        return Err(Error::Dimension(format!("composition needs {n} variables, at most {} supported", crate::series::MAX_VARS)));
    }
    Ok(())
}

fn var_images(vars: &VarSet, trunc: u32, mut img: impl FnMut(Var) -> FormalSeries) -> Vec<FormalSeries> {
    vars.vars().iter().map(|&v| img(v).with_trunc(trunc)).collect()
}

/// Solves `p̄ = ∂_x F(p1, x̄)`, `x̄ = ∂_p G(p̄, x3)` at working truncation `nw`.
pub fn critical_point_at(fgf: &GenFun, ggf: &GenFun, nw: u32) -> Result<CriticalSection> {
    check_composable(fgf, ggf)?;
    let (k, l, m) = (fgf.k, fgf.l, ggf.l);
    let big_f = fgf.big_f_at(nw);
    let big_g = ggf.big_f_at(nw);
    let t = big_f.trunc().min(big_g.trunc());
    let mut all = Vec::new();
    all.extend((1..=k).map(|i| Var::p(i as u16)));
    all.extend((1..=l).map(|j| Var::q(j as u16)));
    all.extend((1..=m).map(|i| Var::x(i as u16)));
    all.extend((1..=l).map(|j| Var::z(j as u16)));
    let all = VarSet::new(all);
    let v = |var: Var| FormalSeries::var(&all, t, var).unwrap();
    let f_imgs = var_images(big_f.vars(), t, |w| match w.role {
        Role::Momentum => v(Var::p(w.index)),
        _ => v(Var::z(w.index)),
    });
    let g_imgs = var_images(big_g.vars(), t, |w| match w.role {
        Role::Momentum => v(Var::q(w.index)),
        _ => v(Var::x(w.index)),
    });
    let mut eqs = Vec::with_capacity(2 * l);
    for j in 1..=l as u16 {
        let dfx = big_f.derive(Var::x(j))?.compose(&all, &f_imgs)?;
        eqs.push(&v(Var::q(j)) - &dfx);
    }
    for j in 1..=l as u16 {
        let dgp = big_g.derive(Var::p(j))?.compose(&all, &g_imgs)?;
        eqs.push(&v(Var::z(j)) - &dgp);
    }
    let mut unknowns: Vec<Var> = (1..=l).map(|j| Var::q(j as u16)).collect();
    unknowns.extend((1..=l).map(|j| Var::z(j as u16)));
    let (vars, sol) = solve_implicit(&eqs, &unknowns)?;
    let (p_bar, x_bar) = sol.split_at(l);
    Ok(CriticalSection { vars, p_bar: p_bar.to_vec(), x_bar: x_bar.to_vec() })
}

pub fn critical_point(fgf: &GenFun, ggf: &GenFun) -> Result<CriticalSection> {
    critical_point_at(fgf, ggf, fgf.trunc.min(ggf.trunc))
}

/// `F(p1, x̄) + G(p̄, x3) - <p̄, x̄>` along the critical section.
fn stationary_value(fgf: &GenFun, ggf: &GenFun, cs: &CriticalSection, nw: u32) -> Result<FormalSeries> {
    let big_f = fgf.big_f_at(nw);
    let big_g = ggf.big_f_at(nw);
    let target = &cs.vars;
    let t = cs.p_bar.first().map_or(nw.min(big_f.trunc()).min(big_g.trunc()), |s| s.trunc());
    let v = |var: Var| FormalSeries::var(target, t, var).unwrap();
    let f_imgs = var_images(big_f.vars(), t, |w| match w.role {
        Role::Momentum => v(w),
        _ => cs.x_bar[w.index as usize - 1].clone(),
    });
    let g_imgs = var_images(big_g.vars(), t, |w| match w.role {
        Role::Momentum => cs.p_bar[w.index as usize - 1].clone(),
        _ => v(w),
    });
    let mut h = &big_f.compose(target, &f_imgs)? + &big_g.compose(target, &g_imgs)?;
    for (pb, xb) in cs.p_bar.iter().zip(&cs.x_bar) {
        h = &h - &pb.mul_unchecked(xb, t);
    }
    Ok(h)
}

/// The composite `G ∘ F: U -> W` of `F: U -> V` and `G: V -> W`.
pub fn compose_genfun(fgf: &GenFun, ggf: &GenFun) -> Result<GenFun> {
    let n = fgf.trunc.min(ggf.trunc);
    let cs = critical_point_at(fgf, ggf, n)?;
    let h = stationary_value(fgf, ggf, &cs, n)?;
    composite_from_value(fgf, ggf, &h)
}

/// The composite from its stationary value `h`, computed at any working truncation
/// at least `min(N_f, N_g)`.
pub(crate) fn composite_from_value(fgf: &GenFun, ggf: &GenFun, h: &FormalSeries) -> Result<GenFun> {
    let n = fgf.trunc.min(ggf.trunc);
    let h = h.with_trunc(n);
    // core of the composite: φ ∘ ψ
    let xs = VarSet::positions(ggf.l);
    let psi: Vec<FormalSeries> = ggf.core.iter().map(|c| c.with_trunc(n)).collect();
    let core: Vec<FormalSeries> = fgf.core.iter().map(|c| c.with_trunc(n).compose(&xs, &psi)).collect::<Result<_>>()?;
    let vs = VarSet::phase_space(fgf.k, ggf.l);
    let mut f = h.clone();
    for (i, c) in core.iter().enumerate() {
        let p = FormalSeries::var(&vs, n, Var::p(i as u16 + 1)).unwrap();
        f = &f - &p.mul_unchecked(&c.embed(&vs)?, n);
    }
    let out = GenFun::new(core, f);
    assert!(out.is_ok(), "composite violates the generating-function constraints: {:?}", out.err());
    let mut out = out.unwrap();
    out.trunc = n;
    out.poly = fgf.poly && ggf.poly && (fgf.is_linear_lift() || ggf.is_linear_lift());
    Ok(out)
}

/// The recentred phase `Θ(F, G)` in fiber variables `ζ = (δp, δx)`, written
/// `z1..zl` (δp) and `z(l+1)..z(2l)` (δx), with externals `(p1..pk, x1..xm)`.
#[derive(Clone, Debug)]
pub struct Theta {
    pub vars: VarSet,
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub phase: FormalSeries,
    /// Fiber Hessian at the origin of all variables.
    pub hessian: Matrix,
}

impl Theta {
    pub fn fiber_dim(&self) -> usize {
        2 * self.l
    }

    /// Index in `vars` of fiber coordinate `a` (0-based).
    pub fn fiber_index(&self, a: usize) -> usize {
        self.k + self.m + a
    }

    /// The fiber Hessian as series in the externals `(p1..pk, x1..xm)`.
    pub fn hessian_series(&self) -> Vec<Vec<FormalSeries>> {
        let ext = VarSet::phase_space(self.k, self.m);
        let d = self.fiber_dim();
        let ne = self.k + self.m;
        let mut h = vec![vec![FormalSeries::zero(&ext, self.phase.trunc()); d]; d];
        for (mono, c) in self.phase.terms() {
            let fib: Vec<u32> = (0..d).map(|a| mono.exp(ne + a)).collect();
            if fib.iter().sum::<u32>() != 2 {
                continue;
            }
            let idx: Vec<usize> = (0..d).flat_map(|a| std::iter::repeat_n(a, fib[a] as usize)).collect();
            let (a, b) = (idx[0], idx[1]);
            let ext_m = Mono::from_exps(&(0..ne).map(|i| mono.exp(i)).collect::<Vec<_>>());
            let c = if a == b { c * &Scalar::from(2) } else { c.clone() };
            h[a][b].add_term(ext_m, c.clone());
            if a != b {
                h[b][a].add_term(ext_m, c);
            }
        }
        h
    }
}

/// Critical section, stationary value and recentred phase of a composable pair.
#[derive(Clone, Debug)]
pub struct Recentred {
    pub section: CriticalSection,
    pub value: FormalSeries,
    pub theta: Theta,
}

pub fn recentre_at(fgf: &GenFun, ggf: &GenFun, nw: u32) -> Result<Recentred> {
    let cs = critical_point_at(fgf, ggf, nw)?;
    let h = stationary_value(fgf, ggf, &cs, nw)?;
    let t = h.trunc();
    let (k, l, m) = (fgf.k, fgf.l, ggf.l);
    let mut all: Vec<Var> = cs.vars.vars().to_vec();
    all.extend((1..=2 * l).map(|a| Var::z(a as u16)));
    let target = VarSet::new(all);
    let v = |var: Var| FormalSeries::var(&target, t, var).unwrap();
    let emb = |s: &FormalSeries| s.embed(&target).unwrap().with_trunc(t);
    let xb: Vec<FormalSeries> = (0..l).map(|j| &emb(&cs.x_bar[j]) + &v(Var::z((l + j + 1) as u16))).collect();
    let pb: Vec<FormalSeries> = (0..l).map(|j| &emb(&cs.p_bar[j]) + &v(Var::z((j + 1) as u16))).collect();
    let big_f = fgf.big_f_at(nw);
    let big_g = ggf.big_f_at(nw);
    let f_imgs = var_images(big_f.vars(), t, |w| match w.role {
        Role::Momentum => v(w),
        _ => xb[w.index as usize - 1].clone(),
    });
    let g_imgs = var_images(big_g.vars(), t, |w| match w.role {
        Role::Momentum => pb[w.index as usize - 1].clone(),
        _ => v(w),
    });
    let mut phase = &big_f.compose(&target, &f_imgs)? + &big_g.compose(&target, &g_imgs)?;
    for j in 0..l {
        phase = &phase - &pb[j].mul_unchecked(&xb[j], t);
    }
    phase = &phase - &emb(&h);
    let ne = k + m;
    let fiber_mask: Vec<bool> = (0..ne + 2 * l).map(|i| i >= ne).collect();
    debug_assert!(
        phase.terms().keys().all(|mono| mono.degree_in(&fiber_mask) >= 2),
        "recentred phase has constant or linear fiber terms"
    );
    let d = 2 * l;
    let mut hessian = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mono = Mono::unit(ne + a).mul(Mono::unit(ne + b));
            let c = phase.coeff(mono);
            hessian[(a, b)] = if a == b { &c * &Scalar::from(2) } else { c };
        }
    }
    let theta = Theta { vars: target, k, m, l, phase, hessian };
    Ok(Recentred { section: cs, value: h, theta })
}

pub fn theta(fgf: &GenFun, ggf: &GenFun) -> Result<Theta> {
    Ok(recentre_at(fgf, ggf, fgf.trunc.min(ggf.trunc))?.theta)
}

/// Block-diagonal tensor product `F1(p', x') + F2(p'', x'')`.
pub fn tensor_genfun(a: &GenFun, b: &GenFun) -> Result<GenFun> {
    let n = a.trunc.min(b.trunc);
    let (k, l) = (a.k + b.k, a.l + b.l);
    if k + l > crate::series::MAX_VARS {
        return Err(Error::Dimension(format!("tensor product needs {} variables", k + l)));
    }
    let xs = VarSet::positions(l);
    let shift_x = |s: &FormalSeries, off: usize| {
        let map: Vec<usize> = (0..s.vars().len()).map(|i| i + off).collect();
        s.relabel(&xs, &map, n)
    };
    let mut core: Vec<FormalSeries> = a.core.iter().map(|c| shift_x(c, 0)).collect();
    core.extend(b.core.iter().map(|c| shift_x(c, a.l)));
    let vs = VarSet::phase_space(k, l);
    // a's variables (p1..pka, x1..xla) -> indices (0..ka, k..k+la)
    let map_a: Vec<usize> = (0..a.k).chain((0..a.l).map(|j| k + j)).collect();
    let map_b: Vec<usize> = (0..b.k).map(|i| a.k + i).chain((0..b.l).map(|j| k + a.l + j)).collect();
    let f = &a.f.relabel(&vs, &map_a, n) + &b.f.relabel(&vs, &map_b, n);
    let mut out = GenFun::new(core, f)?;
    out.trunc = n;
    out.poly = a.poly && b.poly;
    Ok(out)
}

/// The point: the 0-dimensional identity, unit of the tensor product.
pub fn point_genfun(trunc: u32) -> GenFun {
    GenFun::new(Vec::new(), FormalSeries::zero(&VarSet::empty(), trunc)).unwrap()
}

/// The energy monoid product `T*E ⊗ T*E -> T*E`: the cotangent lift of the
/// diagonal, `S = (t1 + t2) E` with the times in the momentum slots.
pub fn energy_monoid_genfun(trunc: u32) -> GenFun {
    let xs = VarSet::positions(1);
    let e = FormalSeries::var(&xs, trunc, Var::x(1)).unwrap();
    GenFun::cotangent_lift(vec![e.clone(), e], 1, trunc).unwrap()
}

/// The energy monoid unit `pt -> T*E` (zero generating function).
pub fn energy_unit_genfun(trunc: u32) -> GenFun {
    GenFun::new(Vec::new(), FormalSeries::zero(&VarSet::phase_space(0, 1), trunc)).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_series;

    fn ser(text: &str, vars: &VarSet, n: u32) -> FormalSeries {
        parse_series(text, vars, n, 0).unwrap().into_formal().unwrap()
    }

    fn gf(k: usize, l: usize, core: &[&str], f: &str, n: u32) -> GenFun {
        let xs = VarSet::positions(l);
        let ps = VarSet::phase_space(k, l);
        GenFun::new(core.iter().map(|c| ser(c, &xs, n)).collect(), ser(f, &ps, n)).unwrap()
    }

    #[test]
    fn identity_generating_function() {
        let i1 = GenFun::identity(1, 6);
        assert_eq!(crate::expr::print_formal(&i1.big_f()), "p1*x1");
        let i2 = GenFun::identity(2, 6);
        assert_eq!(crate::expr::print_formal(&i2.big_f()), "p1*x1 + p2*x2");
        assert_eq!(crate::expr::print_formal(&i1.phase()), "p1*x1 - p1*z1");
    }

    #[test]
    fn constraint_violations() {
        let xs = VarSet::positions(1);
        let ps = VarSet::phase_space(1, 1);
        let err = GenFun::new(vec![ser("x1", &xs, 4)], ser("p1*x1", &ps, 4)).unwrap_err();
        assert!(matches!(err, Error::Constraint(ref m) if m.contains("p1*x1")), "{err}");
        assert!(GenFun::new(vec![ser("x1^2", &xs, 4)], ser("p1^2*x1", &ps, 4)).is_ok());
        assert!(GenFun::new(vec![ser("1 + x1", &xs, 4)], ser("0", &ps, 4)).is_err());
    }

    #[test]
    fn identity_critical_section() {
        let i = GenFun::identity(1, 5);
        let cs = critical_point(&i, &i).unwrap();
        assert_eq!(cs.p_bar[0], FormalSeries::var(&cs.vars, 5, Var::p(1)).unwrap());
        assert_eq!(cs.x_bar[0], FormalSeries::var(&cs.vars, 5, Var::x(1)).unwrap());
    }

    #[test]
    fn cotangent_lift_section() {
        // x̄ = ψ(x3), p̄ = Dφ(ψ(x3))^T p1
        let n = 5;
        let f = gf(1, 1, &["x1 + x1^2"], "0", n);
        let g = gf(1, 1, &["2*x1 + x1^3"], "0", n);
        let cs = critical_point(&f, &g).unwrap();
        let ps = VarSet::phase_space(1, 1);
        assert_eq!(cs.x_bar[0], ser("2*x1 + x1^3", &ps, n));
        assert_eq!(cs.p_bar[0], ser("p1 + 2*p1*(2*x1 + x1^3)", &ps, n));
        let comp = compose_genfun(&f, &g).unwrap();
        assert!(comp.f().is_zero());
        assert_eq!(comp.core()[0], ser("(2*x1 + x1^3) + (2*x1 + x1^3)^2", &VarSet::positions(1), n));
    }

    #[test]
    fn unit_laws() {
        let f = gf(1, 1, &["x1 - x1^2"], "p1^2*x1 + 1/3*p1^3 - p1^2", 6);
        let i = GenFun::identity(1, 6);
        assert_eq!(compose_genfun(&i, &f).unwrap(), f);
        assert_eq!(compose_genfun(&f, &i).unwrap(), f);
        assert_eq!(compose_genfun(&i, &i).unwrap(), i);
    }

    #[test]
    fn theta_of_identities() {
        let i = GenFun::identity(1, 4);
        let th = theta(&i, &i).unwrap();
        assert_eq!(crate::expr::print_formal(&th.phase), "-z1*z2");
        assert_eq!(th.hessian, Matrix::from_rows(vec![vec![Scalar::zero(), -Scalar::one()], vec![-Scalar::one(), Scalar::zero()]]));
    }

    #[test]
    fn theta_has_no_low_fiber_terms() {
        let f = gf(1, 1, &["x1 + x1^2"], "p1^2*x1 - p1^2", 5);
        let g = gf(1, 1, &["x1 - x1^3"], "p1^3 + 2*p1^2*x1^2 + p1^2", 5);
        let th = theta(&f, &g).unwrap();
        let ne = th.k + th.m;
        let mask: Vec<bool> = (0..th.vars.len()).map(|i| i >= ne).collect();
        assert!(th.phase.terms().keys().all(|m| m.degree_in(&mask) >= 2));
        // block form [[∂²_p G, -1], [-1, ∂²_x F]] at p1 = 0
        let h = th.hessian_series();
        let at_p0 = |s: &FormalSeries| s.filter(|m| m.exp(0) == 0);
        let ext = VarSet::phase_space(1, 1);
        assert_eq!(at_p0(&h[0][1]), ser("-1", &ext, 5));
        assert!(at_p0(&h[1][1]).is_zero());
        // ∂²_p G at p̄ = 0: 2 + 4 x3^2
        assert_eq!(at_p0(&h[0][0]), ser("2 + 4*x1^2", &ext, 5).with_trunc(h[0][0].trunc()));
    }

    #[test]
    fn tensor_with_point_and_identities() {
        let i1 = GenFun::identity(1, 4);
        assert_eq!(tensor_genfun(&i1, &i1).unwrap(), GenFun::identity(2, 4));
        assert_eq!(tensor_genfun(&i1, &point_genfun(4)).unwrap(), i1);
        assert_eq!(tensor_genfun(&point_genfun(4), &i1).unwrap(), i1);
    }

    #[test]
    fn energy_monoid_laws() {
        let n = 4;
        let mu = energy_monoid_genfun(n);
        assert!(mu.f().is_zero());
        let id = GenFun::identity(1, n);
        let left = compose_genfun(&tensor_genfun(&mu, &id).unwrap(), &mu).unwrap();
        let right = compose_genfun(&tensor_genfun(&id, &mu).unwrap(), &mu).unwrap();
        assert_eq!(left, right);
        let e = energy_unit_genfun(n);
        assert_eq!(compose_genfun(&tensor_genfun(&e, &id).unwrap(), &mu).unwrap(), id);
        assert_eq!(compose_genfun(&tensor_genfun(&id, &e).unwrap(), &mu).unwrap(), id);
    }

    #[test]
    fn dimension_mismatch() {
        let a = GenFun::identity(1, 4);
        let b = GenFun::identity(2, 4);
        assert!(matches!(compose_genfun(&a, &b), Err(Error::Dimension(_))));
    }
}
