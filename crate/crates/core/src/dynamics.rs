//! Hamilton-Jacobi generating functions of autonomous flows as time series, and
//! the action of the energy monoid.
//!
//! The flow generating function is `S(t, p, x)` with `p` the initial momentum and
//! `x` the final position: `∂_p S = x_initial`, `∂_x S = p_final`. With these
//! relations the working equation is `∂_t S = -H(∂_x S, x)`, so `S = <p,x> - tH + …`.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::parse_series;
use crate::genfun::{compose_genfun, energy_monoid_genfun, energy_unit_genfun, tensor_genfun, GenFun};
use crate::linalg::Matrix;
use crate::poisson::{monoid_genfun_constant, star_product};
use crate::series::{FormalSeries, HbarSeries, Mono, Scalar, Var, VarSet, MAX_VARS};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hamiltonian {
    n: usize,
    /// Exact polynomial over `(p1..pn, x1..xn)`.
    h: FormalSeries,
}

impl Hamiltonian {
    pub fn new(h: FormalSeries) -> Result<Self> {
        let n = h.vars().len() / 2;
        if *h.vars() != VarSet::phase_space(n, n) {
            return Err(Error::Dimension(format!("a Hamiltonian lives over p1..pn, x1..xn, got {:?}", h.vars())));
        }
        let d = h.max_degree().unwrap_or(0);
        Ok(Hamiltonian { n, h: h.with_trunc(d) })
    }

    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let vs = VarSet::phase_space(n, n);
        let l = parse_series(text, &vs, 255, 0)?;
        if l.uses_hbar {
            return Err(Error::parse(1, 1, "`hbar` is not allowed in a Hamiltonian"));
        }
        Hamiltonian::new(l.into_formal()?)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn series(&self) -> &FormalSeries {
        &self.h
    }

    pub fn degree(&self) -> u32 {
        self.h.max_degree().unwrap_or(0)
    }

    /// Hamilton's equations `ẋ = ∂_p H`, `ṗ = -∂_x H` at `(p, x)`.
    pub fn vector_field(&self, p: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let pt: Vec<f64> = p.iter().chain(x).copied().collect();
        let n = self.n;
        let dx = (0..n).map(|i| self.h.derive_index(i).eval_real(&pt).re).collect();
        let dp = (0..n).map(|i| -self.h.derive_index(n + i).eval_real(&pt).re).collect();
        (dx, dp)
    }
}

/// `S(t, p, x) = Σ_{k ≤ N_t} t^k S_k(p, x)` over `(p1..pn, x1..xn, t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowGenFun {
    pub n: usize,
    pub s: FormalSeries,
    pub t_order: u32,
}

pub fn flow_vars(n: usize) -> VarSet {
    let mut v: Vec<Var> = (1..=n as u16).map(Var::p).collect();
    v.extend((1..=n as u16).map(Var::x));
    v.push(Var::t(0));
    VarSet::new(v)
}

fn t_degree(m: Mono, n: usize) -> u32 {
    m.exp(2 * n)
}

impl FlowGenFun {
    pub fn t_coeff(&self, k: u32) -> FormalSeries {
        let n = self.n;
        let vs = VarSet::phase_space(n, n);
        let map: Vec<usize> = (0..2 * n).collect();
        let terms = self.s.terms().iter().filter(|(m, _)| t_degree(**m, n) == k).map(|(m, c)| {
            let mut out = Mono::ONE;
            for (i, &j) in map.iter().enumerate() {
                out = out.with_exp(j, m.exp(i));
            }
            (out, c.clone())
        });
        FormalSeries::from_terms(&vs, self.s.trunc(), terms)
    }

    /// `S(t)` as a real function.
    pub fn eval(&self, t: f64, p: &[f64], x: &[f64]) -> f64 {
        let pt: Vec<f64> = p.iter().chain(x).copied().chain([t]).collect();
        self.s.eval_real(&pt).re
    }

    /// `(∂_p S, ∂_x S)` at `(t, p, x)`.
    pub fn gradients(&self, t: f64, p: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let pt: Vec<f64> = p.iter().chain(x).copied().chain([t]).collect();
        let n = self.n;
        let dp = (0..n).map(|i| self.s.derive_index(i).eval_real(&pt).re).collect();
        let dx = (0..n).map(|i| self.s.derive_index(n + i).eval_real(&pt).re).collect();
        (dp, dx)
    }
}

/// `H(∂_x S, x)` over the flow variables.
fn h_of_gradient(h: &Hamiltonian, s: &FormalSeries) -> Result<FormalSeries> {
    let n = h.n;
    let vs = s.vars().clone();
    let t = s.trunc();
    let mut images = Vec::with_capacity(2 * n);
    for i in 0..n {
        images.push(s.derive_index(n + i));
    }
    for i in 0..n {
        images.push(FormalSeries::var(&vs, t, Var::x(i as u16 + 1))?);
    }
    let hs = FormalSeries::from_terms(h.h.vars(), t, h.h.terms().iter().map(|(m, c)| (*m, c.clone())));
    hs.compose(&vs, &images)
}

/// Total degree bound of `S` through `t^{n_t}`.
fn flow_trunc(h: &Hamiltonian, n_t: u32) -> u32 {
    2 + n_t * h.degree().saturating_sub(1)
}

/// Solves `(k+1) S_{k+1} = -[t^k] H(∂_x S, x)` from `S_0 = <p, x>`.
pub fn hj_generating(h: &Hamiltonian, n_t: u32) -> Result<FlowGenFun> {
    let n = h.n;
    if 2 * n + 1 > MAX_VARS {
        return Err(Error::Dimension(format!("{n} degrees of freedom exceed the supported size")));
    }
    let vs = flow_vars(n);
    let trunc = flow_trunc(h, n_t).max(n_t);
    let mut s = FormalSeries::zero(&vs, trunc);
    for i in 0..n {
        let mut e = vec![0; 2 * n + 1];
        e[i] = 1;
        e[n + i] = 1;
        s.add_term(Mono::from_exps(&e), Scalar::one());
    }
    for k in 0..n_t {
        let hv = h_of_gradient(h, &s)?;
        let c = Scalar::ratio(-1, k as i64 + 1);
        for (m, v) in hv.terms() {
            if t_degree(*m, n) == k {
                s.add_term(m.with_exp(2 * n, k + 1), v * &c);
            }
        }
    }
    Ok(FlowGenFun { n, s, t_order: n_t })
}

/// `∂_t S + H(∂_x S, x)` restricted to `t`-degrees below `N_t` (zero for a solution).
pub fn hj_residual(h: &Hamiltonian, flow: &FlowGenFun) -> Result<FormalSeries> {
    let n = flow.n;
    let dt = flow.s.derive_index(2 * n);
    let r = &dt + &h_of_gradient(h, &flow.s)?;
    Ok(r.filter(|m| t_degree(m, n) < flow.t_order))
}

/// `ρ_H: T*E ⊗ T*Q -> T*Q` with momenta `(t, p)`, positions `x`, `F = S`. Needs `H(0,0) = 0`.
pub fn rho_genfun(flow: &FlowGenFun) -> Result<GenFun> {
    let n = flow.n;
    let vs = VarSet::phase_space(1 + n, n);
    let map: Vec<usize> = (1..=n).chain((0..n).map(|j| 1 + n + j)).chain([0]).collect();
    let f = flow.s.relabel(&vs, &map, flow.s.trunc());
    if !f.coeff_of(&{
        let mut e = vec![0; 1 + 2 * n];
        e[0] = 1;
        e
    })
    .is_zero()
    {
        return Err(Error::Constraint("the energy action needs H(0, 0) = 0".into()));
    }
    GenFun::from_big_f(&f, true)
}

/// Outcome of [`module_axiom_check`]; `first_failure` is the lowest `(t1, t2)` bidegree that differs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleReport {
    pub t_order: u32,
    pub unit_ok: bool,
    pub monoid_side_ok: bool,
    pub action_side_ok: bool,
    pub first_failure: Option<(u32, u32)>,
}

impl ModuleReport {
    pub fn passed(&self) -> bool {
        self.unit_ok && self.monoid_side_ok && self.action_side_ok
    }
}

impl fmt::Display for ModuleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ok = |b: bool| if b { "ok" } else { "FAIL" };
        writeln!(f, "unit axiom: {}", ok(self.unit_ok))?;
        writeln!(f, "rho(mu x id) = S(t1 + t2): {}", ok(self.monoid_side_ok))?;
        writeln!(f, "rho(id x rho) = S(t1 + t2): {}", ok(self.action_side_ok))?;
        match self.first_failure {
            Some((a, b)) => write!(f, "first offending bidegree: t1^{a} t2^{b}"),
            None => write!(f, "module axioms hold to joint t-order {}", self.t_order),
        }
    }
}

/// Keeps terms of joint degree at most `n_t` in the first two momenta.
fn joint_t(s: &FormalSeries, n_t: u32) -> FormalSeries {
    s.filter(|m| m.exp(0) + m.exp(1) <= n_t)
}

fn first_bidegree(diff: &FormalSeries) -> Option<(u32, u32)> {
    diff.terms().keys().map(|m| (m.exp(0), m.exp(1))).min_by_key(|&(a, b)| (a + b, a))
}

/// Checks `ρ∘(μ_E ⊗ id) = ρ∘(id_E ⊗ ρ) = S(t1 + t2)` to joint order `N_t` in `(t1, t2)`,
/// and the unit axiom.
pub fn module_axiom_check(h: &Hamiltonian, n_t: u32) -> Result<ModuleReport> {
    let n = h.n;
    if 4 + 4 * n > MAX_VARS {
        return Err(Error::Dimension(format!("the module check supports n <= 3, got {n}")));
    }
    let flow = hj_generating(h, n_t)?;
    let rho = rho_genfun(&flow)?;
    let trunc = rho.trunc();
    let id_q = GenFun::identity(n, trunc);
    let left = compose_genfun(&tensor_genfun(&energy_monoid_genfun(trunc), &id_q)?, &rho)?;
    let right = compose_genfun(&tensor_genfun(&GenFun::identity(1, trunc), &rho)?, &rho)?;

    // S(t1 + t2, p, x) over (t1, t2, p, x)
    let vs = VarSet::phase_space(2 + n, n);
    let mut images: Vec<FormalSeries> = Vec::new();
    for i in 0..n {
        images.push(FormalSeries::var(&vs, trunc, Var::p(i as u16 + 3))?);
    }
    for i in 0..n {
        images.push(FormalSeries::var(&vs, trunc, Var::x(i as u16 + 1))?);
    }
    images.push(&FormalSeries::var(&vs, trunc, Var::p(1))? + &FormalSeries::var(&vs, trunc, Var::p(2))?);
    let expected = joint_t(&flow.s.compose(&vs, &images)?, n_t);

    let dl = &joint_t(&left.big_f(), n_t) - &expected;
    let dr = &joint_t(&right.big_f(), n_t) - &expected;
    let first_failure = [first_bidegree(&dl), first_bidegree(&dr)].into_iter().flatten().min_by_key(|&(a, b)| (a + b, a));

    let unit = compose_genfun(&tensor_genfun(&energy_unit_genfun(trunc), &id_q)?, &rho)?;
    let unit_ok = unit.big_f() == GenFun::identity(n, unit.trunc()).big_f();
    Ok(ModuleReport { t_order: n_t, unit_ok, monoid_side_ok: dl.is_zero(), action_side_ok: dr.is_zero(), first_failure })
}

/// `Q_ħ([1], μ_E)(f ⊗ g)` for functions of the energy (written `x1`), through the
/// star machinery with `S = (t1 + t2) E`.
pub fn quantize_energy_monoid(f: &HbarSeries, g: &HbarSeries, order: u32) -> Result<HbarSeries> {
    let m = monoid_genfun_constant(&Matrix::zeros(1, 1))?;
    star_product(&m, f, g, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::print_formal;

    fn ham(s: &str) -> Hamiltonian {
        Hamiltonian::parse(s, 1).unwrap()
    }

    #[test]
    fn translation_flow() {
        let f = hj_generating(&ham("p1"), 4).unwrap();
        assert_eq!(print_formal(&f.s), "p1*x1 - p1*t");
        let zero = hj_generating(&ham("0"), 4).unwrap();
        assert_eq!(print_formal(&zero.s), "p1*x1");
    }

    #[test]
    fn free_particle_is_exact() {
        let h = ham("1/2*p1^2");
        let f = hj_generating(&h, 4).unwrap();
        assert_eq!(print_formal(&f.s), "p1*x1 - 1/2*p1^2*t");
        assert!(hj_residual(&h, &f).unwrap().is_zero());
    }

    #[test]
    fn residual_vanishes() {
        for s in ["1/2*p1^2 + 1/2*x1^2", "1/2*p1^2 + x1^4", "p1*x1^2 + p1^3"] {
            let h = ham(s);
            let f = hj_generating(&h, 4).unwrap();
            assert!(hj_residual(&h, &f).unwrap().is_zero(), "{s}");
            assert_eq!(f.t_coeff(1), h.series().with_trunc(f.s.trunc()).scale(&Scalar::from(-1)));
        }
    }

    #[test]
    fn module_axioms_oscillator() {
        let r = module_axiom_check(&ham("1/2*p1^2 + 1/2*x1^2"), 4).unwrap();
        assert!(r.passed(), "{r}");
        let r = module_axiom_check(&ham("1/2*p1^2 + x1^4"), 4).unwrap();
        assert!(r.passed(), "{r}");
        let r = module_axiom_check(&ham("0"), 3).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn energy_action_needs_zero_at_origin() {
        let f = hj_generating(&ham("1 + p1^2"), 2).unwrap();
        assert!(matches!(rho_genfun(&f), Err(Error::Constraint(_))));
    }

    #[test]
    fn energy_monoid_quantizes_to_product() {
        use crate::calculus::{compose_enhanced, tensor_enhanced, Enhanced, StateF};
        use crate::expr::print_hbar;
        let xs = VarSet::positions(1);
        let h = |s: &str| parse_series(s, &xs, 12, 3).unwrap().value;
        let out = quantize_energy_monoid(&h("x1^2"), &h("x1^3"), 3).unwrap();
        assert_eq!(print_hbar(&out), "x1^5");
        assert_eq!(print_hbar(&quantize_energy_monoid(&h("1"), &h("x1 + x1^4"), 3).unwrap()), "x1 + x1^4");
        // the same through enhanced composition: states f, g pushed through ([1], μ_E)
        let f = StateF::new(h("x1^2 + x1")).unwrap().as_enhanced();
        let g = StateF::new(h("x1^3")).unwrap().as_enhanced();
        let mu = Enhanced::new(energy_monoid_genfun(12), HbarSeries::one(&VarSet::phase_space(2, 1), 12, 3)).unwrap();
        let fg = compose_enhanced(&tensor_enhanced(&f, &g).unwrap(), &mu, 3).unwrap();
        assert_eq!(print_hbar(fg.amplitude()), "x1^4 + x1^5");
    }
}
