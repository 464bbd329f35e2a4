//! Enhanced micromorphisms: a generating function with an amplitude `a(p1, x2)`,
//! composed by formal stationary phase.
//!
//! `compose_enhanced(e1, e2)` is "first `e1`, then `e2`": its operator is
//! `Op(e2) ∘ Op(e1)`. With identity generating functions this is the qp symbol
//! product, `qp_star(a, b) = compose_enhanced([b], [a])`.
//!
//! Amplitude truncation: when both generating functions are exact polynomials the
//! phase is computed two degrees higher and the composite amplitude is exact to
//! `min(N_a, N_b, N)`; otherwise to `min(N_a, N_b, N - 2)`.

use crate::error::{Error, Result};
use crate::genfun::{composite_from_value, recentre_at, tensor_genfun, GenFun};
use crate::series::{FormalSeries, HbarSeries, Role, Scalar, Var, VarSet};
use crate::statphase::{stationary_phase_expand, PhaseProblem};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enhanced {
    gen: GenFun,
    amplitude: HbarSeries,
}

impl Enhanced {
    pub fn new(gen: GenFun, amplitude: HbarSeries) -> Result<Self> {
        if *amplitude.vars() != gen.vars() {
            return Err(Error::Dimension(format!(
                "amplitude lives over {:?} but the generating function over {:?}",
                amplitude.vars(),
                gen.vars()
            )));
        }
        Ok(Enhanced { gen, amplitude })
    }

    /// `([1], I)` on `R^n`.
    pub fn identity(n: usize, trunc: u32, order: u32) -> Self {
        let gen = GenFun::identity(n, trunc);
        let amplitude = HbarSeries::one(&gen.vars(), trunc, HbarSeries::max_order(trunc, order));
        Enhanced { gen, amplitude }
    }

    /// A symbol on the identity generating function (pseudodifferential operator).
    pub fn symbol(a: &HbarSeries) -> Result<Self> {
        let n = a.vars().count_role(Role::Momentum);
        Enhanced::new(GenFun::identity(n, a.trunc()), a.clone())
    }

    pub fn from_declaration(d: &crate::expr::Declaration) -> Result<Self> {
        Enhanced::new(GenFun::new(d.phi.clone(), d.f.clone())?, d.amplitude.clone())
    }

    pub fn gen(&self) -> &GenFun {
        &self.gen
    }

    pub fn amplitude(&self) -> &HbarSeries {
        &self.amplitude
    }

    pub fn k(&self) -> usize {
        self.gen.k()
    }

    pub fn l(&self) -> usize {
        self.gen.l()
    }

    /// Both parts re-truncated to weighted degree `trunc` and ħ-order `order`.
    pub fn truncated(&self, trunc: u32, order: u32) -> Self {
        Enhanced { gen: self.gen.with_trunc(trunc.min(self.gen.trunc())), amplitude: self.amplitude.truncated(trunc, order) }
    }
}

/// Relabels every coefficient of an ħ-series.
fn relabel_hbar(s: &HbarSeries, target: &VarSet, map: &[usize]) -> HbarSeries {
    let coeffs = s.coeffs().iter().map(|c| c.relabel(target, map, c.trunc())).collect();
    HbarSeries::from_coeffs(target, s.trunc(), coeffs).unwrap()
}

/// The composite "first `e1`, then `e2`" up to ħ^`order`.
pub fn compose_enhanced(e1: &Enhanced, e2: &Enhanced, order: u32) -> Result<Enhanced> {
    let (f, g) = (&e1.gen, &e2.gen);
    let n = f.trunc().min(g.trunc());
    let exact_phase = f.is_poly() && g.is_poly();
    let nw = if exact_phase { n + 2 } else { n };
    let out_trunc = e1.amplitude.trunc().min(e2.amplitude.trunc()).min(if exact_phase { n } else { n.saturating_sub(2) });
    let order = order.min(e1.amplitude.order()).min(e2.amplitude.order());
    let rec = recentre_at(f, g, nw)?;
    let gen = composite_from_value(f, g, &rec.value)?;
    let th = &rec.theta;
    let (k, l, m) = (th.k, th.l, th.m);
    let target = &th.vars;
    let t = th.phase.trunc();
    let v = |var: Var| FormalSeries::var(target, t, var).unwrap();
    let emb = |s: &FormalSeries| s.embed(target).unwrap().with_trunc(t);
    // a(p1, x̄ + δx) with δx = z(l+1..2l)
    let a_imgs: Vec<FormalSeries> = e1
        .amplitude
        .vars()
        .vars()
        .iter()
        .map(|w| match w.role {
            Role::Momentum => v(*w),
            _ => &emb(&rec.section.x_bar[w.index as usize - 1]) + &v(Var::z(l as u16 + w.index)),
        })
        .collect();
    // b(p̄ + δp, x3) with δp = z(1..l)
    let b_imgs: Vec<FormalSeries> = e2
        .amplitude
        .vars()
        .vars()
        .iter()
        .map(|w| match w.role {
            Role::Momentum => &emb(&rec.section.p_bar[w.index as usize - 1]) + &v(Var::z(w.index)),
            _ => v(*w),
        })
        .collect();
    let a = e1.amplitude.truncated(out_trunc, order).compose(target, &a_imgs)?;
    let b = e2.amplitude.truncated(out_trunc, order).compose(target, &b_imgs)?;
    let amp = a.mul(&b)?;
    let fiber: Vec<usize> = (0..2 * l).map(|i| th.fiber_index(i)).collect();
    let problem = PhaseProblem::from_phase(&th.phase, fiber, amp, order, out_trunc)?;
    let exp = stationary_phase_expand(&problem)?;
    assert_eq!(exp.norm.scalar(), Some(Scalar::one()), "composition Hessian must be unimodular with signature 0");
    let amplitude = exp.series;
    debug_assert_eq!(*amplitude.vars(), VarSet::phase_space(k, m));
    Enhanced::new(gen, amplitude)
}

/// Tensor product: block generating function and product amplitude.
pub fn tensor_enhanced(e1: &Enhanced, e2: &Enhanced) -> Result<Enhanced> {
    let gen = tensor_genfun(&e1.gen, &e2.gen)?;
    let (k1, l1, k2, l2) = (e1.k(), e1.l(), e2.k(), e2.l());
    let (k, l) = (k1 + k2, l1 + l2);
    let vs = VarSet::phase_space(k, l);
    let map1: Vec<usize> = (0..k1).chain((0..l1).map(|j| k + j)).collect();
    let map2: Vec<usize> = (0..k2).map(|i| k1 + i).chain((0..l2).map(|j| k + l1 + j)).collect();
    let trunc = e1.amplitude.trunc().min(e2.amplitude.trunc());
    let order = e1.amplitude.order().min(e2.amplitude.order()).min(trunc / 2);
    let a = relabel_hbar(&e1.amplitude.truncated(trunc, order), &vs, &map1);
    let b = relabel_hbar(&e2.amplitude.truncated(trunc, order), &vs, &map2);
    Enhanced::new(gen, a.mul(&b)?)
}

/// The qp-ordered symbol product `a ⋆ b`: the symbol of `Op(a) Op(b)`.
pub fn qp_star(a: &HbarSeries, b: &HbarSeries, order: u32) -> Result<HbarSeries> {
    if a.vars() != b.vars() {
        return Err(Error::Dimension("qp_star needs symbols over the same phase space".into()));
    }
    let ea = Enhanced::symbol(a)?;
    let eb = Enhanced::symbol(b)?;
    Ok(compose_enhanced(&eb, &ea, order)?.amplitude)
}

/// Closed form `Σ_α (-iħ)^{|α|}/α! ∂_p^α a ∂_x^α b`.
pub fn qp_star_closed_form(a: &HbarSeries, b: &HbarSeries, order: u32) -> Result<HbarSeries> {
    let vs = a.vars().clone();
    let n = vs.count_role(Role::Momentum);
    let trunc = a.trunc().min(b.trunc());
    let order = order.min(a.order()).min(b.order()).min(trunc / 2);
    let mut out = HbarSeries::zero(&vs, trunc, order);
    // iterate over multi-indices α with |α| <= order
    let mut stack: Vec<(Vec<u32>, HbarSeries, HbarSeries, Scalar)> =
        vec![(vec![0; n], a.truncated(trunc, order), b.truncated(trunc, order), Scalar::one())];
    while let Some((alpha, da, db, coef)) = stack.pop() {
        let k: u32 = alpha.iter().sum();
        let term = da.mul(&db)?.scale(&coef).shift(k);
        out = out.add(&term)?;
        if k == order {
            continue;
        }
        let start = alpha.iter().rposition(|&e| e > 0).unwrap_or(0);
        for i in start..n {
            let mut next = alpha.clone();
            next[i] += 1;
            // (-i)^{|α|}/α! built incrementally: multiply by -i / next[i]
            let c = &(&coef * &-Scalar::i()) * &Scalar::ratio(1, next[i] as i64);
            stack.push((next, da.derive(Var::p(i as u16 + 1))?, db.derive(Var::x(i as u16 + 1))?, c));
        }
    }
    Ok(out)
}

/// A state `Ψ(x)` on `R^n` (polynomial jet, possibly ħ-dependent).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateF {
    pub amplitude: HbarSeries,
}

impl StateF {
    pub fn new(amplitude: HbarSeries) -> Result<Self> {
        let n = amplitude.vars().len();
        if *amplitude.vars() != VarSet::positions(n) {
            return Err(Error::Dimension("a state lives over x1..xn".into()));
        }
        Ok(StateF { amplitude })
    }

    pub fn dim(&self) -> usize {
        self.amplitude.vars().len()
    }

    /// The state as a morphism from the point: `F = 0`, amplitude `Ψ`.
    pub fn as_enhanced(&self) -> Enhanced {
        let n = self.dim();
        let gen = GenFun::new(Vec::new(), FormalSeries::zero(&VarSet::phase_space(0, n), self.amplitude.trunc())).unwrap();
        Enhanced { gen, amplitude: self.amplitude.clone() }
    }

    /// `Ψ(x0 + y)` as a state in `y`; exact for polynomial jets.
    pub fn shifted(&self, x0: &[Scalar]) -> Result<StateF> {
        let n = self.dim();
        if x0.len() != n {
            return Err(Error::Dimension(format!("base point has {} coordinates, state dimension is {n}", x0.len())));
        }
        let t = self.amplitude.trunc();
        let lifted = self.amplitude.lifted(t + 1);
        let vs = VarSet::positions(n);
        let imgs: Vec<FormalSeries> = (0..n)
            .map(|i| &FormalSeries::var(&vs, t + 1, Var::x(i as u16 + 1)).unwrap() + &FormalSeries::constant(&vs, t + 1, x0[i].clone()))
            .collect();
        let mut coeffs = Vec::new();
        for (j, c) in lifted.coeffs().iter().enumerate() {
            let imgs_j: Vec<FormalSeries> = imgs.iter().map(|s| s.with_trunc(c.trunc())).collect();
            coeffs.push(c.compose(&vs, &imgs_j)?.with_trunc(t - 2 * j as u32));
        }
        StateF::new(HbarSeries::from_coeffs(&vs, t, coeffs)?)
    }
}

/// A costate `⟨a, F, x0|` with `F(p) = <p, x0> + f(p)`, `f = O(p^2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostateF {
    pub x0: Vec<Scalar>,
    /// Deformation over `p1..pn`.
    pub f: FormalSeries,
    /// Amplitude over `p1..pn`.
    pub amplitude: HbarSeries,
}

impl CostateF {
    pub fn new(x0: Vec<Scalar>, f: FormalSeries, amplitude: HbarSeries) -> Result<Self> {
        let n = x0.len();
        let ps = VarSet::momenta(n);
        if *f.vars() != ps || *amplitude.vars() != ps {
            return Err(Error::Dimension(format!("a costate on R^{n} lives over p1..p{n}")));
        }
        let mask = vec![true; n];
        if f.min_degree_in(&mask).is_some_and(|d| d < 2) {
            return Err(Error::Constraint("costate deformation must have momentum degree >= 2".into()));
        }
        Ok(CostateF { x0, f, amplitude })
    }

    /// `⟨x0|`: amplitude 1, no deformation.
    pub fn delta(x0: Vec<Scalar>, trunc: u32, order: u32) -> Self {
        let ps = VarSet::momenta(x0.len());
        CostateF {
            f: FormalSeries::zero(&ps, trunc),
            amplitude: HbarSeries::one(&ps, trunc, HbarSeries::max_order(trunc, order)),
            x0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// `F(p) = <p, x0> + f(p)`.
    pub fn generating_function(&self) -> FormalSeries {
        let ps = self.f.vars().clone();
        let mut s = self.f.clone();
        for (i, c) in self.x0.iter().enumerate() {
            s = &s + &FormalSeries::var(&ps, s.trunc(), Var::p(i as u16 + 1)).unwrap().scale(c);
        }
        s
    }

    /// The costate centred at the origin, as a morphism to the point.
    fn centred_enhanced(&self) -> Result<Enhanced> {
        let n = self.dim();
        let core = vec![FormalSeries::zero(&VarSet::empty(), self.f.trunc()); n];
        let gen = GenFun::new(core, self.f.clone())?;
        Enhanced::new(gen, self.amplitude.clone())
    }
}

/// `E |Ψ⟩`: the composite of the state with `E`, a state on the target.
pub fn apply_formal(e: &Enhanced, psi: &StateF, order: u32) -> Result<StateF> {
    if e.k() != psi.dim() {
        return Err(Error::Dimension(format!("operator acts on R^{} but the state lives on R^{}", e.k(), psi.dim())));
    }
    let out = compose_enhanced(&psi.as_enhanced(), e, order)?;
    StateF::new(out.amplitude)
}

/// `⟨c|Ψ⟩` as an element of `C[[ħ]]` (a series over no variables).
pub fn pair_costate(c: &CostateF, psi: &StateF, order: u32) -> Result<HbarSeries> {
    if c.dim() != psi.dim() {
        return Err(Error::Dimension(format!("costate on R^{} paired with a state on R^{}", c.dim(), psi.dim())));
    }
    let shifted = psi.shifted(&c.x0)?;
    let out = compose_enhanced(&shifted.as_enhanced(), &c.centred_enhanced()?, order)?;
    Ok(out.amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_series, print_hbar};

    fn hs(text: &str, vars: &VarSet, n: u32, order: u32) -> HbarSeries {
        parse_series(text, vars, n, order).unwrap().value
    }

    #[test]
    fn unit_laws_exact() {
        let n = 6;
        let ps = VarSet::phase_space(1, 1);
        let xs = VarSet::positions(1);
        let gen = GenFun::new(
            vec![parse_series("x1 + x1^2", &xs, n, 0).unwrap().into_formal().unwrap()],
            parse_series("p1^2*x1 - 1/2*p1^3", &ps, n, 0).unwrap().into_formal().unwrap(),
        )
        .unwrap();
        let e = Enhanced::new(gen, hs("1 + p1*x1 + hbar*(x1 - p1^2) + hbar^2*p1", &ps, n, 3)).unwrap();
        let id = Enhanced::identity(1, n, 3);
        assert_eq!(compose_enhanced(&id, &e, 3).unwrap(), e);
        assert_eq!(compose_enhanced(&e, &id, 3).unwrap(), e);
    }

    #[test]
    fn qp_commutator() {
        let ps = VarSet::phase_space(1, 1);
        let x = hs("x1", &ps, 6, 3);
        let p = hs("p1", &ps, 6, 3);
        let xp = qp_star(&x, &p, 3).unwrap();
        let px = qp_star(&p, &x, 3).unwrap();
        assert_eq!(print_hbar(&xp.sub(&px).unwrap()), "hbar*(i)");
    }

    #[test]
    fn qp_matches_closed_form() {
        let ps = VarSet::phase_space(1, 1);
        let a = hs("p1^2 + p1*x1", &ps, 6, 3);
        let b = hs("x1^2 + x1^3*p1", &ps, 6, 3);
        assert_eq!(qp_star(&a, &b, 3).unwrap(), qp_star_closed_form(&a, &b, 3).unwrap());
        let one = hs("1", &ps, 6, 3);
        assert_eq!(qp_star(&one, &b, 3).unwrap(), b);
    }

    #[test]
    fn momentum_symbol_differentiates() {
        let xs = VarSet::positions(1);
        let ps = VarSet::phase_space(1, 1);
        let psi = StateF::new(hs("x1^2", &xs, 6, 3)).unwrap();
        let e = Enhanced::symbol(&hs("p1", &ps, 6, 3)).unwrap();
        let out = apply_formal(&e, &psi, 3).unwrap();
        assert_eq!(print_hbar(&out.amplitude), "hbar*(-2*i*x1)");
        let ex = Enhanced::symbol(&hs("x1", &ps, 6, 3)).unwrap();
        assert_eq!(print_hbar(&apply_formal(&ex, &psi, 3).unwrap().amplitude), "x1^3");
        let id = Enhanced::identity(1, 6, 3);
        assert_eq!(apply_formal(&id, &psi, 3).unwrap(), psi);
    }

    #[test]
    fn costate_pairing() {
        let xs = VarSet::positions(1);
        let psi = StateF::new(hs("1 + x1 + x1^3", &xs, 8, 4)).unwrap();
        let x0 = vec![Scalar::from(2)];
        let delta = CostateF::delta(x0.clone(), 8, 4);
        assert_eq!(print_hbar(&pair_costate(&delta, &psi, 4).unwrap()), "11");
        let ps = VarSet::momenta(1);
        let c = CostateF::new(x0, FormalSeries::zero(&ps, 8), hs("p1^2", &ps, 8, 4)).unwrap();
        // (-iħ)^2 Ψ''(2) = -ħ^2 · 12
        assert_eq!(print_hbar(&pair_costate(&c, &psi, 4).unwrap()), "hbar^2*(-12)");
    }

    fn sample(phi: &str, f: &str, amp: &str, n: u32) -> Enhanced {
        let text = format!("dims: 1 1\nphi: {phi}\nf: {f}\namplitude: {amp}\n");
        Enhanced::from_declaration(&crate::expr::Declaration::parse(&text, n, 4).unwrap()).unwrap()
    }

    #[test]
    fn associativity() {
        let n = 7;
        let e1 = sample("x1 + 1/2*x1^2", "p1^2*x1 + p1^3", "1 + p1 + hbar*x1^2", n);
        let e2 = sample("2*x1 - x1^3", "p1^2*x1^2 - 1/3*p1^2", "1 - x1*p1 + hbar*(1 + p1)", n);
        let e3 = sample("x1 + x1^2", "p1^3*x1", "2 + x1 + hbar^2", n);
        let left = compose_enhanced(&compose_enhanced(&e1, &e2, 4).unwrap(), &e3, 4).unwrap();
        let right = compose_enhanced(&e1, &compose_enhanced(&e2, &e3, 4).unwrap(), 4).unwrap();
        let t = left.amplitude().trunc().min(right.amplitude().trunc());
        assert_eq!(left.truncated(t, 4), right.truncated(t, 4));
        assert_eq!(left.gen(), right.gen());
    }

    #[test]
    fn tensor_of_identities() {
        let i1 = Enhanced::identity(1, 4, 2);
        assert_eq!(tensor_enhanced(&i1, &i1).unwrap(), Enhanced::identity(2, 4, 2));
    }
}
