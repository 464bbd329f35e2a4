//! Variables, variable sets and packed multi-indices.

use std::fmt;
use std::sync::Arc;

/// Maximum number of variables in one [`VarSet`]; each exponent is one byte of a `u128`.
pub const MAX_VARS: usize = 16;

/// Role tag of a variable. The declaration order is the canonical ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    /// `p1, p2, …`
    Momentum,
    /// Second momentum block of a monoid generating function: `q1, q2, …`
    CoMomentum,
    /// `x1, x2, …`
    Position,
    /// `t` (index 0) or `t1, t2, …`
    Time,
    /// `E` (index 0) or `E1, E2, …`
    Energy,
    /// Integration variables `z1, z2, …`
    Fiber,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub role: Role,
    pub index: u16,
}

impl Var {
    pub const fn new(role: Role, index: u16) -> Self {
        Var { role, index }
    }
    pub const fn p(i: u16) -> Self {
        Var::new(Role::Momentum, i)
    }
    pub const fn q(i: u16) -> Self {
        Var::new(Role::CoMomentum, i)
    }
    pub const fn x(i: u16) -> Self {
        Var::new(Role::Position, i)
    }
    pub const fn z(i: u16) -> Self {
        Var::new(Role::Fiber, i)
    }
    pub const fn t(i: u16) -> Self {
        Var::new(Role::Time, i)
    }
    pub const fn e(i: u16) -> Self {
        Var::new(Role::Energy, i)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.index;
        match self.role {
            Role::Momentum => write!(f, "p{i}"),
            Role::CoMomentum => write!(f, "q{i}"),
            Role::Position => write!(f, "x{i}"),
            Role::Fiber => write!(f, "z{i}"),
            Role::Time if i == 0 => write!(f, "t"),
            Role::Time => write!(f, "t{i}"),
            Role::Energy if i == 0 => write!(f, "E"),
            Role::Energy => write!(f, "E{i}"),
        }
    }
}

/// An ordered set of distinct variables in canonical (role-major, then index) order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VarSet(Arc<[Var]>);

impl VarSet {
    /// Builds a set from any list of distinct variables; the result is sorted canonically.
    pub fn new(mut vars: Vec<Var>) -> Self {
        vars.sort();
        let n = vars.len();
        vars.dedup();
        assert_eq!(n, vars.len(), "duplicate variable in VarSet");
        assert!(vars.len() <= MAX_VARS, "at most {MAX_VARS} variables are supported");
        VarSet(vars.into())
    }

    pub fn empty() -> Self {
        VarSet::new(Vec::new())
    }

    /// `p1..pk, x1..xl`, the variables of a generating function from `R^k` to `R^l`.
    pub fn phase_space(k: usize, l: usize) -> Self {
        let mut v: Vec<Var> = (1..=k as u16).map(Var::p).collect();
        v.extend((1..=l as u16).map(Var::x));
        VarSet::new(v)
    }

    pub fn positions(n: usize) -> Self {
        VarSet::new((1..=n as u16).map(Var::x).collect())
    }

    pub fn momenta(n: usize) -> Self {
        VarSet::new((1..=n as u16).map(Var::p).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }

    pub fn index_of(&self, v: Var) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.index_of(v).is_some()
    }

    pub fn count_role(&self, role: Role) -> usize {
        self.0.iter().filter(|v| v.role == role).count()
    }

    /// Union of two sets.
    pub fn union(&self, other: &VarSet) -> VarSet {
        let mut v: Vec<Var> = self.0.to_vec();
        for &w in other.vars() {
            if !v.contains(&w) {
                v.push(w);
            }
        }
        VarSet::new(v)
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", names.join(", "))
    }
}

/// A multi-index packed into a `u128`, one byte per variable position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Mono(pub(crate) u128);

impl Mono {
    pub const ONE: Mono = Mono(0);

    pub fn from_exps(exps: &[u32]) -> Self {
        assert!(exps.len() <= MAX_VARS);
        let mut m = 0u128;
        for (i, &e) in exps.iter().enumerate() {
            assert!(e < 256, "exponent {e} too large");
            m |= (e as u128) << (8 * i);
        }
        Mono(m)
    }

    /// The monomial consisting of variable `i` alone.
    pub fn unit(i: usize) -> Self {
        Mono(1u128 << (8 * i))
    }

    #[inline]
    pub fn exp(self, i: usize) -> u32 {
        ((self.0 >> (8 * i)) & 0xff) as u32
    }

    pub fn exps(self, n: usize) -> Vec<u32> {
        (0..n).map(|i| self.exp(i)).collect()
    }

    #[inline]
    pub fn degree(self) -> u32 {
        let mut d = 0u32;
        let mut m = self.0;
        while m != 0 {
            d += (m & 0xff) as u32;
            m >>= 8;
        }
        d
    }

    /// Sum of exponents over the positions selected by `mask`.
    pub fn degree_in(self, mask: &[bool]) -> u32 {
        mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| self.exp(i)).sum()
    }

    #[inline]
    pub fn mul(self, other: Mono) -> Mono {
        Mono(self.0 + other.0)
    }

    /// Lowers the exponent of variable `i` by one, if it is positive.
    pub fn lower(self, i: usize) -> Option<Mono> {
        if self.exp(i) == 0 {
            None
        } else {
            Some(Mono(self.0 - (1u128 << (8 * i))))
        }
    }

    pub fn with_exp(self, i: usize, e: u32) -> Mono {
        assert!(e < 256);
        let mask = !(0xffu128 << (8 * i));
        Mono((self.0 & mask) | ((e as u128) << (8 * i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_is_role_major() {
        let vs = VarSet::new(vec![Var::x(1), Var::z(2), Var::p(2), Var::p(1), Var::t(0)]);
        let names: Vec<String> = vs.vars().iter().map(|v| v.to_string()).collect();
        assert_eq!(names, ["p1", "p2", "x1", "t", "z2"]);
    }

    #[test]
    #[should_panic]
    fn duplicates_rejected() {
        VarSet::new(vec![Var::x(1), Var::x(1)]);
    }

    #[test]
    fn mono_packing() {
        let m = Mono::from_exps(&[2, 0, 3]);
        assert_eq!(m.degree(), 5);
        assert_eq!(m.exp(2), 3);
        assert_eq!(m.mul(Mono::unit(1)).exps(3), vec![2, 1, 3]);
        assert_eq!(m.lower(0).unwrap().exp(0), 1);
        assert!(m.lower(1).is_none());
    }
}
