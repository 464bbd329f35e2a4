//! Formal implicit-function solver.

use super::formal::FormalSeries;
use super::vars::{Mono, Var, VarSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Solves `equations(u, q) = 0` for `u(q)` with `u(0) = 0`.
///
/// The equations live over a variable set containing the `unknowns` and the
/// parameters; the solution is returned over the parameter variables (all
/// remaining variables, in canonical order). Each chord step
/// `u <- u - J^{-1} E(u, q)` with the constant Jacobian `J` at the origin
/// raises the order of the error by one, so `trunc + 1` steps suffice.
pub fn solve_implicit(equations: &[FormalSeries], unknowns: &[Var]) -> Result<(VarSet, Vec<FormalSeries>)> {
    let n = unknowns.len();
    if equations.len() != n {
        return Err(Error::Dimension(format!("{} equations for {} unknowns", equations.len(), n)));
    }
    let Some(first) = equations.first() else {
        return Ok((VarSet::empty(), Vec::new()));
    };
    let vars = first.vars().clone();
    let trunc = equations.iter().map(|e| e.trunc()).min().unwrap();
    let mut unknown_idx = Vec::with_capacity(n);
    for &u in unknowns {
        unknown_idx.push(vars.index_of(u).ok_or_else(|| Error::UnknownVariable(u.to_string()))?);
    }
    for e in equations {
        if e.vars() != &vars {
            return Err(Error::VarMismatch { left: format!("{:?}", e.vars()), right: format!("{vars:?}") });
        }
        if !e.constant_term().is_zero() {
            return Err(Error::Invalid("implicit system does not vanish at the origin".into()));
        }
    }
    let mut jac = Matrix::zeros(n, n);
    for (i, e) in equations.iter().enumerate() {
        for (j, &k) in unknown_idx.iter().enumerate() {
            jac[(i, j)] = e.coeff(Mono::unit(k));
        }
    }
    let jinv = jac.inverse()?;
    solve_with_inverse(equations, &unknown_idx, &jinv, trunc)
}

pub(crate) fn solve_with_inverse(
    equations: &[FormalSeries],
    unknown_idx: &[usize],
    jinv: &Matrix,
    trunc: u32,
) -> Result<(VarSet, Vec<FormalSeries>)> {
    let vars = equations[0].vars().clone();
    let params: Vec<Var> =
        vars.vars().iter().enumerate().filter(|(i, _)| !unknown_idx.contains(i)).map(|(_, v)| *v).collect();
    let pvars = VarSet::new(params);
    let n = unknown_idx.len();
    let mut sol: Vec<FormalSeries> = vec![FormalSeries::zero(&pvars, trunc); n];
    for _ in 0..=trunc + 1 {
        let images: Vec<FormalSeries> = vars
            .vars()
            .iter()
            .enumerate()
            .map(|(i, v)| match unknown_idx.iter().position(|&k| k == i) {
                Some(j) => sol[j].clone(),
                None => FormalSeries::var(&pvars, trunc, *v).unwrap(),
            })
            .collect();
        let residual: Vec<FormalSeries> =
            equations.iter().map(|e| e.compose(&pvars, &images)).collect::<Result<_>>()?;
        if residual.iter().all(|r| r.is_zero()) {
            return Ok((pvars, sol));
        }
        for (j, s) in sol.iter_mut().enumerate() {
            let mut corr = FormalSeries::zero(&pvars, trunc);
            for (k, r) in residual.iter().enumerate() {
                let c = &jinv[(j, k)];
                if !c.is_zero() {
                    corr = &corr + &r.scale(c);
                }
            }
            *s = &*s - &corr;
        }
    }
    let images: Vec<FormalSeries> = vars
        .vars()
        .iter()
        .enumerate()
        .map(|(i, v)| match unknown_idx.iter().position(|&k| k == i) {
            Some(j) => sol[j].clone(),
            None => FormalSeries::var(&pvars, trunc, *v).unwrap(),
        })
        .collect();
    let degree = equations
        .iter()
        .filter_map(|e| e.compose(&pvars, &images).ok())
        .filter_map(|r| r.min_degree())
        .min()
        .unwrap_or(0);
    Err(Error::Inconsistent { degree })
}

/// Convenience wrapper returning the linear part used by [`solve_implicit`].
pub fn linear_part(equations: &[FormalSeries], unknowns: &[Var]) -> Result<Matrix> {
    let n = unknowns.len();
    let mut jac = Matrix::zeros(equations.len(), n);
    for (i, e) in equations.iter().enumerate() {
        for (j, &u) in unknowns.iter().enumerate() {
            let k = e.vars().index_of(u).ok_or_else(|| Error::UnknownVariable(u.to_string()))?;
            jac[(i, j)] = e.coeff(Mono::unit(k));
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Scalar;

    #[test]
    fn catalan_fixed_point() {
        // u = q + u^2; oracle: plain fixed-point iteration on coefficient lists
        let n = 7usize;
        let mut u = vec![0i64; n + 1];
        for _ in 0..=n {
            let mut next = vec![0i64; n + 1];
            next[1] = 1;
            for i in 0..=n {
                for j in 0..=n - i {
                    next[i + j] += u[i] * u[j];
                }
            }
            u = next;
        }
        assert_eq!(&u[..6], &[0, 1, 1, 2, 5, 14]);

        let vs = VarSet::new(vec![Var::x(1), Var::z(1)]);
        let q = FormalSeries::var(&vs, n as u32, Var::x(1)).unwrap();
        let uu = FormalSeries::var(&vs, n as u32, Var::z(1)).unwrap();
        let eq = &(&uu - &q) - &uu.pow(2);
        let (pv, sol) = solve_implicit(&[eq], &[Var::z(1)]).unwrap();
        assert_eq!(pv, VarSet::positions(1));
        for (k, &ck) in u.iter().enumerate() {
            assert_eq!(sol[0].coeff_of(&[k as u32]), Scalar::from(ck));
        }
    }

    #[test]
    fn linear_system() {
        let vs = VarSet::new(vec![Var::x(1), Var::z(1)]);
        let q = FormalSeries::var(&vs, 4, Var::x(1)).unwrap();
        let u = FormalSeries::var(&vs, 4, Var::z(1)).unwrap();
        let (pv, sol) = solve_implicit(&[&u - &q], &[Var::z(1)]).unwrap();
        assert_eq!(sol[0], FormalSeries::var(&pv, 4, Var::x(1)).unwrap());
    }

    #[test]
    fn singular_linear_part() {
        let vs = VarSet::new(vec![Var::x(1), Var::z(1)]);
        let q = FormalSeries::var(&vs, 4, Var::x(1)).unwrap();
        let u = FormalSeries::var(&vs, 4, Var::z(1)).unwrap();
        assert!(matches!(solve_implicit(&[&u.pow(2) - &q], &[Var::z(1)]), Err(Error::Singular(_))));
    }
}
