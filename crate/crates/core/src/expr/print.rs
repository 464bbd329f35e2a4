//! Canonical printing in the expression grammar.

use num_traits::{One, Signed, Zero};

use crate::series::{FormalSeries, HbarSeries, Mono, Scalar, VarSet};

fn mono_str(m: Mono, vars: &VarSet) -> String {
    let mut parts = Vec::new();
    for (i, v) in vars.vars().iter().enumerate() {
        match m.exp(i) {
            0 => {}
            1 => parts.push(v.to_string()),
            e => parts.push(format!("{v}^{e}")),
        }
    }
    parts.join("*")
}

/// Splits a coefficient into a sign and a magnitude printable without a leading minus.
fn sign_split(c: &Scalar) -> (bool, Scalar) {
    let negative = if c.im().is_zero() {
        c.re().is_negative()
    } else {
        c.re().is_zero() && c.im().is_negative()
    };
    if negative {
        (true, -c)
    } else {
        (false, c.clone())
    }
}

fn term_str(c: &Scalar, m: Mono, vars: &VarSet) -> String {
    let mono = mono_str(m, vars);
    if mono.is_empty() {
        return c.to_string();
    }
    if c.is_one() {
        mono
    } else if c.re().is_zero() && c.im().is_one() {
        format!("i*{mono}")
    } else {
        format!("{c}*{mono}")
    }
}

/// Terms in canonical order: total degree ascending, then exponent vectors descending.
pub fn sorted_terms(s: &FormalSeries) -> Vec<(Mono, Scalar)> {
    let n = s.vars().len();
    let mut terms: Vec<(Mono, Scalar)> = s.terms().iter().map(|(m, c)| (*m, c.clone())).collect();
    terms.sort_by(|(a, _), (b, _)| a.degree().cmp(&b.degree()).then_with(|| b.exps(n).cmp(&a.exps(n))));
    terms
}

/// Prints a series as `1 + 2*x1 + x1^2`; the zero series prints as `0`.
pub fn print_formal(s: &FormalSeries) -> String {
    let mut out = String::new();
    for (k, (m, c)) in sorted_terms(s).into_iter().enumerate() {
        let (neg, mag) = sign_split(&c);
        let t = term_str(&mag, m, s.vars());
        match (k, neg) {
            (0, false) => out.push_str(&t),
            (0, true) => {
                out.push('-');
                out.push_str(&t);
            }
            (_, false) => {
                out.push_str(" + ");
                out.push_str(&t);
            }
            (_, true) => {
                out.push_str(" - ");
                out.push_str(&t);
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Prints `c0 + hbar*(c1) + hbar^2*(c2) …`, skipping zero coefficients.
pub fn print_hbar(s: &HbarSeries) -> String {
    let mut parts = Vec::new();
    for (j, c) in s.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let body = print_formal(c);
        parts.push(match j {
            0 => body,
            1 => format!("hbar*({body})"),
            _ => format!("hbar^{j}*({body})"),
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// A generating function (and optional amplitude) in the declaration file format.
pub fn print_declaration(gen: &crate::genfun::GenFun, amplitude: Option<&HbarSeries>) -> String {
    let mut out = String::new();
    if gen.is_poly() {
        out.push_str("# exact polynomial\n");
    } else {
        out.push_str(&format!("# truncated: total degree <= {}\n", gen.trunc()));
    }
    out.push_str(&format!("dims: {} {}\nphi:\n", gen.k(), gen.l()));
    for c in gen.core() {
        out.push_str(&format!("  {}\n", print_formal(c)));
    }
    out.push_str(&format!("f: {}\n", print_formal(gen.f())));
    if let Some(a) = amplitude {
        out.push_str(&format!("amplitude: {}\n", print_hbar(a)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::lower::parse_series;

    #[test]
    fn canonical_forms() {
        let vs = VarSet::positions(1);
        let s = parse_series("x1^2 + 2*x1 + 1", &vs, 4, 0).unwrap().into_formal().unwrap();
        assert_eq!(print_formal(&s), "1 + 2*x1 + x1^2");
        assert_eq!(print_formal(&FormalSeries::zero(&vs, 3)), "0");
        let ps = VarSet::phase_space(1, 1);
        let h = parse_series("x1 + hbar*p1", &ps, 4, 2).unwrap().value;
        assert_eq!(print_hbar(&h), "x1 + hbar*(p1)");
    }

    #[test]
    fn declaration_round_trip() {
        use crate::calculus::Enhanced;
        use crate::expr::Declaration;
        let text = "dims: 2 1\nphi:\n  x1 + x1^2\n  -3*x1\nf: p1*p2*x1 + 1/2*p2^3\namplitude: 1 + hbar*(i*p1 - x1)\n";
        let e = Enhanced::from_declaration(&Declaration::parse(text, 6, 2).unwrap()).unwrap();
        let printed = print_declaration(e.gen(), Some(e.amplitude()));
        let back = Enhanced::from_declaration(&Declaration::parse(&printed, 6, 2).unwrap()).unwrap();
        assert_eq!(back, e);
        assert!(printed.starts_with("# exact polynomial\ndims: 2 1\n"), "{printed}");
    }

    #[test]
    fn signs_and_fractions() {
        let ps = VarSet::phase_space(1, 1);
        let s = parse_series("-x1 + 1/2*p1^2 - i*p1*x1 + (1+i)*x1^2", &ps, 4, 0).unwrap().into_formal().unwrap();
        let text = print_formal(&s);
        assert_eq!(text, "-x1 + 1/2*p1^2 - i*p1*x1 + (1 + i)*x1^2");
        let back = parse_series(&text, &ps, 4, 0).unwrap().into_formal().unwrap();
        assert_eq!(back, s);
    }
}
