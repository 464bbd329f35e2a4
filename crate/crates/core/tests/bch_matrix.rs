//! BCH series against `log(exp X exp Y)` computed with 4x4 strictly upper-triangular
//! matrices, where exp and log are finite sums.

use micromorph::poisson::{bch, LieAlgebra};
use micromorph::series::{FormalSeries, Scalar};
use proptest::prelude::*;

type M = [[Scalar; 4]; 4];

/// Basis E12, E13, E14, E23, E24, E34.
const BASIS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn zero() -> M {
    std::array::from_fn(|_| std::array::from_fn(|_| Scalar::zero()))
}

fn mat(c: &[Scalar]) -> M {
    let mut m = zero();
    for (v, &(i, j)) in c.iter().zip(&BASIS) {
        m[i][j] = v.clone();
    }
    m
}

fn mul(a: &M, b: &M) -> M {
    let mut m = zero();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                m[i][j] += &(&a[i][k] * &b[k][j]);
            }
        }
    }
    m
}

fn lin(terms: &[(Scalar, &M)]) -> M {
    let mut m = zero();
    for (c, a) in terms {
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += &(c * &a[i][j]);
            }
        }
    }
    m
}

/// `1 + X + X²/2 + X³/6` minus the identity.
fn exp_minus_one(x: &M) -> M {
    let x2 = mul(x, x);
    let x3 = mul(&x2, x);
    lin(&[(Scalar::one(), x), (Scalar::ratio(1, 2), &x2), (Scalar::ratio(1, 6), &x3)])
}

fn strict_upper_algebra() -> LieAlgebra {
    let idx = |p: (usize, usize)| BASIS.iter().position(|&b| b == p).map(|k| k + 1);
    let mut entries = Vec::new();
    for (a, &(i, j)) in BASIS.iter().enumerate() {
        for (b, &(k, l)) in BASIS.iter().enumerate().skip(a + 1) {
            if j == k {
                entries.push((a + 1, b + 1, idx((i, l)).unwrap(), Scalar::one()));
            } else if l == i {
                entries.push((a + 1, b + 1, idx((k, j)).unwrap(), -Scalar::one()));
            }
        }
    }
    LieAlgebra::from_entries(6, &entries).unwrap()
}

fn eval(s: &FormalSeries, point: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero();
    for (m, c) in s.terms() {
        let mut t = c.clone();
        for (i, v) in point.iter().enumerate() {
            t = &t * &v.pow(m.exp(i));
        }
        acc += &t;
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bch_matches_matrix_log(xs in prop::collection::vec((-5i64..=5, 1i64..=3), 12)) {
        let lie = strict_upper_algebra();
        let z = bch(&lie, 4);
        let coords: Vec<Scalar> = xs.iter().map(|&(a, b)| Scalar::ratio(a, b)).collect();
        let (x, y) = (mat(&coords[..6]), mat(&coords[6..]));
        let ex = exp_minus_one(&x);
        let ey = exp_minus_one(&y);
        let exy = mul(&ex, &ey);
        let n = lin(&[(Scalar::one(), &ex), (Scalar::one(), &ey), (Scalar::one(), &exy)]);
        let n2 = mul(&n, &n);
        let n3 = mul(&n2, &n);
        let log = lin(&[(Scalar::one(), &n), (Scalar::ratio(-1, 2), &n2), (Scalar::ratio(1, 3), &n3)]);
        for (k, &(i, j)) in BASIS.iter().enumerate() {
            prop_assert_eq!(eval(&z[k], &coords), log[i][j].clone(), "component {}", k + 1);
        }
    }
}

#[test]
fn heisenberg_bch_is_exact_at_degree_two() {
    let z = bch(&LieAlgebra::heisenberg(), 6);
    assert!(z.iter().all(|c| c.max_degree().unwrap_or(0) <= 2));
}
