use micromorph::calculus::{compose_enhanced, Enhanced};
use micromorph::dump::{enhanced_dump, from_json, read_enhanced, to_json};
use micromorph::dynamics::{hj_generating, hj_residual, Hamiltonian};
use micromorph::series::{FormalSeries, Mono, Scalar, Var, VarSet};
use micromorph::verify::random_enhanced;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn scalar() -> impl Strategy<Value = (i64, i64, i64, i64)> {
    let num = prop_oneof![-20i64..20, any::<i64>()];
    let den = prop_oneof![1i64..20, 1i64..=i64::MAX];
    (num.clone(), den.clone(), num, den)
}

fn mk((a, b, c, d): (i64, i64, i64, i64)) -> (Scalar, BigRational, BigRational) {
    (Scalar::new(big(a, b), big(c, d)), big(a, b), big(c, d))
}

fn series(n: usize, trunc: u32) -> impl Strategy<Value = FormalSeries> {
    prop::collection::vec((prop::collection::vec(0u32..4, n), -6i64..6, 1i64..5), 0..6).prop_map(move |ts| {
        let vs = VarSet::positions(n);
        FormalSeries::from_terms(&vs, trunc, ts.into_iter().map(|(e, a, b)| (Mono::from_exps(&e), Scalar::ratio(a, b))))
    })
}

proptest! {
    #[test]
    fn scalar_matches_bigrational((x, y) in (scalar(), scalar())) {
        let (s, a, b) = mk(x);
        let (t, c, d) = mk(y);
        let sum = &s + &t;
        prop_assert_eq!(sum.re(), &(&a + &c));
        prop_assert_eq!(sum.im(), &(&b + &d));
        let diff = &s - &t;
        prop_assert_eq!(diff.re(), &(&a - &c));
        prop_assert_eq!(diff.im(), &(&b - &d));
        let prod = &s * &t;
        prop_assert_eq!(prod.re(), &(&a * &c - &b * &d));
        prop_assert_eq!(prod.im(), &(&a * &d + &b * &c));
        let mut acc = s.clone();
        acc += &t;
        acc -= &t;
        prop_assert_eq!(&acc, &s);
        if let Some(inv) = s.inv() {
            prop_assert!((&s * &inv).is_one());
        }
    }

    #[test]
    fn series_ring_laws(a in series(2, 5), b in series(2, 5), c in series(2, 5)) {
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b.add(&c).unwrap()).unwrap(), a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap());
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn leibniz_rule(a in series(2, 5), b in series(2, 5)) {
        let x = Var::x(1);
        let lhs = a.mul(&b).unwrap().derive(x).unwrap().with_trunc(4);
        let rhs = a.derive(x).unwrap().mul(&b).unwrap().add(&a.mul(&b.derive(x).unwrap()).unwrap()).unwrap().with_trunc(4);
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identity_is_a_two_sided_unit(seed in any::<u64>(), k in 1usize..=2, l in 1usize..=2) {
        let (n, o) = (6, 2);
        let e = random_enhanced(&mut ChaCha8Rng::seed_from_u64(seed), k, l, n, o).unwrap();
        prop_assert_eq!(&compose_enhanced(&Enhanced::identity(k, n, o), &e, o).unwrap(), &e);
        prop_assert_eq!(&compose_enhanced(&e, &Enhanced::identity(l, n, o), o).unwrap(), &e);
    }

    #[test]
    fn dump_round_trip(seed in any::<u64>(), k in 1usize..=3, l in 1usize..=3) {
        let e = random_enhanced(&mut ChaCha8Rng::seed_from_u64(seed), k, l, 6, 3).unwrap();
        let json = to_json(&enhanced_dump(&e));
        let back = read_enhanced(&from_json(&json).unwrap()).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(to_json(&enhanced_dump(&back)), json);
    }

    #[test]
    fn hj_residual_vanishes(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3) {
        let text = format!("1/2*p1^2 + {a}*x1^2 + {b}*p1*x1^2 + {c}*x1^3");
        let h = Hamiltonian::parse(&text, 1).unwrap();
        let flow = hj_generating(&h, 3).unwrap();
        prop_assert!(hj_residual(&h, &flow).unwrap().is_zero(), "{}", text);
    }
}
