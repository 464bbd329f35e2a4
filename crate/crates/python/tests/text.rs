use micromorph::Error;
use pymicromorph::{bch_text, compose_text, dump_text, hj_text, parse_text, verify_text};

const DECL: &str = "dims: 1 1\nphi: x1 + x1^2\nf: p1^3\namplitude: 1 + hbar*p1\n";

#[test]
fn parse_is_idempotent() {
    let once = parse_text(DECL, 6, 2).unwrap();
    assert_eq!(parse_text(&once, 6, 2).unwrap(), once);
    assert!(dump_text(DECL, 6, 2).unwrap().contains("\"amplitude\""));
}

#[test]
fn identity_composes_away() {
    let id = "dims: 1 1\nphi: x1\n";
    assert_eq!(compose_text(id, DECL, 6, 2, true).unwrap(), parse_text(DECL, 6, 2).unwrap());
}

#[test]
fn errors_keep_their_kind() {
    let two = "dims: 2 2\nphi:\n  x1\n  x2\n";
    assert!(matches!(compose_text(DECL, two, 6, 2, false), Err(Error::Dimension(_))));
    assert!(matches!(parse_text("dims: 1 1\nphi: x1 +\n", 6, 2), Err(Error::Parse { .. })));
    assert!(verify_text("nope", None).is_err());
}

#[test]
fn hj_and_bch() {
    assert_eq!(hj_text("0", 2, 3).unwrap(), "p1*x1 + p2*x2");
    assert_eq!(bch_text("abelian:1", 4).unwrap(), vec!["p1 + q1".to_string()]);
}

#[test]
fn hj_suite_passes() {
    let (ok, report) = verify_text("hj", None).unwrap();
    assert!(ok, "{report}");
}
