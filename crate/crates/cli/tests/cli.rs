use std::path::PathBuf;
use std::process::{Command, Output};

fn tmp(name: &str, body: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_micromorph")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const DECL: &str = "# sample\ndims: 1 1\nphi: x1 + 1/2*x1^2\nf: p1^2*x1 - 1/3*p1^3\n";

#[test]
fn identity_then_declaration_matches_normal_form() {
    let a = tmp("id_a.decl", DECL);
    let id = tmp("id_id.decl", "dims: 1 1\nphi: x1\n");
    let (a, id) = (a.to_str().unwrap(), id.to_str().unwrap());
    let parsed = run(&["--format", "json", "parse", a]);
    assert_eq!(code(&parsed), 0);
    for (first, second) in [(id, a), (a, id)] {
        let o = run(&["--format", "json", "compose", first, second]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o), stdout(&parsed));
    }
}

#[test]
fn text_parse_round_trips() {
    let a = tmp("rt_a.decl", DECL);
    let first = stdout(&run(&["parse", a.to_str().unwrap()]));
    let b = tmp("rt_b.decl", &first);
    assert_eq!(stdout(&run(&["parse", b.to_str().unwrap()])), first);
}

#[test]
fn hj_of_zero_is_identity_phase() {
    let o = run(&["hj", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "S: p1*x1");
    let o = run(&["hj", "0", "--dim", "2"]);
    assert_eq!(stdout(&o).trim(), "S: p1*x1 + p2*x2");
}

#[test]
fn hj_free_particle() {
    let o = run(&["hj", "1/2*p1^2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "S: p1*x1 - 1/2*p1^2*t");
}

#[test]
fn bch_abelian_adds() {
    let o = run(&["bch", "abelian:2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "component 1: p1 + q1\ncomponent 2: p2 + q2\n");
}

#[test]
fn bch_heisenberg_has_half_bracket() {
    let o = run(&["bch", "heisenberg"]);
    assert!(stdout(&o).contains("component 3: p3 + q3 + 1/2*p1*q2 - 1/2*p2*q1"), "{}", stdout(&o));
}

#[test]
fn star_with_zero_structure_is_product() {
    let z = tmp("zero.pi", "dims: 2\npi:\n 0 0\n 0 0\n");
    let o = run(&["star", z.to_str().unwrap(), "x1^2 + x2", "x1*x2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "product: x1*x2^2 + x1^3*x2");
}

#[test]
fn star_moyal_commutator_term() {
    let m = tmp("moyal.pi", "dims: 2\npi:\n 0 1\n -1 0\n");
    let o = run(&["star", m.to_str().unwrap(), "x1", "x2"]);
    assert_eq!(stdout(&o).trim(), "product: x1*x2 + hbar*(-1/2*i)");
}

#[test]
fn dimension_mismatch_exits_3() {
    let a = tmp("dm_a.decl", DECL);
    let b = tmp("dm_b.decl", "dims: 2 2\nphi:\n  x1\n  x2\n");
    let o = run(&["compose", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension"));
}

#[test]
fn parse_error_exits_2() {
    let bad = tmp("bad.decl", "dims: 1 1\nphi: x1 +\n");
    let o = run(&["parse", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:"));
    assert_eq!(code(&run(&["parse", "/nonexistent/file.decl"])), 2);
    assert_eq!(code(&run(&["verify", "nope"])), 2);
}

#[test]
fn output_is_deterministic() {
    let a = tmp("det_a.decl", "dims: 1 1\nphi: x1 + x1^2\nf: p1^3\namplitude: 1 + hbar*p1*x1\n");
    let a = a.to_str().unwrap();
    let args = ["--format", "json", "compose-enhanced", a, a];
    let first = run(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(stdout(&run(&args)), stdout(&first));
}

#[test]
fn conventions_lists_suites() {
    let o = run(&["conventions"]);
    let text = stdout(&o);
    for suite in ["laws", "statphase", "hj", "star", "functoriality"] {
        assert!(text.contains(suite), "{suite}");
    }
}
