//! Python bindings. Declarations go in and out as text; `dump` returns the JSON form.
//!
//! The `*_text` functions are the plain Rust layer the Python wrappers call.

use micromorph::calculus::{apply_formal, compose_enhanced, Enhanced, StateF};
use micromorph::config::Config;
use micromorph::dump as json;
use micromorph::dynamics::{hj_generating, hj_residual, Hamiltonian};
use micromorph::expr::{parse_series, print_declaration, print_formal, print_hbar, Declaration};
use micromorph::genfun::compose_genfun;
use micromorph::poisson::{bch, LieAlgebra};
use micromorph::series::VarSet;
use micromorph::verify::{run_suite, Suite};
use micromorph::{Error, Result};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(pymicromorph, MicromorphError, PyValueError);
create_exception!(pymicromorph, ParseError, MicromorphError);
create_exception!(pymicromorph, DimensionError, MicromorphError);
create_exception!(pymicromorph, NonConvergenceError, MicromorphError);

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Parse { .. } | Error::UnknownVariable(_) => ParseError::new_err(msg),
        Error::Dimension(_) | Error::VarMismatch { .. } => DimensionError::new_err(msg),
        Error::NonConvergence(_) => NonConvergenceError::new_err(msg),
        _ => MicromorphError::new_err(msg),
    }
}

fn enhanced(text: &str, trunc: u32, order: u32) -> Result<Enhanced> {
    Enhanced::from_declaration(&Declaration::parse(text, trunc, order)?)
}

pub fn parse_text(text: &str, trunc: u32, order: u32) -> Result<String> {
    let e = enhanced(text, trunc, order)?;
    Ok(print_declaration(e.gen(), Some(e.amplitude())))
}

pub fn dump_text(text: &str, trunc: u32, order: u32) -> Result<String> {
    Ok(json::to_json(&json::enhanced_dump(&enhanced(text, trunc, order)?)))
}

/// First `first`, then `second`. Without `amplitudes` only the generating functions compose.
pub fn compose_text(first: &str, second: &str, trunc: u32, order: u32, amplitudes: bool) -> Result<String> {
    let (a, b) = (enhanced(first, trunc, order)?, enhanced(second, trunc, order)?);
    if amplitudes {
        let e = compose_enhanced(&a, &b, order)?;
        Ok(print_declaration(e.gen(), Some(e.amplitude())))
    } else {
        Ok(print_declaration(&compose_genfun(a.gen(), b.gen())?, None))
    }
}

pub fn apply_text(operator: &str, state: &str, trunc: u32, order: u32) -> Result<String> {
    let e = enhanced(operator, trunc, order)?;
    let psi = StateF::new(parse_series(state, &VarSet::positions(e.k()), trunc, order)?.value)?;
    Ok(print_hbar(&apply_formal(&e, &psi, order)?.amplitude))
}

pub fn hj_text(hamiltonian: &str, dim: usize, t_order: u32) -> Result<String> {
    let h = Hamiltonian::parse(hamiltonian, dim)?;
    let s = hj_generating(&h, t_order)?;
    let r = hj_residual(&h, &s)?;
    if !r.is_zero() {
        return Err(Error::Invalid(format!("Hamilton-Jacobi residual does not vanish: {}", print_formal(&r))));
    }
    Ok(print_formal(&s.s))
}

pub fn bch_text(algebra: &str, order: u32) -> Result<Vec<String>> {
    let lie = match algebra {
        "heisenberg" => LieAlgebra::heisenberg(),
        "so3" => LieAlgebra::so3(),
        a => match a.strip_prefix("abelian:").and_then(|n| n.parse().ok()) {
            Some(n) => LieAlgebra::abelian(n),
            None => return Err(Error::Invalid(format!("unknown algebra `{a}`; expected heisenberg, so3 or abelian:N"))),
        },
    };
    Ok(bch(&lie, order).iter().map(print_formal).collect())
}

pub fn verify_text(suite: &str, seed: Option<u64>) -> Result<(bool, String)> {
    let mut cfg = Config::default();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let reports = run_suite(suite.parse::<Suite>()?, &cfg);
    Ok((reports.iter().all(|r| r.passed()), reports.iter().map(|r| r.to_string()).collect()))
}

/// Canonical text form of a declaration.
#[pyfunction]
#[pyo3(signature = (text, truncation = 6, hbar_order = 3))]
fn parse(text: &str, truncation: u32, hbar_order: u32) -> PyResult<String> {
    parse_text(text, truncation, hbar_order).map_err(py_err)
}

/// JSON dump of a declaration.
#[pyfunction]
#[pyo3(signature = (text, truncation = 6, hbar_order = 3))]
fn dump(text: &str, truncation: u32, hbar_order: u32) -> PyResult<String> {
    dump_text(text, truncation, hbar_order).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (first, second, truncation = 6, hbar_order = 3, amplitudes = true))]
fn compose(first: &str, second: &str, truncation: u32, hbar_order: u32, amplitudes: bool) -> PyResult<String> {
    compose_text(first, second, truncation, hbar_order, amplitudes).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (operator, state, truncation = 6, hbar_order = 3))]
fn apply(operator: &str, state: &str, truncation: u32, hbar_order: u32) -> PyResult<String> {
    apply_text(operator, state, truncation, hbar_order).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (hamiltonian, dim = 1, t_order = 4))]
fn hj(hamiltonian: &str, dim: usize, t_order: u32) -> PyResult<String> {
    hj_text(hamiltonian, dim, t_order).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (algebra, order = 6))]
fn bch_series(algebra: &str, order: u32) -> PyResult<Vec<String>> {
    bch_text(algebra, order).map_err(py_err)
}

/// `(passed, report)` for a suite name: laws, statphase, hj, star, functoriality or all.
#[pyfunction]
#[pyo3(signature = (suite, seed = None))]
fn verify(suite: &str, seed: Option<u64>) -> PyResult<(bool, String)> {
    verify_text(suite, seed).map_err(py_err)
}

#[pymodule]
fn pymicromorph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("MicromorphError", py.get_type::<MicromorphError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("DimensionError", py.get_type::<DimensionError>())?;
    m.add("NonConvergenceError", py.get_type::<NonConvergenceError>())?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(dump, m)?)?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(hj, m)?)?;
    m.add_function(wrap_pyfunction!(bch_series, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
