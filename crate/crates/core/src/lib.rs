//! Formal symbol calculus for microlocal morphisms: truncated generating
//! functions, enhanced morphisms with ħ-amplitudes, formal stationary phase,
//! Hamilton-Jacobi generating functions and star products.

pub mod calculus;
pub mod config;
pub mod dynamics;
pub mod dump;
pub mod error;
pub mod expr;
pub mod genfun;
pub mod linalg;
pub mod oracle;
pub mod poisson;
pub mod statphase;
pub mod verify;
pub mod series;

pub use error::{Error, Result};
