//! Truncated multivariate power series with exact Gaussian-rational coefficients.

pub mod formal;
pub mod hbar;
pub mod implicit;
pub mod scalar;
pub mod vars;

pub use formal::FormalSeries;
pub use hbar::HbarSeries;
pub use implicit::solve_implicit;
pub use scalar::Scalar;
pub use vars::{Mono, Role, Var, VarSet, MAX_VARS};
