//! Expression grammar, lowering to series, canonical printing and declaration files.

pub mod decl;
pub mod lower;
pub mod parse;
pub mod print;

pub use decl::{Declaration, Section, Sections};
pub use lower::{lower, parse_series, Lowered};
pub use parse::{parse, parse_at, Expr};
pub use print::{print_declaration, print_formal, print_hbar};
