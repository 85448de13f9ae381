//! A small language for modulation networks.
//!
//! Expressions combine the cascade amplitude `base` with cavity transfers
//! `cav(s|i, Γc)`, constant phases `phase(φ)`, real constants and the
//! argument swap `swap(...)` using pointwise `+`, `-` and `*`:
//!
//! ```
//! use biphoton::netlang::parse;
//! let fc = parse("base * (phase(pi) + cav(i, 1.0))").unwrap();
//! assert_eq!(fc.to_string(), "base * (phase(pi) + cav(i, 1))");
//! ```

mod ast;
mod eval;
mod parser;

pub use ast::{format_number, ModulationExpr};
pub use eval::evaluate;
pub use parser::{parse, parse_bytes, ParseError, ParseErrorKind};
