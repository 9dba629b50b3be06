//! Object language: subexponential signatures, formulas, sequents.
//!
//! Concrete syntax (ASCII), loosest to tightest binding:
//!
//! ```text
//! f ::= f "\/" f            disjunction        (left associative)
//!     | f "/\" f            conjunction        (left associative)
//!     | f "\" f | f "/" f   residuals          (non-associative, same level)
//!     | f "*" f             product            (left associative)
//!     | "![" ident "]" f    subexponential
//!     | "T" | "F" | "1" | ident | "(" f ")"
//! ```
//!
//! A sequent is `f |- f`.

mod formula;
mod parser;
mod signature;

pub use formula::{Formula, Sequent, UnknownIndex};
pub use parser::{parse_formula, parse_sequent, ParseError, ParseErrorKind};
pub use signature::{RawSignature, SignatureError, StructuralSet, SubexpSignature};
