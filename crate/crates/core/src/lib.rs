//! Choreography extraction: turning networks of communicating processes into global
//! choreographies, plus endpoint projection, an equivalence checker and test generators.

pub mod ast;
pub mod parser;
pub mod pretty;

pub use ast::*;
pub use parser::{
    parse_choreography, parse_network, parse_network_unvalidated, parse_program, ParseError,
    ParseErrorKind, SourceSpan,
};
pub mod checks;
pub mod semantics;
pub mod epp;
pub mod extraction;
pub mod equiv;
pub mod testgen;
