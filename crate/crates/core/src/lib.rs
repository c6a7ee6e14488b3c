//! LRP: a lazy core language with exact time and space measurement.
//!
//! The pipeline is [`parser`] → [`compile`] → [`machine`], with
//! [`calculus`] as an independent small-step reference semantics.

pub mod calculus;
pub mod compile;
pub mod corpus;
pub mod harness;
pub mod machine;
pub mod parser;
pub mod prelude;
pub mod syntax;

pub use compile::{compile_expr, compile_program, translate_psi, CompileError};
pub use parser::{parse_expr, parse_program, ParseError, Program};
pub use syntax::{size, Alt, DataEnv, Expr, Name};
