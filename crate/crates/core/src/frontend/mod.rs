//! Model-file and formula parsing.

pub mod ast;
mod lexer;
mod parser;
mod print;

use std::fmt;

pub use parser::{parse_formula, parse_system, parse_system_with, Overrides};
pub use print::{expr_to_string, formula_to_string};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}
