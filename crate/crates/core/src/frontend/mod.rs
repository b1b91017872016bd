//! Mini C front end: lexer, recursive-descent parser and an AST whose node
//! kinds mirror Clang's.
//!
//! Supported subset: functions, `int`/`float`/`double` scalars and arrays,
//! arithmetic, relational and logical operators, `++`/`--`/`-`/`!`,
//! (compound) assignment, `for`/`while`/`if`/`return`, calls and
//! `#pragma omp` lines. Everything else is a clean error.

mod ast;
mod json;
mod lexer;
mod omp;
mod parser;

use thiserror::Error;

pub use ast::{Ast, AstNode, NodeId, NodeKind, UnknownKind};
pub use json::{ast_from_json, ast_to_json, AstJsonError};
pub use lexer::{tokenize, Token, TokenKind};
pub use omp::{Clause, Directive, DirectiveError, MapKind};
pub use parser::{parse, parse_source};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{line}:{column}: lex error: {message}")]
    Lex { line: usize, column: usize, message: String },
    #[error("{line}:{column}: parse error: expected {expected}, found {found}")]
    Parse { expected: String, found: String, line: usize, column: usize },
    #[error("{line}:{column}: use of undeclared identifier `{name}`")]
    UnresolvedRef { name: String, line: usize, column: usize },
}
