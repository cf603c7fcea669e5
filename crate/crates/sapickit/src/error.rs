//! Error types shared across modules.

use std::fmt;

use thiserror::Error;

/// Errors from the term layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("rewrite bound exceeded; suspect rule `{rule}`")]
    NonTermination { rule: String },
    #[error("pattern contains destructor symbol `{0}`")]
    DestructorPattern(String),
    #[error("invalid position {0:?}")]
    Position(Vec<usize>),
    #[error("invalid rewrite rule: {0}")]
    BadRule(String),
    #[error("signature error: {0}")]
    Signature(String),
}

/// A source location (1-based line and column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A lexical, syntax, or sort error located in the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

/// One violated well-formedness condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Process position (or formula path) where the violation occurs.
    pub position: Vec<usize>,
    /// Condition identifier, e.g. `reserved`, `rebinding`, `annotation`.
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] at {:?}: {}", self.rule, self.position, self.message)
    }
}

/// Annotation failure at a process position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lock annotation fails at {position:?}: {reason}")]
pub struct AnnotationError {
    pub position: Vec<usize>,
    pub reason: String,
}

/// Errors raised when evaluating trace formulas.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("quantified variable `{0}` occurs in no action atom in its scope")]
    Unguarded(String),
    #[error("free variable `{0}` has no value")]
    Unbound(String),
    #[error("ill-formed formula: {0}")]
    IllFormed(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// Top-level error for the command-line drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("process is not well-formed:\n{}", .0.iter().map(|v| format!("  {}", v)).collect::<Vec<_>>().join("\n"))]
    IllFormed(Vec<Violation>),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("{0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
