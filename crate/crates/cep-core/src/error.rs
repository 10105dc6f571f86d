//! Error types for the pipeline stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("empty schema: at least one relation is required")]
    Empty,
    #[error("duplicate relation `{0}`")]
    DuplicateRelation(String),
    #[error("duplicate attribute `{attr}` in relation `{rel}`")]
    DuplicateAttribute { rel: String, attr: String },
    #[error("unknown value kind `{0}` (expected int, float, string or bool)")]
    UnknownKind(String),
    #[error("schema syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("record {index}: unknown type `{name}`")]
    UnknownType { index: usize, name: String },
    #[error("record {index}: missing attribute `{attr}` of `{rel}`")]
    MissingAttribute { index: usize, rel: String, attr: String },
    #[error("record {index}: attribute `{attr}` does not belong to `{rel}`")]
    ExtraAttribute { index: usize, rel: String, attr: String },
    #[error("record {index}: attribute `{attr}` expects {expected}, got {got}")]
    KindMismatch { index: usize, attr: String, expected: String, got: String },
    #[error("record {index}: {msg}")]
    Malformed { index: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
#[error("syntax error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: usize, msg: impl Into<String>) -> Self {
        ParseError { pos, msg: msg.into() }
    }
}

/// Precondition failures reported by the compiler and rewriter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("formula is not well-formed: a filtered variable is not bound by any enclosing sub-formula")]
    NotWellFormed,
    #[error("formula is not safe: a sequencing shares vdef+ variables between its sides")]
    NotSafe,
    #[error("formula is not unary: a filter uses a predicate over more than one variable")]
    NotUnary,
    #[error("formula is not in LP-normal form: a unary filter is not applied directly to a definition")]
    NotLpNormalForm,
    #[error("formula contains a selection strategy wrapper; compile the core formula and apply the strategy to the automaton")]
    HasSelect,
}
