//! Complex event processing over typed event streams.
//!
//! The pipeline: parse a pattern formula, rewrite it into a safe
//! LP-normal form, compile it into a complex event automaton, and
//! evaluate the automaton over a stream with constant update time per
//! event and constant-delay enumeration of the matched complex events.
//! A brute-force reference semantics ([`oracle`]) grounds every stage.

pub mod analysis;
pub mod cea;

#[cfg(test)]
pub(crate) mod testutil;
pub mod error;
pub mod event;
pub mod formula;
pub mod oracle;
pub mod parser;
pub mod pipeline;
pub mod predicate;
pub mod rewrite;
pub mod runtime;
pub mod schema;
pub mod stateset;
pub mod value;

pub use analysis::{analyze, bound_vars, AnalysisReport};
pub use error::{CompileError, ParseError, SchemaError, StreamError};
pub use event::{load_stream, EventTuple, StreamFormat, StreamPrefix};
pub use formula::{Formula, Strategy};
pub use oracle::{apply_selection, leq_last, leq_next, oracle_eval, ComplexEvent, OutputSet};
pub use parser::parse_formula;
pub use predicate::PredicateExpr;
pub use rewrite::{is_lp_normal_form, to_dnf, to_lp_normal_form, to_safe};
pub use schema::{load_schema, Schema};
pub use value::{CmpOp, Value, ValueKind};
