//! Benchmark harness and bundled queries, shared by the `cep` binary and
//! the acceptance suite.

pub mod bench;
pub mod queries;
