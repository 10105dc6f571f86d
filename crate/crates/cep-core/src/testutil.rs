//! Shared fixtures for unit tests: the running-example schema, stream
//! and formulas.

use std::sync::Arc;

use crate::event::{load_stream, StreamFormat, StreamPrefix};
use crate::schema::{load_schema, Schema};

pub fn sensors() -> Arc<Schema> {
    load_schema("H(id:int, hum:int); T(id:int, tmp:int)").unwrap()
}

pub fn fig1(schema: &Arc<Schema>) -> StreamPrefix {
    let text = concat!(
        "{\"type\":\"H\",\"id\":2,\"hum\":25}\n",
        "{\"type\":\"T\",\"id\":0,\"tmp\":45}\n",
        "{\"type\":\"H\",\"id\":0,\"hum\":20}\n",
        "{\"type\":\"H\",\"id\":1,\"hum\":25}\n",
        "{\"type\":\"T\",\"id\":1,\"tmp\":40}\n",
        "{\"type\":\"T\",\"id\":0,\"tmp\":42}\n",
        "{\"type\":\"T\",\"id\":1,\"tmp\":25}\n",
        "{\"type\":\"H\",\"id\":1,\"hum\":70}\n",
        "{\"type\":\"H\",\"id\":0,\"hum\":18}\n",
    );
    load_stream(text.as_bytes(), schema, StreamFormat::Jsonl).unwrap()
}

pub const PHI1: &str =
    "(T AS x ; H AS y) FILTER (x.tmp > 40 AND y.hum <= 25 AND x.id = 0 AND y.id = 0)";
pub const PHI2: &str = "((T AS x ; H AS y) OR (H AS y ; T AS x)) FILTER (x.tmp > 40 AND y.hum <= 25 AND x.id = 0 AND y.id = 0)";
pub const PHI3: &str = "(H AS x ; (T AS y FILTER y.id = 1)+ ; H AS z) FILTER (x.hum < 30 AND z.hum > 60 AND x.id = 1 AND z.id = 1)";
