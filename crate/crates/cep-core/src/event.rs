//! Event tuples and finite stream prefixes, with JSONL/CSV ingestion.
//!
//! Event time is the stream index: the i-th record of a file is the event
//! at position i. There are no timestamps.

use std::io::BufRead;
use std::sync::Arc;

use crate::error::StreamError;
use crate::schema::{RelId, Schema};
use crate::value::{Value, ValueKind};

/// One event: its relation and the attribute values in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTuple {
    pub rel: RelId,
    values: Vec<Value>,
}

impl EventTuple {
    /// Builds a tuple, checking the values against the schema.
    pub fn new(schema: &Schema, rel: RelId, values: Vec<Value>) -> Result<EventTuple, String> {
        let relation = schema.relation(rel);
        if values.len() != relation.attrs.len() {
            return Err(format!(
                "`{}` expects {} attributes, got {}",
                relation.name,
                relation.attrs.len(),
                values.len()
            ));
        }
        for (attr, v) in relation.attrs.iter().zip(&values) {
            if v.kind() != attr.kind {
                return Err(format!(
                    "attribute `{}` expects {}, got {}",
                    attr.name,
                    attr.kind,
                    v.kind()
                ));
            }
        }
        Ok(EventTuple { rel, values })
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    /// Looks up an attribute value by name; `None` when the relation
    /// does not carry it.
    pub fn attr<'a>(&'a self, schema: &Schema, name: &str) -> Option<&'a Value> {
        let idx = schema.relation(self.rel).attr_index(name)?;
        self.values.get(idx)
    }
}

/// A finite prefix of a conceptually unbounded stream.
#[derive(Debug, Clone)]
pub struct StreamPrefix {
    schema: Arc<Schema>,
    events: Vec<EventTuple>,
}

impl StreamPrefix {
    pub fn new(schema: Arc<Schema>, events: Vec<EventTuple>) -> StreamPrefix {
        StreamPrefix { schema, events }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, pos: usize) -> Option<&EventTuple> {
        self.events.get(pos)
    }

    /// Pull-based iteration in position order, each event exactly once.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &EventTuple)> {
        self.events.iter().enumerate()
    }

    /// Serializes to JSONL; reloading yields an identical prefix.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            let rel = self.schema.relation(ev.rel);
            let mut obj = serde_json::Map::new();
            obj.insert("type".into(), serde_json::Value::String(rel.name.clone()));
            for (attr, v) in rel.attrs.iter().zip(ev.values()) {
                let jv = match v {
                    Value::Int(i) => serde_json::Value::from(*i),
                    Value::Float(f) => serde_json::Value::from(*f),
                    Value::Str(s) => serde_json::Value::from(s.clone()),
                    Value::Bool(b) => serde_json::Value::from(*b),
                };
                obj.insert(attr.name.clone(), jv);
            }
            out.push_str(&serde_json::Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamFormat {
    Jsonl,
    Csv,
}

/// Loads a stream from a reader; records keep file order.
pub fn load_stream(
    reader: impl BufRead,
    schema: &Arc<Schema>,
    format: StreamFormat,
) -> Result<StreamPrefix, StreamError> {
    match format {
        StreamFormat::Jsonl => load_jsonl(reader, schema),
        StreamFormat::Csv => load_csv(reader, schema),
    }
}

fn json_to_value(v: &serde_json::Value, kind: ValueKind) -> Option<Value> {
    match (kind, v) {
        (ValueKind::Int, serde_json::Value::Number(n)) => n.as_i64().map(Value::Int),
        (ValueKind::Float, serde_json::Value::Number(n)) => n.as_f64().map(Value::Float),
        (ValueKind::Str, serde_json::Value::String(s)) => Some(Value::Str(s.clone())),
        (ValueKind::Bool, serde_json::Value::Bool(b)) => Some(Value::Bool(*b)),
        _ => None,
    }
}

fn load_jsonl(reader: impl BufRead, schema: &Arc<Schema>) -> Result<StreamPrefix, StreamError> {
    let mut events = Vec::new();
    let mut index = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&line)
            .map_err(|e| StreamError::Malformed { index, msg: e.to_string() })?;
        let type_name = obj
            .get("type")
            .and_then(|v| v.as_str())
            .ok_or_else(|| StreamError::Malformed { index, msg: "missing `type` field".into() })?;
        let rel_id = schema
            .rel_id(type_name)
            .ok_or_else(|| StreamError::UnknownType { index, name: type_name.to_string() })?;
        let relation = schema.relation(rel_id);
        let mut values = Vec::with_capacity(relation.attrs.len());
        for attr in &relation.attrs {
            let raw = obj.get(&attr.name).ok_or_else(|| StreamError::MissingAttribute {
                index,
                rel: relation.name.clone(),
                attr: attr.name.clone(),
            })?;
            let v = json_to_value(raw, attr.kind).ok_or_else(|| StreamError::KindMismatch {
                index,
                attr: attr.name.clone(),
                expected: attr.kind.to_string(),
                got: raw.to_string(),
            })?;
            values.push(v);
        }
        for key in obj.keys() {
            if key != "type" && relation.attr_index(key).is_none() {
                return Err(StreamError::ExtraAttribute {
                    index,
                    rel: relation.name.clone(),
                    attr: key.clone(),
                });
            }
        }
        events.push(EventTuple { rel: rel_id, values });
        index += 1;
    }
    Ok(StreamPrefix::new(schema.clone(), events))
}

fn parse_cell(raw: &str, kind: ValueKind) -> Option<Value> {
    match kind {
        ValueKind::Int => raw.parse().ok().map(Value::Int),
        ValueKind::Float => raw.parse().ok().map(Value::Float),
        ValueKind::Str => Some(Value::Str(raw.to_string())),
        ValueKind::Bool => raw.parse().ok().map(Value::Bool),
    }
}

fn load_csv(reader: impl BufRead, schema: &Arc<Schema>) -> Result<StreamPrefix, StreamError> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Ok(StreamPrefix::new(schema.clone(), Vec::new())),
    };
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    if columns.first().map(String::as_str) != Some("type") {
        return Err(StreamError::Malformed { index: 0, msg: "csv header must start with `type`".into() });
    }
    let mut events = Vec::new();
    let mut index = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(StreamError::Malformed {
                index,
                msg: format!("expected {} cells, got {}", columns.len(), cells.len()),
            });
        }
        let type_name = cells[0];
        let rel_id = schema
            .rel_id(type_name)
            .ok_or_else(|| StreamError::UnknownType { index, name: type_name.to_string() })?;
        let relation = schema.relation(rel_id);
        let mut values = vec![None; relation.attrs.len()];
        for (col, raw) in columns.iter().zip(&cells).skip(1) {
            match relation.attr_index(col) {
                Some(i) => {
                    if raw.is_empty() {
                        return Err(StreamError::MissingAttribute {
                            index,
                            rel: relation.name.clone(),
                            attr: col.clone(),
                        });
                    }
                    let attr = &relation.attrs[i];
                    let v = parse_cell(raw, attr.kind).ok_or_else(|| StreamError::KindMismatch {
                        index,
                        attr: col.clone(),
                        expected: attr.kind.to_string(),
                        got: raw.to_string(),
                    })?;
                    values[i] = Some(v);
                }
                None => {
                    if !raw.is_empty() {
                        return Err(StreamError::ExtraAttribute {
                            index,
                            rel: relation.name.clone(),
                            attr: col.clone(),
                        });
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(values.len());
        for (attr, v) in relation.attrs.iter().zip(values) {
            out.push(v.ok_or_else(|| StreamError::MissingAttribute {
                index,
                rel: relation.name.clone(),
                attr: attr.name.clone(),
            })?);
        }
        events.push(EventTuple { rel: rel_id, values: out });
        index += 1;
    }
    Ok(StreamPrefix::new(schema.clone(), events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::load_schema;

    fn sensor_schema() -> Arc<Schema> {
        load_schema("H(id:int, hum:int); T(id:int, tmp:int)").unwrap()
    }

    /// The running-example stream: nine temperature/humidity events.
    pub fn fig1_jsonl() -> &'static str {
        concat!(
            "{\"type\":\"H\",\"id\":2,\"hum\":25}\n",
            "{\"type\":\"T\",\"id\":0,\"tmp\":45}\n",
            "{\"type\":\"H\",\"id\":0,\"hum\":20}\n",
            "{\"type\":\"H\",\"id\":1,\"hum\":25}\n",
            "{\"type\":\"T\",\"id\":1,\"tmp\":40}\n",
            "{\"type\":\"T\",\"id\":0,\"tmp\":42}\n",
            "{\"type\":\"T\",\"id\":1,\"tmp\":25}\n",
            "{\"type\":\"H\",\"id\":1,\"hum\":70}\n",
            "{\"type\":\"H\",\"id\":0,\"hum\":18}\n",
        )
    }

    #[test]
    fn loads_running_example() {
        let schema = sensor_schema();
        let s = load_stream(fig1_jsonl().as_bytes(), &schema, StreamFormat::Jsonl).unwrap();
        assert_eq!(s.len(), 9);
        let t1 = s.get(1).unwrap();
        assert_eq!(schema.rel_name(t1.rel), "T");
        assert_eq!(t1.attr(&schema, "id"), Some(&Value::Int(0)));
        assert_eq!(t1.attr(&schema, "tmp"), Some(&Value::Int(45)));
    }

    #[test]
    fn empty_file_is_empty_prefix() {
        let schema = sensor_schema();
        let s = load_stream("".as_bytes(), &schema, StreamFormat::Jsonl).unwrap();
        assert_eq!(s.len(), 0);
        assert!(s.iter().next().is_none());
    }

    #[test]
    fn missing_attribute_reports_index() {
        let schema = sensor_schema();
        let text = "{\"type\":\"T\",\"id\":0,\"tmp\":45}\n{\"type\":\"T\",\"id\":0}\n";
        match load_stream(text.as_bytes(), &schema, StreamFormat::Jsonl) {
            Err(StreamError::MissingAttribute { index, attr, .. }) => {
                assert_eq!(index, 1);
                assert_eq!(attr, "tmp");
            }
            other => panic!("expected MissingAttribute, got {other:?}"),
        }
    }

    #[test]
    fn unknown_type_and_kind_mismatch() {
        let schema = sensor_schema();
        assert!(matches!(
            load_stream("{\"type\":\"X\"}\n".as_bytes(), &schema, StreamFormat::Jsonl),
            Err(StreamError::UnknownType { index: 0, .. })
        ));
        assert!(matches!(
            load_stream(
                "{\"type\":\"T\",\"id\":0,\"tmp\":\"hot\"}\n".as_bytes(),
                &schema,
                StreamFormat::Jsonl
            ),
            Err(StreamError::KindMismatch { .. })
        ));
    }

    #[test]
    fn csv_round() {
        let schema = sensor_schema();
        let text = "type,id,hum,tmp\nH,2,25,\nT,0,,45\n";
        let s = load_stream(text.as_bytes(), &schema, StreamFormat::Csv).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(1).unwrap().attr(&schema, "tmp"), Some(&Value::Int(45)));
        // empty cell for a required attribute is an error
        let bad = "type,id,hum,tmp\nT,0,,\n";
        assert!(matches!(
            load_stream(bad.as_bytes(), &schema, StreamFormat::Csv),
            Err(StreamError::MissingAttribute { .. })
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let schema = sensor_schema();
        let s = load_stream(fig1_jsonl().as_bytes(), &schema, StreamFormat::Jsonl).unwrap();
        let text = s.to_jsonl();
        let s2 = load_stream(text.as_bytes(), &schema, StreamFormat::Jsonl).unwrap();
        assert_eq!(s.len(), s2.len());
        for ((_, a), (_, b)) in s.iter().zip(s2.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Schema>();
        assert_send_sync::<StreamPrefix>();
        assert_send_sync::<EventTuple>();
    }

    #[test]
    fn iteration_is_monotone_and_complete() {
        let schema = sensor_schema();
        let s = load_stream(fig1_jsonl().as_bytes(), &schema, StreamFormat::Jsonl).unwrap();
        let positions: Vec<usize> = s.iter().map(|(i, _)| i).collect();
        assert_eq!(positions, (0..9).collect::<Vec<_>>());
        assert_eq!(schema.rel_name(s.get(0).unwrap().rel), "H");
    }
}
