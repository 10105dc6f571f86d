//! Database schemas: relation names with their typed attribute lists.
//!
//! Schema documents look like `H(id:int, hum:int); T(id:int, tmp:int)`,
//! with entries separated by `;` or newlines. Zero-attribute relations
//! (`A()` or just `A`) are allowed.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::SchemaError;
use crate::value::ValueKind;

/// Index of a relation inside its schema.
pub type RelId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub attrs: Vec<Attribute>,
}

impl Relation {
    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct Schema {
    relations: Vec<Relation>,
    by_name: HashMap<String, RelId>,
}

impl Schema {
    pub fn new(relations: Vec<Relation>) -> Result<Arc<Schema>, SchemaError> {
        if relations.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut by_name = HashMap::new();
        for (i, rel) in relations.iter().enumerate() {
            if by_name.insert(rel.name.clone(), i as RelId).is_some() {
                return Err(SchemaError::DuplicateRelation(rel.name.clone()));
            }
            for (j, attr) in rel.attrs.iter().enumerate() {
                if rel.attrs[..j].iter().any(|a| a.name == attr.name) {
                    return Err(SchemaError::DuplicateAttribute {
                        rel: rel.name.clone(),
                        attr: attr.name.clone(),
                    });
                }
            }
        }
        Ok(Arc::new(Schema { relations, by_name }))
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn rel_id(&self, name: &str) -> Option<RelId> {
        self.by_name.get(name).copied()
    }

    pub fn relation(&self, id: RelId) -> &Relation {
        &self.relations[id as usize]
    }

    pub fn rel_name(&self, id: RelId) -> &str {
        &self.relations[id as usize].name
    }

    /// Relations that carry an attribute with this name.
    pub fn relations_with_attr<'a>(&'a self, attr: &'a str) -> impl Iterator<Item = (RelId, &'a Attribute)> {
        self.relations.iter().enumerate().filter_map(move |(i, r)| {
            r.attr_index(attr).map(|j| (i as RelId, &r.attrs[j]))
        })
    }
}

/// Parses a schema document.
pub fn load_schema(text: &str) -> Result<Arc<Schema>, SchemaError> {
    let mut relations = Vec::new();
    let bytes = text.as_bytes();
    let mut pos = 0usize;

    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && (bytes[*pos] as char).is_whitespace() {
            *pos += 1;
        }
    };
    let ident = |pos: &mut usize| -> Option<String> {
        let start = *pos;
        while *pos < bytes.len() {
            let c = bytes[*pos] as char;
            if c.is_ascii_alphanumeric() || c == '_' {
                *pos += 1;
            } else {
                break;
            }
        }
        if *pos > start {
            Some(text[start..*pos].to_string())
        } else {
            None
        }
    };

    loop {
        skip_ws(&mut pos);
        if pos >= bytes.len() {
            break;
        }
        if bytes[pos] == b';' {
            pos += 1;
            continue;
        }
        let at = pos;
        let name = ident(&mut pos).ok_or_else(|| SchemaError::Syntax {
            pos: at,
            msg: format!("expected relation name, found `{}`", &text[at..(at + 1).min(text.len())]),
        })?;
        let mut attrs = Vec::new();
        skip_ws(&mut pos);
        if pos < bytes.len() && bytes[pos] == b'(' {
            pos += 1;
            loop {
                skip_ws(&mut pos);
                if pos < bytes.len() && bytes[pos] == b')' {
                    pos += 1;
                    break;
                }
                let at = pos;
                let attr_name = ident(&mut pos).ok_or_else(|| SchemaError::Syntax {
                    pos: at,
                    msg: "expected attribute name".into(),
                })?;
                skip_ws(&mut pos);
                if pos >= bytes.len() || bytes[pos] != b':' {
                    return Err(SchemaError::Syntax { pos, msg: "expected `:` after attribute name".into() });
                }
                pos += 1;
                skip_ws(&mut pos);
                let at = pos;
                let kind_name = ident(&mut pos).ok_or_else(|| SchemaError::Syntax {
                    pos: at,
                    msg: "expected value kind".into(),
                })?;
                let kind = ValueKind::parse(&kind_name).ok_or(SchemaError::UnknownKind(kind_name))?;
                attrs.push(Attribute { name: attr_name, kind });
                skip_ws(&mut pos);
                if pos < bytes.len() && bytes[pos] == b',' {
                    pos += 1;
                } else if pos < bytes.len() && bytes[pos] == b')' {
                    pos += 1;
                    break;
                } else {
                    return Err(SchemaError::Syntax { pos, msg: "expected `,` or `)`".into() });
                }
            }
        }
        relations.push(Relation { name, attrs });
    }

    Schema::new(relations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sensor_schema() {
        let s = load_schema("H(id:int, hum:int); T(id:int, tmp:int)").unwrap();
        assert_eq!(s.relations().len(), 2);
        assert_eq!(s.rel_name(s.rel_id("T").unwrap()), "T");
        assert_eq!(s.relation(0).attrs[1].name, "hum");
        assert_eq!(s.relation(0).attrs[1].kind, ValueKind::Int);
    }

    #[test]
    fn empty_schema_is_an_error() {
        assert!(matches!(load_schema(""), Err(SchemaError::Empty)));
        assert!(matches!(load_schema("  \n "), Err(SchemaError::Empty)));
    }

    #[test]
    fn zero_attribute_relations() {
        let s = load_schema("A(); B(); C(); D(); E()").unwrap();
        assert_eq!(s.relations().len(), 5);
        assert!(s.relations().iter().all(|r| r.attrs.is_empty()));
    }

    #[test]
    fn duplicates_rejected() {
        assert!(matches!(
            load_schema("A(); A()"),
            Err(SchemaError::DuplicateRelation(_))
        ));
        assert!(matches!(
            load_schema("A(x:int, x:int)"),
            Err(SchemaError::DuplicateAttribute { .. })
        ));
        assert!(matches!(
            load_schema("A(x:quaternion)"),
            Err(SchemaError::UnknownKind(_))
        ));
    }

    #[test]
    fn newline_separated_entries() {
        let s = load_schema("H(id:int, hum:int)\nT(id:int, tmp:int)").unwrap();
        assert_eq!(s.relations().len(), 2);
    }
}
