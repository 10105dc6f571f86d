//! The bundled benchmark queries over the five-type schema.

pub const BENCH_SCHEMA: &str = "A(); B(); C(); D(); E()";

pub const QUERIES: &[(&str, &str)] = &[
    ("Q1", "A AS x; B AS y; C AS z"),
    ("Q2", "A AS x; B AS y; C AS z; D AS w"),
    ("Q3", "((A AS x OR B AS y) OR C AS z); D AS w"),
    ("Q4", "(A AS x)+; B AS y"),
    ("Q5", "(A AS x)+; (B AS y)+; C AS z"),
    ("Q6", "((A AS x)+; B AS y)+; C AS z"),
];

pub fn lookup(id: &str) -> Option<&'static str> {
    QUERIES
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(id))
        .map(|(_, text)| *text)
}

/// The event type whose arrival completes a match: the last relation of
/// the sequence. Stress streams withhold it until the final position.
pub fn trigger_type(id: &str) -> Option<&'static str> {
    match id.to_ascii_uppercase().as_str() {
        "Q1" | "Q5" | "Q6" => Some("C"),
        "Q2" | "Q3" => Some("D"),
        "Q4" => Some("B"),
        _ => None,
    }
}
