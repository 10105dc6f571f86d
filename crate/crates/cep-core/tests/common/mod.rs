//! Shared fixtures and generators for the integration suites.

#![allow(dead_code)]

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::Rng;

use cep_core::event::{load_stream, EventTuple, StreamFormat, StreamPrefix};
use cep_core::formula::{Formula, Strategy};
use cep_core::oracle::ComplexEvent;
use cep_core::predicate::PredicateExpr;
use cep_core::schema::{load_schema, Schema};
use cep_core::value::{CmpOp, Value};

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

pub fn ce(p: &[usize]) -> ComplexEvent {
    ComplexEvent::new(p.iter().copied())
}

/// Random events over the sensor schema with small attribute domains.
pub fn random_stream(rng: &mut StdRng, schema: &Arc<Schema>, len: usize) -> StreamPrefix {
    let events: Vec<EventTuple> = (0..len)
        .map(|_| {
            let rel = rng.gen_range(0..schema.relations().len() as u32);
            let values = schema
                .relation(rel)
                .attrs
                .iter()
                .map(|_| Value::Int(rng.gen_range(0..4)))
                .collect();
            EventTuple::new(schema, rel, values).unwrap()
        })
        .collect();
    StreamPrefix::new(schema.clone(), events)
}

/// Random well-formed unary formula of bounded depth over the sensor
/// schema. Variables come from a small pool, so reuse (and hence
/// unsafety repaired by the rewriting) occurs naturally.
pub fn random_formula(rng: &mut StdRng, schema: &Arc<Schema>, depth: usize) -> Formula {
    loop {
        let f = gen_formula(rng, schema, depth);
        let report = cep_core::analyze(&f);
        if report.well_formed && report.unary {
            return f;
        }
    }
}

fn gen_formula(rng: &mut StdRng, schema: &Arc<Schema>, depth: usize) -> Formula {
    let vars = ["x", "y", "z", "w"];
    if depth == 0 || rng.gen_bool(0.3) {
        let rel = rng.gen_range(0..schema.relations().len() as u32);
        let rel_name = schema.rel_name(rel).to_string();
        let var = vars[rng.gen_range(0..vars.len())];
        return Formula::assign(rel, rel_name, var);
    }
    match rng.gen_range(0..5) {
        0 => Formula::or(
            gen_formula(rng, schema, depth - 1),
            gen_formula(rng, schema, depth - 1),
        ),
        1 => Formula::seq(
            gen_formula(rng, schema, depth - 1),
            gen_formula(rng, schema, depth - 1),
        ),
        2 => Formula::plus(gen_formula(rng, schema, depth - 1)),
        _ => {
            let body = gen_formula(rng, schema, depth - 1);
            let pred = gen_unary_pred(rng, schema, &body);
            Formula::filter(body, pred)
        }
    }
}

fn gen_unary_pred(rng: &mut StdRng, schema: &Arc<Schema>, body: &Formula) -> PredicateExpr {
    // pick a variable likely to be bound in the body
    let defined: Vec<String> = cep_core::analysis::vdef(body).into_iter().collect();
    let vars = ["x", "y", "z", "w"];
    let var = if !defined.is_empty() && rng.gen_bool(0.9) {
        defined[rng.gen_range(0..defined.len())].clone()
    } else {
        vars[rng.gen_range(0..vars.len())].to_string()
    };
    let atom = |rng: &mut StdRng, var: &str| -> PredicateExpr {
        match rng.gen_range(0..3) {
            0 => {
                let rel = rng.gen_range(0..schema.relations().len() as u32);
                PredicateExpr::TypeIs {
                    var: var.to_string(),
                    rel,
                    rel_name: schema.rel_name(rel).to_string(),
                }
            }
            1 => {
                let attrs = ["id", "hum", "tmp"];
                let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
                PredicateExpr::cmp(
                    var,
                    attrs[rng.gen_range(0..attrs.len())],
                    ops[rng.gen_range(0..ops.len())],
                    Value::Int(rng.gen_range(0..4)),
                )
            }
            _ => PredicateExpr::cmp(var, "id", CmpOp::Ge, Value::Int(0)),
        }
    };
    match rng.gen_range(0..4) {
        0 => PredicateExpr::and(atom(rng, &var), atom(rng, &var)),
        1 => PredicateExpr::or(atom(rng, &var), atom(rng, &var)),
        2 => atom(rng, &var).negate(),
        _ => atom(rng, &var),
    }
}

/// Random strategy wrapper or none.
pub fn random_strategy(rng: &mut StdRng) -> Option<Strategy> {
    match rng.gen_range(0..5) {
        0 => None,
        1 => Some(Strategy::Strict),
        2 => Some(Strategy::Nxt),
        3 => Some(Strategy::Last),
        _ => Some(Strategy::Max),
    }
}

/// Random small automaton over the sensor schema; shapes include dead
/// initial states and missing skip loops.
pub fn random_automaton(rng: &mut StdRng, schema: &Arc<Schema>) -> cep_core::cea::Cea {
    use cep_core::cea::{Cea, Mark, Transition};
    let n_states = rng.gen_range(1..=5u32);
    let pool = [
        PredicateExpr::type_is(schema, "x", "T").unwrap(),
        PredicateExpr::type_is(schema, "x", "H").unwrap(),
        PredicateExpr::cmp("x", "id", CmpOp::Le, Value::Int(1)),
        PredicateExpr::cmp("x", "tmp", CmpOp::Gt, Value::Int(1)),
        PredicateExpr::True,
    ];
    let n_transitions = rng.gen_range(0..=9);
    let transitions = (0..n_transitions)
        .map(|_| Transition {
            from: rng.gen_range(0..n_states),
            pred: pool[rng.gen_range(0..pool.len())].clone(),
            mark: if rng.gen_bool(0.5) {
                Mark::Keep
            } else {
                Mark::Skip
            },
            to: rng.gen_range(0..n_states),
        })
        .collect();
    let initial: Vec<u32> = (0..n_states).filter(|_| rng.gen_bool(0.5)).collect();
    let finals = (0..n_states).filter(|_| rng.gen_bool(0.4)).collect();
    Cea {
        n_states,
        transitions,
        initial: if initial.is_empty() { vec![0] } else { initial },
        finals,
    }
}
