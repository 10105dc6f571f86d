//! Boolean closure and I/O-determinization of complex event automata.

use std::collections::HashMap;

use crate::event::EventTuple;
use crate::predicate::PredicateExpr;
use crate::schema::Schema;
use crate::stateset::StateSet;

use super::minterm::{definitely_disjoint, minterm_partition, MintermPartition};
use super::{Cea, Mark, StateId, Transition};

/// `union(a1,a2)` recognizes the union of the outputs: disjoint union of
/// states with both initial and final sets kept.
pub fn union(a1: &Cea, a2: &Cea) -> Cea {
    let off = a1.n_states;
    let mut transitions = a1.transitions.clone();
    transitions.extend(a2.transitions.iter().map(|t| Transition {
        from: t.from + off,
        pred: t.pred.clone(),
        mark: t.mark,
        to: t.to + off,
    }));
    let mut initial = a1.initial.clone();
    initial.extend(a2.initial.iter().map(|q| q + off));
    let mut finals = a1.finals.clone();
    finals.extend(a2.finals.iter().map(|q| q + off));
    Cea { n_states: a1.n_states + a2.n_states, transitions, initial, finals }
}

/// Cartesian-product intersection; transition predicates are the
/// conjunctions, marks must agree.
pub fn intersection(a1: &Cea, a2: &Cea) -> Cea {
    let pair = |q1: StateId, q2: StateId| q1 * a2.n_states + q2;
    let mut transitions = Vec::new();
    for t1 in &a1.transitions {
        for t2 in &a2.transitions {
            if t1.mark == t2.mark {
                transitions.push(Transition {
                    from: pair(t1.from, t2.from),
                    pred: PredicateExpr::and(t1.pred.clone(), t2.pred.clone()),
                    mark: t1.mark,
                    to: pair(t1.to, t2.to),
                });
            }
        }
    }
    let mut initial = Vec::new();
    for q1 in &a1.initial {
        for q2 in &a2.initial {
            initial.push(pair(*q1, *q2));
        }
    }
    let mut finals = Vec::new();
    for q1 in &a1.finals {
        for q2 in &a2.finals {
            finals.push(pair(*q1, *q2));
        }
    }
    Cea { n_states: a1.n_states * a2.n_states, transitions, initial, finals }
}

/// One-step extended transition function over state sets.
pub enum DeltaInput<'a> {
    /// runtime form: a concrete tuple
    Tuple(&'a Schema, &'a EventTuple),
    /// static form: a minterm of the automaton's own predicate base
    Minterm(&'a MintermPartition, usize),
}

pub fn extended_delta(a: &Cea, from: &StateSet, mark: Mark, input: DeltaInput) -> StateSet {
    let mut out = StateSet::empty(a.n_states as usize);
    for t in &a.transitions {
        if t.mark != mark || !from.contains(t.from) {
            continue;
        }
        let fires = match &input {
            DeltaInput::Tuple(schema, tuple) => t.pred.eval_tuple(schema, tuple),
            DeltaInput::Minterm(partition, idx) => partition.implies(*idx, &t.pred),
        };
        if fires {
            out.insert(t.to);
        }
    }
    out
}

/// Single initial state and, per state, pairwise-disjoint predicates on
/// equal marks. Disjointness is the conservative syntactic test, so a
/// `true` verdict is reliable.
pub fn is_io_deterministic(a: &Cea) -> bool {
    if a.initial.len() != 1 {
        return false;
    }
    for q in 0..a.n_states {
        let outgoing: Vec<&Transition> = a.transitions_from(q).collect();
        for (i, t1) in outgoing.iter().enumerate() {
            for t2 in &outgoing[i + 1..] {
                if t1.mark == t2.mark && !definitely_disjoint(&t1.pred, &t2.pred) {
                    return false;
                }
            }
        }
    }
    true
}

/// Subset construction over (minterm, mark) letters; only reachable
/// subsets are materialized and the empty sink is left out. Outputs an
/// equivalent I/O-deterministic automaton.
pub fn io_determinize(a: &Cea) -> Cea {
    determinize_inner(a, false)
}

/// Complement within the per-position universe of candidate complex
/// events: determinizes completely (with the empty sink, so the
/// transition function is total per letter/mark) and flips finals.
pub fn complement(a: &Cea) -> Cea {
    let mut det = determinize_inner(a, true);
    let finals: Vec<StateId> =
        (0..det.n_states).filter(|q| !det.finals.contains(q)).collect();
    det.finals = finals;
    det
}

fn determinize_inner(a: &Cea, complete: bool) -> Cea {
    let partition = minterm_partition(&a.predicate_base());
    let n = a.n_states as usize;
    let start = StateSet::from_iter(n, a.initial.iter().copied());
    let mut ids: HashMap<StateSet, StateId> = HashMap::new();
    let mut order: Vec<StateSet> = Vec::new();
    let mut work: Vec<StateSet> = Vec::new();
    ids.insert(start.clone(), 0);
    order.push(start.clone());
    work.push(start);
    let mut transitions = Vec::new();
    while let Some(subset) = work.pop() {
        let from_id = ids[&subset];
        for (mi, minterm) in partition.minterms.iter().enumerate() {
            for mark in [Mark::Keep, Mark::Skip] {
                let target = extended_delta(a, &subset, mark, DeltaInput::Minterm(&partition, mi));
                if target.is_empty() && !complete {
                    continue;
                }
                let next_id = *ids.entry(target.clone()).or_insert_with(|| {
                    let id = order.len() as StateId;
                    order.push(target.clone());
                    work.push(target.clone());
                    id
                });
                transitions.push(Transition {
                    from: from_id,
                    pred: minterm.pred.clone(),
                    mark,
                    to: next_id,
                });
            }
        }
    }
    let finals: Vec<StateId> = order
        .iter()
        .enumerate()
        .filter(|(_, subset)| a.finals.iter().any(|f| subset.contains(*f)))
        .map(|(i, _)| i as StateId)
        .collect();
    Cea { n_states: order.len() as u32, transitions, initial: vec![0], finals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cea::{compile_core, enumerate_all, enumerate_runs, remove_epsilon};
    use crate::parser::parse_formula;
    use crate::rewrite::{to_lp_normal_form, to_safe};
    use crate::testutil::{fig1, sensors, PHI1};

    fn pipeline(text: &str) -> Cea {
        let schema = sensors();
        let f = parse_formula(text, &schema).unwrap();
        let f = to_lp_normal_form(&to_safe(&f)).unwrap();
        remove_epsilon(&compile_core(&f).unwrap())
    }

    #[test]
    fn phi1_determinizes_to_three_states() {
        let a = pipeline(PHI1);
        let d = io_determinize(&a);
        assert!(is_io_deterministic(&d));
        assert_eq!(d.n_states, 3);
        let schema = sensors();
        let s = fig1(&schema);
        assert_eq!(enumerate_all(&a, &s), enumerate_all(&d, &s));
    }

    #[test]
    fn union_with_empty_is_identity_on_outputs() {
        let a = pipeline(PHI1);
        let u = union(&a, &Cea::empty());
        let schema = sensors();
        let s = fig1(&schema);
        assert_eq!(enumerate_all(&a, &s), enumerate_all(&u, &s));
    }

    #[test]
    fn self_intersection_preserves_outputs() {
        let a = pipeline("T AS x FILTER x.tmp > 40");
        let i = intersection(&a, &a);
        let schema = sensors();
        let s = fig1(&schema);
        for n in 0..s.len() {
            assert_eq!(enumerate_runs(&a, &s, n), enumerate_runs(&i, &s, n));
        }
    }

    #[test]
    fn double_complement_preserves_outputs() {
        let a = pipeline("T AS x FILTER x.tmp > 40");
        let cc = complement(&complement(&a));
        let schema = sensors();
        let s = fig1(&schema);
        for n in 0..s.len() {
            assert_eq!(enumerate_runs(&a, &s, n), enumerate_runs(&cc, &s, n));
        }
    }

    #[test]
    fn complement_splits_the_candidate_universe() {
        let a = pipeline("T AS x FILTER x.tmp > 40");
        let c = complement(&a);
        let schema = sensors();
        let s = fig1(&schema);
        for n in 0..s.len() {
            let ours = enumerate_runs(&a, &s, n);
            let theirs = enumerate_runs(&c, &s, n);
            assert!(ours.is_disjoint(&theirs));
            // together they cover every complex event ending at n
            let total = ours.len() + theirs.len();
            assert_eq!(total, 1 << n, "at position {n}");
        }
    }

    #[test]
    fn raw_gadget_is_io_deterministic_marks_differ() {
        // the skip loop and the keep edge overlap on hot tuples, but the
        // marks differ, which the definition allows
        let a = pipeline("T AS x FILTER x.tmp > 40");
        assert!(is_io_deterministic(&a));
    }

    #[test]
    fn overlapping_same_mark_is_not_deterministic() {
        let schema = sensors();
        let t = PredicateExpr::type_is(&schema, "x", "T").unwrap();
        let a = Cea {
            n_states: 3,
            transitions: vec![
                Transition { from: 0, pred: t.clone(), mark: Mark::Keep, to: 1 },
                Transition { from: 0, pred: PredicateExpr::True, mark: Mark::Keep, to: 2 },
            ],
            initial: vec![0],
            finals: vec![1],
        };
        assert!(!is_io_deterministic(&a));
        assert!(!is_io_deterministic(&Cea {
            initial: vec![0, 1],
            ..a.clone()
        }));
        let single = Cea { n_states: 1, transitions: vec![], initial: vec![0], finals: vec![] };
        assert!(is_io_deterministic(&single));
        let d = io_determinize(&a);
        assert!(is_io_deterministic(&d));
        let s = fig1(&schema);
        for n in 0..s.len() {
            assert_eq!(enumerate_runs(&a, &s, n), enumerate_runs(&d, &s, n));
        }
    }

    #[test]
    fn extended_delta_forms_agree() {
        let a = pipeline(PHI1);
        let schema = sensors();
        let s = fig1(&schema);
        let partition = minterm_partition(&a.predicate_base());
        let all = StateSet::from_iter(a.n_states as usize, 0..a.n_states);
        for (_, tuple) in s.iter() {
            let mi = partition.classify(&schema, tuple).unwrap();
            for mark in [Mark::Keep, Mark::Skip] {
                let by_tuple = extended_delta(&a, &all, mark, DeltaInput::Tuple(&schema, tuple));
                let by_minterm =
                    extended_delta(&a, &all, mark, DeltaInput::Minterm(&partition, mi));
                assert_eq!(
                    by_tuple.iter().collect::<Vec<_>>(),
                    by_minterm.iter().collect::<Vec<_>>()
                );
            }
        }
        // empty from-set gives empty target
        let none = StateSet::empty(a.n_states as usize);
        let (_, t0) = s.iter().next().unwrap();
        assert!(extended_delta(&a, &none, Mark::Keep, DeltaInput::Tuple(&schema, t0)).is_empty());
    }
}
