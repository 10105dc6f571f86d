//! Selection strategies compiled into automata: STRICT doubles the
//! automaton, NXT/LAST track a total preorder of subset blocks ordered by
//! the respective order over partial outputs, MAX tracks pairs of subsets
//! (same-output states, dominating-output states).

use std::collections::HashMap;

use crate::stateset::StateSet;

use super::minterm::{minterm_partition, MintermPartition};
use super::{Cea, Mark, StateId, Transition};

/// Two copies: skip transitions live in the first, keep transitions in
/// the second, and any keep transition may cross over. Accepted outputs
/// are exactly the contiguous ones.
pub fn compile_strict(a: &Cea) -> Cea {
    let skip_copy = |q: StateId| q;
    let keep_copy = |q: StateId| q + a.n_states;
    let mut transitions = Vec::new();
    for t in &a.transitions {
        match t.mark {
            Mark::Skip => transitions.push(Transition {
                from: skip_copy(t.from),
                pred: t.pred.clone(),
                mark: Mark::Skip,
                to: skip_copy(t.to),
            }),
            Mark::Keep => {
                transitions.push(Transition {
                    from: keep_copy(t.from),
                    pred: t.pred.clone(),
                    mark: Mark::Keep,
                    to: keep_copy(t.to),
                });
                transitions.push(Transition {
                    from: skip_copy(t.from),
                    pred: t.pred.clone(),
                    mark: Mark::Keep,
                    to: keep_copy(t.to),
                });
            }
        }
    }
    Cea {
        n_states: 2 * a.n_states,
        transitions,
        initial: a.initial.iter().map(|q| skip_copy(*q)).collect(),
        finals: a.finals.iter().map(|q| keep_copy(*q)).collect(),
    }
}

/// Total pre-ordering: later blocks lose states seen earlier; emptied
/// blocks disappear.
pub fn tpo(blocks: &[StateSet]) -> Vec<StateSet> {
    let mut seen: Option<StateSet> = None;
    let mut out = Vec::new();
    for b in blocks {
        let mut u = b.clone();
        if let Some(s) = &seen {
            u.subtract(s);
        }
        if !u.is_empty() {
            match &mut seen {
                Some(s) => s.union_with(&u),
                None => seen = Some(u.clone()),
            }
            out.push(u);
        }
    }
    out
}

/// A state of the NXT/LAST construction: ordered disjoint blocks plus the
/// tracked state of the simulated run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PreorderState {
    pub blocks: Vec<StateSet>,
    pub pivot: StateId,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BlockOrder {
    /// keep before skip within each block
    Next,
    /// all keep blocks before all skip blocks
    Last,
}

pub fn compile_next(a: &Cea) -> Cea {
    compile_preorder(a, BlockOrder::Next)
}

pub fn compile_last(a: &Cea) -> Cea {
    compile_preorder(a, BlockOrder::Last)
}

fn delta_minterm(a: &Cea, from: &StateSet, partition: &MintermPartition, mi: usize, mark: Mark) -> StateSet {
    super::boolean::extended_delta(a, from, mark, super::boolean::DeltaInput::Minterm(partition, mi))
}

fn compile_preorder(a: &Cea, order: BlockOrder) -> Cea {
    // the final-set rule below reads "a final state in an earlier block
    // means an accepting run with a greater output exists"; that only
    // holds when final states are entered by marking transitions alone
    let a = &super::keep_entered_single_final(a);
    let partition = minterm_partition(&a.predicate_base());
    let n = a.n_states as usize;

    let initial_blocks = vec![StateSet::from_iter(n, a.initial.iter().copied())];
    let mut ids: HashMap<PreorderState, StateId> = HashMap::new();
    let mut order_states: Vec<PreorderState> = Vec::new();
    let mut work: Vec<PreorderState> = Vec::new();
    let mut initial = Vec::new();
    for &q in &a.initial {
        let st = PreorderState { blocks: initial_blocks.clone(), pivot: q };
        let id = intern(&mut ids, &mut order_states, &mut work, st);
        initial.push(id);
    }

    let mut transitions = Vec::new();
    // per (blocks, minterm): the per-slot deltas and the successor blocks,
    // shared by every pivot carrying the same block sequence
    type BlockInfo = (Vec<(StateSet, StateSet)>, Vec<StateSet>);
    let mut successor_cache: HashMap<(Vec<StateSet>, usize), BlockInfo> = HashMap::new();

    while let Some(state) = work.pop() {
        let from_id = ids[&state];
        let pivot_block = state
            .blocks
            .iter()
            .position(|b| b.contains(state.pivot))
            .expect("pivot lies in a block");
        for (mi, minterm) in partition.minterms.iter().enumerate() {
            let (deltas, next_blocks) = successor_cache
                .entry((state.blocks.clone(), mi))
                .or_insert_with(|| {
                    let deltas: Vec<(StateSet, StateSet)> = state
                        .blocks
                        .iter()
                        .map(|b| {
                            (
                                delta_minterm(a, b, &partition, mi, Mark::Keep),
                                delta_minterm(a, b, &partition, mi, Mark::Skip),
                            )
                        })
                        .collect();
                    let mut seq = Vec::with_capacity(2 * deltas.len());
                    match order {
                        BlockOrder::Next => {
                            for (keep, skip) in &deltas {
                                seq.push(keep.clone());
                                seq.push(skip.clone());
                            }
                        }
                        BlockOrder::Last => {
                            for (keep, _) in &deltas {
                                seq.push(keep.clone());
                            }
                            for (_, skip) in &deltas {
                                seq.push(skip.clone());
                            }
                        }
                    }
                    (deltas, tpo(&seq))
                })
                .clone();
            // slots in the strategy's concatenation order; the first slot
            // reaching a state owns it in the successor preorder
            let slots: Vec<(usize, Mark)> = match order {
                BlockOrder::Next => (0..state.blocks.len())
                    .flat_map(|j| [(j, Mark::Keep), (j, Mark::Skip)])
                    .collect(),
                BlockOrder::Last => (0..state.blocks.len())
                    .map(|j| (j, Mark::Keep))
                    .chain((0..state.blocks.len()).map(|j| (j, Mark::Skip)))
                    .collect(),
            };
            for mark in [Mark::Keep, Mark::Skip] {
                'cand: for t in a.transitions_from(state.pivot) {
                    if t.mark != mark || !partition.implies(mi, &t.pred) {
                        continue;
                    }
                    let q = t.to;
                    // the simulated run may move to q only from the first
                    // slot that reaches q (subsumes the "not reachable
                    // from a higher run" and "marking wins" conditions)
                    for &(j, m2) in &slots {
                        if (j, m2) == (pivot_block, mark) {
                            break;
                        }
                        let reached = match m2 {
                            Mark::Keep => &deltas[j].0,
                            Mark::Skip => &deltas[j].1,
                        };
                        if reached.contains(q) {
                            continue 'cand;
                        }
                    }
                    // within the owning block, the least source state wins,
                    // keeping runs with equal outputs from splitting
                    let smaller = a.transitions.iter().any(|t2| {
                        t2.mark == mark
                            && t2.to == q
                            && t2.from < state.pivot
                            && state.blocks[pivot_block].contains(t2.from)
                            && partition.implies(mi, &t2.pred)
                    });
                    if smaller {
                        continue 'cand;
                    }
                    let target = PreorderState { blocks: next_blocks.clone(), pivot: q };
                    let to_id = intern(&mut ids, &mut order_states, &mut work, target);
                    let tr = Transition {
                        from: from_id,
                        pred: minterm.pred.clone(),
                        mark,
                        to: to_id,
                    };
                    if !transitions.contains(&tr) {
                        transitions.push(tr);
                    }
                }
            }
        }
    }

    let finals: Vec<StateId> = order_states
        .iter()
        .enumerate()
        .filter(|(_, st)| {
            if !a.finals.contains(&st.pivot) {
                return false;
            }
            // no strictly earlier block may contain a final state
            for b in &st.blocks {
                if b.contains(st.pivot) {
                    return true;
                }
                if a.finals.iter().any(|f| b.contains(*f)) {
                    return false;
                }
            }
            true
        })
        .map(|(i, _)| i as StateId)
        .collect();

    Cea { n_states: order_states.len() as u32, transitions, initial, finals }
}

fn intern(
    ids: &mut HashMap<PreorderState, StateId>,
    order: &mut Vec<PreorderState>,
    work: &mut Vec<PreorderState>,
    st: PreorderState,
) -> StateId {
    if let Some(id) = ids.get(&st) {
        return *id;
    }
    let id = order.len() as StateId;
    ids.insert(st.clone(), id);
    order.push(st.clone());
    work.push(st);
    id
}

/// MAX construction over pairs (same-output states, dominating states):
/// a pair is final when the first component accepts and no dominating
/// run does.
pub fn compile_max(a: &Cea) -> Cea {
    let partition = minterm_partition(&a.predicate_base());
    let n = a.n_states as usize;
    let start = (
        StateSet::from_iter(n, a.initial.iter().copied()),
        StateSet::empty(n),
    );
    let mut ids: HashMap<(StateSet, StateSet), StateId> = HashMap::new();
    let mut order: Vec<(StateSet, StateSet)> = Vec::new();
    let mut work = Vec::new();
    ids.insert(start.clone(), 0);
    order.push(start.clone());
    work.push(start);
    let mut transitions = Vec::new();
    while let Some((keep_set, dom_set)) = work.pop() {
        let from_id = ids[&(keep_set.clone(), dom_set.clone())];
        for (mi, minterm) in partition.minterms.iter().enumerate() {
            // keep step: dominators must also keep marking to stay ahead
            let dom2 = delta_minterm(a, &dom_set, &partition, mi, Mark::Keep);
            let mut keep2 = delta_minterm(a, &keep_set, &partition, mi, Mark::Keep);
            keep2.subtract(&dom2);
            if !keep2.is_empty() {
                let to_id = intern_pair(&mut ids, &mut order, &mut work, (keep2, dom2));
                transitions.push(Transition {
                    from: from_id,
                    pred: minterm.pred.clone(),
                    mark: Mark::Keep,
                    to: to_id,
                });
            }
            // skip step: a run that marks now dominates us from here on
            let mut dom2 = delta_minterm(a, &dom_set, &partition, mi, Mark::Keep);
            dom2.union_with(&delta_minterm(a, &dom_set, &partition, mi, Mark::Skip));
            dom2.union_with(&delta_minterm(a, &keep_set, &partition, mi, Mark::Keep));
            let mut keep2 = delta_minterm(a, &keep_set, &partition, mi, Mark::Skip);
            keep2.subtract(&dom2);
            if !keep2.is_empty() {
                let to_id = intern_pair(&mut ids, &mut order, &mut work, (keep2, dom2));
                transitions.push(Transition {
                    from: from_id,
                    pred: minterm.pred.clone(),
                    mark: Mark::Skip,
                    to: to_id,
                });
            }
        }
    }
    let finals: Vec<StateId> = order
        .iter()
        .enumerate()
        .filter(|(_, (keep_set, dom_set))| {
            a.finals.iter().any(|f| keep_set.contains(*f))
                && !a.finals.iter().any(|f| dom_set.contains(*f))
        })
        .map(|(i, _)| i as StateId)
        .collect();
    Cea { n_states: order.len() as u32, transitions, initial: vec![0], finals }
}

fn intern_pair(
    ids: &mut HashMap<(StateSet, StateSet), StateId>,
    order: &mut Vec<(StateSet, StateSet)>,
    work: &mut Vec<(StateSet, StateSet)>,
    pair: (StateSet, StateSet),
) -> StateId {
    if let Some(id) = ids.get(&pair) {
        return *id;
    }
    let id = order.len() as StateId;
    ids.insert(pair.clone(), id);
    order.push(pair.clone());
    work.push(pair);
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cea::{compile_core, enumerate_runs, remove_epsilon};
    use crate::formula::Strategy;
    use crate::oracle::{apply_selection, oracle_eval, ComplexEvent, OutputSet};
    use crate::parser::parse_formula;
    use crate::rewrite::{to_lp_normal_form, to_safe};
    use crate::testutil::{fig1, sensors, PHI1, PHI3};

    fn pipeline(text: &str) -> Cea {
        let schema = sensors();
        let f = parse_formula(text, &schema).unwrap();
        let f = to_lp_normal_form(&to_safe(&f)).unwrap();
        remove_epsilon(&compile_core(&f).unwrap())
    }

    fn ce(p: &[usize]) -> ComplexEvent {
        ComplexEvent::new(p.iter().copied())
    }

    fn sets(n: usize, blocks: &[&[u32]]) -> Vec<StateSet> {
        blocks
            .iter()
            .map(|b| StateSet::from_iter(n, b.iter().copied()))
            .collect()
    }

    #[test]
    fn tpo_deduplicates_in_order() {
        let input = sets(4, &[&[1, 2], &[2, 3]]);
        assert_eq!(tpo(&input), sets(4, &[&[1, 2], &[3]]));
        let with_empty = sets(4, &[&[], &[1]]);
        assert_eq!(tpo(&with_empty), sets(4, &[&[1]]));
        let disjoint = sets(4, &[&[0], &[2]]);
        assert_eq!(tpo(&disjoint), disjoint);
    }

    /// strategy-compiled automaton vs oracle selection, position by position
    fn check_strategy(text: &str, strategy: Strategy, compile: impl Fn(&Cea) -> Cea) {
        let schema = sensors();
        let s = fig1(&schema);
        let f = parse_formula(text, &schema).unwrap();
        let raw = pipeline(text);
        let compiled = compile(&raw);
        let all = oracle_eval(&f, &s).unwrap();
        let selected = apply_selection(strategy, &all);
        for n in 0..s.len() {
            let expected: OutputSet =
                selected.iter().filter(|c| c.max_pos() == n).cloned().collect();
            assert_eq!(
                enumerate_runs(&compiled, &s, n),
                expected,
                "{strategy} of {text} differs at position {n}"
            );
        }
    }

    #[test]
    fn strict_keeps_the_contiguous_pair() {
        check_strategy(PHI1, Strategy::Strict, compile_strict);
        let compiled = compile_strict(&pipeline(PHI1));
        let schema = sensors();
        let s = fig1(&schema);
        assert_eq!(enumerate_runs(&compiled, &s, 2), [ce(&[1, 2])].into_iter().collect());
    }

    #[test]
    fn next_selects_oldest_witness() {
        check_strategy(PHI1, Strategy::Nxt, compile_next);
        let compiled = compile_next(&pipeline(PHI1));
        let schema = sensors();
        let s = fig1(&schema);
        assert_eq!(enumerate_runs(&compiled, &s, 8), [ce(&[1, 8])].into_iter().collect());
    }

    #[test]
    fn last_selects_most_recent_witness() {
        check_strategy(PHI1, Strategy::Last, compile_last);
        let compiled = compile_last(&pipeline(PHI1));
        let schema = sensors();
        let s = fig1(&schema);
        assert_eq!(enumerate_runs(&compiled, &s, 8), [ce(&[5, 8])].into_iter().collect());
    }

    #[test]
    fn max_keeps_maximal_iteration() {
        check_strategy(PHI3, Strategy::Max, compile_max);
        check_strategy(PHI1, Strategy::Max, compile_max);
    }

    #[test]
    fn single_run_automata_are_unchanged_by_selection() {
        // one T, contiguous: at most one run per end position
        let text = "T AS x FILTER x.tmp > 40";
        for (strategy, compile) in [
            (Strategy::Strict, compile_strict as fn(&Cea) -> Cea),
            (Strategy::Nxt, compile_next),
            (Strategy::Last, compile_last),
            (Strategy::Max, compile_max),
        ] {
            check_strategy(text, strategy, compile);
        }
    }

    #[test]
    fn next_last_emit_one_event_per_position() {
        let schema = sensors();
        let s = fig1(&schema);
        for compiled in [compile_next(&pipeline(PHI3)), compile_last(&pipeline(PHI3))] {
            for n in 0..s.len() {
                assert!(enumerate_runs(&compiled, &s, n).len() <= 1);
            }
        }
    }

    #[test]
    fn strict_iteration_yields_intervals_only() {
        let compiled = compile_strict(&pipeline(PHI3));
        let schema = sensors();
        let s = fig1(&schema);
        for n in 0..s.len() {
            for c in enumerate_runs(&compiled, &s, n) {
                assert!(c.is_interval());
            }
        }
    }
}
