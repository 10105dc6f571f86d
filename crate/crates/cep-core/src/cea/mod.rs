//! Complex event automata: states, predicate-labeled marking transitions,
//! construction from formulas, and a brute-force run enumerator.

mod boolean;
mod minterm;
mod select;

pub use boolean::{complement, extended_delta, intersection, io_determinize, is_io_deterministic, union};
pub use minterm::{minterm_partition, Minterm, MintermPartition};
pub use select::{compile_last, compile_max, compile_next, compile_strict, tpo, PreorderState};

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::analysis;
use crate::error::CompileError;
use crate::event::StreamPrefix;
use crate::formula::Formula;
use crate::oracle::{ComplexEvent, OutputSet};
use crate::predicate::PredicateExpr;
use crate::schema::Schema;

pub type StateId = u32;

/// Transition mark: does taking the transition put the current position
/// into the output complex event?
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mark {
    /// ● include the position
    Keep,
    /// ○ skip it
    Skip,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::Keep => "\u{25cf}",
            Mark::Skip => "\u{25cb}",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: StateId,
    pub pred: PredicateExpr,
    pub mark: Mark,
    pub to: StateId,
}

#[derive(Debug, Clone)]
pub struct Cea {
    pub n_states: u32,
    pub transitions: Vec<Transition>,
    pub initial: Vec<StateId>,
    pub finals: Vec<StateId>,
}

impl Cea {
    /// The automaton with a single non-final state: empty language.
    pub fn empty() -> Cea {
        Cea { n_states: 1, transitions: vec![], initial: vec![0], finals: vec![] }
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals.contains(&q)
    }

    /// states + transitions, the size measure for the compilation bounds
    pub fn size(&self) -> usize {
        self.n_states as usize + self.transitions.len()
    }

    pub fn transitions_from(&self, q: StateId) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == q)
    }

    /// Distinct transition predicates, in first-appearance order.
    pub fn predicate_base(&self) -> Vec<PredicateExpr> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for t in &self.transitions {
            if seen.insert(&t.pred) {
                out.push(t.pred.clone());
            }
        }
        out
    }

    /// Graphviz rendering; finals as double circles, edges `pred | mark`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cea {\n  rankdir=LR;\n  node [shape=circle];\n");
        out.push_str("  _start [shape=point];\n");
        for q in 0..self.n_states {
            if self.is_final(q) {
                out.push_str(&format!("  q{q} [shape=doublecircle];\n"));
            }
        }
        for q in &self.initial {
            out.push_str(&format!("  _start -> q{q};\n"));
        }
        for t in &self.transitions {
            let label = format!("{} | {}", t.pred, t.mark.symbol()).replace('"', "\\\"");
            out.push_str(&format!("  q{} -> q{} [label=\"{}\"];\n", t.from, t.to, label));
        }
        out.push_str("}\n");
        out
    }
}

/// A CEA extended with epsilon transitions, the intermediate form the
/// formula compiler produces.
#[derive(Debug, Clone)]
pub struct EpsilonCea {
    pub cea: Cea,
    pub epsilons: Vec<(StateId, StateId)>,
}

/// Compiles a well-formed, safe, unary core formula in LP-normal form.
/// One fresh initial and final state per sub-construction; size linear
/// in the formula.
pub fn compile_core(f: &Formula) -> Result<EpsilonCea, CompileError> {
    if !f.is_core() {
        return Err(CompileError::HasSelect);
    }
    let report = analysis::analyze(f);
    if !report.well_formed {
        return Err(CompileError::NotWellFormed);
    }
    if !report.safe {
        return Err(CompileError::NotSafe);
    }
    if !report.unary {
        return Err(CompileError::NotUnary);
    }
    if !crate::rewrite::is_lp_normal_form(f) {
        return Err(CompileError::NotLpNormalForm);
    }
    let mut b = Builder::default();
    let (qi, qf) = b.build(f);
    Ok(EpsilonCea {
        cea: Cea {
            n_states: b.n_states,
            transitions: b.transitions,
            initial: vec![qi],
            finals: vec![qf],
        },
        epsilons: b.epsilons,
    })
}

#[derive(Default)]
struct Builder {
    n_states: u32,
    transitions: Vec<Transition>,
    epsilons: Vec<(StateId, StateId)>,
}

impl Builder {
    fn fresh(&mut self) -> StateId {
        let q = self.n_states;
        self.n_states += 1;
        q
    }

    fn build(&mut self, f: &Formula) -> (StateId, StateId) {
        match f {
            Formula::Assign { rel, rel_name, var } => {
                self.assign_gadget(*rel, rel_name, var, None)
            }
            Formula::Filter { body, pred } => match &**body {
                Formula::Assign { rel, rel_name, var } => {
                    self.assign_gadget(*rel, rel_name, var, Some(pred.clone()))
                }
                // LP-normal form guarantees unary filters sit on assigns
                _ => unreachable!("precondition: LP-normal form"),
            },
            Formula::Or(a, b) => {
                let (ai, af) = self.build(a);
                let (bi, bf) = self.build(b);
                let qi = self.fresh();
                let qf = self.fresh();
                self.epsilons.extend([(qi, ai), (qi, bi), (af, qf), (bf, qf)]);
                (qi, qf)
            }
            Formula::Seq(a, b) => {
                let (ai, af) = self.build(a);
                let (bi, bf) = self.build(b);
                self.epsilons.push((af, bi));
                (ai, bf)
            }
            Formula::Plus(body) => {
                let (qi, qf) = self.build(body);
                self.epsilons.push((qf, qi));
                (qi, qf)
            }
            Formula::Unsat => {
                let qi = self.fresh();
                let qf = self.fresh();
                (qi, qf)
            }
            Formula::Select { .. } => unreachable!("precondition: core formula"),
        }
    }

    fn assign_gadget(
        &mut self,
        rel: u32,
        rel_name: &str,
        var: &str,
        filter: Option<PredicateExpr>,
    ) -> (StateId, StateId) {
        let qi = self.fresh();
        let qf = self.fresh();
        let type_test = PredicateExpr::TypeIs {
            var: var.to_string(),
            rel,
            rel_name: rel_name.to_string(),
        };
        let pred = match filter {
            Some(p) => PredicateExpr::and(type_test, p),
            None => type_test,
        };
        self.transitions.push(Transition {
            from: qi,
            pred: PredicateExpr::True,
            mark: Mark::Skip,
            to: qi,
        });
        self.transitions.push(Transition { from: qi, pred, mark: Mark::Keep, to: qf });
        (qi, qf)
    }
}

/// Eliminates epsilon transitions: every non-epsilon transition entering
/// `p` is copied to each epsilon-successor of `p`; initial states extend
/// to their closures. States unreachable from the initial set or unable
/// to reach a final state are dropped and the rest relabeled.
pub fn remove_epsilon(a: &EpsilonCea) -> Cea {
    let n = a.cea.n_states as usize;
    // epsilon closure per state
    let mut closure: Vec<BTreeSet<StateId>> = (0..n).map(|q| BTreeSet::from([q as StateId])).collect();
    loop {
        let mut changed = false;
        for &(p, q) in &a.epsilons {
            let to_add: Vec<StateId> = closure[q as usize]
                .iter()
                .filter(|s| !closure[p as usize].contains(s))
                .copied()
                .collect();
            if !to_add.is_empty() {
                closure[p as usize].extend(to_add);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut transitions: HashSet<Transition> = HashSet::new();
    for t in &a.cea.transitions {
        for &q in &closure[t.to as usize] {
            transitions.insert(Transition {
                from: t.from,
                pred: t.pred.clone(),
                mark: t.mark,
                to: q,
            });
        }
    }
    let initial: BTreeSet<StateId> = a
        .cea
        .initial
        .iter()
        .flat_map(|q| closure[*q as usize].iter().copied())
        .collect();
    let finals: BTreeSet<StateId> = a.cea.finals.iter().copied().collect();

    // forward reachability
    let mut reach: HashSet<StateId> = initial.iter().copied().collect();
    let mut work: Vec<StateId> = initial.iter().copied().collect();
    while let Some(q) = work.pop() {
        for t in transitions.iter().filter(|t| t.from == q) {
            if reach.insert(t.to) {
                work.push(t.to);
            }
        }
    }
    // backward co-reachability to a final state
    let mut coreach: HashSet<StateId> = finals.iter().copied().collect();
    let mut work: Vec<StateId> = finals.iter().copied().collect();
    while let Some(q) = work.pop() {
        for t in transitions.iter().filter(|t| t.to == q) {
            if coreach.insert(t.from) {
                work.push(t.from);
            }
        }
    }

    let mut keep: Vec<StateId> = reach.intersection(&coreach).copied().collect();
    keep.sort_unstable();
    if keep.is_empty() || !initial.iter().any(|q| keep.contains(q)) {
        return Cea::empty();
    }
    let remap: HashMap<StateId, StateId> =
        keep.iter().enumerate().map(|(i, q)| (*q, i as StateId)).collect();
    let mut out: Vec<Transition> = transitions
        .into_iter()
        .filter(|t| remap.contains_key(&t.from) && remap.contains_key(&t.to))
        .map(|t| Transition { from: remap[&t.from], pred: t.pred, mark: t.mark, to: remap[&t.to] })
        .collect();
    out.sort_by_key(|t| (t.from, t.to, t.mark == Mark::Skip));
    Cea {
        n_states: keep.len() as u32,
        transitions: out,
        initial: initial.iter().filter_map(|q| remap.get(q).copied()).collect(),
        finals: finals.iter().filter_map(|q| remap.get(q).copied()).collect(),
    }
}

/// Rewrites the automaton so a single fresh state is final, entered only
/// by marking transitions: each keep-transition into the old final set
/// is duplicated towards it. Skip transitions are not copied — a run
/// whose last transition skips cannot accept, so the language is
/// unchanged, and the NXT/LAST machinery relies on final states being
/// reachable only by runs that could actually accept.
pub(crate) fn keep_entered_single_final(a: &Cea) -> Cea {
    let only_keep_entered = |f: &StateId| {
        a.transitions
            .iter()
            .all(|t| t.to != *f || t.mark == Mark::Keep)
    };
    if a.finals.len() == 1 && a.finals.iter().all(only_keep_entered) {
        return a.clone();
    }
    let mut out = a.clone();
    let qf = out.n_states;
    out.n_states += 1;
    let mut extra = Vec::new();
    for t in &out.transitions {
        if t.mark == Mark::Keep && out.finals.contains(&t.to) {
            let mut t2 = t.clone();
            t2.to = qf;
            extra.push(t2);
        }
    }
    out.transitions.extend(extra);
    out.finals = vec![qf];
    out
}

/// Brute-force evaluation: all complex events of accepting runs that
/// consume the stream prefix up to and including position `n`. Ground
/// truth for the engines; streams are limited to 64 events.
pub fn enumerate_runs(a: &Cea, s: &StreamPrefix, n: usize) -> OutputSet {
    assert!(n < s.len(), "position beyond the stream prefix");
    assert!(s.len() <= 64, "run enumeration is limited to 64 events");
    let schema = s.schema();
    // frontier of (state, marked-position mask)
    let mut frontier: HashSet<(StateId, u64)> =
        a.initial.iter().map(|q| (*q, 0u64)).collect();
    for pos in 0..=n {
        let tuple = s.get(pos).unwrap();
        let mut next = HashSet::new();
        for (q, mask) in &frontier {
            for t in a.transitions_from(*q) {
                if t.pred.eval_tuple(schema, tuple) {
                    let mask = match t.mark {
                        Mark::Keep => mask | (1 << pos),
                        Mark::Skip => *mask,
                    };
                    next.insert((t.to, mask));
                }
            }
        }
        frontier = next;
    }
    frontier
        .into_iter()
        .filter(|(q, mask)| a.is_final(*q) && mask & (1 << n) != 0)
        .map(|(_, mask)| ComplexEvent::new((0..64).filter(|i| mask & (1 << i) != 0)))
        .collect()
}

/// All outputs over every end position of the prefix.
pub fn enumerate_all(a: &Cea, s: &StreamPrefix) -> OutputSet {
    let mut out = OutputSet::new();
    for n in 0..s.len() {
        out.extend(enumerate_runs(a, s, n));
    }
    out
}

/// Does the concrete tuple satisfy the transition predicate?
pub fn tuple_satisfies(schema: &Schema, pred: &PredicateExpr, t: &crate::event::EventTuple) -> bool {
    pred.eval_tuple(schema, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_eval;
    use crate::parser::parse_formula;
    use crate::rewrite::{to_lp_normal_form, to_safe};
    use crate::testutil::{fig1, sensors, PHI1};
    use crate::value::{CmpOp, Value};

    fn ce(p: &[usize]) -> ComplexEvent {
        ComplexEvent::new(p.iter().copied())
    }

    /// rewrite + compile + epsilon removal
    fn pipeline(text: &str) -> Cea {
        let schema = sensors();
        let f = parse_formula(text, &schema).unwrap();
        let f = to_lp_normal_form(&to_safe(&f)).unwrap();
        remove_epsilon(&compile_core(&f).unwrap())
    }

    #[test]
    fn automata_are_shareable() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Cea>();
        assert_send_sync::<EpsilonCea>();
    }

    #[test]
    fn filtered_assign_gadget() {
        let schema = sensors();
        let f = parse_formula("T AS x FILTER x.tmp > 40", &schema).unwrap();
        let a = compile_core(&f).unwrap();
        assert_eq!(a.cea.n_states, 2);
        assert_eq!(a.cea.transitions.len(), 2);
        assert!(a.epsilons.is_empty());
        let loop_t = &a.cea.transitions[0];
        assert_eq!(loop_t.pred, PredicateExpr::True);
        assert_eq!(loop_t.mark, Mark::Skip);
        assert_eq!((loop_t.from, loop_t.to), (0, 0));
        let edge = &a.cea.transitions[1];
        assert_eq!(edge.mark, Mark::Keep);
        assert!(matches!(&edge.pred, PredicateExpr::And(a, b)
            if matches!(&**a, PredicateExpr::TypeIs { .. })
            && matches!(&**b, PredicateExpr::Cmp { op: CmpOp::Gt, value: Value::Int(40), .. })));
    }

    #[test]
    fn unsat_compiles_to_empty_language() {
        let a = compile_core(&Formula::Unsat).unwrap();
        let removed = remove_epsilon(&a);
        assert!(removed.finals.is_empty());
        let schema = sensors();
        let s = fig1(&schema);
        assert!(enumerate_all(&removed, &s).is_empty());
    }

    #[test]
    fn epsilon_removal_is_identity_on_epsilon_free() {
        let schema = sensors();
        let f = parse_formula("T AS x FILTER x.tmp > 40", &schema).unwrap();
        let a = compile_core(&f).unwrap();
        let b = remove_epsilon(&a);
        assert_eq!(b.n_states, a.cea.n_states);
        assert_eq!(b.transitions.len(), a.cea.transitions.len());
    }

    #[test]
    fn phi1_pipeline_reaches_three_states_and_runs() {
        let a = pipeline(PHI1);
        assert_eq!(a.n_states, 3);
        let schema = sensors();
        let s = fig1(&schema);
        let expected: OutputSet = [ce(&[1, 2]), ce(&[1, 8]), ce(&[5, 8])].into_iter().collect();
        assert_eq!(enumerate_all(&a, &s), expected);
        // and position by position: {1,2} ends at 2
        assert_eq!(enumerate_runs(&a, &s, 2), [ce(&[1, 2])].into_iter().collect());
        assert!(enumerate_runs(&a, &s, 3).is_empty());
    }

    #[test]
    fn plus_gadget_matches_oracle() {
        let schema = sensors();
        let f = parse_formula("(T AS x)+", &schema).unwrap();
        let a = pipeline("(T AS x)+");
        let s = fig1(&schema);
        assert_eq!(enumerate_all(&a, &s), oracle_eval(&f, &s).unwrap());
    }

    #[test]
    fn compile_size_is_linear() {
        for text in [
            PHI1,
            "(H AS x ; (T AS y FILTER y.id = 1)+ ; H AS z)",
            "(T AS x OR H AS y) ; (T AS z)+",
        ] {
            let schema = sensors();
            let f = parse_formula(text, &schema).unwrap();
            let f = to_lp_normal_form(&to_safe(&f)).unwrap();
            let a = compile_core(&f).unwrap();
            assert!(
                (a.cea.n_states as usize) <= 2 * f.size() + 2,
                "{} states for size {}",
                a.cea.n_states,
                f.size()
            );
        }
    }

    #[test]
    fn compile_rejects_bad_inputs() {
        let schema = sensors();
        let ill = parse_formula("(H AS x) FILTER y.tmp <= 30", &schema).unwrap();
        assert!(matches!(compile_core(&ill), Err(CompileError::NotWellFormed)));
        let unsafe_f = parse_formula("T AS x ; T AS x", &schema).unwrap();
        assert!(matches!(compile_core(&unsafe_f), Err(CompileError::NotSafe)));
        let binary = parse_formula("(T AS x ; T AS y) FILTER x.id = y.id", &schema).unwrap();
        assert!(matches!(compile_core(&binary), Err(CompileError::NotUnary)));
        let non_lp = parse_formula(PHI1, &schema).unwrap();
        assert!(matches!(compile_core(&non_lp), Err(CompileError::NotLpNormalForm)));
        let select = parse_formula("NXT(T AS x)", &schema).unwrap();
        assert!(matches!(compile_core(&select), Err(CompileError::HasSelect)));
    }

    #[test]
    fn fig2_style_automaton_runs() {
        // H then hot-T repetitions then H, hand-built
        let schema = sensors();
        let h = PredicateExpr::type_is(&schema, "x", "H").unwrap();
        let hot_t = PredicateExpr::and(
            PredicateExpr::type_is(&schema, "x", "T").unwrap(),
            PredicateExpr::cmp("x", "tmp", CmpOp::Gt, Value::Int(40)),
        );
        let a = Cea {
            n_states: 3,
            transitions: vec![
                Transition { from: 0, pred: PredicateExpr::True, mark: Mark::Skip, to: 0 },
                Transition { from: 0, pred: h.clone(), mark: Mark::Keep, to: 1 },
                Transition { from: 1, pred: PredicateExpr::True, mark: Mark::Skip, to: 1 },
                Transition { from: 1, pred: hot_t, mark: Mark::Keep, to: 1 },
                Transition { from: 1, pred: h, mark: Mark::Keep, to: 2 },
            ],
            initial: vec![0],
            finals: vec![2],
        };
        let s = fig1(&schema);
        let outs = enumerate_all(&a, &s);
        // every output starts and ends with an H position
        for c in &outs {
            let first = s.get(c.min_pos()).unwrap();
            let last = s.get(c.max_pos()).unwrap();
            assert_eq!(schema.rel_name(first.rel), "H");
            assert_eq!(schema.rel_name(last.rel), "H");
        }
        // H at 0, hot T at 1, H at 2 gives {0,1,2} among others
        assert!(outs.contains(&ce(&[0, 1, 2])));
        assert!(outs.contains(&ce(&[0, 2])));
        assert!(!outs.contains(&ce(&[1, 2])));
    }
}
