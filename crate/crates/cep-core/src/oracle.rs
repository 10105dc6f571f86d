//! Brute-force reference semantics: the ground truth every other stage is
//! tested against.
//!
//! Complex events are enumerated directly from the denotational semantics
//! by quantifying valuations over the free variables of each sub-formula.
//! Exponential by design; intended for streams of a dozen events and a
//! handful of variables.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::analysis::{self, VarSet};
use crate::event::StreamPrefix;
use crate::formula::{Formula, Strategy};

/// A nonempty finite set of stream positions, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComplexEvent(Vec<usize>);

impl ComplexEvent {
    /// Builds from any collection of positions; panics on empty input.
    pub fn new(positions: impl IntoIterator<Item = usize>) -> ComplexEvent {
        let set: BTreeSet<usize> = positions.into_iter().collect();
        assert!(!set.is_empty(), "complex events are nonempty");
        ComplexEvent(set.into_iter().collect())
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_pos(&self) -> usize {
        self.0[0]
    }

    pub fn max_pos(&self) -> usize {
        *self.0.last().unwrap()
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.0.binary_search(&pos).is_ok()
    }

    /// Concatenation: defined iff `self` ends before `other` begins.
    pub fn concat(&self, other: &ComplexEvent) -> Option<ComplexEvent> {
        if self.max_pos() < other.min_pos() {
            let mut v = self.0.clone();
            v.extend_from_slice(&other.0);
            Some(ComplexEvent(v))
        } else {
            None
        }
    }

    /// True when the positions form a contiguous interval.
    pub fn is_interval(&self) -> bool {
        self.max_pos() - self.min_pos() + 1 == self.0.len()
    }

    pub fn is_subset(&self, other: &ComplexEvent) -> bool {
        self.0.iter().all(|p| other.contains(*p))
    }

    fn sym_diff(&self, other: &ComplexEvent) -> Vec<usize> {
        let a: BTreeSet<_> = self.0.iter().copied().collect();
        let b: BTreeSet<_> = other.0.iter().copied().collect();
        a.symmetric_difference(&b).copied().collect()
    }
}

impl std::fmt::Display for ComplexEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// `C1 <=next C2`: equal, or the smallest position where they differ
/// belongs to `C2`.
pub fn leq_next(c1: &ComplexEvent, c2: &ComplexEvent) -> bool {
    let diff = c1.sym_diff(c2);
    match diff.first() {
        None => true,
        Some(p) => c2.contains(*p),
    }
}

/// `C1 <=last C2`: equal, or the largest differing position belongs to `C2`.
pub fn leq_last(c1: &ComplexEvent, c2: &ComplexEvent) -> bool {
    let diff = c1.sym_diff(c2);
    match diff.last() {
        None => true,
        Some(p) => c2.contains(*p),
    }
}

pub type OutputSet = BTreeSet<ComplexEvent>;

/// Filters an output set per selection strategy. NXT and LAST keep, for
/// each end position, the order-maximum of the group; MAX keeps complex
/// events with no strict superset ending at the same position.
pub fn apply_selection(strategy: Strategy, outs: &OutputSet) -> OutputSet {
    match strategy {
        Strategy::Strict => outs.iter().filter(|c| c.is_interval()).cloned().collect(),
        Strategy::Nxt => per_end_maximum(outs, leq_next),
        Strategy::Last => per_end_maximum(outs, leq_last),
        Strategy::Max => outs
            .iter()
            .filter(|c| {
                let c: &ComplexEvent = c;
                !outs
                    .iter()
                    .any(|other| other.max_pos() == c.max_pos() && c != other && c.is_subset(other))
            })
            .cloned()
            .collect(),
    }
}

fn per_end_maximum(
    outs: &OutputSet,
    leq: impl Fn(&ComplexEvent, &ComplexEvent) -> bool,
) -> OutputSet {
    let mut best: HashMap<usize, &ComplexEvent> = HashMap::new();
    for c in outs {
        best.entry(c.max_pos())
            .and_modify(|cur| {
                if leq(cur, c) {
                    *cur = c;
                }
            })
            .or_insert(c);
    }
    best.into_values().cloned().collect()
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle requires a well-formed formula")]
    NotWellFormed,
    #[error("oracle streams are limited to 64 events, got {0}")]
    StreamTooLong(usize),
}

/// Evaluates the denotational semantics of `f` on the stream prefix:
/// the set of complex events produced under some valuation.
pub fn oracle_eval(f: &Formula, s: &StreamPrefix) -> Result<OutputSet, OracleError> {
    if !analysis::well_formed(f) {
        return Err(OracleError::NotWellFormed);
    }
    if s.len() > 64 {
        return Err(OracleError::StreamTooLong(s.len()));
    }
    let mut ctx = Ctx::new(f, s);
    let masks = ctx.eval_all(f);
    Ok(masks.iter().map(|m| mask_to_event(*m)).collect())
}

fn mask_to_event(mask: u64) -> ComplexEvent {
    ComplexEvent::new((0..64).filter(|i| mask & (1 << i) != 0))
}

type Mask = u64;

/// Per-node free-variable sets ("dep"): the variables whose valuation the
/// node's output can depend on. Iteration bodies drop their own
/// `vdef_plus` scope because the semantics re-quantifies it per turn.
fn dep(f: &Formula) -> VarSet {
    match f {
        Formula::Assign { var, .. } => std::iter::once(var.clone()).collect(),
        Formula::Filter { body, pred } => {
            let mut s = dep(body);
            s.extend(pred.vars().iter().map(|v| v.to_string()));
            s
        }
        Formula::Or(a, b) | Formula::Seq(a, b) => {
            let mut s = dep(a);
            s.extend(dep(b));
            s
        }
        Formula::Plus(body) => {
            let mut s = dep(body);
            for v in analysis::vdef_plus(body) {
                s.remove(&v);
            }
            s
        }
        // selection closes over valuations: output independent of context
        Formula::Select { .. } => VarSet::new(),
        Formula::Unsat => VarSet::new(),
    }
}

struct Ctx<'a> {
    stream: &'a StreamPrefix,
    len: usize,
    /// memo key: (node address, positions of the node's dep vars)
    memo: HashMap<(usize, Vec<usize>), Vec<Mask>>,
    deps: HashMap<usize, Vec<String>>,
}

type Valuation = HashMap<String, usize>;

impl<'a> Ctx<'a> {
    fn new(f: &Formula, stream: &'a StreamPrefix) -> Ctx<'a> {
        let mut deps = HashMap::new();
        f.for_each_node(&mut |n| {
            let mut d: Vec<String> = dep(n).into_iter().collect();
            d.sort();
            deps.insert(n as *const Formula as usize, d);
        });
        Ctx { stream, len: stream.len(), memo: HashMap::new(), deps }
    }

    /// Union over all valuations of the node's free variables.
    fn eval_all(&mut self, f: &Formula) -> Vec<Mask> {
        let vars = self.deps[&(f as *const Formula as usize)].clone();
        let mut out: BTreeSet<Mask> = BTreeSet::new();
        let mut nu = Valuation::new();
        self.for_each_valuation(&vars, 0, &mut nu, f, &mut out);
        out.into_iter().collect()
    }

    fn for_each_valuation(
        &mut self,
        vars: &[String],
        i: usize,
        nu: &mut Valuation,
        f: &Formula,
        out: &mut BTreeSet<Mask>,
    ) {
        if i == vars.len() {
            out.extend(self.eval(f, nu));
            return;
        }
        if self.len == 0 {
            // no positions to assign: only variable-free formulas produce
            return;
        }
        for p in 0..self.len {
            nu.insert(vars[i].clone(), p);
            self.for_each_valuation(vars, i + 1, nu, f, out);
        }
        nu.remove(&vars[i]);
    }

    fn eval(&mut self, f: &Formula, nu: &Valuation) -> Vec<Mask> {
        let key_node = f as *const Formula as usize;
        let dep_vars = &self.deps[&key_node];
        let key_vals: Vec<usize> = dep_vars.iter().map(|v| nu.get(v).copied().unwrap_or(usize::MAX)).collect();
        let key = (key_node, key_vals);
        if let Some(cached) = self.memo.get(&key) {
            return cached.clone();
        }
        let result = match f {
            Formula::Assign { rel, var, .. } => match nu.get(var) {
                Some(&p) if p < self.len && self.stream.get(p).unwrap().rel == *rel => {
                    vec![1u64 << p]
                }
                _ => vec![],
            },
            Formula::Filter { body, pred } => {
                let lookup = |v: &str| nu.get(v).copied();
                if pred.eval_valuation(self.stream, &lookup) {
                    self.eval(body, nu)
                } else {
                    vec![]
                }
            }
            Formula::Or(a, b) => {
                let mut s: BTreeSet<Mask> = self.eval(a, nu).into_iter().collect();
                s.extend(self.eval(b, nu));
                s.into_iter().collect()
            }
            Formula::Seq(a, b) => {
                let left = self.eval(a, nu);
                let right = self.eval(b, nu);
                concat_join(&left, &right)
            }
            Formula::Plus(body) => {
                // base set: union over fresh assignments of the body's own scope
                let scope: Vec<String> = analysis::vdef_plus(body).into_iter().collect();
                let mut base: BTreeSet<Mask> = BTreeSet::new();
                let mut inner = nu.clone();
                self.for_each_valuation(&scope, 0, &mut inner, body, &mut base);
                let base: Vec<Mask> = base.into_iter().collect();
                // Kleene closure: X = B union B.X, at most len rounds
                let mut acc: BTreeSet<Mask> = base.iter().copied().collect();
                loop {
                    let grown = concat_join(&base, &acc.iter().copied().collect::<Vec<_>>());
                    let before = acc.len();
                    acc.extend(grown);
                    if acc.len() == before {
                        break;
                    }
                }
                acc.into_iter().collect()
            }
            Formula::Select { strategy, body } => {
                let all = self.eval_all(body);
                let set: OutputSet = all.iter().map(|m| mask_to_event(*m)).collect();
                apply_selection(*strategy, &set)
                    .iter()
                    .map(|c| c.positions().iter().fold(0u64, |m, p| m | (1 << p)))
                    .collect()
            }
            Formula::Unsat => vec![],
        };
        self.memo.insert(key, result.clone());
        result
    }
}

fn concat_join(left: &[Mask], right: &[Mask]) -> Vec<Mask> {
    let mut out = BTreeSet::new();
    for &a in left {
        let a_max = 63 - a.leading_zeros();
        for &b in right {
            let b_min = b.trailing_zeros();
            if a_max < b_min {
                out.insert(a | b);
            }
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::testutil::{fig1, sensors, PHI1, PHI2, PHI3};

    fn ce(p: &[usize]) -> ComplexEvent {
        ComplexEvent::new(p.iter().copied())
    }

    fn outputs(text: &str) -> OutputSet {
        let schema = sensors();
        let f = parse_formula(text, &schema).unwrap();
        oracle_eval(&f, &fig1(&schema)).unwrap()
    }

    #[test]
    fn phi1_running_example() {
        let expected: OutputSet = [ce(&[1, 2]), ce(&[1, 8]), ce(&[5, 8])].into_iter().collect();
        assert_eq!(outputs(PHI1), expected);
    }

    #[test]
    fn phi2_adds_reversed_pair() {
        let mut expected = outputs(PHI1);
        expected.insert(ce(&[2, 5]));
        assert_eq!(outputs(PHI2), expected);
    }

    #[test]
    fn phi3_iteration() {
        let expected: OutputSet = [ce(&[3, 4, 6, 7]), ce(&[3, 6, 7]), ce(&[3, 4, 7])]
            .into_iter()
            .collect();
        assert_eq!(outputs(PHI3), expected);
    }

    #[test]
    fn not_well_formed_is_an_error() {
        let schema = sensors();
        let f = parse_formula("(H AS x) FILTER y.tmp <= 30", &schema).unwrap();
        assert!(matches!(oracle_eval(&f, &fig1(&schema)), Err(OracleError::NotWellFormed)));
    }

    #[test]
    fn leq_next_cases() {
        assert!(leq_next(&ce(&[5, 8]), &ce(&[1, 8])));
        assert!(leq_next(&ce(&[1, 8]), &ce(&[1, 8])));
        assert!(!leq_next(&ce(&[1, 8]), &ce(&[5, 8])));
    }

    #[test]
    fn leq_last_cases() {
        assert!(leq_last(&ce(&[1, 8]), &ce(&[5, 8])));
        assert!(leq_last(&ce(&[3]), &ce(&[3])));
        assert!(!leq_last(&ce(&[5, 8]), &ce(&[1, 8])));
    }

    #[test]
    fn selection_on_running_example() {
        let phi1 = outputs(PHI1);
        let strict = apply_selection(Strategy::Strict, &phi1);
        assert_eq!(strict, [ce(&[1, 2])].into_iter().collect());
        let last = apply_selection(Strategy::Last, &phi1);
        assert_eq!(last, [ce(&[1, 2]), ce(&[5, 8])].into_iter().collect());
        let nxt = apply_selection(Strategy::Nxt, &phi1);
        assert_eq!(nxt, [ce(&[1, 2]), ce(&[1, 8])].into_iter().collect());
        let phi3 = outputs(PHI3);
        let max = apply_selection(Strategy::Max, &phi3);
        assert_eq!(max, [ce(&[3, 4, 6, 7])].into_iter().collect());
        let phi1_max = apply_selection(Strategy::Max, &phi1);
        assert_eq!(
            phi1_max,
            [ce(&[1, 2]), ce(&[1, 8]), ce(&[5, 8])].into_iter().collect()
        );
    }

    #[test]
    fn selection_is_a_subset_and_single_per_end() {
        let phi1 = outputs(PHI1);
        for strategy in Strategy::ALL {
            let sel = apply_selection(strategy, &phi1);
            assert!(sel.is_subset(&phi1));
            if matches!(strategy, Strategy::Nxt | Strategy::Last) {
                let mut ends = BTreeSet::new();
                for c in &sel {
                    assert!(ends.insert(c.max_pos()), "two events share an end position");
                }
            }
        }
    }

    #[test]
    fn select_wrapper_in_formula() {
        let schema = sensors();
        let f = parse_formula(&format!("LAST({PHI1})"), &schema).unwrap();
        let outs = oracle_eval(&f, &fig1(&schema)).unwrap();
        assert_eq!(outs, [ce(&[1, 2]), ce(&[5, 8])].into_iter().collect());
    }

    #[test]
    fn outputs_bounded_by_stream() {
        let schema = sensors();
        let s = fig1(&schema);
        for text in [PHI1, PHI2, PHI3, "(T AS x)+"] {
            let f = parse_formula(text, &schema).unwrap();
            for c in oracle_eval(&f, &s).unwrap() {
                assert!(c.max_pos() < s.len());
            }
        }
    }

    #[test]
    fn monotone_prefixes() {
        let schema = sensors();
        let full = fig1(&schema);
        let shorter = StreamPrefix::new(
            schema.clone(),
            full.iter().take(6).map(|(_, t)| t.clone()).collect(),
        );
        let f = parse_formula(PHI1, &schema).unwrap();
        let full_outs = oracle_eval(&f, &full).unwrap();
        let short_outs = oracle_eval(&f, &shorter).unwrap();
        let expected: OutputSet = full_outs.iter().filter(|c| c.max_pos() < 6).cloned().collect();
        assert_eq!(short_outs, expected);
    }
}
