//! Minterm partition of a finite predicate set: the satisfiable sign
//! assignments over the base predicates. Every tuple satisfies exactly
//! one minterm, which is what makes the subset-style constructions work
//! on purely syntactic ground.
//!
//! Satisfiability here is the lightweight checker: exact for conjunctions
//! of type tests and single-attribute comparisons over ordered constants,
//! conservative (kept) for everything else. A kept-but-empty minterm
//! never matches a tuple, so it only costs states, never correctness.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::event::EventTuple;
use crate::predicate::{Literal, PredicateExpr};
use crate::schema::Schema;
use crate::value::{CmpOp, Value};

#[derive(Debug, Clone)]
pub struct Minterm {
    /// sign per base predicate
    pub signs: Vec<bool>,
    /// the conjunction the signs denote
    pub pred: PredicateExpr,
}

#[derive(Debug, Clone)]
pub struct MintermPartition {
    pub base: Vec<PredicateExpr>,
    pub minterms: Vec<Minterm>,
}

impl MintermPartition {
    /// Index of the base predicate, if it is one.
    pub fn base_index(&self, pred: &PredicateExpr) -> Option<usize> {
        self.base.iter().position(|p| p == pred)
    }

    /// Does the minterm imply the base predicate (positive sign)?
    pub fn implies(&self, minterm: usize, pred: &PredicateExpr) -> bool {
        match self.base_index(pred) {
            Some(i) => self.minterms[minterm].signs[i],
            None => false,
        }
    }

    /// The unique minterm a concrete tuple satisfies, as an index.
    pub fn classify(&self, schema: &Schema, t: &EventTuple) -> Option<usize> {
        let signs: Vec<bool> = self.base.iter().map(|p| p.eval_tuple(schema, t)).collect();
        self.minterms.iter().position(|m| m.signs == signs)
    }
}

/// Builds the partition: deduplicates the base, enumerates the sign
/// assignments, prunes the provably unsatisfiable ones.
pub fn minterm_partition(preds: &[PredicateExpr]) -> MintermPartition {
    let mut base: Vec<PredicateExpr> = Vec::new();
    for p in preds {
        if !base.contains(p) {
            base.push(p.clone());
        }
    }
    assert!(base.len() <= 20, "minterm partition over {} predicates", base.len());
    let mut minterms = Vec::new();
    for bits in 0u32..(1 << base.len()) {
        let signs: Vec<bool> = (0..base.len()).map(|i| bits & (1 << i) != 0).collect();
        let pos: Vec<&PredicateExpr> =
            base.iter().zip(&signs).filter(|(_, s)| **s).map(|(p, _)| p).collect();
        let neg: Vec<&PredicateExpr> =
            base.iter().zip(&signs).filter(|(_, s)| !**s).map(|(p, _)| p).collect();
        if definitely_unsat(&pos, &neg) {
            continue;
        }
        let mut pred = PredicateExpr::True;
        for p in &pos {
            pred = PredicateExpr::and(pred, (*p).clone());
        }
        for p in &neg {
            pred = PredicateExpr::and(pred, (*p).clone().negate());
        }
        minterms.push(Minterm { signs, pred });
    }
    MintermPartition { base, minterms }
}

/// Are two unary predicates provably disjoint (their conjunction
/// unsatisfiable)? Used by the I/O-determinism check.
pub fn definitely_disjoint(p1: &PredicateExpr, p2: &PredicateExpr) -> bool {
    definitely_unsat(&[p1, p2], &[])
}

/// Conservative unsatisfiability of `pos_1 and .. and not neg_1 and ..`
/// in the unary setting where every variable denotes the same tuple.
/// The conjunction is split into plain literals and negated literal
/// conjunctions; disjunctive structure beyond that is ignored (kept).
pub fn definitely_unsat(pos: &[&PredicateExpr], neg: &[&PredicateExpr]) -> bool {
    let mut lits: Vec<Literal> = Vec::new();
    let mut neg_conjs: Vec<Vec<Literal>> = Vec::new();
    for p in pos {
        collect_positive(&p.nnf(), &mut lits, &mut neg_conjs);
    }
    for n in neg {
        collect_negative(&n.nnf(), &mut lits, &mut neg_conjs);
    }
    if literals_contradict(&lits) {
        return true;
    }
    neg_conjs
        .iter()
        .any(|conj| conj.is_empty() || conj.iter().all(|l| implied(&lits, l)))
}

/// Gathers constraints from a predicate in NNF that must HOLD.
/// Disjunctions of literals become negated conjunctions via De Morgan;
/// anything richer is dropped (conservative).
fn collect_positive(p: &PredicateExpr, lits: &mut Vec<Literal>, neg_conjs: &mut Vec<Vec<Literal>>) {
    match p {
        PredicateExpr::True => {}
        PredicateExpr::And(a, b) => {
            collect_positive(a, lits, neg_conjs);
            collect_positive(b, lits, neg_conjs);
        }
        PredicateExpr::Or(_, _) => {
            if let Some(negated) = negate_disjunction(p) {
                neg_conjs.push(negated);
            }
        }
        _ => {
            if let Some(l) = as_literal(p) {
                lits.push(l);
            }
        }
    }
}

/// Gathers constraints from a predicate in NNF whose NEGATION must hold.
fn collect_negative(p: &PredicateExpr, lits: &mut Vec<Literal>, neg_conjs: &mut Vec<Vec<Literal>>) {
    match p {
        PredicateExpr::True => neg_conjs.push(Vec::new()), // not TRUE: contradiction
        PredicateExpr::False => {}
        // not (a or b) adds both negations
        PredicateExpr::Or(a, b) => {
            collect_negative(a, lits, neg_conjs);
            collect_negative(b, lits, neg_conjs);
        }
        PredicateExpr::And(_, _) => {
            if let Some(conj) = conjunction_literals(p) {
                neg_conjs.push(conj);
            }
        }
        _ => {
            if let Some(l) = as_literal(p) {
                lits.push(negate_literal(&l));
            }
        }
    }
}

fn as_literal(p: &PredicateExpr) -> Option<Literal> {
    match p {
        PredicateExpr::False => Some(Literal { atom: PredicateExpr::False, positive: true }),
        PredicateExpr::TypeIs { .. } | PredicateExpr::Cmp { .. } | PredicateExpr::CmpAttrs { .. } => {
            Some(Literal { atom: p.clone(), positive: true })
        }
        PredicateExpr::Not(inner) if matches!(
            **inner,
            PredicateExpr::TypeIs { .. } | PredicateExpr::Cmp { .. } | PredicateExpr::CmpAttrs { .. }
        ) =>
        {
            Some(Literal { atom: (**inner).clone(), positive: false })
        }
        _ => None,
    }
}

// Signs flip; operators never fold, since a negated comparison is also
// satisfied by tuples lacking the attribute.
fn negate_literal(l: &Literal) -> Literal {
    match &l.atom {
        PredicateExpr::False => Literal { atom: PredicateExpr::True, positive: true },
        _ => Literal { atom: l.atom.clone(), positive: !l.positive },
    }
}

/// Conjunction of literals, or `None` when the tree is richer.
fn conjunction_literals(p: &PredicateExpr) -> Option<Vec<Literal>> {
    let mut out = Vec::new();
    fn rec(p: &PredicateExpr, out: &mut Vec<Literal>) -> bool {
        match p {
            PredicateExpr::True => true,
            PredicateExpr::And(a, b) => rec(a, out) && rec(b, out),
            _ => match as_literal(p) {
                Some(l) => {
                    out.push(l);
                    true
                }
                None => false,
            },
        }
    }
    if rec(p, &mut out) {
        Some(out)
    } else {
        None
    }
}

/// A required disjunction `l1 or .. or lk` recorded as the negated
/// conjunction `not (not l1 and .. and not lk)`: refuted exactly when
/// the facts imply every negated literal.
fn negate_disjunction(p: &PredicateExpr) -> Option<Vec<Literal>> {
    let mut out = Vec::new();
    fn rec(p: &PredicateExpr, out: &mut Vec<Literal>) -> bool {
        match p {
            PredicateExpr::False => true,
            PredicateExpr::Or(a, b) => rec(a, out) && rec(b, out),
            _ => match as_literal(p) {
                Some(l) => {
                    out.push(negate_literal(&l));
                    true
                }
                None => false,
            },
        }
    }
    if rec(p, &mut out) {
        Some(out)
    } else {
        None
    }
}

fn literals_contradict(lits: &[Literal]) -> bool {
    // constant false
    if lits
        .iter()
        .any(|l| l.positive && matches!(l.atom, PredicateExpr::False))
    {
        return true;
    }
    // type tests: a tuple has exactly one type
    let mut positive_type: Option<u32> = None;
    for l in lits {
        if let PredicateExpr::TypeIs { rel, .. } = &l.atom {
            if l.positive {
                match positive_type {
                    Some(r) if r != *rel => return true,
                    _ => positive_type = Some(*rel),
                }
            }
        }
    }
    if let Some(r) = positive_type {
        if lits.iter().any(|l| {
            !l.positive && matches!(&l.atom, PredicateExpr::TypeIs { rel, .. } if *rel == r)
        }) {
            return true;
        }
    }
    // attribute comparisons, grouped per attribute and sign
    let mut groups: HashMap<&str, (Vec<(CmpOp, &Value)>, Vec<(CmpOp, &Value)>)> = HashMap::new();
    for l in lits {
        if let PredicateExpr::Cmp { attr, op, value, .. } = &l.atom {
            let entry = groups.entry(attr.as_str()).or_default();
            if l.positive {
                entry.0.push((*op, value));
            } else {
                entry.1.push((*op, value));
            }
        }
    }
    for (positives, negatives) in groups.values() {
        // with no positive comparison the attribute may simply be absent,
        // which satisfies every negative literal
        if positives.is_empty() {
            continue;
        }
        let kind = positives[0].1.kind();
        if positives.iter().any(|(_, v)| v.kind() != kind) {
            // positive comparisons pin the attribute kind; two kinds
            // cannot both hold
            return true;
        }
        // the attribute is present with this kind; negatives of the same
        // kind must fail, i.e. their complementary operator must hold
        let mut constraints: Vec<(CmpOp, &Value)> = positives.clone();
        constraints.extend(
            negatives
                .iter()
                .filter(|(_, v)| v.kind() == kind)
                .map(|(op, v)| (op.negate(), *v)),
        );
        if !cmp_group_feasible(&constraints) {
            return true;
        }
    }
    false
}

/// Can one value of the common kind satisfy all the comparisons? Order
/// reasoning treats the domain as dense and unbounded, which only ever
/// errs on the side of "feasible".
fn cmp_group_feasible(constraints: &[(CmpOp, &Value)]) -> bool {
    let mut eq: Option<&Value> = None;
    let mut nes: Vec<&Value> = Vec::new();
    let mut lower: Option<(&Value, bool)> = None; // (bound, strict)
    let mut upper: Option<(&Value, bool)> = None;
    let cmp = |a: &Value, b: &Value| a.partial_cmp_same_kind(b).unwrap_or(Ordering::Equal);
    for (op, v) in constraints {
        match op {
            CmpOp::Eq => match eq {
                Some(prev) if cmp(prev, v) != Ordering::Equal => return false,
                _ => eq = Some(v),
            },
            CmpOp::Ne => nes.push(v),
            CmpOp::Gt | CmpOp::Ge => {
                let strict = *op == CmpOp::Gt;
                lower = Some(match lower {
                    None => (v, strict),
                    Some((cur, cur_strict)) => match cmp(v, cur) {
                        Ordering::Greater => (v, strict),
                        Ordering::Equal => (cur, cur_strict || strict),
                        Ordering::Less => (cur, cur_strict),
                    },
                });
            }
            CmpOp::Lt | CmpOp::Le => {
                let strict = *op == CmpOp::Lt;
                upper = Some(match upper {
                    None => (v, strict),
                    Some((cur, cur_strict)) => match cmp(v, cur) {
                        Ordering::Less => (v, strict),
                        Ordering::Equal => (cur, cur_strict || strict),
                        Ordering::Greater => (cur, cur_strict),
                    },
                });
            }
        }
    }
    if let Some(v) = eq {
        if nes.iter().any(|n| cmp(n, v) == Ordering::Equal) {
            return false;
        }
        if let Some((l, strict)) = lower {
            match cmp(v, l) {
                Ordering::Less => return false,
                Ordering::Equal if strict => return false,
                _ => {}
            }
        }
        if let Some((u, strict)) = upper {
            match cmp(v, u) {
                Ordering::Greater => return false,
                Ordering::Equal if strict => return false,
                _ => {}
            }
        }
        return true;
    }
    if let (Some((l, ls)), Some((u, us))) = (lower, upper) {
        match cmp(l, u) {
            Ordering::Greater => return false,
            Ordering::Equal => {
                if ls || us {
                    return false;
                }
                // the interval is the single point l
                if nes.iter().any(|n| cmp(n, l) == Ordering::Equal) {
                    return false;
                }
            }
            Ordering::Less => {}
        }
    }
    true
}

/// Do the facts entail the target literal? Syntactic match, plus
/// single-premise interval reasoning for comparisons and type
/// exclusivity for negated type tests. A negated comparison is also
/// satisfied by tuples lacking the attribute, so only premises that pin
/// the attribute down can entail a positive one.
fn implied(lits: &[Literal], target: &Literal) -> bool {
    if lits
        .iter()
        .any(|l| l.positive == target.positive && l.atom == target.atom)
    {
        return true;
    }
    match (&target.atom, target.positive) {
        (PredicateExpr::Cmp { attr, op, value, .. }, true) => lits.iter().any(|l| {
            l.positive
                && matches!(&l.atom, PredicateExpr::Cmp { attr: a, op: o, value: v, .. }
                    if a == attr && cmp_implies(*o, v, *op, value))
        }),
        (PredicateExpr::Cmp { attr, op, value, .. }, false) => lits.iter().any(|l| {
            match &l.atom {
                PredicateExpr::Cmp { attr: a, op: o, value: v, .. } if a == attr => {
                    if l.positive {
                        // the present value satisfies the complement
                        cmp_implies(*o, v, op.negate(), value)
                    } else {
                        // not P entails not Q exactly when Q entails P
                        cmp_implies(*op, value, *o, v)
                    }
                }
                _ => false,
            }
        }),
        (PredicateExpr::TypeIs { rel, .. }, false) => lits.iter().any(|l| {
            l.positive
                && matches!(&l.atom, PredicateExpr::TypeIs { rel: r, .. } if r != rel)
        }),
        _ => false,
    }
}

/// `attr op1 c1` entails `attr op2 c2`?
fn cmp_implies(op1: CmpOp, c1: &Value, op2: CmpOp, c2: &Value) -> bool {
    let Some(ord) = c1.partial_cmp_same_kind(c2) else {
        return false;
    };
    use CmpOp::*;
    use Ordering::*;
    match op1 {
        Eq => op2.eval(c1, c2),
        Ne => op2 == Ne && ord == Equal,
        Gt => match op2 {
            Gt | Ge => ord != Less,          // (c1,inf) in (c2,inf) or [c2,inf)
            Ne => ord != Less,               // c2 <= c1 lies outside (c1, inf)
            _ => false,
        },
        Ge => match op2 {
            Gt => ord == Greater,
            Ge => ord != Less,
            Ne => ord == Greater,
            _ => false,
        },
        Lt => match op2 {
            Lt | Le => ord != Greater,
            Ne => ord != Greater,
            _ => false,
        },
        Le => match op2 {
            Lt => ord == Less,
            Le => ord != Greater,
            Ne => ord == Less,
            _ => false,
        },
    }
}
