//! The predicate language used by filters and transition labels.
//!
//! Atoms compare a variable's attribute against a constant or another
//! attribute, or test a tuple's type. The set of predicates is closed
//! under conjunction, disjunction and negation. A predicate is unary
//! when it mentions at most one variable; transition labels of automata
//! are always unary and are evaluated by binding that variable to the
//! incoming tuple.

use std::collections::BTreeSet;
use std::fmt;

use crate::event::{EventTuple, StreamPrefix};
use crate::schema::{RelId, Schema};
use crate::value::{CmpOp, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PredicateExpr {
    True,
    False,
    /// `type(x) = R`
    TypeIs { var: String, rel: RelId, rel_name: String },
    /// `x.attr op constant`
    Cmp { var: String, attr: String, op: CmpOp, value: Value },
    /// `x.a op y.b`; unary when both sides use the same variable
    CmpAttrs { lvar: String, lattr: String, op: CmpOp, rvar: String, rattr: String },
    Not(Box<PredicateExpr>),
    And(Box<PredicateExpr>, Box<PredicateExpr>),
    Or(Box<PredicateExpr>, Box<PredicateExpr>),
}

impl PredicateExpr {
    pub fn type_is(schema: &Schema, var: impl Into<String>, rel_name: &str) -> Option<PredicateExpr> {
        let rel = schema.rel_id(rel_name)?;
        Some(PredicateExpr::TypeIs { var: var.into(), rel, rel_name: rel_name.to_string() })
    }

    pub fn cmp(var: impl Into<String>, attr: impl Into<String>, op: CmpOp, value: Value) -> PredicateExpr {
        PredicateExpr::Cmp { var: var.into(), attr: attr.into(), op, value }
    }

    /// Conjunction with constant folding.
    pub fn and(a: PredicateExpr, b: PredicateExpr) -> PredicateExpr {
        match (a, b) {
            (PredicateExpr::True, b) => b,
            (a, PredicateExpr::True) => a,
            (PredicateExpr::False, _) | (_, PredicateExpr::False) => PredicateExpr::False,
            (a, b) => PredicateExpr::And(Box::new(a), Box::new(b)),
        }
    }

    /// Disjunction with constant folding.
    pub fn or(a: PredicateExpr, b: PredicateExpr) -> PredicateExpr {
        match (a, b) {
            (PredicateExpr::False, b) => b,
            (a, PredicateExpr::False) => a,
            (PredicateExpr::True, _) | (_, PredicateExpr::True) => PredicateExpr::True,
            (a, b) => PredicateExpr::Or(Box::new(a), Box::new(b)),
        }
    }

    /// Exact logical complement. Note this is NOT operator flipping:
    /// `x.a > 1` is false on a tuple without the attribute, so its
    /// negation must be true there, unlike `x.a <= 1`.
    pub fn negate(self) -> PredicateExpr {
        match self {
            PredicateExpr::True => PredicateExpr::False,
            PredicateExpr::False => PredicateExpr::True,
            PredicateExpr::Not(inner) => *inner,
            p => PredicateExpr::Not(Box::new(p)),
        }
    }

    /// Largest arity among the atoms of the predicate tree. Conjunction
    /// and disjunction are sugar for stacked filters, so a formula counts
    /// as unary when every atom mentions at most one variable, even if
    /// the tree as a whole mentions several.
    pub fn max_atom_arity(&self) -> usize {
        match self {
            PredicateExpr::True | PredicateExpr::False => 0,
            PredicateExpr::TypeIs { .. } | PredicateExpr::Cmp { .. } => 1,
            PredicateExpr::CmpAttrs { lvar, rvar, .. } => {
                if lvar == rvar {
                    1
                } else {
                    2
                }
            }
            PredicateExpr::Not(p) => p.max_atom_arity(),
            PredicateExpr::And(a, b) | PredicateExpr::Or(a, b) => {
                a.max_atom_arity().max(b.max_atom_arity())
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            PredicateExpr::True | PredicateExpr::False => {}
            PredicateExpr::TypeIs { var, .. } => {
                out.insert(var);
            }
            PredicateExpr::Cmp { var, .. } => {
                out.insert(var);
            }
            PredicateExpr::CmpAttrs { lvar, rvar, .. } => {
                out.insert(lvar);
                out.insert(rvar);
            }
            PredicateExpr::Not(p) => p.collect_vars(out),
            PredicateExpr::And(a, b) | PredicateExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.vars().len()
    }

    pub fn is_unary(&self) -> bool {
        self.arity() <= 1
    }

    /// Number of atoms, the unit the formula size metric counts.
    pub fn atom_count(&self) -> usize {
        match self {
            PredicateExpr::True
            | PredicateExpr::False
            | PredicateExpr::TypeIs { .. }
            | PredicateExpr::Cmp { .. }
            | PredicateExpr::CmpAttrs { .. } => 1,
            PredicateExpr::Not(p) => p.atom_count(),
            PredicateExpr::And(a, b) | PredicateExpr::Or(a, b) => a.atom_count() + b.atom_count(),
        }
    }

    /// Evaluates a unary predicate against one tuple: every variable
    /// occurring in the predicate is bound to `t`.
    pub fn eval_tuple(&self, schema: &Schema, t: &EventTuple) -> bool {
        match self {
            PredicateExpr::True => true,
            PredicateExpr::False => false,
            PredicateExpr::TypeIs { rel, .. } => t.rel == *rel,
            PredicateExpr::Cmp { attr, op, value, .. } => match t.attr(schema, attr) {
                Some(v) => op.eval(v, value),
                None => false,
            },
            PredicateExpr::CmpAttrs { lattr, op, rattr, .. } => {
                match (t.attr(schema, lattr), t.attr(schema, rattr)) {
                    (Some(a), Some(b)) => op.eval(a, b),
                    _ => false,
                }
            }
            PredicateExpr::Not(p) => !p.eval_tuple(schema, t),
            PredicateExpr::And(a, b) => a.eval_tuple(schema, t) && b.eval_tuple(schema, t),
            PredicateExpr::Or(a, b) => a.eval_tuple(schema, t) || b.eval_tuple(schema, t),
        }
    }

    /// Evaluates under a valuation mapping variables to stream positions.
    pub fn eval_valuation(
        &self,
        stream: &StreamPrefix,
        lookup: &impl Fn(&str) -> Option<usize>,
    ) -> bool {
        let schema = stream.schema();
        let tuple = |var: &str| lookup(var).and_then(|p| stream.get(p));
        match self {
            PredicateExpr::True => true,
            PredicateExpr::False => false,
            PredicateExpr::TypeIs { var, rel, .. } => tuple(var).is_some_and(|t| t.rel == *rel),
            PredicateExpr::Cmp { var, attr, op, value } => tuple(var)
                .and_then(|t| t.attr(schema, attr).map(|v| op.eval(v, value)))
                .unwrap_or(false),
            PredicateExpr::CmpAttrs { lvar, lattr, op, rvar, rattr } => {
                match (tuple(lvar), tuple(rvar)) {
                    (Some(a), Some(b)) => match (a.attr(schema, lattr), b.attr(schema, rattr)) {
                        (Some(x), Some(y)) => op.eval(x, y),
                        _ => false,
                    },
                    _ => false,
                }
            }
            PredicateExpr::Not(p) => !p.eval_valuation(stream, lookup),
            PredicateExpr::And(a, b) => {
                a.eval_valuation(stream, lookup) && b.eval_valuation(stream, lookup)
            }
            PredicateExpr::Or(a, b) => {
                a.eval_valuation(stream, lookup) || b.eval_valuation(stream, lookup)
            }
        }
    }

    /// Negation normal form: negations pushed onto atoms, where they
    /// stay as `Not` wrappers.
    pub fn nnf(&self) -> PredicateExpr {
        match self {
            PredicateExpr::And(a, b) => PredicateExpr::and(a.nnf(), b.nnf()),
            PredicateExpr::Or(a, b) => PredicateExpr::or(a.nnf(), b.nnf()),
            PredicateExpr::Not(inner) => match &**inner {
                PredicateExpr::And(a, b) => {
                    PredicateExpr::or(a.clone().negate().nnf(), b.clone().negate().nnf())
                }
                PredicateExpr::Or(a, b) => {
                    PredicateExpr::and(a.clone().negate().nnf(), b.clone().negate().nnf())
                }
                PredicateExpr::Not(p) => p.nnf(),
                other => other.clone().negate(),
            },
            atom => atom.clone(),
        }
    }

    /// Renames a variable everywhere in the predicate.
    pub fn rename_var(&self, from: &str, to: &str) -> PredicateExpr {
        let r = |v: &String| if v == from { to.to_string() } else { v.clone() };
        match self {
            PredicateExpr::True => PredicateExpr::True,
            PredicateExpr::False => PredicateExpr::False,
            PredicateExpr::TypeIs { var, rel, rel_name } => {
                PredicateExpr::TypeIs { var: r(var), rel: *rel, rel_name: rel_name.clone() }
            }
            PredicateExpr::Cmp { var, attr, op, value } => PredicateExpr::Cmp {
                var: r(var),
                attr: attr.clone(),
                op: *op,
                value: value.clone(),
            },
            PredicateExpr::CmpAttrs { lvar, lattr, op, rvar, rattr } => PredicateExpr::CmpAttrs {
                lvar: r(lvar),
                lattr: lattr.clone(),
                op: *op,
                rvar: r(rvar),
                rattr: rattr.clone(),
            },
            PredicateExpr::Not(p) => PredicateExpr::Not(Box::new(p.rename_var(from, to))),
            PredicateExpr::And(a, b) => {
                PredicateExpr::And(Box::new(a.rename_var(from, to)), Box::new(b.rename_var(from, to)))
            }
            PredicateExpr::Or(a, b) => {
                PredicateExpr::Or(Box::new(a.rename_var(from, to)), Box::new(b.rename_var(from, to)))
            }
        }
    }
}

/// A signed atom, produced by flattening conjunctions of literals.
#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub atom: PredicateExpr,
    pub positive: bool,
}

impl PredicateExpr {
    /// Flattens a conjunction of (possibly negated) atoms into literals.
    /// Returns `None` when the predicate contains a disjunction or a
    /// negated conjunction, which this lightweight form does not cover.
    pub fn flatten_conjunction(&self) -> Option<Vec<Literal>> {
        let mut out = Vec::new();
        if self.flatten_into(&mut out, true) {
            Some(out)
        } else {
            None
        }
    }

    fn flatten_into(&self, out: &mut Vec<Literal>, positive: bool) -> bool {
        match self {
            PredicateExpr::True => {
                if !positive {
                    out.push(Literal { atom: PredicateExpr::False, positive: true });
                }
                true
            }
            PredicateExpr::False => {
                if positive {
                    out.push(Literal { atom: PredicateExpr::False, positive: true });
                }
                true
            }
            PredicateExpr::And(a, b) if positive => {
                a.flatten_into(out, true) && b.flatten_into(out, true)
            }
            PredicateExpr::Or(a, b) if !positive => {
                a.flatten_into(out, false) && b.flatten_into(out, false)
            }
            PredicateExpr::Not(p) => p.flatten_into(out, !positive),
            PredicateExpr::TypeIs { .. }
            | PredicateExpr::Cmp { .. }
            | PredicateExpr::CmpAttrs { .. } => {
                out.push(Literal { atom: self.clone(), positive });
                true
            }
            _ => false,
        }
    }
}

// Canonical parenthesized form; the parser accepts exactly this output.
impl fmt::Display for PredicateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateExpr::True => write!(f, "TRUE"),
            PredicateExpr::False => write!(f, "FALSE"),
            PredicateExpr::TypeIs { var, rel_name, .. } => write!(f, "type({var}) = {rel_name}"),
            PredicateExpr::Cmp { var, attr, op, value } => {
                write!(f, "{var}.{attr} {} {value}", op.symbol())
            }
            PredicateExpr::CmpAttrs { lvar, lattr, op, rvar, rattr } => {
                write!(f, "{lvar}.{lattr} {} {rvar}.{rattr}", op.symbol())
            }
            PredicateExpr::Not(p) => write!(f, "NOT ({p})"),
            PredicateExpr::And(a, b) => write!(f, "({a} AND {b})"),
            PredicateExpr::Or(a, b) => write!(f, "({a} OR {b})"),
        }
    }
}
