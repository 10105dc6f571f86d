//! The pattern language: sequencing, disjunction, iteration, filtering
//! and selection-strategy wrappers over typed event streams.

use std::fmt;

use crate::predicate::PredicateExpr;
use crate::schema::RelId;

/// Selection strategy wrapper names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Strict,
    Nxt,
    Last,
    Max,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Strict, Strategy::Nxt, Strategy::Last, Strategy::Max];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Strict => "STRICT",
            Strategy::Nxt => "NXT",
            Strategy::Last => "LAST",
            Strategy::Max => "MAX",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        match s.to_ascii_uppercase().as_str() {
            "STRICT" => Some(Strategy::Strict),
            "NXT" | "NEXT" => Some(Strategy::Nxt),
            "LAST" => Some(Strategy::Last),
            "MAX" => Some(Strategy::Max),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `R AS x`
    Assign { rel: RelId, rel_name: String, var: String },
    /// `body FILTER pred`
    Filter { body: Box<Formula>, pred: PredicateExpr },
    Or(Box<Formula>, Box<Formula>),
    Seq(Box<Formula>, Box<Formula>),
    Plus(Box<Formula>),
    Select { strategy: Strategy, body: Box<Formula> },
    /// Canonical unsatisfiable formula, produced by the safe rewriting
    /// when every disjunct dies. Empty output on all streams.
    Unsat,
}

impl Formula {
    pub fn assign(rel: RelId, rel_name: impl Into<String>, var: impl Into<String>) -> Formula {
        Formula::Assign { rel, rel_name: rel_name.into(), var: var.into() }
    }

    pub fn filter(body: Formula, pred: PredicateExpr) -> Formula {
        Formula::Filter { body: Box::new(body), pred }
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn seq(a: Formula, b: Formula) -> Formula {
        Formula::Seq(Box::new(a), Box::new(b))
    }

    pub fn plus(body: Formula) -> Formula {
        Formula::Plus(Box::new(body))
    }

    pub fn select(strategy: Strategy, body: Formula) -> Formula {
        Formula::Select { strategy, body: Box::new(body) }
    }

    /// Node count: structural nodes plus predicate atoms. A filter
    /// contributes one node plus the atoms of its predicate.
    pub fn size(&self) -> usize {
        match self {
            Formula::Assign { .. } | Formula::Unsat => 1,
            Formula::Filter { body, pred } => 1 + pred.atom_count() + body.size(),
            Formula::Or(a, b) | Formula::Seq(a, b) => 1 + a.size() + b.size(),
            Formula::Plus(b) => 1 + b.size(),
            Formula::Select { body, .. } => 1 + body.size(),
        }
    }

    /// True when the formula contains no selection-strategy wrapper.
    pub fn is_core(&self) -> bool {
        match self {
            Formula::Select { .. } => false,
            Formula::Assign { .. } | Formula::Unsat => true,
            Formula::Filter { body, .. } | Formula::Plus(body) => body.is_core(),
            Formula::Or(a, b) | Formula::Seq(a, b) => a.is_core() && b.is_core(),
        }
    }

    /// Peels the chain of top-level selection wrappers, outermost first.
    pub fn peel_selects(&self) -> (Vec<Strategy>, &Formula) {
        let mut wrappers = Vec::new();
        let mut cur = self;
        while let Formula::Select { strategy, body } = cur {
            wrappers.push(*strategy);
            cur = body;
        }
        (wrappers, cur)
    }

    pub fn for_each_node<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Assign { .. } | Formula::Unsat => {}
            Formula::Filter { body, .. } | Formula::Plus(body) | Formula::Select { body, .. } => {
                body.for_each_node(f)
            }
            Formula::Or(a, b) | Formula::Seq(a, b) => {
                a.for_each_node(f);
                b.for_each_node(f);
            }
        }
    }
}

// Canonical fully parenthesized concrete syntax; `parser::parse_formula`
// of this output reproduces the AST exactly.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Assign { rel_name, var, .. } => write!(f, "{rel_name} AS {var}"),
            Formula::Filter { body, pred } => write!(f, "({body}) FILTER ({pred})"),
            Formula::Or(a, b) => write!(f, "({a}) OR ({b})"),
            Formula::Seq(a, b) => write!(f, "({a}) ; ({b})"),
            Formula::Plus(b) => write!(f, "({b})+"),
            Formula::Select { strategy, body } => write!(f, "{strategy}({body})"),
            Formula::Unsat => write!(f, "UNSAT"),
        }
    }
}
