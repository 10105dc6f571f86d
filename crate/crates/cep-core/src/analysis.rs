//! Static analyses over formulas: variable sets, binding, well-formedness,
//! safety, unarity, and the rename-apart preprocessing pass.

use std::collections::BTreeSet;

use crate::formula::Formula;

pub type VarSet = BTreeSet<String>;

/// All variables mentioned, in definitions and predicates alike.
pub fn var_all(f: &Formula) -> VarSet {
    let mut out = VarSet::new();
    f.for_each_node(&mut |n| match n {
        Formula::Assign { var, .. } => {
            out.insert(var.clone());
        }
        Formula::Filter { pred, .. } => {
            for v in pred.vars() {
                out.insert(v.to_string());
            }
        }
        _ => {}
    });
    out
}

/// Variables defined by some `R AS x` clause.
pub fn vdef(f: &Formula) -> VarSet {
    let mut out = VarSet::new();
    f.for_each_node(&mut |n| {
        if let Formula::Assign { var, .. } = n {
            out.insert(var.clone());
        }
    });
    out
}

/// Variables defined outside the scope of every `+` operator.
pub fn vdef_plus(f: &Formula) -> VarSet {
    match f {
        Formula::Assign { var, .. } => std::iter::once(var.clone()).collect(),
        Formula::Filter { body, .. } | Formula::Select { body, .. } => vdef_plus(body),
        Formula::Or(a, b) | Formula::Seq(a, b) => {
            let mut s = vdef_plus(a);
            s.extend(vdef_plus(b));
            s
        }
        Formula::Plus(_) | Formula::Unsat => VarSet::new(),
    }
}

/// Bound variables `vi`: defined in every disjunct, never under `+`.
pub fn bound_vars(f: &Formula) -> VarSet {
    match f {
        Formula::Assign { var, .. } => std::iter::once(var.clone()).collect(),
        Formula::Filter { body, .. } | Formula::Select { body, .. } => bound_vars(body),
        Formula::Or(a, b) => bound_vars(a).intersection(&bound_vars(b)).cloned().collect(),
        Formula::Seq(a, b) => {
            let mut s = bound_vars(a);
            s.extend(bound_vars(b));
            s
        }
        Formula::Plus(_) | Formula::Unsat => VarSet::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub var_all: VarSet,
    pub vdef: VarSet,
    pub vdef_plus: VarSet,
    pub bound: VarSet,
    pub well_formed: bool,
    pub safe: bool,
    pub unary: bool,
}

/// Computes the full report in one pass over the formula.
pub fn analyze(f: &Formula) -> AnalysisReport {
    let mut safe = true;
    let mut unary = true;
    f.for_each_node(&mut |n| match n {
        Formula::Seq(a, b) => {
            if vdef_plus(a).intersection(&vdef_plus(b)).next().is_some() {
                safe = false;
            }
        }
        // conjunction/disjunction of unary atoms over several variables
        // is sugar for stacked unary filters, so judge atoms
        Formula::Filter { pred, .. } if pred.max_atom_arity() > 1 => {
            unary = false;
        }
        _ => {}
    });
    AnalysisReport {
        var_all: var_all(f),
        vdef: vdef(f),
        vdef_plus: vdef_plus(f),
        bound: bound_vars(f),
        well_formed: well_formed(f),
        safe,
        unary,
    }
}

/// Every variable used in a filter must be bound (`vi`) by some
/// sub-formula enclosing the filter's body.
pub fn well_formed(f: &Formula) -> bool {
    fn walk(node: &Formula, inherited: &VarSet) -> bool {
        match node {
            Formula::Assign { .. } | Formula::Unsat => true,
            Formula::Filter { body, pred } => {
                let mut scope = inherited.clone();
                scope.extend(bound_vars(body));
                if !pred.vars().iter().all(|v| scope.contains(*v)) {
                    return false;
                }
                walk(body, &scope)
            }
            Formula::Or(a, b) | Formula::Seq(a, b) => {
                let mut scope = inherited.clone();
                scope.extend(bound_vars(node));
                walk(a, &scope) && walk(b, &scope)
            }
            Formula::Plus(body) | Formula::Select { body, .. } => {
                let mut scope = inherited.clone();
                scope.extend(bound_vars(node));
                walk(body, &scope)
            }
        }
    }
    walk(f, &VarSet::new())
}

/// Renames apart variables that are redefined inside a `+` body while the
/// same name is also defined outside that body, so every later stage sees
/// one definition scope per name. Fresh names append primes (`x'`).
pub fn rename_apart(f: &Formula) -> Formula {
    let mut taken = var_all(f);
    rename_rec(f, &VarSet::new(), &mut taken)
}

fn fresh_name(base: &str, taken: &mut VarSet) -> String {
    let mut name = format!("{base}'");
    while taken.contains(&name) {
        name.push('\'');
    }
    taken.insert(name.clone());
    name
}

fn rename_rec(node: &Formula, defs_outside: &VarSet, taken: &mut VarSet) -> Formula {
    match node {
        Formula::Assign { .. } | Formula::Unsat => node.clone(),
        Formula::Filter { body, pred } => Formula::Filter {
            body: Box::new(rename_rec(body, defs_outside, taken)),
            pred: pred.clone(),
        },
        Formula::Select { strategy, body } => Formula::Select {
            strategy: *strategy,
            body: Box::new(rename_rec(body, defs_outside, taken)),
        },
        Formula::Or(a, b) | Formula::Seq(a, b) => {
            let mut outside_a = defs_outside.clone();
            outside_a.extend(vdef(b));
            let mut outside_b = defs_outside.clone();
            outside_b.extend(vdef(a));
            let left = rename_rec(a, &outside_a, taken);
            let right = rename_rec(b, &outside_b, taken);
            match node {
                Formula::Or(..) => Formula::or(left, right),
                _ => Formula::seq(left, right),
            }
        }
        Formula::Plus(body) => {
            let mut body = body.as_ref().clone();
            let conflicts: Vec<String> = vdef_plus(&body)
                .intersection(defs_outside)
                .cloned()
                .collect();
            for var in conflicts {
                let fresh = fresh_name(&var, taken);
                body = subst_scope(&body, &var, &fresh);
            }
            let mut outside = defs_outside.clone();
            outside.extend(vdef_plus(&body));
            Formula::plus(rename_rec(&body, &outside, taken))
        }
    }
}

/// Substitutes `from -> to` within one definition scope: stops at nested
/// `+` bodies that redefine `from` at their own level.
fn subst_scope(node: &Formula, from: &str, to: &str) -> Formula {
    match node {
        Formula::Assign { rel, rel_name, var } => {
            if var == from {
                Formula::assign(*rel, rel_name.clone(), to)
            } else {
                node.clone()
            }
        }
        Formula::Unsat => Formula::Unsat,
        Formula::Filter { body, pred } => Formula::Filter {
            body: Box::new(subst_scope(body, from, to)),
            pred: pred.rename_var(from, to),
        },
        Formula::Select { strategy, body } => Formula::Select {
            strategy: *strategy,
            body: Box::new(subst_scope(body, from, to)),
        },
        Formula::Or(a, b) => Formula::or(subst_scope(a, from, to), subst_scope(b, from, to)),
        Formula::Seq(a, b) => Formula::seq(subst_scope(a, from, to), subst_scope(b, from, to)),
        Formula::Plus(body) => {
            if vdef_plus(body).contains(from) {
                node.clone()
            } else {
                Formula::plus(subst_scope(body, from, to))
            }
        }
    }
}
