//! Semantics-preserving formula transformations: disjunctive normal form,
//! safe form, and LP-normal form (every unary filter directly on the
//! definition of its variable).

use crate::analysis::{bound_vars, rename_apart, vdef_plus, well_formed};
use crate::error::CompileError;
use crate::formula::Formula;
use crate::predicate::PredicateExpr;

/// Constant folding and unsatisfiable-subformula propagation.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::Assign { .. } | Formula::Unsat => f.clone(),
        Formula::Filter { body, pred } => {
            let body = simplify(body);
            if matches!(body, Formula::Unsat) {
                return Formula::Unsat;
            }
            match pred {
                PredicateExpr::True => body,
                PredicateExpr::False => Formula::Unsat,
                _ => Formula::filter(body, pred.clone()),
            }
        }
        Formula::Or(a, b) => {
            let a = simplify(a);
            let b = simplify(b);
            match (a, b) {
                (Formula::Unsat, b) => b,
                (a, Formula::Unsat) => a,
                (a, b) => Formula::or(a, b),
            }
        }
        Formula::Seq(a, b) => {
            let a = simplify(a);
            let b = simplify(b);
            if matches!(a, Formula::Unsat) || matches!(b, Formula::Unsat) {
                Formula::Unsat
            } else {
                Formula::seq(a, b)
            }
        }
        Formula::Plus(body) => match simplify(body) {
            Formula::Unsat => Formula::Unsat,
            body => Formula::plus(body),
        },
        Formula::Select { strategy, body } => match simplify(body) {
            Formula::Unsat => Formula::Unsat,
            body => Formula::select(*strategy, body),
        },
    }
}

/// Expands the filter sugar so that every filter carries a single literal:
/// conjunctions become stacked filters, disjunctions duplicate the body
/// under an OR, negations fold onto atoms.
pub fn desugar_filters(f: &Formula) -> Formula {
    match f {
        Formula::Assign { .. } | Formula::Unsat => f.clone(),
        Formula::Filter { body, pred } => {
            let body = desugar_filters(body);
            apply_pred(body, &pred.nnf())
        }
        Formula::Or(a, b) => Formula::or(desugar_filters(a), desugar_filters(b)),
        Formula::Seq(a, b) => Formula::seq(desugar_filters(a), desugar_filters(b)),
        Formula::Plus(body) => Formula::plus(desugar_filters(body)),
        Formula::Select { strategy, body } => Formula::select(*strategy, desugar_filters(body)),
    }
}

fn apply_pred(body: Formula, pred: &PredicateExpr) -> Formula {
    match pred {
        PredicateExpr::And(p, q) => apply_pred(apply_pred(body, p), q),
        PredicateExpr::Or(p, q) => {
            Formula::or(apply_pred(body.clone(), p), apply_pred(body, q))
        }
        PredicateExpr::True => body,
        PredicateExpr::False => Formula::Unsat,
        literal => Formula::filter(body, literal.clone()),
    }
}

/// Disjunctive normal form: every OR at top level or under a `+`, with
/// `+` bodies recursively in DNF. Works on core formulas; selection
/// wrappers are kept in place with their bodies normalized.
pub fn to_dnf(f: &Formula) -> Formula {
    let disjuncts = dnf_list(&simplify(f));
    or_join(disjuncts)
}

fn or_join(mut disjuncts: Vec<Formula>) -> Formula {
    if disjuncts.is_empty() {
        return Formula::Unsat;
    }
    let mut out = disjuncts.remove(0);
    for d in disjuncts {
        out = Formula::or(out, d);
    }
    out
}

fn dnf_list(f: &Formula) -> Vec<Formula> {
    match f {
        Formula::Assign { .. } => vec![f.clone()],
        Formula::Unsat => vec![],
        Formula::Or(a, b) => {
            let mut out = dnf_list(a);
            out.extend(dnf_list(b));
            out
        }
        Formula::Filter { body, pred } => dnf_list(body)
            .into_iter()
            .map(|d| Formula::filter(d, pred.clone()))
            .collect(),
        Formula::Seq(a, b) => {
            let left = dnf_list(a);
            let right = dnf_list(b);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    out.push(Formula::seq(l.clone(), r.clone()));
                }
            }
            out
        }
        Formula::Plus(body) => {
            let inner = dnf_list(body);
            if inner.is_empty() {
                vec![]
            } else {
                vec![Formula::plus(or_join(inner))]
            }
        }
        Formula::Select { strategy, body } => vec![Formula::select(*strategy, to_dnf(body))],
    }
}

/// Safe form: DNF, then bottom-up removal of disjuncts containing an
/// unsatisfiable sequencing (shared `vdef+` on both sides). Returns the
/// canonical unsatisfiable marker when nothing survives.
pub fn to_safe(f: &Formula) -> Formula {
    let dnf = to_dnf(f);
    let survivors: Vec<Formula> = dnf_list(&dnf)
        .iter()
        .map(prune_unsafe)
        .filter(|d| !matches!(d, Formula::Unsat))
        .collect();
    simplify(&or_join(survivors))
}

fn prune_unsafe(f: &Formula) -> Formula {
    match f {
        Formula::Assign { .. } | Formula::Unsat => f.clone(),
        Formula::Filter { body, pred } => match prune_unsafe(body) {
            Formula::Unsat => Formula::Unsat,
            body => Formula::filter(body, pred.clone()),
        },
        Formula::Or(a, b) => {
            // inside a disjunct this occurs only under +, but handle anyway
            match (prune_unsafe(a), prune_unsafe(b)) {
                (Formula::Unsat, b) => b,
                (a, Formula::Unsat) => a,
                (a, b) => Formula::or(a, b),
            }
        }
        Formula::Seq(a, b) => {
            let a = prune_unsafe(a);
            let b = prune_unsafe(b);
            if matches!(a, Formula::Unsat) || matches!(b, Formula::Unsat) {
                return Formula::Unsat;
            }
            if vdef_plus(&a).intersection(&vdef_plus(&b)).next().is_some() {
                return Formula::Unsat;
            }
            Formula::seq(a, b)
        }
        Formula::Plus(body) => {
            let cleaned: Vec<Formula> = dnf_list(body)
                .iter()
                .map(prune_unsafe)
                .filter(|d| !matches!(d, Formula::Unsat))
                .collect();
            if cleaned.is_empty() {
                Formula::Unsat
            } else {
                Formula::plus(or_join(cleaned))
            }
        }
        Formula::Select { strategy, body } => match prune_unsafe(body) {
            Formula::Unsat => Formula::Unsat,
            body => Formula::select(*strategy, body),
        },
    }
}

/// Structural test for LP-normal form: every unary filter sits directly
/// on the definition of its variable. Filters whose predicate mentions
/// several variables must consist of genuinely binary atoms only
/// (mixed trees are sugar the rewriting is expected to separate).
pub fn is_lp_normal_form(f: &Formula) -> bool {
    let mut ok = true;
    f.for_each_node(&mut |n| {
        if let Formula::Filter { body, pred } = n {
            let vars = pred.vars();
            if vars.len() <= 1 {
                let on_own_assign = match (&**body, vars.iter().next()) {
                    (Formula::Assign { var, .. }, Some(v)) => var == v,
                    (Formula::Assign { .. }, None) => true,
                    _ => false,
                };
                if !on_own_assign {
                    ok = false;
                }
            } else if separable_unary_atoms(pred) {
                ok = false;
            }
        }
    });
    ok
}

fn separable_unary_atoms(pred: &PredicateExpr) -> bool {
    match pred {
        PredicateExpr::True | PredicateExpr::False => false,
        PredicateExpr::TypeIs { .. } | PredicateExpr::Cmp { .. } => true,
        PredicateExpr::CmpAttrs { lvar, rvar, .. } => lvar == rvar,
        PredicateExpr::Not(p) => separable_unary_atoms(p),
        PredicateExpr::And(a, b) | PredicateExpr::Or(a, b) => {
            separable_unary_atoms(a) || separable_unary_atoms(b)
        }
    }
}

/// Rewrites into LP-normal form: desugars filters to single literals,
/// pushes unary filters down to their definitions (popping them up to
/// the binding sub-formula first when the variable is not bound below),
/// then fuses stacked filters on each definition into one conjunction.
/// Binary atoms stay where they are.
pub fn to_lp_normal_form(f: &Formula) -> Result<Formula, CompileError> {
    if !well_formed(f) {
        return Err(CompileError::NotWellFormed);
    }
    let mut cur = simplify(&desugar_filters(&rename_apart(f)));
    loop {
        cur = simplify(&cur);
        let Some(path) = find_offender(&cur, &mut Vec::new()) else {
            break;
        };
        let (body, pred) = match get_subtree(&cur, &path) {
            Formula::Filter { body, pred } => (body.as_ref().clone(), pred.clone()),
            _ => unreachable!("offender path must address a filter"),
        };
        let var = pred.vars().iter().next().map(|v| v.to_string());
        let var = var.expect("offending filters carry exactly one variable");
        if bound_vars(&body).contains(&var) {
            let pushed = push_down(&body, &var, &pred);
            cur = replace_subtree(&cur, &path, pushed);
        } else {
            // pop up to the lowest enclosing sub-formula binding the variable
            let mut target_len = None;
            for keep in (0..path.len()).rev() {
                let candidate = get_subtree(&cur, &path[..keep]);
                if bound_vars(candidate).contains(&var) {
                    target_len = Some(keep);
                    break;
                }
            }
            let Some(keep) = target_len else {
                // cannot happen for well-formed input
                return Err(CompileError::NotWellFormed);
            };
            let target = get_subtree(&cur, &path[..keep]).clone();
            let rel_path = &path[keep..];
            let taken = replace_subtree(&target, rel_path, body.clone());
            let dropped = replace_subtree(&target, rel_path, Formula::Unsat);
            let replacement = Formula::or(
                Formula::filter(taken, pred.clone()),
                Formula::filter(dropped, pred.negate()),
            );
            cur = replace_subtree(&cur, &path[..keep], replacement);
        }
    }
    Ok(simplify(&fuse_assign_filters(&cur)))
}

/// Peels filter wrappers off a formula.
fn strip_filters(mut f: &Formula) -> &Formula {
    while let Formula::Filter { body, .. } = f {
        f = body;
    }
    f
}

/// A filter needing work: unary single-literal predicate whose body is
/// not (a filter stack over) the definition of that very variable.
/// Stacks over one definition are fine; the fusion pass merges them.
fn find_offender(f: &Formula, path: &mut Vec<usize>) -> Option<Vec<usize>> {
    if let Formula::Filter { body, pred } = f {
        let vars = pred.vars();
        if vars.len() == 1 {
            let v = *vars.iter().next().unwrap();
            let fine = matches!(strip_filters(body), Formula::Assign { var, .. } if var == v);
            if !fine {
                return Some(path.clone());
            }
        }
    }
    match f {
        Formula::Assign { .. } | Formula::Unsat => None,
        Formula::Filter { body, .. } | Formula::Plus(body) | Formula::Select { body, .. } => {
            path.push(0);
            let r = find_offender(body, path);
            path.pop();
            r
        }
        Formula::Or(a, b) | Formula::Seq(a, b) => {
            path.push(0);
            if let Some(hit) = find_offender(a, path) {
                path.pop();
                return Some(hit);
            }
            path.pop();
            path.push(1);
            let r = find_offender(b, path);
            path.pop();
            r
        }
    }
}

fn get_subtree<'a>(f: &'a Formula, path: &[usize]) -> &'a Formula {
    let Some((&step, rest)) = path.split_first() else {
        return f;
    };
    match (f, step) {
        (Formula::Filter { body, .. }, 0)
        | (Formula::Plus(body), 0)
        | (Formula::Select { body, .. }, 0) => get_subtree(body, rest),
        (Formula::Or(a, _), 0) | (Formula::Seq(a, _), 0) => get_subtree(a, rest),
        (Formula::Or(_, b), 1) | (Formula::Seq(_, b), 1) => get_subtree(b, rest),
        _ => panic!("bad path"),
    }
}

fn replace_subtree(f: &Formula, path: &[usize], new: Formula) -> Formula {
    let Some((&step, rest)) = path.split_first() else {
        return new;
    };
    match (f, step) {
        (Formula::Filter { body, pred }, 0) => {
            Formula::filter(replace_subtree(body, rest, new), pred.clone())
        }
        (Formula::Plus(body), 0) => Formula::plus(replace_subtree(body, rest, new)),
        (Formula::Select { strategy, body }, 0) => {
            Formula::select(*strategy, replace_subtree(body, rest, new))
        }
        (Formula::Or(a, b), 0) => Formula::or(replace_subtree(a, rest, new), b.as_ref().clone()),
        (Formula::Or(a, b), 1) => Formula::or(a.as_ref().clone(), replace_subtree(b, rest, new)),
        (Formula::Seq(a, b), 0) => Formula::seq(replace_subtree(a, rest, new), b.as_ref().clone()),
        (Formula::Seq(a, b), 1) => Formula::seq(a.as_ref().clone(), replace_subtree(b, rest, new)),
        _ => panic!("bad path"),
    }
}

/// Applies `pred` to every definition of `var` in `body`. Sound when
/// `var` is bound (`vi`) in `body`; after rename-apart each name has a
/// single definition scope, so all matching assigns belong to it.
fn push_down(body: &Formula, var: &str, pred: &PredicateExpr) -> Formula {
    match body {
        Formula::Assign { var: v, .. } if v == var => Formula::filter(body.clone(), pred.clone()),
        Formula::Assign { .. } | Formula::Unsat => body.clone(),
        Formula::Filter { body: b, pred: p } => {
            Formula::filter(push_down(b, var, pred), p.clone())
        }
        Formula::Or(a, b) => Formula::or(push_down(a, var, pred), push_down(b, var, pred)),
        Formula::Seq(a, b) => Formula::seq(push_down(a, var, pred), push_down(b, var, pred)),
        Formula::Plus(b) => Formula::plus(push_down(b, var, pred)),
        Formula::Select { strategy, body: b } => {
            Formula::select(*strategy, push_down(b, var, pred))
        }
    }
}

/// Fuses stacks of unary filters over one definition into a single
/// conjunction, hoisting any binary filter in the stack outside it.
fn fuse_assign_filters(f: &Formula) -> Formula {
    match f {
        Formula::Assign { .. } | Formula::Unsat => f.clone(),
        Formula::Filter { .. } => {
            let mut preds = Vec::new();
            let mut cur = f;
            while let Formula::Filter { body, pred } = cur {
                preds.push(pred.clone());
                cur = body;
            }
            if let Formula::Assign { var, .. } = cur {
                let (unary, rest): (Vec<_>, Vec<_>) = preds
                    .into_iter()
                    .partition(|p| p.vars().iter().all(|v| *v == var.as_str()));
                // innermost filter first so the fused conjunction reads in
                // source order
                let mut fused = cur.clone();
                if !unary.is_empty() {
                    let conj = unary
                        .into_iter()
                        .rev()
                        .reduce(PredicateExpr::and)
                        .unwrap();
                    fused = Formula::filter(fused, conj);
                }
                for p in rest.into_iter().rev() {
                    fused = Formula::filter(fused, p);
                }
                fused
            } else {
                let inner = fuse_assign_filters(cur);
                let mut out = inner;
                for p in preds.into_iter().rev() {
                    out = Formula::filter(out, p);
                }
                out
            }
        }
        Formula::Or(a, b) => Formula::or(fuse_assign_filters(a), fuse_assign_filters(b)),
        Formula::Seq(a, b) => Formula::seq(fuse_assign_filters(a), fuse_assign_filters(b)),
        Formula::Plus(b) => Formula::plus(fuse_assign_filters(b)),
        Formula::Select { strategy, body } => {
            Formula::select(*strategy, fuse_assign_filters(body))
        }
    }
}
