//! The end-to-end compilation pipeline: rewrite, compile, apply
//! selection strategies.

use crate::analysis;
use crate::cea::{
    compile_core, compile_last, compile_max, compile_next, compile_strict, io_determinize,
    remove_epsilon, Cea,
};
use crate::error::CompileError;
use crate::formula::{Formula, Strategy};
use crate::rewrite::{to_lp_normal_form, to_safe};

/// Result of compiling a formula: the rewritten core, its automaton, and
/// the selection wrappers peeled off the top (outermost first).
pub struct Compiled {
    pub rewritten: Formula,
    pub automaton: Cea,
    pub strategies: Vec<Strategy>,
}

/// analyze, make safe, normalize, compile, remove epsilons.
pub fn compile_formula(f: &Formula) -> Result<Compiled, CompileError> {
    let (strategies, core) = f.peel_selects();
    if !analysis::well_formed(core) {
        return Err(CompileError::NotWellFormed);
    }
    let rewritten = to_lp_normal_form(&to_safe(core))?;
    let automaton = remove_epsilon(&compile_core(&rewritten)?);
    Ok(Compiled { rewritten, automaton, strategies })
}

pub fn compile_strategy(strategy: Strategy, a: &Cea) -> Cea {
    match strategy {
        Strategy::Strict => compile_strict(a),
        Strategy::Nxt => compile_next(a),
        Strategy::Last => compile_last(a),
        Strategy::Max => compile_max(a),
    }
}

impl Compiled {
    /// Automaton with every selection wrapper compiled in, innermost
    /// first, optionally determinized at the end.
    pub fn strategy_automaton(&self, determinize: bool) -> Cea {
        let mut a = self.automaton.clone();
        for s in self.strategies.iter().rev() {
            a = compile_strategy(*s, &a);
        }
        if determinize {
            a = io_determinize(&a);
        }
        a
    }

    /// Inner wrappers compiled into the automaton, the outermost left
    /// for the engine to evaluate on the fly.
    pub fn engine_inputs(&self) -> (Cea, Option<Strategy>) {
        let mut a = self.automaton.clone();
        if self.strategies.is_empty() {
            return (a, None);
        }
        for s in self.strategies[1..].iter().rev() {
            a = compile_strategy(*s, &a);
        }
        (a, Some(self.strategies[0]))
    }
}
