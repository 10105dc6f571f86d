//! The per-strategy streaming engines. Each maintains node lists keyed by
//! automaton state (or state set, pair, or priority queue of sets) and
//! updates them in time depending only on the automaton, never on how
//! much stream has been consumed.

use std::collections::HashMap;
use std::sync::Arc;

use crate::cea::{Cea, Mark, StateId};
use crate::event::EventTuple;
use crate::schema::Schema;
use crate::stateset::StateSet;

use super::dag::{Dag, List};

/// Per-state outgoing adjacency, shared by the engines.
pub(super) struct Adjacency {
    pub cea: Cea,
    pub schema: Arc<Schema>,
    out: Vec<Vec<usize>>, // transition indices per source state
}

impl Adjacency {
    pub fn new(cea: Cea, schema: Arc<Schema>) -> Adjacency {
        let mut out = vec![Vec::new(); cea.n_states as usize];
        for (i, t) in cea.transitions.iter().enumerate() {
            out[t.from as usize].push(i);
        }
        Adjacency { cea, schema, out }
    }

    /// Unique target of the (state, mark) pair on this tuple; the
    /// automaton is I/O-deterministic for the engines that call this.
    fn delta_det(&self, q: StateId, t: &EventTuple, mark: Mark) -> Option<StateId> {
        let mut found = None;
        for &i in &self.out[q as usize] {
            let tr = &self.cea.transitions[i];
            if tr.mark == mark && tr.pred.eval_tuple(&self.schema, t) {
                debug_assert!(found.is_none(), "same-mark transitions overlap on a tuple");
                found = Some(tr.to);
                if !cfg!(debug_assertions) {
                    break;
                }
            }
        }
        found
    }

    /// All targets from one state.
    fn delta_targets(&self, q: StateId, t: &EventTuple, mark: Mark, out: &mut Vec<StateId>) {
        for &i in &self.out[q as usize] {
            let tr = &self.cea.transitions[i];
            if tr.mark == mark && tr.pred.eval_tuple(&self.schema, t) {
                out.push(tr.to);
            }
        }
    }

    /// Subset step.
    fn delta_set(&self, from: &StateSet, t: &EventTuple, mark: Mark) -> StateSet {
        let mut target = StateSet::empty(self.cea.n_states as usize);
        for q in from.iter() {
            for &i in &self.out[q as usize] {
                let tr = &self.cea.transitions[i];
                if tr.mark == mark && tr.pred.eval_tuple(&self.schema, t) {
                    target.insert(tr.to);
                }
            }
        }
        target
    }
}

/// Algorithm for I/O-deterministic automata: one list per state; keep
/// transitions prepend a node, skip transitions append the old list.
pub(super) struct DetEngine {
    pub adj: Adjacency,
    pub lists: Vec<List>,
    scratch: Vec<List>,
}

impl DetEngine {
    pub fn new(adj: Adjacency) -> DetEngine {
        let n = adj.cea.n_states as usize;
        DetEngine { adj, lists: vec![List::EMPTY; n], scratch: vec![List::EMPTY; n] }
    }

    pub fn reset(&mut self, dag: &mut Dag) {
        self.lists.fill(List::EMPTY);
        for &q in &self.adj.cea.initial {
            self.lists[q as usize] = dag.bottom_list();
        }
    }

    pub fn step(&mut self, dag: &mut Dag, t: &EventTuple, pos: usize) {
        self.scratch.copy_from_slice(&self.lists); // lazycopy of every list
        self.lists.fill(List::EMPTY);
        for q in 0..self.scratch.len() {
            let old = self.scratch[q];
            if old.is_empty() {
                continue;
            }
            if let Some(p) = self.adj.delta_det(q as StateId, t, Mark::Keep) {
                let node = dag.new_node(pos, old);
                self.lists[p as usize] = dag.add(self.lists[p as usize], node);
            }
            if let Some(p) = self.adj.delta_det(q as StateId, t, Mark::Skip) {
                self.lists[p as usize] = dag.append(self.lists[p as usize], old);
            }
        }
    }

    pub fn final_lists(&self) -> Vec<List> {
        self.adj
            .cea
            .finals
            .iter()
            .map(|q| self.lists[*q as usize])
            .filter(|l| !l.is_empty())
            .collect()
    }
}

/// On-the-fly subset construction for arbitrary automata: lists keyed by
/// reachable state sets, with the active-set optimization.
pub(super) struct NDetEngine {
    pub adj: Adjacency,
    pub lists: HashMap<StateSet, List>,
}

impl NDetEngine {
    pub fn new(adj: Adjacency) -> NDetEngine {
        NDetEngine { adj, lists: HashMap::new() }
    }

    pub fn reset(&mut self, dag: &mut Dag) {
        self.lists.clear();
        let start = StateSet::from_iter(
            self.adj.cea.n_states as usize,
            self.adj.cea.initial.iter().copied(),
        );
        let bottom = dag.bottom_list();
        self.lists.insert(start, bottom);
    }

    pub fn step(&mut self, dag: &mut Dag, t: &EventTuple, pos: usize) {
        let old = std::mem::take(&mut self.lists);
        for (set, old_list) in &old {
            let keep = self.adj.delta_set(set, t, Mark::Keep);
            if !keep.is_empty() {
                let node = dag.new_node(pos, *old_list);
                let entry = self.lists.entry(keep).or_insert(List::EMPTY);
                *entry = dag.add(*entry, node);
            }
            let skip = self.adj.delta_set(set, t, Mark::Skip);
            if !skip.is_empty() {
                let entry = self.lists.entry(skip).or_insert(List::EMPTY);
                *entry = dag.append(*entry, *old_list);
            }
        }
    }

    pub fn final_lists(&self) -> Vec<List> {
        let finals = StateSet::from_iter(
            self.adj.cea.n_states as usize,
            self.adj.cea.finals.iter().copied(),
        );
        self.lists
            .iter()
            .filter(|(set, l)| set.intersects(&finals) && !l.is_empty())
            .map(|(_, l)| *l)
            .collect()
    }
}

/// NXT and LAST evaluation without any pre-compilation: a priority queue
/// of disjoint state sets orders the runs; each state's list holds at
/// most one node, owned by the highest-priority run reaching it.
pub(super) struct OrderedEngine {
    pub adj: Adjacency,
    pub lists: Vec<List>,
    queue: Vec<Vec<StateId>>,
    /// all keep-phase updates before any skip-phase update (LAST)
    mark_major: bool,
    target_scratch: Vec<StateId>,
}

impl OrderedEngine {
    /// The enumerate step assumes one final state; `prepare_single_final`
    /// arranges that.
    pub fn new(adj: Adjacency, mark_major: bool) -> OrderedEngine {
        debug_assert_eq!(adj.cea.finals.len(), 1);
        let n = adj.cea.n_states as usize;
        OrderedEngine {
            adj,
            lists: vec![List::EMPTY; n],
            queue: Vec::new(),
            mark_major,
            target_scratch: Vec::new(),
        }
    }

    pub fn reset(&mut self, dag: &mut Dag) {
        self.lists.fill(List::EMPTY);
        let mut initial: Vec<StateId> = self.adj.cea.initial.clone();
        initial.sort_unstable();
        for &q in &initial {
            self.lists[q as usize] = dag.bottom_list();
        }
        self.queue = vec![initial];
    }

    pub fn step(&mut self, dag: &mut Dag, t: &EventTuple, pos: usize) {
        let old_lists = self.lists.clone();
        self.lists.fill(List::EMPTY);
        let old_queue = std::mem::take(&mut self.queue);
        let mut claimed = StateSet::empty(self.adj.cea.n_states as usize);
        if self.mark_major {
            for set in &old_queue {
                self.update_marking(dag, &old_lists, set, t, pos, Mark::Keep, &mut claimed);
            }
            for set in &old_queue {
                self.update_marking(dag, &old_lists, set, t, pos, Mark::Skip, &mut claimed);
            }
        } else {
            for set in &old_queue {
                self.update_marking(dag, &old_lists, set, t, pos, Mark::Keep, &mut claimed);
                self.update_marking(dag, &old_lists, set, t, pos, Mark::Skip, &mut claimed);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update_marking(
        &mut self,
        dag: &mut Dag,
        old_lists: &[List],
        set: &[StateId],
        t: &EventTuple,
        pos: usize,
        mark: Mark,
        claimed: &mut StateSet,
    ) {
        let mut batch: Vec<StateId> = Vec::new();
        for &q in set {
            let mut targets = std::mem::take(&mut self.target_scratch);
            targets.clear();
            self.adj.delta_targets(q, t, mark, &mut targets);
            for &p in &targets {
                if claimed.contains(p) {
                    continue;
                }
                claimed.insert(p);
                batch.push(p);
                self.lists[p as usize] = match mark {
                    Mark::Keep => {
                        let node = dag.new_node(pos, old_lists[q as usize]);
                        dag.add(List::EMPTY, node)
                    }
                    Mark::Skip => old_lists[q as usize],
                };
            }
            self.target_scratch = targets;
        }
        if !batch.is_empty() {
            batch.sort_unstable();
            self.queue.push(batch);
        }
    }

    pub fn final_lists(&self) -> Vec<List> {
        self.adj
            .cea
            .finals
            .iter()
            .map(|q| self.lists[*q as usize])
            .filter(|l| !l.is_empty())
            .collect()
    }
}

/// The single, marking-entered final state the ordered engines assume.
pub(super) fn prepare_single_final(a: &Cea) -> Cea {
    crate::cea::keep_entered_single_final(a)
}

/// MAX evaluation over pairs (same-output states, dominating states).
pub(super) struct MaxEngine {
    pub adj: Adjacency,
    pub lists: HashMap<(StateSet, StateSet), List>,
}

impl MaxEngine {
    pub fn new(adj: Adjacency) -> MaxEngine {
        MaxEngine { adj, lists: HashMap::new() }
    }

    pub fn reset(&mut self, dag: &mut Dag) {
        self.lists.clear();
        let n = self.adj.cea.n_states as usize;
        let start = (
            StateSet::from_iter(n, self.adj.cea.initial.iter().copied()),
            StateSet::empty(n),
        );
        let bottom = dag.bottom_list();
        self.lists.insert(start, bottom);
    }

    pub fn step(&mut self, dag: &mut Dag, t: &EventTuple, pos: usize) {
        let old = std::mem::take(&mut self.lists);
        for ((keep_set, dom_set), old_list) in &old {
            // marking move: dominators must mark as well to stay dominating
            let dom2 = self.adj.delta_set(dom_set, t, Mark::Keep);
            let mut keep2 = self.adj.delta_set(keep_set, t, Mark::Keep);
            keep2.subtract(&dom2);
            if !keep2.is_empty() {
                let node = dag.new_node(pos, *old_list);
                let entry = self.lists.entry((keep2, dom2)).or_insert(List::EMPTY);
                *entry = dag.add(*entry, node);
            }
            // skipping move: any run that marks now strictly dominates us
            let mut dom2 = self.adj.delta_set(dom_set, t, Mark::Keep);
            dom2.union_with(&self.adj.delta_set(dom_set, t, Mark::Skip));
            dom2.union_with(&self.adj.delta_set(keep_set, t, Mark::Keep));
            let mut keep2 = self.adj.delta_set(keep_set, t, Mark::Skip);
            keep2.subtract(&dom2);
            if !keep2.is_empty() {
                let entry = self.lists.entry((keep2, dom2)).or_insert(List::EMPTY);
                *entry = dag.append(*entry, *old_list);
            }
        }
    }

    pub fn final_lists(&self) -> Vec<List> {
        let finals = StateSet::from_iter(
            self.adj.cea.n_states as usize,
            self.adj.cea.finals.iter().copied(),
        );
        self.lists
            .iter()
            .filter(|((keep_set, dom_set), l)| {
                keep_set.intersects(&finals) && !dom_set.intersects(&finals) && !l.is_empty()
            })
            .map(|(_, l)| *l)
            .collect()
    }
}

/// STRICT evaluation of an I/O-deterministic automaton: only keep
/// transitions extend lists; the single all-skip run is tracked apart
/// and reseeds a fresh bottom at each surviving position.
pub(super) struct StrictEngine {
    pub adj: Adjacency,
    pub lists: Vec<List>,
    qinit: Option<StateId>,
    scratch: Vec<List>,
}

impl StrictEngine {
    pub fn new(adj: Adjacency) -> StrictEngine {
        debug_assert_eq!(adj.cea.initial.len(), 1);
        let n = adj.cea.n_states as usize;
        StrictEngine { adj, lists: vec![List::EMPTY; n], qinit: None, scratch: vec![List::EMPTY; n] }
    }

    pub fn reset(&mut self, dag: &mut Dag) {
        self.lists.fill(List::EMPTY);
        let q0 = self.adj.cea.initial[0];
        self.lists[q0 as usize] = dag.bottom_list();
        self.qinit = Some(q0);
    }

    pub fn step(&mut self, dag: &mut Dag, t: &EventTuple, pos: usize) {
        self.scratch.copy_from_slice(&self.lists);
        self.lists.fill(List::EMPTY);
        for q in 0..self.scratch.len() {
            let old = self.scratch[q];
            if old.is_empty() {
                continue;
            }
            if let Some(p) = self.adj.delta_det(q as StateId, t, Mark::Keep) {
                let node = dag.new_node(pos, old);
                self.lists[p as usize] = dag.add(self.lists[p as usize], node);
            }
        }
        self.qinit = self
            .qinit
            .and_then(|q| self.adj.delta_det(q, t, Mark::Skip));
        if let Some(q) = self.qinit {
            let bottom = dag.bottom_list();
            self.lists[q as usize] = dag.append(self.lists[q as usize], bottom);
        }
    }

    pub fn final_lists(&self) -> Vec<List> {
        self.adj
            .cea
            .finals
            .iter()
            .map(|q| self.lists[*q as usize])
            .filter(|l| !l.is_empty())
            .collect()
    }
}

/// The materializing baseline: every partial complex event is stored
/// explicitly, so both time and memory grow with the match count.
pub(super) struct NaiveEngine {
    pub adj: Adjacency,
    pub runs: std::collections::HashSet<(StateId, Vec<u32>)>,
}

impl NaiveEngine {
    pub fn new(adj: Adjacency) -> NaiveEngine {
        NaiveEngine { adj, runs: std::collections::HashSet::new() }
    }

    pub fn reset(&mut self) {
        self.runs = self.adj.cea.initial.iter().map(|q| (*q, Vec::new())).collect();
    }

    pub fn step(&mut self, t: &EventTuple, pos: usize) {
        let old = std::mem::take(&mut self.runs);
        for (q, positions) in &old {
            for &i in &self.adj.out[*q as usize] {
                let tr = &self.adj.cea.transitions[i];
                if !tr.pred.eval_tuple(&self.adj.schema, t) {
                    continue;
                }
                let mut positions = positions.clone();
                if tr.mark == Mark::Keep {
                    positions.push(pos as u32);
                }
                self.runs.insert((tr.to, positions));
            }
        }
    }

    pub fn outputs_at(&self, pos: usize) -> Vec<Vec<u32>> {
        self.runs
            .iter()
            .filter(|(q, positions)| {
                self.adj.cea.finals.contains(q) && positions.last() == Some(&(pos as u32))
            })
            .map(|(_, positions)| positions.clone())
            .collect()
    }

    pub fn partial_count(&self) -> usize {
        self.runs.len()
    }
}
