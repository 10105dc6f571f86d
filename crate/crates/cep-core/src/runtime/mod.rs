//! Streaming evaluation: constant update time per event, constant-delay
//! enumeration of the complex events recognized so far.

mod dag;
mod engines;
mod enumerate;

pub use dag::{Dag, List, NodeId, BOTTOM};
pub use enumerate::{EnumStats, Enumerator};

use std::sync::Arc;

use crate::cea::{io_determinize, is_io_deterministic, Cea};
use crate::event::{EventTuple, StreamPrefix};
use crate::formula::Strategy;
use crate::oracle::{ComplexEvent, OutputSet};
use crate::schema::Schema;

use engines::{
    prepare_single_final, Adjacency, DetEngine, MaxEngine, NDetEngine, NaiveEngine, OrderedEngine,
    StrictEngine,
};

enum Imp {
    Det(DetEngine),
    NDet(NDetEngine),
    Next(OrderedEngine),
    Last(OrderedEngine),
    Max(MaxEngine),
    Strict(StrictEngine),
    Naive(NaiveEngine),
}

/// A single-owner streaming evaluator over one automaton.
pub struct Engine {
    dag: Dag,
    imp: Imp,
    /// position of the next event to ingest
    pos: usize,
    /// reset all lists to the initial configuration after an output fires
    pub consumption_policy: bool,
}

impl Engine {
    /// Dispatches on the strategy: no strategy uses the deterministic
    /// algorithm when the automaton allows it and the on-the-fly subset
    /// algorithm otherwise; NXT/LAST run directly on the automaton;
    /// STRICT determinizes first; MAX tracks subset pairs.
    pub fn new(a: &Cea, schema: Arc<Schema>, strategy: Option<Strategy>) -> Engine {
        let imp = match strategy {
            None => {
                if is_io_deterministic(a) {
                    Imp::Det(DetEngine::new(Adjacency::new(a.clone(), schema)))
                } else {
                    Imp::NDet(NDetEngine::new(Adjacency::new(a.clone(), schema)))
                }
            }
            Some(Strategy::Nxt) => Imp::Next(OrderedEngine::new(
                Adjacency::new(prepare_single_final(a), schema),
                false,
            )),
            Some(Strategy::Last) => Imp::Last(OrderedEngine::new(
                Adjacency::new(prepare_single_final(a), schema),
                true,
            )),
            Some(Strategy::Max) => Imp::Max(MaxEngine::new(Adjacency::new(a.clone(), schema))),
            Some(Strategy::Strict) => {
                Imp::Strict(StrictEngine::new(Adjacency::new(io_determinize(a), schema)))
            }
        };
        let mut engine = Engine { dag: Dag::new(), imp, pos: 0, consumption_policy: false };
        engine.reset_to_initial();
        engine
    }

    /// The materializing baseline used for the asymptotic comparison.
    pub fn new_naive(a: &Cea, schema: Arc<Schema>) -> Engine {
        let mut naive = NaiveEngine::new(Adjacency::new(a.clone(), schema));
        naive.reset();
        Engine { dag: Dag::new(), imp: Imp::Naive(naive), pos: 0, consumption_policy: false }
    }

    /// Forces the on-the-fly subset algorithm even when the automaton is
    /// already I/O-deterministic.
    pub fn new_on_the_fly(a: &Cea, schema: Arc<Schema>) -> Engine {
        let imp = Imp::NDet(NDetEngine::new(Adjacency::new(a.clone(), schema)));
        let mut engine = Engine { dag: Dag::new(), imp, pos: 0, consumption_policy: false };
        engine.reset_to_initial();
        engine
    }

    /// Back to the initial configuration, dropping every list and node
    /// (the consumption-policy reset).
    pub fn reset_to_initial(&mut self) {
        self.dag.clear();
        match &mut self.imp {
            Imp::Det(e) => e.reset(&mut self.dag),
            Imp::NDet(e) => e.reset(&mut self.dag),
            Imp::Next(e) | Imp::Last(e) => e.reset(&mut self.dag),
            Imp::Max(e) => e.reset(&mut self.dag),
            Imp::Strict(e) => e.reset(&mut self.dag),
            Imp::Naive(e) => e.reset(),
        }
    }

    /// Position the next ingested event will occupy.
    pub fn position(&self) -> usize {
        self.pos
    }

    /// Ingests the next event. Work is bounded by the automaton size and
    /// the tuple, independent of the events already processed.
    pub fn step(&mut self, t: &EventTuple) {
        let pos = self.pos;
        self.pos += 1;
        match &mut self.imp {
            Imp::Det(e) => e.step(&mut self.dag, t, pos),
            Imp::NDet(e) => e.step(&mut self.dag, t, pos),
            Imp::Next(e) | Imp::Last(e) => e.step(&mut self.dag, t, pos),
            Imp::Max(e) => e.step(&mut self.dag, t, pos),
            Imp::Strict(e) => e.step(&mut self.dag, t, pos),
            Imp::Naive(e) => e.step(t, pos),
        }
    }

    fn final_lists(&self) -> Vec<List> {
        match &self.imp {
            Imp::Det(e) => e.final_lists(),
            Imp::NDet(e) => e.final_lists(),
            Imp::Next(e) | Imp::Last(e) => e.final_lists(),
            Imp::Max(e) => e.final_lists(),
            Imp::Strict(e) => e.final_lists(),
            Imp::Naive(_) => Vec::new(),
        }
    }

    /// Constant-delay enumeration of the outputs whose last position is
    /// the most recently ingested event. Must not interleave with steps.
    pub fn enumerate(&self) -> Enumerator<'_> {
        Enumerator::new(&self.dag, self.final_lists(), self.pos.wrapping_sub(1))
    }

    /// Outputs of the naive engine at the current position (the naive
    /// engine stores complex events explicitly instead of a DAG).
    pub fn naive_outputs(&self) -> Option<Vec<ComplexEvent>> {
        match &self.imp {
            Imp::Naive(e) => Some(
                e.outputs_at(self.pos.wrapping_sub(1))
                    .into_iter()
                    .map(|v| ComplexEvent::new(v.into_iter().map(|p| p as usize)))
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Snapshot of the final-state lists: constant-time lazycopies that
    /// stay valid for enumeration after further steps are ingested.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot { lists: self.final_lists(), now: self.pos.wrapping_sub(1) }
    }

    /// Enumerates a snapshot taken earlier, possibly after newer events
    /// have been ingested in between.
    pub fn enumerate_snapshot(&self, snap: &Snapshot) -> Enumerator<'_> {
        Enumerator::new(&self.dag, snap.lists.clone(), snap.now)
    }

    /// Engine-accounted memory: nodes and list cells in the arena.
    pub fn node_count(&self) -> usize {
        self.dag.node_count() + self.dag.cell_count() + self.naive_partials()
    }

    pub fn memory_bytes(&self) -> usize {
        self.dag.memory_bytes()
            + match &self.imp {
                Imp::Naive(e) => e.runs.iter().map(|(_, v)| 16 + 4 * v.len()).sum(),
                _ => 0,
            }
    }

    fn naive_partials(&self) -> usize {
        match &self.imp {
            Imp::Naive(e) => e.partial_count(),
            _ => 0,
        }
    }

    /// Drops nodes and cells unreachable from any live list head and
    /// rebuilds the arena. For long-running streams; not part of the
    /// default processing path.
    pub fn compact(&mut self) {
        let live: Vec<List> = match &self.imp {
            Imp::Det(e) => e.lists.clone(),
            Imp::Strict(e) => e.lists.clone(),
            Imp::Next(e) | Imp::Last(e) => e.lists.clone(),
            Imp::NDet(e) => e.lists.values().copied().collect(),
            Imp::Max(e) => e.lists.values().copied().collect(),
            Imp::Naive(_) => return,
        };
        let (new_dag, cell_map) = self.dag.retain_reachable(&live);
        self.dag = new_dag;
        let fix = |l: &mut List| *l = Dag::remap_list(*l, &cell_map);
        match &mut self.imp {
            Imp::Det(e) => e.lists.iter_mut().for_each(fix),
            Imp::Strict(e) => e.lists.iter_mut().for_each(fix),
            Imp::Next(e) | Imp::Last(e) => e.lists.iter_mut().for_each(fix),
            Imp::NDet(e) => e.lists.values_mut().for_each(fix),
            Imp::Max(e) => e.lists.values_mut().for_each(fix),
            Imp::Naive(_) => {}
        }
    }
}

/// Lazycopied final lists pinned to the position they were taken at.
pub struct Snapshot {
    lists: Vec<List>,
    now: usize,
}

/// Folds step + enumerate over a stream: the per-position output log.
pub fn run_query(engine: &mut Engine, s: &StreamPrefix) -> Vec<(usize, Vec<ComplexEvent>)> {
    let mut log = Vec::new();
    for (pos, t) in s.iter() {
        engine.step(t);
        let outs: Vec<ComplexEvent> = match engine.naive_outputs() {
            Some(outs) => outs,
            None => engine.enumerate().collect(),
        };
        let fired = !outs.is_empty();
        if fired {
            log.push((pos, outs));
        }
        if fired && engine.consumption_policy {
            engine.reset_to_initial();
        }
    }
    log
}

/// The union of a log's outputs as one set.
pub fn log_output_set(log: &[(usize, Vec<ComplexEvent>)]) -> OutputSet {
    log.iter().flat_map(|(_, outs)| outs.iter().cloned()).collect()
}
