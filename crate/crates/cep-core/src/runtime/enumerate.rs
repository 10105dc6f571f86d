//! Constant-delay enumeration of the output structure.
//!
//! Depth-first traversal of the node DAG driven by an explicit
//! black-white stack: an entry is black while its child iterator has
//! cells left and white once exhausted. Hitting the bottom sink yields
//! the positions on the stack as one complex event; backtracking then
//! pops the maximal white suffix in a single step through the
//! nearest-black link each entry carries, so the work between two
//! consecutive outputs stays bounded by a constant.

use crate::oracle::ComplexEvent;

use super::dag::{CellId, Dag, List, NodeId, BOTTOM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Color {
    Black,
    White,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    /// next child cell to take, with the list's recorded end
    cursor: Option<(CellId, CellId)>,
    color: Color,
    /// index of the nearest black entry strictly below, or NONE
    below_black: u32,
    /// buffer length including this entry's position
    buf_len: u32,
}

const NONE: u32 = u32::MAX;

/// Counters for the constant-delay property: `gap` operations are the
/// bookkeeping between finishing one output and starting the next;
/// everything charged to writing an output is accounted separately.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnumStats {
    pub yields: u64,
    pub max_gap_ops: u64,
    pub total_gap_ops: u64,
    pub output_ops: u64,
}

pub struct Enumerator<'a> {
    dag: &'a Dag,
    /// final-state lists still to drain, with their cursor
    roots: Vec<List>,
    root_cursor: Option<(CellId, CellId)>,
    now: usize,
    stack: Vec<Entry>,
    buf: Vec<usize>,
    gap_ops: u64,
    stats: EnumStats,
}

impl<'a> Enumerator<'a> {
    /// Enumerates the outputs at position `now`: for each final-state
    /// list, the head nodes stamped `now` and every path below them.
    pub fn new(dag: &'a Dag, final_lists: Vec<List>, now: usize) -> Enumerator<'a> {
        Enumerator {
            dag,
            roots: final_lists,
            root_cursor: None,
            now,
            stack: Vec::new(),
            buf: Vec::new(),
            gap_ops: 0,
            stats: EnumStats::default(),
        }
    }

    pub fn stats(&self) -> EnumStats {
        self.stats
    }

    fn push_entry(&mut self, node: NodeId) {
        self.stats.output_ops += 1;
        let n = self.dag.node(node);
        self.buf.push(n.position);
        let below_black = match self.stack.last() {
            Some(top) if top.color == Color::Black => (self.stack.len() - 1) as u32,
            Some(top) => top.below_black,
            None => NONE,
        };
        self.stack.push(Entry {
            cursor: self.dag.list_bounds(n.children),
            color: Color::Black,
            below_black,
            buf_len: self.buf.len() as u32,
        });
    }

    /// Pops the maximal white suffix in one step.
    fn pop_whites(&mut self) {
        self.gap_ops += 1;
        let Some(top) = self.stack.last() else {
            return;
        };
        let new_len = if top.color == Color::Black {
            return;
        } else if top.below_black == NONE {
            0
        } else {
            top.below_black as usize + 1
        };
        self.stack.truncate(new_len);
        let buf_len = self.stack.last().map_or(0, |e| e.buf_len as usize);
        self.buf.truncate(buf_len);
    }

    fn next_root(&mut self) -> Option<NodeId> {
        loop {
            if let Some((cell, end)) = self.root_cursor {
                self.gap_ops += 1;
                let node = self.dag.cell_node(cell);
                self.root_cursor = self.dag.cell_next(cell, end).map(|c| (c, end));
                // new nodes sit at the front; stop at the first older one
                if node != BOTTOM && self.dag.node(node).position == self.now {
                    return Some(node);
                }
                self.root_cursor = None;
                continue;
            }
            let list = self.roots.pop()?;
            self.gap_ops += 1;
            self.root_cursor = self.dag.list_bounds(list);
        }
    }
}

impl Iterator for Enumerator<'_> {
    type Item = ComplexEvent;

    fn next(&mut self) -> Option<ComplexEvent> {
        loop {
            if self.stack.is_empty() {
                let root = self.next_root()?;
                self.push_entry(root);
            }
            let top_index = self.stack.len() - 1;
            let entry = &mut self.stack[top_index];
            let Some((cell, end)) = entry.cursor else {
                unreachable!("exhausted entries are popped before being revisited");
            };
            entry.cursor = self.dag.cell_next(cell, end).map(|c| (c, end));
            if entry.cursor.is_none() {
                entry.color = Color::White;
            }
            let child = self.dag.cell_node(cell);
            if child == BOTTOM {
                self.gap_ops += 1;
                let event = ComplexEvent::new(self.buf.iter().copied());
                self.stats.output_ops += self.buf.len() as u64;
                self.pop_whites();
                self.stats.yields += 1;
                self.stats.total_gap_ops += self.gap_ops;
                self.stats.max_gap_ops = self.stats.max_gap_ops.max(self.gap_ops);
                self.gap_ops = 0;
                return Some(event);
            }
            self.push_entry(child);
        }
    }
}
