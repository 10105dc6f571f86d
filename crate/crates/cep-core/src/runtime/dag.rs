//! The shared, append-only output structure: nodes carry a stream
//! position and a child list; every root-to-bottom path spells one
//! complex event in descending position order.
//!
//! Lists are pairs of cell pointers (start, end). Nothing is ever
//! removed, so a copied (start, end) pair is a constant-time snapshot
//! that later appends cannot disturb: traversal stops at the recorded
//! end cell regardless of what its successor pointer becomes.

pub type NodeId = u32;
pub type CellId = u32;

/// The sink terminating every path.
pub const BOTTOM: NodeId = 0;

const NIL: CellId = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Cell {
    node: NodeId,
    next: CellId,
}

#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub position: usize,
    pub children: List,
}

/// A logical list of nodes: `None` is the empty list, otherwise the
/// (start, end) cell pair. `Copy` is the constant-time lazycopy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct List(Option<(CellId, CellId)>);

impl List {
    pub const EMPTY: List = List(None);

    pub fn is_empty(self) -> bool {
        self.0.is_none()
    }
}

#[derive(Debug)]
pub struct Dag {
    nodes: Vec<Node>,
    cells: Vec<Cell>,
}

impl Default for Dag {
    fn default() -> Self {
        Dag::new()
    }
}

impl Dag {
    pub fn new() -> Dag {
        Dag {
            nodes: vec![Node { position: usize::MAX, children: List::EMPTY }],
            cells: Vec::new(),
        }
    }

    /// Drops every node and cell; only meaningful when no list into the
    /// arena is kept alive (the consumption-policy reset).
    pub fn clear(&mut self) {
        self.nodes.truncate(1);
        self.cells.clear();
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Estimated resident bytes of the structure.
    pub fn memory_bytes(&self) -> usize {
        self.nodes.len() * std::mem::size_of::<Node>()
            + self.cells.len() * std::mem::size_of::<Cell>()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    /// Creates a node; non-bottom nodes must have at least one child.
    pub fn new_node(&mut self, position: usize, children: List) -> NodeId {
        debug_assert!(!children.is_empty(), "a match node always has a predecessor");
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node { position, children });
        id
    }

    fn new_cell(&mut self, node: NodeId) -> CellId {
        let id = self.cells.len() as CellId;
        self.cells.push(Cell { node, next: NIL });
        id
    }

    /// Prepends a node to the list.
    pub fn add(&mut self, list: List, node: NodeId) -> List {
        let cell = self.new_cell(node);
        match list.0 {
            None => List(Some((cell, cell))),
            Some((start, end)) => {
                self.cells[cell as usize].next = start;
                List(Some((cell, end)))
            }
        }
    }

    /// A fresh single-cell list holding the bottom sink.
    pub fn bottom_list(&mut self) -> List {
        let cell = self.new_cell(BOTTOM);
        List(Some((cell, cell)))
    }

    /// Concatenates `other` after `list`. Mutates the physical end of
    /// `list`, which by the once-per-step append discipline is never the
    /// recorded end of a snapshot someone still extends through.
    pub fn append(&mut self, list: List, other: List) -> List {
        match (list.0, other.0) {
            (None, _) => other,
            (_, None) => list,
            (Some((s1, e1)), Some((s2, e2))) => {
                debug_assert_eq!(self.cells[e1 as usize].next, NIL, "end cell already chained");
                self.cells[e1 as usize].next = s2;
                List(Some((s1, e2)))
            }
        }
    }

    pub fn iter_list(&self, list: List) -> ListIter<'_> {
        ListIter { dag: self, cur: list.0.map(|(s, _)| s), end: list.0.map(|(_, e)| e) }
    }

    /// First cell of the list, for cursor-style traversal.
    pub fn list_bounds(&self, list: List) -> Option<(CellId, CellId)> {
        list.0
    }

    pub fn cell_node(&self, cell: CellId) -> NodeId {
        self.cells[cell as usize].node
    }

    /// Next cell within a bounded traversal: `None` at the recorded end.
    pub fn cell_next(&self, cell: CellId, end: CellId) -> Option<CellId> {
        if cell == end {
            None
        } else {
            let next = self.cells[cell as usize].next;
            debug_assert_ne!(next, NIL, "list chain broken before the recorded end");
            Some(next)
        }
    }
}

impl Dag {
    /// Copies the structure reachable from the given lists into a fresh
    /// arena, returning it with the old-to-new cell id map. Traversal is
    /// bounded by each list's recorded end, exactly like enumeration, so
    /// anything no enumeration could reach is dropped.
    pub fn retain_reachable(
        &self,
        live: &[List],
    ) -> (Dag, std::collections::HashMap<CellId, CellId>) {
        use std::collections::HashMap;
        let mut cell_map: HashMap<CellId, CellId> = HashMap::new();
        let mut node_map: HashMap<NodeId, NodeId> = HashMap::new();
        node_map.insert(BOTTOM, BOTTOM);
        let mut new = Dag::new();
        let mut cells_old: Vec<CellId> = Vec::new();
        let mut work: Vec<List> = live.to_vec();
        while let Some(list) = work.pop() {
            let Some((start, end)) = list.0 else { continue };
            let mut cur = Some(start);
            while let Some(cell) = cur {
                if let std::collections::hash_map::Entry::Vacant(slot) = cell_map.entry(cell) {
                    let new_id = new.cells.len() as CellId;
                    new.cells.push(Cell { node: BOTTOM, next: NIL });
                    slot.insert(new_id);
                    cells_old.push(cell);
                    let node = self.cells[cell as usize].node;
                    if let std::collections::hash_map::Entry::Vacant(nslot) = node_map.entry(node) {
                        let new_node = new.nodes.len() as NodeId;
                        new.nodes.push(self.nodes[node as usize]);
                        nslot.insert(new_node);
                        work.push(self.nodes[node as usize].children);
                    }
                }
                cur = self.cell_next(cell, end);
            }
        }
        for &old_cell in &cells_old {
            let new_id = cell_map[&old_cell];
            let old = self.cells[old_cell as usize];
            new.cells[new_id as usize] = Cell {
                node: node_map[&old.node],
                next: match cell_map.get(&old.next) {
                    Some(n) => *n,
                    None => NIL,
                },
            };
        }
        for node in new.nodes.iter_mut().skip(1) {
            node.children = Dag::remap_list(node.children, &cell_map);
        }
        (new, cell_map)
    }

    pub fn remap_list(list: List, cell_map: &std::collections::HashMap<CellId, CellId>) -> List {
        match list.0 {
            None => List::EMPTY,
            Some((s, e)) => List(Some((cell_map[&s], cell_map[&e]))),
        }
    }
}

pub struct ListIter<'a> {
    dag: &'a Dag,
    cur: Option<CellId>,
    end: Option<CellId>,
}

impl Iterator for ListIter<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let cell = self.cur?;
        let node = self.dag.cell_node(cell);
        self.cur = self.dag.cell_next(cell, self.end.unwrap());
        Some(node)
    }
}
