//! Directed forests as parent maps, progeny tables, and the candidate path.
//!
//! A forest on `n` vertices is stored as a map `vertex -> Option<parent>`:
//! `parent[v]` is the head of `v`'s unique out-edge, `None` for a root.
//! Vertex ids are global identity; removing an out-edge never relabels.

use crate::error::{Error, Result};

pub type Vertex = usize;

/// Immutable labeled directed forest: out-degree <= 1, acyclic.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Forest {
    parent: Vec<Option<Vertex>>,
}

impl Forest {
    /// Validates the parent map: every entry in range, no self-loops,
    /// every parent chain terminates.
    pub fn new(parent: Vec<Option<Vertex>>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::EmptyForest);
        }
        for (v, &p) in parent.iter().enumerate() {
            if let Some(p) = p {
                if p >= n {
                    return Err(Error::IndexOutOfRange { vertex: v, parent: p, n });
                }
                if p == v {
                    return Err(Error::CycleDetected { vertex: v });
                }
            }
        }
        // 0 = unseen, 1 = on the current chain, 2 = known acyclic
        let mut state = vec![0u8; n];
        let mut chain = Vec::new();
        for v in 0..n {
            if state[v] != 0 {
                continue;
            }
            let mut u = v;
            loop {
                match state[u] {
                    1 => return Err(Error::CycleDetected { vertex: u }),
                    2 => break,
                    _ => {
                        state[u] = 1;
                        chain.push(u);
                        match parent[u] {
                            Some(p) => u = p,
                            None => break,
                        }
                    }
                }
            }
            for &w in &chain {
                state[w] = 2;
            }
            chain.clear();
        }
        Ok(Forest { parent })
    }

    /// Builds a forest on `n` vertices from `(child, parent)` edges;
    /// vertices not mentioned as a child become roots.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyForest);
        }
        let mut parent = vec![None; n];
        for &(child, head) in edges {
            if child >= n {
                return Err(Error::IndexOutOfRange { vertex: child, parent: head, n });
            }
            parent[child] = Some(head);
        }
        Forest::new(parent)
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parents(&self) -> &[Option<Vertex>] {
        &self.parent
    }

    pub fn parent_of(&self, v: Vertex) -> Option<Vertex> {
        self.parent[v]
    }

    pub fn is_root(&self, v: Vertex) -> bool {
        self.parent[v].is_none()
    }

    pub fn roots(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.is_none().then_some(v))
    }

    pub fn edge_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }

    pub fn vertices(&self) -> std::ops::Range<Vertex> {
        0..self.parent.len()
    }

    /// Children of every vertex, in increasing id order.
    pub fn children_lists(&self) -> Vec<Vec<Vertex>> {
        let mut children = vec![Vec::new(); self.parent.len()];
        for (v, &p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                children[p].push(v);
            }
        }
        children
    }

    /// The forest with `x`'s out-edge deleted; a new value, `self` untouched.
    /// Removing at a root returns an identical forest.
    pub fn remove_out_edge(&self, x: Vertex) -> Forest {
        let mut parent = self.parent.clone();
        parent[x] = None;
        Forest { parent }
    }

    /// Root of the tree containing each vertex.
    pub fn component_roots(&self) -> Vec<Vertex> {
        let n = self.parent.len();
        let mut root_of = vec![usize::MAX; n];
        let mut path = Vec::new();
        for v in 0..n {
            if root_of[v] != usize::MAX {
                continue;
            }
            let mut u = v;
            while root_of[u] == usize::MAX {
                path.push(u);
                match self.parent[u] {
                    Some(p) => u = p,
                    None => break,
                }
            }
            let r = if root_of[u] != usize::MAX { root_of[u] } else { u };
            for w in path.drain(..) {
                root_of[w] = r;
            }
        }
        root_of
    }

    pub fn progeny_table(&self) -> ProgenyTable {
        ProgenyTable::new(self)
    }
}

impl std::fmt::Debug for Forest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Forest{:?}", self.parent)
    }
}

/// Total order on vertices: progeny descending, ties broken by id ascending.
/// `precedes(px, x, py, y)` is true when `x` strictly outranks `y`.
pub fn precedes(px: usize, x: Vertex, py: usize, y: Vertex) -> bool {
    px > py || (px == py && x < y)
}

/// Progenies of every vertex plus the root ordering they induce.
#[derive(Clone, Debug)]
pub struct ProgenyTable {
    progeny: Vec<usize>,
    roots_ordered: Vec<Vertex>,
}

impl ProgenyTable {
    fn new(forest: &Forest) -> Self {
        let n = forest.vertex_count();
        let mut progeny = vec![1usize; n];
        let mut pending = vec![0usize; n];
        for v in 0..n {
            if let Some(p) = forest.parent_of(v) {
                pending[p] += 1;
            }
        }
        let mut stack: Vec<Vertex> = (0..n).filter(|&v| pending[v] == 0).collect();
        while let Some(v) = stack.pop() {
            if let Some(p) = forest.parent_of(v) {
                progeny[p] += progeny[v];
                pending[p] -= 1;
                if pending[p] == 0 {
                    stack.push(p);
                }
            }
        }
        let mut roots_ordered: Vec<Vertex> = forest.roots().collect();
        roots_ordered.sort_by_key(|&r| (std::cmp::Reverse(progeny[r]), r));
        ProgenyTable { progeny, roots_ordered }
    }

    pub fn progeny(&self, v: Vertex) -> usize {
        self.progeny[v]
    }

    pub fn values(&self) -> &[usize] {
        &self.progeny
    }

    /// Maximal progeny P*.
    pub fn pstar(&self) -> usize {
        self.progeny[self.roots_ordered[0]]
    }

    /// Roots in strictly decreasing order (progeny desc, id asc on ties).
    pub fn roots_ordered(&self) -> &[Vertex] {
        &self.roots_ordered
    }

    /// The top-ranked root r_1.
    pub fn top_root(&self) -> Vertex {
        self.roots_ordered[0]
    }

    pub fn second_root(&self) -> Option<Vertex> {
        self.roots_ordered.get(1).copied()
    }

    /// True when `x` strictly outranks `y` in the vertex order.
    pub fn outranks(&self, x: Vertex, y: Vertex) -> bool {
        precedes(self.progeny[x], x, self.progeny[y], y)
    }
}

/// Largest progeny strictly inside `x`'s subtree (0 for a leaf).
/// It is attained at one of `x`'s direct children.
pub fn runner_up_progeny(children: &[Vec<Vertex>], table: &ProgenyTable, x: Vertex) -> usize {
    children[x]
        .iter()
        .map(|&c| table.progeny(c))
        .max()
        .unwrap_or(0)
}

/// The candidate path: vertices that would top the root order after deleting
/// their own out-edge, listed by increasing progeny and ending at r_1.
/// Always a directed path along out-edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidatePath {
    vertices: Vec<Vertex>,
}

impl CandidatePath {
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.contains(&v)
    }

    /// The deepest member a_1 (smallest progeny).
    pub fn first(&self) -> Vertex {
        self.vertices[0]
    }

    /// Checks that consecutive members are linked by out-edge chains.
    pub fn is_out_edge_path(&self, forest: &Forest) -> bool {
        self.vertices.windows(2).all(|w| {
            let (lo, hi) = (w[0], w[1]);
            let mut u = lo;
            loop {
                match forest.parent_of(u) {
                    Some(p) if p == hi => return true,
                    Some(p) => u = p,
                    None => return false,
                }
            }
        })
    }
}

/// Computes the candidate path of `forest`.
pub fn candidate_set(forest: &Forest) -> CandidatePath {
    candidate_set_with(forest, &forest.progeny_table())
}

/// As [`candidate_set`], reusing a progeny table.
///
/// Membership test: x lies in r_1's tree, doubled progeny beats P(r_1)
/// (ties against r_1's id), and x outranks the second root. This matches
/// the defining property x = r_1 after deleting x's own out-edge; the
/// equivalence is checked exhaustively in tests.
pub fn candidate_set_with(forest: &Forest, table: &ProgenyTable) -> CandidatePath {
    let r1 = table.top_root();
    let p1 = table.pstar();
    let r2 = table.second_root();
    let root_of = forest.component_roots();
    let mut members: Vec<Vertex> = forest
        .vertices()
        .filter(|&x| {
            if root_of[x] != r1 {
                return false;
            }
            let px = table.progeny(x);
            let beats_half = 2 * px > p1 || (2 * px == p1 && x < r1);
            let beats_r2 = match r2 {
                Some(r2) => table.outranks(x, r2),
                None => true,
            };
            beats_half && beats_r2
        })
        .collect();
    members.sort_by_key(|&x| table.progeny(x));
    let path = CandidatePath { vertices: members };
    debug_assert!(path.is_out_edge_path(forest));
    debug_assert_eq!(*path.vertices.last().unwrap(), r1);
    path
}
