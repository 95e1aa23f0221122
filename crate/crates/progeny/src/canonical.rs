//! Canonical codes for rooted forests and automorphism orbits.
//!
//! The code of a vertex is the parenthesized multiset of its children's
//! codes; the code of a forest is the sorted concatenation of its root
//! codes. Two forests get equal codes iff they are isomorphic as labeled-
//! free rooted forests. Two vertices share an orbit iff some automorphism
//! maps one to the other, which holds exactly when their codes match and
//! (for non-roots) their parents share an orbit.

use std::collections::HashMap;

use crate::forest::{Forest, Vertex};

#[derive(Clone, Debug)]
pub struct CanonicalForm {
    code: String,
    orbit_id: Vec<usize>,
    orbits: Vec<Vec<Vertex>>,
}

impl CanonicalForm {
    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn orbit_of(&self, v: Vertex) -> usize {
        self.orbit_id[v]
    }

    pub fn same_orbit(&self, u: Vertex, v: Vertex) -> bool {
        self.orbit_id[u] == self.orbit_id[v]
    }

    /// Orbit partition; each class sorted, classes ordered by first member.
    pub fn orbits(&self) -> &[Vec<Vertex>] {
        &self.orbits
    }
}

pub fn canonical_form(forest: &Forest) -> CanonicalForm {
    let n = forest.vertex_count();
    let children = forest.children_lists();

    // Subtree codes, post-order.
    let mut code: Vec<Option<String>> = vec![None; n];
    let mut stack: Vec<(Vertex, bool)> = forest.roots().map(|r| (r, false)).collect();
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            let mut parts: Vec<&str> =
                children[v].iter().map(|&c| code[c].as_deref().unwrap()).collect();
            parts.sort_unstable();
            let mut s = String::with_capacity(2 + parts.iter().map(|p| p.len()).sum::<usize>());
            s.push('(');
            for p in parts {
                s.push_str(p);
            }
            s.push(')');
            code[v] = Some(s);
        } else {
            stack.push((v, true));
            for &c in &children[v] {
                stack.push((c, false));
            }
        }
    }

    let mut root_codes: Vec<&str> = forest.roots().map(|r| code[r].as_deref().unwrap()).collect();
    root_codes.sort_unstable();
    let forest_code: String = root_codes.concat();

    // Orbit ids: intern (parent orbit, own code) pairs, parents before
    // children. usize::MAX marks "is a root".
    let mut orbit_id = vec![usize::MAX; n];
    let mut intern: HashMap<(usize, &str), usize> = HashMap::new();
    let mut order: Vec<Vertex> = forest.roots().collect();
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        i += 1;
        order.extend(children[v].iter().copied());
        let parent_orbit = match forest.parent_of(v) {
            Some(p) => orbit_id[p],
            None => usize::MAX,
        };
        let next = intern.len();
        let id = *intern
            .entry((parent_orbit, code[v].as_deref().unwrap()))
            .or_insert(next);
        orbit_id[v] = id;
    }

    let mut orbits: Vec<Vec<Vertex>> = vec![Vec::new(); intern.len()];
    for v in 0..n {
        orbits[orbit_id[v]].push(v);
    }
    orbits.sort_by_key(|class| class[0]);
    // renumber so ids follow the sorted class order
    let mut orbit_id = vec![0usize; n];
    for (id, class) in orbits.iter().enumerate() {
        for &v in class {
            orbit_id[v] = id;
        }
    }

    CanonicalForm {
        code: forest_code,
        orbit_id,
        orbits,
    }
}
