//! Function-generated mechanisms and generator extraction.
//!
//! Non-root probabilities are forced by the IC extension; the roots then
//! split whatever remains of 1 in proportion to f(progeny). Root shares may
//! come out negative when the forced non-root mass already exceeds 1 - that
//! is reported, never clamped, since the excess is the whole point of the
//! over-distribution demonstration.
//!
//! Evaluation is label-free: shares depend only on progenies, so the value
//! of a vertex is invariant under automorphisms. The recursion over
//! edge-deleted sub-forests therefore memoizes on interned shapes (run-
//! length-encoded child multisets) instead of parent maps, collapsing the
//! exponential labeled lattice to its isomorphism classes. A naive labeled
//! evaluator in the tests cross-checks this path.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::forest::{Forest, Vertex};
use crate::mechanism::{evaluate, GeneratorTable, MechanismSpec};

type ShapeId = u32;
type ClassId = u32;
/// Run-length-encoded multiset of ids, sorted by id.
type Rle = Box<[(u32, u32)]>;

/// Fx-style hasher for the interning maps: memo keys only, never ordering.
#[derive(Default)]
struct FxHasher(u64);

impl Hasher for FxHasher {
    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.0 = (self.0.rotate_left(5) ^ u64::from_le_bytes(buf))
                .wrapping_mul(0x517c_c1b7_2722_0a95);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

type FastMap<K, V> = HashMap<K, V, BuildHasherDefault<FxHasher>>;

/// Removes one copy of `remove` (if given) and adds one copy of each id in
/// `add`, keeping the encoding sorted.
fn rle_edit(base: &[(u32, u32)], remove: Option<u32>, add: &[u32]) -> Rle {
    let mut v: Vec<(u32, u32)> = base.to_vec();
    if let Some(r) = remove {
        let i = v
            .iter()
            .position(|&(id, _)| id == r)
            .expect("removed id must be present");
        if v[i].1 == 1 {
            v.remove(i);
        } else {
            v[i].1 -= 1;
        }
    }
    for &a in add {
        match v.binary_search_by_key(&a, |&(id, _)| id) {
            Ok(i) => v[i].1 += 1,
            Err(i) => v.insert(i, (a, 1)),
        }
    }
    v.into_boxed_slice()
}

fn rle_from_sorted(ids: &[u32]) -> Rle {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &id in ids {
        match out.last_mut() {
            Some((last, c)) if *last == id => *c += 1,
            _ => out.push((id, 1)),
        }
    }
    out.into_boxed_slice()
}

/// One automorphism orbit of non-root vertices in a tree shape: `mult`
/// vertices, each detaching to shape `detached` and leaving `remainder`.
#[derive(Clone, Copy, Debug)]
struct Detach {
    mult: u64,
    detached: ShapeId,
    remainder: ShapeId,
}

/// Interned rooted-tree shapes.
struct Shapes {
    by_children: FastMap<Rle, ShapeId>,
    children: Vec<Rle>,
    size: Vec<usize>,
    orbit_cache: Vec<Option<Rc<[Detach]>>>,
}

impl Shapes {
    fn new() -> Self {
        Shapes {
            by_children: FastMap::default(),
            children: Vec::new(),
            size: Vec::new(),
            orbit_cache: Vec::new(),
        }
    }

    fn intern(&mut self, children: Rle) -> ShapeId {
        if let Some(&id) = self.by_children.get(&children) {
            return id;
        }
        let size = 1 + children
            .iter()
            .map(|&(s, c)| self.size[s as usize] * c as usize)
            .sum::<usize>();
        let id = self.children.len() as ShapeId;
        self.children.push(children.clone());
        self.size.push(size);
        self.orbit_cache.push(None);
        self.by_children.insert(children, id);
        id
    }

    /// Non-root orbits of shape `t`: for every distinct child shape, the
    /// orbit of whole-child detachments plus, recursively, the orbits
    /// inside one representative child scaled by the child count.
    fn orbits(&mut self, t: ShapeId) -> Rc<[Detach]> {
        if let Some(cached) = &self.orbit_cache[t as usize] {
            return Rc::clone(cached);
        }
        let children = self.children[t as usize].clone();
        let mut out: Vec<Detach> = Vec::new();
        for &(s, c) in children.iter() {
            out.push(Detach {
                mult: c as u64,
                detached: s,
                remainder: self.intern(rle_edit(&children, Some(s), &[])),
            });
            for d in self.orbits(s).iter() {
                out.push(Detach {
                    mult: c as u64 * d.mult,
                    detached: d.detached,
                    remainder: self.intern(rle_edit(&children, Some(s), &[d.remainder])),
                });
            }
        }
        let rc: Rc<[Detach]> = out.into();
        self.orbit_cache[t as usize] = Some(Rc::clone(&rc));
        rc
    }
}

/// Evaluator for one generator table; reusable across forests so related
/// evaluations (the over-distribution demo runs seven) share the lattice.
pub(crate) struct FgEngine<'t> {
    table: &'t GeneratorTable,
    shapes: Shapes,
    by_roots: FastMap<Rle, ClassId>,
    class_roots: Vec<Rle>,
    class_fsum: Vec<f64>,
    class_mass: Vec<Option<f64>>,
}

impl<'t> FgEngine<'t> {
    pub(crate) fn new(table: &'t GeneratorTable) -> Self {
        FgEngine {
            table,
            shapes: Shapes::new(),
            by_roots: FastMap::default(),
            class_roots: Vec::new(),
            class_fsum: Vec::new(),
            class_mass: Vec::new(),
        }
    }

    // domain is validated once per distribution() call
    fn fvalue(&self, size: usize) -> f64 {
        self.table.values()[size - 1]
    }

    fn class_of(&mut self, roots: Rle) -> ClassId {
        if let Some(&id) = self.by_roots.get(&roots) {
            return id;
        }
        let fsum = roots
            .iter()
            .map(|&(s, c)| c as f64 * self.fvalue(self.shapes.size[s as usize]))
            .sum();
        let id = self.class_roots.len() as ClassId;
        self.class_roots.push(roots.clone());
        self.class_fsum.push(fsum);
        self.class_mass.push(None);
        self.by_roots.insert(roots, id);
        id
    }

    /// Total probability forced onto non-roots, by sub-forest recursion
    /// grouped over automorphism orbits.
    fn mass(&mut self, class: ClassId) -> f64 {
        if let Some(m) = self.class_mass[class as usize] {
            return m;
        }
        let roots = self.class_roots[class as usize].clone();
        let mut total = 0.0;
        for &(t, ct) in roots.iter() {
            for d in self.shapes.orbits(t).iter() {
                let next = self.class_of(rle_edit(&roots, Some(t), &[d.remainder, d.detached]));
                let w = self.fvalue(self.shapes.size[d.detached as usize])
                    / self.class_fsum[next as usize];
                total += (ct as f64) * (d.mult as f64) * w * (1.0 - self.mass(next));
            }
        }
        self.class_mass[class as usize] = Some(total);
        total
    }

    /// Shape class of a labeled forest.
    fn labeled_class(&mut self, forest: &Forest) -> ClassId {
        let n = forest.vertex_count();
        let children = forest.children_lists();
        let mut shape: Vec<ShapeId> = vec![0; n];
        let mut stack: Vec<(Vertex, bool)> = forest.roots().map(|r| (r, false)).collect();
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                let mut ids: Vec<u32> = children[v].iter().map(|&c| shape[c]).collect();
                ids.sort_unstable();
                shape[v] = self.shapes.intern(rle_from_sorted(&ids));
            } else {
                stack.push((v, true));
                for &c in &children[v] {
                    stack.push((c, false));
                }
            }
        }
        let mut root_ids: Vec<u32> = forest.roots().map(|r| shape[r]).collect();
        root_ids.sort_unstable();
        self.class_of(rle_from_sorted(&root_ids))
    }

    pub(crate) fn distribution(&mut self, forest: &Forest) -> Result<Vec<f64>> {
        let n = forest.vertex_count();
        let table = forest.progeny_table();
        // every progeny reachable by edge removal is at most P*
        if self.table.len() < table.pstar() {
            return Err(Error::GeneratorDomain {
                needed: table.pstar(),
                len: self.table.len(),
            });
        }
        let mut probs = vec![0.0; n];
        let mut nonroot_sum = 0.0;
        for x in forest.vertices() {
            if forest.is_root(x) {
                continue;
            }
            let class = self.labeled_class(&forest.remove_out_edge(x));
            let w = self.fvalue(table.progeny(x)) / self.class_fsum[class as usize];
            probs[x] = w * (1.0 - self.mass(class));
            nonroot_sum += probs[x];
        }
        let residual = 1.0 - nonroot_sum;
        let fsum: f64 = forest.roots().map(|r| self.fvalue(table.progeny(r))).sum();
        for r in forest.roots() {
            probs[r] = self.fvalue(table.progeny(r)) / fsum * residual;
        }
        Ok(probs)
    }
}

/// Recovers the generating function of a mechanism from star probes: f(k)
/// is the probability ratio between a k-star's center and an isolated
/// vertex in the forest holding just that star plus isolated vertices,
/// with f(1) = 1. The table covers progenies 1..=n-1; every probe keeps at
/// least one isolated vertex.
pub fn extract_generator(spec: &MechanismSpec, n: usize) -> Result<GeneratorTable> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("extraction needs n >= 2, got {n}")));
    }
    let mut values = vec![1.0];
    for k in 2..n {
        let mut parent = vec![None; n];
        parent[1..k].fill(Some(0));
        let probe = Forest::new(parent).expect("star probe is a valid forest");
        let d = evaluate(spec, &probe)?;
        let isolated = d.get(k);
        if isolated.is_nan() || isolated <= 0.0 {
            return Err(Error::ZeroDenominator { k, value: isolated });
        }
        values.push(d.get(0) / isolated);
    }
    GeneratorTable::new(values)
}
