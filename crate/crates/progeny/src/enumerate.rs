//! Exhaustive enumeration of labeled forests on n vertices.
//!
//! A forest is an acyclic parent function, so enumeration walks all
//! assignments `parent[v] in {none, 0..n-1} \ {v}` in lexicographic order
//! (none < 0 < 1 < ...) and keeps the acyclic ones. There are
//! (n+1)^(n-1) of them.

use crate::error::{Error, Result};
use crate::forest::{Forest, Vertex};

/// Default cap on n; audits beyond this take too long to be useful.
pub const DEFAULT_CAP: usize = 7;

/// Number of labeled forests on n vertices: (n+1)^(n-1).
pub fn count(n: usize) -> usize {
    (n + 1)
        .checked_pow(n as u32 - 1)
        .expect("forest count exceeds usize")
}

/// Streams every labeled forest on `n` vertices exactly once.
pub fn forests(n: usize) -> Result<ForestIter> {
    forests_with_cap(n, DEFAULT_CAP)
}

/// As [`forests`] with an explicit cap.
pub fn forests_with_cap(n: usize, cap: usize) -> Result<ForestIter> {
    if n == 0 {
        return Err(Error::EmptyForest);
    }
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    Ok(ForestIter {
        n,
        next: Some(vec![None; n]),
    })
}

#[derive(Debug)]
pub struct ForestIter {
    n: usize,
    // next candidate assignment to test, lexicographically
    next: Option<Vec<Option<Vertex>>>,
}

impl ForestIter {
    /// Advances `assignment` to its lexicographic successor, skipping
    /// self-loops. Returns false once the space is exhausted.
    fn advance(n: usize, assignment: &mut [Option<Vertex>]) -> bool {
        for v in (0..n).rev() {
            let succ = match assignment[v] {
                None => Some(0),
                Some(p) if p + 1 < n => Some(p + 1),
                Some(_) => None,
            };
            match succ {
                Some(mut p) => {
                    if p == v {
                        p += 1;
                        if p >= n {
                            assignment[v] = None;
                            continue;
                        }
                    }
                    assignment[v] = Some(p);
                    return true;
                }
                None => assignment[v] = None,
            }
        }
        false
    }
}

impl Iterator for ForestIter {
    type Item = Forest;

    fn next(&mut self) -> Option<Forest> {
        loop {
            let current = self.next.as_mut()?;
            let candidate = current.clone();
            if !Self::advance(self.n, current) {
                self.next = None;
            }
            if let Ok(f) = Forest::new(candidate) {
                return Some(f);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Independent oracle: all (n)^... base-(n+1) parent tuples, filtered by
    /// an ad-hoc cycle walk, collected into a set.
    fn brute_force_forests(n: usize) -> HashSet<Vec<Option<usize>>> {
        let mut out = HashSet::new();
        let total = (n + 1).pow(n as u32);
        'outer: for code in 0..total {
            let mut digits = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                digits.push(c % (n + 1));
                c /= n + 1;
            }
            let parent: Vec<Option<usize>> = digits
                .iter()
                .map(|&d| if d == 0 { None } else { Some(d - 1) })
                .collect();
            for (v, &p) in parent.iter().enumerate() {
                if p == Some(v) {
                    continue 'outer;
                }
            }
            for start in 0..n {
                let mut u = start;
                let mut steps = 0;
                while let Some(p) = parent[u] {
                    u = p;
                    steps += 1;
                    if steps > n {
                        continue 'outer;
                    }
                }
            }
            out.insert(parent);
        }
        out
    }

    #[test]
    fn counts_match_formula_and_oracle() {
        for n in 1..=6 {
            let listed: Vec<_> = forests(n).unwrap().collect();
            assert_eq!(listed.len(), count(n), "count formula at n={n}");
            let distinct: HashSet<_> =
                listed.iter().map(|f| f.parents().to_vec()).collect();
            assert_eq!(distinct.len(), listed.len(), "duplicates at n={n}");
            assert_eq!(distinct, brute_force_forests(n), "oracle at n={n}");
        }
    }

    #[test]
    fn small_counts() {
        assert_eq!(count(1), 1);
        assert_eq!(count(3), 16);
        assert_eq!(count(5), 1296);
        assert_eq!(count(6), 16807);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            forests(8).unwrap_err(),
            Error::CapExceeded { n: 8, cap: 7 }
        ));
        assert!(forests_with_cap(8, 8).is_ok());
    }
}
