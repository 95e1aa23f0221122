//! The fair-in-limit mechanism and its positive epsilon relaxations.
//!
//! Roots rule: every root except the top-ranked one gets 0; the top root
//! gets 1/2 when it is the only candidate, otherwise half the log-2 ratio
//! of its progeny to the largest progeny below it. The support of the
//! extension is exactly the candidate path, and the total never exceeds 1.

use crate::error::{Error, Result};
use crate::forest::{candidate_set_with, runner_up_progeny, Forest, ProgenyTable, Vertex};

/// Value the roots rule assigns to the top root of `forest`.
pub(crate) fn top_root_value(
    forest: &Forest,
    table: &ProgenyTable,
    children: &[Vec<Vertex>],
) -> f64 {
    let r1 = table.top_root();
    let path = candidate_set_with(forest, table);
    if path.len() == 1 {
        0.5
    } else {
        let below = runner_up_progeny(children, table, r1);
        0.5 * (table.pstar() as f64 / below as f64).log2()
    }
}

/// The roots rule itself: positive only at the top root.
pub fn roots_rule(forest: &Forest) -> Vec<f64> {
    let table = forest.progeny_table();
    let children = forest.children_lists();
    let mut probs = vec![0.0; forest.vertex_count()];
    probs[table.top_root()] = top_root_value(forest, &table, &children);
    probs
}

/// Full IC extension: each vertex is valued as a root of the forest with
/// its own out-edge removed.
pub fn distribution(forest: &Forest) -> Vec<f64> {
    let mut probs = vec![0.0; forest.vertex_count()];
    for x in forest.vertices() {
        let value = if forest.is_root(x) {
            root_value(forest, x)
        } else {
            root_value(&forest.remove_out_edge(x), x)
        };
        probs[x] = value;
    }
    probs
}

fn root_value(forest: &Forest, x: Vertex) -> f64 {
    let table = forest.progeny_table();
    if table.top_root() != x {
        return 0.0;
    }
    top_root_value(forest, &table, &forest.children_lists())
}

/// Closed form along the candidate path a_1..a_k: interior members get half
/// the log ratio of consecutive progenies, the deepest member falls back to
/// the roots rule in its own edge-removed forest. Must agree with
/// [`distribution`] everywhere; the audits check that.
pub fn closed_form(forest: &Forest) -> Vec<f64> {
    let table = forest.progeny_table();
    let path = candidate_set_with(forest, &table);
    let members = path.vertices();
    let mut probs = vec![0.0; forest.vertex_count()];
    if members.len() == 1 {
        probs[members[0]] = 0.5;
        return probs;
    }
    for w in members.windows(2) {
        let (below, here) = (w[0], w[1]);
        probs[here] =
            0.5 * (table.progeny(here) as f64 / table.progeny(below) as f64).log2();
    }
    let deepest = path.first();
    let h = forest.remove_out_edge(deepest);
    probs[deepest] = root_value(&h, deepest);
    probs
}

/// Positive roots rule: every root r gets the top value damped by
/// eps^(P* - P(r)), so root ratios depend only on progenies.
pub fn epsilon_roots_rule(forest: &Forest, eps: f64) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let table = forest.progeny_table();
    let children = forest.children_lists();
    let top = top_root_value(forest, &table, &children);
    let mut probs = vec![0.0; forest.vertex_count()];
    for &r in table.roots_ordered() {
        probs[r] = damped(top, eps, table.pstar() - table.progeny(r))?;
    }
    Ok(probs)
}

/// IC extension of the epsilon roots rule.
pub fn epsilon_distribution(forest: &Forest, eps: f64) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let mut probs = vec![0.0; forest.vertex_count()];
    for x in forest.vertices() {
        let owned;
        let h = if forest.is_root(x) {
            forest
        } else {
            owned = forest.remove_out_edge(x);
            &owned
        };
        let table = h.progeny_table();
        let top = top_root_value(h, &table, &h.children_lists());
        probs[x] = damped(top, eps, table.pstar() - table.progeny(x))?;
    }
    Ok(probs)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("epsilon must lie in (0,1), got {eps}")))
    }
}

fn damped(top: f64, eps: f64, gap: usize) -> Result<f64> {
    let value = top * eps.powi(gap as i32);
    if value == 0.0 || !value.is_normal() {
        return Err(Error::NumericalOverflow { epsilon: eps, gap });
    }
    Ok(value)
}
