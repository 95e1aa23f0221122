//! The exact mechanism and the interval-share reference it corrects.
//!
//! Both build on the same picture: the interval (P*/2, P*] is owned, within
//! each tree, by the path of vertices whose progeny exceeds P*/2; a point z
//! is claimed by one vertex per tree with root progeny >= z, and the u(z)
//! claimants split dz/(z ln 2) evenly. Integrating gives the interval-share
//! distribution, which sums to exactly 1 but is not IC. The exact mechanism
//! keeps that rule for every root below the top and hands the top root the
//! complement to 1, which makes the IC extension exact.

use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::forest::{runner_up_progeny, Forest, ProgenyTable, Vertex};

/// (1/ln 2) * integral over (lo, hi] of dz / (z * u(z)), where u(z) counts
/// the root progenies >= z. Computed exactly as a sum over the maximal
/// segments on which u is constant: log2 of the endpoint ratio over u.
pub fn piecewise_log_integral(lo: f64, hi: f64, root_progenies: &[usize]) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() || lo <= 0.0 || hi < lo {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    if lo == hi {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = root_progenies
        .iter()
        .map(|&p| p as f64)
        .filter(|&p| p > lo && p < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut acc = 0.0;
    let mut z0 = lo;
    for z1 in cuts.into_iter().chain(std::iter::once(hi)) {
        // u is constant on (z0, z1]: the count of progenies >= z1
        let u = root_progenies.iter().filter(|&&p| p as f64 >= z1).count();
        if u == 0 {
            return Err(Error::DegenerateInterval { lo: z0, hi: z1 });
        }
        acc += (z1 / z0).log2() / u as f64;
        z0 = z1;
    }
    Ok(acc)
}

fn root_progenies(table: &ProgenyTable) -> Vec<usize> {
    table.roots_ordered().iter().map(|&r| table.progeny(r)).collect()
}

/// Share of the interval owned by vertex `x`: from max{runner-up below x,
/// P*/2} up to P(x). Zero when x does not clear the midpoint.
fn owned_share(
    table: &ProgenyTable,
    children: &[Vec<Vertex>],
    progenies: &[usize],
    x: Vertex,
) -> Result<f64> {
    let px = table.progeny(x);
    if 2 * px <= table.pstar() {
        return Ok(0.0);
    }
    let lo = (runner_up_progeny(children, table, x) as f64).max(table.pstar() as f64 / 2.0);
    piecewise_log_integral(lo, px as f64, progenies)
}

/// The roots rule of the exact mechanism: every root below the top gets
/// its interval integral, the top root the complement that lifts the full
/// IC extension's total to exactly 1. Computing that complement requires
/// recursively evaluating every non-root, so this costs a full evaluation.
pub fn roots_rule(forest: &Forest) -> Result<Vec<f64>> {
    let d = Evaluator::new().distribution(forest)?;
    let mut probs = vec![0.0; forest.vertex_count()];
    for r in forest.roots() {
        probs[r] = d[r];
    }
    Ok(probs)
}

/// The interval-share reference distribution: exact on every forest, but
/// not IC (deleting an edge can lower the midpoint and grow a share).
pub fn interval_share(forest: &Forest) -> Result<Vec<f64>> {
    let table = forest.progeny_table();
    let children = forest.children_lists();
    let progenies = root_progenies(&table);
    let mut probs = vec![0.0; forest.vertex_count()];
    for x in forest.vertices() {
        probs[x] = owned_share(&table, &children, &progenies, x)?;
    }
    Ok(probs)
}

/// Recursive evaluator for the exact mechanism. Sub-forests repeat heavily,
/// so full distributions are memoized per parent map within one top-level
/// call; entries are pure values and inserts idempotent.
pub(crate) struct Evaluator {
    memo: HashMap<Vec<Option<Vertex>>, Rc<Vec<f64>>>,
}

impl Evaluator {
    pub(crate) fn new() -> Self {
        Evaluator { memo: HashMap::new() }
    }

    /// Full distribution: non-roots by IC recursion, lower roots by their
    /// interval integral, the top root by the exactness complement.
    pub(crate) fn distribution(&mut self, forest: &Forest) -> Result<Rc<Vec<f64>>> {
        if let Some(hit) = self.memo.get(forest.parents()) {
            return Ok(Rc::clone(hit));
        }
        let table = forest.progeny_table();
        let children = forest.children_lists();
        let progenies = root_progenies(&table);
        let r1 = table.top_root();
        let mut probs = vec![0.0; forest.vertex_count()];
        for x in forest.vertices() {
            if !forest.is_root(x) {
                probs[x] = self.root_value(&forest.remove_out_edge(x), x)?;
            } else if x != r1 {
                probs[x] = owned_share(&table, &children, &progenies, x)?;
            }
        }
        probs[r1] = 1.0 - probs.iter().sum::<f64>();
        let rc = Rc::new(probs);
        self.memo.insert(forest.parents().to_vec(), Rc::clone(&rc));
        Ok(rc)
    }

    /// Value of root `x` in `forest`: the complement route when x is the
    /// top root, the direct integral otherwise.
    fn root_value(&mut self, forest: &Forest, x: Vertex) -> Result<f64> {
        let table = forest.progeny_table();
        debug_assert!(forest.is_root(x));
        if table.top_root() == x {
            return Ok(self.distribution(forest)?[x]);
        }
        let children = forest.children_lists();
        let progenies = root_progenies(&table);
        owned_share(&table, &children, &progenies, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build, FamilySpec};
    use crate::mechanism::{evaluate, MechanismSpec};

    const TOL: f64 = 1e-12;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() <= TOL, "{a} vs {b}");
    }

    fn third_log2(num: f64, den: f64) -> f64 {
        (num / den).log2() / 3.0
    }

    #[test]
    fn integral_segments_with_three_roots() {
        // progenies {10, 9, 8}: u = 3 up to 8, then 2 up to 9, then 1
        let ps = [10usize, 9, 8];
        assert_close(
            piecewise_log_integral(5.0, 8.0, &ps).unwrap(),
            third_log2(8.0, 5.0),
        );
        assert_close(
            piecewise_log_integral(8.0, 10.0, &ps).unwrap(),
            0.5 * (9.0f64 / 8.0).log2() + (10.0f64 / 9.0).log2(),
        );
        assert_eq!(piecewise_log_integral(5.0, 5.0, &ps).unwrap(), 0.0);
    }

    #[test]
    fn integral_rejects_uncovered_intervals() {
        assert!(piecewise_log_integral(5.0, 8.0, &[4]).is_err());
        assert!(piecewise_log_integral(0.0, 1.0, &[1]).is_err());
    }

    /// Midpoint-rule quadrature of 1/(z ln2 u(z)): an independent numeric
    /// route to the same integral. The grid is split at the progeny values
    /// so no cell straddles a jump of u; inside a cell the integrand is
    /// smooth and the rule converges quadratically.
    fn quadrature(lo: f64, hi: f64, progenies: &[usize], steps_per_piece: usize) -> f64 {
        let mut cuts: Vec<f64> = progenies
            .iter()
            .map(|&p| p as f64)
            .filter(|&p| p > lo && p < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        let mut z0 = lo;
        for z1 in cuts.into_iter().chain(std::iter::once(hi)) {
            let h = (z1 - z0) / steps_per_piece as f64;
            for i in 0..steps_per_piece {
                let z = z0 + (i as f64 + 0.5) * h;
                let u = progenies.iter().filter(|&&p| p as f64 >= z).count();
                total += h / (z * std::f64::consts::LN_2 * u as f64);
            }
            z0 = z1;
        }
        total
    }

    #[test]
    fn integral_matches_quadrature_oracle() {
        use proptest::prelude::*;
        use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
        let mut runner = TestRunner::new_with_rng(
            Config { cases: 48, ..Config::default() },
            TestRng::deterministic_rng(RngAlgorithm::ChaCha),
        );
        let strategy = (
            proptest::collection::vec(1usize..=30, 1..6),
            1u32..=59,
            1u32..=59,
        );
        runner
            .run(&strategy, |(mut progenies, a, b)| {
                let pmax = *progenies.iter().max().unwrap();
                // bounds inside (1/2, pmax], as every mechanism use has
                let lo = (a.min(b) as f64 / 60.0 * pmax as f64).max(0.5);
                let hi = a.max(b) as f64 / 60.0 * pmax as f64;
                prop_assume!(hi > lo);
                progenies.sort_unstable();
                let exact = piecewise_log_integral(lo, hi, &progenies).unwrap();
                let approx = quadrature(lo, hi, &progenies, 50_000);
                prop_assert!(
                    (exact - approx).abs() <= 1e-6,
                    "exact {exact} vs quadrature {approx} on {progenies:?}, ({lo}, {hi}]"
                );
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn interval_share_rows_on_the_three_tree_example() {
        let f = crate::verify::example_forest_three_trees();
        let probs = interval_share(&f).unwrap();
        assert_close(probs[1], third_log2(6.0, 5.0));
        assert_close(probs[2], third_log2(7.0, 6.0) + third_log2(8.0, 7.0));
        assert_close(probs[3], 0.5 * (9.0f64 / 8.0).log2() + (10.0f64 / 9.0).log2());
        assert_close(probs[6], third_log2(7.0, 5.0));
        assert_close(probs[7], third_log2(8.0, 7.0) + 0.5 * (9.0f64 / 8.0).log2());
        assert_close(probs[8], third_log2(8.0, 5.0));
        assert_close(probs.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn interval_share_on_isolated_vertices_is_uniform() {
        let f = Forest::new(vec![None; 5]).unwrap();
        let probs = interval_share(&f).unwrap();
        for &p in &probs {
            assert_close(p, 0.2);
        }
    }

    #[test]
    fn interval_share_star_center_takes_everything() {
        let f = build(&FamilySpec::Star { size: 6 }).unwrap();
        let probs = interval_share(&f).unwrap();
        assert_close(probs[0], 1.0);
        assert!(probs[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn exact_mechanism_on_isolated_vertices_is_uniform() {
        for n in 1..=6 {
            let f = Forest::new(vec![None; n]).unwrap();
            let d = evaluate(&MechanismSpec::Exact, &f).unwrap();
            for v in f.vertices() {
                assert_close(d.get(v), 1.0 / n as f64);
            }
            // all vertices are roots, so the roots rule is the whole story
            assert_eq!(roots_rule(&f).unwrap(), d.probs());
        }
    }

    #[test]
    fn roots_rule_on_the_three_tree_example() {
        let f = crate::verify::example_forest_three_trees();
        let probs = roots_rule(&f).unwrap();
        assert_close(probs[7], third_log2(8.0, 7.0) + 0.5 * (9.0f64 / 8.0).log2());
        assert_close(probs[8], third_log2(8.0, 5.0));
        let full = evaluate(&MechanismSpec::Exact, &f).unwrap();
        assert_close(probs[3], full.get(3));
        // non-roots are zeroed in the rule itself
        assert_eq!(probs[1], 0.0);
    }

    #[test]
    fn exact_mechanism_totals_one_on_a_path() {
        let f = Forest::new(vec![Some(1), Some(2), None]).unwrap();
        let d = evaluate(&MechanismSpec::Exact, &f).unwrap();
        assert_close(d.total(), 1.0);
        assert!(d.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn exact_mechanism_three_tree_rows() {
        let f = crate::verify::example_forest_three_trees();
        let d = evaluate(&MechanismSpec::Exact, &f).unwrap();
        // the correction at a_1: midpoint drops to 4.5 once its edge goes
        assert_close(d.get(1), third_log2(6.0, 4.5));
        assert_close(d.get(6), third_log2(7.0, 5.0));
        assert_close(d.get(7), third_log2(8.0, 7.0) + 0.5 * (9.0f64 / 8.0).log2());
        assert_close(d.get(2), third_log2(7.0, 6.0) + third_log2(8.0, 7.0));
        assert_close(d.get(8), third_log2(8.0, 5.0));
        let a3_expected = 0.5 * (9.0f64 / 8.0).log2() + (10.0f64 / 9.0).log2()
            - third_log2(6.0, 4.5)
            + third_log2(6.0, 5.0);
        assert_close(d.get(3), a3_expected);
        assert_close(d.total(), 1.0);
    }

    #[test]
    fn exact_mechanism_support_respects_the_third_cutoff() {
        // any vertex with progeny below P*/3 gets exactly zero
        for n in 1..=5 {
            for f in crate::enumerate::forests(n).unwrap() {
                let t = f.progeny_table();
                let d = evaluate(&MechanismSpec::Exact, &f).unwrap();
                for v in f.vertices() {
                    if 3 * t.progeny(v) < t.pstar() {
                        assert_eq!(d.get(v), 0.0, "vertex {v} on {f:?}");
                    }
                }
            }
        }
    }
}
