//! Audit harness: exhaustive sweeps over enumerated forests checking
//! incentive compatibility, mass, quality and fairness; the worked golden
//! examples; the upper-bound demonstration; the proportionality probe; and
//! the over-distribution demonstrator.
//!
//! Audits are deterministic: forests are processed in enumeration order and
//! parallel partitions merge back in that order, so identical inputs give
//! identical reports regardless of the job count.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::enumerate;
use crate::error::{Error, Result};
use crate::family::{build, FamilySpec};
use crate::forest::{Forest, Vertex};
use crate::mechanism::{evaluate, generated, Distribution, GeneratorTable, MechanismSpec};

/// Comparison tolerance for audits.
pub const AUDIT_TOL: f64 = 1e-9;
/// Tighter tolerance for algebraic-identity checks.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Finite-n stand-in for the vanishing terms in the over-distribution
/// hypotheses.
pub const HYPOTHESIS_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QualityResult {
    pub expected_progeny: f64,
    pub pstar: usize,
    pub q: f64,
}

/// Normalized expected progeny of the mechanism's selection on `forest`.
pub fn quality(spec: &MechanismSpec, forest: &Forest) -> Result<QualityResult> {
    Ok(quality_of(&evaluate(spec, forest)?, forest))
}

pub fn quality_of(dist: &Distribution, forest: &Forest) -> QualityResult {
    let table = forest.progeny_table();
    let expected_progeny = forest
        .vertices()
        .map(|v| dist.get(v) * table.progeny(v) as f64)
        .sum::<f64>();
    let pstar = table.pstar();
    QualityResult { expected_progeny, pstar, q: expected_progeny / pstar as f64 }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub forest: Forest,
    pub subject: String,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtremalQuality {
    pub forest: Forest,
    pub q: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub kind: String,
    pub mechanism: String,
    pub forests_examined: usize,
    pub violations: Vec<Violation>,
    /// Root pairs skipped by the proportionality probe because a ratio was
    /// undefined (zero denominator); informational, never violations.
    pub undefined_ratio_pairs: usize,
    pub extremal: Option<ExtremalQuality>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<22} {:<12} {:>8} forests  {:>4} violations  {}  [{:.3}s]\n",
            self.kind,
            self.mechanism,
            self.forests_examined,
            self.violations.len(),
            if self.passed() { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
        );
        if let Some(ex) = &self.extremal {
            out.push_str(&format!(
                "  worst quality {:.9} on {}\n",
                ex.q,
                crate::format::emit_forest_json(&ex.forest)
            ));
        }
        if self.undefined_ratio_pairs > 0 {
            out.push_str(&format!(
                "  {} root pairs with undefined ratio (skipped)\n",
                self.undefined_ratio_pairs
            ));
        }
        for v in self.violations.iter().take(10) {
            out.push_str(&format!(
                "  {}: observed {:.12}, bound {:.12} on {}\n",
                v.subject,
                v.observed,
                v.bound,
                crate::format::emit_forest_json(&v.forest)
            ));
        }
        if self.violations.len() > 10 {
            out.push_str(&format!("  ... {} more\n", self.violations.len() - 10));
        }
        out
    }
}

fn collect_forests(n_max: usize) -> Result<Vec<Forest>> {
    let mut all = Vec::new();
    for n in 1..=n_max {
        all.extend(enumerate::forests_with_cap(n, n_max)?);
    }
    Ok(all)
}

/// Maps `per_forest` over the forests, in parallel when `jobs > 1`, always
/// returning results in input order.
fn map_forests<T: Send>(
    forests: &[Forest],
    jobs: usize,
    per_forest: impl Fn(&Forest) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if jobs <= 1 {
        return forests.iter().map(per_forest).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    pool.install(|| forests.par_iter().map(per_forest).collect())
}

/// Checks the IC characterization vertex by vertex: the probability of x
/// must not move when x's own out-edge is deleted.
pub fn audit_ic(spec: &MechanismSpec, n_max: usize, jobs: usize) -> Result<AuditReport> {
    let forests = collect_forests(n_max)?;
    audit_ic_forests(spec, &forests, jobs)
}

/// As [`audit_ic`] over an explicit forest list.
pub fn audit_ic_forests(
    spec: &MechanismSpec,
    forests: &[Forest],
    jobs: usize,
) -> Result<AuditReport> {
    let start = Instant::now();
    let per_forest = map_forests(forests, jobs, |f| {
        let d = evaluate(spec, f)?;
        let mut violations = Vec::new();
        for x in f.vertices() {
            let dx = evaluate(spec, &f.remove_out_edge(x))?;
            let delta = (d.get(x) - dx.get(x)).abs();
            if delta > AUDIT_TOL {
                violations.push(Violation {
                    forest: f.clone(),
                    subject: format!("vertex {x}"),
                    observed: delta,
                    bound: AUDIT_TOL,
                });
            }
        }
        Ok(violations)
    })?;
    Ok(AuditReport {
        kind: "ic".into(),
        mechanism: spec.to_string(),
        forests_examined: forests.len(),
        violations: per_forest.into_iter().flatten().collect(),
        undefined_ratio_pairs: 0,
        extremal: None,
        elapsed: start.elapsed(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassMode {
    /// Total must equal 1 and no probability may dip below -1e-9.
    Exact,
    /// Total at most 1 and no probability below -1e-12.
    Subdistribution,
}

pub fn audit_mass(
    spec: &MechanismSpec,
    n_max: usize,
    mode: MassMode,
    jobs: usize,
) -> Result<AuditReport> {
    let forests = collect_forests(n_max)?;
    audit_mass_forests(spec, &forests, mode, jobs)
}

pub fn audit_mass_forests(
    spec: &MechanismSpec,
    forests: &[Forest],
    mode: MassMode,
    jobs: usize,
) -> Result<AuditReport> {
    let start = Instant::now();
    let per_forest = map_forests(forests, jobs, |f| {
        let d = evaluate(spec, f)?;
        let mut violations = Vec::new();
        match mode {
            MassMode::Exact => {
                if (d.total() - 1.0).abs() > AUDIT_TOL {
                    violations.push(Violation {
                        forest: f.clone(),
                        subject: "total".into(),
                        observed: d.total(),
                        bound: 1.0,
                    });
                }
                for v in f.vertices() {
                    if d.get(v) < -AUDIT_TOL {
                        violations.push(Violation {
                            forest: f.clone(),
                            subject: format!("vertex {v} negative"),
                            observed: d.get(v),
                            bound: -AUDIT_TOL,
                        });
                    }
                }
            }
            MassMode::Subdistribution => {
                if d.total() > 1.0 + IDENTITY_TOL {
                    violations.push(Violation {
                        forest: f.clone(),
                        subject: "total".into(),
                        observed: d.total(),
                        bound: 1.0,
                    });
                }
                for v in f.vertices() {
                    if d.get(v) < -IDENTITY_TOL {
                        violations.push(Violation {
                            forest: f.clone(),
                            subject: format!("vertex {v} negative"),
                            observed: d.get(v),
                            bound: -IDENTITY_TOL,
                        });
                    }
                }
            }
        }
        Ok(violations)
    })?;
    Ok(AuditReport {
        kind: match mode {
            MassMode::Exact => "mass-exact".into(),
            MassMode::Subdistribution => "mass-subdistribution".into(),
        },
        mechanism: spec.to_string(),
        forests_examined: forests.len(),
        violations: per_forest.into_iter().flatten().collect(),
        undefined_ratio_pairs: 0,
        extremal: None,
        elapsed: start.elapsed(),
    })
}

/// Asserts a per-forest lower bound on quality and reports the extremal
/// forest.
pub fn audit_quality(
    spec: &MechanismSpec,
    n_max: usize,
    bound: f64,
    jobs: usize,
) -> Result<AuditReport> {
    audit_quality_forests(spec, &collect_forests(n_max)?, bound, jobs)
}

pub fn audit_quality_forests(
    spec: &MechanismSpec,
    forests: &[Forest],
    bound: f64,
    jobs: usize,
) -> Result<AuditReport> {
    let start = Instant::now();
    let qs = map_forests(forests, jobs, |f| Ok(quality_of(&evaluate(spec, f)?, f).q))?;
    let mut violations = Vec::new();
    let mut extremal: Option<ExtremalQuality> = None;
    for (f, &q) in forests.iter().zip(&qs) {
        if extremal.as_ref().is_none_or(|e| q < e.q) {
            extremal = Some(ExtremalQuality { forest: f.clone(), q });
        }
        if q < bound - AUDIT_TOL {
            violations.push(Violation {
                forest: f.clone(),
                subject: "quality".into(),
                observed: q,
                bound,
            });
        }
    }
    Ok(AuditReport {
        kind: "quality".into(),
        mechanism: spec.to_string(),
        forests_examined: forests.len(),
        violations,
        undefined_ratio_pairs: 0,
        extremal,
        elapsed: start.elapsed(),
    })
}

/// Fairness audit: root monotonicity (larger progeny never receives less)
/// plus a proportionality probe over every matching progeny pair found
/// during enumeration, grouped by vertex count. Root pairs whose ratio is
/// undefined are counted, not flagged.
pub fn audit_fairness(spec: &MechanismSpec, n_max: usize, jobs: usize) -> Result<AuditReport> {
    audit_fairness_forests(spec, &collect_forests(n_max)?, jobs)
}

pub fn audit_fairness_forests(
    spec: &MechanismSpec,
    forests: &[Forest],
    jobs: usize,
) -> Result<AuditReport> {
    let start = Instant::now();
    struct PerForest {
        violations: Vec<Violation>,
        ratios: Vec<((usize, usize, usize), f64)>,
        undefined: usize,
    }
    let scanned = map_forests(forests, jobs, |f| {
        let d = evaluate(spec, f)?;
        let table = f.progeny_table();
        let roots = table.roots_ordered();
        let mut violations = Vec::new();
        let mut ratios = Vec::new();
        let mut undefined = 0;
        for &x in roots {
            for &y in roots {
                if x == y {
                    continue;
                }
                let (px, py) = (table.progeny(x), table.progeny(y));
                if px > py && d.get(x) < d.get(y) - IDENTITY_TOL {
                    violations.push(Violation {
                        forest: f.clone(),
                        subject: format!("roots {x} (P={px}) vs {y} (P={py})"),
                        observed: d.get(x) - d.get(y),
                        bound: 0.0,
                    });
                }
                if d.get(y) > 0.0 {
                    ratios.push(((f.vertex_count(), px, py), d.get(x) / d.get(y)));
                } else {
                    undefined += 1;
                }
            }
        }
        Ok(PerForest { violations, ratios, undefined })
    })?;
    let mut violations = Vec::new();
    let mut undefined = 0;
    let mut seen: BTreeMap<(usize, usize, usize), (usize, f64)> = BTreeMap::new();
    for (idx, scan) in scanned.iter().enumerate() {
        violations.extend(scan.violations.iter().cloned());
        undefined += scan.undefined;
        for &(key, ratio) in &scan.ratios {
            match seen.get(&key) {
                None => {
                    seen.insert(key, (idx, ratio));
                }
                Some(&(first_idx, first_ratio)) => {
                    let scale = 1.0f64.max(first_ratio.abs()).max(ratio.abs());
                    if (ratio - first_ratio).abs() > AUDIT_TOL * scale {
                        violations.push(Violation {
                            forest: forests[idx].clone(),
                            subject: format!(
                                "progeny pair ({}, {}) at n={}: ratio {} here, {} on forest #{}",
                                key.1, key.2, key.0, ratio, first_ratio, first_idx
                            ),
                            observed: (ratio - first_ratio).abs(),
                            bound: AUDIT_TOL * scale,
                        });
                    }
                }
            }
        }
    }
    Ok(AuditReport {
        kind: "fairness".into(),
        mechanism: spec.to_string(),
        forests_examined: forests.len(),
        violations,
        undefined_ratio_pairs: undefined,
        extremal: None,
        elapsed: start.elapsed(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AuditSelect {
    Ic,
    Mass(MassMode),
    Quality(f64),
    Fairness,
}

/// Runs the selected audits for each mechanism, in order; deterministic
/// report ordering.
pub fn sweep(
    specs: &[MechanismSpec],
    checks: &[AuditSelect],
    n_max: usize,
    cap: usize,
    jobs: usize,
) -> Result<Vec<AuditReport>> {
    if n_max > cap {
        return Err(Error::CapExceeded { n: n_max, cap });
    }
    let mut reports = Vec::new();
    for spec in specs {
        for check in checks {
            reports.push(match *check {
                AuditSelect::Ic => audit_ic(spec, n_max, jobs)?,
                AuditSelect::Mass(mode) => audit_mass(spec, n_max, mode, jobs)?,
                AuditSelect::Quality(bound) => audit_quality(spec, n_max, bound, jobs)?,
                AuditSelect::Fairness => audit_fairness(spec, n_max, jobs)?,
            });
        }
    }
    Ok(reports)
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperBoundReport {
    pub mechanism: String,
    pub n: usize,
    pub q_disconnected: f64,
    pub q_connected: f64,
    pub min_q: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Evaluates the mechanism on the two-star pair (split and joined) and
/// checks the 4/5 ceiling that no IC mechanism can beat on that pair.
pub fn demo_upper_bound(spec: &MechanismSpec, n: usize) -> Result<UpperBoundReport> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidSpec(format!(
            "upper-bound demo needs an even n >= 4, got {n}"
        )));
    }
    let split = build(&FamilySpec::UpperBoundPair { n, connected: false })?;
    let joined = build(&FamilySpec::UpperBoundPair { n, connected: true })?;
    let q_disconnected = quality(spec, &split)?.q;
    let q_connected = quality(spec, &joined)?.q;
    let min_q = q_disconnected.min(q_connected);
    let bound = 0.8;
    Ok(UpperBoundReport {
        mechanism: spec.to_string(),
        n,
        q_disconnected,
        q_connected,
        min_q,
        bound,
        within_bound: min_q <= bound + AUDIT_TOL,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProportionalityProbe {
    pub mechanism: String,
    pub k: usize,
    pub n: usize,
    /// top-center / rival-center ratio with one (k-1)-star rival
    pub ratio_one_rival: f64,
    /// the same ratio after a second (k-1)-star joins
    pub ratio_two_rivals: f64,
    pub difference: f64,
}

/// Builds a k-star next to one and then two (k-1)-stars (isolated vertices
/// fill up to n) and compares the center probability ratios. A proportional
/// mechanism must keep them equal.
pub fn probe_proportionality(
    spec: &MechanismSpec,
    k: usize,
    n: usize,
) -> Result<ProportionalityProbe> {
    if k < 2 || n < 3 * k - 2 {
        return Err(Error::InvalidSpec(format!(
            "probe needs k >= 2 and n >= 3k-2, got k={k}, n={n}"
        )));
    }
    let ratio = |rivals: usize| -> Result<f64> {
        let mut parent = vec![None; n];
        parent[1..k].fill(Some(0));
        let mut next = k;
        for _ in 0..rivals {
            parent[next + 1..next + k - 1].fill(Some(next));
            next += k - 1;
        }
        let f = Forest::new(parent)?;
        let d = evaluate(spec, &f)?;
        if d.get(k).is_nan() || d.get(k) <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "ratio undefined: rival center gets {}",
                d.get(k)
            )));
        }
        Ok(d.get(0) / d.get(k))
    };
    let ratio_one_rival = ratio(1)?;
    let ratio_two_rivals = ratio(2)?;
    Ok(ProportionalityProbe {
        mechanism: spec.to_string(),
        k,
        n,
        ratio_one_rival,
        ratio_two_rivals,
        difference: (ratio_two_rivals - ratio_one_rival).abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub label: String,
    pub observed: f64,
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverdistributionReport {
    pub a: usize,
    pub b: usize,
    pub extras: usize,
    pub n: usize,
    /// f(b) / f(2a)
    pub k: f64,
    /// f(a+b) / f(2a)
    pub m: f64,
    pub hypotheses: Vec<HypothesisCheck>,
    pub hypotheses_met: bool,
    /// Center probabilities (x1..x4) per sub-forest and on the full chain.
    pub center_values: Vec<(String, [f64; 4])>,
    /// Mass forced onto non-roots of the full chain by IC alone.
    pub nonroot_mass: f64,
    /// The top root's residual share on the full chain (negative when the
    /// non-root mass exceeds 1).
    pub top_root_share: f64,
    /// Strictly-above-1 verdict; absent when a hypothesis fails.
    pub over_distributes: Option<bool>,
}

/// Builds the four-star chain (b, b, a, a) plus isolated extras, evaluates
/// the residual-splitting mechanism on its six partial-edge sub-forests and
/// on the full chain, and reports whether the non-root mass already exceeds
/// 1 when the over-distribution hypotheses hold at this size.
pub fn demo_overdistribution(
    table: &GeneratorTable,
    a: usize,
    b: usize,
    extras: usize,
) -> Result<OverdistributionReport> {
    let full = build(&FamilySpec::Overpay { a, b, extras })?;
    let n = full.vertex_count();
    if table.len() < n {
        return Err(Error::GeneratorDomain { needed: n, len: table.len() });
    }
    let k = table.get(b)? / table.get(2 * a)?;
    let m = table.get(a + b)? / table.get(2 * a)?;
    let hypotheses = vec![
        HypothesisCheck {
            label: "b >= 2a".into(),
            observed: b as f64,
            threshold: (2 * a) as f64,
            holds: b >= 2 * a,
        },
        HypothesisCheck {
            label: "n*f(1)/f(b) small".into(),
            observed: n as f64 * table.get(1)? / table.get(b)?,
            threshold: HYPOTHESIS_TOL,
            holds: n as f64 * table.get(1)? / table.get(b)? <= HYPOTHESIS_TOL,
        },
        HypothesisCheck {
            label: "m >= 7k^2".into(),
            observed: m,
            threshold: 7.0 * k * k,
            holds: m >= 7.0 * k * k,
        },
        HypothesisCheck {
            label: "f(a)/f(2a) small".into(),
            observed: table.get(a)? / table.get(2 * a)?,
            threshold: HYPOTHESIS_TOL,
            holds: table.get(a)? / table.get(2 * a)? <= HYPOTHESIS_TOL,
        },
    ];
    let hypotheses_met = hypotheses.iter().all(|h| h.holds);

    // The six sub-forests keep the same vertex set and drop center edges;
    // centers are vertices 0..=3 by the family labeling.
    let variants: [(&str, Vec<Vertex>); 7] = [
        ("no chain edges", vec![0, 1, 2]),
        ("first pair joined", vec![1, 2]),
        ("last pair joined", vec![0, 1]),
        ("both pairs joined", vec![1]),
        ("middle edge only", vec![0, 2]),
        ("first three joined", vec![2]),
        ("full chain", vec![]),
    ];
    let mut engine = generated::FgEngine::new(table);
    let mut center_values = Vec::new();
    let mut full_dist = None;
    for (label, removals) in variants {
        let mut f = full.clone();
        for x in removals {
            f = f.remove_out_edge(x);
        }
        let probs = engine.distribution(&f)?;
        center_values.push((label.to_string(), [probs[0], probs[1], probs[2], probs[3]]));
        if label == "full chain" {
            full_dist = Some(Distribution::from_probs(probs, &f));
        }
    }
    let full_dist = full_dist.expect("full chain is evaluated last");
    let nonroot_mass = full_dist.nonroot_mass();
    Ok(OverdistributionReport {
        a,
        b,
        extras,
        n,
        k,
        m,
        hypotheses,
        hypotheses_met,
        center_values,
        nonroot_mass,
        top_root_share: full_dist.get(3),
        over_distributes: hypotheses_met.then_some(nonroot_mass > 1.0),
    })
}

/// The worked examples: a chain whose candidate path competes with a rival
/// star, a single chain where no candidate reaches half, and the three-tree
/// forest illustrating the interval-sharing rules.
pub fn example_forest_competing_chains() -> Forest {
    Forest::from_edges(
        15,
        &[
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (6, 0),
            (7, 0),
            (8, 0),
            (9, 1),
            (11, 10),
            (12, 10),
            (13, 10),
            (14, 10),
        ],
    )
    .expect("static example")
}

pub fn example_forest_single_chain() -> Forest {
    build(&FamilySpec::StarPath { sizes: vec![4, 3, 2, 1], extras: 0 }).expect("static example")
}

pub fn example_forest_three_trees() -> Forest {
    Forest::from_edges(
        27,
        &[
            (0, 1),
            (1, 2),
            (2, 3),
            (4, 5),
            (5, 6),
            (6, 7),
            (9, 0),
            (10, 1),
            (11, 1),
            (12, 1),
            (13, 2),
            (14, 3),
            (15, 5),
            (16, 5),
            (17, 6),
            (18, 6),
            (19, 7),
            (20, 8),
            (21, 8),
            (22, 8),
            (23, 8),
            (24, 8),
            (25, 8),
            (26, 8),
        ],
    )
    .expect("static example")
}

#[derive(Clone, Debug, Serialize)]
pub struct GoldenRow {
    pub forest: String,
    pub mechanism: String,
    pub subject: String,
    pub computed: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoldenReport {
    pub rows: Vec<GoldenRow>,
    pub max_deviation: f64,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= AUDIT_TOL
    }
}

/// Rebuilds the worked examples and compares the computed distributions
/// against their closed forms (logs of small integer ratios, evaluated
/// here rather than hard-coded decimals).
pub fn worked_examples() -> Result<GoldenReport> {
    let lg = |num: f64, den: f64| (num / den).log2();
    let mut rows = Vec::new();
    let mut push = |forest: &str, mech: &str, subject: String, computed: f64, expected: f64| {
        rows.push(GoldenRow {
            forest: forest.into(),
            mechanism: mech.into(),
            subject,
            computed,
            expected,
        });
    };

    let chains = example_forest_competing_chains();
    let d = evaluate(&MechanismSpec::Fair, &chains)?;
    push("competing-chains", "mf", "vertex 1".into(), d.get(1), 0.5);
    for i in 1..=4usize {
        let expected = 0.5 * lg(6.0 + i as f64, 5.0 + i as f64);
        push("competing-chains", "mf", format!("vertex {}", 1 + i), d.get(1 + i), expected);
    }
    push(
        "competing-chains",
        "mf",
        "total".into(),
        d.total(),
        0.5 + 0.5 * lg(10.0, 6.0),
    );

    let chain = example_forest_single_chain();
    let d = evaluate(&MechanismSpec::Fair, &chain)?;
    push("single-chain", "mf", "vertex 0".into(), d.get(0), 0.0);
    push("single-chain", "mf", "vertex 1".into(), d.get(1), 0.5 * lg(7.0, 4.0));
    push("single-chain", "mf", "vertex 2".into(), d.get(2), 0.5 * lg(9.0, 7.0));
    push("single-chain", "mf", "vertex 3".into(), d.get(3), 0.5 * lg(10.0, 9.0));
    push("single-chain", "mf", "total".into(), d.total(), 0.5 * lg(10.0, 4.0));

    let trees = example_forest_three_trees();
    let d = evaluate(&MechanismSpec::Exact, &trees)?;
    push("three-trees", "mb", "vertex 1".into(), d.get(1), lg(6.0, 4.5) / 3.0);
    push(
        "three-trees",
        "mb",
        "vertex 2".into(),
        d.get(2),
        lg(7.0, 6.0) / 3.0 + lg(8.0, 7.0) / 3.0,
    );
    push(
        "three-trees",
        "mb",
        "vertex 3".into(),
        d.get(3),
        0.5 * lg(9.0, 8.0) + lg(10.0, 9.0) - lg(6.0, 4.5) / 3.0 + lg(6.0, 5.0) / 3.0,
    );
    push("three-trees", "mb", "vertex 6".into(), d.get(6), lg(7.0, 5.0) / 3.0);
    push(
        "three-trees",
        "mb",
        "vertex 7".into(),
        d.get(7),
        lg(8.0, 7.0) / 3.0 + 0.5 * lg(9.0, 8.0),
    );
    push("three-trees", "mb", "vertex 8".into(), d.get(8), lg(8.0, 5.0) / 3.0);
    push("three-trees", "mb", "total".into(), d.total(), 1.0);

    let d = evaluate(&MechanismSpec::IntervalShare, &trees)?;
    push("three-trees", "mprime", "vertex 1".into(), d.get(1), lg(6.0, 5.0) / 3.0);
    push(
        "three-trees",
        "mprime",
        "vertex 2".into(),
        d.get(2),
        lg(7.0, 6.0) / 3.0 + lg(8.0, 7.0) / 3.0,
    );
    push(
        "three-trees",
        "mprime",
        "vertex 3".into(),
        d.get(3),
        0.5 * lg(9.0, 8.0) + lg(10.0, 9.0),
    );
    push("three-trees", "mprime", "vertex 6".into(), d.get(6), lg(7.0, 5.0) / 3.0);
    push(
        "three-trees",
        "mprime",
        "vertex 7".into(),
        d.get(7),
        lg(8.0, 7.0) / 3.0 + 0.5 * lg(9.0, 8.0),
    );
    push("three-trees", "mprime", "vertex 8".into(), d.get(8), lg(8.0, 5.0) / 3.0);
    push("three-trees", "mprime", "total".into(), d.total(), 1.0);

    let max_deviation = rows
        .iter()
        .map(|r| (r.computed - r.expected).abs())
        .fold(0.0, f64::max);
    Ok(GoldenReport { rows, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_of_uniform_on_empty_forest_is_one() {
        let f = Forest::new(vec![None; 4]).unwrap();
        let q = quality(&MechanismSpec::Uniform, &f).unwrap();
        assert_eq!(q.q, 1.0);
        assert_eq!(q.pstar, 1);
    }

    #[test]
    fn three_tree_example_structure() {
        let f = example_forest_three_trees();
        let t = f.progeny_table();
        assert_eq!(t.roots_ordered(), &[3, 7, 8]);
        assert_eq!(
            t.roots_ordered().iter().map(|&r| t.progeny(r)).collect::<Vec<_>>(),
            vec![10, 9, 8]
        );
        // deleting the mid-chain vertex's out-edge lowers the top to 9
        assert_eq!(f.remove_out_edge(1).progeny_table().pstar(), 9);
        // and the exact mechanism still clears its quality floor here
        let q = quality(&MechanismSpec::Exact, &f).unwrap();
        assert!(q.q >= 1.0 / 3.0);
    }

    #[test]
    fn candidate_paths_of_the_worked_examples() {
        use crate::forest::candidate_set;
        let chains = example_forest_competing_chains();
        assert_eq!(candidate_set(&chains).vertices(), &[1, 2, 3, 4, 5]);
        let chain = example_forest_single_chain();
        assert_eq!(candidate_set(&chain).vertices(), &[1, 2, 3]);
    }

    #[test]
    fn fair_quality_is_half_when_single_candidate() {
        let f = build(&FamilySpec::Star { size: 5 }).unwrap();
        let q = quality(&MechanismSpec::Fair, &f).unwrap();
        assert!((q.q - 0.5).abs() <= IDENTITY_TOL);
    }

    #[test]
    fn ic_audit_passes_for_fair_small() {
        let report = audit_ic(&MechanismSpec::Fair, 4, 1).unwrap();
        assert!(report.passed());
        assert_eq!(report.forests_examined, 1 + 3 + 16 + 125);
    }

    #[test]
    fn ic_audit_passes_for_uniform() {
        assert!(audit_ic(&MechanismSpec::Uniform, 5, 1).unwrap().passed());
    }

    #[test]
    fn ic_audit_catches_the_interval_share_reference() {
        let witness = [example_forest_three_trees()];
        let report =
            audit_ic_forests(&MechanismSpec::IntervalShare, &witness, 1).unwrap();
        assert!(!report.passed());
        // the defect sits at the vertex whose edge removal drops the midpoint
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].subject, "vertex 1");
        let expected = (6.0f64 / 4.5).log2() / 3.0 - (6.0f64 / 5.0).log2() / 3.0;
        assert!((report.violations[0].observed - expected).abs() <= 1e-12);
    }

    #[test]
    fn mass_audit_modes() {
        assert!(audit_mass(&MechanismSpec::Exact, 4, MassMode::Exact, 1)
            .unwrap()
            .passed());
        assert!(audit_mass(&MechanismSpec::Empty, 4, MassMode::Subdistribution, 1)
            .unwrap()
            .passed());
        // the fair mechanism under-distributes: exact mode must fail with
        // the competing-chains forest as a witness
        let witness = [example_forest_competing_chains()];
        let report =
            audit_mass_forests(&MechanismSpec::Fair, &witness, MassMode::Exact, 1).unwrap();
        assert!(!report.passed());
        let expected_total = 0.5 + 0.5 * (10.0f64 / 6.0).log2();
        assert!((report.violations[0].observed - expected_total).abs() <= 1e-12);
    }

    #[test]
    fn quality_audit_flags_the_empty_mechanism() {
        let report = audit_quality(&MechanismSpec::Empty, 2, 0.01, 1).unwrap();
        assert!(!report.passed());
        assert_eq!(report.violations.len(), report.forests_examined);
        assert_eq!(report.extremal.as_ref().unwrap().q, 0.0);
    }

    #[test]
    fn fairness_audit_accepts_uniform_and_fair() {
        let report = audit_fairness(&MechanismSpec::Uniform, 4, 1).unwrap();
        assert!(report.passed());
        assert_eq!(report.undefined_ratio_pairs, 0);
        let report = audit_fairness(&MechanismSpec::Fair, 4, 1).unwrap();
        assert!(report.passed());
        // every defined ratio involves the lone positive root, the rest skip
        assert!(report.undefined_ratio_pairs > 0);
    }

    #[test]
    fn parallel_audit_reports_match_sequential() {
        for (seq, par) in [
            (
                audit_ic(&MechanismSpec::Exact, 4, 1).unwrap(),
                audit_ic(&MechanismSpec::Exact, 4, 3).unwrap(),
            ),
            (
                audit_fairness(&MechanismSpec::Exact, 4, 1).unwrap(),
                audit_fairness(&MechanismSpec::Exact, 4, 3).unwrap(),
            ),
        ] {
            assert_eq!(seq.to_json(), par.to_json());
        }
    }

    #[test]
    fn upper_bound_demo_on_both_mechanisms() {
        let fair = demo_upper_bound(&MechanismSpec::Fair, 8).unwrap();
        assert!(fair.within_bound);
        assert!((fair.q_disconnected - 0.5).abs() <= IDENTITY_TOL);
        let exact = demo_upper_bound(&MechanismSpec::Exact, 8).unwrap();
        assert!(exact.within_bound);
        assert!((exact.q_disconnected - 1.0).abs() <= 1e-9);
        assert!((exact.q_connected - 0.75).abs() <= 1e-9);
    }

    #[test]
    fn proportionality_probe_exposes_the_exact_mechanism() {
        let probe = probe_proportionality(&MechanismSpec::Exact, 4, 12).unwrap();
        let l = (4.0f64 / 3.0).log2();
        assert!((probe.ratio_one_rival - (1.0 + l) / (1.0 - l)).abs() <= 1e-9);
        assert!((probe.ratio_two_rivals - (1.0 + 2.0 * l) / (1.0 - l)).abs() <= 1e-9);
        assert!(probe.difference > 0.1);
    }

    #[test]
    fn proportionality_probe_is_flat_for_uniform() {
        let probe = probe_proportionality(&MechanismSpec::Uniform, 4, 12).unwrap();
        assert!((probe.ratio_one_rival - 1.0).abs() <= 1e-12);
        assert!(probe.difference <= 1e-12);
    }

    #[test]
    fn overdistribution_demo_needs_its_hypotheses() {
        let table = GeneratorTable::from_fn(62, |_| 1.0).unwrap();
        let report = demo_overdistribution(&table, 10, 20, 2).unwrap();
        assert!(!report.hypotheses_met);
        assert!(report.over_distributes.is_none());
        assert_eq!(report.k, 1.0);
        assert_eq!(report.m, 1.0);
        // with f constant the mechanism is exact and well-behaved here
        assert!(report.nonroot_mass < 1.0);
    }

    #[test]
    fn overdistribution_demo_reports_the_quadratic_generator_honestly() {
        // f(p) = p^2: k = 1, m = 900/400; the ratio condition fails, so
        // the report carries the numbers and no verdict
        let table = GeneratorTable::from_fn(62, |k| (k * k) as f64).unwrap();
        let report = demo_overdistribution(&table, 10, 20, 2).unwrap();
        assert_eq!(report.k, 1.0);
        assert_eq!(report.m, 2.25);
        assert!(!report.hypotheses[2].holds);
        assert!(report.over_distributes.is_none());
    }

    #[test]
    fn worked_examples_agree_with_closed_forms() {
        let report = worked_examples().unwrap();
        assert!(
            report.passed(),
            "max deviation {} over rows {:?}",
            report.max_deviation,
            report
                .rows
                .iter()
                .filter(|r| (r.computed - r.expected).abs() > AUDIT_TOL)
                .collect::<Vec<_>>()
        );
    }
}
