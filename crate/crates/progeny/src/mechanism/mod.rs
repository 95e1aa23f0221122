//! Selection mechanisms and the incentive-compatible extension engine.
//!
//! A mechanism assigns each forest a (sub-)distribution over its vertices.
//! Every mechanism here except the interval-share reference is defined by a
//! roots rule and extended to all vertices the only way incentive
//! compatibility allows: a non-root receives the value its own-edge-removed
//! forest gives it as a root. The extension terminates because each removal
//! deletes an edge.

pub mod exact;
pub mod fair;
pub mod generated;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{Forest, Vertex};

/// Tolerance behind the `valid` flag on distributions.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Per-vertex probabilities plus the aggregates audits care about.
#[derive(Clone, Debug)]
pub struct Distribution {
    probs: Vec<f64>,
    total: f64,
    nonroot_mass: f64,
    valid: bool,
}

impl Distribution {
    pub(crate) fn from_probs(probs: Vec<f64>, forest: &Forest) -> Self {
        let total: f64 = probs.iter().sum();
        let nonroot_mass: f64 = forest
            .vertices()
            .filter(|&v| !forest.is_root(v))
            .map(|v| probs[v])
            .sum();
        let valid =
            probs.iter().all(|&p| p >= -VALIDITY_TOL) && total <= 1.0 + VALIDITY_TOL;
        Distribution { probs, total, nonroot_mass, valid }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, v: Vertex) -> f64 {
        self.probs[v]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Probability mass sitting on non-roots; above 1 it certifies that no
    /// valid exact extension exists.
    pub fn nonroot_mass(&self) -> f64 {
        self.nonroot_mass
    }

    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Vertices with strictly positive probability.
    pub fn support(&self) -> Vec<Vertex> {
        self.probs
            .iter()
            .enumerate()
            .filter_map(|(v, &p)| (p > 0.0).then_some(v))
            .collect()
    }

    /// JSON with 17-significant-digit reals (lossless f64 round trip).
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"probs\":[");
        for (i, &p) in self.probs.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(p));
        }
        out.push_str("],\"total\":");
        out.push_str(&fmt_f64(self.total));
        out.push_str(",\"valid\":");
        out.push_str(if self.valid { "true" } else { "false" });
        out.push('}');
        out
    }
}

/// 17 significant digits, always a valid JSON number.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// The generating function of a residual-splitting mechanism, tabulated
/// over progenies 1..=len. All values strictly positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneratorTable {
    values: Vec<f64>,
}

impl GeneratorTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidGenerator { k: i + 1, value: v });
            }
        }
        Ok(GeneratorTable { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        GeneratorTable::new((1..=n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.values.len() {
            return Err(Error::GeneratorDomain { needed: k, len: self.values.len() });
        }
        Ok(self.values[k - 1])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Reads a JSON array of positive reals, `[f(1), f(2), ...]`.
    pub fn from_json_file(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let values: Vec<f64> = serde_json::from_str(&text)?;
        GeneratorTable::new(values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MechanismSpec {
    /// Logarithmic roots rule on the top root; fair in limit, may leave
    /// probability undistributed. CLI name `mf`.
    Fair,
    /// Interval-sharing roots rule with the top root taking the exactness
    /// complement; always sums to 1. CLI name `mb`.
    Exact,
    /// Positive, proportional family converging to `Fair` as epsilon -> 0.
    /// CLI name `meps:<eps>`, eps in (0,1).
    FairEpsilon(f64),
    /// Residual split among roots proportional to f(progeny). CLI `fg:<path>`.
    FunctionGenerated(GeneratorTable),
    /// The exact-but-not-IC interval mechanism, kept as a reference point.
    /// CLI name `mprime`.
    IntervalShare,
    /// 1/n everywhere. CLI name `uniform`.
    Uniform,
    /// 0 everywhere. CLI name `empty`.
    Empty,
    /// Orbit-averaged wrapper around any mechanism. CLI name `sym:<inner>`.
    Symmetrized(Box<MechanismSpec>),
}

impl MechanismSpec {
    /// Parses the CLI syntax. `load_generator` resolves the `fg:` payload
    /// (a path, in the CLI) to a table.
    pub fn parse(
        s: &str,
        load_generator: &dyn Fn(&str) -> Result<GeneratorTable>,
    ) -> Result<Self> {
        if let Some(inner) = s.strip_prefix("sym:") {
            return Ok(MechanismSpec::Symmetrized(Box::new(Self::parse(
                inner,
                load_generator,
            )?)));
        }
        if let Some(eps) = s.strip_prefix("meps:") {
            let eps: f64 = eps
                .parse()
                .map_err(|_| Error::UnknownMechanism(s.to_string()))?;
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "epsilon must lie in (0,1), got {eps}"
                )));
            }
            return Ok(MechanismSpec::FairEpsilon(eps));
        }
        if let Some(src) = s.strip_prefix("fg:") {
            return Ok(MechanismSpec::FunctionGenerated(load_generator(src)?));
        }
        match s {
            "mf" => Ok(MechanismSpec::Fair),
            "mb" => Ok(MechanismSpec::Exact),
            "mprime" => Ok(MechanismSpec::IntervalShare),
            "uniform" => Ok(MechanismSpec::Uniform),
            "empty" => Ok(MechanismSpec::Empty),
            _ => Err(Error::UnknownMechanism(s.to_string())),
        }
    }
}

impl std::fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MechanismSpec::Fair => write!(f, "mf"),
            MechanismSpec::Exact => write!(f, "mb"),
            MechanismSpec::FairEpsilon(e) => write!(f, "meps:{e}"),
            MechanismSpec::FunctionGenerated(_) => write!(f, "fg"),
            MechanismSpec::IntervalShare => write!(f, "mprime"),
            MechanismSpec::Uniform => write!(f, "uniform"),
            MechanismSpec::Empty => write!(f, "empty"),
            MechanismSpec::Symmetrized(inner) => write!(f, "sym:{inner}"),
        }
    }
}

/// Evaluates a mechanism on a forest.
///
/// For the roots-rule mechanisms every non-root x receives its value in the
/// forest with x's out-edge removed, so the result is incentive-compatible
/// by construction; the audits in `verify` re-check that equality from the
/// outside.
pub fn evaluate(spec: &MechanismSpec, forest: &Forest) -> Result<Distribution> {
    let n = forest.vertex_count();
    let probs = match spec {
        MechanismSpec::Uniform => vec![1.0 / n as f64; n],
        MechanismSpec::Empty => vec![0.0; n],
        MechanismSpec::Fair => fair::distribution(forest),
        MechanismSpec::FairEpsilon(eps) => fair::epsilon_distribution(forest, *eps)?,
        MechanismSpec::Exact => exact::Evaluator::new().distribution(forest)?.as_ref().clone(),
        MechanismSpec::IntervalShare => exact::interval_share(forest)?,
        MechanismSpec::FunctionGenerated(table) => {
            generated::FgEngine::new(table).distribution(forest)?
        }
        MechanismSpec::Symmetrized(inner) => symmetrize_probs(inner, forest)?,
    };
    Ok(Distribution::from_probs(probs, forest))
}

/// Exact relabeling over which symmetrization stays tractable.
pub const SYMMETRIZE_MAX_N: usize = 9;

/// The exact expectation of drawing a uniformly random relabeling of the
/// vertex ids, running the inner mechanism on the relabeled forest, and
/// mapping the selection back: M_sym(x; F) = avg over permutations pi of
/// M(pi(x); pi(F)).
///
/// This is the symmetrization that keeps IC intact. Averaging the inner
/// probabilities over the automorphism orbits of F alone does not: with
/// F = {0 -> 1, 2} the leaf 0 holds a fixed probability of 1/2 (it tops
/// the empty forest F_0 by tie-break) while every orbit of F is trivial,
/// yet in F_0 all three vertices share one orbit, so the orbit average
/// yields 1/6 there and breaks M(0;F) = M(0;F_0). The relabeling average
/// assigns 1/6 on both sides. It is constant on orbits (compose any
/// automorphism with the random relabeling) and preserves the total for
/// mechanisms whose total is isomorphism-invariant, exact ones included.
fn symmetrize_probs(inner: &MechanismSpec, forest: &Forest) -> Result<Vec<f64>> {
    let n = forest.vertex_count();
    if n > SYMMETRIZE_MAX_N {
        return Err(Error::InvalidSpec(format!(
            "symmetrization averages all {n}! relabelings; n <= {SYMMETRIZE_MAX_N} supported"
        )));
    }
    let mut acc = vec![0.0; n];
    let mut count = 0u64;
    let mut perm: Vec<Vertex> = (0..n).collect();
    loop {
        let mut relabeled = vec![None; n];
        for v in 0..n {
            relabeled[perm[v]] = forest.parent_of(v).map(|p| perm[p]);
        }
        let image = Forest::new(relabeled).expect("relabeling preserves validity");
        let d = evaluate(inner, &image)?;
        for v in 0..n {
            acc[v] += d.get(perm[v]);
        }
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    for value in &mut acc {
        *value /= count as f64;
    }
    Ok(acc)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// The uniform baseline: 1/n everywhere, trivially IC and exact.
pub fn uniform(forest: &Forest) -> Distribution {
    evaluate(&MechanismSpec::Uniform, forest).expect("uniform cannot fail")
}

/// The empty baseline: all zeros.
pub fn empty(forest: &Forest) -> Distribution {
    evaluate(&MechanismSpec::Empty, forest).expect("empty cannot fail")
}
