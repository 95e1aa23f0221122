//! Builders for the recurring forest families.
//!
//! Vertex labeling is fixed: star centers come first in chain order,
//! then the leaves of each star in the same order, then isolated extras.
//! A k-star has k vertices (center plus k-1 leaves); in a star path the
//! center of star i points at the center of star i+1, so progeny
//! accumulates toward the last star.

use crate::error::{Error, Result};
use crate::forest::{Forest, Vertex};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySpec {
    /// A single k-star.
    Star { size: usize },
    /// Star centers chained left to right, plus isolated extras.
    StarPath { sizes: Vec<usize>, extras: usize },
    /// The four-star chain (b, b, a, a) plus isolated extras; requires
    /// b >= 2a >= 2.
    Overpay { a: usize, b: usize, extras: usize },
    /// Two n/2-stars, optionally joined center-to-center (the second
    /// center points at the first).
    UpperBoundPair { n: usize, connected: bool },
}

pub fn build(spec: &FamilySpec) -> Result<Forest> {
    match spec {
        FamilySpec::Star { size } => build_star_path(&[*size], 0),
        FamilySpec::StarPath { sizes, extras } => build_star_path(sizes, *extras),
        FamilySpec::Overpay { a, b, extras } => {
            if *a < 1 || *b < 2 * a {
                return Err(Error::InvalidSpec(format!(
                    "overpay requires b >= 2a >= 2, got a={a}, b={b}"
                )));
            }
            build_star_path(&[*b, *b, *a, *a], *extras)
        }
        FamilySpec::UpperBoundPair { n, connected } => {
            if *n < 2 || !n.is_multiple_of(2) {
                return Err(Error::InvalidSpec(format!(
                    "upper-bound pair needs an even vertex count >= 2, got {n}"
                )));
            }
            let half = n / 2;
            let mut parent: Vec<Option<Vertex>> = vec![None; *n];
            parent[2..2 + (half - 1)].fill(Some(0));
            parent[2 + (half - 1)..].fill(Some(1));
            if *connected {
                parent[1] = Some(0);
            }
            Forest::new(parent)
        }
    }
}

fn build_star_path(sizes: &[usize], extras: usize) -> Result<Forest> {
    if sizes.is_empty() {
        return Err(Error::InvalidSpec("star path needs at least one star".into()));
    }
    if let Some(bad) = sizes.iter().find(|&&s| s < 1) {
        return Err(Error::InvalidSpec(format!("star size must be >= 1, got {bad}")));
    }
    let m = sizes.len();
    let n = sizes.iter().sum::<usize>() + extras;
    let mut parent: Vec<Option<Vertex>> = vec![None; n];
    for (center, slot) in parent.iter_mut().enumerate().take(m - 1) {
        *slot = Some(center + 1);
    }
    let mut next_leaf = m;
    for (center, &size) in sizes.iter().enumerate() {
        for _ in 0..size - 1 {
            parent[next_leaf] = Some(center);
            next_leaf += 1;
        }
    }
    Forest::new(parent)
}

/// Parses the CLI spec syntax: `star:K`, `star-path:S1,S2,...`,
/// `overpay:A,B`, `upper-pair:N`. `extras` and `connected` come from flags.
pub fn parse(kind: &str, extras: usize, connected: bool) -> Result<FamilySpec> {
    let (name, args) = kind
        .split_once(':')
        .ok_or_else(|| Error::InvalidSpec(format!("expected kind:args, got `{kind}`")))?;
    let numbers: Vec<usize> = args
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidSpec(format!("bad number `{s}` in `{kind}`")))
        })
        .collect::<Result<_>>()?;
    match (name, numbers.as_slice()) {
        ("star", [size]) => Ok(FamilySpec::Star { size: *size }),
        ("star-path", sizes) if !sizes.is_empty() => Ok(FamilySpec::StarPath {
            sizes: sizes.to_vec(),
            extras,
        }),
        ("overpay", [a, b]) => Ok(FamilySpec::Overpay { a: *a, b: *b, extras }),
        ("upper-pair", [n]) => Ok(FamilySpec::UpperBoundPair { n: *n, connected }),
        _ => Err(Error::InvalidSpec(format!("unrecognized family `{kind}`"))),
    }
}
