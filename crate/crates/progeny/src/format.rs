//! Forest text and JSON formats.
//!
//! Text (UTF-8, line based): first `n=<int>`, then one `child parent`
//! line per edge, `#` starts a comment. JSON: `{"n": 3, "parent":
//! [1, null, null]}`. Parsing auto-detects; emission defaults to JSON.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::Forest;

#[derive(Serialize, Deserialize)]
struct ForestRepr {
    n: usize,
    parent: Vec<Option<usize>>,
}

impl Serialize for Forest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ForestRepr {
            n: self.vertex_count(),
            parent: self.parents().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Forest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ForestRepr::deserialize(d)?;
        if repr.parent.len() != repr.n {
            return Err(serde::de::Error::custom(format!(
                "`parent` has {} entries but n={}",
                repr.parent.len(),
                repr.n
            )));
        }
        Forest::new(repr.parent).map_err(serde::de::Error::custom)
    }
}

pub fn parse_forest(text: &str) -> Result<Forest> {
    match text.trim_start().chars().next() {
        Some('{') => Ok(serde_json::from_str(text)?),
        _ => parse_text(text),
    }
}

fn parse_text(text: &str) -> Result<Forest> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if n.is_none() {
            let value = content
                .strip_prefix("n=")
                .ok_or_else(|| Error::SyntaxError {
                    line,
                    message: format!("expected `n=<int>`, got `{content}`"),
                })?
                .trim();
            n = Some(value.parse().map_err(|_| Error::SyntaxError {
                line,
                message: format!("bad vertex count `{value}`"),
            })?);
            continue;
        }
        let mut parts = content.split_whitespace();
        let (child, parent) = match (parts.next(), parts.next(), parts.next()) {
            (Some(c), Some(p), None) => (c, p),
            _ => {
                return Err(Error::SyntaxError {
                    line,
                    message: format!("expected `child parent`, got `{content}`"),
                })
            }
        };
        let parse_id = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::SyntaxError {
                line,
                message: format!("bad vertex id `{s}`"),
            })
        };
        edges.push((parse_id(child)?, parse_id(parent)?));
    }
    let n = n.ok_or_else(|| Error::SyntaxError {
        line: text.lines().count() + 1,
        message: "missing `n=<int>` line".into(),
    })?;
    Forest::from_edges(n, &edges)
}

pub fn emit_forest_json(forest: &Forest) -> String {
    serde_json::to_string(forest).expect("forest serialization cannot fail")
}

pub fn emit_forest_text(forest: &Forest) -> String {
    let mut out = format!("n={}\n", forest.vertex_count());
    for v in forest.vertices() {
        if let Some(p) = forest.parent_of(v) {
            out.push_str(&format!("{v} {p}\n"));
        }
    }
    out
}
