//! Culprit edges: the edges that carry a trainable VN-input weight `w`.

use super::{EdgeRef, TannerGraph};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CulpritSet {
    edges: BTreeSet<EdgeRef>,
}

impl CulpritSet {
    /// Validates that every edge is an edge of `graph`.
    pub fn new(graph: &TannerGraph, edges: impl IntoIterator<Item = EdgeRef>) -> Result<Self> {
        let edges: BTreeSet<EdgeRef> = edges.into_iter().collect();
        if let Some(e) = edges.iter().find(|e| graph.edge_index(**e).is_none()) {
            return Err(Error::NotAnEdge { check: e.check, var: e.var });
        }
        Ok(CulpritSet { edges })
    }

    pub fn empty() -> Self {
        CulpritSet::default()
    }

    /// Every edge of the graph; the "train everything" configuration.
    pub fn all(graph: &TannerGraph) -> Self {
        CulpritSet { edges: graph.edges().iter().copied().collect() }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: EdgeRef) -> bool {
        self.edges.contains(&e)
    }

    /// Edges in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = EdgeRef> + '_ {
        self.edges.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<EdgeRef> {
        self.iter().collect()
    }

    /// True iff removing the set from `graph` leaves no 4-cycle.
    pub fn breaks_all_four_cycles(&self, graph: &TannerGraph) -> bool {
        graph
            .enumerate_4cycles()
            .iter()
            .all(|c| c.edges().iter().any(|e| self.edges.contains(e)))
    }
}

/// Greedy culprit selection: repeatedly remove the edge lying on the most
/// remaining 4-cycles (ties to the smaller check, then smaller variable)
/// until no 4-cycle is left. Not guaranteed minimal.
pub fn select_culprits(graph: &TannerGraph) -> CulpritSet {
    let mut current = graph.clone();
    let mut removed = BTreeSet::new();
    loop {
        let cycles = current.enumerate_4cycles();
        if cycles.is_empty() {
            break;
        }
        let mut counts: BTreeMap<EdgeRef, usize> = BTreeMap::new();
        for c in &cycles {
            for e in c.edges() {
                *counts.entry(e).or_default() += 1;
            }
        }
        let mut best: Option<(EdgeRef, usize)> = None;
        for (&e, &n) in &counts {
            if best.map_or(true, |(_, b)| n > b) {
                best = Some((e, n));
            }
        }
        let (edge, _) = best.expect("a cycle has edges");
        removed.insert(edge);
        current = current.without_edges(&[edge]).expect("edge taken from the graph");
    }
    CulpritSet { edges: removed }
}

/// Parses a culprit override file: one 1-based `check var` pair per line,
/// `#` comments and blank lines ignored.
pub fn parse_culprits_file(text: &str, graph: &TannerGraph) -> Result<CulpritSet> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let nums: Vec<&str> = content.split_whitespace().collect();
        let parse = |t: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(x) if x >= 1 => Ok(x - 1),
                _ => Err(Error::Parse { line, msg: format!("`{t}` is not a 1-based index") }),
            }
        };
        if nums.len() != 2 {
            return Err(Error::Parse { line, msg: "expected `check var`".into() });
        }
        let e = EdgeRef::new(parse(nums[0])?, parse(nums[1])?);
        if graph.edge_index(e).is_none() {
            return Err(Error::Parse { line, msg: format!("({e}) is not a 1-entry of the matrix") });
        }
        edges.push(e);
    }
    CulpritSet::new(graph, edges)
}
