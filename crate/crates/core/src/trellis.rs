//! The unrolled decoding network and its weight space.
//!
//! For `L` iterations the network has `3L + 1` layers: the `n` input nodes,
//! then per iteration a variable-to-check layer `VN_ℓ` and a check-to-variable
//! layer `CN_ℓ` (one node per Tanner edge each) and an output layer `O_ℓ` of
//! `n` nodes. Connections are the same in every iteration, so they are stored
//! once per edge. Every edge carries an output weight `w'`; culprit edges also
//! carry a VN-input weight `w` (non-culprits use 1). Both are shared by all
//! iterations.

use crate::error::{Error, Result};
use crate::format::fmt12;
use crate::rng;
use crate::tanner::{CulpritSet, EdgeRef, TannerGraph};
use rand_distr::{Distribution, Normal};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Input,
    /// `VN_ℓ`, one node per edge `e_{v_i, ch_j}`.
    VariableToCheck,
    /// `CN_ℓ`, one node per edge `e_{ch_j, v_i}`.
    CheckToVariable,
    /// `O_ℓ`, one node per variable.
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub kind: LayerKind,
    /// 1-based iteration, 0 for the input layer.
    pub iteration: usize,
    pub len: usize,
}

/// A node of the unrolled network: `(layer index, node index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRef {
    pub layer: usize,
    pub node: usize,
}

#[derive(Debug, Clone)]
pub struct TrellisSpec {
    graph: TannerGraph,
    iterations: usize,
    culprits: CulpritSet,
    /// Per edge: slot in `WeightVector::w`, if the edge is a culprit.
    culprit_slot: Vec<Option<usize>>,
    /// Per edge `(j, i)`: edges `(k, i)`, `k != j`, feeding its VN node.
    vn_inputs: Vec<Vec<usize>>,
    /// Per edge `(j, i)`: edges `(j, k)`, `k != i`, feeding its CN node.
    cn_inputs: Vec<Vec<usize>>,
}

pub fn build_trellis(graph: &TannerGraph, iterations: usize, culprits: &CulpritSet) -> Result<TrellisSpec> {
    TrellisSpec::new(graph, iterations, culprits)
}

impl TrellisSpec {
    pub fn new(graph: &TannerGraph, iterations: usize, culprits: &CulpritSet) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::Config("the network needs at least one iteration".into()));
        }
        let culprits = CulpritSet::new(graph, culprits.iter())?;
        let mut culprit_slot = vec![None; graph.n_edges()];
        for (slot, e) in culprits.iter().enumerate() {
            culprit_slot[graph.edge_index(e).expect("validated culprit")] = Some(slot);
        }
        let edges = graph.edges();
        let vn_inputs = edges
            .iter()
            .map(|e| {
                graph
                    .var_edges(e.var)
                    .iter()
                    .copied()
                    .filter(|&f| edges[f].check != e.check)
                    .collect()
            })
            .collect();
        let cn_inputs = edges
            .iter()
            .map(|e| {
                graph
                    .chk_edges(e.check)
                    .iter()
                    .copied()
                    .filter(|&f| edges[f].var != e.var)
                    .collect()
            })
            .collect();
        Ok(TrellisSpec {
            graph: graph.clone(),
            iterations,
            culprits,
            culprit_slot,
            vn_inputs,
            cn_inputs,
        })
    }

    /// Same graph and culprits, different iteration count.
    pub fn with_iterations(&self, iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::Config("the network needs at least one iteration".into()));
        }
        Ok(TrellisSpec { iterations, ..self.clone() })
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn n_vars(&self) -> usize {
        self.graph.n_vars()
    }

    pub fn n_edges(&self) -> usize {
        self.graph.n_edges()
    }

    pub fn culprits(&self) -> &CulpritSet {
        &self.culprits
    }

    pub fn culprit_slot(&self, edge: usize) -> Option<usize> {
        self.culprit_slot[edge]
    }

    /// Edge indices of the culprits, in weight-slot order.
    pub fn culprit_edges(&self) -> Vec<usize> {
        self.culprits
            .iter()
            .map(|e| self.graph.edge_index(e).expect("validated culprit"))
            .collect()
    }

    /// `E' + E`.
    pub fn n_params(&self) -> usize {
        self.culprits.len() + self.n_edges()
    }

    pub fn vn_inputs(&self, edge: usize) -> &[usize] {
        &self.vn_inputs[edge]
    }

    pub fn cn_inputs(&self, edge: usize) -> &[usize] {
        &self.cn_inputs[edge]
    }

    /// Edges feeding output node `v`: every edge at the variable.
    pub fn out_inputs(&self, var: usize) -> &[usize] {
        self.graph.var_edges(var)
    }

    pub fn n_layers(&self) -> usize {
        3 * self.iterations + 1
    }

    pub fn layers(&self) -> Vec<Layer> {
        let (n, e) = (self.n_vars(), self.n_edges());
        let mut out = vec![Layer { kind: LayerKind::Input, iteration: 0, len: n }];
        for it in 1..=self.iterations {
            out.push(Layer { kind: LayerKind::VariableToCheck, iteration: it, len: e });
            out.push(Layer { kind: LayerKind::CheckToVariable, iteration: it, len: e });
            out.push(Layer { kind: LayerKind::Output, iteration: it, len: n });
        }
        out
    }

    /// Incoming connections of a node. Every VN node also reads the input
    /// node of its variable, at every iteration, as does every output node.
    pub fn incoming(&self, node: NodeRef) -> Vec<NodeRef> {
        let layer = node.layer;
        assert!(layer < self.n_layers(), "layer out of range");
        if layer == 0 {
            return Vec::new();
        }
        let it = (layer - 1) / 3 + 1;
        let base = 3 * (it - 1) + 1;
        let at = |layer: usize| move |x: &usize| NodeRef { layer, node: *x };
        match layer - base {
            0 => {
                let e = self.graph.edges()[node.node];
                let mut v = vec![NodeRef { layer: 0, node: e.var }];
                if it > 1 {
                    v.extend(self.vn_inputs[node.node].iter().map(at(base - 2)));
                }
                v
            }
            1 => self.cn_inputs[node.node].iter().map(at(base)).collect(),
            _ => {
                let mut v = vec![NodeRef { layer: 0, node: node.node }];
                v.extend(self.graph.var_edges(node.node).iter().map(at(base + 1)));
                v
            }
        }
    }

    /// Hex digest of the underlying parity-check matrix.
    pub fn matrix_digest(&self) -> String {
        self.graph.to_matrix().digest()
    }
}

/// Initial weight distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightInit {
    Constant(f64),
    /// Normal samples clamped to `(0, 2]`.
    Gaussian { mean: f64, std: f64 },
}

impl Default for WeightInit {
    fn default() -> Self {
        WeightInit::Gaussian { mean: 1.0, std: 0.1 }
    }
}

const GAUSSIAN_FLOOR: f64 = 1e-6;
const INIT_STREAM: u64 = (1 << 24) - 1;

/// The trainable parameters `W = (w_1..w_E', w'_1..w'_E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    /// VN-input weights, one per culprit edge in canonical order.
    pub w: Vec<f64>,
    /// Output weights, one per edge in canonical order.
    pub wp: Vec<f64>,
}

impl WeightVector {
    /// All-ones weights: the network computes plain sum-product.
    pub fn unit(spec: &TrellisSpec) -> Self {
        WeightVector { w: vec![1.0; spec.culprits().len()], wp: vec![1.0; spec.n_edges()] }
    }

    pub fn init(spec: &TrellisSpec, init: WeightInit, seed: u64) -> Result<Self> {
        match init {
            WeightInit::Constant(c) => Ok(WeightVector {
                w: vec![c; spec.culprits().len()],
                wp: vec![c; spec.n_edges()],
            }),
            WeightInit::Gaussian { mean, std } => {
                if !(std >= 0.0) || !mean.is_finite() || !std.is_finite() {
                    return Err(Error::Config(format!("invalid gaussian init ({mean}, {std})")));
                }
                let normal = Normal::new(mean, std).expect("std checked");
                let mut rng = rng::substream(seed, INIT_STREAM, 0);
                let flat: Vec<f64> = (0..spec.n_params())
                    .map(|_| normal.sample(&mut rng).clamp(GAUSSIAN_FLOOR, 2.0))
                    .collect();
                Self::from_flat(spec, &flat)
            }
        }
    }

    /// `flat` is `(w_1..w_E', w'_1..w'_E)`.
    pub fn from_flat(spec: &TrellisSpec, flat: &[f64]) -> Result<Self> {
        if flat.len() != spec.n_params() {
            return Err(Error::Length { expected: spec.n_params(), found: flat.len() });
        }
        let (w, wp) = flat.split_at(spec.culprits().len());
        Ok(WeightVector { w: w.to_vec(), wp: wp.to_vec() })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.w.iter().chain(&self.wp).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.w.len() + self.wp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_shape(&self, spec: &TrellisSpec) -> Result<()> {
        if self.w.len() != spec.culprits().len() {
            return Err(Error::Length { expected: spec.culprits().len(), found: self.w.len() });
        }
        if self.wp.len() != spec.n_edges() {
            return Err(Error::Length { expected: spec.n_edges(), found: self.wp.len() });
        }
        Ok(())
    }

    /// Per-edge VN-input weight: `w` on culprits, 1 elsewhere.
    pub fn vn_weights(&self, spec: &TrellisSpec) -> Vec<f64> {
        (0..spec.n_edges())
            .map(|e| spec.culprit_slot(e).map_or(1.0, |s| self.w[s]))
            .collect()
    }

    /// Serializes in the `neurolat-weights v1` text format. `comments` are
    /// written as `#` lines after the header.
    pub fn to_file_string(&self, spec: &TrellisSpec, comments: &[String]) -> String {
        let edges = spec.graph().edges();
        let mut out = String::from("neurolat-weights v1\n");
        for c in comments {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "matrix_digest {}", spec.matrix_digest());
        let _ = writeln!(out, "L {}", spec.iterations());
        for (e, w) in spec.culprit_edges().into_iter().zip(&self.w) {
            let _ = writeln!(out, "w {} {}", edges[e], fmt12(*w));
        }
        for (e, wp) in edges.iter().zip(&self.wp) {
            let _ = writeln!(out, "wp {} {}", e, fmt12(*wp));
        }
        out
    }
}

/// Contents of a weights file.
#[derive(Debug, Clone)]
pub struct LoadedWeights {
    pub weights: WeightVector,
    pub culprits: CulpritSet,
    pub iterations: usize,
}

/// Parses a weights file against `graph`. Every weight line must be present
/// exactly once, in canonical order, and the matrix digest must match.
pub fn parse_weights_file(text: &str, graph: &TannerGraph) -> Result<LoadedWeights> {
    let werr = |line: usize, msg: String| Error::WeightsFile { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut next = |what: &str| lines.next().ok_or_else(|| werr(0, format!("missing {what}")));

    let (line, header) = next("header")?;
    if header != "neurolat-weights v1" {
        return Err(werr(line, format!("unknown header `{header}`")));
    }

    let (line, digest_line) = next("matrix_digest line")?;
    let found = digest_line
        .strip_prefix("matrix_digest ")
        .ok_or_else(|| werr(line, "expected `matrix_digest <hex>`".into()))?
        .trim();
    let expected = graph.to_matrix().digest();
    if found != expected {
        return Err(Error::DigestMismatch { expected, found: found.to_string() });
    }

    let (line, l_line) = next("L line")?;
    let iterations: usize = l_line
        .strip_prefix("L ")
        .and_then(|s| s.trim().parse().ok())
        .filter(|&l| l >= 1)
        .ok_or_else(|| werr(line, "expected `L <count>` with count >= 1".into()))?;

    let mut culprit_edges: Vec<EdgeRef> = Vec::new();
    let mut w = Vec::new();
    let mut wp = Vec::new();
    let edges = graph.edges();
    for (line, content) in lines {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(werr(line, "expected `<w|wp> <check> <var> <value>`".into()));
        }
        let idx = |t: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(x) if x >= 1 => Ok(x - 1),
                _ => Err(werr(line, format!("`{t}` is not a 1-based index"))),
            }
        };
        let e = EdgeRef::new(idx(tokens[1])?, idx(tokens[2])?);
        let value: f64 = tokens[3]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| werr(line, format!("`{}` is not a finite number", tokens[3])))?;
        if graph.edge_index(e).is_none() {
            return Err(werr(line, format!("({e}) is not an edge of the matrix")));
        }
        match tokens[0] {
            "w" => {
                if !wp.is_empty() {
                    return Err(werr(line, "`w` lines must precede `wp` lines".into()));
                }
                if culprit_edges.last().is_some_and(|&last| last >= e) {
                    return Err(werr(line, "`w` lines out of canonical order or repeated".into()));
                }
                culprit_edges.push(e);
                w.push(value);
            }
            "wp" => {
                match edges.get(wp.len()) {
                    Some(&expect) if expect == e => {}
                    Some(&expect) => {
                        return Err(werr(line, format!("expected `wp {expect} ..`, found ({e})")))
                    }
                    None => return Err(werr(line, "extra `wp` line".into())),
                }
                wp.push(value);
            }
            other => return Err(werr(line, format!("unknown record `{other}`"))),
        }
    }
    if wp.len() != edges.len() {
        return Err(werr(
            0,
            format!("missing `wp` lines: {} of {} edges present", wp.len(), edges.len()),
        ));
    }
    let culprits = CulpritSet::new(graph, culprit_edges)?;
    Ok(LoadedWeights { weights: WeightVector { w, wp }, culprits, iterations })
}
