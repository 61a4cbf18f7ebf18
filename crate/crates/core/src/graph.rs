//! Decoding graphs for unrotated surface codes.
//!
//! Detectors are numbered densely from zero. The two merged boundary nodes
//! follow the detectors: `left = n_det`, `right = n_det + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-likelihood weight `log10((1 - p) / p)`.
pub fn edge_weight(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("edge probability {p} outside (0, 1)")));
    }
    Ok(((1.0 - p) / p).log10())
}

/// Inverse of [`edge_weight`].
pub fn weight_to_probability(w: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    CodeCapacity,
    Phenomenological,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub p: f64,
    pub w: f64,
    pub logical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub d_x: usize,
    pub d_z: usize,
    pub rounds: usize,
    pub model: NoiseModel,
}

#[derive(Debug, Clone)]
pub struct DecodingGraph {
    n_det: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    meta: GraphMeta,
}

fn check_distance(name: &str, d: usize) -> Result<()> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::invalid(format!("{name} must be odd and >= 3, got {d}")));
    }
    Ok(())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::invalid(format!("{name} = {p} outside (0, 0.5)")));
    }
    Ok(())
}

/// Space-like edges of one layer: rows are Z-stabiliser rows, `cols` detector
/// columns per row. Returns (a, b, logical) with local ids and `None` for the
/// boundary side.
fn layer_edges(rows: usize, cols: usize) -> Vec<(Side, Side, bool)> {
    let cut = cols / 2;
    let mut out = Vec::with_capacity(rows * (cols + 1) + (rows - 1) * cols);
    for r in 0..rows {
        for x in 0..=cols {
            let a = if x == 0 { Side::Left } else { Side::Det(r * cols + x - 1) };
            let b = if x == cols { Side::Right } else { Side::Det(r * cols + x) };
            out.push((a, b, x == cut));
        }
    }
    for r in 0..rows - 1 {
        for c in 0..cols {
            out.push((Side::Det(r * cols + c), Side::Det((r + 1) * cols + c), false));
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
    Det(usize),
}

impl DecodingGraph {
    /// Code-capacity graph with one edge per data qubit.
    pub fn code_capacity(d_x: usize, d_z: usize, p: f64) -> Result<Self> {
        check_distance("d_x", d_x)?;
        check_distance("d_z", d_z)?;
        check_probability("p", p)?;
        let (rows, cols) = (d_z, d_x - 1);
        let n_det = rows * cols;
        let w = edge_weight(p)?;
        let resolve = |s: Side| match s {
            Side::Left => n_det,
            Side::Right => n_det + 1,
            Side::Det(i) => i,
        };
        let edges = layer_edges(rows, cols)
            .into_iter()
            .map(|(a, b, logical)| Edge { a: resolve(a), b: resolve(b), p, w, logical })
            .collect();
        let meta = GraphMeta { d_x, d_z, rounds: 1, model: NoiseModel::CodeCapacity };
        Self::from_parts(n_det, edges, meta)
    }

    /// Space-time graph for `rounds` noisy syndrome measurements. Final-round
    /// measurement errors connect to the boundary on the same side of the
    /// logical cut.
    pub fn phenomenological(d: usize, rounds: usize, p_data: f64, p_meas: f64) -> Result<Self> {
        check_distance("d", d)?;
        if rounds < 1 {
            return Err(Error::invalid("rounds must be >= 1"));
        }
        check_probability("p_data", p_data)?;
        check_probability("p_meas", p_meas)?;
        let (rows, cols) = (d, d - 1);
        let layer = rows * cols;
        let n_det = layer * rounds;
        let (left, right) = (n_det, n_det + 1);
        let (w_data, w_meas) = (edge_weight(p_data)?, edge_weight(p_meas)?);
        let space = layer_edges(rows, cols);
        let mut edges = Vec::with_capacity(rounds * (space.len() + layer));
        for t in 0..rounds {
            let off = t * layer;
            let resolve = |s: Side| match s {
                Side::Left => left,
                Side::Right => right,
                Side::Det(i) => off + i,
            };
            for &(a, b, logical) in &space {
                edges.push(Edge { a: resolve(a), b: resolve(b), p: p_data, w: w_data, logical });
            }
            for i in 0..layer {
                let b = if t + 1 < rounds {
                    off + layer + i
                } else if i % cols < cols / 2 {
                    left
                } else {
                    right
                };
                edges.push(Edge { a: off + i, b, p: p_meas, w: w_meas, logical: false });
            }
        }
        let meta = GraphMeta { d_x: d, d_z: d, rounds, model: NoiseModel::Phenomenological };
        Self::from_parts(n_det, edges, meta)
    }

    /// Assembles a graph from raw parts, normalising endpoint order and
    /// sorting edges lexicographically.
    pub fn from_parts(n_det: usize, mut edges: Vec<Edge>, meta: GraphMeta) -> Result<Self> {
        let n = n_det + 2;
        for e in &mut edges {
            if e.a >= n || e.b >= n || e.a == e.b {
                return Err(Error::invalid(format!("bad edge endpoints ({}, {})", e.a, e.b)));
            }
            if e.a >= n_det && e.b >= n_det {
                return Err(Error::invalid("edge joins two boundary nodes"));
            }
            if !(e.p > 0.0 && e.p < 1.0) || !e.w.is_finite() || e.w < 0.0 {
                return Err(Error::invalid(format!("edge ({}, {}) has p={} w={}", e.a, e.b, e.p, e.w)));
            }
            if e.a > e.b {
                std::mem::swap(&mut e.a, &mut e.b);
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.a].push((e.b, i));
            adj[e.b].push((e.a, i));
        }
        Ok(DecodingGraph { n_det, edges, adj, meta })
    }

    pub fn num_detectors(&self) -> usize {
        self.n_det
    }

    pub fn num_nodes(&self) -> usize {
        self.n_det + 2
    }

    pub fn detectors(&self) -> std::ops::Range<usize> {
        0..self.n_det
    }

    pub fn boundaries(&self) -> [usize; 2] {
        [self.n_det, self.n_det + 1]
    }

    pub fn left(&self) -> usize {
        self.n_det
    }

    pub fn right(&self) -> usize {
        self.n_det + 1
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        v >= self.n_det
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(neighbour, edge index)` pairs incident to `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    /// Indices of the edges crossing the logical cut.
    pub fn logical_cut(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&i| self.edges[i].logical).collect()
    }

    /// Crossing parity of an edge set (edge indices).
    pub fn logical_parity(&self, edge_set: &[usize]) -> bool {
        edge_set.iter().filter(|&&i| self.edges[i].logical).count() % 2 == 1
    }

    /// Sum of weights of an edge set.
    pub fn weight_of(&self, edge_set: &[usize]) -> f64 {
        edge_set.iter().map(|&i| self.edges[i].w).sum()
    }

    /// Same topology with every edge weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("scale factor {c} must be positive")));
        }
        let edges = self.edges.iter().map(|e| {
            let w = e.w * c;
            Edge { w, p: weight_to_probability(w), ..*e }
        });
        Self::from_parts(self.n_det, edges.collect(), self.meta.clone())
    }

    /// Same topology with every weight set to `w`.
    pub fn with_uniform_weight(&self, w: f64) -> Result<Self> {
        let p = weight_to_probability(w);
        let edges = self.edges.iter().map(|e| Edge { w, p, ..*e }).collect();
        Self::from_parts(self.n_det, edges, self.meta.clone())
    }

    /// Same topology with the given per-edge weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::invalid("weight vector length differs from edge count"));
        }
        let edges = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, &w)| Edge { w, p: weight_to_probability(w), ..*e })
            .collect();
        Self::from_parts(self.n_det, edges, self.meta.clone())
    }
}

/// On-disk JSON form.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub detectors: Vec<usize>,
    pub boundaries: [usize; 2],
    pub edges: Vec<EdgeDocument>,
    pub meta: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub a: usize,
    pub b: usize,
    pub p: f64,
    pub w: f64,
    pub logical: bool,
}

/// Parses a JSON graph document without validating the graph.
pub fn parse_document(text: &str) -> Result<GraphDocument> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("graph document: {e}")))
}

impl DecodingGraph {
    /// JSON document; `extra` is merged into the `meta` block.
    pub fn to_document(&self, extra: serde_json::Map<String, serde_json::Value>) -> GraphDocument {
        let mut meta = match serde_json::to_value(&self.meta) {
            Ok(serde_json::Value::Object(m)) => m,
            _ => unreachable!("GraphMeta serialises to an object"),
        };
        meta.extend(extra);
        GraphDocument {
            detectors: self.detectors().collect(),
            boundaries: self.boundaries(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDocument { a: e.a, b: e.b, p: e.p, w: e.w, logical: e.logical })
                .collect(),
            meta: serde_json::Value::Object(meta),
        }
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        let n_det = doc.detectors.len();
        if doc.detectors.iter().enumerate().any(|(i, &d)| i != d) {
            return Err(Error::invalid("detector ids must be 0..n in order"));
        }
        if doc.boundaries != [n_det, n_det + 1] {
            return Err(Error::invalid("boundary ids must follow the detectors"));
        }
        let meta: GraphMeta = serde_json::from_value(doc.meta.clone())
            .map_err(|e| Error::invalid(format!("graph meta: {e}")))?;
        let edges = doc
            .edges
            .iter()
            .map(|e| Edge { a: e.a, b: e.b, p: e.p, w: e.w, logical: e.logical })
            .collect();
        let g = Self::from_parts(n_det, edges, meta)?;
        if !g.cut_separates_boundaries() {
            return Err(Error::invalid("logical edges do not separate the boundaries"));
        }
        Ok(g)
    }

    /// True when removing the logical edges disconnects left from right.
    pub fn cut_separates_boundaries(&self) -> bool {
        let mut seen = vec![false; self.num_nodes()];
        let mut stack = vec![self.left()];
        seen[self.left()] = true;
        while let Some(v) = stack.pop() {
            for &(u, e) in &self.adj[v] {
                if !self.edges[e].logical && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        !seen[self.right()]
    }
}
