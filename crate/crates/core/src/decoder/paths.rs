use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::graph::DecodingGraph;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Single-source shortest paths with reusable buffers.
///
/// Nodes marked as sinks are reached but never expanded, so paths only
/// touch a boundary at their final node. Ties go to the lower node id.
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pred_node: Vec<usize>,
    pred_edge: Vec<usize>,
    touched: Vec<usize>,
    heap: BinaryHeap<Reverse<Key>>,
}

impl ShortestPaths {
    pub fn new(n: usize) -> Self {
        ShortestPaths {
            dist: vec![f64::INFINITY; n],
            pred_node: vec![NONE; n],
            pred_edge: vec![NONE; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.dist[v] = f64::INFINITY;
            self.pred_node[v] = NONE;
            self.pred_edge[v] = NONE;
        }
        self.touched.clear();
        self.heap.clear();
    }

    /// Runs from `source`; `weight(edge_index)` overrides edge weights and
    /// `is_sink(v)` marks nodes that are not expanded. Stops early once all
    /// `targets` are settled (pass `None` for a full run).
    pub fn run(
        &mut self,
        graph: &DecodingGraph,
        source: usize,
        weight: impl Fn(usize) -> f64,
        is_sink: impl Fn(usize) -> bool,
        mut targets: Option<(&[bool], usize)>,
    ) {
        self.reset();
        self.dist[source] = 0.0;
        self.touched.push(source);
        self.heap.push(Reverse(Key(0.0, source)));
        while let Some(Reverse(Key(d, v))) = self.heap.pop() {
            if d > self.dist[v] {
                continue;
            }
            if let Some((mask, remaining)) = targets.as_mut() {
                if mask[v] {
                    *remaining -= 1;
                    if *remaining == 0 {
                        break;
                    }
                }
            }
            if v != source && is_sink(v) {
                continue;
            }
            for &(u, e) in graph.neighbors(v) {
                let nd = d + weight(e);
                if nd < self.dist[u] {
                    if self.dist[u].is_infinite() {
                        self.touched.push(u);
                    }
                    self.dist[u] = nd;
                    self.pred_node[u] = v;
                    self.pred_edge[u] = e;
                    self.heap.push(Reverse(Key(nd, u)));
                }
            }
        }
    }

    /// Edge indices on the tree path from the source to `target`.
    pub fn path_to(&self, target: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut v = target;
        while self.pred_edge[v] != NONE {
            out.push(self.pred_edge[v]);
            v = self.pred_node[v];
        }
        out.reverse();
        out
    }
}
