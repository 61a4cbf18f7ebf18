//! Minimum-weight perfect matching decoder.

pub mod blossom;
mod paths;

pub use paths::ShortestPaths;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DecodingGraph;
use crate::noise::syndrome_of;

/// One matched pair. `b` is either a detector or a boundary node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Correction {
    /// Sorted edge indices.
    pub edges: Vec<usize>,
    pub total_weight: f64,
    pub matching: Vec<MatchedPair>,
}

/// Solution of a defect matching problem. `partner[i] == None` means defect
/// `i` is matched to the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectMatching {
    pub partner: Vec<Option<usize>>,
    pub cost: f64,
}

/// Minimum-cost matching where every defect pairs with another defect or
/// with the boundary. `pair[i][j] = inf` marks pairs that cannot match.
pub fn min_weight_perfect_matching(pair: &[Vec<f64>], boundary: &[f64]) -> Result<DefectMatching> {
    let k = boundary.len();
    if pair.len() != k || pair.iter().any(|row| row.len() != k) {
        return Err(Error::invalid("cost matrix shape does not match boundary costs"));
    }
    if boundary.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::invalid("boundary costs must be finite and non-negative"));
    }
    for i in 0..k {
        for j in 0..k {
            let c = pair[i][j];
            if c.is_nan() || c < 0.0 || (i != j && c != pair[j][i]) {
                return Err(Error::invalid(format!("bad pair cost ({i}, {j}) = {c}")));
            }
        }
    }
    let partner = canonicalize(pair, boundary, solve_raw(pair, boundary));
    let cost = matching_cost(pair, boundary, &partner);
    Ok(DefectMatching { partner, cost })
}

fn solve_raw(pair: &[Vec<f64>], boundary: &[f64]) -> Vec<Option<usize>> {
    match boundary.len() {
        0 => Vec::new(),
        1 => vec![None],
        2 if pair[0][1] <= boundary[0] + boundary[1] => vec![Some(1), Some(0)],
        2 => vec![None, None],
        _ => solve_blossom(pair, boundary),
    }
}

fn matching_cost(pair: &[Vec<f64>], boundary: &[f64], partner: &[Option<usize>]) -> f64 {
    partner
        .iter()
        .enumerate()
        .map(|(i, p)| match *p {
            None => boundary[i],
            Some(j) if i < j => pair[i][j],
            Some(_) => 0.0,
        })
        .sum()
}

/// Relative slack under which two matchings count as equal cost.
const TIE_TOLERANCE: f64 = 1e-9;

/// Lexicographically smallest optimal matching, with the boundary ranked after
/// every defect. Each defect in turn is tied to the earliest partner that still
/// admits an optimal completion, so the result does not depend on which
/// optimum the solver returned.
fn canonicalize(pair: &[Vec<f64>], boundary: &[f64], mut partner: Vec<Option<usize>>) -> Vec<Option<usize>> {
    let k = partner.len();
    let optimum = matching_cost(pair, boundary, &partner);
    let slack = TIE_TOLERANCE * optimum;
    let rank = |p: Option<usize>| p.unwrap_or(usize::MAX);
    let mut fixed = vec![false; k];
    let mut fixed_cost = 0.0;
    for i in 0..k {
        if fixed[i] {
            continue;
        }
        let open: Vec<usize> = (i + 1..k).filter(|&j| !fixed[j]).collect();
        let candidates = open
            .iter()
            .map(|&j| Some(j))
            .chain(std::iter::once(None))
            .take_while(|&c| rank(c) < rank(partner[i]));
        for cand in candidates {
            let head = match cand {
                Some(j) => pair[i][j],
                None => boundary[i],
            };
            if !head.is_finite() {
                continue;
            }
            let rest: Vec<usize> = open.iter().copied().filter(|&j| Some(j) != cand).collect();
            let sub_pair: Vec<Vec<f64>> = rest.iter().map(|&a| rest.iter().map(|&b| pair[a][b]).collect()).collect();
            let sub_boundary: Vec<f64> = rest.iter().map(|&a| boundary[a]).collect();
            let sub = solve_raw(&sub_pair, &sub_boundary);
            let total = fixed_cost + head + matching_cost(&sub_pair, &sub_boundary, &sub);
            if total <= optimum + slack {
                partner[i] = cand;
                if let Some(j) = cand {
                    partner[j] = Some(i);
                }
                for (x, &a) in rest.iter().enumerate() {
                    partner[a] = sub[x].map(|y| rest[y]);
                }
                break;
            }
        }
        fixed[i] = true;
        fixed_cost += match partner[i] {
            Some(j) => {
                fixed[j] = true;
                pair[i][j]
            }
            None => boundary[i],
        };
    }
    partner
}

fn solve_blossom(pair: &[Vec<f64>], boundary: &[f64]) -> Vec<Option<usize>> {
    let k = boundary.len();
    let finite_pairs = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j)));
    let max_cost = finite_pairs
        .clone()
        .map(|(i, j)| pair[i][j])
        .filter(|c| c.is_finite())
        .chain(boundary.iter().copied())
        .fold(0.0f64, f64::max);
    // Power-of-two scale: exact for dyadic costs, ~40 bits of resolution otherwise.
    let scale = if max_cost > 0.0 { 2f64.powi(40 - max_cost.log2().ceil() as i32) } else { 1.0 };
    let to_int = |c: f64| (c * scale).round() as i64;
    let big = to_int(max_cost) + 1;
    let mut edges = Vec::with_capacity(k * k);
    for (i, j) in finite_pairs {
        if pair[i][j].is_finite() {
            edges.push((i, j, big - to_int(pair[i][j])));
        }
    }
    for (i, &b) in boundary.iter().enumerate() {
        edges.push((i, k + i, big - to_int(b)));
    }
    for i in 0..k {
        for j in i + 1..k {
            edges.push((k + i, k + j, big));
        }
    }
    let mate = blossom::max_weight_matching(2 * k, &edges, true);
    (0..k)
        .map(|i| match mate[i] {
            Some(j) if j < k => Some(j),
            Some(_) => None,
            None => unreachable!("reduction always admits a perfect matching"),
        })
        .collect()
}

/// Reusable decoding workspace for one graph.
pub struct Decoder<'g> {
    graph: &'g DecodingGraph,
    sps: Vec<ShortestPaths>,
    defects: Vec<usize>,
    target: Vec<bool>,
    flip: Vec<bool>,
}

impl<'g> Decoder<'g> {
    pub fn new(graph: &'g DecodingGraph) -> Self {
        Decoder {
            graph,
            sps: Vec::new(),
            defects: Vec::new(),
            target: vec![false; graph.num_nodes()],
            flip: vec![false; graph.num_edges()],
        }
    }

    pub fn graph(&self) -> &'g DecodingGraph {
        self.graph
    }

    /// Decodes on the graph with both boundaries available.
    pub fn decode(&mut self, syndrome: &[usize]) -> Result<Correction> {
        let s = normalize_syndrome(self.graph, syndrome)?;
        let b = self.graph.boundaries();
        self.decode_nodes(&s, &b)
    }

    /// Decodes `defects` (any non-boundary nodes of the working graph)
    /// treating only `boundaries` as sinks.
    pub(crate) fn decode_nodes(&mut self, defects: &[usize], boundaries: &[usize]) -> Result<Correction> {
        let g = self.graph;
        let k = defects.len();
        self.defects.clear();
        self.defects.extend_from_slice(defects);
        if k == 0 {
            return Ok(Correction::default());
        }
        while self.sps.len() < k {
            self.sps.push(ShortestPaths::new(g.num_nodes()));
        }
        let is_sink = |v: usize| boundaries.contains(&v);
        for &d in defects {
            self.target[d] = true;
        }
        for &b in boundaries {
            self.target[b] = true;
        }
        let n_targets = k + boundaries.len();
        for (i, &d) in defects.iter().enumerate() {
            self.sps[i].run(g, d, |e| g.edge(e).w, is_sink, Some((&self.target, n_targets)));
        }
        for &v in defects.iter().chain(boundaries) {
            self.target[v] = false;
        }

        let mut boundary_cost = Vec::with_capacity(k);
        let mut boundary_node = Vec::with_capacity(k);
        for (i, &d) in defects.iter().enumerate() {
            let (mut best, mut node) = (f64::INFINITY, usize::MAX);
            for &b in boundaries {
                if self.sps[i].dist[b] < best {
                    best = self.sps[i].dist[b];
                    node = b;
                }
            }
            if !best.is_finite() {
                return Err(Error::Disconnected(d));
            }
            boundary_cost.push(best);
            boundary_node.push(node);
        }
        // Both directions come from the lower-index search so the matrix is
        // exactly symmetric.
        let pair: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 0.0 } else { self.sps[i.min(j)].dist[defects[i.max(j)]] }).collect())
            .collect();
        let solution = min_weight_perfect_matching(&pair, &boundary_cost)?;

        let mut matching = Vec::with_capacity(k);
        let mut touched = Vec::new();
        for i in 0..k {
            let (target, distance) = match solution.partner[i] {
                Some(j) if j > i => (defects[j], pair[i][j]),
                Some(_) => continue,
                None => (boundary_node[i], boundary_cost[i]),
            };
            matching.push(MatchedPair { a: defects[i], b: target, distance });
            for e in self.sps[i].path_to(target) {
                self.flip[e] ^= true;
                touched.push(e);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let mut edges = Vec::with_capacity(touched.len());
        for e in touched {
            if self.flip[e] {
                edges.push(e);
            }
            self.flip[e] = false;
        }
        let total_weight = g.weight_of(&edges);
        Ok(Correction { edges, total_weight, matching })
    }

    /// Shortest-path tree of the `i`-th defect of the last decode.
    pub(crate) fn tree(&self, i: usize) -> &ShortestPaths {
        &self.sps[i]
    }

    pub(crate) fn last_defects(&self) -> &[usize] {
        &self.defects
    }
}

pub(crate) fn normalize_syndrome(graph: &DecodingGraph, syndrome: &[usize]) -> Result<Vec<usize>> {
    let mut s = syndrome.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&v| v >= graph.num_detectors()) {
        return Err(Error::invalid(format!("syndrome node {bad} is not a detector")));
    }
    Ok(s)
}

pub fn decode(graph: &DecodingGraph, syndrome: &[usize]) -> Result<Correction> {
    Decoder::new(graph).decode(syndrome)
}

/// Shortest-path data for a set of defects.
#[derive(Debug, Clone)]
pub struct DefectDistances {
    pub defects: Vec<usize>,
    /// `pair[i][j]`: distance between defects `i` and `j`.
    pub pair: Vec<Vec<f64>>,
    /// Nearest boundary node and distance per defect.
    pub boundary: Vec<(usize, f64)>,
    /// `paths[i][j]`: edges from defect `i` to defect `j`.
    pub paths: Vec<Vec<Vec<usize>>>,
    pub boundary_paths: Vec<Vec<usize>>,
}

pub fn defect_distances(graph: &DecodingGraph, defects: &[usize]) -> Result<DefectDistances> {
    let defects = normalize_syndrome(graph, defects)?;
    let mut sp = ShortestPaths::new(graph.num_nodes());
    let (mut pair, mut boundary, mut paths, mut boundary_paths) = (vec![], vec![], vec![], vec![]);
    for &d in &defects {
        sp.run(graph, d, |e| graph.edge(e).w, |v| graph.is_boundary(v), None);
        let [l, r] = graph.boundaries();
        let b = if sp.dist[r] < sp.dist[l] { r } else { l };
        if !sp.dist[b].is_finite() {
            return Err(Error::Disconnected(d));
        }
        boundary.push((b, sp.dist[b]));
        boundary_paths.push(sp.path_to(b));
        pair.push(defects.iter().map(|&t| sp.dist[t]).collect());
        paths.push(defects.iter().map(|&t| sp.path_to(t)).collect());
    }
    Ok(DefectDistances { defects, pair, boundary, paths, boundary_paths })
}

/// Whether `correction` is logically equivalent to `error`.
pub fn is_success(graph: &DecodingGraph, error: &[usize], correction: &Correction) -> Result<bool> {
    if syndrome_of(graph, error)? != syndrome_of(graph, &correction.edges)? {
        return Err(Error::invalid("error and correction syndromes differ"));
    }
    Ok(graph.logical_parity(error) == graph.logical_parity(&correction.edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_prefer_lower_ids() {
        let pair = vec![vec![1.0; 4]; 4];
        let m = min_weight_perfect_matching(&pair, &[10.0; 4]).unwrap();
        assert_eq!(m.partner, vec![Some(1), Some(0), Some(3), Some(2)]);
        let m = min_weight_perfect_matching(&vec![vec![2.0; 3]; 3], &[1.0; 3]).unwrap();
        assert_eq!(m.partner, vec![Some(1), Some(0), None]);
    }

    #[test]
    fn two_defect_cases() {
        let m = min_weight_perfect_matching(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[10.0, 10.0]).unwrap();
        assert_eq!((m.partner, m.cost), (vec![Some(1), Some(0)], 1.0));
        let m = min_weight_perfect_matching(&[vec![0.0, 10.0], vec![10.0, 0.0]], &[1.0, 1.0]).unwrap();
        assert_eq!((m.partner, m.cost), (vec![None, None], 2.0));
        assert!(min_weight_perfect_matching(&[vec![0.0]], &[f64::NAN]).is_err());
    }

    #[test]
    fn empty_and_boundary_adjacent() {
        let g = DecodingGraph::code_capacity(3, 3, 0.1).unwrap().with_uniform_weight(1.0).unwrap();
        let c = decode(&g, &[]).unwrap();
        assert!(c.edges.is_empty() && c.total_weight == 0.0);
        // Detector 0 sits next to the left boundary.
        let c = decode(&g, &[0]).unwrap();
        assert_eq!(c.edges.len(), 1);
        let e = g.edge(c.edges[0]);
        assert_eq!((e.a, e.b), (0, g.left()));
        assert_eq!(c.total_weight, 1.0);
    }

    #[test]
    fn adjacent_defects_share_edge() {
        let g = DecodingGraph::code_capacity(5, 3, 0.1).unwrap().with_uniform_weight(1.0).unwrap();
        let d = defect_distances(&g, &[1, 2]).unwrap();
        assert_eq!(d.pair[0][1], 1.0);
        assert_eq!(d.pair[0][0], 0.0);
        let e = g.edge(d.paths[0][1][0]);
        assert_eq!((e.a, e.b), (1, 2));
    }

    #[test]
    fn failure_after_logical_path() {
        let g = DecodingGraph::code_capacity(3, 3, 0.1).unwrap();
        // Row 0: L - 0 - 1 - R.
        let row: Vec<usize> = (0..g.num_edges())
            .filter(|&i| {
                let e = g.edge(i);
                (e.a == 0 && e.b == g.left()) || (e.a == 0 && e.b == 1) || (e.a == 1 && e.b == g.right())
            })
            .collect();
        assert_eq!(row.len(), 3);
        assert!(syndrome_of(&g, &row).unwrap().is_empty());
        assert!(g.logical_parity(&row));
        let err = vec![row[0]];
        let c = decode(&g, &syndrome_of(&g, &err).unwrap()).unwrap();
        assert!(is_success(&g, &err, &c).unwrap());
        let flipped = Correction {
            edges: crate::noise::symmetric_difference(&c.edges, &row),
            ..c.clone()
        };
        assert!(!is_success(&g, &err, &flipped).unwrap());
    }
}
