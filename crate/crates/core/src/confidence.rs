//! Decoder confidence scores and the exact log-odds oracle.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{normalize_syndrome, Correction, Decoder, ShortestPaths};
use crate::error::{Error, Result};
use crate::graph::DecodingGraph;
use crate::noise::{perturb_weights, sample_error, stream_rng, syndrome_of};
use crate::stats::{prob_from_log_odds, Log10Sum};

/// Log odds beyond this magnitude are flagged as capped.
pub const LAMBDA_CAP: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcsKind {
    ComplementaryGap,
    SwimDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcsRecord {
    pub phi: f64,
    pub kind: DcsKind,
    pub window_id: u64,
    /// `Some(true)` when the decoding succeeded.
    pub success: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogOdds {
    pub lambda: f64,
    pub p_l: f64,
    /// `|lambda|` exceeds [`LAMBDA_CAP`].
    pub capped: bool,
}

impl LogOdds {
    pub fn from_lambda(lambda: f64) -> Self {
        LogOdds { lambda, p_l: prob_from_log_odds(lambda), capped: lambda.abs() > LAMBDA_CAP }
    }
}

/// Decoding plus both scores for one syndrome.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub correction: Correction,
    pub gap: f64,
    pub swim: f64,
}

/// Reusable scoring workspace for one graph.
pub struct Scorer<'g> {
    graph: &'g DecodingGraph,
    decoder: Decoder<'g>,
    complement: Decoder<'g>,
    sp: ShortestPaths,
    reach: Vec<f64>,
}

impl<'g> Scorer<'g> {
    pub fn new(graph: &'g DecodingGraph) -> Self {
        Scorer {
            graph,
            decoder: Decoder::new(graph),
            complement: Decoder::new(graph),
            sp: ShortestPaths::new(graph.num_nodes()),
            reach: vec![0.0; graph.num_nodes()],
        }
    }

    pub fn decode(&mut self, syndrome: &[usize]) -> Result<Correction> {
        self.decoder.decode(syndrome)
    }

    pub fn score(&mut self, syndrome: &[usize]) -> Result<Scores> {
        let s = normalize_syndrome(self.graph, syndrome)?;
        let correction = self.decoder.decode(&s)?;
        let swim = self.swim_from_last(&correction);
        let gap = self.gap_given(&s, &correction)?;
        Ok(Scores { correction, gap, swim })
    }

    /// `(gap, correction)`.
    pub fn complementary_gap(&mut self, syndrome: &[usize]) -> Result<(f64, Correction)> {
        let s = normalize_syndrome(self.graph, syndrome)?;
        let correction = self.decoder.decode(&s)?;
        Ok((self.gap_given(&s, &correction)?, correction))
    }

    pub fn swim_distance(&mut self, syndrome: &[usize]) -> Result<f64> {
        let correction = self.decoder.decode(syndrome)?;
        Ok(self.swim_from_last(&correction))
    }

    /// Weight of the best correction in the opposite class, minus the weight
    /// of `correction`. The left boundary is promoted to a detector.
    fn gap_given(&mut self, s: &[usize], correction: &Correction) -> Result<f64> {
        let left = self.graph.left();
        let left_degree = correction
            .edges
            .iter()
            .filter(|&&e| self.graph.edge(e).b == left)
            .count();
        let mut flipped = s.to_vec();
        if left_degree % 2 == 0 {
            flipped.push(left);
        }
        let complement = self.complement.decode_nodes(&flipped, &[self.graph.right()])?;
        Ok(complement.total_weight - correction.total_weight)
    }

    /// Swim distance using the shortest-path trees of the last decode.
    fn swim_from_last(&mut self, correction: &Correction) -> f64 {
        let g = self.graph;
        self.reach.iter_mut().for_each(|r| *r = 0.0);
        let defects = self.decoder.last_defects();
        let tree = |v: usize| defects.binary_search(&v).ok();
        for m in &correction.matching {
            let ia = tree(m.a).expect("matched node is a defect");
            match tree(m.b) {
                Some(ib) => {
                    spread(g, &mut self.reach, &self.decoder.tree(ia).dist, m.distance / 2.0);
                    spread(g, &mut self.reach, &self.decoder.tree(ib).dist, m.distance / 2.0);
                }
                None => spread(g, &mut self.reach, &self.decoder.tree(ia).dist, m.distance),
            }
        }
        let reach = &self.reach;
        let residual = |e: usize| {
            let edge = g.edge(e);
            (edge.w - covered(edge.w, reach[edge.a] + reach[edge.b])).max(0.0)
        };
        let right = g.right();
        self.sp.run(g, g.left(), residual, |v| v == right, None);
        self.sp.dist[right]
    }
}

fn spread(graph: &DecodingGraph, reach: &mut [f64], dist: &[f64], radius: f64) {
    for v in graph.detectors() {
        let r = radius - dist[v];
        if r > reach[v] {
            reach[v] = r;
        }
    }
}

fn covered(w: f64, reach_sum: f64) -> f64 {
    reach_sum.min(w)
}

/// Edges touched by the decoder clusters with their covered fraction.
///
/// A defect pair matched at distance `D` contributes geodesic balls of radius
/// `D / 2` around both defects; a boundary match contributes a ball of radius
/// `D` around its defect.
pub fn build_clusters(graph: &DecodingGraph, correction: &Correction) -> Vec<(usize, f64)> {
    let mut reach = vec![0.0; graph.num_nodes()];
    let mut sp = ShortestPaths::new(graph.num_nodes());
    let mut ball = |center: usize, radius: f64, reach: &mut Vec<f64>| {
        sp.run(graph, center, |e| graph.edge(e).w, |v| graph.is_boundary(v), None);
        spread(graph, reach, &sp.dist, radius);
    };
    for m in &correction.matching {
        if graph.is_boundary(m.b) {
            ball(m.a, m.distance, &mut reach);
        } else {
            ball(m.a, m.distance / 2.0, &mut reach);
            ball(m.b, m.distance / 2.0, &mut reach);
        }
    }
    graph
        .edges()
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            let c = covered(e.w, reach[e.a] + reach[e.b]);
            let frac = if e.w > 0.0 { c / e.w } else if c > 0.0 { 1.0 } else { 0.0 };
            (frac > 0.0).then_some((i, frac))
        })
        .collect()
}

pub fn complementary_gap(graph: &DecodingGraph, syndrome: &[usize]) -> Result<(f64, Correction)> {
    Scorer::new(graph).complementary_gap(syndrome)
}

pub fn swim_distance(graph: &DecodingGraph, syndrome: &[usize]) -> Result<f64> {
    Scorer::new(graph).swim_distance(syndrome)
}

/// Exact class probabilities by enumerating the coset `C + ker(H)`, where
/// `H` is the detector-edge incidence matrix.
#[derive(Debug, Clone)]
pub struct CosetOracle {
    basis: Vec<u64>,
    cut: u64,
    weights: Vec<f64>,
}

/// Largest kernel dimension the oracle accepts.
pub const MAX_KERNEL_DIM: usize = 30;

impl CosetOracle {
    pub fn new(graph: &DecodingGraph) -> Result<Self> {
        let m = graph.num_edges();
        if m > 64 {
            return Err(Error::Capability(format!(
                "exact odds need at most 64 edges, graph has {m}"
            )));
        }
        let mut rows: Vec<u64> = vec![0; graph.num_detectors()];
        for (i, e) in graph.edges().iter().enumerate() {
            for v in [e.a, e.b] {
                if !graph.is_boundary(v) {
                    rows[v] |= 1 << i;
                }
            }
        }
        // Reduced row echelon form over GF(2).
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..m {
            let bit = 1u64 << col;
            let Some(p) = (r..rows.len()).find(|&i| rows[i] & bit != 0) else { continue };
            rows.swap(r, p);
            for i in 0..rows.len() {
                if i != r && rows[i] & bit != 0 {
                    rows[i] ^= rows[r];
                }
            }
            pivots.push(col);
            r += 1;
        }
        let dim = m - pivots.len();
        if dim > MAX_KERNEL_DIM {
            return Err(Error::Capability(format!(
                "coset enumeration limited to kernel dimension {MAX_KERNEL_DIM}, graph needs {dim}"
            )));
        }
        let basis = (0..m)
            .filter(|c| !pivots.contains(c))
            .map(|free| {
                let mut v = 1u64 << free;
                for (row, &pc) in pivots.iter().enumerate() {
                    if rows[row] & (1 << free) != 0 {
                        v |= 1 << pc;
                    }
                }
                v
            })
            .collect();
        let cut = graph.logical_cut().iter().fold(0u64, |acc, &i| acc | 1 << i);
        Ok(CosetOracle { basis, cut, weights: graph.edges().iter().map(|e| e.w).collect() })
    }

    pub fn kernel_dim(&self) -> usize {
        self.basis.len()
    }

    /// Log odds that the class of `correction_edges` is the right one.
    pub fn log_odds(&self, correction_edges: &[usize]) -> LogOdds {
        let start = correction_edges.iter().fold(0u64, |acc, &i| acc | 1 << i);
        let parity = |x: u64| (x & self.cut).count_ones() & 1;
        let p0 = parity(start);
        let mut same = Log10Sum::default();
        let mut opposite = Log10Sum::default();
        let mut x = start;
        let total: u64 = 1 << self.basis.len();
        for i in 0..total {
            if i > 0 {
                x ^= self.basis[i.trailing_zeros() as usize];
            }
            let mut w = 0.0;
            let mut bits = x;
            while bits != 0 {
                w += self.weights[bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
            if parity(x) == p0 {
                same.add(w);
            } else {
                opposite.add(w);
            }
        }
        LogOdds::from_lambda(same.log10() - opposite.log10())
    }
}

pub fn exact_log_success_odds(
    graph: &DecodingGraph,
    syndrome: &[usize],
    correction: &Correction,
) -> Result<LogOdds> {
    let s = normalize_syndrome(graph, syndrome)?;
    if syndrome_of(graph, &correction.edges)? != s {
        return Err(Error::invalid("correction does not reproduce the syndrome"));
    }
    Ok(CosetOracle::new(graph)?.log_odds(&correction.edges))
}

/// Inputs for [`residual_dataset`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualConfig {
    pub d_x: usize,
    pub d_z: usize,
    /// Physical error rates are drawn log-uniformly from this range.
    pub p_range: (f64, f64),
    pub shots: usize,
    /// Weight perturbation for the decoder's graph.
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub p: f64,
    pub lambda: f64,
    pub gap: f64,
    pub swim: f64,
    pub success: bool,
}

/// Samples syndromes, scores them on a weight-perturbed graph and computes
/// the exact log odds on the true graph. Capped samples are dropped.
pub fn residual_dataset(cfg: &ResidualConfig) -> Result<Vec<ResidualSample>> {
    let (lo, hi) = cfg.p_range;
    if !(lo > 0.0 && lo <= hi && hi < 0.5) {
        return Err(Error::invalid("p_range must satisfy 0 < lo <= hi < 0.5"));
    }
    DecodingGraph::code_capacity(cfg.d_x, cfg.d_z, lo)?;
    let out: Result<Vec<Option<ResidualSample>>> = (0..cfg.shots as u64)
        .into_par_iter()
        .map(|shot| {
            let mut rng = stream_rng(cfg.seed, shot);
            let p = (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp();
            let truth = DecodingGraph::code_capacity(cfg.d_x, cfg.d_z, p)?;
            let seen = perturb_weights(&truth, cfg.delta, &mut rng)?;
            let err = sample_error(&truth, &mut rng);
            let sc = Scorer::new(&seen).score(&err.syndrome)?;
            let odds = CosetOracle::new(&truth)?.log_odds(&sc.correction.edges);
            let success = truth.logical_parity(&err.error_edges) == truth.logical_parity(&sc.correction.edges);
            Ok((!odds.capped).then_some(ResidualSample {
                p,
                lambda: odds.lambda,
                gap: sc.gap,
                swim: sc.swim,
                success,
            }))
        })
        .collect();
    Ok(out?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dx: usize, dz: usize) -> DecodingGraph {
        DecodingGraph::code_capacity(dx, dz, 0.1).unwrap().with_uniform_weight(1.0).unwrap()
    }

    #[test]
    fn empty_syndrome_scores() {
        let g = unit(5, 3);
        let (gap, c) = complementary_gap(&g, &[]).unwrap();
        assert_eq!(c.total_weight, 0.0);
        assert_eq!(gap, 5.0);
        assert_eq!(swim_distance(&g, &[]).unwrap(), 5.0);
        assert!(build_clusters(&g, &c).is_empty());
    }

    #[test]
    fn single_edge_cluster_fully_covered() {
        let g = unit(5, 3);
        let c = decode_cc(&g, &[1, 2]);
        let cl = build_clusters(&g, &c);
        let i = c.edges[0];
        assert!(cl.contains(&(i, 1.0)));
    }

    #[test]
    fn boundary_ball_radius_one() {
        let g = unit(3, 3);
        let c = decode_cc(&g, &[0]);
        let cl = build_clusters(&g, &c);
        // Every edge incident to detector 0 is covered fully; nothing else.
        let incident: Vec<usize> = g.neighbors(0).iter().map(|&(_, e)| e).collect();
        assert_eq!(cl.len(), incident.len());
        for (e, f) in cl {
            assert!(incident.contains(&e));
            assert_eq!(f, 1.0);
        }
    }

    fn decode_cc(g: &DecodingGraph, s: &[usize]) -> Correction {
        crate::decoder::decode(g, s).unwrap()
    }

    #[test]
    fn symmetric_instance_has_zero_gap() {
        // Diagonal defects (0, 0) and (1, 1): pairing and matching both to
        // the boundary cost 2 each and lie in opposite classes.
        let g = unit(3, 3);
        let (gap, c) = complementary_gap(&g, &[0, 3]).unwrap();
        assert_eq!(c.total_weight, 2.0);
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn full_row_bridges_boundaries() {
        let g = unit(3, 3);
        // The error L-(0,0)-(0,1)-(1,1)-R minus its middle edges leaves
        // defects whose radius-one balls connect the two banks.
        let swim = swim_distance(&g, &[0, 3]).unwrap();
        assert_eq!(swim, 0.0);
    }

    #[test]
    fn oracle_symmetric_at_half() {
        let g = DecodingGraph::code_capacity(3, 3, 0.1).unwrap().with_uniform_weight(0.0).unwrap();
        let c = decode_cc(&g, &[2]);
        let lo = exact_log_success_odds(&g, &[2], &c).unwrap();
        assert!(lo.lambda.abs() < 1e-12);
        assert!((lo.p_l - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_capability_limit() {
        let g = DecodingGraph::phenomenological(5, 5, 1e-3, 1e-3).unwrap();
        assert!(matches!(CosetOracle::new(&g), Err(Error::Capability(_))));
    }

    #[test]
    fn oracle_matches_brute_force() {
        let g = DecodingGraph::code_capacity(3, 3, 0.07).unwrap();
        let mut rng = stream_rng(5, 0);
        let g = perturb_weights(&g, 0.3, &mut rng).unwrap();
        let oracle = CosetOracle::new(&g).unwrap();
        assert_eq!(oracle.kernel_dim(), 7);
        let m = g.num_edges();
        for shot in 0..40 {
            let mut rng = stream_rng(9, shot);
            let err = sample_error(&g, &mut rng);
            let c = decode_cc(&g, &err.syndrome);
            let (mut same, mut opp) = (0.0, 0.0);
            let p0 = g.logical_parity(&c.edges);
            for mask in 0u32..(1 << m) {
                let set: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
                if syndrome_of(&g, &set).unwrap() != err.syndrome {
                    continue;
                }
                let pr: f64 = (0..m)
                    .map(|i| if mask >> i & 1 == 1 { g.edge(i).p } else { 1.0 - g.edge(i).p })
                    .product();
                if g.logical_parity(&set) == p0 {
                    same += pr;
                } else {
                    opp += pr;
                }
            }
            let got = oracle.log_odds(&c.edges);
            assert!((got.lambda - (same / opp).log10()).abs() < 1e-9);
            assert!((got.p_l - opp / (same + opp)).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_dataset_is_deterministic() {
        let cfg = ResidualConfig { d_x: 3, d_z: 3, p_range: (1e-2, 1e-1), shots: 200, delta: 0.3, seed: 4 };
        let a = residual_dataset(&cfg).unwrap();
        let b = residual_dataset(&cfg).unwrap();
        assert_eq!(a, b);
        let empty = residual_dataset(&ResidualConfig { shots: 0, ..cfg }).unwrap();
        assert!(empty.is_empty());
    }
}
