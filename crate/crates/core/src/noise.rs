//! Error sampling, syndromes and weight perturbation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{weight_to_probability, DecodingGraph, Edge};

/// Deterministic generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ErrorSample {
    /// Sorted edge indices.
    pub error_edges: Vec<usize>,
    /// Sorted detector ids.
    pub syndrome: Vec<usize>,
}

/// Detectors incident to an odd number of the given edges.
pub fn syndrome_of(graph: &DecodingGraph, edge_set: &[usize]) -> Result<Vec<usize>> {
    let mut flips = vec![false; graph.num_nodes()];
    for &i in edge_set {
        if i >= graph.num_edges() {
            return Err(Error::invalid(format!("edge {i} not in graph")));
        }
        let e = graph.edge(i);
        flips[e.a] ^= true;
        flips[e.b] ^= true;
    }
    Ok(graph.detectors().filter(|&v| flips[v]).collect())
}

/// Symmetric difference of two sorted index lists.
pub fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Independent edge flips with the graph's probabilities.
pub struct ErrorSampler<'g> {
    graph: &'g DecodingGraph,
    /// Set when all probabilities agree; enables geometric skipping.
    uniform_log1m: Option<f64>,
}

impl<'g> ErrorSampler<'g> {
    pub fn new(graph: &'g DecodingGraph) -> Self {
        let p0 = graph.edges().first().map(|e| e.p);
        let uniform = p0.filter(|&p| graph.edges().iter().all(|e| e.p == p) && p < 0.25);
        ErrorSampler { graph, uniform_log1m: uniform.map(|p| (-p).ln_1p()) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ErrorSample {
        let m = self.graph.num_edges();
        let mut error_edges = Vec::new();
        match self.uniform_log1m {
            Some(l) => {
                let mut i = 0usize;
                loop {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let skip = (u.ln() / l).floor();
                    if skip >= (m - i) as f64 {
                        break;
                    }
                    i += skip as usize;
                    error_edges.push(i);
                    i += 1;
                    if i >= m {
                        break;
                    }
                }
            }
            None => {
                for (i, e) in self.graph.edges().iter().enumerate() {
                    if rng.random::<f64>() < e.p {
                        error_edges.push(i);
                    }
                }
            }
        }
        let syndrome = syndrome_of(self.graph, &error_edges).expect("sampled edges are in range");
        ErrorSample { error_edges, syndrome }
    }
}

pub fn sample_error<R: Rng + ?Sized>(graph: &DecodingGraph, rng: &mut R) -> ErrorSample {
    ErrorSampler::new(graph).sample(rng)
}

/// Multiplies each weight by an independent `U[1 - delta, 1 + delta]` factor
/// and re-derives the probabilities.
pub fn perturb_weights<R: Rng + ?Sized>(
    graph: &DecodingGraph,
    delta: f64,
    rng: &mut R,
) -> Result<DecodingGraph> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta = {delta} outside [0, 1)")));
    }
    if delta == 0.0 {
        return Ok(graph.clone());
    }
    let edges: Vec<Edge> = graph
        .edges()
        .iter()
        .map(|e| {
            let w = e.w * rng.random_range(1.0 - delta..=1.0 + delta);
            Edge { w, p: weight_to_probability(w), ..*e }
        })
        .collect();
    DecodingGraph::from_parts(graph.num_detectors(), edges, graph.meta().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_syndrome() {
        let g = DecodingGraph::code_capacity(3, 3, 0.1).unwrap();
        let i = g.edges().iter().position(|e| !g.is_boundary(e.b)).unwrap();
        let e = g.edge(i);
        assert_eq!(syndrome_of(&g, &[i]).unwrap(), vec![e.a, e.b]);
        assert!(syndrome_of(&g, &[]).unwrap().is_empty());
        assert!(syndrome_of(&g, &[99]).is_err());
    }

    #[test]
    fn tiny_probability_gives_empty_error() {
        let g = DecodingGraph::code_capacity(3, 3, 1e-300).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..1000 {
            let s = sample_error(&g, &mut rng);
            assert!(s.error_edges.is_empty() && s.syndrome.is_empty());
        }
    }

    #[test]
    fn perturbation_bounds() {
        let g = DecodingGraph::phenomenological(3, 3, 0.01, 0.01).unwrap();
        let mut rng = stream_rng(7, 0);
        let h = perturb_weights(&g, 0.3, &mut rng).unwrap();
        for (e, f) in g.edges().iter().zip(h.edges()) {
            assert!(f.w >= 0.7 * e.w - 1e-12 && f.w <= 1.3 * e.w + 1e-12);
            assert!(((1.0 - f.p) / f.p).log10() - f.w < 1e-9);
        }
        assert_eq!(perturb_weights(&g, 0.0, &mut rng).unwrap().edges(), g.edges());
        assert!(perturb_weights(&g, 1.0, &mut rng).is_err());
    }

    #[test]
    fn symmetric_difference_merges() {
        assert_eq!(symmetric_difference(&[1, 3, 5], &[3, 4]), vec![1, 4, 5]);
        assert_eq!(symmetric_difference(&[], &[2]), vec![2]);
    }
}
