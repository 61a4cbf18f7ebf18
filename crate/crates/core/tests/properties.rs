use proptest::prelude::*;

use dcs_core::calibration::{wilson_interval, CalibrationCurve};
use dcs_core::confidence::{swim_distance, CosetOracle, Scorer};
use dcs_core::decoder::{decode, min_weight_perfect_matching};
use dcs_core::multiwindow::{
    circuit_moments, compose_lep, discard_fraction, time_overhead, window_rate_for_fraction,
};
use dcs_core::noise::{symmetric_difference, syndrome_of};
use dcs_core::pipeline::io::{edges_to_hex, hex_to_edges, ids_to_text, text_to_ids};
use dcs_core::scale_model::{deform_to_target_mean, gaussian_density, Deformation};
use dcs_core::stats::log_odds;
use dcs_core::DecodingGraph;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Code-capacity graph with random per-edge weights and a random syndrome.
fn weighted_instance() -> impl Strategy<Value = (DecodingGraph, Vec<usize>)> {
    (prop_oneof![Just(3usize), Just(5)], prop_oneof![Just(3usize), Just(5)]).prop_flat_map(|(dx, dz)| {
        let g = DecodingGraph::code_capacity(dx, dz, 0.1).unwrap();
        let (m, n) = (g.num_edges(), g.num_detectors());
        (
            prop::collection::vec(0.2f64..4.0, m),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(w, mask)| {
                let g = g.with_weights(&w).unwrap();
                let s = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
                (g, s)
            })
    })
}

fn boundary_distance(g: &DecodingGraph) -> f64 {
    swim_distance(g, &[]).unwrap()
}

fn brute_force(pair: &[Vec<f64>], boundary: &[f64], left: u32) -> f64 {
    if left == 0 {
        return 0.0;
    }
    let i = left.trailing_zeros() as usize;
    let rest = left & !(1 << i);
    let mut best = boundary[i] + brute_force(pair, boundary, rest);
    for j in (0..boundary.len()).filter(|j| rest >> j & 1 == 1) {
        best = best.min(pair[i][j] + brute_force(pair, boundary, rest & !(1 << j)));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn correction_reproduces_syndrome((g, s) in weighted_instance()) {
        let c = decode(&g, &s).unwrap();
        prop_assert_eq!(syndrome_of(&g, &c.edges).unwrap(), s.clone());
        prop_assert!(close(c.total_weight, g.weight_of(&c.edges), 1e-12));
        let again = decode(&g, &syndrome_of(&g, &c.edges).unwrap()).unwrap();
        prop_assert!(again.total_weight <= c.total_weight + 1e-9);
    }

    #[test]
    fn scores_are_bounded((g, s) in weighted_instance()) {
        let r = Scorer::new(&g).score(&s).unwrap();
        prop_assert!(r.gap >= -1e-9, "gap {}", r.gap);
        prop_assert!(r.swim >= 0.0);
        prop_assert!(r.swim <= boundary_distance(&g) + 1e-9);
    }

    #[test]
    fn scores_scale_with_weights((g, s) in weighted_instance(), c in 0.1f64..10.0) {
        let a = Scorer::new(&g).score(&s).unwrap();
        let scaled = g.scaled(c).unwrap();
        let b = Scorer::new(&scaled).score(&s).unwrap();
        prop_assert!(close(b.gap, c * a.gap, 1e-9), "{} vs {}", b.gap, c * a.gap);
        prop_assert!(close(b.swim, c * a.swim, 1e-9), "{} vs {}", b.swim, c * a.swim);
        prop_assert!(close(b.correction.total_weight, c * a.correction.total_weight, 1e-9));
    }

    #[test]
    fn matching_matches_enumeration(
        k in 0usize..=8,
        costs in prop::collection::vec(0u32..4096, 8 + 28),
    ) {
        let c = |i: usize| costs[i] as f64 / 256.0;
        let boundary: Vec<f64> = (0..k).map(c).collect();
        let mut pair = vec![vec![0.0; k]; k];
        let mut next = 8;
        for i in 0..k {
            for j in i + 1..k {
                pair[i][j] = c(next);
                pair[j][i] = c(next);
                next += 1;
            }
        }
        let m = min_weight_perfect_matching(&pair, &boundary).unwrap();
        prop_assert_eq!(m.cost, brute_force(&pair, &boundary, (1u32 << k) - 1));
        for (i, p) in m.partner.iter().enumerate() {
            if let Some(j) = *p {
                prop_assert_eq!(m.partner[j], Some(i));
            }
        }
    }

    #[test]
    fn coset_exchange_negates_log_odds(
        p in 0.01f64..0.45,
        mask in prop::collection::vec(any::<bool>(), 6),
    ) {
        let g = DecodingGraph::code_capacity(3, 3, p).unwrap();
        let s: Vec<usize> = (0..6).filter(|&i| mask[i]).collect();
        let c = decode(&g, &s).unwrap();
        let oracle = CosetOracle::new(&g).unwrap();
        let a = oracle.log_odds(&c.edges);
        // Row 0 runs L - 0 - 1 - R and crosses the cut once.
        let mut row: Vec<usize> = [(g.left(), 0), (0, 1), (1, g.right())]
            .iter()
            .map(|&(u, v)| g.neighbors(u).iter().find(|&&(w, _)| w == v).unwrap().1)
            .collect();
        row.sort_unstable();
        let other = symmetric_difference(&c.edges, &row);
        prop_assert!(g.logical_parity(&other) != g.logical_parity(&c.edges));
        let b = oracle.log_odds(&other);
        prop_assert!(close(a.lambda, -b.lambda, 1e-9));
        prop_assert!(close(a.p_l, 1.0 - b.p_l, 1e-9));
    }

    #[test]
    fn compose_is_order_free(ps in prop::collection::vec(0.0f64..=0.5, 1..20), cut in 0usize..20) {
        let whole = compose_lep(&ps).unwrap();
        let mut rev = ps.clone();
        rev.reverse();
        prop_assert!(close(whole, compose_lep(&rev).unwrap(), 1e-12));
        let k = cut.min(ps.len());
        let nested = compose_lep(&[compose_lep(&ps[..k]).unwrap(), compose_lep(&ps[k..]).unwrap()]).unwrap();
        prop_assert!(close(whole, nested, 1e-12));
        prop_assert!((0.0..=0.5).contains(&whole));
        prop_assert!(whole >= ps.iter().copied().fold(0.0, f64::max) - 1e-15 || whole == 0.5);
    }

    #[test]
    fn overhead_monotone(f1 in 0.0f64..0.99, f2 in 0.0f64..0.99, n in 1u64..10_000_000) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let (a, b) = (time_overhead(lo, n).unwrap(), time_overhead(hi, n).unwrap());
        prop_assert!(a >= 1.0 && a <= b * (1.0 + 1e-12));
        prop_assert!(b <= 1.0 / (1.0 - hi) * (1.0 + 1e-12));
    }

    #[test]
    fn discard_rate_round_trip(f in 1e-9f64..0.999, n in 1.0f64..1e9) {
        let rho = window_rate_for_fraction(f, n);
        prop_assert!(close(discard_fraction(rho, n), f, 1e-9));
    }

    #[test]
    fn single_window_moments(mu in 0.0f64..0.5, s in 0.0f64..0.01) {
        let (m, v) = circuit_moments(mu, s, 1.0);
        prop_assert!(close(m, mu, 1e-12));
        prop_assert!(close(v, s, 1e-9));
    }

    #[test]
    fn calibrated_lep_decreases(a in 0.05f64..3.0, b in -5.0f64..5.0, x in -10.0f64..10.0, dx in 0.0f64..5.0) {
        let curve = CalibrationCurve {
            a, b, a_se: 0.0, b_se: 0.0, bins: vec![], bin_count: 0, p_min: 1e-12,
            pseudocount: None, model: None, distance: None,
        };
        prop_assert!(curve.lep(x + dx) <= curve.lep(x));
        let p = curve.lep(x);
        if p > 1e-12 && p < 0.5 {
            prop_assert!(close(log_odds(p), curve.lambda(x), 1e-9));
        }
    }

    #[test]
    fn wilson_contains_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = (frac * n as f64).round() as u64;
        let (lo, hi) = wilson_interval(k, n, 1.96).unwrap();
        let p = k as f64 / n as f64;
        prop_assert!(lo <= p + 1e-15 && p <= hi + 1e-15 && 0.0 <= lo && hi <= 1.0);
    }

    #[test]
    fn hex_and_id_text_round_trip(mask in prop::collection::vec(any::<bool>(), 1..200)) {
        let ids: Vec<usize> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        prop_assert_eq!(hex_to_edges(&edges_to_hex(&ids, mask.len()), mask.len()).unwrap(), ids.clone());
        prop_assert_eq!(text_to_ids(&ids_to_text(&ids)).unwrap(), ids);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn deformation_hits_target(log_target in -9.0f64..-1.0, scale_mode in any::<bool>()) {
        let density = gaussian_density(14.0, 2.2).unwrap();
        let target = 10f64.powf(log_target);
        let mode = if scale_mode { Deformation::Scale } else { Deformation::Shift };
        let m = deform_to_target_mean(&density, 1.0, target, mode).unwrap();
        prop_assert!(close(m.mean_window_lep(), target, 1e-8), "{} vs {target}", m.mean_window_lep());
    }
}
