//! Distributional checks against exact or classical values.

use std::collections::HashMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use vacant_core::theory::poisson_giant_fraction;
use vacant_core::walk::regular_mixing_horizon;
use vacant_core::*;

const SIGNIFICANCE: f64 = 1e-3;

fn chi_square_p(counts: &[u64], expected: f64) -> f64 {
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
}

fn pairing_key(partners: &[u32]) -> Vec<u32> {
    partners.to_vec()
}

/// Every perfect matching of `0..m` as a partner array.
fn all_matchings(m: usize) -> Vec<Vec<u32>> {
    fn go(partner: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let Some(i) = partner.iter().position(|&p| p == u32::MAX) else {
            out.push(partner.clone());
            return;
        };
        for j in i + 1..partner.len() {
            if partner[j] == u32::MAX {
                partner[i] = j as u32;
                partner[j] = i as u32;
                go(partner, out);
                partner[i] = u32::MAX;
                partner[j] = u32::MAX;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut vec![u32::MAX; m], &mut out);
    out
}

fn pairing_histogram(draws: impl Iterator<Item = Vec<u32>>, support: &[Vec<u32>]) -> Vec<u64> {
    let index: HashMap<Vec<u32>, usize> = support.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let mut counts = vec![0u64; support.len()];
    for d in draws {
        counts[index[&d]] += 1;
    }
    counts
}

#[test]
fn six_points_have_fifteen_equally_likely_pairings() {
    let support = all_matchings(6);
    assert_eq!(support.len(), 15);
    let draws = 150_000u64;
    let counts = pairing_histogram(
        (0..draws).map(|s| {
            let mut rng = rng_from_seed(derive_seed(11, s));
            pairing_key(sample_pairing(&[3, 3], &mut rng).unwrap().partners())
        }),
        &support,
    );
    let p = chi_square_p(&counts, draws as f64 / 15.0);
    assert!(p > SIGNIFICANCE, "p = {p}, counts {counts:?}");
}

#[test]
fn four_unit_degrees_give_three_matchings() {
    let draws = 100_000u64;
    let mut counts = [0u64; 3];
    for s in 0..draws {
        let g = sample_configuration(&[1, 1, 1, 1], derive_seed(5, s)).unwrap();
        let partner_of_0 = g.neighbors(0)[0];
        counts[partner_of_0 as usize - 1] += 1;
    }
    let p = chi_square_p(&counts, draws as f64 / 3.0);
    assert!(p > SIGNIFICANCE, "p = {p}, counts {counts:?}");
}

#[test]
fn coupled_pairing_is_uniform_at_zero_and_three_steps() {
    let support = all_matchings(6);
    for stop in [0usize, 3] {
        let draws = 150_000u64;
        let counts = pairing_histogram(
            (0..draws).map(|s| {
                let mut st = PairingState::new(2, 3, 0, derive_seed(100 + stop as u64, s)).unwrap();
                for _ in 0..stop {
                    st.coupled_walk_step();
                }
                pairing_key(st.finalize_pairing(derive_seed(200, s)).partners())
            }),
            &support,
        );
        let p = chi_square_p(&counts, draws as f64 / 15.0);
        assert!(p > SIGNIFICANCE, "stop {stop}: p = {p}, counts {counts:?}");
    }
}

#[test]
fn covered_coupled_walk_finalizes_to_valid_configuration() {
    let mut st = PairingState::new(40, 3, 0, 1).unwrap();
    while (0..40).any(|v| !st.is_visited(v)) {
        st.coupled_walk_step();
    }
    let g = st.finalize_graph(2);
    assert_eq!(g.regular_degree(), Some(3));
    assert_eq!(g.edge_count(), 60);
}

#[test]
fn triangle_step_is_fair() {
    let g = Graph::from_edges(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
    let trials = 100_000u64;
    let ones =
        (0..trials).filter(|&s| WalkRun::new(&g, 0, derive_seed(3, s)).unwrap().step().unwrap() == 1).count() as f64;
    let sigma = (trials as f64 * 0.25).sqrt();
    assert!((ones - trials as f64 / 2.0).abs() < 3.0 * sigma, "{ones}");
}

#[test]
fn four_cycle_occupancy_is_uniform() {
    let g = Graph::from_edges(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
    let mut run = WalkRun::new(&g, 0, 8).unwrap();
    let steps = 1_000_000usize;
    let mut occ = [0u64; 4];
    for _ in 0..steps {
        occ[run.step().unwrap() as usize] += 1;
    }
    // The walk alternates parity classes, so pairs {0,2} and {1,3} each get
    // exactly half; within a class each step is a fair coin.
    let sigma = (steps as f64 / 2.0 * 0.25).sqrt();
    for &o in &occ {
        assert!((o as f64 - steps as f64 / 4.0).abs() < 3.0 * sigma, "{occ:?}");
    }
}

#[test]
fn gnp_edge_count_matches_binomial_mean() {
    let n = 10_000usize;
    let p = 2.0 * (n as f64).ln() / n as f64;
    let pairs = (n * (n - 1) / 2) as f64;
    let seeds = 100u64;
    let mean = (0..seeds)
        .map(|s| generate_gnp(GnpParams { n, p }, derive_seed(21, s)).unwrap().edge_count() as f64)
        .sum::<f64>()
        / seeds as f64;
    let sigma = (pairs * p * (1.0 - p) / seeds as f64).sqrt();
    assert!((mean - pairs * p).abs() < 3.0 * sigma, "{mean} vs {}", pairs * p);
}

#[test]
fn dnp_support_matches_gnq_edge_count() {
    let n = 10_000usize;
    let params = DnpParams { n, p: 1.5 * (n as f64).ln() / n as f64 };
    let q = params.q();
    let pairs = (n * (n - 1) / 2) as f64;
    let seeds = 30u64;
    let mean = (0..seeds)
        .map(|s| underlying_graph(&generate_dnp(params, derive_seed(22, s)).unwrap()).edge_count() as f64)
        .sum::<f64>()
        / seeds as f64;
    let sigma = (pairs * q * (1.0 - q) / seeds as f64).sqrt();
    assert!((mean - pairs * q).abs() < 3.0 * sigma, "{mean} vs {}", pairs * q);
}

#[test]
fn simplicity_rate_of_cubic_configurations() {
    // Exact check at rn = 12: K4 is the only simple cubic graph on four
    // labelled vertices and it arises from (3!)^4 pairings.
    let simple_pairings = all_matchings(12)
        .into_iter()
        .filter(|k| {
            let owner = |x: u32| x / 3;
            let mut seen = std::collections::HashSet::new();
            (0..12u32).filter(|&x| x < k[x as usize]).all(|x| {
                let (a, b) = (owner(x), owner(k[x as usize]));
                a != b && seen.insert((a, b))
            })
        })
        .count();
    assert_eq!(simple_pairings, 1296);
    let seeds = 1000u64;
    let simple = (0..seeds)
        .filter(|&s| {
            generate_regular(RegularParams { n: 10_000, r: 3, simple_only: false }, derive_seed(23, s))
                .unwrap()
                .is_simple()
        })
        .count() as f64;
    let target = (-2.0f64).exp();
    let sigma = (seeds as f64 * target * (1.0 - target)).sqrt();
    assert!((simple - seeds as f64 * target).abs() < 3.0 * sigma, "{simple}");
}

#[test]
fn gnp_giant_at_mean_degree_two() {
    let n = 100_000usize;
    let beta = poisson_giant_fraction(2.0);
    let trials = 20u64;
    let fractions: Vec<f64> = (0..trials)
        .map(|s| {
            let g = generate_gnp(GnpParams { n, p: 2.0 / n as f64 }, derive_seed(24, s)).unwrap();
            let visited = Bitmap::new(n);
            connected_components(&induced_vacant_subgraph(&g, &visited)).largest() as f64 / n as f64
        })
        .collect();
    let (mean, se) = mean_se(&fractions);
    assert!((mean - beta).abs() < 3.0 * se.max(1e-4), "{mean} vs {beta} (se {se})");
}

#[test]
fn dnp_giant_scc_at_mean_out_degree_two() {
    let n = 100_000usize;
    let beta = poisson_giant_fraction(2.0);
    let trials = 20u64;
    let fractions: Vec<f64> = (0..trials)
        .map(|s| {
            let d = generate_dnp(DnpParams { n, p: 2.0 / n as f64 }, derive_seed(25, s)).unwrap();
            let visited = Bitmap::new(n);
            strongly_connected_components(&induced_vacant_subgraph(&d, &visited)).largest() as f64 / n as f64
        })
        .collect();
    let (mean, se) = mean_se(&fractions);
    assert!((mean - beta * beta).abs() < 3.0 * se.max(1e-4), "{mean} vs {} (se {se})", beta * beta);
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn unvisit_probability_extremes() {
    let n = 2000usize;
    let g = generate_regular(RegularParams { n, r: 3, simple_only: true }, 26).unwrap();
    let horizon = regular_mixing_horizon(n);
    assert!(unvisit_probability(&g, 0, horizon, 500, 1).unwrap() > 0.99);
    let far = (10.0 * 2.0 * n as f64 * (n as f64).ln()) as u64;
    assert_eq!(unvisit_probability(&g, 0, far, 50, 2).unwrap(), 0.0);
}

#[test]
fn few_non_nice_vertices_in_large_cubic_graph() {
    let n = 100_000usize;
    let g = generate_regular(RegularParams { n, r: 3, simple_only: true }, 27).unwrap();
    let rep = classify_nice(&g, 0.1);
    let bound = (n as f64).powf(0.2) * (n as f64).ln();
    assert!((rep.non_nice_count as f64) <= bound, "{}", rep.non_nice_count);
}

#[test]
fn start_vertex_neighbourhood_at_time_zero() {
    let n = 1000usize;
    let g = generate_regular(RegularParams { n, r: 3, simple_only: true }, 28).unwrap();
    let u = 0;
    let nbrs = g.neighbors(u);
    let independent = nbrs.iter().all(|&a| nbrs.iter().all(|&b| !g.neighbors(a).contains(&b)));
    let common = nbrs
        .iter()
        .any(|&a| nbrs.iter().any(|&b| a != b && g.neighbors(a).iter().any(|w| *w != u && g.neighbors(b).contains(w))));
    let snap = &run_with_snapshots(&g, u, &SnapshotSpec::new(vec![0]).unwrap(), 0).unwrap()[0];
    assert_eq!(snap.vacant, n - 1);
    if independent && !common {
        assert_eq!(snap.degrees, DegreeProfile::Histogram(vec![0, 0, 3, n - 4]));
    }
}
