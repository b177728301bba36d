use proptest::prelude::*;
use vacant_core::components::{classify_components, ComponentKind};
use vacant_core::walk::first_visit_times;
use vacant_core::*;

fn assert_symmetric(g: &Graph) {
    let n = g.vertex_count();
    let mut count = std::collections::HashMap::new();
    for v in 0..n as VertexId {
        for &w in g.neighbors(v) {
            *count.entry((v, w)).or_insert(0i64) += 1;
        }
    }
    for (&(v, w), &c) in &count {
        assert_eq!(count.get(&(w, v)), Some(&c), "asymmetric pair {v} {w}");
    }
    let degree_sum: usize = (0..n as VertexId).map(|v| g.degree(v)).sum();
    assert_eq!(degree_sum, 2 * g.edge_count());
}

fn assert_transposed(d: &Digraph) {
    let mut out: Vec<(VertexId, VertexId)> = d.arcs().collect();
    let mut inn: Vec<(VertexId, VertexId)> =
        (0..d.vertex_count() as VertexId).flat_map(|v| d.in_neighbors(v).iter().map(move |&u| (u, v))).collect();
    out.sort_unstable();
    inn.sort_unstable();
    assert_eq!(out, inn);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regular_graphs_are_symmetric_and_regular(half_n in 2usize..200, r in 1u32..6, seed: u64) {
        let n = 2 * half_n;
        let g = generate_regular(RegularParams { n, r, simple_only: false }, seed).unwrap();
        assert_symmetric(&g);
        prop_assert_eq!(g.regular_degree(), Some(r as usize));
        prop_assert_eq!(g.edge_count(), n * r as usize / 2);
        let again = generate_regular(RegularParams { n, r, simple_only: false }, seed).unwrap();
        prop_assert_eq!(g, again);
    }

    #[test]
    fn simple_regular_graphs_are_simple(half_n in 3usize..100, seed: u64) {
        let g = generate_regular(RegularParams { n: 2 * half_n, r: 3, simple_only: true }, seed).unwrap();
        prop_assert!(g.is_simple());
    }

    #[test]
    fn configuration_keeps_degrees(degrees in prop::collection::vec(0usize..6, 1..60), seed: u64) {
        let mut degrees = degrees;
        if degrees.iter().sum::<usize>() % 2 == 1 {
            degrees[0] += 1;
        }
        let g = sample_configuration(&degrees, seed).unwrap();
        assert_symmetric(&g);
        prop_assert_eq!(g.degrees(), degrees);
    }

    #[test]
    fn gnp_is_symmetric_and_simple(n in 1usize..300, p in 0.0f64..=1.0, seed: u64) {
        let g = generate_gnp(GnpParams { n, p }, seed).unwrap();
        assert_symmetric(&g);
        prop_assert!(g.is_simple());
    }

    #[test]
    fn dnp_is_transposed_and_support_matches(n in 1usize..200, p in 0.0f64..=1.0, seed: u64) {
        let d = generate_dnp(DnpParams { n, p }, seed).unwrap();
        assert_transposed(&d);
        prop_assert!(d.arcs().all(|(u, v)| u != v));
        let g = underlying_graph(&d);
        prop_assert!(g.is_simple());
        for &(u, v) in g.edges() {
            prop_assert!(d.out_neighbors(u).contains(&v) || d.out_neighbors(v).contains(&u));
        }
        for (u, v) in d.arcs() {
            prop_assert!(g.neighbors(u).contains(&v));
        }
    }

    #[test]
    fn walk_counts_are_monotone(half_n in 3usize..150, seed: u64, steps in 1usize..2000) {
        let n = 2 * half_n;
        let g = generate_regular(RegularParams { n, r: 3, simple_only: false }, seed).unwrap();
        let mut run = WalkRun::new(&g, 0, seed ^ 1).unwrap();
        let (mut vacant, mut unvisited) = (run.vacant_count(), run.unvisited_edge_count());
        for i in 0..steps {
            run.step().unwrap();
            prop_assert_eq!(run.time(), i as u64 + 1);
            prop_assert!(run.is_visited(run.position()));
            prop_assert_eq!(run.vacant_count(), n - run.visited().count_ones());
            prop_assert!(vacant - run.vacant_count() <= 1);
            prop_assert!(unvisited - run.unvisited_edge_count() <= 1);
            vacant = run.vacant_count();
            unvisited = run.unvisited_edge_count();
        }
    }

    #[test]
    fn pairing_state_invariants(half_n in 1usize..40, r in 1u32..5, seed: u64, steps in 1usize..300) {
        let n = 2 * half_n;
        let mut st = PairingState::new(n, r, 0, seed).unwrap();
        for _ in 0..steps {
            st.coupled_walk_step();
            prop_assert_eq!(st.unpaired_count() + 2 * st.pair_count(), n * r as usize);
            for point in 0..n * r as usize {
                if let Some(q) = st.partner_of(point) {
                    prop_assert_eq!(st.partner_of(q), Some(point));
                }
            }
            for v in 0..n as VertexId {
                prop_assert_eq!(!st.is_visited(v), st.cell_unpaired(v));
            }
        }
        let pairing = st.finalize_pairing(seed);
        for point in 0..pairing.point_count() {
            prop_assert_eq!(pairing.partner(pairing.partner(point)), point);
            if let Some(q) = st.partner_of(point) {
                prop_assert_eq!(pairing.partner(point), q);
            }
        }
    }

    #[test]
    fn snapshot_sums(half_n in 3usize..200, r in 3u32..6, seed: u64, t in 0u64..1500) {
        let n = 2 * half_n;
        let g = generate_regular(RegularParams { n, r, simple_only: false }, seed).unwrap();
        let spec = SnapshotSpec::new(vec![t]).unwrap();
        let snap = &run_with_snapshots(&g, 0, &spec, seed).unwrap()[0];
        match &snap.degrees {
            DegreeProfile::Histogram(h) => prop_assert_eq!(h.iter().sum::<usize>(), snap.vacant),
            other => prop_assert!(false, "unexpected profile {:?}", other),
        }
        let weighted: usize = snap.component_sizes.iter().map(|&(k, c)| k * c).sum();
        prop_assert_eq!(weighted, snap.vacant);
        prop_assert!(snap.largest >= snap.second_largest);
    }

    #[test]
    fn decompositions_agree_and_trees_are_trees(n in 1usize..120, p in 0.0f64..0.1, seed: u64, visit_mask: u64) {
        let g = generate_gnp(GnpParams { n, p }, seed).unwrap();
        let mut visited = Bitmap::new(n);
        for v in 0..n.min(64) {
            if visit_mask >> v & 1 == 1 {
                visited.insert(v);
            }
        }
        let view = induced_vacant_subgraph(&g, &visited);
        let a = connected_components(&view);
        let b = connected_components_bfs(&view);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.sizes().iter().sum::<usize>(), view.vertex_count());
        prop_assert!(a.sizes().windows(2).all(|w| w[0] >= w[1]));
        for (kind, (&size, &edges)) in classify_components(&a).iter().zip(a.sizes().iter().zip(a.edge_counts())) {
            prop_assert_eq!(*kind == ComponentKind::Tree, edges + 1 == size);
        }
    }

    #[test]
    fn scc_condensation_is_acyclic(n in 1usize..150, p in 0.0f64..0.05, seed: u64) {
        let d = generate_dnp(DnpParams { n, p }, seed).unwrap();
        let visited = Bitmap::new(n);
        let view = induced_vacant_subgraph(&d, &visited);
        let scc = strongly_connected_components(&view);
        prop_assert_eq!(scc.sizes().iter().sum::<usize>(), n);
        let k = scc.component_count();
        let mut indeg = vec![0usize; k];
        let mut adj = vec![Vec::new(); k];
        for (u, v) in d.arcs() {
            let (a, b) = (scc.component_of(u).unwrap(), scc.component_of(v).unwrap());
            if a != b {
                adj[a].push(b);
                indeg[b] += 1;
            }
        }
        let mut stack: Vec<usize> = (0..k).filter(|&c| indeg[c] == 0).collect();
        let mut seen = 0;
        while let Some(c) = stack.pop() {
            seen += 1;
            for &x in &adj[c] {
                indeg[x] -= 1;
                if indeg[x] == 0 {
                    stack.push(x);
                }
            }
        }
        prop_assert_eq!(seen, k);
    }

    #[test]
    fn seeds_are_scheduling_free(base: u64, i in 0u64..1000) {
        prop_assert_eq!(derive_seed(base, i), derive_seed(base, i));
        prop_assert_ne!(derive_seed(base, i), derive_seed(base, i + 1));
    }

    #[test]
    fn returns_at_least_one(half_n in 3usize..60, seed: u64, horizon in 1u64..200) {
        let g = generate_regular(RegularParams { n: 2 * half_n, r: 3, simple_only: false }, seed).unwrap();
        let s = estimate_returns(&g, 0, horizon, 5, seed);
        prop_assert!(s.mean >= 1.0 && s.mean <= horizon as f64);
    }
}

#[test]
fn first_visits_respect_burn_in() {
    let g = generate_regular(RegularParams { n: 100, r: 3, simple_only: true }, 3).unwrap();
    let hits = first_visit_times(&g, &[0, 1, 2], 5000, 40, 50, 9).unwrap();
    for row in hits {
        assert!(row.iter().all(|&h| h >= 40));
    }
}
