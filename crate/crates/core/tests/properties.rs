use batprop_core::check;
use batprop_core::{
    bat_enumerate, build_all_tables, generate_ba, max_state_pagerank, oracle_spread, pagerank,
    personalized_pagerank, solve_rank_direct, spread_probability, spread_table, BaParams, Graph,
    RankConfig, SpreadQuery,
};
use proptest::prelude::*;

fn cfg() -> RankConfig<f64> {
    RankConfig::default()
}

fn ba(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..=max_n, 1usize..=2, any::<u64>()).prop_map(|(n, m, seed)| {
        let m = m.min(n - 1);
        generate_ba(&BaParams::new(n, m, seed)).unwrap()
    })
}

fn cycle(n: usize) -> Graph {
    Graph::from_edge_list((0..n).map(|i| (i, (i + 1) % n)), n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn search_matches_oracle(g in ba(8), s in 0usize..8, p in 1usize..=8) {
        let n = g.node_count();
        let (s, p) = (s % n, (p - 1) % n + 1);
        let ranks = pagerank(&g, &cfg()).unwrap();
        let tables = build_all_tables(&g, &ranks).unwrap();
        let q = SpreadQuery::new(s, p);
        let fast = spread_probability(&g, &tables, q).unwrap().probability;
        let slow = oracle_spread(&g, &tables, q).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn ranks_are_a_distribution(g in ba(60)) {
        let ranks = pagerank(&g, &cfg()).unwrap();
        prop_assert!((ranks.sum() - 1.0).abs() < 1e-9);
        prop_assert!(ranks.scores.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn direct_and_iterative_agree(g in ba(200)) {
        let it = pagerank(&g, &cfg()).unwrap();
        let direct = solve_rank_direct(&g, None, 0.85).unwrap();
        for i in 0..g.node_count() {
            prop_assert!((it[i] - direct[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn personalized_direct_and_iterative_agree(
        g in ba(40),
        w in prop::collection::vec(0.0f64..1.0, 40),
    ) {
        let n = g.node_count();
        let mut w = w[..n].to_vec();
        w[0] += 0.1;
        let it = personalized_pagerank(&g, &w, &cfg()).unwrap();
        let direct = solve_rank_direct(&g, Some(&w), 0.85).unwrap();
        prop_assert!((it.sum() - 1.0).abs() < 1e-9);
        for i in 0..n {
            prop_assert!((it[i] - direct[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn state_tables_are_consistent(g in ba(30)) {
        let ranks = pagerank(&g, &cfg()).unwrap();
        let tables = build_all_tables(&g, &ranks).unwrap();
        prop_assert!(check::check_tables(&g, &ranks, &tables).is_ok());
        for t in &tables {
            let total: f64 = t.state_prob.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            let full = t.state_count() - 1;
            prop_assert_eq!(t.state_pr[full], t.max_state_pr);
            prop_assert_eq!(t.max_state_pr, max_state_pagerank(t.node, &g, &ranks).unwrap());
            // adding a neighbor to a state never lowers its mass
            for k in 0..t.state_count() {
                for b in 0..t.degree() {
                    prop_assert!(t.state_pr[k] <= t.state_pr[k | 1 << b]);
                }
            }
        }
    }

    #[test]
    fn rows_are_bounded_and_non_increasing(g in ba(7)) {
        let ranks = pagerank(&g, &cfg()).unwrap();
        let tables = build_all_tables(&g, &ranks).unwrap();
        let m = spread_table(&g, &tables, 1).unwrap();
        prop_assert!(check::check_matrix(&g, &m).is_ok());
        for s in 0..g.node_count() {
            prop_assert!((m.get(s, 2) - (1.0 - tables[s].state_prob[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_shape(n in 3usize..80, m in 1usize..4, seed in any::<u64>()) {
        prop_assume!(m < n);
        let p = BaParams::new(n, m, seed);
        let g = generate_ba(&p).unwrap();
        prop_assert_eq!(g.edge_count(), p.expected_edges());
        prop_assert_eq!(g.edge_count(), m * (n - m));
        prop_assert!(g.is_connected());
        prop_assert!(g.check_invariants().is_ok());
        prop_assert_eq!(generate_ba(&p).unwrap(), g);
    }

    #[test]
    fn edge_list_round_trip(g in ba(40)) {
        let text = g.to_edge_list();
        prop_assert_eq!(Graph::parse_edge_list(&text, Some(g.node_count())).unwrap(), g.clone());
        prop_assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
    }
}

#[test]
fn bat_counts_match_integer_counting() {
    for m in 0..=10 {
        let states = bat_enumerate(m).unwrap();
        assert_eq!(states.len(), 1 << m);
        for (k, x) in states.iter().enumerate() {
            assert_eq!(x.value(), k);
            assert_eq!(x.count_ones(), k.count_ones() as usize);
        }
    }
    assert!(check::check_bat(10).is_ok());
}

#[test]
fn cycles_treat_every_node_alike() {
    for n in 3..=7 {
        let g = cycle(n);
        let ranks = pagerank(&g, &cfg()).unwrap();
        for i in 0..n {
            assert!((ranks[i] - 1.0 / n as f64).abs() < 1e-12);
        }
        let tables = build_all_tables(&g, &ranks).unwrap();
        let m = spread_table(&g, &tables, 1).unwrap();
        for s in 1..n {
            for p in 1..=n {
                assert!((m.get(s, p) - m.get(0, p)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let g = generate_ba(&BaParams::new(30, 2, 5)).unwrap();
    let wide = pagerank(&g, &cfg()).unwrap();
    let narrow = pagerank::<f32>(&g, &RankConfig::default()).unwrap();
    for i in 0..30 {
        assert!((wide[i] - narrow[i] as f64).abs() < 1e-4);
    }
}
