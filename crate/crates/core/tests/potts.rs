use colorbound::potts::{
    chromatic_number, count_colorings, is_colorable, lipschitz_check, monochromatic_histogram,
    potts_partition, Multigraph,
};
use colorbound::Error;
use proptest::prelude::*;

/// Direct sum over all `q^n` colourings of `prod_edges exp(-beta * mult * [same colour])`.
fn naive_partition(g: &Multigraph, q: u32, beta: f64) -> f64 {
    let n = g.n();
    let mut colours = vec![0u32; n];
    let mut z = 0.0;
    loop {
        let mono: u64 = g
            .edges()
            .iter()
            .filter(|&&(u, v, _)| colours[u] == colours[v])
            .map(|e| e.2)
            .sum();
        z += (-beta * mono as f64).exp();
        let mut i = 0;
        loop {
            if i == n {
                return z;
            }
            colours[i] += 1;
            if colours[i] < q {
                break;
            }
            colours[i] = 0;
            i += 1;
        }
    }
}

fn naive_colorings(g: &Multigraph, q: u32) -> u64 {
    let n = g.n();
    let mut colours = vec![0u32; n];
    let mut count = 0;
    loop {
        if g.edges().iter().all(|&(u, v, _)| colours[u] != colours[v]) {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return count;
            }
            colours[i] += 1;
            if colours[i] < q {
                break;
            }
            colours[i] = 0;
            i += 1;
        }
    }
}

fn arb_multigraph(max_n: usize) -> impl Strategy<Value = Multigraph> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1u64..=3), 0..=8)
            .prop_map(move |edges| Multigraph::new(n, edges).expect("valid endpoints"))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_matches_naive_sum(g in arb_multigraph(5), q in 2u32..=4, beta in 0.0f64..4.0) {
        let want = naive_partition(&g, q, beta);
        let got = potts_partition(&g, q, beta).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
    }

    #[test]
    fn colorings_match_naive_count(g in arb_multigraph(5), q in 2u32..=4) {
        prop_assert_eq!(count_colorings(&g, q).unwrap(), naive_colorings(&g, q));
        prop_assert_eq!(is_colorable(&g, q).unwrap(), naive_colorings(&g, q) > 0);
    }

    #[test]
    fn partition_bounds_and_monotonicity(g in arb_multigraph(5), q in 2u32..=4, b1 in 0.0f64..3.0, db in 0.0f64..3.0) {
        let qn = (q as f64).powi(g.n() as i32);
        let z1 = potts_partition(&g, q, b1).unwrap();
        let z2 = potts_partition(&g, q, b1 + db).unwrap();
        let proper = count_colorings(&g, q).unwrap() as f64;
        prop_assert!(proper <= z2 * (1.0 + 1e-12));
        prop_assert!(z2 <= z1 * (1.0 + 1e-12));
        prop_assert!(z1 <= qn * (1.0 + 1e-12));
        prop_assert!((potts_partition(&g, q, 0.0).unwrap() - qn).abs() <= 1e-12 * qn);
    }

    #[test]
    fn adding_an_edge_changes_log_z_by_at_most_beta(g in arb_multigraph(5), q in 2u32..=4, beta in 0.0f64..5.0,
                                                     u in 0usize..5, v in 0usize..5) {
        let (u, v) = (u % g.n(), v % g.n());
        let check = lipschitz_check(&g, q, beta, (u, v)).unwrap();
        prop_assert!(check.holds(beta));
        let before = naive_partition(&g, q, beta).ln();
        let after = naive_partition(&g.with_edge(u, v).unwrap(), q, beta).ln();
        prop_assert!((check.delta - (after - before)).abs() < 1e-12);
        prop_assert!(check.delta <= 1e-12 && check.delta >= -beta - 1e-12);
    }

    #[test]
    fn chromatic_number_is_least_colourable_q(g in arb_multigraph(6)) {
        prop_assume!(!g.has_loop());
        let chi = chromatic_number(&g).unwrap();
        prop_assert!(naive_colorings(&g, chi) > 0);
        if chi > 1 {
            prop_assert_eq!(naive_colorings(&g, chi - 1), 0);
        }
    }

    #[test]
    fn text_format_round_trips(g in arb_multigraph(6)) {
        prop_assert_eq!(Multigraph::parse(&g.to_text()).unwrap(), g);
    }
}

#[test]
fn edge_free_graph_counts_every_assignment() {
    for n in 0..=6 {
        let g = Multigraph::empty(n);
        for q in 2..=4u32 {
            let qn = (q as f64).powi(n as i32);
            assert_eq!(potts_partition(&g, q, 2.5).unwrap(), qn);
            assert_eq!(count_colorings(&g, q).unwrap(), q.pow(n as u32) as u64);
        }
    }
}

#[test]
fn known_chromatic_numbers() {
    let cycle = |n: usize| {
        Multigraph::from_pairs(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap()
    };
    assert_eq!(chromatic_number(&cycle(7)).unwrap(), 3);
    assert_eq!(chromatic_number(&cycle(8)).unwrap(), 2);
    assert_eq!(chromatic_number(&Multigraph::complete(6)).unwrap(), 6);
    assert_eq!(chromatic_number(&Multigraph::path(9)).unwrap(), 2);
    assert_eq!(chromatic_number(&Multigraph::empty(4)).unwrap(), 1);
    // Wheel W_6: odd rim plus hub.
    let mut pairs: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
    pairs.extend((0..5).map(|i| (i, 5)));
    assert_eq!(
        chromatic_number(&Multigraph::from_pairs(6, &pairs).unwrap()).unwrap(),
        4
    );
}

#[test]
fn cycle_partition_has_closed_form() {
    // Z(C_n) = (q-1+w)^n + (q-1)(w-1)^n with w = e^{-beta}.
    for n in 3..=8usize {
        let g = Multigraph::from_pairs(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
            .unwrap();
        for q in [2u32, 3, 5] {
            for beta in [0.3f64, 1.7] {
                let w = (-beta).exp();
                let qf = q as f64;
                let want = (qf - 1.0 + w).powi(n as i32) + (qf - 1.0) * (w - 1.0).powi(n as i32);
                let got = potts_partition(&g, q, beta).unwrap();
                assert!(
                    (got - want).abs() < 1e-10 * want,
                    "n={n} q={q}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn histogram_totals_q_to_the_n() {
    let g = Multigraph::complete(5);
    let h = monochromatic_histogram(&g, 3).unwrap();
    assert_eq!(h.counts.iter().sum::<u64>(), 243);
    assert_eq!(h.proper(), 0);
}

#[test]
fn rejects_oversized_and_looped_inputs() {
    assert!(Multigraph::new(3, [(0, 3, 1)]).is_err());
    let looped = Multigraph::new(2, [(1, 1, 1)]).unwrap();
    assert!(!is_colorable(&looped, 5).unwrap());
    assert!(matches!(chromatic_number(&looped), Err(Error::HasLoop(..))));
    assert!(potts_partition(&Multigraph::empty(40), 3, 1.0).is_err());
}
