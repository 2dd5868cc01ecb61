use proptest::prelude::*;

use qoe_cache::baselines::{solve_ecst, RateRule};
use qoe_cache::bnb::solve_ec_ve;
use qoe_cache::catalog::{build_scenario, zipf_popularity, ScenarioConfig};
use qoe_cache::greedy::solve_greedy_ec_ve;
use qoe_cache::harness::{
    min_capacity, read_csv, round_sig, solve_scheme, to_csv_string, Axis, ResultRow,
};
use qoe_cache::oracle::{oracle_solve_with, rate_grid, SplitMode};
use qoe_cache::qoe::{check_feasibility, min_secure_packets, security_rhs, CacheWeights};
use qoe_cache::relaxed::{solve_relaxed, PinSet};
use qoe_cache::{Scenario, Scheme, SolverOptions};

fn quick() -> SolverOptions {
    SolverOptions {
        n_starts: 4,
        ..SolverOptions::default()
    }
}

/// Small random scenario; `fill` scales capacity against the all-`r_max` volume.
fn small_scenario(
    files: usize,
    n: usize,
    servers: usize,
    classes: Vec<usize>,
    psi: f64,
    fill: f64,
) -> Scenario {
    let mut cfg = ScenarioConfig::reference_catalog(1.0);
    cfg.num_files = files;
    cfg.n = n;
    cfg.num_servers = servers;
    cfg.file_classes = Some(classes);
    cfg.total_requests = psi;
    cfg.capacities_mb = vec![1.0; servers];
    let volume = build_scenario::<f64>(&cfg).unwrap().max_catalog_volume();
    cfg.capacities_mb = vec![fill * volume / servers as f64; servers];
    build_scenario(&cfg).unwrap()
}

fn scenario_strategy(
    max_files: usize,
    max_n: usize,
    max_servers: usize,
) -> impl Strategy<Value = Scenario> {
    (1..=max_files, 2..=max_n, 1..=max_servers)
        .prop_flat_map(|(f, n, k)| {
            (
                Just(f),
                Just(n),
                Just(k),
                prop::collection::vec(1..=3usize, f),
                1.0..12.0f64,
                0.05..1.1f64,
            )
        })
        .prop_map(|(f, n, k, classes, psi, fill)| small_scenario(f, n, k, classes, psi, fill))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zipf_is_a_decreasing_distribution(f in 1usize..40, theta in 0.01..0.99f64) {
        let p = zipf_popularity(f, theta).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.windows(2).all(|w| w[0] >= w[1]));
        let p32 = zipf_popularity(f, theta as f32).unwrap();
        prop_assert!(p.iter().zip(&p32).all(|(a, b)| (a - f64::from(*b)).abs() < 1e-5));
    }

    #[test]
    fn secure_count_is_ceiling_of_rhs(n in 1usize..40, psi in 0.05..200.0f64) {
        let m = min_secure_packets(n, psi).unwrap();
        let rhs = security_rhs(n, psi);
        prop_assert!(m <= n);
        prop_assert_eq!(m, rhs.max(0.0).ceil() as usize);
        let more = min_secure_packets(n, psi * 1.5).unwrap();
        prop_assert!(more >= m);
    }

    #[test]
    fn round_sig_keeps_six_digits(x in -1e9..1e9f64) {
        let r = round_sig(x);
        prop_assert_eq!(round_sig(r), r);
        if x != 0.0 {
            prop_assert!(((r - x) / x).abs() <= 5e-6);
        }
    }

    #[test]
    fn rate_grid_spans_range(lo in 0.1..5.0f64, width in 0.0..5.0f64, points in 2usize..20) {
        let g = rate_grid(lo, lo + width, points);
        prop_assert_eq!(g.len(), points);
        prop_assert_eq!(g[0], lo);
        prop_assert!((g[points - 1] - (lo + width)).abs() < 1e-12);
        prop_assert!(g.windows(2).all(|w| w[0] <= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_feasible_output_is_certified(s in scenario_strategy(3, 4, 2)) {
        for scheme in Scheme::ALL {
            let r = solve_scheme(&s, scheme, &quick()).unwrap();
            if r.is_feasible() {
                prop_assert!(check_feasibility(&s, &r.placement, &r.plan).unwrap().is_feasible(), "{}", scheme.name());
                let rates = r.rates(&s);
                for (f, rate) in s.files.iter().zip(rates) {
                    prop_assert!(rate >= f.r_min - 1e-6 && rate <= f.r_max + 1e-6);
                }
            }
        }
    }

    #[test]
    fn relaxed_solver_respects_pins(
        s in scenario_strategy(2, 4, 2),
        raw in prop::collection::vec((0usize..8, 0usize..8, 0usize..8, any::<bool>()), 1..4),
    ) {
        let mut pins = PinSet::new();
        for (k, i, j, v) in raw {
            let (k, i, j) = (k % s.num_servers(), i % s.packets, j % s.num_files());
            if pins.get(k, i, j).is_none() {
                pins.insert(k, i, j, v).unwrap();
            }
        }
        let sol = solve_relaxed(&s, &pins, &quick()).unwrap();
        if sol.is_feasible() {
            for ((k, i, j), v) in pins.iter() {
                let w = sol.weights.weight(k, i, j);
                prop_assert!((w - if v { 1.0 } else { 0.0 }).abs() < 1e-9, "pin ({k},{i},{j})={v} got {w}");
            }
        }
    }

    #[test]
    fn same_seed_same_result(s in scenario_strategy(3, 4, 2), seed in any::<u64>()) {
        let opts = quick().with_seed(seed);
        prop_assert_eq!(solve_ec_ve(&s, &opts).unwrap(), solve_ec_ve(&s, &opts).unwrap());
    }

    #[test]
    fn greedy_stays_on_grid_and_beats_its_start(s in scenario_strategy(3, 4, 1), step in 0.005..0.2f64) {
        let opts = SolverOptions { step_override: Some(step), ..quick() };
        let g = solve_greedy_ec_ve(&s, &opts).unwrap();
        let ec = solve_scheme(&s, Scheme::Ec, &opts).unwrap();
        prop_assert_eq!(g.is_feasible(), ec.is_feasible());
        if let (Some(qg), Some(qe)) = (g.q(), ec.q()) {
            prop_assert!(qg >= qe - 1e-9);
            for (f, rate) in s.files.iter().zip(g.rates(&s)) {
                let t = (rate - f.r_min) / step;
                prop_assert!((t - t.round()).abs() < 1e-6 || (rate - f.r_max).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ecst_counts_are_equal_across_servers(s in scenario_strategy(3, 6, 3)) {
        let r = solve_ecst(&s, RateRule::Min).unwrap();
        if r.is_feasible() {
            for j in 0..s.num_files() {
                let c0 = r.placement.server_count(0, j);
                prop_assert!((1..s.num_servers()).all(|k| r.placement.server_count(k, j) == c0));
            }
        }
    }

    #[test]
    fn ve_min_capacity_ignores_demand(psi in 0.5..150.0f64, n in 2usize..8) {
        let mut cfg = ScenarioConfig::reference_catalog(1.0);
        cfg.n = n;
        cfg.total_requests = psi;
        let found = min_capacity(&cfg, Scheme::Ve, 1.0, &quick()).unwrap();
        prop_assert_eq!(found, Some(26_880.0));
    }

    #[test]
    fn csv_round_trip(s in scenario_strategy(3, 4, 2), value in 0.0..1e6f64) {
        let rows: Vec<ResultRow> = Scheme::ALL
            .iter()
            .map(|&scheme| ResultRow::new(Axis::Capacity, value, &s, &solve_scheme(&s, scheme, &quick()).unwrap()))
            .collect();
        let text = to_csv_string(&rows).unwrap();
        let back: Vec<ResultRow> = read_csv(text.as_bytes()).unwrap();
        prop_assert_eq!(back, rows);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_counts_every_combination(
        f in 1usize..=2, n in 2usize..=3, grid in 2usize..6,
        classes in prop::collection::vec(1..=3usize, 2), psi in 1.0..10.0f64, fill in 0.1..1.1f64,
    ) {
        let s = small_scenario(f, n, 1, classes[..f].to_vec(), psi, fill);
        let r = oracle_solve_with(&s, grid, SplitMode::Equal).unwrap();
        prop_assert_eq!(r.counters.enumerated, (1u64 << (n * f)) * (grid as u64).pow(f as u32));
    }

    #[test]
    fn relaxation_bounds_the_oracle(
        f in 1usize..=2, n in 2usize..=3,
        classes in prop::collection::vec(1..=3usize, 2), psi in 1.0..10.0f64, fill in 0.1..1.1f64,
    ) {
        let s = small_scenario(f, n, 1, classes[..f].to_vec(), psi, fill);
        let e = solve_ec_ve(&s, &SolverOptions::default()).unwrap();
        let oracle = oracle_solve_with(&s, 11, SplitMode::Optimal).unwrap();
        if let Some(q) = oracle.q() {
            let bound = e.relaxation_bound.expect("root bound when the oracle is feasible");
            prop_assert!(bound >= q - 1e-3, "bound {bound} < oracle {q}");
        }
    }
}
