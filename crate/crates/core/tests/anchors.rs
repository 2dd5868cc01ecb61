use approx::assert_abs_diff_eq;

use qoe_cache::baselines::{solve_ecst, solve_ve_only, RateRule};
use qoe_cache::bnb::solve_ec_ve;
use qoe_cache::catalog::{build_scenario, zipf_popularity, ScenarioConfig};
use qoe_cache::greedy::solve_greedy_ec_ve;
use qoe_cache::oracle::oracle_solve;
use qoe_cache::qoe::{
    check_feasibility, encoding_quality, latency_penalty, min_secure_packets, objective,
    security_rhs,
};
use qoe_cache::{EncodingPlan, Placement, Scenario, SolverOptions};

fn reference(capacity: f64) -> Scenario {
    build_scenario(&ScenarioConfig::reference_catalog(capacity)).unwrap()
}

fn single_file(n: usize, requests: f64, capacity: f64) -> Scenario {
    let mut cfg = ScenarioConfig::reference_catalog(capacity);
    cfg.num_files = 1;
    cfg.n = n;
    cfg.total_requests = requests;
    cfg.classes.truncate(1);
    build_scenario(&cfg).unwrap()
}

#[test]
fn zipf_two_files() {
    let p = zipf_popularity(2, 0.8_f64).unwrap();
    assert_abs_diff_eq!(p[0], 0.635183, epsilon = 1e-6);
    assert_abs_diff_eq!(p[1], 0.364817, epsilon = 1e-6);
}

#[test]
fn requests_follow_popularity() {
    let mut cfg = ScenarioConfig::reference_catalog(1.0);
    cfg.num_files = 2;
    cfg.file_classes = Some(vec![1, 1]);
    let s: Scenario = build_scenario(&cfg).unwrap();
    assert_abs_diff_eq!(s.files[0].requests, 63.5183, epsilon = 1e-4);
    assert_abs_diff_eq!(s.files[1].requests, 36.4817, epsilon = 1e-4);
}

#[test]
fn minimum_catalog_volume() {
    assert_abs_diff_eq!(
        reference(0.0).min_catalog_volume(),
        26_880.0,
        epsilon = 1e-9
    );
    assert_abs_diff_eq!(
        reference(0.0).max_catalog_volume(),
        64_320.0,
        epsilon = 1e-9
    );
}

#[test]
fn quality_polynomial_values() {
    let s = reference(0.0);
    let d = s.duration;
    let at = |j: usize, r: f64| encoding_quality(&s.files[j], r * d, d);
    assert_abs_diff_eq!(at(0, 0.3), 3.36121, epsilon = 1e-5);
    assert_abs_diff_eq!(at(0, 0.7), 4.15389, epsilon = 1e-5);
    assert_abs_diff_eq!(at(4, 4.0), 3.96990, epsilon = 1e-5);
    assert_abs_diff_eq!(at(7, 8.0), 4.29920, epsilon = 1e-5);
    // evaluated by hand: 0.0426 − 0.4466 + 1.6369 + 1.8415 and 0.1728 − 1.0704 + 2.3368 + 2.5248
    assert_abs_diff_eq!(at(4, 1.0), 3.0744, epsilon = 1e-12);
    assert_abs_diff_eq!(at(7, 4.0), 3.9640, epsilon = 1e-12);
}

#[test]
fn penalty_at_unit_ratio() {
    let s = single_file(10, 1.0, 0.0);
    let mut file = s.files[0].clone();
    file.popularity = 1.0;
    assert_abs_diff_eq!(
        latency_penalty(&file, 5_000.0, 5_000.0),
        0.99,
        epsilon = 1e-12
    );
    assert_eq!(latency_penalty(&file, 0.0, 5_000.0), 0.0);
}

#[test]
fn secure_packet_counts() {
    assert_eq!(min_secure_packets(10, 2.0).unwrap(), 6);
    assert_eq!(min_secure_packets(10, 1.0).unwrap(), 1);
    assert_eq!(min_secure_packets(10, 0.5).unwrap(), 0);
    assert_abs_diff_eq!(security_rhs(10, 2.0), 5.5, epsilon = 1e-12);
}

#[test]
fn all_cached_at_minimum_rates_is_exactly_feasible() {
    let s = reference(26_880.0);
    let p = Placement::all_on_first_server(&s);
    let plan = EncodingPlan::at_min_rates(&s);
    let report = check_feasibility(&s, &p, &plan).unwrap();
    assert!(report.is_feasible());
    let q = objective(&s, &p, &plan).unwrap();
    // the mean of the three class minima with 4/2/2 files
    assert_abs_diff_eq!(q.mean_mos, 3.440205, epsilon = 1e-6);
}

#[test]
fn empty_placement_violates_secrecy() {
    let s = reference(26_880.0);
    let report = check_feasibility(
        &s,
        &Placement::empty_for(&s),
        &EncodingPlan::at_min_rates(&s),
    )
    .unwrap();
    assert!(!report.is_feasible());
    assert!(report.security_ok.iter().any(|ok| !ok));
}

#[test]
fn all_cached_at_maximum_rates() {
    let s = reference(69_660.0);
    let q = objective(
        &s,
        &Placement::all_on_first_server(&s),
        &EncodingPlan::at_max_rates(&s),
    )
    .unwrap();
    assert_abs_diff_eq!(q.total, 33.15376, epsilon = 1e-5);
    assert_abs_diff_eq!(q.mean_mos, 4.14422, epsilon = 1e-5);
}

#[test]
fn ample_capacity_reaches_maximum_rates() {
    let mut cfg = ScenarioConfig::reference_catalog(69_660.0);
    cfg.n = 6;
    let s: Scenario = build_scenario(&cfg).unwrap();
    let opts = SolverOptions {
        n_starts: 4,
        ..SolverOptions::default()
    };
    for r in [
        solve_ec_ve(&s, &opts).unwrap(),
        solve_greedy_ec_ve(&s, &opts).unwrap(),
    ] {
        assert!(r.is_feasible());
        assert!(r.placement.as_slice().iter().all(|&c| c));
        assert_abs_diff_eq!(r.mean_mos().unwrap(), 4.14422, epsilon = 1e-5);
    }
}

#[test]
fn ve_capacity_edges() {
    assert_abs_diff_eq!(
        solve_ve_only(&reference(64_320.0))
            .unwrap()
            .mean_mos()
            .unwrap(),
        4.14422,
        epsilon = 1e-5
    );
    assert_abs_diff_eq!(
        solve_ve_only(&reference(26_880.0))
            .unwrap()
            .mean_mos()
            .unwrap(),
        3.440205,
        epsilon = 1e-6
    );
    assert!(!solve_ve_only(&reference(26_879.0)).unwrap().is_feasible());
}

#[test]
fn ecst_at_exact_minimum() {
    let r = solve_ecst(&reference(26_880.0), RateRule::Min).unwrap();
    assert_abs_diff_eq!(r.mean_mos().unwrap(), 3.440205, epsilon = 1e-6);
}

#[test]
fn secrecy_without_room_is_infeasible() {
    // two packets must be cached but one packet at r_min is 360 Mb
    let s = single_file(2, 2.0, 300.0);
    assert!(!solve_ec_ve(&s, &SolverOptions::default())
        .unwrap()
        .is_feasible());
    assert!(!oracle_solve(&s, 11).unwrap().is_feasible());
    assert!(!solve_ecst(&reference(0.0), RateRule::Min)
        .unwrap()
        .is_feasible());
}

#[test]
fn oracle_single_file_ample_capacity() {
    let s = single_file(2, 1.0, 10_000.0);
    let r = oracle_solve(&s, 11).unwrap();
    assert!(r.is_feasible());
    assert_eq!(r.placement.file_count(0), 2);
    assert_abs_diff_eq!(r.rates(&s)[0], 0.7, epsilon = 1e-12);
}
