mod common;

use distinct_core::stirling::stirling_bound_table;
use distinct_core::verify::{
    estimator_suite, orthopoly_suite, spectral_csv, spectral_suite, stirling_bound_csv,
    stirling_suite,
};

#[test]
fn all_suites_pass() {
    let (spectral, rows) = spectral_suite().unwrap();
    for report in [orthopoly_suite().unwrap(), stirling_suite().unwrap(), estimator_suite().unwrap(), spectral] {
        assert!(report.passed(), "{report}");
    }
    let csv = spectral_csv(&rows);
    assert_eq!(csv.lines().count(), 1 + (1..=8).map(|l| 64 - l).sum::<usize>());
}

#[test]
fn stirling_bound_golden() {
    let csv = stirling_bound_csv(&stirling_bound_table(60).unwrap());
    assert_eq!(csv.lines().count(), 1 + 60 * 61 / 2);
    common::check_golden("stirling_bound_n60.csv", &csv);
}
