//! The acceptance gate: one test per criterion, each printing a single
//! pass/fail line. Tolerances and run counts are pinned inside the criterion
//! implementations in `harness::suite`.

use sqmem::harness::suite::{self, CriterionReport};
use sqmem::Calibration;

fn check(report: CriterionReport) {
    println!("{}", report.line());
    assert!(report.passed, "{}", report.line());
}

#[test]
fn criterion_01_parity_dimension_exact() {
    check(suite::criterion_01(&Calibration::default()));
}

#[test]
fn criterion_02_greedy_below_exact() {
    check(suite::criterion_02(&Calibration::default()));
}

#[test]
fn criterion_03_boost_density_bound() {
    check(suite::criterion_03(&Calibration::default()));
}

#[test]
fn criterion_04_round_mixture_closeness() {
    check(suite::criterion_04(&Calibration::default()));
}

#[test]
fn criterion_05_simulation_matches_exact() {
    check(suite::criterion_05(&Calibration::default()));
}

#[test]
fn criterion_06_sampled_boost_success() {
    check(suite::criterion_06(&Calibration::default()));
}

#[test]
fn criterion_07_rejection_acceptance_range() {
    check(suite::criterion_07(&Calibration::default()));
}

#[test]
fn criterion_08_quantization_resolution() {
    check(suite::criterion_08(&Calibration::default()));
}

#[test]
fn criterion_09_recombined_query_accuracy() {
    check(suite::criterion_09(&Calibration::default()));
}

#[test]
fn criterion_10_properify_and_identify() {
    check(suite::criterion_10(&Calibration::default()));
}

#[test]
fn criterion_11_adversarial_elimination() {
    check(suite::criterion_11(&Calibration::default()));
}

#[test]
fn criterion_12_stream_width_accounting() {
    check(suite::criterion_12(&Calibration::default()));
}
