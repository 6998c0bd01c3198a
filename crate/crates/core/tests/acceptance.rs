//! Acceptance suite: one test per criterion, each printing a status
//! line. The same checks back the `forest-lab validate` subcommand.

use forest_lab::validate::{self, CriterionResult};

fn check(result: forest_lab::Result<CriterionResult>) {
    let result = result.expect("criterion infrastructure");
    println!("{}", result.status_line());
    assert!(result.passed, "{}", result.status_line());
}

#[test]
fn criterion_01_exact_oracle_equivalence() {
    check(validate::criterion_1_exact_oracle());
}

#[test]
fn criterion_02_sampler_matches_exact_law() {
    check(validate::criterion_2_sampler_vs_oracle());
}

#[test]
fn criterion_03_uniform_binary_shapes() {
    check(validate::criterion_3_uniform_shapes());
}

#[test]
fn criterion_04_rescaled_distance_law() {
    check(validate::criterion_4_distance_law());
}

#[test]
fn criterion_05_normalization_identities() {
    check(validate::criterion_5_normalization_identities());
}

#[test]
fn criterion_06_critical_block_counts() {
    check(validate::criterion_6_critical_block_counts());
}

#[test]
fn criterion_07_convergence_rate() {
    check(validate::criterion_7_convergence_rate());
}

#[test]
fn criterion_08_gibbs_exactness() {
    check(validate::criterion_8_gibbs_exactness());
}

#[test]
fn criterion_09_pd_mixture_identity() {
    check(validate::criterion_9_pd_mixture());
}

#[test]
fn criterion_10_contour_structure() {
    check(validate::criterion_10_contour_structure());
}

#[test]
fn criterion_11_trivial_regimes() {
    check(validate::criterion_11_trivial_regimes());
}
