//! The acceptance suite: one function per criterion, each returning a
//! pass/fail record with diagnostic details. The CLI `validate`
//! subcommand and the integration test suite both run these.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::combinatorics::{enumerate_binary_shapes, BinaryShape};
use crate::error::Result;
use crate::exact::{exact_reduced_distribution, ModelParams};
use crate::experiment::{run_monte_carlo, ExperimentConfig, KappaMode, OutputFormat};
use crate::gibbs::{GibbsSampler, GibbsState, block_weight_f64, gibbs_coefficient, poisson_dirichlet_mixture};
use crate::limits::{
    bouquet_limit_probability, bouquet_limit_probability_moment_form, fixed_regime_density,
    moment_integral_quadrature, normalization_sum, scaled_class_pmf, LimitTables,
};
use crate::sampler::{RngStream, WilsonSampler};

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CriterionResult {
    fn new(id: u32, name: &'static str, passed: bool, details: String) -> Self {
        CriterionResult {
            id,
            name,
            passed,
            details,
        }
    }

    pub fn status_line(&self) -> String {
        format!(
            "criterion {:2} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

fn workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn mc_config(n: u32, kappa_mode: KappaMode, l: u32, replicates: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n,
        kappa_mode,
        l,
        replicates,
        seed,
        workers: workers(),
        output: None,
        format: OutputFormat::Json,
    }
}

/// Criterion 1: the closed-form class probability reproduces the exact
/// enumeration law, classwise to 1e-12, with total mass one.
pub fn criterion_1_exact_oracle() -> Result<CriterionResult> {
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut passed = true;
    let mut notes = Vec::new();
    for &n in &[3u32, 5, 6] {
        for &kappa in &[0.5, 1.0, 2.0] {
            for l in 1..=3u32 {
                let params = ModelParams::new(n, kappa, l)?;
                let dist = exact_reduced_distribution(&params)?;
                if dist.total_mass() != BigRational::one() {
                    passed = false;
                    notes.push(format!("mass != 1 at n={n} kappa={kappa} l={l}"));
                }
                for (key, class) in &dist.classes {
                    let exact = class.probability.to_f64().unwrap_or(f64::NAN);
                    let direct =
                        crate::exact::log_class_probability(n, kappa, l, class.r, class.d).exp();
                    let err = (exact - direct).abs();
                    worst = worst.max(err);
                    checked += 1;
                    if err > 1e-12 {
                        passed = false;
                        notes.push(format!("class {key} at n={n} kappa={kappa} l={l}: err {err:.3e}"));
                    }
                }
            }
        }
    }
    let mut details = format!("{checked} classes checked, worst error {worst:.3e}");
    if !notes.is_empty() {
        details.push_str(&format!("; failures: {}", notes.join(", ")));
    }
    Ok(CriterionResult::new(
        1,
        "exact-law oracle equivalence",
        passed,
        details,
    ))
}

/// Criterion 2: Wilson sampler versus the exact law at n=6.
pub fn criterion_2_sampler_vs_oracle() -> Result<CriterionResult> {
    let config = mc_config(6, KappaMode::Fixed { kappa: 2.0 }, 2, 100_000, 0x5EED_0002);
    let report = run_monte_carlo(&config)?;
    let comparison = report
        .exact_comparison
        .expect("n <= 8 reports carry the oracle");
    let p = comparison.chi_square.p_value;
    Ok(CriterionResult::new(
        2,
        "sampler matches exact law (chi-square)",
        p > 1e-3,
        format!(
            "chi2={:.3} dof={} p={:.4} tv={:.5}",
            comparison.chi_square.statistic, comparison.chi_square.dof, p, comparison.total_variation
        ),
    ))
}

/// Criterion 3: uniform binary shapes in the fixed-kappa regime.
pub fn criterion_3_uniform_shapes() -> Result<CriterionResult> {
    let l = 3u32;
    let config = mc_config(10_000, KappaMode::Fixed { kappa: 1.0 }, l, 10_000, 0x5EED_0003);
    let report = run_monte_carlo(&config)?;
    let shapes = enumerate_binary_shapes(&[1, 2, 3])?;
    let keys: Vec<String> = shapes
        .iter()
        .map(|s| format!("({})", s.canonical_string()))
        .collect();
    let mut freqs = Vec::new();
    let mut binary_total = 0.0;
    for key in &keys {
        let f = report
            .shapes
            .iter()
            .find(|row| row.key == *key && row.r == 1)
            .map_or(0.0, |row| row.frequency);
        freqs.push(f);
        binary_total += f;
    }
    let non_binary = 1.0 - binary_total;
    let uniform_ok = freqs.iter().all(|f| (f - 1.0 / 3.0).abs() <= 0.02);
    let non_binary_ok = non_binary < 0.05;
    let conditional: Vec<f64> = freqs.iter().map(|f| f / binary_total).collect();
    Ok(CriterionResult::new(
        3,
        "uniform binary shapes at fixed kappa",
        uniform_ok && non_binary_ok,
        format!(
            "shape freqs {:?} (target 1/3 +- 0.02), non-binary {:.4} (< 0.05); conditional-on-binary freqs {:?}",
            freqs.iter().map(|f| (f * 1e4).round() / 1e4).collect::<Vec<_>>(),
            non_binary,
            conditional.iter().map(|f| (f * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    ))
}

/// Criterion 4: rescaled distance to the root converges to the density
/// `x exp(-x^2/2)`.
pub fn criterion_4_distance_law() -> Result<CriterionResult> {
    let config = mc_config(10_000, KappaMode::Fixed { kappa: 1.0 }, 1, 10_000, 0x5EED_0004);
    let report = run_monte_carlo(&config)?;
    let distance = report.distance.expect("l=1 collects distances");
    let limit_mean = (std::f64::consts::PI / 2.0).sqrt();
    let mean_ok = (distance.mean_scaled - limit_mean).abs() < 0.05;
    Ok(CriterionResult::new(
        4,
        "rescaled distance law (KS)",
        distance.ks_distance_vs_limit < 0.03 && mean_ok,
        format!(
            "ks={:.4} (< 0.03), mean scaled distance {:.4} (limit {limit_mean:.4} +- 0.05)",
            distance.ks_distance_vs_limit, distance.mean_scaled,
        ),
    ))
}

/// Criterion 5: analytic identities of the limit tables.
pub fn criterion_5_normalization_identities() -> Result<CriterionResult> {
    let mut passed = true;
    let mut notes = Vec::new();

    let mut worst_s: f64 = 0.0;
    for &c in &[0.1, 0.5, 1.0, 2.0, 10.0] {
        for l in 1..=10u32 {
            let s = normalization_sum(l, c)?;
            worst_s = worst_s.max((s - 1.0).abs());
            if (s - 1.0).abs() > 1e-8 {
                passed = false;
                notes.push(format!("S_{l}({c}) = {s}"));
            }
        }
    }

    let mut worst_forms: f64 = 0.0;
    for &c in &[0.1, 1.0, 10.0] {
        for l in 1..=10u32 {
            for r in 1..=l {
                let a = bouquet_limit_probability(l, r, c)?;
                let b = bouquet_limit_probability_moment_form(l, r, c)?;
                worst_forms = worst_forms.max((a - b).abs());
                if (a - b).abs() > 1e-10 {
                    passed = false;
                    notes.push(format!("forms differ at l={l} r={r} c={c}"));
                }
            }
        }
    }

    let mut worst_rec: f64 = 0.0;
    for &c in &[0.1, 1.0, 10.0] {
        for n in 1..=20u32 {
            let lo = moment_integral_quadrature(n - 1, c);
            let mid = moment_integral_quadrature(n, c);
            let hi = moment_integral_quadrature(n + 1, c);
            let residual = (hi - (n as f64 * lo - c * mid)).abs() / hi.abs().max(1.0);
            worst_rec = worst_rec.max(residual);
            if residual > 1e-9 {
                passed = false;
                notes.push(format!("recursion residual {residual:.2e} at n={n} c={c}"));
            }
        }
    }

    let mut worst_bracket: f64 = 0.0;
    for &c in &[0.1, 1.0, 10.0] {
        for l in 2..=10u32 {
            for r in 1..=l - 1 {
                let lhs = (2 * l - r - 2) as f64 * bouquet_limit_probability(l, r, c)?
                    + bouquet_limit_probability(l, r + 1, c)?;
                let rhs = bouquet_limit_probability(l - 1, r, c)?;
                worst_bracket = worst_bracket.max((lhs - rhs).abs());
                if (lhs - rhs).abs() > 1e-10 {
                    passed = false;
                    notes.push(format!("bracket fails at l={l} r={r} c={c}"));
                }
            }
        }
    }

    let mut details = format!(
        "worst |S_l - 1| = {worst_s:.2e}, representation gap {worst_forms:.2e}, recursion residual {worst_rec:.2e}, bracket gap {worst_bracket:.2e}"
    );
    if !notes.is_empty() {
        details.push_str(&format!("; failures: {}", notes.join(", ")));
    }
    Ok(CriterionResult::new(
        5,
        "normalization and moment identities",
        passed,
        details,
    ))
}

/// Criterion 6: critical-regime block counts at desk scale.
pub fn criterion_6_critical_block_counts() -> Result<CriterionResult> {
    let mut passed = true;
    let mut notes = Vec::new();

    let config2 = mc_config(40_000, KappaMode::Critical { c: 1.0 }, 2, 10_000, 0x5EED_0006);
    let report2 = run_monte_carlo(&config2)?;
    let expected22 = bouquet_limit_probability(2, 2, 1.0)?;
    let freq22 = report2.block_count_frequency(2);
    if (freq22 - expected22).abs() > 0.02 {
        passed = false;
        notes.push(format!("l=2: P(r=2) = {freq22:.4} vs {expected22:.4}"));
    }

    let config3 = mc_config(40_000, KappaMode::Critical { c: 1.0 }, 3, 10_000, 0x5EED_0007);
    let report3 = run_monte_carlo(&config3)?;
    let tables = LimitTables::build(3, 1.0)?;
    let limit3 = tables.block_count_distribution(3);
    let mut freq3 = Vec::new();
    for r in 1..=3u32 {
        let f = report3.block_count_frequency(r);
        freq3.push(f);
        if (f - limit3[r as usize - 1]).abs() > 0.03 {
            passed = false;
            notes.push(format!(
                "l=3: P(r={r}) = {f:.4} vs {:.4}",
                limit3[r as usize - 1]
            ));
        }
    }

    let mut details = format!(
        "l=2: P(r=2)={freq22:.4} (limit {expected22:.4}); l=3 freqs {:?} (limits {:?})",
        freq3.iter().map(|f| (f * 1e4).round() / 1e4).collect::<Vec<_>>(),
        limit3.iter().map(|f| (f * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    if !notes.is_empty() {
        details.push_str(&format!("; failures: {}", notes.join(", ")));
    }
    Ok(CriterionResult::new(
        6,
        "critical-regime block-count law",
        passed,
        details,
    ))
}

/// Criterion 7: the finite-n error halves (within a band) when n
/// quadruples, matching the 1/sqrt(n) rate.
pub fn criterion_7_convergence_rate() -> Result<CriterionResult> {
    let limit = fixed_regime_density(&[1.0]);
    let err_small = (scaled_class_pmf(1, 1, &[1.0], 10_000, 1.0)? - limit).abs();
    let err_large = (scaled_class_pmf(1, 1, &[1.0], 40_000, 1.0)? - limit).abs();
    let ratio = err_large / err_small;
    Ok(CriterionResult::new(
        7,
        "1/sqrt(n) convergence rate",
        (0.35..=0.7).contains(&ratio),
        format!("errors {err_small:.5} -> {err_large:.5}, ratio {ratio:.3} (band [0.35, 0.7])"),
    ))
}

/// Criterion 8: the sequential construction reproduces the Gibbs law
/// exactly, and its transition probabilities are properly normalized.
pub fn criterion_8_gibbs_exactness() -> Result<CriterionResult> {
    let mut passed = true;
    let mut notes = Vec::new();
    let mut worst_config: f64 = 0.0;
    let mut worst_partition: f64 = 0.0;

    for &c in &[0.5, 1.0, 2.0] {
        let sampler = GibbsSampler::new(6, c)?;
        for l in 1..=5u32 {
            let law = sampler.law_by_enumeration(l)?;
            let mut by_partition: BTreeMap<String, (f64, usize, Vec<u32>)> = BTreeMap::new();
            for (config, mass) in &law {
                let expected = bouquet_limit_probability(l, config.component_count(), c)?;
                let err = (mass - expected).abs();
                worst_config = worst_config.max(err);
                if err > 1e-10 {
                    passed = false;
                    notes.push(format!(
                        "config {} at l={l} c={c}: mass err {err:.2e}",
                        config.canonical_string()
                    ));
                }
                let entry = by_partition
                    .entry(config.partition().canonical_string())
                    .or_insert((0.0, 0, config.partition().block_sizes()));
                entry.0 += mass;
                entry.1 += 1;
            }
            for (partition, (mass, _, sizes)) in &by_partition {
                let r = sizes.len() as u32;
                let mut expected = gibbs_coefficient(l, r, c)?;
                for &m in sizes {
                    expected *= block_weight_f64(m)?;
                }
                let err = (mass - expected).abs();
                worst_partition = worst_partition.max(err);
                if err > 1e-10 {
                    passed = false;
                    notes.push(format!(
                        "partition {partition} at l={l} c={c}: mass err {err:.2e}"
                    ));
                }
            }
        }

        // transition probabilities normalize for every reachable state size
        for l in 1..=10u32 {
            for r in 1..=l {
                let state = comb_state(l, r);
                let probs = GibbsSampler::new(11, c)?.insertion_probabilities(&state)?;
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    passed = false;
                    notes.push(format!("insertion sum {total} at l={l} r={r} c={c}"));
                }
            }
        }
    }

    let mut details = format!(
        "worst per-config error {worst_config:.2e}, worst per-partition error {worst_partition:.2e}"
    );
    if !notes.is_empty() {
        details.push_str(&format!("; failures: {}", notes.join(", ")));
    }
    Ok(CriterionResult::new(
        8,
        "sequential Gibbs construction is exact",
        passed,
        details,
    ))
}

fn comb_state(l: u32, r: u32) -> GibbsState {
    let mut shapes = Vec::new();
    for label in 1..r {
        shapes.push(BinaryShape::leaf(label));
    }
    let mut big = BinaryShape::leaf(r);
    for label in r + 1..=l {
        big = BinaryShape::node(big, BinaryShape::leaf(label));
    }
    shapes.push(big);
    GibbsState { shapes }
}

/// Criterion 9: the Poisson-Dirichlet mixture identity.
pub fn criterion_9_pd_mixture() -> Result<CriterionResult> {
    let mut worst: f64 = 0.0;
    let mut passed = true;
    let mut notes = Vec::new();
    for &beta in &[0.0, 1.0, 2.0] {
        for l in 1..=5u32 {
            for r in 1..=l {
                let check = poisson_dirichlet_mixture(l, r, beta)?;
                let diff = check.abs_diff();
                worst = worst.max(diff);
                if diff > 1e-6 {
                    passed = false;
                    notes.push(format!(
                        "l={l} r={r} beta={beta}: closed {:.9} vs integral {:.9}",
                        check.closed_form, check.integrated
                    ));
                }
            }
        }
    }
    let mut details = format!("worst closed-vs-integral gap {worst:.2e}");
    if !notes.is_empty() {
        details.push_str(&format!("; failures: {}", notes.join(", ")));
    }
    Ok(CriterionResult::new(
        9,
        "Poisson-Dirichlet mixture identity",
        passed,
        details,
    ))
}

/// Criterion 10: contour structure over mixed regimes: the Dyck path
/// round-trips the plane shape, and its excursions reproduce the
/// root-component partition.
pub fn criterion_10_contour_structure() -> Result<CriterionResult> {
    let scenarios: Vec<(u32, u32, KappaMode, u64)> = vec![
        (300, 4, KappaMode::Fixed { kappa: 1.0 }, 2_500),
        (300, 4, KappaMode::Critical { c: 1.0 }, 2_500),
        (50, 5, KappaMode::Fixed { kappa: 0.5 }, 2_500),
        (2_000, 2, KappaMode::Critical { c: 2.0 }, 2_500),
    ];
    let mut trees = 0u64;
    for (scenario_index, (n, l, mode, reps)) in scenarios.iter().enumerate() {
        let config = mc_config(*n, *mode, *l, *reps, 0x5EED_0010 + scenario_index as u64);
        let params = config.resolved_params()?;
        let mut sampler = WilsonSampler::new(params);
        for rep in 0..*reps {
            let mut rng = RngStream::new(config.seed, rep).rng();
            let tree = sampler.sample_reduced_subtree(&mut rng)?;
            let path = tree.contour()?;
            if !path.is_valid() {
                return Ok(CriterionResult::new(
                    10,
                    "contour and excursion structure",
                    false,
                    format!("invalid Dyck path in scenario {scenario_index} rep {rep}"),
                ));
            }
            let decoded = path.decode_plane_tree()?;
            let direct = crate::dyck::plane_shape(&tree.parent, *l)?;
            if decoded != direct {
                return Ok(CriterionResult::new(
                    10,
                    "contour and excursion structure",
                    false,
                    format!("round-trip mismatch in scenario {scenario_index} rep {rep}"),
                ));
            }
            let obs = tree.reduce()?;
            if path.excursion_count() as u32 != obs.component_count() {
                return Ok(CriterionResult::new(
                    10,
                    "contour and excursion structure",
                    false,
                    format!("excursion count mismatch in scenario {scenario_index} rep {rep}"),
                ));
            }
            if path.excursion_partition()? != obs.root_partition()? {
                return Ok(CriterionResult::new(
                    10,
                    "contour and excursion structure",
                    false,
                    format!("excursion partition mismatch in scenario {scenario_index} rep {rep}"),
                ));
            }
            trees += 1;
        }
    }
    Ok(CriterionResult::new(
        10,
        "contour and excursion structure",
        true,
        format!("{trees} trees round-tripped with matching excursion partitions"),
    ))
}

/// Criterion 11: trivial regimes away from the critical scale.
pub fn criterion_11_trivial_regimes() -> Result<CriterionResult> {
    let mut passed = true;
    let mut notes = Vec::new();

    let small = bouquet_limit_probability(2, 2, 0.01)?;
    if small >= 0.02 {
        passed = false;
        notes.push(format!("I(2,2)(0.01) = {small}"));
    }
    let large = bouquet_limit_probability(2, 2, 100.0)?;
    if large <= 0.98 {
        passed = false;
        notes.push(format!("I(2,2)(100) = {large}"));
    }

    // subcritical: kappa = 1 at n = 1e4 means c_n = 0.01
    let sub = mc_config(10_000, KappaMode::Fixed { kappa: 1.0 }, 2, 4_000, 0x5EED_0011);
    let sub_report = run_monte_carlo(&sub)?;
    let same_block = sub_report.block_count_frequency(1);
    if same_block <= 0.95 {
        passed = false;
        notes.push(format!("subcritical P(same block) = {same_block:.4}"));
    }

    // supercritical: kappa = 1e4 at n = 1e4 means c_n = 100
    let sup = mc_config(10_000, KappaMode::Fixed { kappa: 10_000.0 }, 2, 4_000, 0x5EED_0012);
    let sup_report = run_monte_carlo(&sup)?;
    let split = sup_report.block_count_frequency(2);
    if split <= 0.95 {
        passed = false;
        notes.push(format!("supercritical P(split) = {split:.4}"));
    }
    let dist = mc_config(10_000, KappaMode::Fixed { kappa: 10_000.0 }, 1, 4_000, 0x5EED_0013);
    let dist_report = run_monte_carlo(&dist)?;
    let mean_scaled = dist_report.distance.expect("l=1").mean_scaled;
    if mean_scaled >= 0.05 {
        passed = false;
        notes.push(format!("supercritical mean distance {mean_scaled:.4}"));
    }

    let mut details = format!(
        "I(2,2)(0.01)={small:.4}, I(2,2)(100)={large:.4}, P(same|c=0.01)={same_block:.4}, P(split|c=100)={split:.4}, scaled distance {mean_scaled:.4}"
    );
    if !notes.is_empty() {
        details.push_str(&format!("; failures: {}", notes.join(", ")));
    }
    Ok(CriterionResult::new(
        11,
        "trivial regimes away from critical",
        passed,
        details,
    ))
}

/// Runs every acceptance criterion in order.
pub fn run_all() -> Result<Vec<CriterionResult>> {
    Ok(vec![
        criterion_1_exact_oracle()?,
        criterion_2_sampler_vs_oracle()?,
        criterion_3_uniform_shapes()?,
        criterion_4_distance_law()?,
        criterion_5_normalization_identities()?,
        criterion_6_critical_block_counts()?,
        criterion_7_convergence_rate()?,
        criterion_8_gibbs_exactness()?,
        criterion_9_pd_mixture()?,
        criterion_10_contour_structure()?,
        criterion_11_trivial_regimes()?,
    ])
}
