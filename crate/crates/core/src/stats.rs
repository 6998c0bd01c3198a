//! Goodness-of-fit statistics for comparing empirical counts against
//! reference distributions: Pearson chi-square with deterministic cell
//! pooling, Kolmogorov-Smirnov distance against a CDF, and total
//! variation distance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma_q;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of low-expectation cells merged into the pooled cell.
    pub pooled_cells: usize,
}

/// Default minimal expected count per chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Pearson chi-square of `empirical` counts against `theoretical`
/// probabilities.
///
/// Cells with expected count below `min_expected` are pooled into one
/// "other" cell, which also absorbs any theoretical mass missing from
/// the map (the probabilities may sum to less than one) and any observed
/// key without a theoretical entry. The p-value is the upper tail of the
/// chi-square distribution with `cells - 1` degrees of freedom.
pub fn chi_square_goodness(
    empirical: &BTreeMap<String, u64>,
    theoretical: &BTreeMap<String, f64>,
    min_expected: f64,
) -> Result<ChiSquareResult> {
    let n: u64 = empirical.values().sum();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let total_p: f64 = theoretical.values().sum();
    if total_p > 1.0 + 1e-9 {
        return Err(Error::invalid(format!(
            "theoretical probabilities sum to {total_p} > 1"
        )));
    }

    let nf = n as f64;
    let mut statistic = 0.0;
    let mut cells = 0usize;
    let mut pooled_cells = 0usize;
    let mut other_expected = (1.0 - total_p).max(0.0) * nf;
    let mut other_count: u64 = 0;

    for (key, &p) in theoretical {
        let expected = p * nf;
        let count = empirical.get(key).copied().unwrap_or(0);
        if expected >= min_expected {
            let diff = count as f64 - expected;
            statistic += diff * diff / expected;
            cells += 1;
        } else {
            other_expected += expected;
            other_count += count;
            pooled_cells += 1;
        }
    }
    for (key, &count) in empirical {
        if !theoretical.contains_key(key) {
            other_count += count;
        }
    }

    if other_expected > 0.0 {
        let diff = other_count as f64 - other_expected;
        statistic += diff * diff / other_expected;
        cells += 1;
    } else if other_count > 0 {
        // observed mass on events the reference declares impossible
        return Ok(ChiSquareResult {
            statistic: f64::INFINITY,
            dof: cells.max(1) - 1,
            p_value: 0.0,
            pooled_cells,
        });
    }

    let dof = cells.saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        gamma_q(dof as f64 / 2.0, statistic / 2.0)
    };
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value,
        pooled_cells,
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples`
/// and the distribution function `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((f - i as f64 / n).abs());
        sup = sup.max((f - (i + 1) as f64 / n).abs());
    }
    Ok(sup)
}

/// Total variation distance between empirical frequencies and a
/// reference probability map; reference mass missing from the map is
/// treated as an extra unobservable cell.
pub fn total_variation(empirical: &BTreeMap<String, u64>, theoretical: &BTreeMap<String, f64>) -> f64 {
    let n: u64 = empirical.values().sum();
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let mut distance = 0.0;
    for (key, &p) in theoretical {
        let freq = empirical.get(key).copied().unwrap_or(0) as f64 / nf;
        distance += (freq - p).abs();
    }
    let mut unmatched = 0.0;
    for (key, &count) in empirical {
        if !theoretical.contains_key(key) {
            unmatched += count as f64 / nf;
        }
    }
    let missing_mass = (1.0 - theoretical.values().sum::<f64>()).max(0.0);
    distance += (unmatched - missing_mass).abs();
    distance / 2.0
}

/// Chi-square and total-variation comparison in one call.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStats {
    pub chi_square: ChiSquareResult,
    pub total_variation: f64,
}

pub fn compare_distributions(
    empirical: &BTreeMap<String, u64>,
    theoretical: &BTreeMap<String, f64>,
) -> Result<ComparisonStats> {
    Ok(ComparisonStats {
        chi_square: chi_square_goodness(empirical, theoretical, MIN_EXPECTED)?,
        total_variation: total_variation(empirical, theoretical),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::RngStream;
    use rand::Rng;

    fn counts(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn probs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn exact_match_gives_p_one() {
        let empirical = counts(&[("a", 500), ("b", 300), ("c", 200)]);
        let theoretical = probs(&[("a", 0.5), ("b", 0.3), ("c", 0.2)]);
        let result = chi_square_goodness(&empirical, &theoretical, 5.0).unwrap();
        assert!(result.statistic.abs() < 1e-12);
        assert_eq!(result.dof, 2);
        assert!((result.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_three_way_split() {
        let empirical = counts(&[("x", 3333), ("y", 3333), ("z", 3333)]);
        let theoretical = probs(&[("x", 1.0 / 3.0), ("y", 1.0 / 3.0), ("z", 1.0 / 3.0)]);
        let result = chi_square_goodness(&empirical, &theoretical, 5.0).unwrap();
        assert!(result.statistic < 1e-6);
        assert!(result.p_value > 0.999999);
    }

    #[test]
    fn pooling_small_cells() {
        let empirical = counts(&[("a", 96), ("b", 2), ("c", 2)]);
        let theoretical = probs(&[("a", 0.96), ("b", 0.02), ("c", 0.02)]);
        let result = chi_square_goodness(&empirical, &theoretical, 5.0).unwrap();
        // b and c pooled together with zero missing mass: 2 cells
        assert_eq!(result.pooled_cells, 2);
        assert_eq!(result.dof, 1);
        assert!(result.statistic < 1e-12);
    }

    #[test]
    fn impossible_observation_gives_p_zero() {
        let empirical = counts(&[("a", 99), ("zz", 1)]);
        let theoretical = probs(&[("a", 1.0)]);
        let result = chi_square_goodness(&empirical, &theoretical, 5.0).unwrap();
        assert_eq!(result.p_value, 0.0);
    }

    #[test]
    fn empty_sample_rejected() {
        let empirical = BTreeMap::new();
        let theoretical = probs(&[("a", 1.0)]);
        assert!(chi_square_goodness(&empirical, &theoretical, 5.0).is_err());
    }

    #[test]
    fn chi_square_p_value_against_known_quantile() {
        // P(chi2_1 > 3.841459) = 0.05
        let p = gamma_q(0.5, 3.841_458_820_694_124 / 2.0);
        assert!((p - 0.05).abs() < 1e-9);
        // P(chi2_10 > 18.307038) = 0.05
        let p10 = gamma_q(5.0, 18.307_038_053_275_146 / 2.0);
        assert!((p10 - 0.05).abs() < 1e-9);
    }

    #[test]
    fn ks_distance_basics() {
        // empirical law of {0.25, 0.75} against Uniform(0,1)
        let d = ks_distance(&[0.25, 0.75], |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.25).abs() < 1e-12);
        assert!(ks_distance(&[], |x| x).is_err());
    }

    #[test]
    fn ks_self_test_stays_under_critical_value() {
        // samples drawn from F tested against F: the 1% critical value
        // 1.63/sqrt(n) should be exceeded in about 1% of repetitions
        let n = 1000usize;
        let repetitions = 300usize;
        let critical = 1.63 / (n as f64).sqrt();
        let mut passes = 0;
        for rep in 0..repetitions {
            let mut rng = RngStream::new(31_415, rep as u64).rng();
            let samples: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
            if d < critical {
                passes += 1;
            }
        }
        let rate = passes as f64 / repetitions as f64;
        assert!(rate >= 0.97, "pass rate {rate} too low");
    }

    #[test]
    fn total_variation_values() {
        let empirical = counts(&[("a", 50), ("b", 50)]);
        let same = probs(&[("a", 0.5), ("b", 0.5)]);
        assert!(total_variation(&empirical, &same) < 1e-12);
        let shifted = probs(&[("a", 0.7), ("b", 0.3)]);
        assert!((total_variation(&empirical, &shifted) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn compare_distributions_bundles_both() {
        let empirical = counts(&[("a", 5000), ("b", 5000)]);
        let theoretical = probs(&[("a", 0.5), ("b", 0.5)]);
        let stats = compare_distributions(&empirical, &theoretical).unwrap();
        assert!(stats.chi_square.p_value > 0.99);
        assert!(stats.total_variation < 1e-9);
    }
}
