//! Limiting quantities for the critical regime `kappa = c sqrt(n)` and
//! the fixed-kappa regime: moment integrals, limiting bouquet
//! probabilities, densities, tails, and finite-n convergence diagnostics.

use crate::combinatorics::count_bouquets;
use crate::error::{Error, Result};
use crate::exact::log_class_probability;
use crate::special::{erfcx, integrate};

/// Integration window for `sigma^n exp(-sigma^2/2 - c sigma)`: beyond it
/// the integrand is below 1e-16 of its peak.
fn sigma_max(n: u32) -> f64 {
    (10.0f64).max((2.0 * n as f64).sqrt()) + 6.0
}

/// Direct quadrature of the moment integral
/// `int_0^inf sigma^n exp(-sigma^2/2 - c sigma) d sigma`, `c >= 0`.
pub fn moment_integral_quadrature(n: u32, c: f64) -> f64 {
    let nf = n as f64;
    integrate(
        move |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            (nf * s.ln() - 0.5 * s * s - c * s).exp()
        },
        0.0,
        sigma_max(n),
        1e-300,
        1e-13,
    )
}

const MOMENT_VALIDATION_REL_TOL: f64 = 1e-11;

/// Moment integrals `0..=n_max` for one `c`.
///
/// The zeroth value has the closed form `sqrt(pi/2) erfcx(c/sqrt2)`, the
/// first is `1 - c A_0`, and the rest follow the integration-by-parts
/// recursion `A_{k+1} = k A_{k-1} - c A_k`. The recursion amplifies
/// rounding for large `c`, so the top entry is checked against direct
/// quadrature; on disagreement every entry is recomputed by quadrature.
pub fn moment_table(n_max: u32, c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid("c must be positive and finite"));
    }
    let mut table = Vec::with_capacity(n_max as usize + 1);
    table.push((std::f64::consts::PI / 2.0).sqrt() * erfcx(c / std::f64::consts::SQRT_2));
    if n_max >= 1 {
        table.push(1.0 - c * table[0]);
    }
    for k in 1..n_max as usize {
        let next = k as f64 * table[k - 1] - c * table[k];
        table.push(next);
    }
    // The recursion's rounding amplification is worst at the top entry,
    // and downstream uses rescale the values by up to c^(r-1)/m!, so the
    // check must be relative.
    let reference = moment_integral_quadrature(n_max, c);
    let tolerance = MOMENT_VALIDATION_REL_TOL * reference.abs().max(f64::MIN_POSITIVE);
    if (table[n_max as usize] - reference).abs() > tolerance {
        for (k, slot) in table.iter_mut().enumerate() {
            *slot = moment_integral_quadrature(k as u32, c);
        }
    }
    Ok(table)
}

/// `int_0^inf sigma^n exp(-sigma^2/2 - c sigma) d sigma` for `c > 0`.
pub fn moment_integral(n: u32, c: f64) -> Result<f64> {
    Ok(moment_table(n, c)?[n as usize])
}

fn factorial(k: u32) -> f64 {
    let mut acc = 1.0f64;
    for i in 2..=k as u64 {
        acc *= i as f64;
    }
    acc
}

fn check_block_range(l: u32, r: u32) -> Result<()> {
    if l < 1 || r < 1 || r > l {
        return Err(Error::invalid(format!(
            "need 1 <= r <= l, got l={l}, r={r}"
        )));
    }
    Ok(())
}

/// Limiting probability that the reduced subtree equals one fixed
/// bouquet configuration with `r` components:
/// `c^(r-1) / (2l-r-2)! * A_{2l-r-2}(c)` for `l >= 2`, and 1 for
/// `l = r = 1`.
pub fn bouquet_limit_probability(l: u32, r: u32, c: f64) -> Result<f64> {
    check_block_range(l, r)?;
    if l == 1 {
        return Ok(1.0);
    }
    let m = 2 * l - r - 2;
    Ok(c.powi(r as i32 - 1) / factorial(m) * moment_integral(m, c)?)
}

/// Same quantity through the unsimplified representation
/// `c^(r-1) / (2l-r-1)! * (A_{2l-r}(c) + c A_{2l-r-1}(c))`; exposed for
/// consistency testing against [`bouquet_limit_probability`].
pub fn bouquet_limit_probability_moment_form(l: u32, r: u32, c: f64) -> Result<f64> {
    check_block_range(l, r)?;
    let k = 2 * l - r;
    let table = moment_table(k, c)?;
    Ok(c.powi(r as i32 - 1) / factorial(k - 1) * (table[k as usize] + c * table[k as usize - 1]))
}

/// `S_l(c) = sum_r C(l,r) I(l,r)(c)`; equals one in exact arithmetic.
pub fn normalization_sum(l: u32, c: f64) -> Result<f64> {
    let mut total = 0.0;
    for r in 1..=l {
        total += u128_to_f64(count_bouquets(l, r)?) * bouquet_limit_probability(l, r, c)?;
    }
    Ok(total)
}

/// Limit law of the block count: `P(|partition| = r) -> C(l,r) I(l,r)(c)`.
pub fn block_count_distribution(l: u32, c: f64) -> Result<Vec<f64>> {
    (1..=l)
        .map(|r| Ok(u128_to_f64(count_bouquets(l, r)?) * bouquet_limit_probability(l, r, c)?))
        .collect()
}

fn u128_to_f64(x: u128) -> f64 {
    x as f64
}

/// Fixed-kappa limit density of the rescaled extension vector:
/// `sigma exp(-sigma^2/2)` with `sigma` the coordinate sum.
pub fn fixed_regime_density(t: &[f64]) -> f64 {
    let sigma: f64 = t.iter().sum();
    sigma * (-sigma * sigma / 2.0).exp()
}

/// Critical-regime limit density for a configuration with `r`
/// components: `c^(r-1) (sigma + c) exp(-sigma^2/2 - c sigma)`.
pub fn critical_regime_density(t: &[f64], r: u32, c: f64) -> Result<f64> {
    if r < 1 {
        return Err(Error::invalid("r must be >= 1"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid("c must be positive"));
    }
    let sigma: f64 = t.iter().sum();
    Ok(c.powi(r as i32 - 1) * (sigma + c) * (-sigma * sigma / 2.0 - c * sigma).exp())
}

/// Limiting tail of the rescaled distance to the root:
/// `P(U_n / sqrt(n) >= t) -> exp(-t^2/2 - c t)`.
pub fn distance_tail(t: f64, c: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::invalid("t must be nonnegative"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid("c must be positive"));
    }
    Ok((-t * t / 2.0 - c * t).exp())
}

/// Finite-n pmf of a bouquet class, rescaled for comparison against the
/// limit densities: `n^(k/2) P(class, u = floor(t sqrt n))` with
/// `k = 2l - r` the extension length. The class probability depends on
/// the configuration only through `(l, r)`, so no shape argument is
/// needed.
pub fn scaled_class_pmf(l: u32, r: u32, t: &[f64], n: u32, kappa: f64) -> Result<f64> {
    check_block_range(l, r)?;
    if n < 1 || l > n {
        return Err(Error::invalid("need 1 <= l <= n"));
    }
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa must be positive"));
    }
    let k = (2 * l - r) as usize;
    if t.len() != k {
        return Err(Error::invalid(format!(
            "extension tuple must have length 2l - r = {k}, got {}",
            t.len()
        )));
    }
    if t.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid("t must be componentwise nonnegative"));
    }
    let sqrt_n = (n as f64).sqrt();
    let suppressed: u64 = t.iter().map(|&x| (x * sqrt_n).floor() as u64).sum();
    let inner = suppressed + (l - r) as u64;
    if inner > (n - l) as u64 {
        return Ok(0.0);
    }
    let d = l as u64 + inner;
    let log_p = log_class_probability(n, kappa, l, r, d);
    Ok((n as f64).powf(k as f64 / 2.0) * log_p.exp())
}

/// Cached limit quantities for all `1 <= r <= l <= l_max` at one `c`.
#[derive(Clone, Debug)]
pub struct LimitTables {
    pub c: f64,
    pub l_max: u32,
    moments: Vec<f64>,
    bouquet_probs: Vec<Vec<f64>>, // [l][r], 1-based with zero padding
    counts: Vec<Vec<u128>>,
}

impl LimitTables {
    pub fn build(l_max: u32, c: f64) -> Result<Self> {
        if l_max < 1 {
            return Err(Error::invalid("l_max must be >= 1"));
        }
        let moments = moment_table(2 * l_max, c)?;
        let mut bouquet_probs = vec![Vec::new()];
        let mut counts = vec![Vec::new()];
        for l in 1..=l_max {
            let mut row_p = vec![0.0; l as usize + 1];
            let mut row_c = vec![0u128; l as usize + 1];
            for r in 1..=l {
                row_p[r as usize] = if l == 1 {
                    1.0
                } else {
                    let m = (2 * l - r - 2) as usize;
                    c.powi(r as i32 - 1) / factorial(m as u32) * moments[m]
                };
                row_c[r as usize] = count_bouquets(l, r)?;
            }
            bouquet_probs.push(row_p);
            counts.push(row_c);
        }
        Ok(LimitTables {
            c,
            l_max,
            moments,
            bouquet_probs,
            counts,
        })
    }

    pub fn moment(&self, n: u32) -> f64 {
        self.moments[n as usize]
    }

    /// `I(l, r)(c)`.
    pub fn bouquet_probability(&self, l: u32, r: u32) -> f64 {
        self.bouquet_probs[l as usize][r as usize]
    }

    pub fn bouquet_count(&self, l: u32, r: u32) -> u128 {
        self.counts[l as usize][r as usize]
    }

    /// Block-count limit law for marked-set size `l`.
    pub fn block_count_distribution(&self, l: u32) -> Vec<f64> {
        (1..=l)
            .map(|r| u128_to_f64(self.bouquet_count(l, r)) * self.bouquet_probability(l, r))
            .collect()
    }

    pub fn normalization_sum(&self, l: u32) -> f64 {
        self.block_count_distribution(l).iter().sum()
    }

    /// Verifies the bracket recursion and normalization at table
    /// precision.
    pub fn consistency_check(&self) -> Result<()> {
        for l in 2..=self.l_max {
            for r in 1..=l - 1 {
                let lhs = (2 * l - r - 2) as f64 * self.bouquet_probability(l, r)
                    + self.bouquet_probability(l, r + 1);
                let rhs = self.bouquet_probability(l - 1, r);
                if (lhs - rhs).abs() > 1e-10 {
                    return Err(Error::invalid(format!(
                        "bracket identity fails at l={l}, r={r}: {lhs} vs {rhs}"
                    )));
                }
            }
        }
        for l in 1..=self.l_max {
            let s = self.normalization_sum(l);
            if (s - 1.0).abs() > 1e-8 {
                return Err(Error::invalid(format!(
                    "normalization fails at l={l}: S = {s}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::count_binary_shapes;

    const C_GRID: [f64; 3] = [0.1, 1.0, 10.0];

    #[test]
    fn first_moment_identity() {
        // integral of (sigma + c) exp(-sigma^2/2 - c sigma) is exactly 1
        for &c in &[0.05, 0.5, 1.0, 3.0, 20.0, 100.0] {
            let t = moment_table(1, c).unwrap();
            assert!(
                (t[1] + c * t[0] - 1.0).abs() < 1e-12,
                "c={c}: A1 + c A0 = {}",
                t[1] + c * t[0]
            );
        }
    }

    #[test]
    fn zeroth_moment_at_one() {
        let a0 = moment_integral(0, 1.0).unwrap();
        assert!((a0 - 0.65568).abs() < 1e-5);
        let a2 = moment_integral(2, 1.0).unwrap();
        assert!((a2 - 0.31136).abs() < 1e-4);
        assert!((a2 - (a0 - (1.0 - a0))).abs() < 1e-12);
    }

    #[test]
    fn closed_form_zeroth_moment_matches_quadrature() {
        for &c in &[0.1, 0.5, 1.0, 2.0, 10.0, 100.0] {
            let closed =
                (std::f64::consts::PI / 2.0).sqrt() * erfcx(c / std::f64::consts::SQRT_2);
            let quad = moment_integral_quadrature(0, c);
            assert!(
                (closed - quad).abs() <= 1e-12 * quad.max(1.0),
                "c={c}: {closed} vs {quad}"
            );
        }
    }

    #[test]
    fn recursion_consistent_with_quadrature() {
        for &c in &C_GRID {
            for n in 1..=20u32 {
                let lo = moment_integral_quadrature(n - 1, c);
                let mid = moment_integral_quadrature(n, c);
                let hi = moment_integral_quadrature(n + 1, c);
                let residual = (hi - (n as f64 * lo - c * mid)).abs();
                assert!(
                    residual <= 1e-9 * hi.abs().max(1.0),
                    "c={c} n={n}: residual {residual}"
                );
            }
        }
    }

    #[test]
    fn table_matches_quadrature_everywhere() {
        for &c in &C_GRID {
            let table = moment_table(20, c).unwrap();
            for (n, &value) in table.iter().enumerate() {
                let quad = moment_integral_quadrature(n as u32, c);
                assert!(
                    (value - quad).abs() <= 1e-9 * quad.abs().max(1.0),
                    "c={c} n={n}: table {value} vs quadrature {quad}"
                );
            }
        }
    }

    #[test]
    fn bouquet_probability_base_cases() {
        for &c in &[0.2, 1.0, 5.0] {
            assert_eq!(bouquet_limit_probability(1, 1, c).unwrap(), 1.0);
        }
        let i22 = bouquet_limit_probability(2, 2, 1.0).unwrap();
        let i21 = bouquet_limit_probability(2, 1, 1.0).unwrap();
        assert!((i22 - 0.6557).abs() < 2e-4);
        assert!((i21 + i22 - 1.0).abs() < 1e-10);
        assert!(bouquet_limit_probability(2, 3, 1.0).is_err());
        assert!(bouquet_limit_probability(0, 1, 1.0).is_err());
    }

    #[test]
    fn representations_agree() {
        for &c in &C_GRID {
            for l in 1..=10u32 {
                for r in 1..=l {
                    let simplified = bouquet_limit_probability(l, r, c).unwrap();
                    let moment_form = bouquet_limit_probability_moment_form(l, r, c).unwrap();
                    assert!(
                        (simplified - moment_form).abs() <= 1e-10,
                        "l={l} r={r} c={c}: {simplified} vs {moment_form}"
                    );
                }
            }
        }
    }

    #[test]
    fn normalization_holds() {
        assert_eq!(normalization_sum(1, 3.0).unwrap(), 1.0);
        for &c in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            for l in 1..=10u32 {
                let s = normalization_sum(l, c).unwrap();
                assert!((s - 1.0).abs() < 1e-8, "l={l} c={c}: S={s}");
            }
        }
    }

    #[test]
    fn normalizing_integral_of_fixed_density() {
        // integral over the positive orthant reduces to a single moment:
        // A_{2l-1}(0) / (2l-2)! = 1 / c_l
        for l in 1..=6u32 {
            let reduced = moment_integral_quadrature(2 * l - 1, 0.0) / factorial(2 * l - 2);
            let expected = 1.0 / u128_to_f64(count_binary_shapes(l).unwrap());
            assert!(
                (reduced - expected).abs() <= 1e-10 * expected,
                "l={l}: {reduced} vs {expected}"
            );
        }
        // one-dimensional case integrates to one
        let total = moment_integral_quadrature(1, 0.0);
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn densities_pointwise() {
        assert_eq!(fixed_regime_density(&[0.0, 0.0, 0.0]), 0.0);
        let c = 2.0;
        let v = critical_regime_density(&[0.0], 1, c).unwrap();
        assert!((v - c).abs() < 1e-15);
        // c -> 0 recovers the fixed-regime density pointwise
        let t = [0.4, 0.1, 0.8];
        let nearly = critical_regime_density(&t, 1, 1e-12).unwrap();
        assert!((nearly - fixed_regime_density(&t)).abs() < 1e-9);
    }

    #[test]
    fn critical_density_integrates_to_bouquet_probability() {
        // simplex reduction: int over R_+^k of the density equals I(l,r)
        for &(l, r) in &[(2u32, 1u32), (2, 2), (3, 2)] {
            for &c in &[0.5, 1.0, 2.0] {
                let k = 2 * l - r;
                let integral = integrate(
                    |s: f64| {
                        critical_regime_density(&[s], r, c).unwrap()
                            * s.powi(k as i32 - 1)
                            / factorial(k - 1)
                    },
                    0.0,
                    sigma_max(k),
                    1e-300,
                    1e-12,
                );
                let expected = bouquet_limit_probability(l, r, c).unwrap();
                assert!(
                    (integral - expected).abs() <= 1e-9,
                    "l={l} r={r} c={c}: {integral} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn distance_tail_is_exact_tail_integral() {
        for &c in &[0.5, 1.0, 3.0] {
            for &t in &[0.0, 0.5, 1.0, 2.0] {
                let tail = distance_tail(t, c).unwrap();
                let quad = integrate(
                    |s: f64| critical_regime_density(&[s], 1, c).unwrap(),
                    t,
                    sigma_max(1) + t,
                    1e-300,
                    1e-13,
                );
                assert!((tail - quad).abs() < 1e-10, "c={c} t={t}");
            }
        }
        assert_eq!(distance_tail(0.0, 1.0).unwrap(), 1.0);
        let v = distance_tail(1.0, 1.0).unwrap();
        assert!((v - (-1.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.22313).abs() < 1e-5);
    }

    #[test]
    fn block_count_distribution_values() {
        let d = block_count_distribution(2, 1.0).unwrap();
        assert!((d[0] - 0.3443).abs() < 2e-4);
        assert!((d[1] - 0.6557).abs() < 2e-4);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert_eq!(block_count_distribution(1, 1.0).unwrap(), vec![1.0]);
        // small-c bound: I(2,2)(c) <= c sqrt(pi/2)
        let small = bouquet_limit_probability(2, 2, 0.01).unwrap();
        assert!(small < 0.02);
        assert!(small <= 0.01 * (std::f64::consts::PI / 2.0).sqrt() + 1e-12);
    }

    #[test]
    fn scaled_pmf_near_limit() {
        // fixed regime: t = 1, kappa = 1
        let v = scaled_class_pmf(1, 1, &[1.0], 10_000, 1.0).unwrap();
        let limit = fixed_regime_density(&[1.0]);
        assert!((v - limit).abs() < 0.02, "v={v} limit={limit}");
        // critical corner t = 0: exact finite-n value converges to c
        let n = 10_000u32;
        let c = 1.0;
        let v0 = scaled_class_pmf(1, 1, &[0.0], n, c * (n as f64).sqrt()).unwrap();
        let limit0 = critical_regime_density(&[0.0], 1, c).unwrap();
        assert!((v0 - limit0).abs() < 0.02, "v0={v0} limit0={limit0}");
    }

    #[test]
    fn scaled_pmf_halves_error_when_n_quadruples() {
        let limit = fixed_regime_density(&[1.0]);
        let err1 = (scaled_class_pmf(1, 1, &[1.0], 10_000, 1.0).unwrap() - limit).abs();
        let err2 = (scaled_class_pmf(1, 1, &[1.0], 40_000, 1.0).unwrap() - limit).abs();
        let ratio = err2 / err1;
        assert!(
            (0.35..=0.7).contains(&ratio),
            "rate ratio {ratio} outside [0.35, 0.7] (errors {err1}, {err2})"
        );
    }

    #[test]
    fn tables_are_consistent() {
        for &c in &[0.1, 1.0, 10.0] {
            let tables = LimitTables::build(10, c).unwrap();
            tables.consistency_check().unwrap();
            assert_eq!(tables.bouquet_count(3, 1), 3);
            assert!((tables.normalization_sum(7) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn bracket_identity_direct() {
        for &c in &C_GRID {
            for l in 2..=10u32 {
                for r in 1..=l - 1 {
                    let lhs = (2 * l - r - 2) as f64
                        * bouquet_limit_probability(l, r, c).unwrap()
                        + bouquet_limit_probability(l, r + 1, c).unwrap();
                    let rhs = bouquet_limit_probability(l - 1, r, c).unwrap();
                    assert!(
                        (lhs - rhs).abs() <= 1e-10,
                        "l={l} r={r} c={c}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn trivial_regime_bounds() {
        assert!(bouquet_limit_probability(2, 2, 0.01).unwrap() < 0.02);
        assert!(bouquet_limit_probability(2, 2, 100.0).unwrap() > 0.98);
        // large-c bound via I(2,1)(c) <= 1/c^2
        let i21 = bouquet_limit_probability(2, 1, 100.0).unwrap();
        assert!(i21 <= 1.0 / (100.0f64 * 100.0) + 1e-12);
    }
}
