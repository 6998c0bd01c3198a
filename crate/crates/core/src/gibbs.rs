//! The limiting partition of the marked set in the critical regime, as a
//! Gibbs partition of type 1/2: exchangeable partition probabilities,
//! the sequential tree-restaurant sampler that realizes them, and the
//! Poisson-Dirichlet mixture identity.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::Rng;

use crate::combinatorics::{BinaryShape, BouquetConfig, PartitionOfL};
use crate::error::{Error, Result};
use crate::limits::{bouquet_limit_probability, moment_integral_quadrature, LimitTables};
use crate::special::{integrate, ln_gamma};

/// Exact block weight `(2m-3)!! / 2^(m-1)`, the rising factorial
/// `(1/2)_(m-1)`.
pub fn block_weight(m: u32) -> Result<Ratio<u128>> {
    if m == 0 {
        return Err(Error::invalid("block size must be >= 1"));
    }
    let mut numerator: u128 = 1;
    for i in 1..m as u128 {
        numerator = numerator
            .checked_mul(2 * i - 1)
            .ok_or_else(|| Error::CountOverflow(format!("block weight for m={m}")))?;
    }
    let denominator = 1u128
        .checked_shl(m - 1)
        .ok_or_else(|| Error::CountOverflow(format!("block weight for m={m}")))?;
    Ok(Ratio::new(numerator, denominator))
}

pub fn block_weight_f64(m: u32) -> Result<f64> {
    let w = block_weight(m)?;
    Ok(*w.numer() as f64 / *w.denom() as f64)
}

/// Gibbs coefficient `V(l,r)(c) = 2^(l-r) I(l,r)(c)`.
pub fn gibbs_coefficient(l: u32, r: u32, c: f64) -> Result<f64> {
    Ok(2f64.powi((l - r) as i32) * bouquet_limit_probability(l, r, c)?)
}

/// Exchangeable partition probability: `V(l,r) prod w_{n_i}` for block
/// sizes `n_1..n_r`; symmetric in its arguments.
pub fn eppf(sizes: &[u32], c: f64) -> Result<f64> {
    if sizes.is_empty() {
        return Err(Error::invalid("at least one block required"));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::invalid("block sizes must be positive"));
    }
    let l: u32 = sizes.iter().sum();
    let r = sizes.len() as u32;
    let mut value = gibbs_coefficient(l, r, c)?;
    for &m in sizes {
        value *= block_weight_f64(m)?;
    }
    Ok(value)
}

/// Blocks of the growing partition, each carrying its binary shape.
/// Blocks are in arrival order; exchangeability of the final law is a
/// tested property, not an assumption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GibbsState {
    pub shapes: Vec<BinaryShape>,
}

impl GibbsState {
    pub fn single(label: u32) -> Self {
        GibbsState {
            shapes: vec![BinaryShape::leaf(label)],
        }
    }

    pub fn label_count(&self) -> u32 {
        self.shapes.iter().map(|s| s.leaf_count()).sum()
    }

    pub fn block_count(&self) -> u32 {
        self.shapes.len() as u32
    }
}

/// Sequential sampler with cached coefficient tables for one `c`.
pub struct GibbsSampler {
    c: f64,
    tables: LimitTables,
}

impl GibbsSampler {
    /// Prepares tables for sampling partitions of up to `l_max` labels.
    pub fn new(l_max: u32, c: f64) -> Result<Self> {
        Ok(GibbsSampler {
            c,
            tables: LimitTables::build(l_max + 1, c)?,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    fn coefficient(&self, l: u32, r: u32) -> f64 {
        2f64.powi((l - r) as i32) * self.tables.bouquet_probability(l, r)
    }

    /// Probabilities for inserting the next label: one entry per existing
    /// block (probability `(n_i - 1/2) V(l+1,r) / V(l,r)`), then the
    /// new-block probability `V(l+1,r+1) / V(l,r)`.
    pub fn insertion_probabilities(&self, state: &GibbsState) -> Result<Vec<f64>> {
        let l = state.label_count();
        let r = state.block_count();
        if l == 0 {
            return Err(Error::invalid("state must contain at least one label"));
        }
        if l + 1 > self.tables.l_max {
            return Err(Error::invalid(format!(
                "sampler prepared for at most {} labels",
                self.tables.l_max - 1
            )));
        }
        let denom = self.coefficient(l, r);
        let grow = self.coefficient(l + 1, r) / denom;
        let mut probs: Vec<f64> = state
            .shapes
            .iter()
            .map(|s| (s.leaf_count() as f64 - 0.5) * grow)
            .collect();
        probs.push(self.coefficient(l + 1, r + 1) / denom);
        Ok(probs)
    }

    /// Draws a partition of `{1..l}` with per-block binary shapes by
    /// inserting labels one at a time; a label joining a block grafts
    /// uniformly at one of the `2 n_i - 1` sites of the block's shape.
    pub fn sample<R: Rng>(&self, l: u32, rng: &mut R) -> Result<(PartitionOfL, Vec<BinaryShape>)> {
        if l < 1 {
            return Err(Error::invalid("l must be >= 1"));
        }
        let mut state = GibbsState::single(1);
        for label in 2..=l {
            let probs = self.insertion_probabilities(&state)?;
            let mut draw = rng.random::<f64>();
            let mut choice = probs.len() - 1;
            for (i, &p) in probs.iter().enumerate() {
                if draw < p {
                    choice = i;
                    break;
                }
                draw -= p;
            }
            if choice == state.shapes.len() {
                state.shapes.push(BinaryShape::leaf(label));
            } else {
                let shape = &state.shapes[choice];
                let site = rng.random_range(0..shape.graft_site_count());
                state.shapes[choice] = shape.graft_at(site, label)?;
            }
        }
        finalize_state(state)
    }

    /// Exact output law of [`sample`] for small `l`, by enumerating every
    /// insertion history. Returns each reachable bouquet configuration
    /// with its probability.
    ///
    /// [`sample`]: GibbsSampler::sample
    pub fn law_by_enumeration(&self, l: u32) -> Result<Vec<(BouquetConfig, f64)>> {
        if l < 1 {
            return Err(Error::invalid("l must be >= 1"));
        }
        if l > 7 {
            return Err(Error::invalid("history enumeration supports l <= 7"));
        }
        let mut by_key: BTreeMap<String, (BouquetConfig, f64)> = BTreeMap::new();
        let state = GibbsState::single(1);
        self.enumerate_histories(state, 2, l, 1.0, &mut by_key)?;
        Ok(by_key.into_values().collect())
    }

    fn enumerate_histories(
        &self,
        state: GibbsState,
        next_label: u32,
        l: u32,
        prob: f64,
        out: &mut BTreeMap<String, (BouquetConfig, f64)>,
    ) -> Result<()> {
        if next_label > l {
            let (partition, shapes) = finalize_state(state)?;
            let config = BouquetConfig::new(partition, shapes)?;
            let entry = out
                .entry(config.canonical_string())
                .or_insert_with(|| (config, 0.0));
            entry.1 += prob;
            return Ok(());
        }
        let probs = self.insertion_probabilities(&state)?;
        for (i, shape) in state.shapes.iter().enumerate() {
            let sites = shape.graft_site_count();
            let site_prob = probs[i] / sites as f64;
            for site in 0..sites {
                let mut next = state.clone();
                next.shapes[i] = shape.graft_at(site, next_label)?;
                self.enumerate_histories(next, next_label + 1, l, prob * site_prob, out)?;
            }
        }
        let mut next = state.clone();
        next.shapes.push(BinaryShape::leaf(next_label));
        self.enumerate_histories(next, next_label + 1, l, prob * probs[state.shapes.len()], out)
    }
}

fn finalize_state(state: GibbsState) -> Result<(PartitionOfL, Vec<BinaryShape>)> {
    let mut shapes = state.shapes;
    shapes.sort_by_key(|s| s.min_leaf());
    let blocks = shapes.iter().map(|s| s.leaf_set()).collect();
    Ok((PartitionOfL::new(blocks)?, shapes))
}

/// One-shot sequential sample; builds the coefficient tables on the fly.
pub fn sequential_sample<R: Rng>(
    l: u32,
    c: f64,
    rng: &mut R,
) -> Result<(PartitionOfL, Vec<BinaryShape>)> {
    GibbsSampler::new(l, c)?.sample(l, rng)
}

/// Both sides of the Poisson-Dirichlet mixture identity.
#[derive(Clone, Copy, Debug)]
pub struct MixtureCheck {
    /// `2^-(l-r) ((beta+1)/2)_{r-1;1/2} / (beta/2 + 1)_{l-1}`.
    pub closed_form: f64,
    /// `int I(l,r)(c) h_beta(c) dc` by quadrature.
    pub integrated: f64,
}

impl MixtureCheck {
    pub fn abs_diff(&self) -> f64 {
        (self.closed_form - self.integrated).abs()
    }
}

/// Mixing the critical-regime coefficients over
/// `h_beta(c) = c^beta exp(-c^2/2) / Z_beta` reproduces the
/// Pitman-Yor PD(1/2, beta/2) coefficients; returns both routes.
pub fn poisson_dirichlet_mixture(l: u32, r: u32, beta: f64) -> Result<MixtureCheck> {
    if l < 1 || r < 1 || r > l {
        return Err(Error::invalid(format!(
            "need 1 <= r <= l, got l={l}, r={r}"
        )));
    }
    if !(beta > -1.0) || !beta.is_finite() {
        return Err(Error::invalid("beta must exceed -1"));
    }

    let mut closed = 2f64.powi(-((l - r) as i32));
    for i in 0..r.saturating_sub(1) {
        closed *= (beta + 1.0) / 2.0 + i as f64 * 0.5;
    }
    for i in 0..l - 1 {
        closed /= beta / 2.0 + 1.0 + i as f64;
    }

    let normalizer = 2f64.powf((beta - 1.0) / 2.0) * ln_gamma((beta + 1.0) / 2.0).exp();
    let bouquet_prob = move |c: f64| -> f64 {
        if l == 1 {
            1.0
        } else {
            let m = 2 * l - r - 2;
            c.powi(r as i32 - 1) / factorial_f64(m) * moment_integral_quadrature(m, c)
        }
    };
    let integrated = integrate(
        move |c: f64| {
            if c <= 0.0 {
                return 0.0;
            }
            bouquet_prob(c) * (beta * c.ln() - c * c / 2.0).exp()
        },
        0.0,
        15.0,
        1e-300,
        1e-10,
    ) / normalizer;

    Ok(MixtureCheck {
        closed_form: closed,
        integrated,
    })
}

fn factorial_f64(k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 2..=k as u64 {
        acc *= i as f64;
    }
    acc
}
