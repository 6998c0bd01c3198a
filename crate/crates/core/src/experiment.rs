//! Experiment orchestration: replicated sampling across worker threads,
//! aggregation by observation class, and comparison against the exact
//! finite-n law and the limit laws.

use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_reduced_distribution, ModelParams};
use crate::limits::{distance_tail, LimitTables};
use crate::reduced::{csv_escape, Classification};
use crate::sampler::{RngStream, WilsonSampler};
use crate::stats::{compare_distributions, ks_distance, ComparisonStats};

/// Maximum `n` for which the exact oracle is attached to reports.
pub const EXACT_COMPARISON_MAX_N: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KappaMode {
    /// Fixed killing conductance.
    Fixed { kappa: f64 },
    /// Critical scaling `kappa = c sqrt(n)`.
    Critical { c: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: u32,
    pub kappa_mode: KappaMode,
    pub l: u32,
    pub replicates: u64,
    pub seed: u64,
    pub workers: usize,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn resolved_params(&self) -> Result<ModelParams> {
        match self.kappa_mode {
            KappaMode::Fixed { kappa } => ModelParams::new(self.n, kappa, self.l),
            KappaMode::Critical { c } => ModelParams::critical(self.n, c, self.l),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be >= 1"));
        }
        self.resolved_params().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub key: String,
    pub classification: String,
    pub r: u32,
    pub d: u64,
    pub count: u64,
    pub frequency: f64,
    pub exact_probability: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCountRow {
    pub r: u32,
    pub count: u64,
    pub frequency: f64,
    pub limit_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeRow {
    /// Shape-only canonical key of a binary bouquet configuration.
    pub key: String,
    pub r: u32,
    pub count: u64,
    pub frequency: f64,
    /// Limiting probability of this configuration.
    pub limit_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    /// Mean of (distance to the root) / sqrt(n).
    pub mean_scaled: f64,
    /// KS distance of the scaled distances against the limit CDF.
    pub ks_distance_vs_limit: f64,
}

/// Histogram bin over the rescaled total branch length
/// `sigma = (d - l) / sqrt(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
}

pub const SIGMA_BIN_WIDTH: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    /// Resolved killing conductance.
    pub kappa: f64,
    pub classes: Vec<ClassRow>,
    pub block_counts: Vec<BlockCountRow>,
    pub shapes: Vec<ShapeRow>,
    pub degenerate_frequency: f64,
    pub exact_comparison: Option<ComparisonStats>,
    pub distance: Option<DistanceStats>,
    /// Distribution of the rescaled suppressed-vertex total over all
    /// replicates, in bins of [`SIGMA_BIN_WIDTH`].
    pub scaled_length_histogram: Vec<HistogramBin>,
    pub total_steps: u64,
    pub runtime_ms: u64,
    pub timestamp_unix_ms: u64,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-class CSV table.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("key,classification,r,d,count,frequency,exact_probability\n");
        for row in &self.classes {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_escape(&row.key),
                row.classification,
                row.r,
                row.d,
                row.count,
                row.frequency,
                row.exact_probability.map_or(String::new(), |p| p.to_string()),
            ));
        }
        out
    }

    /// Copy with wall-clock fields zeroed; runs with the same config are
    /// byte-identical under this view regardless of worker count.
    pub fn volatile_cleared(&self) -> ExperimentReport {
        let mut report = self.clone();
        report.runtime_ms = 0;
        report.timestamp_unix_ms = 0;
        report
    }

    pub fn empirical_counts(&self) -> BTreeMap<String, u64> {
        self.classes
            .iter()
            .map(|row| (row.key.clone(), row.count))
            .collect()
    }

    pub fn block_count_frequency(&self, r: u32) -> f64 {
        self.block_counts
            .iter()
            .find(|row| row.r == r)
            .map_or(0.0, |row| row.frequency)
    }
}

#[derive(Clone)]
struct ClassAccum {
    count: u64,
    r: u32,
    d: u64,
    classification: Classification,
    shape_key: String,
}

#[derive(Default)]
struct Accum {
    classes: BTreeMap<String, ClassAccum>,
    steps: u64,
}

impl Accum {
    fn merge(&mut self, other: Accum) {
        for (key, value) in other.classes {
            match self.classes.get_mut(&key) {
                Some(existing) => existing.count += value.count,
                None => {
                    self.classes.insert(key, value);
                }
            }
        }
        self.steps += other.steps;
    }
}

/// Runs `replicates` independent samples (replicate `i` uses stream `i`
/// of the configured seed), aggregates observation classes, and attaches
/// exact and limiting references. The report is a deterministic function
/// of the config, whatever the worker count.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let params = config.resolved_params()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;

    struct FoldState {
        sampler: WilsonSampler,
        acc: Accum,
    }

    let seed = config.seed;
    let accum: Accum = pool.install(|| {
        (0..config.replicates)
            .into_par_iter()
            .try_fold(
                || FoldState {
                    sampler: WilsonSampler::new(params),
                    acc: Accum::default(),
                },
                |mut state, rep| -> Result<FoldState> {
                    let mut rng = RngStream::new(seed, rep).rng();
                    let tree = state.sampler.sample_reduced_subtree(&mut rng)?;
                    let obs = tree.reduce()?;
                    let key = obs.class_key();
                    match state.acc.classes.get_mut(&key) {
                        Some(entry) => entry.count += 1,
                        None => {
                            state.acc.classes.insert(
                                key,
                                ClassAccum {
                                    count: 1,
                                    r: obs.component_count(),
                                    d: obs.embedded_vertex_count(),
                                    classification: obs.classification(),
                                    shape_key: obs.shape_key(),
                                },
                            );
                        }
                    }
                    Ok(state)
                },
            )
            .map(|state| {
                state.map(|s| {
                    let mut acc = s.acc;
                    acc.steps += s.sampler.total_steps;
                    acc
                })
            })
            .try_reduce(Accum::default, |mut a, b| {
                a.merge(b);
                Ok(a)
            })
    })?;

    assemble_report(config, params, accum, started)
}

fn assemble_report(
    config: &ExperimentConfig,
    params: ModelParams,
    accum: Accum,
    started: Instant,
) -> Result<ExperimentReport> {
    let replicates = config.replicates;
    let nf = replicates as f64;

    let exact = if config.n <= EXACT_COMPARISON_MAX_N {
        Some(exact_reduced_distribution(&params)?.to_f64_map())
    } else {
        None
    };

    let mut classes = Vec::with_capacity(accum.classes.len());
    let mut block_counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut shape_counts: BTreeMap<String, (u32, u64)> = BTreeMap::new();
    let mut degenerate: u64 = 0;
    for (key, entry) in &accum.classes {
        block_counts
            .entry(entry.r)
            .and_modify(|c| *c += entry.count)
            .or_insert(entry.count);
        match entry.classification {
            Classification::BinaryBouquet { .. } => {
                let slot = shape_counts
                    .entry(entry.shape_key.clone())
                    .or_insert((entry.r, 0));
                slot.1 += entry.count;
            }
            Classification::Degenerate => degenerate += entry.count,
        }
        classes.push(ClassRow {
            key: key.clone(),
            classification: entry.classification.as_str().to_string(),
            r: entry.r,
            d: entry.d,
            count: entry.count,
            frequency: entry.count as f64 / nf,
            exact_probability: exact.as_ref().map(|m| m.get(key).copied().unwrap_or(0.0)),
        });
    }

    // limit references: block-count law and per-configuration mass by r
    let (limit_block, config_limit_by_r): (Vec<f64>, Vec<f64>) = match config.kappa_mode {
        KappaMode::Critical { c } => {
            let tables = LimitTables::build(config.l, c)?;
            let per_config = (1..=config.l)
                .map(|r| tables.bouquet_probability(config.l, r))
                .collect();
            (tables.block_count_distribution(config.l), per_config)
        }
        KappaMode::Fixed { .. } => {
            let mut block = vec![0.0; config.l as usize];
            block[0] = 1.0;
            let uniform = 1.0 / crate::combinatorics::count_binary_shapes(config.l)? as f64;
            let mut per_config = vec![0.0; config.l as usize];
            per_config[0] = uniform;
            (block, per_config)
        }
    };

    let block_rows: Vec<BlockCountRow> = (1..=config.l)
        .map(|r| {
            let count = block_counts.get(&r).copied().unwrap_or(0);
            BlockCountRow {
                r,
                count,
                frequency: count as f64 / nf,
                limit_probability: limit_block[r as usize - 1],
            }
        })
        .collect();

    let shape_rows: Vec<ShapeRow> = shape_counts
        .into_iter()
        .map(|(key, (r, count))| ShapeRow {
            key,
            r,
            count,
            frequency: count as f64 / nf,
            limit_probability: config_limit_by_r[r as usize - 1],
        })
        .collect();

    let exact_comparison = match &exact {
        Some(reference) => {
            let counts: BTreeMap<String, u64> = accum
                .classes
                .iter()
                .map(|(k, v)| (k.clone(), v.count))
                .collect();
            Some(compare_distributions(&counts, reference)?)
        }
        None => None,
    };

    // scaled distance to the root, reconstructed from class multiplicities
    let distance = if config.l == 1 {
        let sqrt_n = (config.n as f64).sqrt();
        let mut samples = Vec::with_capacity(replicates as usize);
        for entry in accum.classes.values() {
            let scaled = entry.d as f64 / sqrt_n;
            samples.extend(std::iter::repeat(scaled).take(entry.count as usize));
        }
        let mean_scaled = samples.iter().sum::<f64>() / nf;
        let cdf: Box<dyn Fn(f64) -> f64> = match config.kappa_mode {
            KappaMode::Fixed { .. } => Box::new(|t: f64| 1.0 - (-t * t / 2.0).exp()),
            KappaMode::Critical { c } => {
                Box::new(move |t: f64| 1.0 - distance_tail(t.max(0.0), c).unwrap_or(0.0))
            }
        };
        let ks = ks_distance(&samples, |t| cdf(t))?;
        Some(DistanceStats {
            mean_scaled,
            ks_distance_vs_limit: ks,
        })
    } else {
        None
    };

    let sqrt_n = (config.n as f64).sqrt();
    let mut sigma_bins: BTreeMap<u64, u64> = BTreeMap::new();
    for entry in accum.classes.values() {
        let sigma = (entry.d - config.l as u64) as f64 / sqrt_n;
        let bin = (sigma / SIGMA_BIN_WIDTH).floor() as u64;
        *sigma_bins.entry(bin).or_insert(0) += entry.count;
    }
    let scaled_length_histogram: Vec<HistogramBin> = sigma_bins
        .into_iter()
        .map(|(bin, count)| HistogramBin {
            lower: bin as f64 * SIGMA_BIN_WIDTH,
            upper: (bin + 1) as f64 * SIGMA_BIN_WIDTH,
            count,
        })
        .collect();

    let conservation: u64 = classes.iter().map(|c| c.count).sum();
    debug_assert_eq!(conservation, replicates);

    Ok(ExperimentReport {
        schema_version: 1,
        config: config.clone(),
        kappa: params.kappa,
        classes,
        block_counts: block_rows,
        shapes: shape_rows,
        degenerate_frequency: degenerate as f64 / nf,
        exact_comparison,
        distance,
        scaled_length_histogram,
        total_steps: accum.steps,
        runtime_ms: started.elapsed().as_millis() as u64,
        timestamp_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
    })
}
