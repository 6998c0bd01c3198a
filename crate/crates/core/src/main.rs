use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use forest_lab::exact::{exact_reduced_distribution, ModelParams};
use forest_lab::experiment::{run_monte_carlo, ExperimentConfig, KappaMode, OutputFormat};
use forest_lab::gibbs::{eppf, poisson_dirichlet_mixture, GibbsSampler};
use forest_lab::limits::LimitTables;
use forest_lab::reduced::csv_escape;
use forest_lab::sampler::RngStream;
use forest_lab::validate;

const SEED_ENV: &str = "FOREST_LAB_SEED";
const DEFAULT_SEED: u64 = 0x51ED_BA5E;

#[derive(Parser)]
#[command(
    name = "forest-lab",
    about = "Killed spanning forests on complete graphs: sampling, exact laws, limit checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sampling of the reduced subtree law
    Sample(SampleArgs),
    /// Exact class distribution by exhaustive enumeration (n <= 8)
    Exact(ExactArgs),
    /// Limit tables: C, I, C*I and the normalization sum
    Limits(LimitsArgs),
    /// Sequential Gibbs partition sampler vs its exact EPPF
    Gibbs(GibbsArgs),
    /// Poisson-Dirichlet mixture identity check
    Mixture(MixtureArgs),
    /// Run the full acceptance suite (exit code 0 iff all pass)
    Validate,
}

#[derive(Args)]
struct SampleArgs {
    /// Number of non-root vertices
    #[arg(long)]
    n: u32,
    /// Fixed killing conductance
    #[arg(long, conflicts_with = "c")]
    kappa: Option<f64>,
    /// Critical-regime constant: kappa = c * sqrt(n)
    #[arg(long)]
    c: Option<f64>,
    /// Marked-set size
    #[arg(long)]
    l: u32,
    /// Number of replicates
    #[arg(long)]
    reps: u64,
    /// PRNG seed (falls back to FOREST_LAB_SEED, then a fixed default)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, default_value = "json", value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    l: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LimitsArgs {
    /// Largest marked-set size
    #[arg(long)]
    lmax: u32,
    /// Comma-separated critical constants
    #[arg(long, value_delimiter = ',', required = true)]
    c: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GibbsArgs {
    #[arg(long)]
    l: u32,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    reps: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MixtureArgs {
    #[arg(long)]
    lmax: u32,
    /// Comma-separated mixing exponents (each > -1)
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var(SEED_ENV)
            .ok()
            .and_then(|raw| raw.parse().ok())
    })
    .unwrap_or(DEFAULT_SEED)
}

fn emit(out: Option<PathBuf>, content: &str) -> forest_lab::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            if let Err(err) = stdout.write_all(content.as_bytes()) {
                // a closed pipe (e.g. `| head`) is not a failure
                if err.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(err.into());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                forest_lab::Error::InvalidParameter(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> forest_lab::Result<ExitCode> {
    match cli.command {
        Command::Sample(args) => {
            let kappa_mode = match (args.kappa, args.c) {
                (Some(kappa), None) => KappaMode::Fixed { kappa },
                (None, Some(c)) => KappaMode::Critical { c },
                _ => {
                    return Err(forest_lab::Error::InvalidParameter(
                        "exactly one of --kappa or --c is required".into(),
                    ))
                }
            };
            let format = if args.format == "csv" {
                OutputFormat::Csv
            } else {
                OutputFormat::Json
            };
            let config = ExperimentConfig {
                n: args.n,
                kappa_mode,
                l: args.l,
                replicates: args.reps,
                seed: resolve_seed(args.seed),
                workers: args.workers.max(1),
                output: args.out.as_ref().map(|p| p.display().to_string()),
                format,
            };
            let report = run_monte_carlo(&config)?;
            let content = match format {
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Json => {
                    let mut json = report.to_json()?;
                    json.push('\n');
                    json
                }
            };
            emit(args.out, &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Exact(args) => {
            let params = ModelParams::new(args.n, args.kappa, args.l)?;
            let dist = exact_reduced_distribution(&params)?;
            emit(args.out, &dist.to_csv())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Limits(args) => {
            let mut out = String::from("l,r,c,C_lr,I_lr,CI_lr,S_l\n");
            for &c in &args.c {
                let tables = LimitTables::build(args.lmax, c)?;
                for l in 1..=args.lmax {
                    let s = tables.normalization_sum(l);
                    for r in 1..=l {
                        let count = tables.bouquet_count(l, r);
                        let prob = tables.bouquet_probability(l, r);
                        out.push_str(&format!(
                            "{l},{r},{c},{count},{prob},{},{s}\n",
                            count as f64 * prob
                        ));
                    }
                }
            }
            emit(args.out, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gibbs(args) => {
            let sampler = GibbsSampler::new(args.l, args.c)?;
            let seed = resolve_seed(args.seed);
            let mut counts: std::collections::BTreeMap<String, u64> =
                std::collections::BTreeMap::new();
            for rep in 0..args.reps {
                let mut rng = RngStream::new(seed, rep).rng();
                let (partition, _) = sampler.sample(args.l, &mut rng)?;
                *counts.entry(partition.canonical_string()).or_insert(0) += 1;
            }
            let mut out = String::from("sizes,eppf,empirical_freq,n_samples,partition\n");
            for (partition_key, count) in &counts {
                let sizes: Vec<u32> = partition_key
                    .split('|')
                    .map(|block| block.split(',').count() as u32)
                    .collect();
                let sizes_str = sizes
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join("+");
                let p = eppf(&sizes, args.c)?;
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    sizes_str,
                    p,
                    *count as f64 / args.reps as f64,
                    args.reps,
                    csv_escape(partition_key),
                ));
            }
            emit(args.out, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Mixture(args) => {
            let mut out = String::from("l,r,beta,closed,integrated,abs_diff\n");
            for &beta in &args.beta {
                for l in 1..=args.lmax {
                    for r in 1..=l {
                        let check = poisson_dirichlet_mixture(l, r, beta)?;
                        out.push_str(&format!(
                            "{l},{r},{beta},{},{},{}\n",
                            check.closed_form,
                            check.integrated,
                            check.abs_diff()
                        ));
                    }
                }
            }
            emit(args.out, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => {
            let results = validate::run_all()?;
            let mut all_passed = true;
            for result in &results {
                println!("{}", result.status_line());
                all_passed &= result.passed;
            }
            if all_passed {
                println!("acceptance: all {} criteria passed", results.len());
                Ok(ExitCode::SUCCESS)
            } else {
                let failed: Vec<String> = results
                    .iter()
                    .filter(|r| !r.passed)
                    .map(|r| r.id.to_string())
                    .collect();
                println!("acceptance: FAILED criteria: {}", failed.join(", "));
                Ok(ExitCode::from(1))
            }
        }
    }
}
