//! The `gsqmc` experiment runner.

mod config;
mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::Result;
use crate::estimator::{estimate_level_prefixes, level_specs, Estimate, LevelEstimate};
use crate::integrand::IntegrandContext;
use crate::lowdisc::SequenceKind;
use crate::reference::reference_for;

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind, OutputFormat, CONFIG_SCHEMA};
pub use output::{distribution_label, write_csv, write_json, OutputRow, OUTPUT_SCHEMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gsqmc", version, about = "Gerber-Shiu (Q)MC experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its table.
    Run {
        config: PathBuf,
        /// Output file; overrides the config. Without any, rows go to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Replace the configured seed list with this single seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

/// Estimates every row of the experiment, in the order
/// x, generator, seed, n_levels, N.
///
/// For a fixed (x, generator, seed) all rows share the point sets: level
/// `k` uses the same spec for every `n_levels`, and smaller `N` are
/// prefixes of the largest. `seconds` is the wall-clock time of that shared
/// computation.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<OutputRow>> {
    let max_level = *cfg.n_levels.iter().max().expect("validated non-empty");
    let n_max = *cfg.n_points.iter().max().expect("validated non-empty");
    let mut rows = Vec::with_capacity(cfg.row_count());
    for &x in &cfg.x_values {
        let model = cfg.model.with_x(x);
        let template = IntegrandContext::new(model, 1)?;
        let reference = reference_for(&model).map(|r| r.value);
        for &generator in &cfg.generators {
            let seeds: Vec<Option<u64>> = if cfg.uses_seed(generator) {
                cfg.seeds.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for seed in seeds {
                let start = Instant::now();
                let specs = level_specs(generator, max_level, n_max, seed, cfg.skip);
                let mut by_level: Vec<Vec<LevelEstimate>> = Vec::with_capacity(max_level);
                for (i, spec) in specs.iter().enumerate() {
                    let ctx = template.at_level(i + 1)?;
                    by_level.push(estimate_level_prefixes(spec, &ctx, &cfg.n_points)?);
                }
                let seconds = start.elapsed().as_secs_f64();
                for &n_levels in &cfg.n_levels {
                    for (j, &n) in cfg.n_points.iter().enumerate() {
                        let levels = by_level[..n_levels].iter().map(|l| l[j]).collect();
                        let est = Estimate::combine(levels);
                        rows.push(OutputRow {
                            generator: generator.as_str().to_string(),
                            n,
                            k_levels: n_levels,
                            x,
                            lambda: model.interarrival.rate(),
                            mu: model.claim.rate(),
                            delta: model.delta,
                            penalty: model.penalty.label(),
                            estimate: est.value,
                            stderr: est.stderr,
                            ci_lo: est.ci95.map(|c| c.0),
                            ci_hi: est.ci95.map(|c| c.1),
                            reference,
                            abs_error: reference.map(|r| (est.value - r).abs()),
                            seconds,
                            c_tilde: model.premium.c_tilde,
                            a: model.premium.a,
                            epsilon: model.premium.epsilon,
                            seed,
                            skip: cfg.skip,
                            scramble: generator != SequenceKind::Pseudorandom
                                && cfg.scramble.contains(&generator),
                            interarrival: distribution_label(&model.interarrival),
                            claim: distribution_label(&model.claim),
                            schema: OUTPUT_SCHEMA,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn encode(rows: &[OutputRow], format: OutputFormat) -> std::result::Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(rows, &mut buf).map_err(|e| e.to_string())?,
        OutputFormat::Json => write_json(rows, &mut buf).map_err(|e| e.to_string())?,
    }
    Ok(buf)
}

/// Writes via a temporary file in the target directory, renamed into place.
fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn load(path: &Path) -> std::result::Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| match e.line {
        Some(l) => format!("{}:{l}: {}", path.display(), e.message),
        None => format!("{}: {}", path.display(), e.message),
    })
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!(
                    "ok: {} experiment, {} rows",
                    cfg.kind.as_str(),
                    cfg.row_count()
                );
                EXIT_OK
            }
            Err(msg) => {
                eprintln!("config error: {msg}");
                EXIT_CONFIG
            }
        },
        Command::Run {
            config,
            output,
            format,
            threads,
            seed_override,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(msg) => {
                    eprintln!("config error: {msg}");
                    return EXIT_CONFIG;
                }
            };
            if let Some(s) = seed_override {
                cfg.seeds = vec![s];
            }
            if let Some(f) = format {
                cfg.format = f;
            }
            if output.is_some() {
                cfg.output = output;
            }
            if threads == Some(0) {
                eprintln!("config error: --threads must be at least 1");
                return EXIT_CONFIG;
            }
            let pool = match rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
            {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("runtime error: {e}");
                    return EXIT_RUNTIME;
                }
            };
            let rows = match pool.install(|| run_experiment(&cfg)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("runtime error: {e}");
                    return EXIT_RUNTIME;
                }
            };
            let bytes = match encode(&rows, cfg.format) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("runtime error: {e}");
                    return EXIT_RUNTIME;
                }
            };
            let written = match &cfg.output {
                Some(path) => write_atomically(path, &bytes).map(|_| {
                    eprintln!("wrote {} rows to {}", rows.len(), path.display());
                }),
                None => std::io::stdout().write_all(&bytes),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("runtime error: {e}");
                    EXIT_RUNTIME
                }
            }
        }
    }
}
