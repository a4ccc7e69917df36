mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use wq_core::measures::{batch_from_csv, AnyMeasure, MeasureSpec};

use config::{execute, invalid, Command, Invalid, RunConfig};
use output::{extract_config, render, Format};

/// Wasserstein distances, bridge limit laws, confidence regions and
/// quantile-maximizing measures on the unit interval and square.
#[derive(Debug, Parser)]
#[command(name = "wq", version)]
struct Cli {
    /// Base seed; every replicate derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format; defaults to the --out extension, else csv.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "WQ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// W1 distance between two measures of the same dimension.
    W1 {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// Write the optimal plan and dual potentials (2-D only) as JSON.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Monte Carlo CDF of the limit statistic for a 1-D grid measure.
    BridgeCdf {
        #[arg(long)]
        p: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        t_max: f64,
        #[arg(long, default_value_t = 200)]
        t_steps: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
    },
    /// Quantile-maximizing mixture weight per level.
    LambdaCurve {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        /// `start:end:step` or a comma-separated list.
        #[arg(long, default_value = "0.01:0.99:0.01")]
        alphas: String,
        #[arg(long, default_value_t = 101)]
        lambda_steps: usize,
    },
    /// Confidence ball around a 1-D sample, optionally testing a candidate.
    Confidence {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        candidate: Option<PathBuf>,
    },
    /// Simulated coverage of the confidence ball.
    Coverage {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        n_samples: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Bayesian optimization of the W1 quantile over the nx × ny simplex.
    #[command(name = "optimize-2d")]
    Optimize2d {
        #[arg(long, default_value_t = 3)]
        nx: usize,
        #[arg(long, default_value_t = 3)]
        ny: usize,
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        n_samples: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        /// Write the incumbent matrix as CSV.
        #[arg(long)]
        emit_heatmap: Option<PathBuf>,
    },
    /// Monte Carlo tail of the limit statistic against the asymptotic bound.
    TailCompare {
        #[arg(long)]
        p: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        t_max: f64,
        #[arg(long, default_value_t = 40)]
        t_steps: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
    },
    /// Kolmogorov distance between the scaled empirical W1 and its limit.
    CltCheck {
        #[arg(long)]
        p: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n_samples: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 100)]
        t_steps: usize,
    },
    /// Re-run the config embedded in an artifact written by wq.
    Replay { file: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn read_measure(path: &Path) -> Result<MeasureSpec> {
    let spec: MeasureSpec =
        serde_json::from_str(&read(path)?).map_err(|e| invalid(format!("{}: not a measure: {e}", path.display())))?;
    // Validate now so a bad file is reported by name.
    AnyMeasure::try_from(spec.clone()).with_context(|| path.display().to_string())?;
    Ok(spec)
}

fn read_grid_p(path: &Path) -> Result<Vec<f64>> {
    match read_measure(path)? {
        MeasureSpec::Finite1d { p, .. } => Ok(p),
        _ => Err(invalid(format!("{}: expected a finite1d grid measure", path.display()))),
    }
}

fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    let bad = |_| invalid(format!("cannot parse levels {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) =
                (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?, step.trim().parse().map_err(bad)?);
            if !(step > 0.0 && b >= a) {
                return Err(invalid(format!("level range {s:?} needs start <= end and a positive step")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            // Round away the accumulated binary noise of `a + i·step`.
            Ok((0..count).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
        }
        [_] => s.split(',').map(|v| v.trim().parse().map_err(bad)).collect(),
        _ => Err(invalid(format!("cannot parse levels {s:?}"))),
    }
}

/// Resolve file inputs into a self-contained config.
fn build_config(seed: u64, sub: &Sub) -> Result<RunConfig> {
    let command = match sub {
        Sub::W1 { p, q, .. } => Command::W1 { p: read_measure(p)?, q: read_measure(q)? },
        Sub::BridgeCdf { p, t_max, t_steps, reps } => {
            Command::BridgeCdf { p: read_grid_p(p)?, t_max: *t_max, t_steps: *t_steps, reps: *reps }
        }
        Sub::LambdaCurve { n, reps, alphas, lambda_steps } => {
            Command::LambdaCurve { n: *n, reps: *reps, alphas: parse_alphas(alphas)?, lambda_steps: *lambda_steps }
        }
        Sub::Confidence { data, alpha, candidate } => {
            let batch = batch_from_csv(&read(data)?).with_context(|| data.display().to_string())?;
            if batch.dim() != 1 {
                return Err(invalid(format!("{}: expected one value per row", data.display())));
            }
            let candidate = candidate.as_deref().map(read_measure).transpose()?;
            Command::Confidence { data: batch.values().to_vec(), alpha: *alpha, candidate }
        }
        Sub::Coverage { measure, n_samples, alpha, reps } => {
            Command::Coverage { measure: read_measure(measure)?, n_samples: *n_samples, alpha: *alpha, reps: *reps }
        }
        Sub::Optimize2d { nx, ny, alpha, n_samples, reps, budget, .. } => {
            Command::Optimize2d { nx: *nx, ny: *ny, alpha: *alpha, n_samples: *n_samples, reps: *reps, budget: *budget }
        }
        Sub::TailCompare { p, t_max, t_steps, reps } => {
            Command::TailCompare { p: read_grid_p(p)?, t_max: *t_max, t_steps: *t_steps, reps: *reps }
        }
        Sub::CltCheck { p, n_samples, reps, t_steps } => {
            Command::CltCheck { p: read_grid_p(p)?, n_samples: *n_samples, reps: *reps, t_steps: *t_steps }
        }
        Sub::Replay { .. } => unreachable!("replay carries its own config"),
    };
    Ok(RunConfig { seed, command })
}

fn write(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting worker pool")?;
    }
    let (config, default_format) = match &cli.command {
        Sub::Replay { file } => {
            let (config, format) =
                extract_config(&read(file)?).map_err(|e| invalid(format!("{}: {e:#}", file.display())))?;
            (config, Some(format))
        }
        sub => (build_config(cli.seed, sub)?, None),
    };
    let format = Format::resolve(cli.format.or(default_format), cli.out.as_deref());

    let start = Instant::now();
    let report = execute(&config)?;
    let plan_path = match &cli.command {
        Sub::W1 { plan: Some(path), .. } => {
            let plan = report.plan.as_ref().ok_or_else(|| invalid("--plan needs two-dimensional measures"))?;
            Some((path, plan))
        }
        _ => None,
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    write(cli.out.as_deref(), &render(&config, &report, format)?)?;
    if let Some((path, plan)) = plan_path {
        write(Some(path), &(serde_json::to_string_pretty(plan)? + "\n"))?;
    }
    if let (Sub::Optimize2d { emit_heatmap: Some(path), .. }, Some(heatmap)) = (&cli.command, &report.heatmap) {
        write(Some(path), heatmap)?;
    }
    eprintln!("wq {}: {:.3} s wall", config.command.name(), start.elapsed().as_secs_f64());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|e| {
        e.downcast_ref::<Invalid>().is_some() || e.downcast_ref::<wq_core::Error>().is_some_and(|e| e.is_validation())
    });
    if validation {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
