//! Fully resolved run parameters and their execution. Inputs are stored
//! inline so an artifact's embedded config replays without the original files.

use std::fmt;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wq_core::bridge::{
    build_covariance, ecdf_on_grid, ks_distance, l1_tail_bound, mc_cdf, sample_statistic, scaled_empirical_w1, wilson,
    z99,
};
use wq_core::confidence::{coverage_sim, radius_k, ConfidenceRegion, VALIDITY_LEVEL};
use wq_core::measures::{AnyMeasure, Measure1D, MeasureSpec, SampleBatch};
use wq_core::optimizer::{optimize, OptimizeConfig};
use wq_core::quantiles::lambda_curve;
use wq_core::rng::Streams;
use wq_core::transport::{w1_1d, w1_grid_lp};

use crate::output::{num, Report};

/// A user-input problem, reported with exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    W1 {
        p: MeasureSpec,
        q: MeasureSpec,
    },
    BridgeCdf {
        p: Vec<f64>,
        t_max: f64,
        t_steps: usize,
        reps: usize,
    },
    LambdaCurve {
        n: usize,
        reps: usize,
        alphas: Vec<f64>,
        lambda_steps: usize,
    },
    Confidence {
        data: Vec<f64>,
        alpha: f64,
        candidate: Option<MeasureSpec>,
    },
    Coverage {
        measure: MeasureSpec,
        n_samples: usize,
        alpha: f64,
        reps: usize,
    },
    #[serde(rename = "optimize-2d")]
    Optimize2d {
        nx: usize,
        ny: usize,
        alpha: f64,
        n_samples: usize,
        reps: usize,
        budget: usize,
    },
    TailCompare {
        p: Vec<f64>,
        t_max: f64,
        t_steps: usize,
        reps: usize,
    },
    CltCheck {
        p: Vec<f64>,
        n_samples: usize,
        reps: usize,
        t_steps: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::W1 { .. } => "w1",
            Command::BridgeCdf { .. } => "bridge-cdf",
            Command::LambdaCurve { .. } => "lambda-curve",
            Command::Confidence { .. } => "confidence",
            Command::Coverage { .. } => "coverage",
            Command::Optimize2d { .. } => "optimize-2d",
            Command::TailCompare { .. } => "tail-compare",
            Command::CltCheck { .. } => "clt-check",
        }
    }
}

fn measure_1d(spec: &MeasureSpec) -> Result<Measure1D> {
    match AnyMeasure::try_from(spec.clone())? {
        AnyMeasure::One(m) => Ok(m),
        AnyMeasure::Two(_) => Err(invalid("expected a one-dimensional measure")),
    }
}

/// `steps` points from `lo` to `hi` inclusive.
fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(invalid(format!("need at least 2 grid steps, got {steps}")));
    }
    if !(hi.is_finite() && hi > lo) {
        return Err(invalid(format!("grid end {hi} must be finite and above {lo}")));
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

fn validity_warning(alpha: f64) -> Option<String> {
    (alpha < VALIDITY_LEVEL).then(|| format!("level {alpha} is far from 1; the radius is asymptotic for levels near 1"))
}

pub fn execute(config: &RunConfig) -> Result<Report> {
    let streams = Streams::new(config.seed);
    match &config.command {
        Command::W1 { p, q } => {
            let (a, b) = (AnyMeasure::try_from(p.clone())?, AnyMeasure::try_from(q.clone())?);
            let (d, plan) = match (&a, &b) {
                (AnyMeasure::One(x), AnyMeasure::One(y)) => (w1_1d(x, y), None),
                (AnyMeasure::Two(x), AnyMeasure::Two(y)) => {
                    let (d, plan) = w1_grid_lp(x, y)?;
                    let entries: Vec<_> = plan
                        .entries
                        .iter()
                        .filter(|e| e.mass > 0.0)
                        .map(|e| {
                            json!({
                                "from": [e.from / x.ny(), e.from % x.ny()],
                                "to": [e.to / y.ny(), e.to % y.ny()],
                                "mass": e.mass,
                            })
                        })
                        .collect();
                    let doc = json!({ "w1": d, "entries": entries, "dual_u": plan.dual_u, "dual_v": plan.dual_v });
                    (d, Some(doc))
                }
                _ => return Err(invalid("cannot compare a one-dimensional with a two-dimensional measure")),
            };
            let mut report = Report::new(&[], json!({ "w1": d }));
            report.rows.push(vec![num(d)]);
            report.plan = plan;
            Ok(report)
        }
        Command::BridgeCdf { p, t_max, t_steps, reps } => {
            let grid = linspace(0.0, *t_max, *t_steps)?;
            let cdf = mc_cdf(p, &grid, *reps, streams)?;
            let mut report = Report::new(&["t", "F_hat", "ci_lo", "ci_hi"], json!(cdf));
            report.rows = cdf.iter().map(|c| vec![num(c.t), num(c.f_hat), num(c.ci_lo), num(c.ci_hi)]).collect();
            Ok(report)
        }
        Command::LambdaCurve { n, reps, alphas, lambda_steps } => {
            let grid = linspace(0.0, 1.0, *lambda_steps)?;
            let curve = lambda_curve(*n, alphas, &grid, *reps, streams)?;
            let mut report = Report::new(&["alpha", "lambda_hat", "quantile", "ci_lo", "ci_hi"], json!(curve));
            for ((a, l), q) in curve.alphas.iter().zip(&curve.lambda_hat).zip(&curve.quantile_at_max) {
                report.rows.push(vec![num(*a), num(*l), num(q.value), num(q.ci_lo), num(q.ci_hi)]);
                report.warn(q.warning.clone());
            }
            Ok(report)
        }
        Command::Confidence { data, alpha, candidate } => {
            let batch = SampleBatch::from_1d(data.clone())?;
            let region = ConfidenceRegion::new(&batch, *alpha)?;
            let mut report = match candidate {
                Some(spec) => {
                    let c = region.test(&measure_1d(spec)?);
                    let mut r = Report::new(&["k", "radius", "N", "distance", "contained", "margin"], json!(c));
                    r.rows.push(vec![
                        num(c.k),
                        num(c.radius),
                        c.n.to_string(),
                        num(c.distance),
                        c.contained.to_string(),
                        num(c.margin),
                    ]);
                    r
                }
                None => {
                    let mut r = Report::new(
                        &["k", "radius", "N"],
                        json!({ "k": region.k, "radius": region.radius, "N": region.n() }),
                    );
                    r.rows.push(vec![num(region.k), num(region.radius), region.n().to_string()]);
                    r
                }
            };
            report.warn(validity_warning(*alpha));
            Ok(report)
        }
        Command::Coverage { measure, n_samples, alpha, reps } => {
            let m = measure_1d(measure)?;
            // Fail on an infinite radius before spending any samples.
            radius_k(*alpha)?;
            let c = coverage_sim(&m, *n_samples, *alpha, *reps, streams)?;
            let mut report = Report::new(&["alpha", "n", "reps", "covered", "fraction", "ci_lo", "ci_hi"], json!(c));
            report.rows.push(vec![
                num(c.alpha),
                c.n.to_string(),
                c.reps.to_string(),
                c.covered.to_string(),
                num(c.fraction),
                num(c.ci_lo),
                num(c.ci_hi),
            ]);
            report.warn(c.warning.clone());
            Ok(report)
        }
        Command::Optimize2d { nx, ny, alpha, n_samples, reps, budget } => {
            let cfg =
                OptimizeConfig { nx: *nx, ny: *ny, alpha: *alpha, n_samples: *n_samples, reps: *reps, budget: *budget };
            let res = optimize(&cfg, streams)?;
            let rows = res.incumbent.p.rows();
            let hyper = res.model.hyper();
            let data = json!({
                "trace": res.trace,
                "incumbent": { "theta": res.incumbent.theta, "p": rows, "posterior_mean": res.incumbent_value },
                "hyperparameters": hyper,
            });
            let mut columns = vec!["call", "value", "ci_lo", "ci_hi", "best_observed"]
                .into_iter()
                .map(String::from)
                .collect::<Vec<_>>();
            for i in 0..*nx {
                for j in 0..*ny {
                    columns.push(format!("p_{i}_{j}"));
                }
            }
            let mut report = Report { columns, data, ..Report::default() };
            for e in &res.trace {
                let mut row = vec![e.call.to_string(), num(e.value), num(e.ci_lo), num(e.ci_hi), num(e.best_observed)];
                row.extend(e.p.iter().flatten().map(|v| num(*v)));
                report.rows.push(row);
            }
            report = report
                .note("incumbent_posterior_mean", num(res.incumbent_value))
                .note("incumbent_p", json!(rows).to_string())
                .note("hyperparameters", json!(hyper).to_string());
            report.heatmap =
                Some(rows.iter().map(|r| r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",") + "\n").collect());
            Ok(report)
        }
        Command::TailCompare { p, t_max, t_steps, reps } => {
            if *t_steps == 0 || !(t_max.is_finite() && *t_max > 0.0) {
                return Err(invalid("need a positive t-max and at least one step"));
            }
            let grid: Vec<f64> = (1..=*t_steps).map(|i| t_max * i as f64 / *t_steps as f64).collect();
            let sample = sample_statistic(&build_covariance(p)?, *reps, streams)?;
            let cdf = ecdf_on_grid(&sample, &grid);
            let mut report = Report::new(&["t", "mc_tail", "ci_lo", "ci_hi", "l1_tail_bound"], json!(null));
            let mut points = Vec::with_capacity(grid.len());
            for c in &cdf {
                let bound = l1_tail_bound(p, c.t)?;
                let m = sample.len();
                let exceed = m - (c.f_hat * m as f64).round() as usize;
                let tail = exceed as f64 / m as f64;
                let (lo, hi) = wilson(exceed, m, z99());
                report.rows.push(vec![num(c.t), num(tail), num(lo), num(hi), num(bound)]);
                points.push(json!({ "t": c.t, "mc_tail": tail, "ci_lo": lo, "ci_hi": hi, "l1_tail_bound": bound }));
            }
            report.data = json!(points);
            report.warnings.push("l1_tail_bound is asymptotic and for diagnostics only".into());
            Ok(report)
        }
        Command::CltCheck { p, n_samples, reps, t_steps } => {
            let empirical = scaled_empirical_w1(p, *n_samples, *reps, streams.child(0))?;
            let limit = sample_statistic(&build_covariance(p)?, *reps, streams.child(1))?;
            let ks = ks_distance(&empirical.sorted(), &limit.sorted());
            let top = empirical.values.iter().chain(&limit.values).fold(0.0_f64, |m, &v| m.max(v));
            let grid = linspace(0.0, if top > 0.0 { top } else { 1.0 }, *t_steps)?;
            let (fe, fl) = (ecdf_on_grid(&empirical, &grid), ecdf_on_grid(&limit, &grid));
            let mut report = Report::new(&["t", "F_empirical", "F_limit"], json!(null)).note("ks", num(ks));
            report.rows = fe.iter().zip(&fl).map(|(a, b)| vec![num(a.t), num(a.f_hat), num(b.f_hat)]).collect();
            report.data = json!({ "ks": ks, "empirical": fe, "limit": fl });
            Ok(report)
        }
    }
}
