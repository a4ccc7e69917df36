//! Bayesian optimization of the empirical W1 quantile over probability
//! matrices on a 2-D grid.
//!
//! Matrices are parametrized by `θ ∈ [−6, 6]^{nx·ny−1}` through a softmax with
//! the last logit pinned at zero. A GP surrogate of the noisy quantile is
//! refitted as evaluations arrive, and the next point maximizes expected
//! improvement over the best posterior mean at the observed inputs.

mod gp;

pub use gp::{expected_improvement, gp_fit, gp_posterior, GpModel, Hyper};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{sample_counts, FiniteMeasure2D};
use crate::quantiles::{quantile_sorted, QuantileEstimate};
use crate::rng::Streams;
use crate::transport::w1_grid_lp;

/// Search box for every logit.
pub const THETA_BOX: f64 = 6.0;
/// Random candidates per acquisition search.
const CANDIDATES: usize = 256;
/// Local searches started from the best candidates.
const LOCAL_STARTS: usize = 4;
/// Full hyperparameter search cadence once the design is exhausted.
const REFIT_EVERY: usize = 5;

// Stream indices reserved for the optimizer's own randomness, far from the
// objective-call indices `0..budget`.
const DESIGN_STREAM: u64 = 1 << 48;
const ACQ_STREAM: u64 = 1 << 49;

/// Logits and the probability matrix they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    pub theta: Vec<f64>,
    pub p: FiniteMeasure2D,
}

impl SimplexPoint {
    pub fn new(theta: Vec<f64>, nx: usize, ny: usize) -> Result<Self> {
        let p = theta_to_p(&theta, nx, ny)?;
        Ok(Self { theta, p })
    }
}

/// Softmax of `(θ, 0)` reshaped to `nx × ny`.
pub fn theta_to_p(theta: &[f64], nx: usize, ny: usize) -> Result<FiniteMeasure2D> {
    if theta.len() + 1 != nx * ny {
        return Err(Error::InvalidArgument(format!("expected {} logits, got {}", nx * ny - 1, theta.len())));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("logits must be finite".into()));
    }
    let top = theta.iter().fold(0.0_f64, |m, &t| m.max(t));
    let mut w: Vec<f64> = theta.iter().map(|t| (t - top).exp()).collect();
    w.push((-top).exp());
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    FiniteMeasure2D::new(nx, ny, w)
}

/// Logits of an interior matrix: `θ_k = ln p_k − ln p_last`.
pub fn p_to_theta(p: &FiniteMeasure2D) -> Vec<f64> {
    let w = p.p();
    let last = w[w.len() - 1].max(f64::MIN_POSITIVE).ln();
    w[..w.len() - 1].iter().map(|v| v.max(f64::MIN_POSITIVE).ln() - last).collect()
}

/// Empirical `α`-quantile of `W1(p, p̂_N)` over `reps` samples of size `n_samples`.
pub fn objective_quantile(
    p: &FiniteMeasure2D,
    n_samples: usize,
    reps: usize,
    alpha: f64,
    streams: Streams,
) -> Result<QuantileEstimate> {
    if n_samples == 0 || reps == 0 {
        return Err(Error::InvalidArgument("sample size and replicate count must be positive".into()));
    }
    let mut dists = (0..reps)
        .into_par_iter()
        .map(|r| {
            let counts = sample_counts(p.p(), n_samples, streams.key(r as u64));
            let phat = counts.iter().map(|&c| c as f64 / n_samples as f64).collect();
            let phat = FiniteMeasure2D::new(p.nx(), p.ny(), phat)?;
            Ok(w1_grid_lp(p, &phat)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    dists.sort_by(f64::total_cmp);
    quantile_sorted(&dists, alpha)
}

/// Budget and objective settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub nx: usize,
    pub ny: usize,
    pub alpha: f64,
    pub n_samples: usize,
    pub reps: usize,
    pub budget: usize,
}

impl OptimizeConfig {
    pub fn dim(&self) -> usize {
        self.nx * self.ny - 1
    }

    /// Latin-hypercube design size `min(5·dim, 50)`.
    pub fn design_size(&self) -> usize {
        (5 * self.dim()).min(50)
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub call: usize,
    pub theta: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Running maximum of observed values.
    pub best_observed: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub incumbent: SimplexPoint,
    /// Posterior mean at the incumbent.
    pub incumbent_value: f64,
    pub trace: Vec<TraceEntry>,
    pub model: GpModel,
}

fn latin_hypercube<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        strata.shuffle(rng);
        for (i, &s) in strata.iter().enumerate() {
            let u = (s as f64 + rng.gen::<f64>()) / n as f64;
            pts[i][d] = THETA_BOX * (2.0 * u - 1.0);
        }
    }
    pts
}

fn evaluate(
    cfg: &OptimizeConfig,
    theta: &[f64],
    call: usize,
    streams: Streams,
) -> Result<(SimplexPoint, QuantileEstimate)> {
    let point = SimplexPoint::new(theta.to_vec(), cfg.nx, cfg.ny)?;
    let q = objective_quantile(&point.p, cfg.n_samples, cfg.reps, cfg.alpha, streams.child(call as u64))?;
    Ok((point, q))
}

fn best_mean_at_inputs(model: &GpModel) -> (usize, f64) {
    model.inputs().iter().map(|x| model.posterior(x).0).enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, m)| {
        if m > acc.1 {
            (i, m)
        } else {
            acc
        }
    })
}

fn maximize_ei<R: Rng>(model: &GpModel, best: f64, rng: &mut R) -> Vec<f64> {
    let dim = model.inputs()[0].len();
    let ei = |x: &[f64]| {
        let (m, v) = model.posterior(x);
        expected_improvement(m, v, best)
    };
    let mut cands: Vec<Vec<f64>> =
        (0..CANDIDATES).map(|_| (0..dim).map(|_| rng.gen_range(-THETA_BOX..=THETA_BOX)).collect()).collect();
    // corners of the box matter: vertices of the simplex live there
    for _ in 0..CANDIDATES / 4 {
        cands.push((0..dim).map(|_| if rng.gen::<bool>() { THETA_BOX } else { -THETA_BOX }).collect());
    }
    let mut scored: Vec<(f64, Vec<f64>)> = cands.into_iter().map(|x| (ei(&x), x)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best_x = scored[0].1.clone();
    let mut best_v = scored[0].0;
    for (v0, x0) in scored.into_iter().take(LOCAL_STARTS) {
        let (mut x, mut v) = (x0, v0);
        for h in [2.0, 1.0, 0.5, 0.25, 0.1, 0.05] {
            for _ in 0..20 {
                let mut moved = false;
                for d in 0..dim {
                    for s in [h, -h] {
                        let mut y = x.clone();
                        y[d] = (y[d] + s).clamp(-THETA_BOX, THETA_BOX);
                        let vy = ei(&y);
                        if vy > v {
                            x = y;
                            v = vy;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    break;
                }
            }
        }
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    best_x
}

/// Run the optimizer. Objective call `i` samples from `streams.child(i)`.
pub fn optimize(cfg: &OptimizeConfig, streams: Streams) -> Result<OptimizeResult> {
    if cfg.nx < 2 || cfg.ny < 2 {
        return Err(Error::InvalidGrid("both grid axes need at least 2 points".into()));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::InvalidArgument(format!("level {} outside [0, 1]", cfg.alpha)));
    }
    let design = cfg.design_size();
    if cfg.budget < design {
        return Err(Error::InvalidArgument(format!("budget {} is below the initial design size {design}", cfg.budget)));
    }
    let dim = cfg.dim();

    let mut design_rng = streams.key(DESIGN_STREAM).rng();
    let thetas = latin_hypercube(design, dim, &mut design_rng);
    let first = thetas.par_iter().enumerate().map(|(i, t)| evaluate(cfg, t, i, streams)).collect::<Result<Vec<_>>>()?;

    let mut trace = Vec::with_capacity(cfg.budget);
    let mut inputs = Vec::with_capacity(cfg.budget);
    let mut values = Vec::with_capacity(cfg.budget);
    let mut best_observed = f64::NEG_INFINITY;
    let mut record = |point: SimplexPoint, q: QuantileEstimate, trace: &mut Vec<TraceEntry>| {
        best_observed = best_observed.max(q.value);
        trace.push(TraceEntry {
            call: trace.len(),
            p: point.p.rows(),
            theta: point.theta,
            value: q.value,
            ci_lo: q.ci_lo,
            ci_hi: q.ci_hi,
            best_observed,
        });
    };
    for (point, q) in first {
        inputs.push(point.theta.clone());
        values.push(q.value);
        record(point, q, &mut trace);
    }

    let mut model = gp_fit(&inputs, &values, None)?;
    let mut acq_rng = streams.key(ACQ_STREAM).rng();
    for call in design..cfg.budget {
        let (_, incumbent) = best_mean_at_inputs(&model);
        let next = maximize_ei(&model, incumbent, &mut acq_rng);
        let (point, q) = evaluate(cfg, &next, call, streams)?;
        inputs.push(point.theta.clone());
        values.push(q.value);
        record(point, q, &mut trace);
        model = if (call + 1 - design) % REFIT_EVERY == 0 || call + 1 == cfg.budget {
            gp_fit(&inputs, &values, None)?
        } else {
            GpModel::condition(&inputs, &values, model.hyper().clone())?
        };
    }

    let (best_idx, incumbent_value) = best_mean_at_inputs(&model);
    let incumbent = SimplexPoint::new(inputs[best_idx].clone(), cfg.nx, cfg.ny)?;
    Ok(OptimizeResult { incumbent, incumbent_value, trace, model })
}
