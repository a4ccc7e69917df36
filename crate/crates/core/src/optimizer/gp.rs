//! Gaussian-process regression with an anisotropic squared-exponential kernel.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, JITTER_LADDER};
use crate::normal;

const LENGTH_GRID: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
const SIGNAL_GRID: [f64; 3] = [0.25, 1.0, 4.0];
const NOISE_GRID: [f64; 5] = [1e-4, 1e-2, 0.1, 0.5, 1.0];
pub const LENGTH_BOUNDS: (f64, f64) = (0.05, 50.0);
const SIGNAL_BOUNDS: (f64, f64) = (1e-2, 100.0);
const NOISE_BOUNDS: (f64, f64) = (1e-6, 10.0);

/// Kernel hyperparameters, on the scale of standardized observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub length_scales: Vec<f64>,
    pub signal_var: f64,
    pub noise_var: f64,
}

impl Hyper {
    pub fn isotropic(dim: usize, length: f64, signal_var: f64, noise_var: f64) -> Self {
        Self { length_scales: vec![length; dim], signal_var, noise_var }
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a.iter().zip(b).zip(&self.length_scales).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
        self.signal_var * (-0.5 * r2).exp()
    }
}

/// A fitted surrogate with its cached factorization.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    y_mean: f64,
    y_scale: f64,
    hyper: Hyper,
    chol: DMatrix<f64>,
    weights: DVector<f64>,
    log_marginal: f64,
}

impl GpModel {
    /// Condition on `(inputs, observations)` with fixed hyperparameters.
    pub fn condition(inputs: &[Vec<f64>], observations: &[f64], hyper: Hyper) -> Result<Self> {
        let n = inputs.len();
        if n == 0 || n != observations.len() {
            return Err(Error::InvalidArgument("need matching, nonempty inputs and observations".into()));
        }
        let y_mean = observations.iter().sum::<f64>() / n as f64;
        let var = observations.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(n, observations.iter().map(|v| (v - y_mean) / y_scale));

        let k = DMatrix::from_fn(n, n, |i, j| {
            hyper.kernel(&inputs[i], &inputs[j]) + if i == j { hyper.noise_var } else { 0.0 }
        });
        let mut last = (0, 0.0);
        let mut chol = None;
        for &jitter in JITTER_LADDER.iter() {
            match cholesky(&k, jitter * hyper.signal_var.max(1.0)) {
                Ok(l) => {
                    chol = Some(l);
                    break;
                }
                Err(fail) => last = fail,
            }
        }
        let chol =
            chol.ok_or(Error::Cholesky { minor: last.0, pivot: last.1, jitter: *JITTER_LADDER.last().unwrap() })?;
        let alpha = chol.solve_lower_triangular(&y).expect("nonzero diagonal");
        let weights = chol.transpose().solve_upper_triangular(&alpha).expect("nonzero diagonal");
        let log_det: f64 = chol.diagonal().iter().map(|d| d.ln()).sum();
        let log_marginal = -0.5 * alpha.norm_squared() - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(Self { inputs: inputs.to_vec(), y_mean, y_scale, hyper, chol, weights, log_marginal })
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    /// Log marginal likelihood of the standardized observations.
    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Latent posterior mean and variance at `x`, in observation units.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|a| self.hyper.kernel(a, x)));
        let mean = ks.dot(&self.weights);
        let v = self.chol.solve_lower_triangular(&ks).expect("nonzero diagonal");
        let var = (self.hyper.signal_var - v.norm_squared()).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * self.y_scale * var)
    }

    /// Prior variance in observation units.
    pub fn prior_var(&self) -> f64 {
        self.y_scale * self.y_scale * self.hyper.signal_var
    }
}

/// Maximize the marginal likelihood: best point of an isotropic grid, then
/// coordinate search in log space with shrinking steps. `fixed_noise` pins
/// the noise variance.
pub fn gp_fit(inputs: &[Vec<f64>], observations: &[f64], fixed_noise: Option<f64>) -> Result<GpModel> {
    if inputs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two observations".into()));
    }
    let dim = inputs[0].len();
    let noises: Vec<f64> = match fixed_noise {
        Some(v) => vec![v],
        None => NOISE_GRID.to_vec(),
    };
    let mut best: Option<GpModel> = None;
    let consider = |h: Hyper, best: &mut Option<GpModel>| {
        if let Ok(m) = GpModel::condition(inputs, observations, h) {
            if best.as_ref().map_or(true, |b| m.log_marginal > b.log_marginal) {
                *best = Some(m);
            }
        }
    };
    for &l in &LENGTH_GRID {
        for &s in &SIGNAL_GRID {
            for &nv in &noises {
                consider(Hyper::isotropic(dim, l, s, nv), &mut best);
            }
        }
    }
    let mut best =
        best.ok_or_else(|| Error::Internal("no kernel hyperparameters gave a positive definite matrix".into()))?;

    for step in [2.0_f64, 2f64.sqrt(), 2f64.powf(0.25)] {
        let mut improved = true;
        let mut rounds = 0;
        while improved && rounds < 4 {
            improved = false;
            rounds += 1;
            let n_params = dim + 1 + usize::from(fixed_noise.is_none());
            for k in 0..n_params {
                for factor in [step, 1.0 / step] {
                    let mut h = best.hyper.clone();
                    let (slot, (lo, hi)) = if k < dim {
                        (&mut h.length_scales[k], LENGTH_BOUNDS)
                    } else if k == dim {
                        (&mut h.signal_var, SIGNAL_BOUNDS)
                    } else {
                        (&mut h.noise_var, NOISE_BOUNDS)
                    };
                    let next = (*slot * factor).clamp(lo, hi);
                    if next == *slot {
                        continue;
                    }
                    *slot = next;
                    if let Ok(m) = GpModel::condition(inputs, observations, h) {
                        if m.log_marginal > best.log_marginal + 1e-10 {
                            best = m;
                            improved = true;
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

/// `(μ, σ²)` of the latent function at `x`.
pub fn gp_posterior(model: &GpModel, x: &[f64]) -> (f64, f64) {
    model.posterior(x)
}

/// Maximization-form expected improvement over `best`.
pub fn expected_improvement(mean: f64, variance: f64, best: f64) -> f64 {
    let sigma = variance.max(0.0).sqrt();
    let gain = mean - best;
    if sigma == 0.0 {
        return gain.max(0.0);
    }
    let z = gain / sigma;
    (gain * normal::cdf(z) + sigma * normal::pdf(z)).max(0.0)
}
