//! Asymptotic Wasserstein confidence balls around an empirical measure on
//! `[0, 1]` and the simultaneous bounds they give for means of 1-Lipschitz
//! functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::{wilson, z99};
use crate::error::{Error, Result};
use crate::measures::{sample, Measure1D, SampleBatch};
use crate::normal;
use crate::rng::Streams;
use crate::transport::w1_sorted_sample;

/// Below this level the asymptotics behind the radius are not trustworthy.
pub const VALIDITY_LEVEL: f64 = 0.7;

/// `Φ⁻¹((1+α)/2) / 2`.
pub fn radius_k(alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Err(Error::InfiniteRadius(alpha));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("confidence level {alpha} outside [0, 1)")));
    }
    Ok(normal::inv_cdf(0.5 * (1.0 + alpha)) / 2.0)
}

/// `P(|B(1/2)| ≥ t) = 2 − 2Φ(2t)`, evaluated without cancellation.
pub fn normal_tail_2m2phi(t: f64) -> f64 {
    2.0 * normal::sf(2.0 * t)
}

fn validity_warning(alpha: f64) -> Option<String> {
    (alpha < VALIDITY_LEVEL).then(|| format!("level {alpha} is far from 1; the region is asymptotic for levels near 1"))
}

/// A ball `{P' : W1(P̂_N, P') ≤ k/√N}` centred at an empirical measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion {
    center: Vec<f64>,
    pub alpha: f64,
    pub k: f64,
    pub radius: f64,
}

impl ConfidenceRegion {
    pub fn new(batch: &SampleBatch, alpha: f64) -> Result<Self> {
        if batch.dim() != 1 {
            return Err(Error::InvalidArgument("confidence regions are one-dimensional".into()));
        }
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        let k = radius_k(alpha)?;
        let mut center = batch.values().to_vec();
        center.sort_by(f64::total_cmp);
        Ok(Self { radius: k / (center.len() as f64).sqrt(), center, alpha, k })
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    /// Sorted draws defining the centre.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn test(&self, candidate: &Measure1D) -> Containment {
        let distance = w1_sorted_sample(&self.center, candidate);
        Containment {
            k: self.k,
            radius: self.radius,
            n: self.n(),
            distance,
            contained: distance <= self.radius,
            margin: self.radius - distance,
        }
    }
}

/// Outcome of a membership test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub k: f64,
    pub radius: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub distance: f64,
    pub contained: bool,
    /// `radius − distance`.
    pub margin: f64,
}

pub fn region_contains(batch: &SampleBatch, candidate: &Measure1D, alpha: f64) -> Result<Containment> {
    Ok(ConfidenceRegion::new(batch, alpha)?.test(candidate))
}

/// Estimated coverage of the true measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub alpha: f64,
    pub n: usize,
    pub reps: usize,
    pub covered: usize,
    pub fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl Coverage {
    /// Binomial standard error of the fraction.
    pub fn se(&self) -> f64 {
        (self.fraction * (1.0 - self.fraction) / self.reps as f64).sqrt()
    }
}

/// Fraction of `reps` samples of size `n` from `measure` whose region
/// contains `measure`. Replicate `r` draws from stream `r`.
pub fn coverage_sim(measure: &Measure1D, n: usize, alpha: f64, reps: usize, streams: Streams) -> Result<Coverage> {
    if n == 0 || reps == 0 {
        return Err(Error::InvalidArgument("sample size and replicate count must be positive".into()));
    }
    let radius = radius_k(alpha)? / (n as f64).sqrt();
    let covered = (0..reps)
        .into_par_iter()
        .filter(|&r| {
            let mut xs = sample(measure, n, streams.key(r as u64)).values().to_vec();
            xs.sort_by(f64::total_cmp);
            w1_sorted_sample(&xs, measure) <= radius
        })
        .count();
    let (ci_lo, ci_hi) = wilson(covered, reps, z99());
    Ok(Coverage {
        alpha,
        n,
        reps,
        covered,
        fraction: covered as f64 / reps as f64,
        ci_lo,
        ci_hi,
        warning: validity_warning(alpha),
    })
}

/// A piecewise-linear function through `(x_i, y_i)`, constant outside the
/// table, required to be 1-Lipschitz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzFn {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl LipschitzFn {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::InvalidArgument("breakpoint table needs equal, nonzero lengths".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("breakpoint positions must be strictly increasing".into()));
        }
        for i in 1..xs.len() {
            let (dx, df) = (xs[i] - xs[i - 1], (ys[i] - ys[i - 1]).abs());
            if df > dx + 1e-12 {
                return Err(Error::NotLipschitz { left: i - 1, right: i, df, dx });
            }
        }
        Ok(Self { xs, ys })
    }

    pub fn breakpoints(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&b| b <= x);
        if k == 0 {
            return self.ys[0];
        }
        if k == self.xs.len() {
            return self.ys[k - 1];
        }
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let (y0, y1) = (self.ys[k - 1], self.ys[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// `∫_a^b f` for `a ≤ b`, exact for the piecewise-linear interpolant.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut pts = vec![a];
        pts.extend(self.xs.iter().copied().filter(|&x| x > a && x < b));
        pts.push(b);
        pts.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.eval(w[0]) + self.eval(w[1]))).sum()
    }

    /// `E_P f`, exact for every supported measure type.
    pub fn expectation(&self, measure: &Measure1D) -> f64 {
        match measure {
            Measure1D::Finite(m) => {
                let g = m.grid();
                m.p().iter().enumerate().map(|(i, w)| w * self.eval(g.point(i))).sum()
            }
            Measure1D::Discrete(m) => m.atoms().iter().zip(m.weights()).map(|(&x, w)| w * self.eval(x)).sum(),
            Measure1D::Mixture(m) => {
                let l = m.lambda();
                0.5 * l * (self.eval(0.0) + self.eval(1.0)) + (1.0 - l) * self.integral(0.0, 1.0)
            }
        }
    }
}

/// `mean ± k/√N`; the same half-width holds simultaneously for every
/// 1-Lipschitz function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanInterval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub halfwidth: f64,
    pub uniform_in_f: bool,
}

impl MeanInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

pub fn lipschitz_mean_bounds(batch: &SampleBatch, f: &LipschitzFn, alpha: f64) -> Result<MeanInterval> {
    if batch.dim() != 1 || batch.is_empty() {
        return Err(Error::InvalidArgument("need a nonempty 1-D sample".into()));
    }
    let n = batch.len() as f64;
    let mean = batch.values().iter().map(|&x| f.eval(x)).sum::<f64>() / n;
    let halfwidth = radius_k(alpha)? / n.sqrt();
    Ok(MeanInterval { mean, lo: mean - halfwidth, hi: mean + halfwidth, halfwidth, uniform_in_f: true })
}
