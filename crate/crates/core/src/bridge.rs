//! The discretized Brownian-bridge limit of `N·W1(P̂_N, P)` on an `n`-point
//! grid: the Gaussian vector `(B(q_1), …, B(q_{n−1}))`, its `ℓ1` statistic
//! `𝔅ₙ = Σ|B(q_i)|/(n−1)`, Monte Carlo CDFs and eigenvalue tail formulas.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{robust_cholesky, symmetric_eigenvalues};
use crate::measures::{cumulative_q, sample_counts, validate_simplex, FiniteMeasure1D, Measure1D};
use crate::normal;
use crate::rng::Streams;
use crate::transport::w1_1d;

/// Replicates per GEMM block.
const BLOCK: usize = 2048;

/// Relative eigen-gap below which two eigenvalues count as equal.
pub const MULTIPLICITY_GAP: f64 = 1e-8;

/// Two-sided 99% normal quantile, used for all binomial intervals.
pub fn z99() -> f64 {
    normal::inv_cdf(0.995)
}

/// Covariance of `(B(q_1), …, B(q_{n−1}))` with a square-root factor and its
/// spectrum.
#[derive(Debug, Clone)]
pub struct BridgeCovariance {
    n: usize,
    q: Vec<f64>,
    sigma: DMatrix<f64>,
    /// `d × d` with `L Lᵀ ≈ Σ`; rows and columns of zero-variance
    /// coordinates are zero.
    chol: DMatrix<f64>,
    jitter: f64,
    eigenvalues: Vec<f64>,
}

impl BridgeCovariance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Diagonal jitter the factorization needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Descending, clamped at zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// `σ_ij = q_min(i,j) · (1 − q_max(i,j))` for the cumulative sums of `p`.
pub fn build_covariance(p: &[f64]) -> Result<BridgeCovariance> {
    if p.len() < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 grid points, got {}", p.len())));
    }
    validate_simplex(p)?;
    let q = cumulative_q(p)?;
    let d = q.len();
    let sigma = DMatrix::from_fn(d, d, |i, j| {
        let (lo, hi) = if q[i] <= q[j] { (q[i], q[j]) } else { (q[j], q[i]) };
        lo * (1.0 - hi)
    });

    // Coordinates with q ∈ {0, 1} are identically zero; factor the rest.
    let live: Vec<usize> = (0..d).filter(|&i| sigma[(i, i)] > 0.0).collect();
    let mut chol = DMatrix::zeros(d, d);
    let mut jitter = 0.0;
    if !live.is_empty() {
        let sub = DMatrix::from_fn(live.len(), live.len(), |a, b| sigma[(live[a], live[b])]);
        let f = robust_cholesky(&sub)?;
        jitter = f.jitter;
        for (a, &i) in live.iter().enumerate() {
            for c in 0..f.l.ncols() {
                chol[(i, c)] = f.l[(a, c)];
            }
        }
    }
    let eigenvalues = symmetric_eigenvalues(&sigma)?.into_iter().map(|v| v.max(0.0)).collect();
    Ok(BridgeCovariance { n: p.len(), q, sigma, chol, jitter, eigenvalues })
}

/// Which functional a [`DistanceSample`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `Σ|B(q_i)|/(n−1)`.
    BridgeL1,
    /// `√N · W1(P̂_N, P)`.
    ScaledEmpiricalW1,
}

/// `M` replicates of a distance statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSample {
    pub values: Vec<f64>,
    pub seed: u64,
    pub statistic: Statistic,
}

impl DistanceSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean_and_se(&self) -> (f64, f64) {
        mean_and_se(&self.values)
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Standard-normal vectors of dimension `d` for replicates `start..start+len`,
/// one column per replicate, each drawn from the replicate's own stream.
pub fn normal_block(d: usize, start: usize, len: usize, streams: Streams) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(d, len);
    for (c, mut col) in z.column_iter_mut().enumerate() {
        let mut rng = streams.key((start + c) as u64).rng();
        for v in col.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    z
}

fn l1_columns(chol: &DMatrix<f64>, z: &DMatrix<f64>, scale: f64) -> Vec<f64> {
    let y = chol * z;
    y.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>() * scale).collect()
}

/// `M` draws of `𝔅ₙ`. Replicate `r` uses stream `r` of `streams`, so results
/// are identical for any thread count, and two covariances of the same
/// dimension see common random numbers.
pub fn sample_statistic(cov: &BridgeCovariance, m: usize, streams: Streams) -> Result<DistanceSample> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let d = cov.dim();
    let scale = 1.0 / d as f64;
    let values = (0..m.div_ceil(BLOCK))
        .into_par_iter()
        .flat_map_iter(|b| {
            let start = b * BLOCK;
            let len = BLOCK.min(m - start);
            l1_columns(&cov.chol, &normal_block(d, start, len, streams), scale)
        })
        .collect();
    Ok(DistanceSample { values, seed: streams.seed(), statistic: Statistic::BridgeL1 })
}

/// Standard-normal draws for replicates `0..m`, kept in GEMM-sized blocks so
/// several covariances can be evaluated against the same numbers.
#[derive(Debug, Clone)]
pub struct FrozenNormals {
    blocks: Vec<DMatrix<f64>>,
    seed: u64,
}

impl FrozenNormals {
    pub fn new(d: usize, m: usize, streams: Streams) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("need at least one replicate".into()));
        }
        let blocks = (0..m.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| normal_block(d, b * BLOCK, BLOCK.min(m - b * BLOCK), streams))
            .collect();
        Ok(Self { blocks, seed: streams.seed() })
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    /// `𝔅ₙ` for `cov` on these draws; equals [`sample_statistic`] with the same streams.
    pub fn statistic(&self, cov: &BridgeCovariance) -> Result<DistanceSample> {
        if cov.dim() != self.dim() {
            return Err(Error::InvalidArgument("common random numbers need equal dimensions".into()));
        }
        let scale = 1.0 / cov.dim() as f64;
        Ok(DistanceSample {
            values: self.blocks.iter().flat_map(|z| l1_columns(&cov.chol, z, scale)).collect(),
            seed: self.seed,
            statistic: Statistic::BridgeL1,
        })
    }
}

/// Many covariances of one dimension against a single frozen draw set.
pub fn sample_statistic_crn(covs: &[BridgeCovariance], m: usize, streams: Streams) -> Result<Vec<DistanceSample>> {
    let Some(first) = covs.first() else {
        return Ok(Vec::new());
    };
    let frozen = FrozenNormals::new(first.dim(), m, streams)?;
    covs.par_iter().map(|cov| frozen.statistic(cov)).collect()
}

/// Wilson score interval for `k` successes in `m` trials at normal quantile `z`.
pub fn wilson(k: usize, m: usize, z: f64) -> (f64, f64) {
    let (kf, mf) = (k as f64, m as f64);
    let phat = kf / mf;
    let z2 = z * z;
    let denom = 1.0 + z2 / mf;
    let centre = (phat + z2 / (2.0 * mf)) / denom;
    let half = z * (phat * (1.0 - phat) / mf + z2 / (4.0 * mf * mf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// One point of a Monte Carlo CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub t: f64,
    pub f_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Empirical CDF of a sample on `t_grid` with 99% Wilson intervals.
pub fn ecdf_on_grid(sample: &DistanceSample, t_grid: &[f64]) -> Vec<CdfPoint> {
    let sorted = sample.sorted();
    let m = sorted.len();
    let z = z99();
    t_grid
        .iter()
        .map(|&t| {
            let k = sorted.partition_point(|&v| v <= t);
            let (ci_lo, ci_hi) = wilson(k, m, z);
            CdfPoint { t, f_hat: k as f64 / m as f64, ci_lo, ci_hi }
        })
        .collect()
}

/// `P(𝔅ₙ ≤ t)` on `t_grid`, all points from one shared draw set.
pub fn mc_cdf(p: &[f64], t_grid: &[f64], m: usize, streams: Streams) -> Result<Vec<CdfPoint>> {
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("t grid must be nonnegative and ascending".into()));
    }
    let cov = build_covariance(p)?;
    let sample = sample_statistic(&cov, m, streams)?;
    Ok(ecdf_on_grid(&sample, t_grid))
}

/// Monte Carlo estimate of `E ∫₀¹ |B(t)| dt` through the uniform `fine_n`
/// grid statistic. Returns `(mean, standard error)`.
pub fn limit_statistic_uniform_mean(m: usize, fine_n: usize, streams: Streams) -> Result<(f64, f64)> {
    if fine_n < 2 {
        return Err(Error::InvalidGrid(format!("fine_n must be at least 2, got {fine_n}")));
    }
    let p = vec![1.0 / fine_n as f64; fine_n];
    let cov = build_covariance(&p)?;
    Ok(sample_statistic(&cov, m, streams)?.mean_and_se())
}

/// `R` replicates of `√N · W1(P̂_N, P)` for the grid measure `p`; the
/// empirical counts of replicate `r` come from stream `r`.
pub fn scaled_empirical_w1(p: &[f64], n_samples: usize, reps: usize, streams: Streams) -> Result<DistanceSample> {
    if n_samples == 0 || reps == 0 {
        return Err(Error::InvalidArgument("sample size and replicate count must be positive".into()));
    }
    let truth: Measure1D = FiniteMeasure1D::new(p.to_vec())?.into();
    let scale = (n_samples as f64).sqrt();
    let values = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let counts = sample_counts(p, n_samples, streams.key(r));
            let phat = counts.iter().map(|&c| c as f64 / n_samples as f64).collect();
            let e: Measure1D = FiniteMeasure1D::new(phat)?.into();
            Ok(scale * w1_1d(&e, &truth))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DistanceSample { values, seed: streams.seed(), statistic: Statistic::ScaledEmpiricalW1 })
}

/// Two-sample Kolmogorov distance `sup_t |F_a(t) − F_b(t)|` of sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Largest eigenvalue and its multiplicity under [`MULTIPLICITY_GAP`].
pub fn leading_multiplicity(eigenvalues: &[f64]) -> Result<(f64, usize)> {
    let a1 = eigenvalues.first().copied().unwrap_or(0.0);
    if !(a1 > 0.0) {
        return Err(Error::DegenerateCovariance);
    }
    let m = eigenvalues.iter().take_while(|&&a| (a1 - a) / a1 < MULTIPLICITY_GAP).count();
    Ok((a1, m))
}

/// Asymptotic `P(‖X‖₂² ≥ t·α₁)` for `X ~ N(0, Σ)`:
/// `2^{1−m/2}/Γ(m/2) · e^{−t/2} t^{m/2−1} · Π_{j>m} (1 − α_j/α₁)^{−1/2}`.
pub fn eigen_tail(cov: &BridgeCovariance, t: f64) -> Result<f64> {
    eigen_tail_from(cov.eigenvalues(), t)
}

pub fn eigen_tail_from(eigenvalues: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {t}")));
    }
    let (a1, m) = leading_multiplicity(eigenvalues)?;
    let half_m = m as f64 / 2.0;
    let log_prod: f64 = eigenvalues[m..].iter().map(|a| -0.5 * (1.0 - a / a1).ln()).sum();
    let log = (1.0 - half_m) * std::f64::consts::LN_2 - ln_gamma(half_m) - t / 2.0 + (half_m - 1.0) * t.ln() + log_prod;
    Ok(log.exp())
}

/// Diagnostic tail shape for `P(𝔅ₙ ≥ t)` via `P(‖B‖₂ ≥ t√(n−1))`, i.e.
/// [`eigen_tail`] at `t²(n−1)/α₁`. Asymptotic only; no certified constant.
pub fn l1_tail_bound(p: &[f64], t: f64) -> Result<f64> {
    let cov = build_covariance(p)?;
    let (a1, _) = leading_multiplicity(cov.eigenvalues())?;
    eigen_tail(&cov, t * t * cov.dim() as f64 / a1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::renormalize;
    use proptest::prelude::*;

    // E|N(0, σ²)| = σ √(2/π), checked here by midpoint quadrature of |x|φ(x/σ)/σ.
    fn abs_normal_mean_quadrature(sigma: f64) -> f64 {
        let (a, k) = (12.0 * sigma, 200_000);
        let h = 2.0 * a / k as f64;
        (0..k)
            .map(|i| {
                let x = -a + (i as f64 + 0.5) * h;
                x.abs() * normal::pdf(x / sigma) / sigma * h
            })
            .sum()
    }

    #[test]
    fn covariance_examples() {
        let c = build_covariance(&[0.5, 0.5]).unwrap();
        assert_eq!(c.sigma()[(0, 0)], 0.25);
        assert!((c.eigenvalues()[0] - 0.25).abs() < 1e-15);

        let third = 1.0 / 3.0;
        let c = build_covariance(&[third, third, 1.0 - 2.0 * third]).unwrap();
        assert!((c.sigma()[(0, 0)] - 2.0 / 9.0).abs() < 1e-15);
        assert!((c.sigma()[(0, 1)] - 1.0 / 9.0).abs() < 1e-15);
        assert!((c.sigma()[(1, 1)] - 2.0 / 9.0).abs() < 1e-15);

        let c = build_covariance(&[0.5, 0.0, 0.5]).unwrap();
        assert!(c.sigma().iter().all(|&v| v == 0.25));
        assert!((c.eigenvalues()[0] - 0.5).abs() < 1e-14);
        assert!(c.eigenvalues()[1].abs() < 1e-14);
        assert!(c.jitter() <= 1e-8);
    }

    #[test]
    fn rejects_off_simplex() {
        assert!(build_covariance(&[0.5, 0.6]).is_err());
        assert!(build_covariance(&[1.0]).is_err());
    }

    #[test]
    fn two_point_mean_matches_quadrature() {
        let oracle = abs_normal_mean_quadrature(0.5);
        assert!((oracle - 0.5 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9);
        let cov = build_covariance(&[0.5, 0.5]).unwrap();
        let s = sample_statistic(&cov, 100_000, Streams::new(7)).unwrap();
        let (mean, se) = s.mean_and_se();
        assert!((mean - oracle).abs() < 3.0 * se, "{mean} vs {oracle} (se {se})");
    }

    #[test]
    fn zero_variance_coordinate_is_zero() {
        let cov = build_covariance(&[0.0, 1.0, 0.0]).unwrap();
        let z = normal_block(2, 0, 50, Streams::new(3));
        let y = cov.chol() * z;
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_and_schedule_free() {
        let cov = build_covariance(&[0.2, 0.3, 0.1, 0.4]).unwrap();
        let a = sample_statistic(&cov, 5000, Streams::new(11)).unwrap();
        let b = sample_statistic(&cov, 5000, Streams::new(11)).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| sample_statistic(&cov, 5000, Streams::new(11)).unwrap());
        assert_eq!(a, c);
        // a prefix of a longer run is the shorter run
        let long = sample_statistic(&cov, 7000, Streams::new(11)).unwrap();
        assert_eq!(&long.values[..5000], &a.values[..]);
    }

    #[test]
    fn crn_matches_independent_calls() {
        let covs: Vec<_> = [[0.5, 0.0, 0.5], [0.2, 0.5, 0.3]].iter().map(|p| build_covariance(p).unwrap()).collect();
        let joint = sample_statistic_crn(&covs, 3000, Streams::new(5)).unwrap();
        for (c, s) in covs.iter().zip(&joint) {
            assert_eq!(&sample_statistic(c, 3000, Streams::new(5)).unwrap(), s);
        }
    }

    #[test]
    fn mc_cdf_two_point() {
        let m = 100_000;
        let t_grid = [0.0, 0.49, 10.0];
        let cdf = mc_cdf(&[0.5, 0.5], &t_grid, m, Streams::new(1)).unwrap();
        assert_eq!(cdf[0].f_hat, 0.0);
        let f = 2.0 * normal::cdf(0.98) - 1.0;
        assert!((f - 0.6729).abs() < 1e-4);
        assert!((cdf[1].f_hat - f).abs() < 3.0 * (f * (1.0 - f) / m as f64).sqrt());
        assert!(cdf[1].ci_lo <= cdf[1].f_hat && cdf[1].f_hat <= cdf[1].ci_hi);
        assert!(cdf[2].f_hat >= 1.0 - 1e-6);
    }

    #[test]
    fn mc_cdf_rejects_descending_grid() {
        assert!(mc_cdf(&[0.5, 0.5], &[0.3, 0.1], 100, Streams::new(1)).is_err());
    }

    #[test]
    fn uniform_mean_small_grid() {
        // n = 2 collapses to |B(1/2)|
        let (mean, se) = limit_statistic_uniform_mean(50_000, 2, Streams::new(2)).unwrap();
        assert!((mean - abs_normal_mean_quadrature(0.5)).abs() < 3.0 * se);
    }

    #[test]
    fn uniform_mean_refinement_is_consistent() {
        let (a, sa) = limit_statistic_uniform_mean(20_000, 100, Streams::new(8)).unwrap();
        let (b, sb) = limit_statistic_uniform_mean(20_000, 400, Streams::new(9)).unwrap();
        assert!((a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt());
    }

    #[test]
    fn eigen_tail_one_dimensional() {
        let cov = build_covariance(&[0.5, 0.5]).unwrap();
        let t = 25.0_f64;
        let formula = eigen_tail(&cov, t).unwrap();
        let closed = (2.0 / std::f64::consts::PI).sqrt() * (-t / 2.0).exp() / t.sqrt();
        assert!((formula / closed - 1.0).abs() < 1e-12);
        let exact = 2.0 * normal::sf(t.sqrt());
        assert!((formula / exact - 1.0).abs() < 0.05);
    }

    #[test]
    fn eigen_tail_rank_one_product_is_one() {
        let cov = build_covariance(&[0.5, 0.0, 0.5]).unwrap();
        // m = 1, remaining α₂ = 0 contributes (1 − 0)^{−1/2} = 1
        let t = 9.0_f64;
        let closed = (2.0 / std::f64::consts::PI).sqrt() * (-t / 2.0).exp() / t.sqrt();
        assert!((eigen_tail(&cov, t).unwrap() / closed - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eigen_tail_doubling() {
        let eig = [0.3, 0.3, 0.1, 0.05];
        let (t, m) = (4.0_f64, 2.0_f64);
        let ratio = eigen_tail_from(&eig, 2.0 * t).unwrap() / eigen_tail_from(&eig, t).unwrap();
        assert!((ratio - (-t / 2.0).exp() * 2f64.powf(m / 2.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn point_mass_is_degenerate() {
        let cov = build_covariance(&[0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(eigen_tail(&cov, 1.0), Err(Error::DegenerateCovariance)));
        assert!(matches!(l1_tail_bound(&[1.0, 0.0], 1.0), Err(Error::DegenerateCovariance)));
    }

    #[test]
    fn l1_bound_two_point_shape() {
        // 𝔅₂ = |B(1/2)|, exact tail 2 − 2Φ(2t)
        for t in [2.0, 3.0] {
            let bound = l1_tail_bound(&[0.5, 0.5], t).unwrap();
            let exact = 2.0 - 2.0 * normal::cdf(2.0 * t);
            assert!((bound / exact - 1.0).abs() < 0.1, "t={t}: {bound} vs {exact}");
        }
    }

    #[test]
    fn l1_bound_dominates_mc_tail_uniform() {
        let p = vec![0.1; 10];
        let cov = build_covariance(&p).unwrap();
        let s = sample_statistic(&cov, 200_000, Streams::new(4)).unwrap();
        let sorted = s.sorted();
        // a threshold where the MC tail is about 1e-3
        let t = sorted[(0.999 * sorted.len() as f64) as usize];
        let tail = sorted.iter().filter(|&&v| v >= t).count() as f64 / sorted.len() as f64;
        assert!(l1_tail_bound(&p, t).unwrap() >= tail);
        assert!(l1_tail_bound(&p, t + 0.1).unwrap() < l1_tail_bound(&p, t).unwrap());
    }

    #[test]
    fn ks_distance_by_brute_force() {
        let a = [0.1, 0.2, 0.2, 0.7];
        let b = [0.15, 0.2, 0.9];
        let mut pts: Vec<f64> = a.iter().chain(&b).copied().collect();
        pts.sort_by(f64::total_cmp);
        let frac = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
        let brute = pts.iter().map(|&t| (frac(&a, t) - frac(&b, t)).abs()).fold(0.0, f64::max);
        assert!((ks_distance(&a, &b) - brute).abs() < 1e-15);
        assert_eq!(ks_distance(&a, &a), 0.0);
    }

    #[test]
    fn scaled_w1_small_clt() {
        // Two-point grid: √N·|K/N − 1/2| against |B(1/2)|, mean 0.5·√(2/π).
        let s = scaled_empirical_w1(&[0.5, 0.5], 10_000, 4000, Streams::new(6)).unwrap();
        let (mean, se) = s.mean_and_se();
        assert!((mean - abs_normal_mean_quadrature(0.5)).abs() < 3.0 * se + 0.01);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson(30, 100, z99());
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson(0, 100, z99()).0, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn extremal_covariance_dominates(raw in proptest::collection::vec(0.0..1.0f64, 2..12)) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let p = renormalize(&raw).unwrap();
            let c = build_covariance(&p).unwrap();
            prop_assert!(c.sigma().iter().all(|&v| v <= 0.25 + 1e-15));
            prop_assert!(c.jitter() <= 1e-8);
            prop_assert!(c.eigenvalues().iter().all(|&a| a >= 0.0));
            let recon = c.chol() * c.chol().transpose();
            prop_assert!((recon - c.sigma()).abs().max() < 1e-7);
        }
    }
}
