//! Quantiles of distance statistics, the extremal mixture family on grids and
//! the level-dependent maximizing weight `λ(α)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::bridge::{build_covariance, mean_and_se, DistanceSample, FrozenNormals};
use crate::error::{Error, Result};
use crate::measures::validate_simplex;
use crate::rng::Streams;

/// `Φ⁻¹(0.995)`: converts a 99% interval half-width into a standard error.
const Z99: f64 = 2.575_829_303_548_900_4;

/// An order-statistic quantile with a 99% distribution-free interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub alpha: f64,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub m: usize,
    /// Set when the level is outside `(0, 1]` and the value is a convention.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl QuantileEstimate {
    /// Standard error implied by the interval width.
    pub fn se(&self) -> f64 {
        (self.ci_hi - self.ci_lo) / (2.0 * Z99)
    }
}

/// `sqrt(se_a² + se_b²)`.
pub fn joint_se(a: &QuantileEstimate, b: &QuantileEstimate) -> f64 {
    a.se().hypot(b.se())
}

/// `inf{x : F̂(x) ≥ α}`, i.e. the `⌈αM⌉`-th order statistic of `sorted`.
pub fn quantile_sorted(sorted: &[f64], alpha: f64) -> Result<QuantileEstimate> {
    let m = sorted.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("level {alpha} outside [0, 1]")));
    }
    if alpha == 0.0 {
        return Ok(QuantileEstimate {
            alpha,
            value: sorted[0],
            ci_lo: sorted[0],
            ci_hi: sorted[0],
            m,
            warning: Some("level 0 has no order statistic; returning the sample minimum".into()),
        });
    }
    let rank = ((alpha * m as f64).ceil() as usize).clamp(1, m);
    let (lo, hi) = if alpha >= 1.0 {
        (m, m)
    } else {
        // Ranks r with P(X_(r) ≤ ξ_α) ≥ 0.995 and P(X_(r) ≥ ξ_α) ≥ 0.995.
        let bin = Binomial::new(alpha, m as u64).map_err(|e| Error::Internal(e.to_string()))?;
        let lo = (binomial_quantile(&bin, m as u64, 0.005) as usize).clamp(1, rank);
        let hi = (binomial_quantile(&bin, m as u64, 0.995) as usize + 1).clamp(rank, m);
        (lo, hi)
    };
    Ok(QuantileEstimate {
        alpha,
        value: sorted[rank - 1],
        ci_lo: sorted[lo - 1],
        ci_hi: sorted[hi - 1],
        m,
        warning: None,
    })
}

/// Smallest `k` with `P(X ≤ k) ≥ prob`.
fn binomial_quantile(bin: &Binomial, m: u64, prob: f64) -> u64 {
    let (mut lo, mut hi) = (0_u64, m);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if bin.cdf(mid) >= prob {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

pub fn empirical_quantile(sample: &DistanceSample, alpha: f64) -> Result<QuantileEstimate> {
    quantile_sorted(&sample.sorted(), alpha)
}

/// Grid weights of the mixture `λ(δ₀+δ₁)/2 + (1−λ)·uniform` on `n` points:
/// interior `(1−λ)/n`, endpoints take the rest in equal halves.
pub fn mixture_pvector(lambda: f64, n: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 grid points, got {n}")));
    }
    let inner = (1.0 - lambda) / n as f64;
    let end = 0.5 * (1.0 - inner * (n - 2) as f64);
    let mut p = vec![inner; n];
    p[0] = end;
    p[n - 1] = end;
    Ok(p)
}

/// Argmax weight per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurve {
    pub alphas: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub quantile_at_max: Vec<QuantileEstimate>,
    pub lambda_grid: Vec<f64>,
}

/// `λ ↦ F⁻¹_{𝔅ₙ}(α)` over `lambda_grid` for every level, one frozen draw set
/// shared by all weights. Ties go to the smaller weight.
pub fn lambda_curve(n: usize, alphas: &[f64], lambda_grid: &[f64], m: usize, streams: Streams) -> Result<LambdaCurve> {
    let per_lambda = lambda_sweep(n, alphas, lambda_grid, m, streams)?;
    let mut order: Vec<usize> = (0..lambda_grid.len()).collect();
    order.sort_by(|&a, &b| lambda_grid[a].total_cmp(&lambda_grid[b]));

    let mut lambda_hat = Vec::with_capacity(alphas.len());
    let mut quantile_at_max = Vec::with_capacity(alphas.len());
    for k in 0..alphas.len() {
        let mut best = order[0];
        for &l in &order[1..] {
            if per_lambda[l][k].value > per_lambda[best][k].value {
                best = l;
            }
        }
        lambda_hat.push(lambda_grid[best]);
        quantile_at_max.push(per_lambda[best][k].clone());
    }
    Ok(LambdaCurve { alphas: alphas.to_vec(), lambda_hat, quantile_at_max, lambda_grid: lambda_grid.to_vec() })
}

/// Quantiles at every level for every weight: `out[λ index][α index]`.
pub fn lambda_sweep(
    n: usize,
    alphas: &[f64],
    lambda_grid: &[f64],
    m: usize,
    streams: Streams,
) -> Result<Vec<Vec<QuantileEstimate>>> {
    if alphas.is_empty() || lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("level and weight grids must be nonempty".into()));
    }
    let covs = lambda_grid.iter().map(|&l| build_covariance(&mixture_pvector(l, n)?)).collect::<Result<Vec<_>>>()?;
    let frozen = FrozenNormals::new(n - 1, m, streams)?;
    covs.par_iter()
        .map(|cov| {
            let sorted = frozen.statistic(cov)?.sorted();
            alphas.iter().map(|&a| quantile_sorted(&sorted, a)).collect()
        })
        .collect()
}

/// `p₁ = p_n = (p₁+p_n)/2` and equal interior mass.
pub fn symmetrize(p: &[f64]) -> Result<Vec<f64>> {
    validate_simplex(p)?;
    let n = p.len();
    if n < 2 {
        return Err(Error::InvalidGrid("need at least 2 grid points".into()));
    }
    let end = 0.5 * (p[0] + p[n - 1]);
    let mut out = vec![end; n];
    if n > 2 {
        let inner = (1.0 - 2.0 * end) / (n - 2) as f64;
        out[1..n - 1].iter_mut().for_each(|v| *v = inner);
    }
    Ok(out)
}

/// Quantile difference between the symmetrized measure and `p`, with the
/// joint standard error, under common random numbers.
pub fn symmetry_gain(p: &[f64], alpha: f64, m: usize, streams: Streams) -> Result<(f64, f64)> {
    let sym = symmetrize(p)?;
    let frozen = FrozenNormals::new(p.len() - 1, m, streams)?;
    let a = empirical_quantile(&frozen.statistic(&build_covariance(&sym)?)?, alpha)?;
    let b = empirical_quantile(&frozen.statistic(&build_covariance(p)?)?, alpha)?;
    Ok((a.value - b.value, joint_se(&a, &b)))
}

/// `E(𝔅ₙ − K)⁺ = ∫_K^∞ P(𝔅ₙ ≥ t) dt` by Monte Carlo, with standard error.
pub fn dominance_integral(p: &[f64], k: f64, m: usize, streams: Streams) -> Result<(f64, f64)> {
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("K must be nonnegative, got {k}")));
    }
    let cov = build_covariance(p)?;
    let frozen = FrozenNormals::new(cov.dim(), m, streams)?;
    Ok(shortfall(&frozen.statistic(&cov)?, k))
}

/// Mean and standard error of `(x − K)⁺` over a sample.
pub fn shortfall(sample: &DistanceSample, k: f64) -> (f64, f64) {
    let excess: Vec<f64> = sample.values.iter().map(|v| (v - k).max(0.0)).collect();
    mean_and_se(&excess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::Statistic;
    use proptest::prelude::*;

    fn sample(values: &[f64]) -> DistanceSample {
        DistanceSample { values: values.to_vec(), seed: 0, statistic: Statistic::BridgeL1 }
    }

    #[test]
    fn order_statistic_examples() {
        let s = sample(&[3.0, 1.0, 4.0, 2.0]);
        assert_eq!(empirical_quantile(&s, 0.5).unwrap().value, 2.0);
        assert_eq!(empirical_quantile(&s, 1.0).unwrap().value, 4.0);
        assert_eq!(empirical_quantile(&s, 0.25).unwrap().value, 1.0);
        let zero = empirical_quantile(&s, 0.0).unwrap();
        assert_eq!(zero.value, 1.0);
        assert!(zero.warning.is_some());
    }

    // Brute force over the inf definition on the empirical CDF.
    fn inf_definition(values: &[f64], alpha: f64) -> f64 {
        let m = values.len() as f64;
        let mut cands = values.to_vec();
        cands.sort_by(f64::total_cmp);
        *cands.iter().find(|&&x| values.iter().filter(|&&v| v <= x).count() as f64 / m >= alpha).unwrap()
    }

    #[test]
    fn interval_brackets_value() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let q = empirical_quantile(&sample(&values), 0.9).unwrap();
        assert!(q.ci_lo <= q.value && q.value <= q.ci_hi);
        assert!(q.ci_lo < q.ci_hi);
        assert!(q.se() > 0.0);
    }

    #[test]
    fn mixture_vectors() {
        assert_eq!(mixture_pvector(0.0, 4).unwrap(), vec![0.25; 4]);
        assert_eq!(mixture_pvector(1.0, 5).unwrap(), vec![0.5, 0.0, 0.0, 0.0, 0.5]);
        assert_eq!(mixture_pvector(0.5, 4).unwrap(), vec![0.375, 0.125, 0.125, 0.375]);
        assert_eq!(mixture_pvector(0.3, 2).unwrap(), vec![0.5, 0.5]);
        for n in 2..40 {
            for l in [0.0, 0.1, 0.37, 0.9, 1.0] {
                validate_simplex(&mixture_pvector(l, n).unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn leading_eigenvalue_grows_with_lambda() {
        let mut prev = 0.0;
        for k in 0..=20 {
            let cov = build_covariance(&mixture_pvector(k as f64 / 20.0, 8).unwrap()).unwrap();
            let a1 = cov.eigenvalues()[0];
            assert!(a1 >= prev - 1e-12);
            prev = a1;
        }
        assert!((prev - 7.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn n2_curve_ties_to_zero() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let c = lambda_curve(2, &[0.1, 0.5, 0.9], &grid, 2000, Streams::new(1)).unwrap();
        assert!(c.lambda_hat.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn curve_extremes() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let c = lambda_curve(10, &[0.05, 0.99], &grid, 20_000, Streams::new(2)).unwrap();
        assert!(c.lambda_hat[0] <= 0.2, "{:?}", c.lambda_hat);
        assert!(c.lambda_hat[1] >= 0.8, "{:?}", c.lambda_hat);
    }

    #[test]
    fn sweep_is_continuous_in_lambda() {
        // Adjacent jumps on a coarse grid compared with a 10× finer grid.
        let alphas = [0.5, 0.9];
        let coarse: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let fine: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let m = 5000;
        let c = lambda_sweep(6, &alphas, &coarse, m, Streams::new(3)).unwrap();
        let f = lambda_sweep(6, &alphas, &fine, m, Streams::new(3)).unwrap();
        for a in 0..alphas.len() {
            let jump = |v: &Vec<Vec<QuantileEstimate>>| {
                v.windows(2).map(|w| (w[1][a].value - w[0][a].value).abs()).fold(0.0, f64::max)
            };
            assert!(jump(&c) <= 5.0 * 10.0 * jump(&f) + 1e-12);
        }
    }

    #[test]
    fn symmetric_p_has_no_gain() {
        let (d, _) = symmetry_gain(&[0.3, 0.2, 0.2, 0.3], 0.9, 5000, Streams::new(4)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn asymmetric_p_gains() {
        let (d, se) = symmetry_gain(&[0.9, 0.05, 0.05], 0.9, 100_000, Streams::new(5)).unwrap();
        assert!(d > 3.0 * se, "{d} vs se {se}");
        let (d2, _) = symmetry_gain(&[0.05, 0.05, 0.9], 0.9, 100_000, Streams::new(5)).unwrap();
        // mirror image: q ↦ 1 − q reverses coordinates, |B| statistic has the same law
        assert!((d - d2).abs() <= 3.0 * se * 2f64.sqrt());
    }

    #[test]
    fn extremal_shortfall_at_zero() {
        let oracle = 0.5 * (2.0 / std::f64::consts::PI).sqrt();
        let (mean, se) = dominance_integral(&[0.5, 0.0, 0.0, 0.5], 0.0, 50_000, Streams::new(6)).unwrap();
        assert!((mean - oracle).abs() < 3.0 * se);
        assert_eq!(dominance_integral(&[0.5, 0.0, 0.0, 0.5], 100.0, 1000, Streams::new(6)).unwrap().0, 0.0);
    }

    proptest! {
        #[test]
        fn matches_inf_definition(values in proptest::collection::vec(0.0..10.0f64, 1..60), alpha in 0.001..=1.0f64) {
            let q = empirical_quantile(&sample(&values), alpha).unwrap();
            prop_assert_eq!(q.value, inf_definition(&values, alpha));
        }

        #[test]
        fn monotone_in_level(values in proptest::collection::vec(0.0..10.0f64, 1..60), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let s = sample(&values);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(empirical_quantile(&s, lo).unwrap().value <= empirical_quantile(&s, hi).unwrap().value);
        }
    }
}
