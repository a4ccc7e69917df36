use crate::measures::Measure1D;

/// `∫₀¹ |F_P(t) − F_Q(t)| dt`, exactly.
///
/// Both distribution functions are affine between consecutive breakpoints of
/// the merged support, so each segment integrates in closed form; a segment on
/// which the difference changes sign is split at its root.
pub fn w1_1d(p: &Measure1D, q: &Measure1D) -> f64 {
    let mut bps = p.breakpoints();
    bps.extend(q.breakpoints());
    bps.push(0.0);
    bps.push(1.0);
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    bps.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let d0 = p.cdf(a) - q.cdf(a);
            let d1 = p.cdf_left(b) - q.cdf_left(b);
            abs_affine_integral(d0, d1, b - a)
        })
        .sum()
}

/// `∫₀ʰ |d0 + (d1 − d0) s/h| ds`.
pub(crate) fn abs_affine_integral(d0: f64, d1: f64, h: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * h * (d0.abs() + d1.abs())
    } else {
        0.5 * h * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
    }
}

/// W1 between the empirical measure of already sorted draws and `q`.
///
/// Same integral as [`w1_1d`], specialised to avoid building the empirical
/// measure; used in the replicate-heavy loops.
pub fn w1_sorted_sample(xs: &[f64], q: &Measure1D) -> f64 {
    let n = xs.len() as f64;
    let mut bps = q.breakpoints();
    bps.extend_from_slice(xs);
    bps.push(0.0);
    bps.push(1.0);
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    let mut k = 0; // number of draws <= current left endpoint
    let mut total = 0.0;
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        while k < xs.len() && xs[k] <= a {
            k += 1;
        }
        // On (a, b) the empirical CDF is constant k/n.
        let fe = k as f64 / n;
        total += abs_affine_integral(fe - q.cdf(a), fe - q.cdf_left(b), b - a);
    }
    total
}
