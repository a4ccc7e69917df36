//! Probability measures on `[0, 1]` and `[0, 1]²`.
//!
//! Two lattices appear in this crate and are kept apart:
//!
//! * [`Grid1D`] places `n` points at `x_i = (i − 1)/(n − 1)`, so both endpoints
//!   are grid points. Finite measures live here.
//! * [`quantize_sample`] maps a draw to `⌊n·x⌋/n`, the `1/n` lattice starting at
//!   zero. The endpoint `x = 1` is mapped to `1` rather than left as a lattice
//!   overflow.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Absolute tolerance on `Σ p = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Check that `p` is a probability vector.
pub fn validate_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::NotOnSimplex("empty vector".into()));
    }
    for (i, &v) in p.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::NotOnSimplex(format!("entry {i} = {v} outside [0, 1]")));
        }
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotOnSimplex(format!("sum = {s}")));
    }
    Ok(())
}

/// Rescale a nonnegative vector to sum to one. Never applied implicitly.
pub fn renormalize(p: &[f64]) -> Result<Vec<f64>> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::NotOnSimplex("negative or non-finite weight".into()));
    }
    let s: f64 = p.iter().sum();
    if s <= 0.0 {
        return Err(Error::NotOnSimplex("zero total mass".into()));
    }
    Ok(p.iter().map(|v| v / s).collect())
}

/// Cumulative sums `q_i = p_1 + … + p_i` for `i = 1..n−1`.
pub fn cumulative_q(p: &[f64]) -> Result<Vec<f64>> {
    validate_simplex(p)?;
    if p.len() < 2 {
        return Err(Error::InvalidGrid("need at least two atoms".into()));
    }
    let mut acc = 0.0;
    let mut q: Vec<f64> = p[..p.len() - 1]
        .iter()
        .map(|v| {
            acc += v;
            acc.min(1.0)
        })
        .collect();
    // Pin the last entry to 1 − p_n so zero tails are exact.
    let last = q.len() - 1;
    q[last] = (1.0 - p[p.len() - 1]).max(0.0);
    if last > 0 && q[last] < q[last - 1] {
        q[last] = q[last - 1];
    }
    Ok(q)
}

/// `n` equidistant points `0, 1/(n−1), …, 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("grid needs n >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            1.0
        } else {
            i as f64 / (self.n - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point equal to `x` (within 1e-9 of a spacing).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        let k = (x * (self.n - 1) as f64).round();
        let i = k as usize;
        ((x - self.point(i)).abs() <= 1e-9 * self.spacing()).then_some(i)
    }
}

/// A probability vector on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure1D {
    grid: Grid1D,
    p: Vec<f64>,
}

impl FiniteMeasure1D {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        let grid = Grid1D::new(p.len())?;
        validate_simplex(&p)?;
        Ok(Self { grid, p })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n.max(1)])
    }

    pub fn dirac(n: usize, i: usize) -> Result<Self> {
        let mut p = vec![0.0; n];
        *p.get_mut(i).ok_or_else(|| Error::InvalidArgument(format!("atom {i} not on grid of {n}")))? = 1.0;
        Self::new(p)
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }
}

/// `λ (δ₀ + δ₁)/2 + (1 − λ) U[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureMeasure {
    lambda: f64,
}

impl MixtureMeasure {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} outside [0, 1]")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Atoms at arbitrary sorted distinct positions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl DiscreteMeasure {
    /// Sorts atoms, merges duplicates and drops zero weights.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidArgument("atoms and weights differ in length".into()));
        }
        if let Some(x) = atoms.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidArgument(format!("atom {x} outside [0, 1]")));
        }
        validate_simplex(&weights)?;
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).filter(|(_, w)| *w > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut ws: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            if xs.last() == Some(&x) {
                *ws.last_mut().unwrap() += w;
            } else {
                xs.push(x);
                ws.push(w);
            }
        }
        Ok(Self::from_sorted(xs, ws))
    }

    fn from_sorted(atoms: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cum = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self { atoms, weights, cum }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn cdf(&self, t: f64) -> f64 {
        let k = self.atoms.partition_point(|&x| x <= t);
        if k == 0 {
            0.0
        } else if k == self.atoms.len() {
            1.0
        } else {
            self.cum[k - 1]
        }
    }

    fn cdf_left(&self, t: f64) -> f64 {
        let k = self.atoms.partition_point(|&x| x < t);
        if k == 0 {
            0.0
        } else if k == self.atoms.len() {
            1.0
        } else {
            self.cum[k - 1]
        }
    }
}

/// Any supported measure on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure1D {
    Finite(FiniteMeasure1D),
    Mixture(MixtureMeasure),
    Discrete(DiscreteMeasure),
}

impl From<FiniteMeasure1D> for Measure1D {
    fn from(m: FiniteMeasure1D) -> Self {
        Measure1D::Finite(m)
    }
}

impl From<MixtureMeasure> for Measure1D {
    fn from(m: MixtureMeasure) -> Self {
        Measure1D::Mixture(m)
    }
}

impl From<DiscreteMeasure> for Measure1D {
    fn from(m: DiscreteMeasure) -> Self {
        Measure1D::Discrete(m)
    }
}

impl Measure1D {
    /// Right-continuous distribution function, `0` left of the unit interval
    /// and `1` from `t = 1` on.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Measure1D::Finite(m) => {
                if t < 0.0 {
                    return 0.0;
                }
                if t >= 1.0 {
                    return 1.0;
                }
                let g = m.grid;
                // Largest grid index with x_i <= t.
                let mut k = (t * (g.n - 1) as f64).floor() as usize;
                if g.point(k + 1) <= t {
                    k += 1;
                } else if g.point(k) > t {
                    k -= 1;
                }
                m.p[..=k].iter().sum::<f64>().min(1.0)
            }
            Measure1D::Mixture(m) => {
                if t < 0.0 {
                    0.0
                } else if t >= 1.0 {
                    1.0
                } else {
                    0.5 * m.lambda + (1.0 - m.lambda) * t
                }
            }
            Measure1D::Discrete(m) => m.cdf(t),
        }
    }

    /// Left limit `F(t−)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        match self {
            Measure1D::Finite(m) => {
                if t <= 0.0 {
                    return 0.0;
                }
                if t > 1.0 {
                    return 1.0;
                }
                let g = m.grid;
                // Number of grid points strictly below t.
                let mut k = (t * (g.n - 1) as f64).ceil() as usize;
                k = k.min(g.n);
                while k > 0 && g.point(k - 1) >= t {
                    k -= 1;
                }
                while k < g.n && g.point(k) < t {
                    k += 1;
                }
                m.p[..k].iter().sum::<f64>().min(1.0)
            }
            Measure1D::Mixture(m) => {
                if t <= 0.0 {
                    0.0
                } else if t > 1.0 {
                    1.0
                } else {
                    0.5 * m.lambda + (1.0 - m.lambda) * t
                }
            }
            Measure1D::Discrete(m) => m.cdf_left(t),
        }
    }

    /// Points where the distribution function may fail to be affine.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Measure1D::Finite(m) => m.grid.points(),
            Measure1D::Mixture(_) => vec![0.0, 1.0],
            Measure1D::Discrete(m) => m.atoms.clone(),
        }
    }

    /// Mean of the measure.
    pub fn mean(&self) -> f64 {
        match self {
            Measure1D::Finite(m) => m.p.iter().enumerate().map(|(i, w)| w * m.grid.point(i)).sum(),
            Measure1D::Mixture(_) => 0.5,
            Measure1D::Discrete(m) => m.atoms.iter().zip(&m.weights).map(|(x, w)| x * w).sum(),
        }
    }
}

/// A probability matrix on the Cartesian product of two grids.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure2D {
    x: Grid1D,
    y: Grid1D,
    /// Row-major, `p[i * ny + j]` is the mass at `(x_i, y_j)`.
    p: Vec<f64>,
}

impl FiniteMeasure2D {
    pub fn new(nx: usize, ny: usize, p: Vec<f64>) -> Result<Self> {
        let x = Grid1D::new(nx)?;
        let y = Grid1D::new(ny)?;
        if p.len() != nx * ny {
            return Err(Error::InvalidArgument(format!("expected {} masses, got {}", nx * ny, p.len())));
        }
        validate_simplex(&p)?;
        Ok(Self { x, y, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidArgument("ragged probability matrix".into()));
        }
        Self::new(nx, ny, rows.concat())
    }

    pub fn uniform(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, vec![1.0 / (nx * ny) as f64; nx * ny])
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn x_grid(&self) -> Grid1D {
        self.x
    }

    pub fn y_grid(&self) -> Grid1D {
        self.y
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.ny() + j]
    }

    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x.point(i), self.y.point(j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.ny()).map(<[f64]>::to_vec).collect()
    }
}

/// Seed provenance of a [`SampleBatch`].
pub type SeedRecord = StreamKey;

/// `N` points in the unit cube, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    values: Vec<f64>,
    seed: Option<SeedRecord>,
}

impl SampleBatch {
    pub fn new(dim: usize, values: Vec<f64>, seed: Option<SeedRecord>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::InvalidArgument("coordinate count not a multiple of the dimension".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("coordinate {v} outside [0, 1]")));
        }
        Ok(Self { dim, values, seed })
    }

    pub fn from_1d(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<SeedRecord> {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }
}

/// Measures that can produce i.i.d. draws.
pub trait Sample {
    fn dim(&self) -> usize;

    /// Append one draw to `out`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>);
}

/// Inverse-CDF sampler over a weight vector.
#[derive(Debug, Clone)]
pub struct AtomSampler {
    cum: Vec<f64>,
    last_positive: usize,
}

impl AtomSampler {
    pub fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cum = p
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let last_positive = p.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        Self { cum, last_positive }
    }

    pub fn index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cum.partition_point(|&c| c <= u).min(self.last_positive)
    }
}

impl Sample for Measure1D {
    fn dim(&self) -> usize {
        1
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            Measure1D::Finite(m) => {
                let i = AtomSampler::new(&m.p).index(rng);
                out.push(m.grid.point(i));
            }
            Measure1D::Discrete(m) => {
                let i = AtomSampler::new(&m.weights).index(rng);
                out.push(m.atoms[i]);
            }
            Measure1D::Mixture(m) => {
                let coin: f64 = rng.gen();
                if coin < m.lambda {
                    out.push(if rng.gen::<bool>() { 1.0 } else { 0.0 });
                } else {
                    out.push(rng.gen::<f64>());
                }
            }
        }
    }
}

impl Sample for FiniteMeasure2D {
    fn dim(&self) -> usize {
        2
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        let k = AtomSampler::new(&self.p).index(rng);
        let [x, y] = self.position(k / self.ny(), k % self.ny());
        out.push(x);
        out.push(y);
    }
}

/// `n` i.i.d. draws from `measure` on the stream `key`.
pub fn sample<M: Sample>(measure: &M, n: usize, key: StreamKey) -> SampleBatch {
    let mut rng = key.rng();
    let mut values = Vec::with_capacity(n * measure.dim());
    match_sample(measure, n, &mut rng, &mut values);
    SampleBatch { dim: measure.dim(), values, seed: Some(key) }
}

fn match_sample<M: Sample, R: Rng>(measure: &M, n: usize, rng: &mut R, values: &mut Vec<f64>) {
    for _ in 0..n {
        measure.draw(rng, values);
    }
}

/// Faster path for finite measures: grid counts of `n` draws.
pub fn sample_counts(p: &[f64], n: usize, key: StreamKey) -> Vec<u64> {
    let sampler = AtomSampler::new(p);
    let mut rng = key.rng();
    let mut counts = vec![0_u64; p.len()];
    for _ in 0..n {
        counts[sampler.index(&mut rng)] += 1;
    }
    counts
}

/// Empirical measure of a 1-D batch, on `grid` when given.
pub fn empirical_measure(batch: &SampleBatch, grid: Option<Grid1D>) -> Result<Measure1D> {
    if batch.dim() != 1 {
        return Err(Error::InvalidArgument("empirical_measure expects a 1-D batch".into()));
    }
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let n = batch.len() as f64;
    match grid {
        Some(g) => {
            let mut counts = vec![0_u64; g.len()];
            for (k, &x) in batch.values().iter().enumerate() {
                let i = g.index_of(x).ok_or(Error::OffGrid { index: k, value: x })?;
                counts[i] += 1;
            }
            let p = counts.iter().map(|&c| c as f64 / n).collect();
            Ok(Measure1D::Finite(FiniteMeasure1D { grid: g, p }))
        }
        None => {
            let mut xs = batch.values().to_vec();
            xs.sort_by(f64::total_cmp);
            Ok(Measure1D::Discrete(empirical_from_sorted(&xs)))
        }
    }
}

/// Empirical measure of already sorted draws.
pub fn empirical_from_sorted(xs: &[f64]) -> DiscreteMeasure {
    let n = xs.len() as f64;
    let mut atoms = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        atoms.push(xs[i]);
        weights.push((j - i) as f64 / n);
        i = j;
    }
    DiscreteMeasure::from_sorted(atoms, weights)
}

/// Empirical measure of a 2-D batch on the product grid.
pub fn empirical_measure_2d(batch: &SampleBatch, x: Grid1D, y: Grid1D) -> Result<FiniteMeasure2D> {
    if batch.dim() != 2 {
        return Err(Error::InvalidArgument("empirical_measure_2d expects a 2-D batch".into()));
    }
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let ny = y.len();
    let mut counts = vec![0_u64; x.len() * ny];
    for (k, pt) in batch.points().enumerate() {
        let i = x.index_of(pt[0]).ok_or(Error::OffGrid { index: k, value: pt[0] })?;
        let j = y.index_of(pt[1]).ok_or(Error::OffGrid { index: k, value: pt[1] })?;
        counts[i * ny + j] += 1;
    }
    let n = batch.len() as f64;
    Ok(FiniteMeasure2D { x, y, p: counts.iter().map(|&c| c as f64 / n).collect() })
}

/// `⌊n·x⌋/n`, with `x = 1` kept at `1`.
pub fn quantize(x: f64, n: usize) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    let nf = n as f64;
    (nf * x).floor() / nf
}

/// Apply [`quantize`] to every coordinate.
pub fn quantize_sample(batch: &SampleBatch, n: usize) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("quantization resolution must be >= 1".into()));
    }
    Ok(SampleBatch { dim: batch.dim, values: batch.values.iter().map(|&x| quantize(x, n)).collect(), seed: batch.seed })
}

/// Push-forward of a measure through [`quantize`].
pub fn quantize_measure(measure: &Measure1D, n: usize) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("quantization resolution must be >= 1".into()));
    }
    let (atoms, weights): (Vec<f64>, Vec<f64>) = match measure {
        Measure1D::Finite(m) => (0..m.grid.len()).map(|i| (quantize(m.grid.point(i), n), m.p[i])).unzip(),
        Measure1D::Discrete(m) => m.atoms.iter().zip(&m.weights).map(|(&x, &w)| (quantize(x, n), w)).unzip(),
        Measure1D::Mixture(m) => {
            let lam = m.lambda;
            let cell = (1.0 - lam) / n as f64;
            let mut atoms: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
            let mut weights = vec![cell; n];
            weights[0] += 0.5 * lam;
            atoms.push(1.0);
            weights.push(0.5 * lam);
            (atoms, weights)
        }
    };
    let weights = renormalize(&weights)?;
    DiscreteMeasure::new(atoms, weights)
}

/// Wire format shared by the CLI: `{"kind": "finite1d" | "mixture" | "finite2d" | "discrete", …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureSpec {
    Finite1d { n: usize, p: Vec<f64> },
    Mixture { lambda: f64 },
    Finite2d { nx: usize, ny: usize, p: Vec<Vec<f64>> },
    Discrete { x: Vec<f64>, w: Vec<f64> },
}

/// A validated measure of either dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMeasure {
    One(Measure1D),
    Two(FiniteMeasure2D),
}

impl TryFrom<MeasureSpec> for AnyMeasure {
    type Error = Error;

    fn try_from(spec: MeasureSpec) -> Result<Self> {
        Ok(match spec {
            MeasureSpec::Finite1d { n, p } => {
                if p.len() != n {
                    return Err(Error::Parse(format!("finite1d: n = {n} but {} masses", p.len())));
                }
                AnyMeasure::One(FiniteMeasure1D::new(p)?.into())
            }
            MeasureSpec::Mixture { lambda } => AnyMeasure::One(MixtureMeasure::new(lambda)?.into()),
            MeasureSpec::Finite2d { nx, ny, p } => {
                let m = FiniteMeasure2D::from_rows(&p)?;
                if m.nx() != nx || m.ny() != ny {
                    return Err(Error::Parse(format!("finite2d: declared {nx}x{ny}, got {}x{}", m.nx(), m.ny())));
                }
                AnyMeasure::Two(m)
            }
            MeasureSpec::Discrete { x, w } => AnyMeasure::One(DiscreteMeasure::new(x, w)?.into()),
        })
    }
}

impl From<&AnyMeasure> for MeasureSpec {
    fn from(m: &AnyMeasure) -> Self {
        match m {
            AnyMeasure::One(Measure1D::Finite(f)) => MeasureSpec::Finite1d { n: f.grid.len(), p: f.p.clone() },
            AnyMeasure::One(Measure1D::Mixture(m)) => MeasureSpec::Mixture { lambda: m.lambda },
            AnyMeasure::One(Measure1D::Discrete(d)) => {
                MeasureSpec::Discrete { x: d.atoms.clone(), w: d.weights.clone() }
            }
            AnyMeasure::Two(m) => MeasureSpec::Finite2d { nx: m.nx(), ny: m.ny(), p: m.rows() },
        }
    }
}

impl AnyMeasure {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: MeasureSpec = serde_json::from_str(s)?;
        spec.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeasureSpec::from(self)).expect("measure serializes")
    }
}

/// Write a batch as CSV: a `#` comment line with the seed, then one
/// coordinate tuple per row.
pub fn batch_to_csv(batch: &SampleBatch) -> String {
    let mut out = String::new();
    match batch.seed {
        Some(k) => {
            out.push_str(&format!("# seed={} stream={} n={} dim={}\n", k.seed, k.stream, batch.len(), batch.dim))
        }
        None => out.push_str(&format!("# seed=none n={} dim={}\n", batch.len(), batch.dim)),
    }
    for pt in batch.points() {
        let row: Vec<String> = pt.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse the CSV written by [`batch_to_csv`]. Comment lines and a
/// non-numeric header row are skipped.
pub fn batch_from_csv(text: &str) -> Result<SampleBatch> {
    let mut seed = None;
    let mut dim = None;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            seed = seed.or_else(|| parse_seed_comment(comment));
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if values.is_empty() && dim.is_none() => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
        };
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse(format!("line {}: expected {d} fields", lineno + 1)));
            }
            _ => {}
        }
        values.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::Parse("no data rows".into()))?;
    SampleBatch::new(dim, values, seed)
}

fn parse_seed_comment(comment: &str) -> Option<StreamKey> {
    let mut seed = None;
    let mut stream = 0;
    for tok in comment.split_whitespace() {
        if let Some(v) = tok.strip_prefix("seed=") {
            seed = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("stream=") {
            stream = v.parse().ok()?;
        }
    }
    seed.map(|s| StreamKey::new(s, stream))
}
