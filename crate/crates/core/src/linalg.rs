//! Small dense linear-algebra helpers: jittered and pivoted Cholesky, and a
//! residual-checked symmetric eigen-decomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Diagonal jitter ladder tried before falling back to pivoting.
pub const JITTER_LADDER: [f64; 8] = [0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// A square-root factor `L` with `L Lᵀ ≈ A (+ jitter·I)`.
#[derive(Debug, Clone)]
pub struct Factor {
    /// `n × r` factor. Lower triangular unless `pivoted`.
    pub l: DMatrix<f64>,
    /// Diagonal jitter that was added, zero when none was needed.
    pub jitter: f64,
    /// Whether the rank-revealing pivoted path produced `l`.
    pub pivoted: bool,
}

impl Factor {
    pub fn rank(&self) -> usize {
        self.l.ncols()
    }
}

/// Plain Cholesky. On breakdown returns the 1-based leading minor and its pivot.
pub fn cholesky(a: &DMatrix<f64>, jitter: f64) -> std::result::Result<DMatrix<f64>, (usize, f64)> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err((j + 1, d));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Cholesky with jitter escalation along [`JITTER_LADDER`], then a pivoted
/// rank-revealing factorization of the positive part.
pub fn robust_cholesky(a: &DMatrix<f64>) -> Result<Factor> {
    let mut last = (0, 0.0);
    for &jitter in JITTER_LADDER.iter() {
        match cholesky(a, jitter) {
            Ok(l) => return Ok(Factor { l, jitter, pivoted: false }),
            Err(fail) => last = fail,
        }
    }
    let scale = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    pivoted_cholesky(a, 1e-12 * scale).ok_or(Error::Cholesky {
        minor: last.0,
        pivot: last.1,
        jitter: *JITTER_LADDER.last().unwrap(),
    })
}

/// Rank-revealing Cholesky with diagonal pivoting. Stops once the largest
/// remaining pivot drops below `tol`; returns `None` if a pivot is clearly
/// negative (matrix not positive semidefinite).
pub fn pivoted_cholesky(a: &DMatrix<f64>, tol: f64) -> Option<Factor> {
    let n = a.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    if diag.iter().any(|&d| d < -tol) {
        return None;
    }
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; n];
    for _ in 0..n {
        let (piv, &dmax) = diag.iter().enumerate().filter(|(i, _)| !used[*i]).max_by(|x, y| x.1.total_cmp(y.1))?;
        if dmax <= tol {
            break;
        }
        used[piv] = true;
        let s = dmax.sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            if used[i] && i != piv {
                continue;
            }
            let mut v = a[(i, piv)];
            for c in &cols {
                v -= c[i] * c[piv];
            }
            col[i] = v / s;
        }
        col[piv] = s;
        for i in 0..n {
            if !used[i] {
                diag[i] -= col[i] * col[i];
                if diag[i] < -tol {
                    return None;
                }
            }
        }
        cols.push(col);
    }
    let r = cols.len();
    let l = DMatrix::from_fn(n, r, |i, j| cols[j][i]);
    Some(Factor { l, jitter: 0.0, pivoted: true })
}

/// Eigenvalues of a symmetric matrix in descending order, with the residual
/// `max_k ‖A v_k − α_k v_k‖ ≤ 1e-10 · ‖A‖` checked.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let norm = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * n as f64;
    let eig = SymmetricEigen::new(a.clone());
    let tolerance = 1e-10 * norm.max(f64::MIN_POSITIVE);
    let mut residual = 0.0_f64;
    for k in 0..n {
        let v = eig.eigenvectors.column(k);
        let r = a * v - v * eig.eigenvalues[k];
        residual = residual.max(r.norm());
    }
    if residual > tolerance {
        return Err(Error::EigenResidual { residual, tolerance });
    }
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}
