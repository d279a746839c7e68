use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

use super::NumericsError;

/// Covariance dimension from which the top-k eigenpairs are extracted with
/// Lanczos iteration instead of a dense eigendecomposition.
pub const LANCZOS_MIN_DIM: usize = 160;

/// Relative residual at which a Ritz pair counts as converged.
const RITZ_TOL: f64 = 1e-11;

/// Eigenvalues closer than this (relative to the largest) are treated as tied.
const TIE_TOL: f64 = 1e-10;

/// Principal axes of a data matrix.
///
/// `components` is `k x d` with orthonormal rows ordered by decreasing
/// explained variance. Each row has its largest-magnitude entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: DVector<f64>,
    pub components: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaBasis {
    /// Fits the top `k` principal components of the rows of `x`.
    pub fn fit(x: &DMatrix<f64>, k: usize) -> Result<Self, NumericsError> {
        let (n, d) = x.shape();
        if n < 2 || k == 0 || k > (n - 1).min(d) {
            return Err(NumericsError::InvalidK { k, n, d });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        let mean = x.row_mean().transpose();
        let centered = center(x, &mean);
        let scale = 1.0 / (n - 1) as f64;

        let (values, vectors) = if d < LANCZOS_MIN_DIM || 3 * k >= d {
            let mut cov = centered.transpose() * &centered;
            cov *= scale;
            // Symmetrize against rounding in the product.
            dense_top_k((&cov + cov.transpose()) * 0.5, k)
        } else {
            // The covariance is applied implicitly as X^T (X v) / (n - 1).
            let trace = centered.norm_squared() * scale;
            let transposed = centered.transpose();
            lanczos_top_k(|v| (&transposed * (&centered * v)) * scale, d, trace, k)
        };
        let (components, explained_variance) = canonicalize(values, vectors, d);
        Ok(Self {
            mean,
            components,
            explained_variance,
        })
    }

    /// Input dimensionality.
    pub fn dim(&self) -> usize {
        self.components.ncols()
    }

    /// Number of retained components.
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    /// Projects rows of `x` onto the basis: `components * (x_i - mean)`.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
        if x.ncols() != self.dim() {
            return Err(NumericsError::DimensionMismatch {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let centered = center(x, &self.mean);
        Ok(centered * self.components.transpose())
    }

    /// Maps projected scores back to the input space.
    pub fn back_project(&self, scores: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
        if scores.ncols() != self.k() {
            return Err(NumericsError::DimensionMismatch {
                expected: self.k(),
                found: scores.ncols(),
            });
        }
        let mut out = scores * &self.components;
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        Ok(out)
    }
}

fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mean_row: RowDVector<f64> = mean.transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean_row;
    }
    centered
}

fn dense_top_k(cov: DMatrix<f64>, k: usize) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order
        .into_iter()
        .take(k)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .unzip()
}

/// Top-k eigenpairs of a symmetric matrix by Lanczos iteration with full
/// reorthogonalization. Iterates until every wanted Ritz pair has a residual
/// below `RITZ_TOL * |lambda_max|`; at `m = d` the Krylov basis is complete
/// and the result is exact up to rounding.
///
/// `apply` multiplies by the matrix; `bound` is any upper bound on its
/// spectral norm (used only for the breakdown test).
fn lanczos_top_k(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    d: usize,
    bound: f64,
    k: usize,
) -> (Vec<f64>, Vec<DVector<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_205e_ed00_0001);
    let mut q = DMatrix::<f64>::zeros(d, d);
    let mut alpha: Vec<f64> = Vec::with_capacity(d);
    let mut beta: Vec<f64> = Vec::with_capacity(d);

    q.set_column(0, &random_unit(&mut rng, d));
    let mut next_check = (2 * k + 20).min(d);
    let mut m = 0;
    loop {
        let qj = q.column(m).into_owned();
        let mut w = apply(&qj);
        let aj = qj.dot(&w);
        alpha.push(aj);
        w.axpy(-aj, &qj, 1.0);
        if m > 0 {
            let prev = q.column(m - 1).into_owned();
            w.axpy(-beta[m - 1], &prev, 1.0);
        }
        m += 1;
        if m == d {
            break;
        }
        let basis = q.columns(0, m);
        for _ in 0..2 {
            let h = basis.tr_mul(&w);
            w -= basis * h;
        }
        let mut bj = w.norm();
        if bj <= 1e-13 * bound.max(f64::MIN_POSITIVE) {
            // Invariant subspace reached: continue from a fresh direction.
            bj = 0.0;
            w = random_unit(&mut rng, d);
            for _ in 0..2 {
                let h = basis.tr_mul(&w);
                w -= basis * h;
            }
            let norm = w.norm();
            w /= norm;
        } else {
            w /= bj;
        }
        beta.push(bj);
        q.set_column(m, &w);

        if m >= next_check {
            if let Some(pairs) = ritz_pairs(&q, &alpha, &beta, m, k, true) {
                return pairs;
            }
            next_check = (m + (m / 8).max(8)).min(d);
        }
    }
    ritz_pairs(&q, &alpha, &beta, m, k, false).expect("complete Krylov basis")
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.gen::<f64>() - 0.5);
    let norm = v.norm();
    v / norm
}

fn ritz_pairs(
    q: &DMatrix<f64>,
    alpha: &[f64],
    beta: &[f64],
    m: usize,
    k: usize,
    check: bool,
) -> Option<(Vec<f64>, Vec<DVector<f64>>)> {
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = &order[..k];
    if check {
        let scale = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let tail = beta.get(m - 1).copied().unwrap_or(0.0);
        let converged = top
            .iter()
            .all(|&i| (tail * eig.eigenvectors[(m - 1, i)]).abs() <= RITZ_TOL * scale);
        if !converged {
            return None;
        }
    }
    let basis = q.columns(0, m);
    Some(
        top.iter()
            .map(|&i| (eig.eigenvalues[i], basis * eig.eigenvectors.column(i)))
            .unzip(),
    )
}

fn lexicographic(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Fixes signs and the order of tied eigenvalues.
fn canonicalize(
    values: Vec<f64>,
    vectors: Vec<DVector<f64>>,
    d: usize,
) -> (DMatrix<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, DVector<f64>)> = values
        .into_iter()
        .zip(vectors)
        .map(|(value, mut v)| {
            let norm = v.norm();
            v /= norm;
            let pivot = v.iamax();
            if v[pivot] < 0.0 {
                v = -v;
            }
            (value.max(0.0), v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let scale = pairs.first().map_or(0.0, |p| p.0).max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < pairs.len() {
        let head = pairs[start].0;
        let mut end = start + 1;
        while end < pairs.len() && head - pairs[end].0 <= TIE_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            let mut vectors: Vec<DVector<f64>> =
                pairs[start..end].iter().map(|p| p.1.clone()).collect();
            vectors.sort_by(lexicographic);
            for (slot, v) in pairs[start..end].iter_mut().zip(vectors) {
                slot.1 = v;
            }
        }
        start = end;
    }

    let k = pairs.len();
    let mut components = DMatrix::<f64>::zeros(k, d);
    for (i, (_, v)) in pairs.iter().enumerate() {
        components.set_row(i, &v.transpose());
    }
    (components, pairs.into_iter().map(|p| p.0).collect())
}
