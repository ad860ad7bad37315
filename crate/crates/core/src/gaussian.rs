//! Gaussian moment estimation and the Fréchet distance between Gaussians.
//!
//! Covariances use the population divisor `N`. With that choice the pooled
//! covariance of a labelled sample splits exactly into a between-class and
//! an averaged within-class part, which the conditional metrics rely on.

use nalgebra::{DMatrix, DVector};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Relative tolerance for symmetry of input matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Eigenvalues down to `-PSD_NEGATIVE_FLOOR * max(1, spectral radius)` are
/// treated as round-off and clamped to zero.
pub const PSD_NEGATIVE_FLOOR: f64 = 1e-8;

/// Mean and covariance of one (sub)population.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    count: usize,
}

impl GaussianStats {
    /// Builds validated stats. The covariance is symmetrized after the
    /// tolerance check and must pass the PSD floor.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, count: usize) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::invalid("Gaussian dimension must be positive"));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "covariance shape",
                left: d,
                right: cov.nrows().max(cov.ncols()),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("Gaussian stats contain non-finite values"));
        }
        let cov = symmetrized(&cov)?;
        psd_eigen(&cov)?;
        Ok(Self { mean, cov, count })
    }

    /// Diagonal covariance shorthand, mostly for analytic constructions.
    pub fn diagonal(mean: &[f64], variances: &[f64]) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(Error::DimensionMismatch {
                context: "diagonal Gaussian",
                left: mean.len(),
                right: variances.len(),
            });
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
            0,
        )
    }

    // Skips validation for values produced internally from data.
    pub(crate) fn from_trusted(mean: DVector<f64>, cov: DMatrix<f64>, count: usize) -> Self {
        Self { mean, cov, count }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Column mean and population covariance of the rows of `features`.
pub fn estimate_gaussian(features: &FeatureMatrix) -> Result<GaussianStats> {
    let rows: Vec<usize> = (0..features.nrows()).collect();
    estimate_gaussian_rows(features, &rows)
}

/// Like [`estimate_gaussian`], restricted to the listed rows.
pub fn estimate_gaussian_rows(features: &FeatureMatrix, rows: &[usize]) -> Result<GaussianStats> {
    if rows.is_empty() {
        return Err(Error::invalid("cannot estimate a Gaussian from zero samples"));
    }
    let x = features.as_matrix();
    let d = x.ncols();
    let n = rows.len() as f64;

    let mut mean = DVector::zeros(d);
    for &r in rows {
        mean += x.row(r).transpose();
    }
    mean /= n;

    let mut centered = DMatrix::zeros(rows.len(), d);
    for (i, &r) in rows.iter().enumerate() {
        for j in 0..d {
            centered[(i, j)] = x[(r, j)] - mean[j];
        }
    }
    let mut cov = centered.tr_mul(&centered);
    cov /= n;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianStats::from_trusted(mean, cov, rows.len()))
}

fn symmetrized(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let asymmetry = (m - m.transpose()).amax();
    if asymmetry > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Eigendecomposition of a symmetric PSD matrix with round-off negatives
/// clamped to zero. Returns `(eigenvalues, eigenvectors)`.
fn psd_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = m.clone().symmetric_eigen();
    let radius = eig.eigenvalues.amax();
    let floor = -PSD_NEGATIVE_FLOOR * radius.max(1.0);
    let min = eig.eigenvalues.min();
    if min < floor {
        return Err(Error::NotPsd {
            eigenvalue: min,
            floor,
        });
    }
    let values = eig.eigenvalues.map(|l| l.max(0.0));
    Ok((values, eig.eigenvectors))
}

/// Principal square root of a symmetric PSD matrix, `V diag(sqrt(l)) V^T`.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrized(m)?;
    let (values, vectors) = psd_eigen(&sym)?;
    let root = &vectors * DMatrix::from_diagonal(&values.map(f64::sqrt)) * vectors.transpose();
    Ok((&root + root.transpose()) * 0.5)
}

/// Eigenvalues at or below `n * eps * ROUNDOFF_FACTOR * max_eigenvalue` are
/// treated as exact zeros when forming the roots in the cross term. Without
/// this, round-off on the null space of a rank-deficient covariance (e.g. a
/// between-class covariance with fewer classes than dimensions) adds about
/// `sqrt(eps)` per zero eigenvalue.
const ROUNDOFF_FACTOR: f64 = 10.0;

fn truncated_root(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = psd_eigen(&symmetrized(m)?)?;
    let cutoff = values.len() as f64 * f64::EPSILON * ROUNDOFF_FACTOR * values.max().max(0.0);
    let root = values.map(|l| if l > cutoff { l.sqrt() } else { 0.0 });
    Ok(&vectors * DMatrix::from_diagonal(&root) * vectors.transpose())
}

/// `Tr((A B)^(1/2))` for PSD `A`, `B`.
///
/// The eigenvalues of `A^(1/2) B A^(1/2)` are the squared singular values of
/// `A^(1/2) B^(1/2)`, so the trace is the nuclear norm of the latter. The
/// singular values come out with absolute error near `eps`, whereas taking
/// square roots of the eigenvalues of the product would turn `eps` into
/// `sqrt(eps)` on small eigenvalues.
pub fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            context: "trace_sqrt_product",
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    let m = truncated_root(a)? * truncated_root(b)?;
    Ok(m.singular_values().sum())
}

/// Fréchet distance before clamping at zero; may be slightly negative from
/// round-off.
pub fn frechet_distance_unclamped(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "frechet_distance",
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mean_term = (a.mean() - b.mean()).norm_squared();
    let cross = trace_sqrt_product(a.cov(), b.cov())?;
    Ok(mean_term + a.cov().trace() + b.cov().trace() - 2.0 * cross)
}

/// `||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))`, clamped to `>= 0`.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    Ok(frechet_distance_unclamped(a, b)?.max(0.0))
}
