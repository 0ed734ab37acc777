use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::encoder::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Principal subspace of the training covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// `n × p`, orthonormal columns.
    #[serde(with = "crate::serde_mat")]
    pub loadings: DMatrix<f64>,
    /// Top-`p` eigenvalues, descending.
    #[serde(with = "crate::serde_mat::vector")]
    pub eigenvalues: DVector<f64>,
    /// Full spectrum, descending, clamped at zero.
    #[serde(with = "crate::serde_mat::vector")]
    pub all_eigenvalues: DVector<f64>,
}

/// Eigendecomposition of the sample covariance (divisor N−1). Each loading's
/// largest-magnitude entry is made positive.
pub fn fit_pca(x: &DataMatrix, p: usize) -> Result<PcaModel> {
    let n = x.n_vars();
    if p == 0 || p > n {
        return Err(Error::Dimension(format!("PCA dimension must be in 1..={n}, got {p}")));
    }
    if x.n_samples() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 1,
            got: x.n_samples(),
        });
    }
    let (cov, _) = linalg::covariance(x.values());
    let (mut values, vectors) = linalg::sym_eigen_desc(&cov);
    values.apply(|v| *v = v.max(0.0));
    let mut loadings = vectors.columns(0, p).into_owned();
    linalg::fix_column_signs(&mut loadings);
    Ok(PcaModel {
        loadings,
        eigenvalues: values.rows(0, p).into_owned(),
        all_eigenvalues: values,
    })
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.loadings.ncols()
    }

    /// Scores `X·U`.
    pub fn extract(&self, x: &DataMatrix) -> Result<FeatureMatrix> {
        if x.n_vars() != self.loadings.nrows() {
            return Err(Error::Shape(format!(
                "PCA model expects {} variables, data has {}",
                self.loadings.nrows(),
                x.n_vars()
            )));
        }
        Ok(x.values() * &self.loadings)
    }

    /// `G·Uᵀ`
    pub fn reconstruct(&self, g: &FeatureMatrix) -> Result<DMatrix<f64>> {
        if g.ncols() != self.dim() {
            return Err(Error::Shape(format!("PCA model has {} components, scores have {}", self.dim(), g.ncols())));
        }
        Ok(g * self.loadings.transpose())
    }
}

/// Smallest `p` whose leading eigenvalues hold at least `energy` of the total.
pub fn select_dimension_cpv(eigenvalues: &[f64], energy: f64) -> Result<usize> {
    if !(energy > 0.0 && energy <= 1.0) {
        return Err(Error::Config(format!("CPV energy must be in (0, 1], got {energy}")));
    }
    if eigenvalues.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Degenerate("eigenvalues must be finite and nonnegative".into()));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("eigenvalue spectrum is all zero".into()));
    }
    let mut acc = 0.0;
    for (i, &v) in eigenvalues.iter().enumerate() {
        acc += v;
        if acc / total >= energy {
            return Ok(i + 1);
        }
    }
    Ok(eigenvalues.len())
}
