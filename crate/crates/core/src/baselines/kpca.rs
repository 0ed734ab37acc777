use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::encoder::FeatureMatrix;
use crate::error::{Error, Result};
use crate::{linalg, par};

/// Eigenvalues of the centered Gram matrix at or below this are discarded.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelWidth {
    /// `c = 10 · n · mean(column std)`
    Auto,
    Fixed(f64),
}

/// Gaussian-kernel PCA in dual form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpcaModel {
    #[serde(with = "crate::serde_mat")]
    pub train_data: DMatrix<f64>,
    pub c: f64,
    /// `N × p`, scaled so every feature-space component has unit norm.
    #[serde(with = "crate::serde_mat")]
    pub alphas: DMatrix<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub eigenvalues: DVector<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub gram_row_means: DVector<f64>,
    pub gram_grand_mean: f64,
}

pub fn gaussian_kernel(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>, c: f64) -> f64 {
    let d2: f64 = a.zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / c).exp()
}

pub fn auto_width(x: &DataMatrix) -> f64 {
    let n = x.n_vars() as f64;
    let rows = x.n_samples() as f64;
    let mean_std = x
        .values()
        .column_iter()
        .map(|col| {
            let m = col.mean();
            (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (rows - 1.0)).sqrt()
        })
        .sum::<f64>()
        / n;
    10.0 * n * mean_std
}

fn kernel_slices(a: &[f64], b: &[f64], c: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / c).exp()
}

/// `K_ij = exp(−‖xᵢ − xⱼ‖² / c)`
pub fn gram_matrix(x: &DMatrix<f64>, c: f64) -> DMatrix<f64> {
    let (n, vars) = x.shape();
    if vars == 0 {
        return DMatrix::from_element(n, n, 1.0);
    }
    // Samples as contiguous slices; K is symmetric so each row doubles as a
    // column of the column-major result.
    let xt = x.transpose();
    let samples: Vec<&[f64]> = xt.as_slice().chunks_exact(vars).collect();
    let columns = par::map_indices(n, |j| samples.iter().map(|xi| kernel_slices(xi, samples[j], c)).collect::<Vec<_>>());
    DMatrix::from_vec(n, n, columns.concat())
}

/// `K − 1K − K1 + 1K1` with `1` the averaging matrix; returns the row means
/// and grand mean of `K` alongside.
pub fn center_gram(k: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, f64) {
    let n = k.nrows();
    let row_means = DVector::from_iterator(n, k.row_iter().map(|r| r.mean()));
    let grand = row_means.mean();
    let centered = DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - row_means[j] + grand);
    (centered, row_means, grand)
}

/// Fits `p` kernel components. Fewer are kept, with a warning, when the
/// centered Gram matrix has fewer eigenvalues above [`EIGENVALUE_FLOOR`].
pub fn fit_kpca(x: &DataMatrix, p: usize, width: KernelWidth) -> Result<KpcaModel> {
    let n_samples = x.n_samples();
    if p == 0 || p > n_samples {
        return Err(Error::Dimension(format!("KPCA dimension must be in 1..={n_samples}, got {p}")));
    }
    if n_samples < 2 {
        return Err(Error::InsufficientSamples {
            needed: 1,
            got: n_samples,
        });
    }
    let c = match width {
        KernelWidth::Auto => auto_width(x),
        KernelWidth::Fixed(c) => c,
    };
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("kernel width must be positive, got {c}")));
    }
    let k = gram_matrix(x.values(), c);
    let (centered, gram_row_means, gram_grand_mean) = center_gram(&k);
    let (values, vectors) = linalg::sym_eigen_desc(&centered);
    let kept = values.iter().take(p).take_while(|&&v| v > EIGENVALUE_FLOOR).count();
    if kept == 0 {
        return Err(Error::Degenerate("centered Gram matrix has no positive eigenvalues".into()));
    }
    if kept < p {
        log::warn!("KPCA: only {kept} of {p} requested components have positive eigenvalues; reducing");
    }
    let mut alphas = vectors.columns(0, kept).into_owned();
    linalg::fix_column_signs(&mut alphas);
    for (j, mut col) in alphas.column_iter_mut().enumerate() {
        col /= values[j].sqrt();
    }
    Ok(KpcaModel {
        train_data: x.values().clone(),
        c,
        alphas,
        eigenvalues: values.rows(0, kept).into_owned(),
        gram_row_means,
        gram_grand_mean,
    })
}

impl KpcaModel {
    pub fn dim(&self) -> usize {
        self.alphas.ncols()
    }

    fn check(&self, x: &DataMatrix) -> Result<()> {
        if x.n_vars() != self.train_data.ncols() {
            return Err(Error::Shape(format!(
                "KPCA model expects {} variables, data has {}",
                self.train_data.ncols(),
                x.n_vars()
            )));
        }
        Ok(())
    }

    /// Scores and feature-space residual of one sample.
    /// `train_t` is the transposed training data.
    fn project(&self, train_t: &DMatrix<f64>, x: &[f64]) -> (DVector<f64>, f64) {
        let n = train_t.ncols();
        let k = DVector::from_iterator(
            n,
            train_t.as_slice().chunks_exact(x.len()).map(|r| kernel_slices(x, r, self.c)),
        );
        let k_mean = k.mean();
        let centered = DVector::from_fn(n, |j, _| k[j] - k_mean - self.gram_row_means[j] + self.gram_grand_mean);
        let scores = self.alphas.transpose() * centered;
        let self_kernel = 1.0 - 2.0 * k_mean + self.gram_grand_mean;
        let spe = (self_kernel - scores.norm_squared()).max(0.0);
        (scores, spe)
    }

    /// Scores of each row, plus the feature-space SPE of each row.
    pub fn extract_with_spe(&self, x: &DataMatrix) -> Result<(FeatureMatrix, Vec<f64>)> {
        self.check(x)?;
        let train_t = self.train_data.transpose();
        let xt = x.values().transpose();
        let rows = par::map_indices(x.n_samples(), |i| self.project(&train_t, xt.column(i).as_slice()));
        let mut g = DMatrix::zeros(rows.len(), self.dim());
        let mut spe = Vec::with_capacity(rows.len());
        for (i, (s, e)) in rows.into_iter().enumerate() {
            g.row_mut(i).copy_from(&s.transpose());
            spe.push(e);
        }
        Ok((g, spe))
    }
}

pub fn kpca_extract(model: &KpcaModel, x: &DataMatrix) -> Result<FeatureMatrix> {
    Ok(model.extract_with_spe(x)?.0)
}

/// `k̃(x,x) − Σ tⱼ²`, clamped at zero.
pub fn kpca_spe(model: &KpcaModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.train_data.ncols() {
        return Err(Error::Shape(format!(
            "KPCA model expects {} variables, sample has {}",
            model.train_data.ncols(),
            x.len()
        )));
    }
    Ok(model.project(&model.train_data.transpose(), x).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(rows: usize, cols: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(gaussian_kernel([1.0, 2.0].into_iter(), [1.0, 2.0].into_iter(), 3.0), 1.0);
        let k = gaussian_kernel([0.0, 0.0].into_iter(), [1.0, 1.0].into_iter(), 2.0);
        assert!((k - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn auto_width_on_unit_std_data() {
        let raw = random_data(40, 52, 1);
        let s = crate::dataset::fit_scaler(&raw).unwrap();
        let z = crate::dataset::apply_scaler(&s, &raw).unwrap();
        assert!((auto_width(&z) - 520.0).abs() < 1e-9);
    }

    #[test]
    fn centered_gram_rows_sum_to_zero_and_gram_is_psd() {
        let x = random_data(25, 3, 2);
        let k = gram_matrix(x.values(), 2.0);
        assert!((&k - k.transpose()).abs().max() == 0.0);
        let (vals, _) = linalg::sym_eigen_desc(&k);
        assert!(vals.min() > -1e-10);
        let (kc, _, _) = center_gram(&k);
        for r in kc.row_iter() {
            assert!(r.sum().abs() < 1e-10);
        }
    }

    #[test]
    fn dual_vectors_have_unit_feature_norm() {
        let x = random_data(30, 3, 3);
        let m = fit_kpca(&x, 4, KernelWidth::Fixed(3.0)).unwrap();
        let (kc, _, _) = center_gram(&gram_matrix(x.values(), 3.0));
        let gram = m.alphas.transpose() * kc * &m.alphas;
        assert!((gram - DMatrix::identity(4, 4)).abs().max() < 1e-8);
    }

    #[test]
    fn training_projection_matches_dual_scores() {
        let x = random_data(30, 3, 4);
        let m = fit_kpca(&x, 3, KernelWidth::Auto).unwrap();
        let (kc, _, _) = center_gram(&gram_matrix(x.values(), m.c));
        let direct = kc * &m.alphas;
        let g = kpca_extract(&m, &x).unwrap();
        assert!((g - direct).abs().max() < 1e-10);
    }

    #[test]
    fn full_component_set_leaves_no_residual() {
        let x = random_data(12, 3, 5);
        let m = fit_kpca(&x, 12, KernelWidth::Fixed(1.0)).unwrap();
        assert!(m.dim() < 12);
        let (_, spe) = m.extract_with_spe(&x).unwrap();
        assert!(spe.iter().all(|&e| (0.0..1e-8).contains(&e)), "{spe:?}");
    }

    #[test]
    fn spe_nonnegative_and_shape_checked() {
        let x = random_data(20, 3, 6);
        let m = fit_kpca(&x, 2, KernelWidth::Auto).unwrap();
        let far = random_data(10, 3, 7).into_inner() * 5.0;
        for r in far.row_iter() {
            let v: Vec<f64> = r.iter().copied().collect();
            assert!(kpca_spe(&m, &v).unwrap() >= 0.0);
        }
        assert!(kpca_spe(&m, &[1.0, 2.0]).is_err());
        assert!(fit_kpca(&x, 21, KernelWidth::Auto).is_err());
    }
}
